use std::fmt;

use serde::Serialize;

use crate::geometry::{FaceId, Vec3};
use crate::scene::{DiffractionEdge, FoliageModel};

/// One element of a path's identity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum SignatureElement {
    /// Reflection on a planar facet (scene facet id).
    Reflection(u32),
    /// Diffraction on a scene edge (edge index).
    Diffraction(u32),
}

/// Ordered interaction identities; empty for the direct path.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct PathSignature(pub Vec<SignatureElement>);

impl PathSignature {
    pub fn los() -> Self {
        PathSignature(Vec::new())
    }

    pub fn is_los(&self) -> bool {
        self.0.is_empty()
    }

    pub fn reflections(&self) -> usize {
        self.0
            .iter()
            .filter(|e| matches!(e, SignatureElement::Reflection(_)))
            .count()
    }

    pub fn diffractions(&self) -> usize {
        self.0.len() - self.reflections()
    }

    /// Signature of the same path traversed from receiver to transmitter.
    pub fn reversed(&self) -> Self {
        PathSignature(self.0.iter().rev().copied().collect())
    }
}

impl fmt::Display for PathSignature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("LOS");
        }
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("-")?;
            }
            match e {
                SignatureElement::Reflection(id) => write!(f, "R{id}")?,
                SignatureElement::Diffraction(id) => write!(f, "D{id}")?,
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum InteractionKind {
    Reflection {
        face: FaceId,
        facet: u32,
        /// Outward unit normal of the facet.
        normal: Vec3<f64>,
        material_id: usize,
        eps_r: f64,
        sigma: f64,
    },
    Diffraction {
        edge_id: u32,
        edge: DiffractionEdge,
        /// Edge parameter of the diffraction point in `[0, 1]`.
        t: f64,
        /// True when the incident field reaches the observation directly
        /// (`|φ − φ′| < π` in the wedge frame).
        lit: bool,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct PathInteraction {
    pub kind: InteractionKind,
    pub point: Vec3<f64>,
}

impl PathInteraction {
    pub fn signature_element(&self) -> SignatureElement {
        match self.kind {
            InteractionKind::Reflection { facet, .. } => SignatureElement::Reflection(facet),
            InteractionKind::Diffraction { edge_id, .. } => SignatureElement::Diffraction(edge_id),
        }
    }
}

/// Chord of a path segment through one foliage volume.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FoliageCrossing {
    pub volume: usize,
    pub length: f64,
    pub alpha_v: f64,
    pub alpha_h: f64,
    pub model: FoliageModel,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PathSegment {
    pub start: Vec3<f64>,
    pub end: Vec3<f64>,
    pub length: f64,
    pub foliage: Vec<FoliageCrossing>,
}

impl PathSegment {
    /// Unit propagation direction.
    pub fn direction(&self) -> Vec3<f64> {
        (self.end - self.start) / self.length
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PropagationPath {
    pub tx: Vec3<f64>,
    pub rx: Vec3<f64>,
    pub interactions: Vec<PathInteraction>,
    /// `interactions.len() + 1` consecutive segments from `tx` to `rx`.
    pub segments: Vec<PathSegment>,
    /// Total unfolded length, meters.
    pub length: f64,
    pub signature: PathSignature,
}

impl PropagationPath {
    pub fn is_los(&self) -> bool {
        self.interactions.is_empty()
    }

    /// Polyline vertices `tx, p1, …, rx`.
    pub fn vertices(&self) -> Vec<Vec3<f64>> {
        let mut v = Vec::with_capacity(self.interactions.len() + 2);
        v.push(self.tx);
        v.extend(self.interactions.iter().map(|i| i.point));
        v.push(self.rx);
        v
    }

    /// The same path traversed from `rx` to `tx`.
    pub fn reversed(&self) -> PropagationPath {
        let segments = self
            .segments
            .iter()
            .rev()
            .map(|s| PathSegment {
                start: s.end,
                end: s.start,
                length: s.length,
                foliage: s.foliage.clone(),
            })
            .collect();
        let interactions = self.interactions.iter().rev().cloned().collect();
        PropagationPath {
            tx: self.rx,
            rx: self.tx,
            interactions,
            segments,
            length: self.length,
            signature: self.signature.reversed(),
        }
    }

    pub fn foliage_depth(&self) -> f64 {
        self.segments
            .iter()
            .flat_map(|s| s.foliage.iter().map(|c| c.length))
            .sum()
    }
}
