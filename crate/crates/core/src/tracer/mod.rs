//! Geometric path search between a transmitter and receivers.
//!
//! Direct paths, specular reflections (image method up to order two, ray
//! launching with exact path correction above), and edge diffraction with
//! reflections composed on either side. Results for one receiver are merged
//! by [`PathSignature`] and returned in signature order.

mod icosphere;
mod path;
mod sbr;

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::em::WedgeFrame;
use crate::geometry::{foliage_penetration, FaceId, Vec3};
use crate::scene::Scene;

pub use icosphere::Icosphere;
pub use path::{
    FoliageCrossing, InteractionKind, PathInteraction, PathSegment, PathSignature,
    PropagationPath, SignatureElement,
};
pub use sbr::Capture;
use sbr::PointIndex;

pub const MAX_REFLECTIONS: u32 = 30;
pub const MAX_DIFFRACTIONS: u32 = 2;
pub const MAX_SUBDIVISION: u32 = 9;
/// Highest reflection order solved by the image method when tracing.
pub const IMAGE_MAX_ORDER: u32 = 2;

/// Minimum distance in front of a facet for a point to count as facing it, m.
const FRONT_TOL: f64 = 1e-9;
/// Barycentric tolerance for specular points on facet triangles.
const LOCATE_TOL: f64 = 1e-9;
/// Angular slack for wedge-exterior tests, rad.
const ANGLE_TOL: f64 = 1e-9;
/// Convergence tolerance of the double-diffraction solve, m.
const DOUBLE_TOL: f64 = 1e-9;
const DOUBLE_MAX_ITER: usize = 100;
/// Minimum distance of a diffraction point from the edge ends, m.
const EDGE_MARGIN: f64 = 1e-6;

/// How repeated SBR captures of one receiver are refined.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaptureDedup {
    /// Collapse captures sharing a facet sequence before correction.
    #[default]
    BySignature,
    /// Correct every capture, then merge results by signature.
    PerRay,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TraceConfig {
    pub max_reflections: u32,
    pub max_diffractions: u32,
    /// Always zero: buildings are opaque.
    pub max_transmissions: u32,
    /// Icosphere level of the launch directions.
    pub sbr_subdivision: u32,
    /// Reflections allowed around a single diffraction.
    pub diffraction_reflections: u32,
    pub capture_dedup: CaptureDedup,
}

impl Default for TraceConfig {
    fn default() -> Self {
        TraceConfig {
            max_reflections: 4,
            max_diffractions: 1,
            max_transmissions: 0,
            sbr_subdivision: 5,
            diffraction_reflections: 1,
            capture_dedup: CaptureDedup::BySignature,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TraceError {
    #[error("max_reflections {0} exceeds {MAX_REFLECTIONS}")]
    Reflections(u32),
    #[error("max_diffractions {0} exceeds {MAX_DIFFRACTIONS}")]
    Diffractions(u32),
    #[error("max_transmissions must be 0, got {0}")]
    Transmissions(u32),
    #[error("sbr_subdivision {0} outside 2..={MAX_SUBDIVISION}")]
    Subdivision(u32),
    #[error("diffraction_reflections {0} exceeds max_reflections {1}")]
    DiffractionReflections(u32, u32),
}

impl TraceConfig {
    pub fn validate(&self) -> Result<(), TraceError> {
        if self.max_reflections > MAX_REFLECTIONS {
            return Err(TraceError::Reflections(self.max_reflections));
        }
        if self.max_diffractions > MAX_DIFFRACTIONS {
            return Err(TraceError::Diffractions(self.max_diffractions));
        }
        if self.max_transmissions != 0 {
            return Err(TraceError::Transmissions(self.max_transmissions));
        }
        if !(2..=MAX_SUBDIVISION).contains(&self.sbr_subdivision) {
            return Err(TraceError::Subdivision(self.sbr_subdivision));
        }
        if self.diffraction_reflections > self.max_reflections {
            return Err(TraceError::DiffractionReflections(
                self.diffraction_reflections,
                self.max_reflections,
            ));
        }
        Ok(())
    }
}

/// Path finder bound to one scene, with per-scene visibility tables.
pub struct Tracer<'s> {
    scene: &'s Scene,
    cfg: TraceConfig,
    /// Facets that may follow each facet in a reflection sequence.
    successors: Vec<Vec<u32>>,
    /// Edges with some part strictly in front of each facet (sorted).
    facet_edges: Vec<Vec<u32>>,
    frames: Vec<WedgeFrame>,
    /// Edges that may follow each edge in a double diffraction.
    edge_pairs: Vec<Vec<u32>>,
    sphere: Option<Icosphere>,
}

impl<'s> Tracer<'s> {
    pub fn new(scene: &'s Scene, cfg: TraceConfig) -> Result<Tracer<'s>, TraceError> {
        cfg.validate()?;
        let facets = scene.facets();
        let in_front = |f: usize, g: usize| {
            let b = facets[g].bounds;
            let plane = facets[f].plane;
            (0..8).any(|c| {
                let p = Vec3::new(
                    if c & 1 == 0 { b.min.x } else { b.max.x },
                    if c & 2 == 0 { b.min.y } else { b.max.y },
                    if c & 4 == 0 { b.min.z } else { b.max.z },
                );
                plane.signed_distance(p) > FRONT_TOL
            })
        };
        let successors = (0..facets.len())
            .map(|f| {
                (0..facets.len())
                    .filter(|&g| g != f && in_front(f, g) && in_front(g, f))
                    .map(|g| g as u32)
                    .collect()
            })
            .collect();
        let edges = scene.edges();
        let facet_edges = facets
            .iter()
            .map(|f| {
                (0..edges.len() as u32)
                    .filter(|&e| {
                        let e = &edges[e as usize];
                        f.plane.signed_distance(e.a).max(f.plane.signed_distance(e.b)) > FRONT_TOL
                    })
                    .collect()
            })
            .collect();
        let frames: Vec<WedgeFrame> = edges.iter().map(WedgeFrame::new).collect();
        let edge_pairs = if cfg.max_diffractions >= 2 {
            let sees = |i: usize, j: usize| {
                let ej = &edges[j];
                [ej.a, ej.b, ej.point_at(0.5)]
                    .iter()
                    .any(|&p| exterior(&frames[i], edges[i].a, p))
            };
            (0..edges.len())
                .map(|i| {
                    (0..edges.len())
                        .filter(|&j| j != i && sees(i, j) && sees(j, i))
                        .map(|j| j as u32)
                        .collect()
                })
                .collect()
        } else {
            vec![Vec::new(); edges.len()]
        };
        let sphere = (cfg.max_reflections > IMAGE_MAX_ORDER).then(|| Icosphere::new(cfg.sbr_subdivision));
        Ok(Tracer {
            scene,
            cfg,
            successors,
            facet_edges,
            frames,
            edge_pairs,
            sphere,
        })
    }

    pub fn scene(&self) -> &'s Scene {
        self.scene
    }

    pub fn config(&self) -> &TraceConfig {
        &self.cfg
    }

    /// All paths from `tx` to one receiver.
    pub fn trace(&self, tx: Vec3<f64>, rx: Vec3<f64>) -> Vec<PropagationPath> {
        self.trace_many(tx, &[rx]).pop().unwrap_or_default()
    }

    /// All paths from `tx` to each receiver, in receiver order. Receivers are
    /// processed in parallel; the result does not depend on thread count.
    pub fn trace_many(&self, tx: Vec3<f64>, rxs: &[Vec3<f64>]) -> Vec<Vec<PropagationPath>> {
        let candidates = if self.cfg.max_reflections > IMAGE_MAX_ORDER {
            self.sbr_candidates(tx, rxs, IMAGE_MAX_ORDER as usize + 1, self.cfg.max_reflections as usize)
        } else {
            vec![Vec::new(); rxs.len()]
        };
        rxs.par_iter()
            .zip(candidates.par_iter())
            .map(|(&rx, cands)| {
                if tx == rx {
                    return Vec::new();
                }
                let mut found = BTreeMap::new();
                let mut add = |p: PropagationPath| {
                    found.entry(p.signature.clone()).or_insert(p);
                };
                if let Some(p) = self.los(tx, rx) {
                    add(p);
                }
                let order = self.cfg.max_reflections.min(IMAGE_MAX_ORDER) as usize;
                for p in self.image(tx, rx, order) {
                    add(p);
                }
                for seq in cands {
                    if let Some(p) = self.reflection_path(seq, tx, rx) {
                        add(p);
                    }
                }
                for p in self.diffraction(tx, rx) {
                    add(p);
                }
                found.into_values().collect()
            })
            .collect()
    }

    fn segment(&self, a: Vec3<f64>, b: Vec3<f64>) -> PathSegment {
        let foliage = self.scene.foliage();
        let crossings = foliage_penetration(a, b, foliage.iter().map(|f| &f.shape))
            .into_iter()
            .map(|(i, length)| {
                let v = &foliage[i];
                FoliageCrossing {
                    volume: i,
                    length,
                    alpha_v: v.alpha_v,
                    alpha_h: v.alpha_h,
                    model: v.model,
                }
            })
            .collect();
        PathSegment {
            start: a,
            end: b,
            length: (b - a).norm(),
            foliage: crossings,
        }
    }

    /// Path through `interactions` if no segment is blocked.
    fn assemble(
        &self,
        tx: Vec3<f64>,
        rx: Vec3<f64>,
        interactions: Vec<PathInteraction>,
    ) -> Option<PropagationPath> {
        let mut pts = Vec::with_capacity(interactions.len() + 2);
        pts.push(tx);
        pts.extend(interactions.iter().map(|i| i.point));
        pts.push(rx);
        let index = self.scene.index();
        if pts.windows(2).any(|w| index.segment_blocked(w[0], w[1])) {
            return None;
        }
        let segments: Vec<PathSegment> = pts.windows(2).map(|w| self.segment(w[0], w[1])).collect();
        let length = segments.iter().map(|s| s.length).sum();
        let signature = PathSignature(interactions.iter().map(|i| i.signature_element()).collect());
        Some(PropagationPath {
            tx,
            rx,
            interactions,
            segments,
            length,
            signature,
        })
    }

    fn los(&self, tx: Vec3<f64>, rx: Vec3<f64>) -> Option<PropagationPath> {
        if tx == rx {
            return None;
        }
        self.assemble(tx, rx, Vec::new())
    }

    fn in_front(&self, facet: u32, p: Vec3<f64>) -> bool {
        self.scene.facets()[facet as usize].plane.signed_distance(p) > FRONT_TOL
    }

    fn reflection(&self, facet: u32, triangle: u32, point: Vec3<f64>) -> PathInteraction {
        let f = &self.scene.facets()[facet as usize];
        let m = self.scene.material(f.material_id);
        PathInteraction {
            kind: InteractionKind::Reflection {
                face: FaceId {
                    object_id: f.object_id,
                    triangle,
                },
                facet,
                normal: f.plane.normal,
                material_id: f.material_id,
                eps_r: m.eps_r,
                sigma: m.sigma,
            },
            point,
        }
    }

    /// Image of `p` after mirroring through `seq` in order.
    fn image_of(&self, seq: &[u32], p: Vec3<f64>) -> Vec3<f64> {
        let facets = self.scene.facets();
        seq.iter().fold(p, |q, &f| facets[f as usize].plane.mirror(q))
    }

    /// Exact specular points for reflecting on `seq` in order between `src`
    /// and `dst`. Blockage is not checked. The cascade always runs from the
    /// lexicographically smaller end so both directions give identical points.
    fn specular_points(
        &self,
        seq: &[u32],
        src: Vec3<f64>,
        dst: Vec3<f64>,
    ) -> Option<Vec<PathInteraction>> {
        if seq.is_empty() {
            return Some(Vec::new());
        }
        if dst.lex_less(src) {
            let rev: Vec<u32> = seq.iter().rev().copied().collect();
            let mut points = self.mirror_cascade(&rev, dst, src)?;
            points.reverse();
            return Some(points);
        }
        self.mirror_cascade(seq, src, dst)
    }

    /// Mirrors `src` through the sequence and intersects back to front.
    fn mirror_cascade(
        &self,
        seq: &[u32],
        src: Vec3<f64>,
        dst: Vec3<f64>,
    ) -> Option<Vec<PathInteraction>> {
        let facets = self.scene.facets();
        let mut images = Vec::with_capacity(seq.len());
        let mut img = src;
        for &f in seq {
            img = facets[f as usize].plane.mirror(img);
            images.push(img);
        }
        let mut points = vec![Vec3::zero(); seq.len()];
        let mut tris = vec![0u32; seq.len()];
        let mut target = dst;
        for k in (0..seq.len()).rev() {
            let facet = &facets[seq[k] as usize];
            let s = facet.plane.segment_param(images[k], target)?;
            if !(s > 0.0 && s < 1.0) {
                return None;
            }
            let p = images[k] + (target - images[k]) * s;
            tris[k] = facet.locate(p, LOCATE_TOL)?;
            points[k] = p;
            target = p;
        }
        let mut prev = src;
        for k in 0..seq.len() {
            let next = if k + 1 < seq.len() { points[k + 1] } else { dst };
            if !(self.in_front(seq[k], prev) && self.in_front(seq[k], next)) {
                return None;
            }
            prev = points[k];
        }
        Some(
            seq.iter()
                .zip(points)
                .zip(tris)
                .map(|((&f, p), t)| self.reflection(f, t, p))
                .collect(),
        )
    }

    /// Exact specular path for a facet sequence, if valid and unblocked.
    fn reflection_path(&self, seq: &[u32], tx: Vec3<f64>, rx: Vec3<f64>) -> Option<PropagationPath> {
        let inter = self.specular_points(seq, tx, rx)?;
        self.assemble(tx, rx, inter)
    }

    /// Facet sequences of exactly `len` elements starting in front of `p`.
    fn sequences_from(&self, p: Vec3<f64>, len: usize) -> Vec<Vec<u32>> {
        let mut out = Vec::new();
        if len == 0 {
            out.push(Vec::new());
            return out;
        }
        let mut seq = Vec::with_capacity(len);
        for f in 0..self.scene.facets().len() as u32 {
            if self.in_front(f, p) {
                seq.push(f);
                self.extend_sequences(len, &mut seq, &mut out);
                seq.pop();
            }
        }
        out
    }

    fn extend_sequences(&self, len: usize, seq: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if seq.len() == len {
            out.push(seq.clone());
            return;
        }
        let last = *seq.last().expect("non-empty sequence");
        for &g in &self.successors[last as usize] {
            seq.push(g);
            self.extend_sequences(len, seq, out);
            seq.pop();
        }
    }

    /// Image-method paths of orders `1..=order`.
    fn image(&self, tx: Vec3<f64>, rx: Vec3<f64>, order: usize) -> Vec<PropagationPath> {
        let mut out = Vec::new();
        if order == 0 || tx == rx {
            return out;
        }
        let mut seq = Vec::with_capacity(order);
        for f in 0..self.scene.facets().len() as u32 {
            if self.in_front(f, tx) {
                seq.push(f);
                self.image_step(tx, rx, order, &mut seq, &mut out);
                seq.pop();
            }
        }
        out
    }

    fn image_step(
        &self,
        tx: Vec3<f64>,
        rx: Vec3<f64>,
        order: usize,
        seq: &mut Vec<u32>,
        out: &mut Vec<PropagationPath>,
    ) {
        let last = *seq.last().expect("non-empty sequence");
        if self.in_front(last, rx) {
            if let Some(p) = self.reflection_path(seq, tx, rx) {
                out.push(p);
            }
        }
        if seq.len() < order {
            for &g in &self.successors[last as usize] {
                seq.push(g);
                self.image_step(tx, rx, order, seq, out);
                seq.pop();
            }
        }
    }

    /// Launches the icosphere fan from `tx` and reports every capture of a
    /// receiver by a ray segment after `min_order..=max_order` bounces.
    fn shoot<F>(&self, tx: Vec3<f64>, rxs: &[Vec3<f64>], rx_index: &PointIndex, ray: usize, min_order: usize, max_order: usize, visit: &mut F)
    where
        F: FnMut(usize, &[u32], &[Vec3<f64>], Vec3<f64>, f64, f64),
    {
        let sphere = self.sphere.as_ref().expect("launch directions");
        let beta = sphere.beta_of(ray);
        let index = self.scene.index();
        let facets = self.scene.facets();
        let rb = rx_index.bounds();
        let mut o = tx;
        let mut d = sphere.directions[ray];
        let mut unfolded = 0.0;
        let mut seq: Vec<u32> = Vec::with_capacity(max_order);
        let mut vertices = vec![tx];
        for bounce in 0..=max_order {
            let hit = index.nearest_hit(o, d, f64::INFINITY);
            if bounce >= min_order {
                let t_end = match &hit {
                    Some(h) => h.t,
                    None => (0..8)
                        .map(|c| {
                            let p = Vec3::new(
                                if c & 1 == 0 { rb.min.x } else { rb.max.x },
                                if c & 2 == 0 { rb.min.y } else { rb.max.y },
                                if c & 4 == 0 { rb.min.z } else { rb.max.z },
                            );
                            (p - o).norm()
                        })
                        .fold(0.0, f64::max),
                };
                let r_max = (unfolded + t_end) * beta;
                // The tube has width, so receivers just past either end of
                // the segment (next to a wall) are still nominated; exact
                // path correction decides whether the path exists.
                rx_index.query(o, d, t_end + r_max, r_max, |j| {
                    let v = rxs[j] - o;
                    let t = v.dot(d);
                    let radius = (unfolded + t.clamp(0.0, t_end)) * beta;
                    if !(t > -radius && t <= t_end + radius) || unfolded + t <= 0.0 {
                        return;
                    }
                    let foot = o + d * t;
                    if (rxs[j] - foot).norm() < radius {
                        visit(j, &seq, &vertices, foot, unfolded + t, radius);
                    }
                });
            }
            let Some(h) = hit else { break };
            if bounce == max_order || h.normal.dot(d) >= 0.0 {
                break;
            }
            let f = self.scene.facet_of_prim(h.prim);
            seq.push(f);
            unfolded += h.t;
            o = h.point;
            vertices.push(o);
            d = d.reflect(facets[f as usize].plane.normal).normalized();
        }
    }

    fn captures(&self, tx: Vec3<f64>, rxs: &[Vec3<f64>], min_order: usize, max_order: usize) -> Vec<Capture> {
        let rx_index = PointIndex::build(rxs);
        let n = self.sphere.as_ref().map_or(0, |s| s.len());
        (0..n)
            .into_par_iter()
            .flat_map_iter(|ray| {
                let mut out = Vec::new();
                self.shoot(tx, rxs, &rx_index, ray, min_order, max_order, &mut |rx, seq, verts, point, unfolded, radius| {
                    out.push(Capture {
                        rx,
                        ray,
                        sequence: seq.to_vec(),
                        vertices: verts.to_vec(),
                        point,
                        unfolded,
                        radius,
                    })
                });
                out
            })
            .collect()
    }

    /// Facet sequences nominated by ray captures, per receiver.
    fn sbr_candidates(
        &self,
        tx: Vec3<f64>,
        rxs: &[Vec3<f64>],
        min_order: usize,
        max_order: usize,
    ) -> Vec<Vec<Vec<u32>>> {
        let rx_index = PointIndex::build(rxs);
        let n = self.sphere.as_ref().map_or(0, |s| s.len());
        let mut hits: Vec<(u32, Vec<u32>)> = (0..n)
            .into_par_iter()
            .flat_map_iter(|ray| {
                let mut out = Vec::new();
                self.shoot(tx, rxs, &rx_index, ray, min_order, max_order, &mut |rx, seq, _, _, _, _| {
                    out.push((rx as u32, seq.to_vec()))
                });
                out
            })
            .collect();
        match self.cfg.capture_dedup {
            CaptureDedup::BySignature => {
                hits.par_sort_unstable();
                hits.dedup();
            }
            CaptureDedup::PerRay => hits.par_sort_by_key(|h| h.0),
        }
        let mut per_rx = vec![Vec::new(); rxs.len()];
        for (rx, seq) in hits {
            per_rx[rx as usize].push(seq);
        }
        per_rx
    }

    /// Point on the line of edge `e` minimizing `|p − x| + |x − q|`, as an
    /// edge parameter (not clamped).
    fn edge_param(&self, e: usize, p: Vec3<f64>, q: Vec3<f64>) -> Option<f64> {
        let edge = &self.scene.edges()[e];
        let dir = self.frames[e].e;
        let len = edge.length();
        let (tp, rp) = along_and_off(edge.a, dir, p);
        let (tq, rq) = along_and_off(edge.a, dir, q);
        if rp + rq <= 1e-12 {
            return None;
        }
        Some((tp * rq + tq * rp) / (rp + rq) / len)
    }

    fn interior(&self, e: usize, t: f64) -> bool {
        let margin = EDGE_MARGIN / self.scene.edges()[e].length();
        t > margin && t < 1.0 - margin
    }

    fn is_exterior(&self, e: usize, on_edge: Vec3<f64>, p: Vec3<f64>) -> bool {
        exterior(&self.frames[e], on_edge, p)
    }

    fn diffraction_interaction(&self, e: usize, t: f64, before: Vec3<f64>, after: Vec3<f64>) -> PathInteraction {
        let edge = self.scene.edges()[e];
        let point = edge.point_at(t);
        let frame = &self.frames[e];
        let phi_prime = frame.angle((before - point).normalized());
        let phi = frame.angle((after - point).normalized());
        PathInteraction {
            kind: InteractionKind::Diffraction {
                edge_id: e as u32,
                edge,
                t,
                lit: (phi - phi_prime).abs() < PI,
            },
            point,
        }
    }

    /// One diffraction on edge `e`, with reflections `pre` before it and
    /// `post` after it.
    fn single_diffraction(
        &self,
        tx: Vec3<f64>,
        rx: Vec3<f64>,
        pre: &[u32],
        e: usize,
        post: &[u32],
    ) -> Option<PropagationPath> {
        let src = self.image_of(pre, tx);
        let rev: Vec<u32> = post.iter().rev().copied().collect();
        let dst = self.image_of(&rev, rx);
        let t = self.edge_param(e, src, dst)?;
        if !self.interior(e, t) {
            return None;
        }
        let p = self.scene.edges()[e].point_at(t);
        let mut before = self.specular_points(pre, tx, p)?;
        let after = self.specular_points(post, p, rx)?;
        let prev = before.last().map_or(tx, |i| i.point);
        let next = after.first().map_or(rx, |i| i.point);
        if !(self.is_exterior(e, p, prev) && self.is_exterior(e, p, next)) {
            return None;
        }
        before.push(self.diffraction_interaction(e, t, prev, next));
        before.extend(after);
        self.assemble(tx, rx, before)
    }

    /// Alternating projection for the two edge parameters of a double
    /// diffraction, each step an exact single-edge solve.
    fn solve_double(&self, tx: Vec3<f64>, rx: Vec3<f64>, e1: usize, e2: usize) -> Option<(f64, f64)> {
        let edges = self.scene.edges();
        let (a, b) = (&edges[e1], &edges[e2]);
        let mut t2 = self.edge_param(e2, tx, rx)?.clamp(0.0, 1.0);
        let mut t1 = self.edge_param(e1, tx, b.point_at(t2))?.clamp(0.0, 1.0);
        let mut converged = false;
        for _ in 0..DOUBLE_MAX_ITER {
            let n2 = self.edge_param(e2, a.point_at(t1), rx)?.clamp(0.0, 1.0);
            let n1 = self.edge_param(e1, tx, b.point_at(n2))?.clamp(0.0, 1.0);
            let delta = (a.point_at(n1) - a.point_at(t1)).norm() + (b.point_at(n2) - b.point_at(t2)).norm();
            t1 = n1;
            t2 = n2;
            if delta < DOUBLE_TOL {
                converged = true;
                break;
            }
        }
        (converged && self.interior(e1, t1) && self.interior(e2, t2)).then_some((t1, t2))
    }

    fn double_diffraction(&self, tx: Vec3<f64>, rx: Vec3<f64>, e1: usize, e2: usize) -> Option<PropagationPath> {
        let (t1, t2) = if e1 < e2 {
            self.solve_double(tx, rx, e1, e2)?
        } else {
            let (t2, t1) = self.solve_double(rx, tx, e2, e1)?;
            (t1, t2)
        };
        let edges = self.scene.edges();
        let (a, b) = (&edges[e1], &edges[e2]);
        let (p1, p2) = (a.point_at(t1), b.point_at(t2));
        if !(self.is_exterior(e1, p1, tx)
            && self.is_exterior(e1, p1, p2)
            && self.is_exterior(e2, p2, p1)
            && self.is_exterior(e2, p2, rx))
        {
            return None;
        }
        let inter = vec![
            self.diffraction_interaction(e1, t1, tx, p2),
            self.diffraction_interaction(e2, t2, p1, rx),
        ];
        self.assemble(tx, rx, inter)
    }

    /// Paths with one or two diffractions.
    fn diffraction(&self, tx: Vec3<f64>, rx: Vec3<f64>) -> Vec<PropagationPath> {
        let mut out = Vec::new();
        if self.cfg.max_diffractions == 0 || tx == rx {
            return out;
        }
        let n_edges = self.scene.edges().len();
        let all: Vec<u32> = (0..n_edges as u32).collect();
        let k_max = self.cfg.diffraction_reflections.min(self.cfg.max_reflections) as usize;
        for k in 0..=k_max {
            for a in 0..=k {
                let prefixes = self.sequences_from(tx, a);
                let suffixes: Vec<Vec<u32>> = self
                    .sequences_from(rx, k - a)
                    .into_iter()
                    .map(|mut s| {
                        s.reverse();
                        s
                    })
                    .collect();
                for pre in &prefixes {
                    let pre_edges = pre.last().map_or(&all, |&f| &self.facet_edges[f as usize]);
                    for post in &suffixes {
                        for &e in pre_edges {
                            if let Some(&g) = post.first() {
                                if self.facet_edges[g as usize].binary_search(&e).is_err() {
                                    continue;
                                }
                            }
                            if let Some(p) = self.single_diffraction(tx, rx, pre, e as usize, post) {
                                out.push(p);
                            }
                        }
                    }
                }
            }
        }
        if self.cfg.max_diffractions >= 2 {
            for e1 in 0..n_edges {
                if !self.is_exterior(e1, self.scene.edges()[e1].a, tx) {
                    continue;
                }
                for &e2 in &self.edge_pairs[e1] {
                    let e2 = e2 as usize;
                    if !self.is_exterior(e2, self.scene.edges()[e2].a, rx) {
                        continue;
                    }
                    if let Some(p) = self.double_diffraction(tx, rx, e1, e2) {
                        out.push(p);
                    }
                }
            }
        }
        out
    }
}

/// Coordinate of `p` along the line `origin + s·dir` and its distance from it.
fn along_and_off(origin: Vec3<f64>, dir: Vec3<f64>, p: Vec3<f64>) -> (f64, f64) {
    let v = p - origin;
    let s = v.dot(dir);
    (s, (v - dir * s).norm())
}

/// True if `p` lies in the free-space sector of the wedge at `on_edge`
/// (faces included).
fn exterior(frame: &WedgeFrame, on_edge: Vec3<f64>, p: Vec3<f64>) -> bool {
    let v = p - on_edge;
    let mut a = v.dot(frame.n0).atan2(v.dot(frame.t0));
    if a < -ANGLE_TOL {
        a += 2.0 * PI;
    }
    a <= frame.n * PI + ANGLE_TOL
}

fn tracer_for(scene: &Scene, cfg: TraceConfig) -> Tracer<'_> {
    Tracer::new(scene, cfg).expect("valid trace configuration")
}

/// Direct path, unless opaque geometry blocks it. Foliage is recorded on
/// the segment and never blocks.
pub fn find_los(scene: &Scene, tx: Vec3<f64>, rx: Vec3<f64>) -> Option<PropagationPath> {
    let cfg = TraceConfig {
        max_reflections: 0,
        max_diffractions: 0,
        ..TraceConfig::default()
    };
    let t = Tracer {
        scene,
        cfg,
        successors: Vec::new(),
        facet_edges: Vec::new(),
        frames: Vec::new(),
        edge_pairs: Vec::new(),
        sphere: None,
    };
    t.los(tx, rx)
}

/// Exact specular paths of orders `1..=order` by the image method.
pub fn image_paths(scene: &Scene, tx: Vec3<f64>, rx: Vec3<f64>, order: u32) -> Vec<PropagationPath> {
    let cfg = TraceConfig {
        max_reflections: 0,
        max_diffractions: 0,
        diffraction_reflections: 0,
        ..TraceConfig::default()
    };
    let t = tracer_for(scene, cfg);
    let mut paths = t.image(tx, rx, order as usize);
    paths.sort_by(|a, b| a.signature.cmp(&b.signature));
    paths
}

/// Mirror-cascade refinement of a facet sequence into the exact specular
/// path, or `None` if a specular point leaves its facet or a segment is
/// blocked.
pub fn exact_path_correction(
    scene: &Scene,
    sequence: &[u32],
    tx: Vec3<f64>,
    rx: Vec3<f64>,
) -> Option<PropagationPath> {
    let t = Tracer {
        scene,
        cfg: TraceConfig::default(),
        successors: Vec::new(),
        facet_edges: Vec::new(),
        frames: Vec::new(),
        edge_pairs: Vec::new(),
        sphere: None,
    };
    t.reflection_path(sequence, tx, rx)
}

/// Ray captures of every receiver for reflection orders
/// `0..=cfg.max_reflections`, in launch order.
pub fn sbr_captures(
    scene: &Scene,
    tx: Vec3<f64>,
    rxs: &[Vec3<f64>],
    cfg: &TraceConfig,
) -> Result<Vec<Capture>, TraceError> {
    let mut t = Tracer::new(scene, *cfg)?;
    if t.sphere.is_none() {
        t.sphere = Some(Icosphere::new(cfg.sbr_subdivision));
    }
    Ok(t.captures(tx, rxs, 0, cfg.max_reflections as usize))
}

/// Pure ray-launching search for reflection orders `0..=cfg.max_reflections`:
/// every captured facet sequence is refined by exact path correction and
/// duplicates are merged by signature.
pub fn sbr_paths(
    scene: &Scene,
    tx: Vec3<f64>,
    rxs: &[Vec3<f64>],
    cfg: &TraceConfig,
) -> Result<Vec<Vec<PropagationPath>>, TraceError> {
    let mut t = Tracer::new(scene, *cfg)?;
    if t.sphere.is_none() {
        t.sphere = Some(Icosphere::new(cfg.sbr_subdivision));
    }
    let candidates = t.sbr_candidates(tx, rxs, 0, cfg.max_reflections as usize);
    Ok(rxs
        .par_iter()
        .zip(candidates.par_iter())
        .map(|(&rx, cands)| {
            let mut found = BTreeMap::new();
            for seq in cands {
                let p = if seq.is_empty() {
                    t.los(tx, rx)
                } else {
                    t.reflection_path(seq, tx, rx)
                };
                if let Some(p) = p {
                    found.entry(p.signature.clone()).or_insert(p);
                }
            }
            found.into_values().collect()
        })
        .collect())
}

/// Paths with at least one diffraction: single diffraction with up to
/// `cfg.diffraction_reflections` reflections around it, and double
/// diffraction when `cfg.max_diffractions` is 2.
pub fn diffraction_paths(
    scene: &Scene,
    tx: Vec3<f64>,
    rx: Vec3<f64>,
    cfg: &TraceConfig,
) -> Result<Vec<PropagationPath>, TraceError> {
    let t = Tracer::new(scene, *cfg)?;
    let mut found = BTreeMap::new();
    for p in t.diffraction(tx, rx) {
        found.entry(p.signature.clone()).or_insert(p);
    }
    Ok(found.into_values().collect())
}
