//! OpenStreetMap XML subset: building ways, forest/wood areas and single trees.

use std::collections::HashMap;

use thiserror::Error;

use super::extrude::{Footprint, RoofShape};
use super::SceneWarning;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OsmError {
    #[error("OSM XML line {line}: {message}")]
    Xml { line: u32, message: String },
}

/// Vegetation found in the map data, still in lon/lat degrees.
#[derive(Clone, Debug, PartialEq)]
pub enum OsmFoliage {
    /// Closed `landuse=forest` or `natural=wood` way.
    Area { ring: Vec<[f64; 2]>, way_id: i64 },
    /// `natural=tree` node.
    Tree { lon: f64, lat: f64, node_id: i64 },
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct OsmData {
    /// Building footprints with rings in (lon, lat) degrees.
    pub footprints: Vec<Footprint>,
    pub foliage: Vec<OsmFoliage>,
    /// `(min_lon, min_lat, max_lon, max_lat)` from the `bounds` element, if present.
    pub bounds: Option<[f64; 4]>,
    pub warnings: Vec<SceneWarning>,
}

impl OsmData {
    /// Center of the declared bounds, else of all referenced coordinates.
    pub fn center(&self) -> Option<(f64, f64)> {
        if let Some(b) = self.bounds {
            return Some(((b[0] + b[2]) / 2.0, (b[1] + b[3]) / 2.0));
        }
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        let mut any = false;
        let mut add = |p: [f64; 2]| {
            any = true;
            for k in 0..2 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        };
        for fp in &self.footprints {
            fp.ring.iter().for_each(|&p| add(p));
        }
        for f in &self.foliage {
            match f {
                OsmFoliage::Area { ring, .. } => ring.iter().for_each(|&p| add(p)),
                OsmFoliage::Tree { lon, lat, .. } => add([*lon, *lat]),
            }
        }
        any.then(|| ((lo[0] + hi[0]) / 2.0, (lo[1] + hi[1]) / 2.0))
    }
}

/// Parses OSM XML. Malformed XML is an error; malformed map features are
/// skipped with a warning.
pub fn parse_osm(xml: &[u8]) -> Result<OsmData, OsmError> {
    let text = std::str::from_utf8(xml).map_err(|e| {
        let line = 1 + xml[..e.valid_up_to()].iter().filter(|&&b| b == b'\n').count() as u32;
        OsmError::Xml {
            line,
            message: format!("invalid UTF-8: {e}"),
        }
    })?;
    let doc = roxmltree::Document::parse(text).map_err(|e| OsmError::Xml {
        line: e.pos().row,
        message: e.to_string(),
    })?;
    let root = doc.root_element();
    let line_of = |n: roxmltree::Node| doc.text_pos_at(n.range().start).row;

    let mut out = OsmData::default();
    let mut nodes: HashMap<i64, [f64; 2]> = HashMap::new();

    for n in root.children().filter(|n| n.is_element()) {
        match n.tag_name().name() {
            "bounds" => {
                let get = |k: &str| n.attribute(k).and_then(|v| v.parse::<f64>().ok());
                if let (Some(a), Some(b), Some(c), Some(d)) =
                    (get("minlon"), get("minlat"), get("maxlon"), get("maxlat"))
                {
                    out.bounds = Some([a, b, c, d]);
                }
            }
            "node" => {
                let id = n.attribute("id").and_then(|v| v.parse::<i64>().ok());
                let lat = n.attribute("lat").and_then(|v| v.parse::<f64>().ok());
                let lon = n.attribute("lon").and_then(|v| v.parse::<f64>().ok());
                let (Some(id), Some(lat), Some(lon)) = (id, lat, lon) else {
                    out.warnings.push(SceneWarning::new(
                        format!("line {}", line_of(n)),
                        "node without valid id/lat/lon skipped".into(),
                    ));
                    continue;
                };
                if !(lat.is_finite() && lon.is_finite() && lat.abs() < 85.0) {
                    out.warnings.push(SceneWarning::new(
                        format!("node {id}"),
                        format!("coordinate out of range ({lon}, {lat})"),
                    ));
                    continue;
                }
                nodes.insert(id, [lon, lat]);
                if tag(n, "natural") == Some("tree") {
                    out.foliage.push(OsmFoliage::Tree {
                        lon,
                        lat,
                        node_id: id,
                    });
                }
            }
            _ => {}
        }
    }

    for w in root.children().filter(|n| n.is_element() && n.has_tag_name("way")) {
        let way_id = w.attribute("id").and_then(|v| v.parse::<i64>().ok()).unwrap_or(0);
        let is_building = tag(w, "building").is_some_and(|v| v != "no");
        let is_forest = tag(w, "landuse") == Some("forest") || tag(w, "natural") == Some("wood");
        if !is_building && !is_forest {
            continue;
        }
        let label = format!("way {way_id}");
        let refs: Vec<i64> = w
            .children()
            .filter(|c| c.has_tag_name("nd"))
            .filter_map(|c| c.attribute("ref").and_then(|v| v.parse().ok()))
            .collect();
        if refs.len() < 4 || refs.first() != refs.last() {
            out.warnings.push(SceneWarning::new(label, "unclosed way skipped".into()));
            continue;
        }
        let mut ring = Vec::with_capacity(refs.len());
        let mut missing = None;
        for r in &refs {
            match nodes.get(r) {
                Some(&p) => ring.push(p),
                None => {
                    missing = Some(*r);
                    break;
                }
            }
        }
        if let Some(r) = missing {
            out.warnings.push(SceneWarning::new(label, format!("references missing node {r}; skipped")));
            continue;
        }
        if is_building {
            let height_m = match tag(w, "height").map(parse_length) {
                Some(Some(h)) if h > 0.0 => Some(h),
                Some(_) => {
                    out.warnings.push(SceneWarning::new(label.clone(), "unparsable height tag ignored".into()));
                    None
                }
                None => None,
            };
            let levels = match tag(w, "building:levels").map(|v| v.trim().parse::<f64>()) {
                Some(Ok(l)) if l >= 1.0 && l.is_finite() => Some(l.round() as u32),
                Some(_) => {
                    out.warnings.push(SceneWarning::new(label.clone(), "unparsable building:levels ignored".into()));
                    None
                }
                None => None,
            };
            let roof = match tag(w, "roof:shape") {
                Some("gabled") => RoofShape::Gabled,
                _ => RoofShape::Flat,
            };
            out.footprints.push(Footprint {
                ring,
                height_m,
                levels,
                roof,
                material: tag(w, "building:material").map(material_name),
                source_id: Some(way_id),
            });
        } else {
            out.foliage.push(OsmFoliage::Area { ring, way_id });
        }
    }
    Ok(out)
}

fn tag<'a>(n: roxmltree::Node<'a, '_>, key: &str) -> Option<&'a str> {
    n.children()
        .filter(|c| c.has_tag_name("tag"))
        .find(|c| c.attribute("k") == Some(key))
        .and_then(|c| c.attribute("v"))
}

/// Parses "12", "12.5", "12 m" or "12m".
fn parse_length(v: &str) -> Option<f64> {
    let v = v.trim();
    let v = v.strip_suffix('m').unwrap_or(v).trim();
    v.parse::<f64>().ok().filter(|h| h.is_finite())
}

/// Maps OSM `building:material` values to built-in material names.
fn material_name(v: &str) -> String {
    match v {
        "brick" => super::material::BRICK.to_string(),
        "concrete" | "reinforced_concrete" | "cement_block" => super::material::CONCRETE.to_string(),
        other => other.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn malformed_xml_reports_line() {
        let err = parse_osm(b"<osm>\n<node id='1'\n</osm>").unwrap_err();
        let OsmError::Xml { line, .. } = err;
        assert!(line >= 2);
    }

    #[test]
    fn length_forms() {
        assert_eq!(parse_length("12"), Some(12.0));
        assert_eq!(parse_length("12.5 m"), Some(12.5));
        assert_eq!(parse_length("7m"), Some(7.0));
        assert_eq!(parse_length("tall"), None);
    }
}
