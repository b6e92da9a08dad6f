//! Optional network ingestion: TSPLIB `EUC_2D` point sets (triangulated
//! with Delaunay) and GraphML topologies.
//!
//! Conventions: TSPLIB points with identical coordinates collapse to the
//! first one listed; vertices are numbered in order of first appearance;
//! edges are sorted by `(min endpoint, max endpoint)`. GraphML self-loops
//! and repeated edges are dropped. GraphML edges get great-circle lengths
//! when every node carries `Latitude` and `Longitude` data, unit lengths
//! otherwise.

use std::collections::{BTreeSet, HashMap};

use ccg_core::zdd::{Designation, Edge, Graph};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("line {line}: {message}")]
    Tsplib { line: usize, message: String },
    #[error("graphml: {0}")]
    GraphMl(String),
    #[error("{0}")]
    Graph(String),
}

fn tsp_err(line: usize, message: impl Into<String>) -> IngestError {
    IngestError::Tsplib { line, message: message.into() }
}

/// Node coordinates of a TSPLIB file, duplicates removed.
pub fn parse_tsplib(text: &str) -> Result<Vec<(f64, f64)>, IngestError> {
    let mut in_coords = false;
    let mut kind = None;
    let mut points: Vec<(f64, f64)> = Vec::new();
    let mut seen: HashMap<(u64, u64), usize> = HashMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if line == "EOF" {
            break;
        }
        if !in_coords {
            if line.starts_with("NODE_COORD_SECTION") {
                if kind.as_deref() != Some("EUC_2D") {
                    return Err(tsp_err(i + 1, "only EDGE_WEIGHT_TYPE EUC_2D is supported"));
                }
                in_coords = true;
            } else if let Some((key, value)) = line.split_once(':') {
                if key.trim() == "EDGE_WEIGHT_TYPE" {
                    kind = Some(value.trim().to_string());
                }
            }
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(tsp_err(i + 1, "expected `<id> <x> <y>`"));
        }
        let parse = |s: &str| s.parse::<f64>().map_err(|_| tsp_err(i + 1, format!("bad number `{s}`")));
        let p = (parse(fields[1])?, parse(fields[2])?);
        if !(p.0.is_finite() && p.1.is_finite()) {
            return Err(tsp_err(i + 1, "non-finite coordinate"));
        }
        let key = (p.0.to_bits(), p.1.to_bits());
        if let std::collections::hash_map::Entry::Vacant(e) = seen.entry(key) {
            e.insert(points.len());
            points.push(p);
        }
    }
    if !in_coords {
        return Err(tsp_err(text.lines().count().max(1), "no NODE_COORD_SECTION"));
    }
    Ok(points)
}

/// Delaunay triangulation edges of `points` with Euclidean lengths.
pub fn delaunay_graph(points: &[(f64, f64)], designation: Designation) -> Result<Graph, IngestError> {
    let pts: Vec<delaunator::Point> = points.iter().map(|&(x, y)| delaunator::Point { x, y }).collect();
    let tri = delaunator::triangulate(&pts);
    if tri.triangles.is_empty() {
        return Err(IngestError::Graph("points are collinear or too few to triangulate".into()));
    }
    let mut pairs = BTreeSet::new();
    for t in tri.triangles.chunks(3) {
        for (a, b) in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
            pairs.insert((a.min(b), a.max(b)));
        }
    }
    let edges = pairs
        .into_iter()
        .map(|(u, v)| {
            let (dx, dy) = (points[u].0 - points[v].0, points[u].1 - points[v].1);
            Edge { u, v, length: (dx * dx + dy * dy).sqrt() }
        })
        .collect();
    Graph::new(points.len(), edges, designation).map_err(|e| IngestError::Graph(e.to_string()))
}

pub fn parse_graphml(text: &str, designation: Designation) -> Result<Graph, IngestError> {
    let doc = roxmltree::Document::parse(text).map_err(|e| IngestError::GraphMl(e.to_string()))?;
    let mut key_names = HashMap::new();
    for key in doc.descendants().filter(|n| n.has_tag_name("key")) {
        if let (Some(id), Some(name)) = (key.attribute("id"), key.attribute("attr.name")) {
            key_names.insert(id.to_string(), name.to_string());
        }
    }
    let mut index = HashMap::new();
    let mut coords: Vec<Option<(f64, f64)>> = Vec::new();
    for node in doc.descendants().filter(|n| n.has_tag_name("node")) {
        let id = node.attribute("id").ok_or_else(|| IngestError::GraphMl("node without id".into()))?;
        if index.insert(id.to_string(), coords.len()).is_some() {
            return Err(IngestError::GraphMl(format!("duplicate node id `{id}`")));
        }
        let mut lat = None;
        let mut lon = None;
        for data in node.children().filter(|n| n.has_tag_name("data")) {
            let name = data.attribute("key").and_then(|k| key_names.get(k));
            let value = data.text().and_then(|t| t.trim().parse::<f64>().ok());
            match name.map(String::as_str) {
                Some("Latitude") => lat = value,
                Some("Longitude") => lon = value,
                _ => {}
            }
        }
        coords.push(lat.zip(lon));
    }
    let geographic = !coords.is_empty() && coords.iter().all(Option::is_some);
    let mut pairs = BTreeSet::new();
    for edge in doc.descendants().filter(|n| n.has_tag_name("edge")) {
        let endpoint = |attr| {
            let id =
                edge.attribute(attr).ok_or_else(|| IngestError::GraphMl(format!("edge without {attr}")))?;
            index
                .get(id)
                .copied()
                .ok_or_else(|| IngestError::GraphMl(format!("edge references unknown node `{id}`")))
        };
        let (u, v) = (endpoint("source")?, endpoint("target")?);
        if u != v {
            pairs.insert((u.min(v), u.max(v)));
        }
    }
    let edges = pairs
        .into_iter()
        .map(|(u, v)| {
            let length = match (geographic, coords[u], coords[v]) {
                (true, Some(a), Some(b)) => great_circle_km(a, b).max(1e-9),
                _ => 1.0,
            };
            Edge { u, v, length }
        })
        .collect();
    Graph::new(coords.len(), edges, designation).map_err(|e| IngestError::Graph(e.to_string()))
}

fn great_circle_km((lat1, lon1): (f64, f64), (lat2, lon2): (f64, f64)) -> f64 {
    let (p1, p2) = (lat1.to_radians(), lat2.to_radians());
    let dp = p2 - p1;
    let dl = (lon2 - lon1).to_radians();
    let a = (dp / 2.0).sin().powi(2) + p1.cos() * p2.cos() * (dl / 2.0).sin().powi(2);
    2.0 * 6371.0 * a.sqrt().asin()
}
