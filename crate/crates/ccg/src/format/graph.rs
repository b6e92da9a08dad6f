//! Graph files:
//!
//! ```text
//! graph <vertex_count> <edge_count>
//! edge <id> <u> <v> <length>      # ids 1..=edge_count, vertices 0-based
//! od <s> <t>                      # or: terminals <v1> <v2> ...
//! ```
//!
//! `#` starts a comment. Edge `id` becomes ground-set element `id - 1`.

use std::fmt::Write;

use ccg_core::zdd::{Designation, Edge, Graph};

use super::{content_lines, parse_field, FormatError};

pub fn parse_graph(text: &str) -> Result<Graph, FormatError> {
    let mut lines = content_lines(text);
    let (line, header) = lines.next().ok_or_else(|| FormatError::at(1, "empty graph file"))?;
    if header[0] != "graph" || header.len() != 3 {
        return Err(FormatError::at(line, "expected `graph <vertex_count> <edge_count>`"));
    }
    let vertex_count: usize = parse_field(line, &header, 1, "vertex count")?;
    let edge_count: usize = parse_field(line, &header, 2, "edge count")?;

    let mut edges: Vec<Option<Edge>> = vec![None; edge_count];
    let mut designation = Designation::None;
    let mut designation_line = None;
    for (line, fields) in lines {
        match fields[0] {
            "edge" => {
                if fields.len() != 5 {
                    return Err(FormatError::at(line, "expected `edge <id> <u> <v> <length>`"));
                }
                let id: usize = parse_field(line, &fields, 1, "edge id")?;
                let u: usize = parse_field(line, &fields, 2, "vertex")?;
                let v: usize = parse_field(line, &fields, 3, "vertex")?;
                let length: f64 = parse_field(line, &fields, 4, "length")?;
                if id == 0 || id > edge_count {
                    return Err(FormatError::at(line, format!("edge id {id} outside 1..={edge_count}")));
                }
                if u >= vertex_count || v >= vertex_count {
                    return Err(FormatError::at(line, "vertex out of range"));
                }
                if u == v {
                    return Err(FormatError::at(line, "self-loop"));
                }
                if !(length > 0.0 && length.is_finite()) {
                    return Err(FormatError::at(line, "length must be positive and finite"));
                }
                if edges[id - 1].replace(Edge { u, v, length }).is_some() {
                    return Err(FormatError::at(line, format!("duplicate edge id {id}")));
                }
            }
            "od" | "terminals" => {
                if let Some(previous) = designation_line {
                    return Err(FormatError::at(
                        line,
                        format!("second designation (first on line {previous})"),
                    ));
                }
                designation_line = Some(line);
                let vertices = (1..fields.len())
                    .map(|i| parse_field::<usize>(line, &fields, i, "vertex"))
                    .collect::<Result<Vec<_>, _>>()?;
                if let Some(&bad) = vertices.iter().find(|&&v| v >= vertex_count) {
                    return Err(FormatError::at(line, format!("vertex {bad} out of range")));
                }
                designation = if fields[0] == "od" {
                    if vertices.len() != 2 {
                        return Err(FormatError::at(line, "expected `od <s> <t>`"));
                    }
                    Designation::OdPair { source: vertices[0], target: vertices[1] }
                } else {
                    if vertices.is_empty() {
                        return Err(FormatError::at(line, "terminal list is empty"));
                    }
                    Designation::Terminals(vertices)
                };
            }
            other => return Err(FormatError::at(line, format!("unknown record `{other}`"))),
        }
    }
    let edges = edges
        .into_iter()
        .enumerate()
        .map(|(i, e)| e.ok_or_else(|| FormatError::Invalid(format!("edge {} is missing", i + 1))))
        .collect::<Result<Vec<_>, _>>()?;
    Graph::new(vertex_count, edges, designation).map_err(|e| FormatError::Invalid(e.to_string()))
}

pub fn write_graph(graph: &Graph) -> String {
    let mut out = String::new();
    writeln!(out, "graph {} {}", graph.vertex_count(), graph.edge_count()).unwrap();
    for (i, e) in graph.edges().iter().enumerate() {
        writeln!(out, "edge {} {} {} {}", i + 1, e.u, e.v, e.length).unwrap();
    }
    match graph.designation() {
        Designation::OdPair { source, target } => writeln!(out, "od {source} {target}").unwrap(),
        Designation::Terminals(ts) => {
            let list: Vec<String> = ts.iter().map(|t| t.to_string()).collect();
            writeln!(out, "terminals {}", list.join(" ")).unwrap();
        }
        Designation::None => {}
    }
    out
}
