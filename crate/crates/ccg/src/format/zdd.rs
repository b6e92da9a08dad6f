//! Diagram files:
//!
//! ```text
//! zdd <num_vars> <nonterminal_count> <root>
//! order <var> <var> ...           # variables by position
//! node <idx> <label> <lo> <hi>    # idx from 2; 0 is ⊥, 1 is ⊤
//! ```
//!
//! Nodes are listed children first, so the root is the last line unless
//! the diagram is a single terminal. Writing a parsed file reproduces it
//! byte for byte.

use std::fmt::Write;

use ccg_core::zdd::{Zdd, ZddNode};

use super::{content_lines, parse_field, FormatError};

pub fn write_zdd(zdd: &Zdd) -> String {
    let mut out = String::new();
    let nonterminals = zdd.nonterminals();
    writeln!(out, "zdd {} {} {}", zdd.num_vars(), nonterminals.len(), zdd.root()).unwrap();
    out.push_str("order");
    for v in zdd.order() {
        write!(out, " {v}").unwrap();
    }
    out.push('\n');
    for (i, node) in nonterminals.iter().enumerate() {
        writeln!(out, "node {} {} {} {}", i + 2, node.label, node.lo, node.hi).unwrap();
    }
    out
}

pub fn parse_zdd(text: &str) -> Result<Zdd, FormatError> {
    let mut lines = content_lines(text);
    let (line, header) = lines.next().ok_or_else(|| FormatError::at(1, "empty diagram file"))?;
    if header[0] != "zdd" || header.len() != 4 {
        return Err(FormatError::at(line, "expected `zdd <num_vars> <nonterminal_count> <root>`"));
    }
    let num_vars: usize = parse_field(line, &header, 1, "variable count")?;
    let count: usize = parse_field(line, &header, 2, "node count")?;
    let root: u32 = parse_field(line, &header, 3, "root")?;

    let (line, order_fields) =
        lines.next().ok_or_else(|| FormatError::at(line + 1, "missing `order` line"))?;
    if order_fields[0] != "order" {
        return Err(FormatError::at(line, "expected `order <var> ...`"));
    }
    let order = (1..order_fields.len())
        .map(|i| parse_field::<usize>(line, &order_fields, i, "variable"))
        .collect::<Result<Vec<_>, _>>()?;
    if order.len() != num_vars {
        return Err(FormatError::at(
            line,
            format!("order lists {} variables, header says {num_vars}", order.len()),
        ));
    }

    let mut nodes = Vec::with_capacity(count);
    for (line, fields) in lines {
        if fields[0] != "node" || fields.len() != 5 {
            return Err(FormatError::at(line, "expected `node <idx> <label> <lo> <hi>`"));
        }
        let idx: usize = parse_field(line, &fields, 1, "node index")?;
        if idx != nodes.len() + 2 {
            return Err(FormatError::at(line, format!("node index {idx}, expected {}", nodes.len() + 2)));
        }
        nodes.push(ZddNode {
            label: parse_field(line, &fields, 2, "label")?,
            lo: parse_field(line, &fields, 3, "lo child")?,
            hi: parse_field(line, &fields, 4, "hi child")?,
        });
    }
    if nodes.len() != count {
        return Err(FormatError::Invalid(format!("header promises {count} nodes, file has {}", nodes.len())));
    }
    Zdd::from_parts(num_vars, order, nodes, root).map_err(|e| FormatError::Invalid(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ccg_core::zdd::{fixtures, ClassKind, StrategyClass};

    fn braess() -> Zdd {
        let g = fixtures::braess();
        Zdd::build(&g, &StrategyClass::from_designation(ClassKind::Paths, &g).unwrap()).unwrap()
    }

    #[test]
    fn round_trip_is_exact() {
        let z = braess();
        let text = write_zdd(&z);
        let back = parse_zdd(&text).unwrap();
        assert_eq!(back, z);
        assert_eq!(write_zdd(&back), text);
        assert!(text.starts_with("zdd 5 "));
        assert!(text.lines().last().unwrap().starts_with(&format!("node {} ", z.root())));
    }

    #[test]
    fn corruption_is_reported() {
        let text = write_zdd(&braess());
        let corrupted = text.replacen("node 2 ", "node 2 9", 1);
        assert!(parse_zdd(&corrupted).is_err());
        let mut lines: Vec<&str> = text.lines().collect();
        lines.pop();
        assert!(matches!(parse_zdd(&lines.join("\n")), Err(FormatError::Invalid(_))));
        assert!(matches!(parse_zdd("zdd 2 0 1\norder 0\n"), Err(FormatError::Parse { line: 2, .. })));
    }
}
