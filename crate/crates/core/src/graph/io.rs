use std::io::{BufRead, Write};

use super::WeightedGraph;
use crate::error::GraphError;

/// Writes the edge-list format: a header line `n m W`, then one `u v w`
/// line per edge.
pub fn write_edge_list<W: Write>(g: &WeightedGraph, mut out: W) -> std::io::Result<()> {
    writeln!(out, "{} {} {}", g.node_count(), g.edge_count(), g.max_weight())?;
    for e in g.edges() {
        writeln!(out, "{} {} {}", e.u, e.v, e.weight)?;
    }
    Ok(())
}

/// Parses and validates the edge-list format. Blank lines and lines
/// starting with `#` are ignored.
pub fn read_edge_list<R: BufRead>(input: R) -> Result<WeightedGraph, GraphError> {
    let mut header: Option<(usize, usize, u64)> = None;
    let mut triples = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        let line_no = i + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(GraphError::Parse { line: line_no, reason: format!("expected 3 fields, got {}", fields.len()) });
        }
        let parse = |s: &str| {
            s.parse::<u64>()
                .map_err(|e| GraphError::Parse { line: line_no, reason: format!("{s:?}: {e}") })
        };
        let (a, b, c) = (parse(fields[0])?, parse(fields[1])?, parse(fields[2])?);
        match header {
            None => header = Some((a as usize, b as usize, c)),
            Some(_) => {
                let to_id = |x: u64| {
                    u32::try_from(x).map_err(|_| GraphError::Parse { line: line_no, reason: format!("node id {x} too large") })
                };
                triples.push((to_id(a)?, to_id(b)?, c));
            }
        }
    }
    let (n, m, w) = header.ok_or(GraphError::Parse { line: 0, reason: "missing header".into() })?;
    if n < 2 {
        return Err(GraphError::TooFewNodes(n));
    }
    if triples.len() != m {
        return Err(GraphError::Parse { line: 0, reason: format!("header declares {m} edges, found {}", triples.len()) });
    }
    WeightedGraph::new(n, w, &triples)
}
