//! Line-oriented text format for weighted graphs.
//!
//! ```text
//! graph v1
//! # comments start with '#'
//! v 0 1.0
//! v 1          # measure defaults to 1
//! e 0 1 2.5
//! ```
//!
//! Vertex ids must be exactly `0..n`. Edges are undirected.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use heatlab_core::graph::WeightedGraph;
use heatlab_core::Error;

use crate::error::{LabError, Result};
use crate::report::fmt17;

pub const HEADER: &str = "graph v1";

fn parse_err(line: usize, message: impl Into<String>) -> LabError {
    LabError::Core(Error::Parse { line, message: message.into() })
}

fn field<T: std::str::FromStr>(token: Option<&str>, line: usize, what: &str) -> Result<T> {
    let token = token.ok_or_else(|| parse_err(line, format!("missing {what}")))?;
    token.parse().map_err(|_| parse_err(line, format!("bad {what} `{token}`")))
}

pub fn load_graph<R: BufRead>(reader: R) -> Result<WeightedGraph> {
    let mut seen_header = false;
    let mut measures: BTreeMap<usize, f64> = BTreeMap::new();
    let mut edges: Vec<(usize, usize, f64)> = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| LabError::io("<graph stream>", e))?;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if !seen_header {
            if content.split_whitespace().collect::<Vec<_>>() != ["graph", "v1"] {
                return Err(parse_err(lineno, format!("expected `{HEADER}`, found `{content}`")));
            }
            seen_header = true;
            continue;
        }
        let mut tokens = content.split_whitespace();
        match tokens.next() {
            Some("v") => {
                let id: usize = field(tokens.next(), lineno, "vertex id")?;
                let m = match tokens.next() {
                    Some(t) => field(Some(t), lineno, "measure")?,
                    None => 1.0,
                };
                if measures.insert(id, m).is_some() {
                    return Err(Error::DuplicateVertex(id).into());
                }
            }
            Some("e") => {
                let a: usize = field(tokens.next(), lineno, "edge endpoint")?;
                let b: usize = field(tokens.next(), lineno, "edge endpoint")?;
                let w: f64 = field(tokens.next(), lineno, "edge weight")?;
                edges.push((a, b, w));
            }
            Some(other) => return Err(parse_err(lineno, format!("unknown record `{other}`"))),
            None => unreachable!("blank lines are skipped"),
        }
        if let Some(extra) = tokens.next() {
            return Err(parse_err(lineno, format!("trailing token `{extra}`")));
        }
    }
    if !seen_header {
        return Err(parse_err(0, format!("empty input, expected `{HEADER}`")));
    }
    for (k, &id) in measures.keys().enumerate() {
        if id != k {
            return Err(Error::InvalidParam(format!("vertex ids must be 0..n; {k} is missing")).into());
        }
    }
    for &(a, b, _) in &edges {
        for x in [a, b] {
            if !measures.contains_key(&x) {
                return Err(Error::UnknownVertex(x).into());
            }
        }
    }
    Ok(WeightedGraph::new(measures.into_values().collect(), edges)?)
}

pub fn save_graph<W: Write>(g: &WeightedGraph, mut out: W) -> std::io::Result<()> {
    writeln!(out, "{HEADER}")?;
    writeln!(out, "# {} vertices, {} edges, family {}", g.vertex_count(), g.edge_count(), g.family_label())?;
    if let Some(t) = g.truncation() {
        writeln!(out, "# truncation root {} radius {}", t.root, t.radius)?;
    }
    for (x, &m) in g.measures().iter().enumerate() {
        writeln!(out, "v {x} {}", fmt17(m))?;
    }
    for e in g.edges() {
        writeln!(out, "e {} {} {}", e.a, e.b, fmt17(e.weight))?;
    }
    out.flush()
}

pub fn read_graph_file(path: &Path) -> Result<WeightedGraph> {
    let file = File::open(path).map_err(|e| LabError::io(path, e))?;
    load_graph(BufReader::new(file))
}

pub fn write_graph_file(g: &WeightedGraph, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| LabError::io(path, e))?;
    save_graph(g, BufWriter::new(file)).map_err(|e| LabError::io(path, e))
}
