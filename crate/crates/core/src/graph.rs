//! Simple undirected interaction graphs.
//!
//! Vertices are `0..n` internally. The graph file format and every other
//! user-facing surface use 1-based vertex labels.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetworkGraph {
    num_vertices: usize,
    /// Canonical edge list: `(u, v)` with `u < v`, sorted.
    edges: Vec<(usize, usize)>,
    adjacency: Vec<Vec<usize>>,
    /// For each vertex, the edge index of each neighbor in `adjacency`.
    incident: Vec<Vec<usize>>,
    max_degree: usize,
}

impl NetworkGraph {
    /// Builds a graph from 0-based edge pairs.
    pub fn new(num_vertices: usize, edge_list: &[(usize, usize)]) -> Result<Self> {
        if num_vertices == 0 {
            return Err(Error::Graph("graph must have at least one vertex".into()));
        }
        let mut seen = BTreeSet::new();
        for &(u, v) in edge_list {
            if u >= num_vertices || v >= num_vertices {
                return Err(Error::Graph(format!(
                    "edge ({}, {}) references a vertex outside 1..={num_vertices}",
                    u + 1,
                    v + 1
                )));
            }
            if u == v {
                return Err(Error::SelfLoop { vertex: u + 1 });
            }
            let key = (u.min(v), u.max(v));
            if !seen.insert(key) {
                return Err(Error::DuplicateEdge {
                    u: key.0 + 1,
                    v: key.1 + 1,
                });
            }
        }
        let edges: Vec<(usize, usize)> = seen.into_iter().collect();
        let mut adjacency = vec![Vec::new(); num_vertices];
        let mut incident = vec![Vec::new(); num_vertices];
        for (e, &(u, v)) in edges.iter().enumerate() {
            adjacency[u].push(v);
            incident[u].push(e);
            adjacency[v].push(u);
            incident[v].push(e);
        }
        let max_degree = adjacency.iter().map(Vec::len).max().unwrap_or(0);
        Ok(Self {
            num_vertices,
            edges,
            adjacency,
            incident,
            max_degree,
        })
    }

    /// Builds a graph from 1-based edge pairs, as they appear in graph files.
    pub fn from_one_based(num_vertices: usize, edge_list: &[(usize, usize)]) -> Result<Self> {
        let mut zero_based = Vec::with_capacity(edge_list.len());
        for &(u, v) in edge_list {
            if u == 0 || v == 0 {
                return Err(Error::Graph(format!("edge ({u}, {v}): vertex labels are 1-based")));
            }
            zero_based.push((u - 1, v - 1));
        }
        Self::new(num_vertices, &zero_based)
    }

    pub fn path(n: usize) -> Self {
        let edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        Self::new(n, &edges).expect("path graph is simple")
    }

    pub fn cycle(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::Graph("cycle needs at least 3 vertices".into()));
        }
        let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        Self::new(n, &edges)
    }

    pub fn num_vertices(&self) -> usize {
        self.num_vertices
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    /// Edge indices incident to `v`, aligned with [`neighbors`](Self::neighbors).
    pub fn incident_edges(&self, v: usize) -> &[usize] {
        &self.incident[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    pub fn edge_index(&self, u: usize, v: usize) -> Option<usize> {
        let key = (u.min(v), u.max(v));
        self.edges.binary_search(&key).ok()
    }

    /// Canonical text form: `|V|` then one sorted 1-based edge per line.
    pub fn to_text(&self) -> String {
        let mut out = format!("{}\n", self.num_vertices);
        for &(u, v) in &self.edges {
            let _ = writeln!(out, "{} {}", u + 1, v + 1);
        }
        out
    }

    /// SHA-256 of the canonical text form, hex encoded.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_text().as_bytes()))
    }

    /// Parses the plain-text graph format. Blank lines and `#` comments are
    /// ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty());
        let (line_no, header) = lines.next().ok_or_else(|| Error::Parse {
            location: "line 1".into(),
            message: "missing vertex count".into(),
        })?;
        let n: usize = header.parse().map_err(|_| Error::Parse {
            location: format!("line {line_no}"),
            message: format!("expected vertex count, found {header:?}"),
        })?;
        let mut edges = Vec::new();
        for (line_no, line) in lines {
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 2 {
                return Err(Error::Parse {
                    location: format!("line {line_no}"),
                    message: format!("expected \"u v\", found {line:?}"),
                });
            }
            let parse = |s: &str, field: &str| {
                s.parse::<usize>().map_err(|_| Error::Parse {
                    location: format!("line {line_no}, field {field}"),
                    message: format!("expected a vertex label, found {s:?}"),
                })
            };
            edges.push((parse(fields[0], "u")?, parse(fields[1], "v")?));
        }
        Self::from_one_based(n, &edges)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn path_graph_degrees() {
        let g = NetworkGraph::from_one_based(4, &[(1, 2), (2, 3), (3, 4)]).unwrap();
        assert_eq!(g.max_degree(), 2);
        assert_eq!(g.num_edges(), 3);
        assert_eq!(g.neighbors(1), &[0, 2]);
    }

    #[test]
    fn triangle() {
        let g = NetworkGraph::from_one_based(3, &[(1, 2), (2, 3), (1, 3)]).unwrap();
        assert_eq!(g.max_degree(), 2);
        assert!(g.num_edges() <= g.num_vertices() * g.max_degree() / 2);
    }

    #[test]
    fn rejects_self_loop() {
        let err = NetworkGraph::from_one_based(2, &[(1, 1)]).unwrap_err();
        assert!(matches!(err, Error::SelfLoop { vertex: 1 }));
    }

    #[test]
    fn rejects_duplicate_either_orientation() {
        let err = NetworkGraph::from_one_based(3, &[(1, 2), (2, 1)]).unwrap_err();
        assert!(matches!(err, Error::DuplicateEdge { u: 1, v: 2 }));
    }

    #[test]
    fn rejects_out_of_range_vertex() {
        assert!(NetworkGraph::from_one_based(2, &[(1, 3)]).is_err());
        assert!(NetworkGraph::from_one_based(2, &[(0, 1)]).is_err());
    }

    #[test]
    fn text_round_trip_and_hash() {
        let g = NetworkGraph::from_one_based(4, &[(3, 4), (2, 1), (2, 3)]).unwrap();
        let text = g.to_text();
        assert_eq!(text, "4\n1 2\n2 3\n3 4\n");
        let back = NetworkGraph::parse(&text).unwrap();
        assert_eq!(back, g);
        assert_eq!(back.hash(), NetworkGraph::path(4).hash());
    }

    #[test]
    fn parse_reports_line() {
        let err = NetworkGraph::parse("3\n1 2\n2 x\n").unwrap_err();
        match err {
            Error::Parse { location, .. } => assert!(location.contains("line 3")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn isolated_vertices_allowed() {
        let g = NetworkGraph::new(3, &[]).unwrap();
        assert_eq!(g.max_degree(), 0);
        assert!(g.neighbors(2).is_empty());
    }
}
