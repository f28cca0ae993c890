//! Decomposable network costs `f(x) = sum_v phi_v(x_v) + sum_{uv} psi_uv(x_u, x_v)`,
//! default product measures, and the running averages `F_t` that drive both
//! strategies.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::NetworkGraph;
use crate::measures::Dist;
use crate::profile::ProfileSpace;

/// Vertex and edge cost tables.
///
/// `edge_costs[e]` is a row-major `q x q` matrix for edge `e = (u, w)` with
/// `u < w`, indexed as `[x_u * q + x_w]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkCost {
    q: usize,
    vertex_costs: Vec<Vec<f64>>,
    edge_costs: Vec<Vec<f64>>,
}

pub(crate) fn check_entry(value: f64, location: impl FnOnce() -> String) -> Result<()> {
    if !value.is_finite() {
        return Err(Error::NonFinite(location()));
    }
    if !(-1.0..=1.0).contains(&value) {
        return Err(Error::OutOfRange {
            value,
            lo: -1.0,
            hi: 1.0,
            location: location(),
        });
    }
    Ok(())
}

impl NetworkCost {
    /// Validates shapes against `graph` and every entry against `[-1, 1]`.
    pub fn new(graph: &NetworkGraph, q: usize, vertex_costs: Vec<Vec<f64>>, edge_costs: Vec<Vec<f64>>) -> Result<Self> {
        let cost = Self {
            q,
            vertex_costs,
            edge_costs,
        };
        cost.validate(graph)?;
        Ok(cost)
    }

    /// Tables whose shapes and ranges were checked by the caller.
    pub(crate) fn from_checked_tables(q: usize, vertex_costs: Vec<Vec<f64>>, edge_costs: Vec<Vec<f64>>) -> Self {
        Self {
            q,
            vertex_costs,
            edge_costs,
        }
    }

    pub fn zero(graph: &NetworkGraph, q: usize) -> Self {
        Self {
            q,
            vertex_costs: vec![vec![0.0; q]; graph.num_vertices()],
            edge_costs: vec![vec![0.0; q * q]; graph.num_edges()],
        }
    }

    pub fn constant(graph: &NetworkGraph, q: usize, vertex: f64, edge: f64) -> Result<Self> {
        Self::new(
            graph,
            q,
            vec![vec![vertex; q]; graph.num_vertices()],
            vec![vec![edge; q * q]; graph.num_edges()],
        )
    }

    pub fn check_shape(&self, graph: &NetworkGraph) -> Result<()> {
        if self.q == 0 {
            return Err(Error::Shape("q must be positive".into()));
        }
        if self.vertex_costs.len() != graph.num_vertices() {
            return Err(Error::Shape(format!(
                "{} vertex cost tables for {} vertices",
                self.vertex_costs.len(),
                graph.num_vertices()
            )));
        }
        if self.edge_costs.len() != graph.num_edges() {
            return Err(Error::Shape(format!(
                "{} edge cost tables for {} edges",
                self.edge_costs.len(),
                graph.num_edges()
            )));
        }
        for (v, phi) in self.vertex_costs.iter().enumerate() {
            if phi.len() != self.q {
                return Err(Error::Shape(format!(
                    "vertex {} cost has {} entries, expected {}",
                    v + 1,
                    phi.len(),
                    self.q
                )));
            }
        }
        for (e, psi) in self.edge_costs.iter().enumerate() {
            if psi.len() != self.q * self.q {
                let (u, w) = graph.edges()[e];
                return Err(Error::Shape(format!(
                    "edge {{{}, {}}} cost has {} entries, expected {}",
                    u + 1,
                    w + 1,
                    psi.len(),
                    self.q * self.q
                )));
            }
        }
        Ok(())
    }

    pub fn validate(&self, graph: &NetworkGraph) -> Result<()> {
        self.check_shape(graph)?;
        for (v, phi) in self.vertex_costs.iter().enumerate() {
            for (a, &value) in phi.iter().enumerate() {
                check_entry(value, || format!("phi[vertex {}][action {}]", v + 1, a + 1))?;
            }
        }
        for (e, psi) in self.edge_costs.iter().enumerate() {
            let (u, w) = graph.edges()[e];
            for (k, &value) in psi.iter().enumerate() {
                check_entry(value, || {
                    format!(
                        "psi[edge {{{}, {}}}][{}, {}]",
                        u + 1,
                        w + 1,
                        k / self.q + 1,
                        k % self.q + 1
                    )
                })?;
            }
        }
        Ok(())
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn vertex_costs(&self) -> &[Vec<f64>] {
        &self.vertex_costs
    }

    pub fn edge_costs(&self) -> &[Vec<f64>] {
        &self.edge_costs
    }

    pub fn phi(&self, v: usize, a: usize) -> f64 {
        self.vertex_costs[v][a]
    }

    /// `psi` of edge `e` in canonical orientation `(x_min, x_max)`.
    pub fn psi(&self, e: usize, a_min: usize, a_max: usize) -> f64 {
        self.edge_costs[e][a_min * self.q + a_max]
    }

    /// `psi_{u,v}(x_u, x_v)` for an edge given in either orientation.
    pub fn psi_between(&self, graph: &NetworkGraph, u: usize, x_u: usize, v: usize, x_v: usize) -> Option<f64> {
        let e = graph.edge_index(u, v)?;
        Some(if u < v {
            self.psi(e, x_u, x_v)
        } else {
            self.psi(e, x_v, x_u)
        })
    }

    /// Unchecked evaluation; `x` must be shaped for the graph.
    pub(crate) fn value(&self, graph: &NetworkGraph, x: &[usize]) -> f64 {
        let vertex: f64 = self.vertex_costs.iter().zip(x).map(|(phi, &a)| phi[a]).sum();
        let edge: f64 = graph
            .edges()
            .iter()
            .zip(&self.edge_costs)
            .map(|(&(u, w), psi)| psi[x[u] * self.q + x[w]])
            .sum();
        vertex + edge
    }

    pub fn evaluate(&self, graph: &NetworkGraph, x: &[usize]) -> Result<f64> {
        self.check_shape(graph)?;
        if x.len() != graph.num_vertices() {
            return Err(Error::Shape(format!(
                "profile of length {} for {} vertices",
                x.len(),
                graph.num_vertices()
            )));
        }
        if let Some(v) = x.iter().position(|&a| a >= self.q) {
            return Err(Error::Shape(format!(
                "action of vertex {} outside 1..={}",
                v + 1,
                self.q
            )));
        }
        Ok(self.value(graph, x))
    }

    /// `f_v(a, x_dv) = phi_v(a) + sum_{u in dv} psi_{u,v}(x_u, a)`, reading the
    /// boundary from the full profile `x`.
    pub(crate) fn local_value(&self, graph: &NetworkGraph, v: usize, a: usize, x: &[usize]) -> f64 {
        let mut total = self.vertex_costs[v][a];
        for (&u, &e) in graph.neighbors(v).iter().zip(graph.incident_edges(v)) {
            total += if u < v {
                self.psi(e, x[u], a)
            } else {
                self.psi(e, a, x[u])
            };
        }
        total
    }

    /// Local cost at `v` for action `a` given the actions of its neighbors,
    /// listed in the order of [`NetworkGraph::neighbors`].
    pub fn local_cost(&self, graph: &NetworkGraph, v: usize, a: usize, boundary: &[usize]) -> Result<f64> {
        if v >= graph.num_vertices() {
            return Err(Error::InvalidArgument(format!("vertex {} out of range", v + 1)));
        }
        if a >= self.q {
            return Err(Error::InvalidArgument(format!(
                "action {} outside 1..={}",
                a + 1,
                self.q
            )));
        }
        let nbrs = graph.neighbors(v);
        if boundary.len() != nbrs.len() {
            return Err(Error::Shape(format!(
                "boundary of vertex {} has {} actions, expected {}",
                v + 1,
                boundary.len(),
                nbrs.len()
            )));
        }
        if boundary.iter().any(|&b| b >= self.q) {
            return Err(Error::InvalidArgument("boundary action out of range".into()));
        }
        let mut total = self.vertex_costs[v][a];
        for ((&u, &e), &x_u) in nbrs.iter().zip(graph.incident_edges(v)).zip(boundary) {
            total += if u < v {
                self.psi(e, x_u, a)
            } else {
                self.psi(e, a, x_u)
            };
        }
        Ok(total)
    }

    /// Values of `f` on every profile, in [`ProfileSpace`] index order.
    pub fn dense_values(&self, graph: &NetworkGraph, space: &ProfileSpace) -> Vec<f64> {
        space.iter().map(|x| self.value(graph, &x)).collect()
    }

    /// `self * a + other * b`, componentwise. No range validation.
    pub(crate) fn affine(&self, a: f64, other: &NetworkCost, b: f64) -> NetworkCost {
        let mix = |xs: &[Vec<f64>], ys: &[Vec<f64>]| -> Vec<Vec<f64>> {
            xs.iter()
                .zip(ys)
                .map(|(x, y)| x.iter().zip(y).map(|(p, r)| a * p + b * r).collect())
                .collect()
        };
        NetworkCost {
            q: self.q,
            vertex_costs: mix(&self.vertex_costs, &other.vertex_costs),
            edge_costs: mix(&self.edge_costs, &other.edge_costs),
        }
    }

    /// Largest absolute componentwise difference.
    pub fn max_abs_diff(&self, other: &NetworkCost) -> f64 {
        self.vertex_costs
            .iter()
            .flatten()
            .zip(other.vertex_costs.iter().flatten())
            .chain(self.edge_costs.iter().flatten().zip(other.edge_costs.iter().flatten()))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Per-vertex default distributions `mu_{v,0}`; the product is `mu_0`.
#[derive(Debug, Clone, PartialEq)]
pub struct DefaultMeasure {
    per_vertex: Vec<Vec<f64>>,
}

impl DefaultMeasure {
    /// Every entry must be strictly positive. Vectors within `1e-9` of
    /// normalized are renormalized; farther off is an error.
    pub fn new(per_vertex: Vec<Vec<f64>>) -> Result<Self> {
        if per_vertex.is_empty() {
            return Err(Error::Distribution("no vertices".into()));
        }
        let q = per_vertex[0].len();
        let mut out = Vec::with_capacity(per_vertex.len());
        for (v, probs) in per_vertex.into_iter().enumerate() {
            if probs.len() != q || q == 0 {
                return Err(Error::Shape(format!(
                    "default measure of vertex {} has {} entries, expected {q}",
                    v + 1,
                    probs.len()
                )));
            }
            if let Some(a) = probs.iter().position(|p| !(p.is_finite() && *p > 0.0)) {
                return Err(Error::Distribution(format!(
                    "mu_0 of vertex {} must charge every action (action {} has {})",
                    v + 1,
                    a + 1,
                    probs[a]
                )));
            }
            let total: f64 = probs.iter().sum();
            if (total - 1.0).abs() > 1e-9 {
                return Err(Error::Distribution(format!("mu_0 of vertex {} sums to {total}", v + 1)));
            }
            out.push(probs.into_iter().map(|p| p / total).collect());
        }
        Ok(Self { per_vertex: out })
    }

    pub fn uniform(n: usize, q: usize) -> Self {
        Self {
            per_vertex: vec![vec![1.0 / q as f64; q]; n],
        }
    }

    pub fn num_vertices(&self) -> usize {
        self.per_vertex.len()
    }

    pub fn q(&self) -> usize {
        self.per_vertex[0].len()
    }

    pub fn vertex(&self, v: usize) -> &[f64] {
        &self.per_vertex[v]
    }

    pub fn per_vertex(&self) -> &[Vec<f64>] {
        &self.per_vertex
    }

    /// `theta_d = min_v min_a mu_{v,0}(a)`.
    pub fn theta_d(&self) -> f64 {
        self.per_vertex.iter().flatten().copied().fold(f64::INFINITY, f64::min)
    }

    /// `theta = min_x mu_0(x)`, the product of per-vertex minima.
    pub fn theta(&self) -> f64 {
        self.per_vertex
            .iter()
            .map(|p| p.iter().copied().fold(f64::INFINITY, f64::min))
            .product()
    }

    pub fn check_graph(&self, graph: &NetworkGraph, q: usize) -> Result<()> {
        if self.num_vertices() != graph.num_vertices() || self.q() != q {
            return Err(Error::Shape(format!(
                "default measure is {}x{}, instance is {}x{q}",
                self.num_vertices(),
                self.q(),
                graph.num_vertices()
            )));
        }
        Ok(())
    }

    /// The product measure on the full profile space.
    pub fn dense(&self, space: &ProfileSpace) -> Dist {
        let probs = space
            .iter()
            .map(|x| x.iter().enumerate().map(|(v, &a)| self.per_vertex[v][a]).product())
            .collect();
        Dist::from_normalized(probs)
    }

    /// Plain-text form: one line per vertex with `q` probabilities.
    pub fn parse(text: &str) -> Result<Self> {
        let mut rows = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let row = line
                .split_whitespace()
                .enumerate()
                .map(|(j, s)| {
                    s.parse::<f64>().map_err(|_| Error::Parse {
                        location: format!("line {}, field {}", i + 1, j + 1),
                        message: format!("expected a probability, found {s:?}"),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        Self::new(rows)
    }
}

/// `F_t = (1/(t+1)) sum_{s<=t} f_s`, stored componentwise.
#[derive(Debug, Clone, PartialEq)]
pub struct RunningAvgCost {
    t: usize,
    avg: NetworkCost,
}

impl RunningAvgCost {
    /// `F_0 = 0`.
    pub fn new(graph: &NetworkGraph, q: usize) -> Self {
        Self {
            t: 0,
            avg: NetworkCost::zero(graph, q),
        }
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn avg(&self) -> &NetworkCost {
        &self.avg
    }

    /// `F_t = f_t / (t+1) + t F_{t-1} / (t+1)`.
    pub fn update(&self, f: &NetworkCost) -> RunningAvgCost {
        let t = self.t + 1;
        let tf = t as f64;
        RunningAvgCost {
            t,
            avg: self.avg.affine(tf / (tf + 1.0), f, 1.0 / (tf + 1.0)),
        }
    }

    pub fn update_in_place(&mut self, f: &NetworkCost) {
        *self = self.update(f);
    }

    /// Direct average of the first `t = costs.len()` rounds.
    pub fn from_costs(graph: &NetworkGraph, q: usize, costs: &[NetworkCost]) -> Self {
        let t = costs.len();
        let mut sum = NetworkCost::zero(graph, q);
        for f in costs {
            sum = sum.affine(1.0, f, 1.0);
        }
        let zero = NetworkCost::zero(graph, q);
        RunningAvgCost {
            t,
            avg: sum.affine(1.0 / (t as f64 + 1.0), &zero, 0.0),
        }
    }
}
