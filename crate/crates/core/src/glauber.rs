//! Decentralized play: in each round one agent, chosen uniformly, resamples
//! its action from a Gibbs conditional given its neighbors' current actions.

use std::borrow::Cow;
use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::centralized::{centralized_strategies, RegretLedger};
use crate::cost::{DefaultMeasure, NetworkCost, RunningAvgCost};
use crate::error::{Error, Result};
use crate::graph::NetworkGraph;
use crate::instance::{DenseSpace, Instance};
use crate::measures::{log_sum_exp, Dist};
use crate::theory::{decentralized_regret_bound, ThmConstants};

/// Boundary tables are precomputed when there are at most this many boundary configurations.
pub const DENSE_BOUNDARY_CAP: usize = 4096;

/// `∝ mu_{v,0}(a) exp(-β F_v(a, x_dv))` for each action `a`, with the boundary
/// listed in the order of [`NetworkGraph::neighbors`].
pub fn local_conditional(
    graph: &NetworkGraph,
    v: usize,
    avg: &RunningAvgCost,
    boundary: &[usize],
    mu_v0: &[f64],
    beta: f64,
) -> Result<Dist> {
    let f = avg.avg();
    if mu_v0.len() != f.q() {
        return Err(Error::Shape(format!(
            "default measure of length {} for q = {}",
            mu_v0.len(),
            f.q()
        )));
    }
    let mut log_w = Vec::with_capacity(f.q());
    for (a, &m) in mu_v0.iter().enumerate() {
        log_w.push(m.ln() - beta * f.local_cost(graph, v, a, boundary)?);
    }
    Dist::from_log_weights(&log_w)
}

fn conditional_probs(
    f: &NetworkCost,
    graph: &NetworkGraph,
    v: usize,
    x: &[usize],
    mu_v0: &[f64],
    beta: f64,
    out: &mut [f64],
) {
    for (a, slot) in out.iter_mut().enumerate() {
        *slot = mu_v0[a].ln() - beta * f.local_value(graph, v, a, x);
    }
    let lse = log_sum_exp(out);
    for slot in out.iter_mut() {
        *slot = (*slot - lse).exp();
    }
}

/// The conditional law of one vertex given its boundary, for one round.
#[derive(Debug, Clone)]
pub struct LocalConditional {
    v: usize,
    q: usize,
    /// Row-major `q^|dv| x q` table indexed by the boundary code, when small enough.
    table: Option<Vec<f64>>,
}

impl LocalConditional {
    fn build(graph: &NetworkGraph, v: usize, avg: &NetworkCost, mu_v0: &[f64], beta: f64) -> Self {
        let q = avg.q();
        let deg = graph.degree(v);
        let configs = (q as u128).checked_pow(deg as u32).unwrap_or(u128::MAX);
        let table = (configs <= DENSE_BOUNDARY_CAP as u128).then(|| {
            let configs = configs as usize;
            let mut x = vec![0usize; graph.num_vertices()];
            let mut table = vec![0.0; configs * q];
            for code in 0..configs {
                let mut c = code;
                for &u in graph.neighbors(v) {
                    x[u] = c % q;
                    c /= q;
                }
                conditional_probs(avg, graph, v, &x, mu_v0, beta, &mut table[code * q..(code + 1) * q]);
            }
            table
        });
        Self { v, q, table }
    }

    pub fn vertex(&self) -> usize {
        self.v
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn is_tabulated(&self) -> bool {
        self.table.is_some()
    }
}

/// One round's Glauber kernel, built from `F_{t-1}`.
#[derive(Debug, Clone)]
pub struct GlauberKernel<'a> {
    graph: &'a NetworkGraph,
    mu0: &'a DefaultMeasure,
    avg: Cow<'a, NetworkCost>,
    beta: f64,
    locals: Vec<LocalConditional>,
}

impl<'a> GlauberKernel<'a> {
    /// Kernel of round `t` from `avg = F_{t-1}`.
    pub fn new(graph: &'a NetworkGraph, mu0: &'a DefaultMeasure, avg: &'a RunningAvgCost, beta: f64) -> Result<Self> {
        Self::from_cost(graph, mu0, Cow::Borrowed(avg.avg()), beta)
    }

    pub(crate) fn from_cost(
        graph: &'a NetworkGraph,
        mu0: &'a DefaultMeasure,
        avg: Cow<'a, NetworkCost>,
        beta: f64,
    ) -> Result<Self> {
        avg.check_shape(graph)?;
        mu0.check_graph(graph, avg.q())?;
        let locals = (0..graph.num_vertices())
            .map(|v| LocalConditional::build(graph, v, &avg, mu0.vertex(v), beta))
            .collect();
        Ok(Self {
            graph,
            mu0,
            avg,
            beta,
            locals,
        })
    }

    pub fn graph(&self) -> &NetworkGraph {
        self.graph
    }

    pub fn q(&self) -> usize {
        self.avg.q()
    }

    pub fn local(&self, v: usize) -> &LocalConditional {
        &self.locals[v]
    }

    /// `P_v(. | x_dv)` written into `out`, reading the boundary from the full profile `x`.
    pub fn conditional_into(&self, v: usize, x: &[usize], out: &mut [f64]) {
        let q = self.q();
        match &self.locals[v].table {
            Some(table) => {
                let code = self.graph.neighbors(v).iter().rev().fold(0, |acc, &u| acc * q + x[u]);
                out.copy_from_slice(&table[code * q..(code + 1) * q]);
            }
            None => conditional_probs(&self.avg, self.graph, v, x, self.mu0.vertex(v), self.beta, out),
        }
    }

    pub fn conditional(&self, v: usize, x: &[usize]) -> Vec<f64> {
        let mut out = vec![0.0; self.q()];
        self.conditional_into(v, x, &mut out);
        out
    }

    /// `P(y | x)` for explicit profiles.
    pub fn transition(&self, x: &[usize], y: &[usize]) -> f64 {
        let n = x.len();
        let mut diff = None;
        for v in 0..n {
            if x[v] != y[v] {
                if diff.is_some() {
                    return 0.0;
                }
                diff = Some(v);
            }
        }
        let mut p = vec![0.0; self.q()];
        match diff {
            Some(v) => {
                self.conditional_into(v, x, &mut p);
                p[y[v]] / n as f64
            }
            None => {
                (0..n)
                    .map(|v| {
                        self.conditional_into(v, x, &mut p);
                        p[x[v]]
                    })
                    .sum::<f64>()
                    / n as f64
            }
        }
    }

    /// Sparse row: `(profile index, probability)` for `x` and its single-site neighbors.
    pub fn row_sparse(&self, dense: &DenseSpace, x_index: usize) -> Vec<(usize, f64)> {
        let space = &dense.space;
        let n = space.num_vertices();
        let q = self.q();
        let x = space.profile(x_index);
        let mut p = vec![0.0; q];
        let mut stay = 0.0;
        let mut out = Vec::with_capacity(n * (q - 1) + 1);
        out.push((x_index, 0.0));
        for v in 0..n {
            self.conditional_into(v, &x, &mut p);
            let stride = space.stride(v);
            let base = x_index - x[v] * stride;
            for (a, &pa) in p.iter().enumerate() {
                if a == x[v] {
                    stay += pa;
                } else {
                    out.push((base + a * stride, pa / n as f64));
                }
            }
        }
        out[0].1 = stay / n as f64;
        out
    }

    /// Dense row `P(. | x)` over the profile space.
    pub fn kernel_row(&self, dense: &DenseSpace, x_index: usize) -> Result<Dist> {
        if x_index >= dense.size() {
            return Err(Error::InvalidArgument(format!("profile index {x_index} out of range")));
        }
        let mut row = vec![0.0; dense.size()];
        for (y, p) in self.row_sparse(dense, x_index) {
            row[y] += p;
        }
        Dist::new(row)
    }

    /// `mu P`, computed by pulling mass into each destination state in parallel.
    pub fn apply(&self, mu: &Dist, dense: &DenseSpace) -> Result<Dist> {
        let space = &dense.space;
        if mu.len() != space.size() {
            return Err(Error::Shape("distribution does not match the profile space".into()));
        }
        let n = space.num_vertices();
        let q = self.q();
        let probs = mu.probs();
        let out: Vec<f64> = (0..space.size())
            .into_par_iter()
            .map_init(
                || (vec![0usize; n], vec![0.0; q]),
                |(y, p), yi| {
                    space.decode(yi, y);
                    let mut total = 0.0;
                    for v in 0..n {
                        // The boundary of v is the same in y and in every x that differs from y only at v.
                        self.conditional_into(v, y, p);
                        let stride = space.stride(v);
                        let base = yi - y[v] * stride;
                        let inflow: f64 = (0..q).map(|a| probs[base + a * stride]).sum();
                        total += p[y[v]] * inflow;
                    }
                    total / n as f64
                },
            )
            .collect();
        Ok(Dist::from_normalized(out))
    }
}

/// Running averages `F_0, ..., F_{T-1}`, one per round's kernel.
pub(crate) fn kernel_averages(graph: &NetworkGraph, q: usize, schedule: &[NetworkCost]) -> Result<Vec<NetworkCost>> {
    let mut avg = RunningAvgCost::new(graph, q);
    let mut out = Vec::with_capacity(schedule.len());
    for f in schedule {
        f.check_shape(graph)?;
        out.push(avg.avg().clone());
        avg.update_in_place(f);
    }
    Ok(out)
}

/// `mu_0, mu_1, ..., mu_T` with `mu_t = mu_{t-1} P_t`.
pub fn evolve_exact(instance: &Instance, dense: &DenseSpace, schedule: &[NetworkCost]) -> Result<Vec<Dist>> {
    let averages = kernel_averages(&instance.graph, instance.q, schedule)?;
    let mut out = Vec::with_capacity(schedule.len() + 1);
    out.push(dense.mu0.clone());
    for avg in averages {
        let kernel = GlauberKernel::from_cost(&instance.graph, &instance.mu0, Cow::Owned(avg), instance.beta)?;
        let next = kernel.apply(out.last().expect("nonempty"), dense)?;
        out.push(next);
    }
    Ok(out)
}

/// Realized play of the decentralized protocol.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePath {
    pub seed: u64,
    pub replica: u64,
    /// `U_1, ..., U_T`.
    pub activations: Vec<usize>,
    /// `X_0, ..., X_T`.
    pub profiles: Vec<Vec<usize>>,
    /// `f_t(X_t)` for `t = 1..=T`.
    pub costs: Vec<f64>,
}

impl SamplePath {
    pub fn horizon(&self) -> usize {
        self.activations.len()
    }

    /// Sum of realized costs, a sample-path proxy for the expected loss.
    pub fn cumulative_cost(&self) -> f64 {
        self.costs.iter().sum()
    }

    /// CSV with columns `t,U_t,x_1..x_n,cost`; actions and vertices are 1-based.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let n = self.profiles.first().map_or(0, Vec::len);
        write!(w, "t,U_t")?;
        for v in 1..=n {
            write!(w, ",x_{v}")?;
        }
        writeln!(w, ",cost")?;
        for (t, x) in self.profiles.iter().enumerate() {
            if t == 0 {
                write!(w, "0,")?;
            } else {
                write!(w, "{t},{}", self.activations[t - 1] + 1)?;
            }
            for a in x {
                write!(w, ",{}", a + 1)?;
            }
            if t == 0 {
                writeln!(w, ",")?;
            } else {
                writeln!(w, ",{}", self.costs[t - 1])?;
            }
        }
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(file);
        self.write_csv(&mut w).map_err(|e| Error::io(path, e))?;
        w.flush().map_err(|e| Error::io(path, e))
    }
}

/// Independent activation and action streams for one replica.
fn replica_rngs(seed: u64, replica: u64) -> (ChaCha8Rng, ChaCha8Rng) {
    let mut activation = ChaCha8Rng::seed_from_u64(seed);
    activation.set_stream(2 * replica);
    let mut action = ChaCha8Rng::seed_from_u64(seed);
    action.set_stream(2 * replica + 1);
    (activation, action)
}

/// Inverse-CDF draw; a uniform exactly on a boundary goes to the lower index.
fn sample_index(probs: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let u: f64 = rng.random();
    let mut cdf = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        cdf += p;
        if p > 0.0 && u <= cdf {
            return i;
        }
    }
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

struct Walker<'k> {
    kernels: &'k [GlauberKernel<'k>],
    activation: ChaCha8Rng,
    action: ChaCha8Rng,
    x: Vec<usize>,
    scratch: Vec<f64>,
}

impl<'k> Walker<'k> {
    fn start(kernels: &'k [GlauberKernel<'k>], mu0: &DefaultMeasure, seed: u64, replica: u64) -> Self {
        let (activation, mut action) = replica_rngs(seed, replica);
        let x = mu0.per_vertex().iter().map(|m| sample_index(m, &mut action)).collect();
        Self {
            kernels,
            activation,
            action,
            x,
            scratch: vec![0.0; mu0.q()],
        }
    }

    /// Plays round `t` (1-based) and returns the activated vertex.
    fn step(&mut self, t: usize) -> usize {
        let n = self.x.len();
        let v = self.activation.random_range(0..n);
        self.kernels[t - 1].conditional_into(v, &self.x, &mut self.scratch);
        self.x[v] = sample_index(&self.scratch, &mut self.action);
        v
    }
}

fn build_kernels<'a>(instance: &'a Instance, averages: Vec<NetworkCost>) -> Result<Vec<GlauberKernel<'a>>> {
    averages
        .into_iter()
        .map(|avg| GlauberKernel::from_cost(&instance.graph, &instance.mu0, Cow::Owned(avg), instance.beta))
        .collect()
}

/// Simulates replica 0 of the protocol for all rounds of `schedule`.
pub fn simulate_path(instance: &Instance, schedule: &[NetworkCost], seed: u64) -> Result<SamplePath> {
    simulate_replica(instance, schedule, seed, 0)
}

pub fn simulate_replica(instance: &Instance, schedule: &[NetworkCost], seed: u64, replica: u64) -> Result<SamplePath> {
    let kernels = build_kernels(instance, kernel_averages(&instance.graph, instance.q, schedule)?)?;
    let mut walker = Walker::start(&kernels, &instance.mu0, seed, replica);
    let mut path = SamplePath {
        seed,
        replica,
        activations: Vec::with_capacity(schedule.len()),
        profiles: vec![walker.x.clone()],
        costs: Vec::with_capacity(schedule.len()),
    };
    for (t, f) in schedule.iter().enumerate() {
        let v = walker.step(t + 1);
        path.activations.push(v);
        path.costs.push(f.value(&instance.graph, &walker.x));
        path.profiles.push(walker.x.clone());
    }
    Ok(path)
}

/// Empirical distributions of `X_t` over `replicas` independent paths, one per checkpoint.
pub fn empirical_distributions(
    instance: &Instance,
    dense: &DenseSpace,
    schedule: &[NetworkCost],
    seed: u64,
    replicas: u64,
    checkpoints: &[usize],
) -> Result<Vec<Dist>> {
    if replicas == 0 {
        return Err(Error::InvalidArgument("at least one replica is required".into()));
    }
    let last = checkpoints.iter().copied().max().unwrap_or(0);
    if last > schedule.len() {
        return Err(Error::InvalidArgument(format!(
            "checkpoint {last} beyond horizon {}",
            schedule.len()
        )));
    }
    let kernels = build_kernels(
        instance,
        kernel_averages(&instance.graph, instance.q, &schedule[..last])?,
    )?;
    let size = dense.size();
    let counts = (0..replicas)
        .into_par_iter()
        .fold(
            || vec![0u64; checkpoints.len() * size],
            |mut acc, r| {
                let mut walker = Walker::start(&kernels, &instance.mu0, seed, r);
                for t in 0..=last {
                    if t > 0 {
                        walker.step(t);
                    }
                    let idx = dense.space.encode(&walker.x);
                    for (k, &c) in checkpoints.iter().enumerate() {
                        if c == t {
                            acc[k * size + idx] += 1;
                        }
                    }
                }
                acc
            },
        )
        .reduce(
            || vec![0u64; checkpoints.len() * size],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                a
            },
        );
    Ok(counts
        .chunks(size)
        .map(|c| Dist::from_normalized(c.iter().map(|&k| k as f64 / replicas as f64).collect()))
        .collect())
}

/// Mean cumulative realized cost over replicas, usable beyond the dense cap.
pub fn mean_cumulative_cost(instance: &Instance, schedule: &[NetworkCost], seed: u64, replicas: u64) -> Result<f64> {
    if replicas == 0 {
        return Err(Error::InvalidArgument("at least one replica is required".into()));
    }
    let kernels = build_kernels(instance, kernel_averages(&instance.graph, instance.q, schedule)?)?;
    let per_replica: Vec<f64> = (0..replicas)
        .into_par_iter()
        .map(|r| {
            let mut walker = Walker::start(&kernels, &instance.mu0, seed, r);
            let mut sum = 0.0;
            for (t, f) in schedule.iter().enumerate() {
                walker.step(t + 1);
                sum += f.value(&instance.graph, &walker.x);
            }
            sum
        })
        .collect();
    // Summed in replica order so the result does not depend on thread scheduling.
    Ok(per_replica.iter().sum::<f64>() / replicas as f64)
}

/// Regret of the Glauber strategy `mu_t` against the best fixed distribution,
/// with the local-interaction bound when `Δβ < 1`.
pub fn decentralized_regret(schedule: &[NetworkCost], instance: &Instance, dense: &DenseSpace) -> Result<RegretLedger> {
    let mus = evolve_exact(instance, dense, schedule)?;
    let constants = ThmConstants::new(instance).ok();
    RegretLedger::from_strategies(&mus[1..], schedule, instance, dense, |t| {
        constants
            .as_ref()
            .and_then(|c| decentralized_regret_bound(c, instance, t).ok())
    })
}

/// `R^LI_T - R_T - sum_t (l_t(mu_t) - l_t(pi_t))` at the full horizon; zero up to rounding.
pub fn regret_decomposition_residual(schedule: &[NetworkCost], instance: &Instance, dense: &DenseSpace) -> Result<f64> {
    let li = decentralized_regret(schedule, instance, dense)?;
    let pis = centralized_strategies(instance, dense, schedule)?;
    let central = RegretLedger::from_strategies(&pis, schedule, instance, dense, |_| None)?;
    let gap: f64 = li
        .per_round_losses
        .iter()
        .zip(&central.per_round_losses)
        .map(|(a, b)| a - b)
        .sum();
    Ok(li.final_regret() - central.final_regret() - gap)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::centralized::centralized_strategy_closed_form;
    use crate::instance::DEFAULT_DENSE_CAP;
    use crate::measures::tv_distance;

    fn random_cost(graph: &NetworkGraph, q: usize, rng: &mut ChaCha8Rng) -> NetworkCost {
        let phi = (0..graph.num_vertices())
            .map(|_| (0..q).map(|_| rng.random_range(-1.0..=1.0)).collect())
            .collect();
        let psi = (0..graph.num_edges())
            .map(|_| (0..q * q).map(|_| rng.random_range(-1.0..=1.0)).collect())
            .collect();
        NetworkCost::new(graph, q, phi, psi).unwrap()
    }

    fn schedule(inst: &Instance, len: usize, seed: u64) -> Vec<NetworkCost> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..len).map(|_| random_cost(&inst.graph, inst.q, &mut rng)).collect()
    }

    #[test]
    fn conditional_at_zero_average_is_default() {
        let g = NetworkGraph::path(4);
        let avg = RunningAvgCost::new(&g, 3);
        let d = local_conditional(&g, 1, &avg, &[2, 0], &[0.5, 0.3, 0.2], 0.7).unwrap();
        for (a, b) in d.probs().iter().zip([0.5, 0.3, 0.2]) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn conditional_two_point_by_hand() {
        let g = NetworkGraph::path(4);
        let phi = vec![vec![0.0, 0.0], vec![0.3, -0.4], vec![0.0, 0.0], vec![0.0, 0.0]];
        // Edge (0,1) table indexed [x_0 * 2 + x_1]; edge (1,2) indexed [x_1 * 2 + x_2].
        let psi = vec![vec![0.1, 0.5, -0.2, 0.9], vec![0.6, -0.7, 0.2, 0.0], vec![0.0; 4]];
        let f = NetworkCost::new(&g, 2, phi, psi).unwrap();
        let avg = RunningAvgCost::new(&g, 2).update(&f);
        // Boundary x_0 = 1, x_2 = 0 (0-based actions).
        let d = local_conditional(&g, 1, &avg, &[1, 0], &[0.5, 0.5], 0.2).unwrap();
        let e0: f64 = 0.5 * (0.3 - 0.2 + 0.6);
        let e1: f64 = 0.5 * (-0.4 + 0.9 + 0.2);
        let p0 = (-0.2 * e0).exp() / ((-0.2 * e0).exp() + (-0.2 * e1).exp());
        assert!((d.prob(0) - p0).abs() < 1e-15);
    }

    #[test]
    fn no_interaction_ignores_boundary() {
        let g = NetworkGraph::cycle(5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let phi = (0..5)
            .map(|_| (0..3).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let f = NetworkCost::new(&g, 3, phi, vec![vec![0.0; 9]; 5]).unwrap();
        let avg = RunningAvgCost::new(&g, 3).update(&f);
        let m = [0.2, 0.3, 0.5];
        let a = local_conditional(&g, 2, &avg, &[0, 0], &m, 0.9).unwrap();
        let b = local_conditional(&g, 2, &avg, &[2, 1], &m, 0.9).unwrap();
        assert_eq!(a.probs(), b.probs());
    }

    #[test]
    fn tabulated_and_direct_agree() {
        let inst = Instance::uniform(NetworkGraph::cycle(4).unwrap(), 3, 0.3).unwrap();
        let s = schedule(&inst, 3, 2);
        let avg = RunningAvgCost::from_costs(&inst.graph, 3, &s);
        let kernel = GlauberKernel::new(&inst.graph, &inst.mu0, &avg, 0.3).unwrap();
        assert!(kernel.local(0).is_tabulated());
        let x = [2, 0, 1, 2];
        for v in 0..4 {
            let boundary: Vec<usize> = inst.graph.neighbors(v).iter().map(|&u| x[u]).collect();
            let direct = local_conditional(&inst.graph, v, &avg, &boundary, inst.mu0.vertex(v), 0.3).unwrap();
            for (a, b) in kernel.conditional(v, &x).iter().zip(direct.probs()) {
                assert!((a - b).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn untabulated_vertex_computes_on_demand() {
        // A star with 13 leaves and q = 2 has 8192 boundary configurations at the center.
        let edges: Vec<(usize, usize)> = (1..14).map(|u| (0, u)).collect();
        let g = NetworkGraph::new(14, &edges).unwrap();
        let mu0 = DefaultMeasure::uniform(14, 2);
        let f = NetworkCost::constant(&g, 2, 0.5, -0.25).unwrap();
        let avg = RunningAvgCost::new(&g, 2).update(&f);
        let kernel = GlauberKernel::new(&g, &mu0, &avg, 0.1).unwrap();
        assert!(!kernel.local(0).is_tabulated());
        assert!(kernel.local(1).is_tabulated());
        let p = kernel.conditional(0, &[0; 14]);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn first_round_stay_probability() {
        let inst = Instance::canonical();
        let dense = inst.dense(DEFAULT_DENSE_CAP).unwrap();
        let avg = RunningAvgCost::new(&inst.graph, 2);
        let kernel = GlauberKernel::new(&inst.graph, &inst.mu0, &avg, 0.2).unwrap();
        for x in 0..16 {
            let row = kernel.kernel_row(&dense, x).unwrap();
            assert!((row.prob(x) - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn rows_are_stochastic_and_single_site() {
        let inst = Instance::uniform(NetworkGraph::cycle(3).unwrap(), 3, 0.3).unwrap();
        let dense = inst.dense(DEFAULT_DENSE_CAP).unwrap();
        let s = schedule(&inst, 5, 3);
        let avg = RunningAvgCost::from_costs(&inst.graph, 3, &s);
        let kernel = GlauberKernel::new(&inst.graph, &inst.mu0, &avg, 0.3).unwrap();
        for xi in 0..dense.size() {
            let row = kernel.kernel_row(&dense, xi).unwrap();
            assert!((row.probs().iter().sum::<f64>() - 1.0).abs() < 1e-12);
            let x = dense.space.profile(xi);
            for yi in 0..dense.size() {
                let y = dense.space.profile(yi);
                let dist = x.iter().zip(&y).filter(|(a, b)| a != b).count();
                if dist >= 2 {
                    assert_eq!(row.prob(yi), 0.0);
                }
                assert!((row.prob(yi) - kernel.transition(&x, &y)).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn stationary_gibbs_is_reversible() {
        let inst = Instance::canonical();
        let dense = inst.dense(DEFAULT_DENSE_CAP).unwrap();
        let s = schedule(&inst, 7, 4);
        let avg = RunningAvgCost::from_costs(&inst.graph, 2, &s);
        let pi = centralized_strategy_closed_form(&avg, &inst.graph, &dense, 0.2).unwrap();
        let kernel = GlauberKernel::new(&inst.graph, &inst.mu0, &avg, 0.2).unwrap();
        for xi in 0..16 {
            let x = dense.space.profile(xi);
            for yi in 0..16 {
                let y = dense.space.profile(yi);
                let lhs = pi.prob(xi) * kernel.transition(&x, &y);
                let rhs = pi.prob(yi) * kernel.transition(&y, &x);
                assert!((lhs - rhs).abs() < 1e-12);
            }
        }
        let moved = kernel.apply(&pi, &dense).unwrap();
        assert!(tv_distance(&moved, &pi).unwrap() < 1e-12);
    }

    #[test]
    fn apply_matches_row_sum() {
        let inst = Instance::uniform(NetworkGraph::path(3), 3, 0.4).unwrap();
        let dense = inst.dense(DEFAULT_DENSE_CAP).unwrap();
        let s = schedule(&inst, 4, 5);
        let avg = RunningAvgCost::from_costs(&inst.graph, 3, &s);
        let kernel = GlauberKernel::new(&inst.graph, &inst.mu0, &avg, 0.4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let w: Vec<f64> = (0..27).map(|_| rng.random::<f64>()).collect();
        let total: f64 = w.iter().sum();
        let mu = Dist::new(w.iter().map(|x| x / total).collect()).unwrap();
        let pulled = kernel.apply(&mu, &dense).unwrap();
        let mut pushed = vec![0.0; 27];
        for xi in 0..27 {
            for (yi, p) in kernel.row_sparse(&dense, xi) {
                pushed[yi] += mu.prob(xi) * p;
            }
        }
        for (a, b) in pulled.probs().iter().zip(&pushed) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn evolution_starts_at_default_and_freezes_without_costs() {
        let inst = Instance::canonical();
        let dense = inst.dense(DEFAULT_DENSE_CAP).unwrap();
        let s = schedule(&inst, 10, 7);
        let mus = evolve_exact(&inst, &dense, &s).unwrap();
        assert_eq!(mus.len(), 11);
        assert!(tv_distance(&mus[1], &mus[0]).unwrap() < 1e-12);
        for mu in &mus {
            assert!((mu.probs().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        let frozen = Instance::uniform(NetworkGraph::path(4), 2, 0.0).unwrap();
        for mu in evolve_exact(&frozen, &dense, &s).unwrap() {
            assert!(tv_distance(&mu, &dense.mu0).unwrap() < 1e-12);
        }
    }

    #[test]
    fn paths_are_reproducible_single_site() {
        let inst = Instance::canonical();
        let s = schedule(&inst, 50, 8);
        let a = simulate_path(&inst, &s, 99).unwrap();
        let b = simulate_path(&inst, &s, 99).unwrap();
        assert_eq!(a, b);
        let c = simulate_path(&inst, &s, 100).unwrap();
        assert_ne!(a.profiles, c.profiles);
        for t in 1..=50 {
            let (prev, cur) = (&a.profiles[t - 1], &a.profiles[t]);
            for v in 0..4 {
                if v != a.activations[t - 1] {
                    assert_eq!(prev[v], cur[v]);
                }
            }
            assert!((a.costs[t - 1] - s[t - 1].evaluate(&inst.graph, cur).unwrap()).abs() < 1e-15);
        }
    }

    #[test]
    fn trajectory_csv_layout() {
        let inst = Instance::canonical();
        let s = schedule(&inst, 3, 9);
        let path = simulate_path(&inst, &s, 1).unwrap();
        let mut buf = Vec::new();
        path.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "t,U_t,x_1,x_2,x_3,x_4,cost");
        assert_eq!(lines.len(), 5);
        assert!(lines[1].starts_with("0,,"));
    }

    #[test]
    fn inverse_cdf_breaks_ties_low() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(sample_index(&[1.0, 0.0], &mut rng), 0);
        assert_eq!(sample_index(&[0.0, 1.0], &mut rng), 1);
    }

    #[test]
    fn zero_schedule_regret_vanishes() {
        let inst = Instance::canonical();
        let dense = inst.dense(DEFAULT_DENSE_CAP).unwrap();
        let s = vec![NetworkCost::zero(&inst.graph, 2); 15];
        let ledger = decentralized_regret(&s, &inst, &dense).unwrap();
        assert!(ledger.cumulative_regret.iter().all(|r| r.abs() < 1e-12));
        assert_eq!(ledger.bound_values.len(), 15);
    }

    #[test]
    fn decomposition_residual_vanishes() {
        let inst = Instance::canonical();
        let dense = inst.dense(DEFAULT_DENSE_CAP).unwrap();
        let s = schedule(&inst, 30, 10);
        assert!(regret_decomposition_residual(&s, &inst, &dense).unwrap().abs() < 1e-9);
    }

    #[test]
    fn irregular_instance_has_no_bound() {
        let inst = Instance::uniform(NetworkGraph::path(4), 2, 0.6).unwrap();
        let dense = inst.dense(DEFAULT_DENSE_CAP).unwrap();
        let s = schedule(&inst, 5, 11);
        let ledger = decentralized_regret(&s, &inst, &dense).unwrap();
        assert!(ledger.bound_values.is_empty());
    }
}
