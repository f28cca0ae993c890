//! Exact optimal transport on small finite supports.
//!
//! The transportation problem is solved by successive shortest augmenting
//! paths on the bipartite residual graph, with node potentials keeping
//! reduced costs nonnegative so that each path search is a dense Dijkstra.
//! The final potentials are returned as a dual certificate.

use super::Dist;
use crate::error::{Error, Result};
use crate::graph::NetworkGraph;
use crate::profile::{space_size, ProfileSpace};

pub const DEFAULT_OT_CAP: usize = 256;

/// Masses at or below this are treated as exhausted.
const MASS_EPS: f64 = 1e-18;

#[derive(Debug, Clone)]
pub struct TransportSolution {
    pub cost: f64,
    /// `(i, j, mass)` for every positive entry of the optimal plan.
    pub plan: Vec<(usize, usize, f64)>,
    /// Dual variables `a_i` (supply side) and `b_j` (demand side) with
    /// `a_i + b_j <= cost(i, j)`, tight on the plan's support.
    pub supply_duals: Vec<f64>,
    pub demand_duals: Vec<f64>,
}

/// Solves `min sum c_ij pi_ij` over plans with row sums `supply` and column
/// sums `demand`. Costs must be nonnegative; the two totals should agree.
pub fn transport_exact(supply: &[f64], demand: &[f64], cost: impl Fn(usize, usize) -> f64) -> TransportSolution {
    let m = supply.len();
    let k = demand.len();
    let c: Vec<f64> = (0..m)
        .flat_map(|i| (0..k).map(move |j| (i, j)))
        .map(|(i, j)| cost(i, j))
        .collect();
    let mut flow = vec![0.0; m * k];
    let mut rem_s = supply.to_vec();
    let mut rem_d = demand.to_vec();
    // Potentials: sources 0..m, sinks m..m+k.
    let mut pot = vec![0.0; m + k];
    let mut dist = vec![0.0; m + k];
    let mut pred = vec![usize::MAX; m + k];
    let mut done = vec![false; m + k];

    loop {
        if !rem_s.iter().any(|&s| s > MASS_EPS) || !rem_d.iter().any(|&d| d > MASS_EPS) {
            break;
        }
        dist.fill(f64::INFINITY);
        pred.fill(usize::MAX);
        done.fill(false);
        for i in 0..m {
            if rem_s[i] > MASS_EPS {
                dist[i] = 0.0;
            }
        }
        for _ in 0..(m + k) {
            let mut best = usize::MAX;
            let mut best_d = f64::INFINITY;
            for (node, (&d, &fin)) in dist.iter().zip(&done).enumerate() {
                if !fin && d < best_d {
                    best = node;
                    best_d = d;
                }
            }
            if best == usize::MAX {
                break;
            }
            done[best] = true;
            if best < m {
                let i = best;
                for j in 0..k {
                    let node = m + j;
                    if done[node] {
                        continue;
                    }
                    let rc = (c[i * k + j] + pot[i] - pot[node]).max(0.0);
                    if best_d + rc < dist[node] {
                        dist[node] = best_d + rc;
                        pred[node] = i;
                    }
                }
            } else {
                let j = best - m;
                for i in 0..m {
                    if done[i] || flow[i * k + j] <= MASS_EPS {
                        continue;
                    }
                    let rc = (-c[i * k + j] + pot[best] - pot[i]).max(0.0);
                    if best_d + rc < dist[i] {
                        dist[i] = best_d + rc;
                        pred[i] = best;
                    }
                }
            }
        }
        let target = (0..k)
            .filter(|&j| rem_d[j] > MASS_EPS && dist[m + j].is_finite())
            .min_by(|&a, &b| dist[m + a].total_cmp(&dist[m + b]));
        let Some(j_target) = target else { break };
        let d_target = dist[m + j_target];
        for (p, &d) in pot.iter_mut().zip(&dist) {
            *p += d.min(d_target);
        }

        // Walk back to the originating source, collecting the bottleneck.
        let mut bottleneck = rem_d[j_target];
        let mut node = m + j_target;
        while pred[node] != usize::MAX {
            let prev = pred[node];
            if prev >= m {
                // Backward arc: sink prev -> source node cancels flow[node][prev].
                bottleneck = bottleneck.min(flow[node * k + (prev - m)]);
            }
            node = prev;
        }
        let source = node;
        bottleneck = bottleneck.min(rem_s[source]);

        let mut node = m + j_target;
        while pred[node] != usize::MAX {
            let prev = pred[node];
            if node >= m {
                flow[prev * k + (node - m)] += bottleneck;
            } else {
                let idx = node * k + (prev - m);
                flow[idx] = (flow[idx] - bottleneck).max(0.0);
            }
            node = prev;
        }
        rem_s[source] -= bottleneck;
        rem_d[j_target] -= bottleneck;
        if rem_s[source] <= MASS_EPS {
            rem_s[source] = 0.0;
        }
        if rem_d[j_target] <= MASS_EPS {
            rem_d[j_target] = 0.0;
        }
    }

    let mut plan = Vec::new();
    let mut total = 0.0;
    for i in 0..m {
        for j in 0..k {
            let f = flow[i * k + j];
            if f > 0.0 {
                plan.push((i, j, f));
                total += f * c[i * k + j];
            }
        }
    }
    TransportSolution {
        cost: total,
        plan,
        supply_duals: pot[..m].iter().map(|p| -p).collect(),
        demand_duals: pot[m..].to_vec(),
    }
}

/// Exact `W_1(mu, nu)` on the profile space under the Hamming metric, with
/// the default cap of [`DEFAULT_OT_CAP`] states.
pub fn wasserstein1_hamming(mu: &Dist, nu: &Dist, graph: &NetworkGraph, q: usize) -> Result<f64> {
    wasserstein1_hamming_with_cap(mu, nu, graph, q, DEFAULT_OT_CAP)
}

pub fn wasserstein1_hamming_with_cap(mu: &Dist, nu: &Dist, graph: &NetworkGraph, q: usize, cap: usize) -> Result<f64> {
    let n = graph.num_vertices();
    let states = space_size(n, q).unwrap_or(u128::MAX);
    if states > cap as u128 {
        return Err(Error::OtCapExceeded { states, cap });
    }
    let space = ProfileSpace::new(n, q, cap)?;
    if mu.len() != space.size() || nu.len() != space.size() {
        return Err(Error::Shape(format!(
            "distributions over {} and {} points, profile space has {}",
            mu.len(),
            nu.len(),
            space.size()
        )));
    }
    Ok(hamming_transport(mu.probs(), nu.probs(), &space).cost)
}

/// Shared mass stays in place (optimal for any metric ground cost); only the
/// residuals, which have disjoint supports, are transported.
pub(crate) fn hamming_transport(mu: &[f64], nu: &[f64], space: &ProfileSpace) -> TransportSolution {
    let mut sources = Vec::new();
    let mut sinks = Vec::new();
    for (x, (&a, &b)) in mu.iter().zip(nu).enumerate() {
        if a > b {
            sources.push((x, a - b));
        } else if b > a {
            sinks.push((x, b - a));
        }
    }
    let src_profiles: Vec<Vec<usize>> = sources.iter().map(|&(x, _)| space.profile(x)).collect();
    let dst_profiles: Vec<Vec<usize>> = sinks.iter().map(|&(y, _)| space.profile(y)).collect();
    let supply: Vec<f64> = sources.iter().map(|s| s.1).collect();
    let demand: Vec<f64> = sinks.iter().map(|s| s.1).collect();
    let sol = transport_exact(&supply, &demand, |i, j| {
        src_profiles[i]
            .iter()
            .zip(&dst_profiles[j])
            .filter(|(a, b)| a != b)
            .count() as f64
    });
    TransportSolution {
        cost: sol.cost,
        plan: sol
            .plan
            .into_iter()
            .map(|(i, j, f)| (sources[i].0, sinks[j].0, f))
            .collect(),
        supply_duals: sol.supply_duals,
        demand_duals: sol.demand_duals,
    }
}
