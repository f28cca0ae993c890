//! The centralized strategy: `pi_1 = mu_0` and
//! `pi_{t+1} ∝ (mu_0^{γ_t} pi_t exp(-γ_t β f_t))^{1/(1+γ_t)}` with `γ_t = 1/t`,
//! which has the closed form `pi_{t+1} = gibbs(mu_0, -β F_t)`.

use serde::Serialize;

use crate::cost::{NetworkCost, RunningAvgCost};
use crate::error::{Error, Result};
use crate::graph::NetworkGraph;
use crate::instance::{DenseSpace, Instance};
use crate::measures::{gibbs, kl_divergence, log_partition, Dist};

/// `β <nu, f> + D(nu || mu_0)`, with `f` given by its values on the profile space.
pub fn instantaneous_loss(nu: &Dist, f_values: &[f64], beta: f64, mu0: &Dist) -> Result<f64> {
    if f_values.len() != nu.len() {
        return Err(Error::Shape(format!(
            "cost table of length {} for support of size {}",
            f_values.len(),
            nu.len()
        )));
    }
    Ok(beta * nu.expect(f_values) + kl_divergence(nu, mu0)?)
}

/// One step of the recursive update from `pi_t` to `pi_{t+1}`, in the log domain.
pub fn centralized_step_recursive(pi_t: &Dist, f_values: &[f64], t: usize, mu0: &Dist, beta: f64) -> Result<Dist> {
    if t == 0 {
        return Err(Error::InvalidArgument("rounds are numbered from 1".into()));
    }
    if f_values.len() != pi_t.len() || mu0.len() != pi_t.len() {
        return Err(Error::Shape("strategy, cost and default measure sizes differ".into()));
    }
    let gamma = 1.0 / t as f64;
    let log_w: Vec<f64> = mu0
        .log_probs()
        .iter()
        .zip(pi_t.log_probs())
        .zip(f_values)
        .map(|((l0, lp), f)| (gamma * l0 + lp - gamma * beta * f) / (1.0 + gamma))
        .collect();
    Dist::from_log_weights(&log_w)
}

/// `pi_{t+1} = gibbs(mu_0, -β F_t)` for `avg = F_t`.
pub fn centralized_strategy_closed_form(
    avg: &RunningAvgCost,
    graph: &NetworkGraph,
    dense: &DenseSpace,
    beta: f64,
) -> Result<Dist> {
    avg.avg().check_shape(graph)?;
    let energy: Vec<f64> = dense.space.iter().map(|x| -beta * avg.avg().value(graph, &x)).collect();
    gibbs(&dense.mu0, &energy)
}

/// Running state of the centralized strategy. `pi` is materialized only when
/// the instance fits the dense cap; otherwise use
/// [`log_weight`](Self::log_weight).
#[derive(Debug, Clone)]
pub struct CentralizedState {
    t: usize,
    running_avg: RunningAvgCost,
    pi: Option<Dist>,
    beta: f64,
}

impl CentralizedState {
    /// State at round 1: `F_0 = 0`, `pi_1 = mu_0`.
    pub fn new(instance: &Instance, dense: Option<&DenseSpace>) -> Self {
        Self {
            t: 1,
            running_avg: RunningAvgCost::new(&instance.graph, instance.q),
            pi: dense.map(|d| d.mu0.clone()),
            beta: instance.beta,
        }
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// `F_{t-1}`.
    pub fn running_avg(&self) -> &RunningAvgCost {
        &self.running_avg
    }

    pub fn pi(&self) -> Option<&Dist> {
        self.pi.as_ref()
    }

    /// Unnormalized `ln pi_t(x) = ln mu_0(x) - β F_{t-1}(x)`.
    pub fn log_weight(&self, instance: &Instance, x: &[usize]) -> f64 {
        let ln_mu0: f64 = x.iter().enumerate().map(|(v, &a)| instance.mu0.vertex(v)[a].ln()).sum();
        ln_mu0 - self.beta * self.running_avg.avg().value(&instance.graph, x)
    }

    /// Reveals `f_t` and moves to round `t + 1`.
    pub fn advance(&mut self, instance: &Instance, dense: Option<&DenseSpace>, f: &NetworkCost) -> Result<()> {
        f.check_shape(&instance.graph)?;
        self.running_avg.update_in_place(f);
        self.t += 1;
        if let Some(d) = dense {
            self.pi = Some(centralized_strategy_closed_form(
                &self.running_avg,
                &instance.graph,
                d,
                self.beta,
            )?);
        }
        Ok(())
    }
}

/// `pi_1, ..., pi_{T+1}` for a schedule of length `T`.
pub fn centralized_strategies(instance: &Instance, dense: &DenseSpace, schedule: &[NetworkCost]) -> Result<Vec<Dist>> {
    let mut state = CentralizedState::new(instance, Some(dense));
    let mut out = Vec::with_capacity(schedule.len() + 1);
    out.push(dense.mu0.clone());
    for f in schedule {
        state.advance(instance, Some(dense), f)?;
        out.push(state.pi.clone().expect("dense state"));
    }
    Ok(out)
}

/// The best fixed distribution in hindsight for `sum_t l_t(nu)` and its value.
///
/// Minimizer `gibbs(mu_0, -(β/T) sum_t f_t)`, value `-T ln <mu_0, exp(-(β/T) sum_t f_t)>`.
pub fn best_static_comparator(
    schedule: &[NetworkCost],
    instance: &Instance,
    dense: &DenseSpace,
) -> Result<(Dist, f64)> {
    if schedule.is_empty() {
        return Err(Error::InvalidArgument("comparator needs T >= 1".into()));
    }
    let mut sum = vec![0.0; dense.size()];
    for f in schedule {
        f.check_shape(&instance.graph)?;
        for (s, v) in sum.iter_mut().zip(f.dense_values(&instance.graph, &dense.space)) {
            *s += v;
        }
    }
    comparator_from_sum(&sum, schedule.len(), instance.beta, &dense.mu0)
}

pub(crate) fn comparator_from_sum(sum: &[f64], horizon: usize, beta: f64, mu0: &Dist) -> Result<(Dist, f64)> {
    let scale = beta / horizon as f64;
    let energy: Vec<f64> = sum.iter().map(|s| -scale * s).collect();
    let value = -(horizon as f64) * log_partition(mu0, &energy)?;
    Ok((gibbs(mu0, &energy)?, value))
}

/// Per-round losses and cumulative regret of a strategy against the best
/// fixed distribution in hindsight, with the matching theoretical bounds.
#[derive(Debug, Clone, Serialize)]
pub struct RegretLedger {
    /// `l_t(strategy_t)` for `t = 1..=T`.
    pub per_round_losses: Vec<f64>,
    /// Comparator value for each horizon `1..=T`.
    pub comparator_values: Vec<f64>,
    /// `sum_{s<=t} l_s - comparator(t)` for each horizon.
    pub cumulative_regret: Vec<f64>,
    /// Theoretical bound at each horizon; empty when not applicable.
    pub bound_values: Vec<f64>,
}

impl RegretLedger {
    pub fn horizon(&self) -> usize {
        self.per_round_losses.len()
    }

    /// Comparator value at the full horizon.
    pub fn comparator_value(&self) -> f64 {
        self.comparator_values.last().copied().unwrap_or(0.0)
    }

    pub fn final_regret(&self) -> f64 {
        self.cumulative_regret.last().copied().unwrap_or(0.0)
    }

    /// Builds the ledger from strategies `strategies[t-1]` used in round `t`.
    pub fn from_strategies(
        strategies: &[Dist],
        schedule: &[NetworkCost],
        instance: &Instance,
        dense: &DenseSpace,
        bound: impl Fn(usize) -> Option<f64>,
    ) -> Result<Self> {
        let horizon = schedule.len();
        if strategies.len() < horizon {
            return Err(Error::Shape(format!(
                "{} strategies for {horizon} rounds",
                strategies.len()
            )));
        }
        let mut losses = Vec::with_capacity(horizon);
        let mut comparators = Vec::with_capacity(horizon);
        let mut regret = Vec::with_capacity(horizon);
        let mut bounds = Vec::with_capacity(horizon);
        let mut prefix = vec![0.0; dense.size()];
        let mut cumulative = 0.0;
        for (t, f) in schedule.iter().enumerate() {
            f.check_shape(&instance.graph)?;
            let values = f.dense_values(&instance.graph, &dense.space);
            let loss = instantaneous_loss(&strategies[t], &values, instance.beta, &dense.mu0)?;
            cumulative += loss;
            for (p, v) in prefix.iter_mut().zip(&values) {
                *p += v;
            }
            let (_, comp) = comparator_from_sum(&prefix, t + 1, instance.beta, &dense.mu0)?;
            losses.push(loss);
            comparators.push(comp);
            regret.push(cumulative - comp);
            if let Some(b) = bound(t + 1) {
                bounds.push(b);
            }
        }
        if bounds.len() != horizon {
            bounds.clear();
        }
        Ok(Self {
            per_round_losses: losses,
            comparator_values: comparators,
            cumulative_regret: regret,
            bound_values: bounds,
        })
    }
}

/// Regret of the centralized strategy, with the bound at every horizon.
pub fn centralized_regret(schedule: &[NetworkCost], instance: &Instance, dense: &DenseSpace) -> Result<RegretLedger> {
    let strategies = centralized_strategies(instance, dense, schedule)?;
    let theta_d = instance.mu0.theta_d();
    RegretLedger::from_strategies(&strategies, schedule, instance, dense, |t| {
        Some(centralized_regret_bound(instance.beta, &instance.graph, theta_d, t))
    })
}

/// `2 (β |V| (Δ+1))^2 ln(T+1) + |V| ln(1/θ_d)`.
pub fn centralized_regret_bound(beta: f64, graph: &NetworkGraph, theta_d: f64, horizon: usize) -> f64 {
    let n = graph.num_vertices() as f64;
    let d = graph.max_degree() as f64;
    2.0 * (beta * n * (d + 1.0)).powi(2) * ((horizon as f64) + 1.0).ln() + n * (1.0 / theta_d).ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::DEFAULT_DENSE_CAP;
    use crate::measures::tv_distance;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_cost(graph: &NetworkGraph, q: usize, rng: &mut ChaCha8Rng) -> NetworkCost {
        let phi = (0..graph.num_vertices())
            .map(|_| (0..q).map(|_| rng.random_range(-1.0..=1.0)).collect())
            .collect();
        let psi = (0..graph.num_edges())
            .map(|_| (0..q * q).map(|_| rng.random_range(-1.0..=1.0)).collect())
            .collect();
        NetworkCost::new(graph, q, phi, psi).unwrap()
    }

    fn setup() -> (Instance, DenseSpace) {
        let inst = Instance::canonical();
        let dense = inst.dense(DEFAULT_DENSE_CAP).unwrap();
        (inst, dense)
    }

    #[test]
    fn loss_at_default_measure() {
        let (inst, dense) = setup();
        let zero = vec![0.0; 16];
        assert_eq!(instantaneous_loss(&dense.mu0, &zero, 0.2, &dense.mu0).unwrap(), 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let f = random_cost(&inst.graph, 2, &mut rng).dense_values(&inst.graph, &dense.space);
        let loss = instantaneous_loss(&dense.mu0, &f, 0.2, &dense.mu0).unwrap();
        assert!((loss - 0.2 * dense.mu0.expect(&f)).abs() < 1e-15);
    }

    #[test]
    fn loss_matches_brute_force() {
        let (inst, dense) = setup();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let f = random_cost(&inst.graph, 2, &mut rng);
        let w: Vec<f64> = (0..16).map(|_| rng.random::<f64>() + 0.01).collect();
        let s: f64 = w.iter().sum();
        let nu = Dist::new(w.iter().map(|x| x / s).collect()).unwrap();
        let values = f.dense_values(&inst.graph, &dense.space);
        // Independent double loop: profiles enumerated by nested action loops.
        let mut expected = 0.0;
        for a0 in 0..2 {
            for a1 in 0..2 {
                for a2 in 0..2 {
                    for a3 in 0..2 {
                        let idx = a0 + 2 * a1 + 4 * a2 + 8 * a3;
                        let x = [a0, a1, a2, a3];
                        let p = nu.prob(idx);
                        let mut fx = 0.0;
                        for (v, &a) in x.iter().enumerate() {
                            fx += f.phi(v, a);
                        }
                        for e in 0..3 {
                            fx += f.psi(e, x[e], x[e + 1]);
                        }
                        expected += 0.2 * p * fx + p * (p / (1.0 / 16.0)).ln();
                    }
                }
            }
        }
        let loss = instantaneous_loss(&nu, &values, 0.2, &dense.mu0).unwrap();
        assert!((loss - expected).abs() < 1e-12);
    }

    #[test]
    fn second_round_strategy() {
        let (inst, dense) = setup();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let f1 = random_cost(&inst.graph, 2, &mut rng).dense_values(&inst.graph, &dense.space);
        let pi2 = centralized_step_recursive(&dense.mu0, &f1, 1, &dense.mu0, 0.2).unwrap();
        let half: Vec<f64> = f1.iter().map(|v| -0.1 * v).collect();
        let expected = gibbs(&dense.mu0, &half).unwrap();
        assert!(tv_distance(&pi2, &expected).unwrap() < 1e-14);
    }

    #[test]
    fn zero_beta_stays_at_default() {
        let (inst, dense) = setup();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut pi = dense.mu0.clone();
        for t in 1..=10 {
            let f = random_cost(&inst.graph, 2, &mut rng).dense_values(&inst.graph, &dense.space);
            pi = centralized_step_recursive(&pi, &f, t, &dense.mu0, 0.0).unwrap();
            assert!(tv_distance(&pi, &dense.mu0).unwrap() < 1e-14);
        }
    }

    #[test]
    fn recursive_matches_closed_form() {
        let (inst, dense) = setup();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let schedule: Vec<_> = (0..10).map(|_| random_cost(&inst.graph, 2, &mut rng)).collect();
        let closed = centralized_strategies(&inst, &dense, &schedule).unwrap();
        let mut pi = dense.mu0.clone();
        for (t, f) in schedule.iter().enumerate() {
            let values = f.dense_values(&inst.graph, &dense.space);
            pi = centralized_step_recursive(&pi, &values, t + 1, &dense.mu0, inst.beta).unwrap();
            assert!(tv_distance(&pi, &closed[t + 1]).unwrap() < 1e-10);
        }
    }

    #[test]
    fn closed_form_at_zero_is_default() {
        let (inst, dense) = setup();
        let avg = RunningAvgCost::new(&inst.graph, 2);
        let pi1 = centralized_strategy_closed_form(&avg, &inst.graph, &dense, 0.2).unwrap();
        assert!(tv_distance(&pi1, &dense.mu0).unwrap() < 1e-15);
    }

    #[test]
    fn constant_schedule_approaches_static_gibbs() {
        let (inst, dense) = setup();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let f = random_cost(&inst.graph, 2, &mut rng);
        let values = f.dense_values(&inst.graph, &dense.space);
        let target = gibbs(&dense.mu0, &values.iter().map(|v| -0.2 * v).collect::<Vec<_>>()).unwrap();
        let schedule = vec![f; 400];
        let pis = centralized_strategies(&inst, &dense, &schedule).unwrap();
        let mut last = f64::INFINITY;
        for t in [1, 10, 100, 400] {
            let d = tv_distance(&pis[t], &target).unwrap();
            assert!(d < last);
            last = d;
        }
        assert!(last < 1e-3);
    }

    #[test]
    fn comparator_single_round() {
        let (inst, dense) = setup();
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let f = random_cost(&inst.graph, 2, &mut rng);
        let values = f.dense_values(&inst.graph, &dense.space);
        let (nu, value) = best_static_comparator(std::slice::from_ref(&f), &inst, &dense).unwrap();
        let z: f64 = dense
            .mu0
            .probs()
            .iter()
            .zip(&values)
            .map(|(p, v)| p * (-0.2 * v).exp())
            .sum();
        assert!((value + z.ln()).abs() < 1e-14);
        let expected: Vec<f64> = dense
            .mu0
            .probs()
            .iter()
            .zip(&values)
            .map(|(p, v)| p * (-0.2 * v).exp() / z)
            .collect();
        for (a, b) in nu.probs().iter().zip(&expected) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn comparator_zero_schedule() {
        let (inst, dense) = setup();
        let schedule = vec![NetworkCost::zero(&inst.graph, 2); 5];
        let (nu, value) = best_static_comparator(&schedule, &inst, &dense).unwrap();
        assert!(value.abs() < 1e-15);
        assert!(tv_distance(&nu, &dense.mu0).unwrap() < 1e-15);
    }

    #[test]
    fn zero_schedule_has_zero_regret() {
        let (inst, dense) = setup();
        let schedule = vec![NetworkCost::zero(&inst.graph, 2); 20];
        let ledger = centralized_regret(&schedule, &inst, &dense).unwrap();
        assert!(ledger.cumulative_regret.iter().all(|r| r.abs() < 1e-14));
    }

    #[test]
    fn single_round_regret_nonnegative() {
        let (inst, dense) = setup();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let f = random_cost(&inst.graph, 2, &mut rng);
            let ledger = centralized_regret(std::slice::from_ref(&f), &inst, &dense).unwrap();
            assert!(ledger.cumulative_regret[0] >= -1e-14);
        }
    }

    #[test]
    fn bound_formula() {
        let g = NetworkGraph::path(4);
        let b = centralized_regret_bound(0.2, &g, 0.5, 99);
        let expected = 2.0 * 5.76 * 100f64.ln() + 4.0 * 2f64.ln();
        assert!((b - expected).abs() < 1e-12);
        assert!((b - 55.82).abs() < 0.01);
        assert_eq!(
            centralized_regret_bound(0.0, &g, 0.5, 10),
            centralized_regret_bound(0.0, &g, 0.5, 1000)
        );
    }

    #[test]
    fn pointwise_weights_match_dense() {
        let (inst, dense) = setup();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let mut state = CentralizedState::new(&inst, Some(&dense));
        for _ in 0..3 {
            let f = random_cost(&inst.graph, 2, &mut rng);
            state.advance(&inst, Some(&dense), &f).unwrap();
        }
        let logw: Vec<f64> = dense.space.iter().map(|x| state.log_weight(&inst, &x)).collect();
        let from_weights = Dist::from_log_weights(&logw).unwrap();
        assert!(tv_distance(&from_weights, state.pi().unwrap()).unwrap() < 1e-14);
    }
}
