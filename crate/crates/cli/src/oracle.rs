//! Brute-force recomputation of single quantities for spot audits.
//!
//! Everything here works on plain vectors over an enumeration of all
//! profiles and shares no code with the library beyond reading cost tables.

use clap::ValueEnum;

use netgibbs::centralized::centralized_strategies;
use netgibbs::glauber::{decentralized_regret, evolve_exact};
use netgibbs::measures::{kl_divergence, tv_distance};
use netgibbs::{Instance, NetworkCost, RegretLedger, DEFAULT_DENSE_CAP};

use crate::CliError;

/// Relative tolerance for oracle agreement.
pub const ORACLE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Quantity {
    LossCentralized,
    LossDecentralized,
    Comparator,
    RegretCentralized,
    RegretLi,
    TvMuPi,
    KlStep,
}

impl Quantity {
    pub fn name(self) -> &'static str {
        match self {
            Quantity::LossCentralized => "loss_centralized",
            Quantity::LossDecentralized => "loss_decentralized",
            Quantity::Comparator => "comparator",
            Quantity::RegretCentralized => "cum_regret_centralized",
            Quantity::RegretLi => "cum_regret_LI",
            Quantity::TvMuPi => "tv_mu_pi",
            Quantity::KlStep => "kl_step_centralized",
        }
    }

    pub const ALL: [Quantity; 7] = [
        Quantity::LossCentralized,
        Quantity::LossDecentralized,
        Quantity::Comparator,
        Quantity::RegretCentralized,
        Quantity::RegretLi,
        Quantity::TvMuPi,
        Quantity::KlStep,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Comparison {
    pub t: usize,
    pub oracle: f64,
    pub library: f64,
}

impl Comparison {
    pub fn agrees(&self) -> bool {
        (self.oracle - self.library).abs() <= ORACLE_TOLERANCE * (1.0 + self.oracle.abs())
    }
}

struct Brute {
    profiles: Vec<Vec<usize>>,
    mu0: Vec<f64>,
    marginals: Vec<Vec<f64>>,
    /// `f_s(x)` for every round and profile.
    values: Vec<Vec<f64>>,
    beta: f64,
    q: usize,
    n: usize,
}

fn cost_at(f: &NetworkCost, instance: &Instance, x: &[usize]) -> f64 {
    let vertex: f64 = x.iter().enumerate().map(|(v, &a)| f.phi(v, a)).sum();
    let edge: f64 = instance
        .graph
        .edges()
        .iter()
        .enumerate()
        .map(|(e, &(u, w))| f.psi(e, x[u], x[w]))
        .sum();
    vertex + edge
}

impl Brute {
    fn new(instance: &Instance, schedule: &[NetworkCost]) -> Self {
        let n = instance.num_vertices();
        let q = instance.q;
        let size = q.pow(n as u32);
        let profiles: Vec<Vec<usize>> = (0..size)
            .map(|mut i| {
                let mut x = vec![0; n];
                for slot in x.iter_mut().rev() {
                    *slot = i % q;
                    i /= q;
                }
                x
            })
            .collect();
        let marginals: Vec<Vec<f64>> = (0..n).map(|v| instance.mu0.vertex(v).to_vec()).collect();
        let mu0 = profiles
            .iter()
            .map(|x| x.iter().enumerate().map(|(v, &a)| marginals[v][a]).product())
            .collect();
        let values = schedule
            .iter()
            .map(|f| profiles.iter().map(|x| cost_at(f, instance, x)).collect())
            .collect();
        Self {
            profiles,
            mu0,
            marginals,
            values,
            beta: instance.beta,
            q,
            n,
        }
    }

    fn index(&self, x: &[usize]) -> usize {
        x.iter().fold(0, |acc, &a| acc * self.q + a)
    }

    /// `F_t(x) = (1/(t+1)) sum_{s<=t} f_s(x)`.
    fn average(&self, t: usize) -> Vec<f64> {
        let mut avg = vec![0.0; self.profiles.len()];
        for round in &self.values[..t] {
            for (a, v) in avg.iter_mut().zip(round) {
                *a += v;
            }
        }
        avg.iter().map(|s| s / (t as f64 + 1.0)).collect()
    }

    /// `pi_t`, proportional to `mu_0 exp(-β F_{t-1})`.
    fn pi(&self, t: usize) -> Vec<f64> {
        let avg = self.average(t - 1);
        let w: Vec<f64> = self
            .mu0
            .iter()
            .zip(&avg)
            .map(|(m, e)| m * (-self.beta * e).exp())
            .collect();
        let z: f64 = w.iter().sum();
        w.iter().map(|x| x / z).collect()
    }

    /// One round of single-site heat-bath updates driven by `F_{s-1}`.
    fn step(&self, mu: &[f64], s: usize) -> Vec<f64> {
        let avg = self.average(s - 1);
        let mut next = vec![0.0; mu.len()];
        for (i, x) in self.profiles.iter().enumerate() {
            if mu[i] == 0.0 {
                continue;
            }
            for v in 0..self.n {
                let mut y = x.clone();
                let mut weights = Vec::with_capacity(self.q);
                let mut targets = Vec::with_capacity(self.q);
                for a in 0..self.q {
                    y[v] = a;
                    let j = self.index(&y);
                    weights.push(self.marginals[v][a] * (-self.beta * avg[j]).exp());
                    targets.push(j);
                }
                let z: f64 = weights.iter().sum();
                for (j, w) in targets.into_iter().zip(weights) {
                    next[j] += mu[i] * w / z / self.n as f64;
                }
            }
        }
        next
    }

    /// `mu_1, ..., mu_t`.
    fn mus(&self, t: usize) -> Vec<Vec<f64>> {
        let mut out = Vec::with_capacity(t);
        let mut mu = self.mu0.clone();
        for s in 1..=t {
            mu = self.step(&mu, s);
            out.push(mu.clone());
        }
        out
    }

    fn loss(&self, nu: &[f64], t: usize) -> f64 {
        let f = &self.values[t - 1];
        nu.iter()
            .zip(f)
            .zip(&self.mu0)
            .map(|((&p, &c), &m)| {
                if p > 0.0 {
                    self.beta * p * c + p * (p / m).ln()
                } else {
                    0.0
                }
            })
            .sum()
    }

    fn comparator(&self, horizon: usize) -> f64 {
        let mut sum = vec![0.0; self.profiles.len()];
        for round in &self.values[..horizon] {
            for (a, v) in sum.iter_mut().zip(round) {
                *a += v;
            }
        }
        let scale = self.beta / horizon as f64;
        let z: f64 = self.mu0.iter().zip(&sum).map(|(m, s)| m * (-scale * s).exp()).sum();
        -(horizon as f64) * z.ln()
    }
}

fn tv(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

fn kl(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .filter(|(x, _)| **x > 0.0)
        .map(|(x, y)| x * (x / y).ln())
        .sum()
}

/// Brute-force value of `quantity` at round `t`.
pub fn brute_force(
    instance: &Instance,
    schedule: &[NetworkCost],
    quantity: Quantity,
    t: usize,
) -> Result<f64, CliError> {
    check_round(instance, schedule, t)?;
    let b = Brute::new(instance, schedule);
    Ok(match quantity {
        Quantity::LossCentralized => b.loss(&b.pi(t), t),
        Quantity::LossDecentralized => b.loss(&b.mus(t)[t - 1], t),
        Quantity::Comparator => b.comparator(t),
        Quantity::RegretCentralized => (1..=t).map(|s| b.loss(&b.pi(s), s)).sum::<f64>() - b.comparator(t),
        Quantity::RegretLi => {
            let mus = b.mus(t);
            (1..=t).map(|s| b.loss(&mus[s - 1], s)).sum::<f64>() - b.comparator(t)
        }
        Quantity::TvMuPi => tv(&b.mus(t)[t - 1], &b.pi(t)),
        Quantity::KlStep => kl(&b.pi(t), &b.pi(t + 1)),
    })
}

/// Library value of `quantity` at round `t`.
pub fn library(instance: &Instance, schedule: &[NetworkCost], quantity: Quantity, t: usize) -> Result<f64, CliError> {
    check_round(instance, schedule, t)?;
    let dense = instance.dense(DEFAULT_DENSE_CAP)?;
    let prefix = &schedule[..t];
    let central = || -> Result<RegretLedger, CliError> {
        let pis = centralized_strategies(instance, &dense, prefix)?;
        Ok(RegretLedger::from_strategies(&pis, prefix, instance, &dense, |_| None)?)
    };
    Ok(match quantity {
        Quantity::LossCentralized => central()?.per_round_losses[t - 1],
        Quantity::LossDecentralized => decentralized_regret(prefix, instance, &dense)?.per_round_losses[t - 1],
        Quantity::Comparator => central()?.comparator_value(),
        Quantity::RegretCentralized => central()?.final_regret(),
        Quantity::RegretLi => decentralized_regret(prefix, instance, &dense)?.final_regret(),
        Quantity::TvMuPi => {
            let pis = centralized_strategies(instance, &dense, prefix)?;
            let mus = evolve_exact(instance, &dense, prefix)?;
            tv_distance(&mus[t], &pis[t - 1])?
        }
        Quantity::KlStep => {
            let pis = centralized_strategies(instance, &dense, prefix)?;
            kl_divergence(&pis[t - 1], &pis[t])?
        }
    })
}

fn check_round(instance: &Instance, schedule: &[NetworkCost], t: usize) -> Result<(), CliError> {
    if t == 0 || t > schedule.len() {
        return Err(CliError::Usage(format!("round {t} outside 1..={}", schedule.len())));
    }
    instance.dense(DEFAULT_DENSE_CAP)?;
    Ok(())
}

pub fn compare(
    instance: &Instance,
    schedule: &[NetworkCost],
    quantity: Quantity,
    t: usize,
) -> Result<Comparison, CliError> {
    Ok(Comparison {
        t,
        oracle: brute_force(instance, schedule, quantity, t)?,
        library: library(instance, schedule, quantity, t)?,
    })
}
