//! Finite probability distributions and the functionals used throughout:
//! Gibbs reweighting, relative entropy, total variation, entropy, span
//! seminorm, couplings, and exact Wasserstein-1 under the Hamming metric.

mod coupling;
mod transport;

pub use coupling::{optimal_tv_coupling, Coupling};
pub(crate) use transport::hamming_transport;
pub use transport::{
    transport_exact, wasserstein1_hamming, wasserstein1_hamming_with_cap, TransportSolution, DEFAULT_OT_CAP,
};

use crate::error::{Error, Result};

/// Sum-to-one tolerance after construction.
pub const NORMALIZATION_TOL: f64 = 1e-12;
/// Inputs farther than this from normalized are rejected.
pub const INPUT_NORMALIZATION_TOL: f64 = 1e-9;

/// A probability vector on `0..len` with a cached log representation.
#[derive(Debug, Clone, PartialEq)]
pub struct Dist {
    probs: Vec<f64>,
    log_probs: Vec<f64>,
}

/// `ln sum_i exp(w_i)` with max-shift. Returns `-inf` when every weight is `-inf`.
pub fn log_sum_exp(weights: &[f64]) -> f64 {
    let max = weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    max + weights.iter().map(|w| (w - max).exp()).sum::<f64>().ln()
}

impl Dist {
    /// Validates a user-supplied probability vector.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::Distribution("empty support".into()));
        }
        if let Some(i) = probs.iter().position(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::Distribution(format!(
                "entry {i} is {}, expected a finite nonnegative value",
                probs[i]
            )));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > INPUT_NORMALIZATION_TOL {
            return Err(Error::Distribution(format!("probabilities sum to {total}")));
        }
        Ok(Self::from_normalized(probs))
    }

    /// Renormalizes a vector already known to be a distribution up to roundoff.
    pub(crate) fn from_normalized(mut probs: Vec<f64>) -> Self {
        let total: f64 = probs.iter().sum();
        probs.iter_mut().for_each(|p| *p /= total);
        let log_probs = probs.iter().map(|p| p.ln()).collect();
        Self { probs, log_probs }
    }

    /// Normalizes `exp(log_weights)` in the log domain.
    pub fn from_log_weights(log_weights: &[f64]) -> Result<Self> {
        if log_weights.is_empty() {
            return Err(Error::Distribution("empty support".into()));
        }
        if log_weights.iter().any(|w| w.is_nan() || *w == f64::INFINITY) {
            return Err(Error::NonFinite("log weight".into()));
        }
        let lse = log_sum_exp(log_weights);
        if lse == f64::NEG_INFINITY {
            return Err(Error::Distribution("all weights are zero".into()));
        }
        let log_probs: Vec<f64> = log_weights.iter().map(|w| w - lse).collect();
        let probs: Vec<f64> = log_probs.iter().map(|l| l.exp()).collect();
        // One extra pass tightens the sum to machine precision.
        let total: f64 = probs.iter().sum();
        let probs: Vec<f64> = probs.into_iter().map(|p| p / total).collect();
        let correction = total.ln();
        let log_probs = log_probs.into_iter().map(|l| l - correction).collect();
        Ok(Self { probs, log_probs })
    }

    pub fn uniform(n: usize) -> Self {
        Self::from_normalized(vec![1.0; n])
    }

    pub fn point_mass(n: usize, at: usize) -> Self {
        let mut probs = vec![0.0; n];
        probs[at] = 1.0;
        Self::from_normalized(probs)
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn log_probs(&self) -> &[f64] {
        &self.log_probs
    }

    pub fn prob(&self, i: usize) -> f64 {
        self.probs[i]
    }

    pub fn into_probs(self) -> Vec<f64> {
        self.probs
    }

    /// `<self, f>`.
    pub fn expect(&self, f: &[f64]) -> f64 {
        debug_assert_eq!(f.len(), self.len());
        self.probs
            .iter()
            .zip(f)
            .filter(|(p, _)| **p > 0.0)
            .map(|(p, v)| p * v)
            .sum()
    }

    fn same_support(&self, other: &Dist) -> Result<()> {
        if self.len() != other.len() {
            return Err(Error::Shape(format!(
                "distributions over {} and {} points",
                self.len(),
                other.len()
            )));
        }
        Ok(())
    }
}

/// A base measure reweighted by `exp(neg_energy)`.
#[derive(Debug, Clone)]
pub struct GibbsSpec {
    pub base: Dist,
    pub neg_energy: Vec<f64>,
    /// `ln <base, exp(neg_energy)>`.
    pub log_partition: f64,
}

impl GibbsSpec {
    pub fn new(base: Dist, neg_energy: Vec<f64>) -> Result<Self> {
        let log_partition = log_partition(&base, &neg_energy)?;
        Ok(Self {
            base,
            neg_energy,
            log_partition,
        })
    }

    pub fn dist(&self) -> Dist {
        gibbs(&self.base, &self.neg_energy).expect("validated at construction")
    }
}

fn check_energy(base: &Dist, neg_energy: &[f64]) -> Result<()> {
    if neg_energy.len() != base.len() {
        return Err(Error::Shape(format!(
            "energy of length {} for support of size {}",
            neg_energy.len(),
            base.len()
        )));
    }
    if let Some(i) = neg_energy.iter().position(|g| !g.is_finite()) {
        return Err(Error::NonFinite(format!("neg_energy[{i}]")));
    }
    Ok(())
}

/// `ln <base, exp(g)>` in the log domain.
pub fn log_partition(base: &Dist, neg_energy: &[f64]) -> Result<f64> {
    check_energy(base, neg_energy)?;
    let weights: Vec<f64> = base.log_probs.iter().zip(neg_energy).map(|(l, g)| l + g).collect();
    Ok(log_sum_exp(&weights))
}

/// `mu_g(x) = base(x) exp(g(x)) / <base, exp(g)>`.
pub fn gibbs(base: &Dist, neg_energy: &[f64]) -> Result<Dist> {
    check_energy(base, neg_energy)?;
    let weights: Vec<f64> = base.log_probs.iter().zip(neg_energy).map(|(l, g)| l + g).collect();
    Dist::from_log_weights(&weights)
}

/// Relative entropy `D(mu || nu)`; `+inf` when `mu` charges a point `nu` does not.
pub fn kl_divergence(mu: &Dist, nu: &Dist) -> Result<f64> {
    mu.same_support(nu)?;
    let mut total = 0.0;
    for i in 0..mu.len() {
        let p = mu.probs[i];
        if p == 0.0 {
            continue;
        }
        if nu.probs[i] == 0.0 {
            return Ok(f64::INFINITY);
        }
        total += p * (mu.log_probs[i] - nu.log_probs[i]);
    }
    Ok(total.max(0.0))
}

pub fn tv_distance(mu: &Dist, nu: &Dist) -> Result<f64> {
    mu.same_support(nu)?;
    Ok(0.5 * mu.probs.iter().zip(&nu.probs).map(|(a, b)| (a - b).abs()).sum::<f64>())
}

/// Shannon entropy in nats with `0 ln 0 = 0`.
pub fn shannon_entropy(mu: &Dist) -> f64 {
    -mu.probs
        .iter()
        .zip(&mu.log_probs)
        .filter(|(p, _)| **p > 0.0)
        .map(|(p, l)| p * l)
        .sum::<f64>()
}

/// `max - min`.
pub fn span_seminorm(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::InvalidArgument("span of an empty vector".into()));
    }
    let (lo, hi) = values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
        (lo.min(v), hi.max(v))
    });
    Ok(hi - lo)
}

pub fn sup_norm(values: &[f64]) -> f64 {
    values.iter().fold(0.0, |m, v| m.max(v.abs()))
}
