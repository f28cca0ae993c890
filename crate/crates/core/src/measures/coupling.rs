use super::{tv_distance, Dist};
use crate::error::Result;

/// A joint distribution on `support x support`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Coupling {
    n: usize,
    joint: Vec<f64>,
}

impl Coupling {
    pub fn size(&self) -> usize {
        self.n
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.joint[x * self.n + y]
    }

    pub fn joint(&self) -> &[f64] {
        &self.joint
    }

    pub fn first_marginal(&self) -> Vec<f64> {
        self.joint.chunks(self.n).map(|row| row.iter().sum()).collect()
    }

    pub fn second_marginal(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for row in self.joint.chunks(self.n) {
            for (o, v) in out.iter_mut().zip(row) {
                *o += v;
            }
        }
        out
    }

    /// `Pr[X != Y]`.
    pub fn prob_unequal(&self) -> f64 {
        1.0 - (0..self.n).map(|i| self.get(i, i)).sum::<f64>()
    }

    /// `E[cost(X, Y)]`.
    pub fn expected_cost(&self, mut cost: impl FnMut(usize, usize) -> f64) -> f64 {
        let mut total = 0.0;
        for x in 0..self.n {
            for y in 0..self.n {
                let m = self.get(x, y);
                if m > 0.0 {
                    total += m * cost(x, y);
                }
            }
        }
        total
    }
}

/// The maximal coupling: diagonal mass `min(mu, nu)`, residuals coupled by
/// their normalized outer product. Achieves `Pr[X != Y] = TV(mu, nu)`.
pub fn optimal_tv_coupling(mu: &Dist, nu: &Dist) -> Result<Coupling> {
    let tv = tv_distance(mu, nu)?;
    let n = mu.len();
    let mut joint = vec![0.0; n * n];
    let mut res_mu = vec![0.0; n];
    let mut res_nu = vec![0.0; n];
    for i in 0..n {
        let (a, b) = (mu.prob(i), nu.prob(i));
        let m = a.min(b);
        joint[i * n + i] = m;
        res_mu[i] = a - m;
        res_nu[i] = b - m;
    }
    if tv > 0.0 {
        for x in 0..n {
            if res_mu[x] == 0.0 {
                continue;
            }
            for y in 0..n {
                joint[x * n + y] += res_mu[x] * res_nu[y] / tv;
            }
        }
    }
    Ok(Coupling { n, joint })
}
