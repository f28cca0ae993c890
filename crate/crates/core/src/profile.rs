//! Action profiles and the enumerated profile space `{1..q}^|V|`.
//!
//! Actions are stored 0-based (`0..q`). Profiles index the dense space in
//! mixed radix with vertex 0 as the least significant digit.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ActionProfile(Vec<usize>);

impl ActionProfile {
    pub fn new(actions: Vec<usize>, q: usize) -> Result<Self> {
        if let Some((v, &a)) = actions.iter().enumerate().find(|(_, &a)| a >= q) {
            return Err(Error::OutOfRange {
                value: (a + 1) as f64,
                lo: 1.0,
                hi: q as f64,
                location: format!("action of vertex {}", v + 1),
            });
        }
        Ok(Self(actions))
    }

    /// Parses 1-based actions, e.g. from the command line.
    pub fn from_one_based(actions: &[usize], q: usize) -> Result<Self> {
        let mut zero = Vec::with_capacity(actions.len());
        for (v, &a) in actions.iter().enumerate() {
            if a == 0 || a > q {
                return Err(Error::OutOfRange {
                    value: a as f64,
                    lo: 1.0,
                    hi: q as f64,
                    location: format!("action of vertex {}", v + 1),
                });
            }
            zero.push(a - 1);
        }
        Ok(Self(zero))
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, v: usize) -> usize {
        self.0[v]
    }

    pub fn set(&mut self, v: usize, a: usize) {
        self.0[v] = a;
    }

    pub fn to_one_based(&self) -> Vec<usize> {
        self.0.iter().map(|a| a + 1).collect()
    }
}

/// Number of coordinates where the two profiles differ.
pub fn hamming(x: &[usize], y: &[usize]) -> Result<usize> {
    if x.len() != y.len() {
        return Err(Error::Shape(format!("profiles of length {} and {}", x.len(), y.len())));
    }
    Ok(x.iter().zip(y).filter(|(a, b)| a != b).count())
}

/// The finite space of all profiles for `n` agents with `q` actions each.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProfileSpace {
    n: usize,
    q: usize,
    size: usize,
}

/// `q^n`, or `None` on overflow.
pub fn space_size(n: usize, q: usize) -> Option<u128> {
    let mut s: u128 = 1;
    for _ in 0..n {
        s = s.checked_mul(q as u128)?;
    }
    Some(s)
}

impl ProfileSpace {
    /// Fails with [`Error::DenseCapExceeded`] when `q^n > cap`.
    pub fn new(n: usize, q: usize, cap: usize) -> Result<Self> {
        if q == 0 {
            return Err(Error::InvalidArgument("q must be positive".into()));
        }
        let states = space_size(n, q).unwrap_or(u128::MAX);
        if states > cap as u128 {
            return Err(Error::DenseCapExceeded { states, cap });
        }
        Ok(Self {
            n,
            q,
            size: states as usize,
        })
    }

    pub fn num_vertices(&self) -> usize {
        self.n
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn decode(&self, mut index: usize, out: &mut [usize]) {
        for slot in out.iter_mut().take(self.n) {
            *slot = index % self.q;
            index /= self.q;
        }
    }

    pub fn profile(&self, index: usize) -> Vec<usize> {
        let mut x = vec![0; self.n];
        self.decode(index, &mut x);
        x
    }

    pub fn encode(&self, x: &[usize]) -> usize {
        x.iter().rev().fold(0, |acc, &a| acc * self.q + a)
    }

    /// Weight of vertex `v`'s digit in the mixed-radix index.
    pub fn stride(&self, v: usize) -> usize {
        self.q.pow(v as u32)
    }

    /// Iterates over all profiles in index order.
    pub fn iter(&self) -> ProfileIter<'_> {
        ProfileIter {
            space: self,
            next: 0,
            current: vec![0; self.n],
        }
    }
}

pub struct ProfileIter<'a> {
    space: &'a ProfileSpace,
    next: usize,
    current: Vec<usize>,
}

impl Iterator for ProfileIter<'_> {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.next >= self.space.size {
            return None;
        }
        if self.next > 0 {
            for a in self.current.iter_mut() {
                *a += 1;
                if *a < self.space.q {
                    break;
                }
                *a = 0;
            }
        }
        self.next += 1;
        Some(self.current.clone())
    }
}
