use alloc::vec::Vec;

use crate::error::{Error, Result};

/// A homogeneous system: `n` unit-speed servers, each holding at most
/// `theta` jobs, fed at total rate `lambda = n * rho` with unit-mean jobs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemConfig {
    pub n: u32,
    pub theta: u32,
    pub rho: f64,
}

impl SystemConfig {
    pub fn new(n: u32, theta: u32, rho: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("n", "need at least one server"));
        }
        if theta == 0 {
            return Err(Error::invalid("theta", "buffer depth must be at least 1"));
        }
        if !(rho.is_finite() && rho > 0.0) {
            return Err(Error::invalid("rho", "load per server must be positive"));
        }
        Ok(SystemConfig { n, theta, rho })
    }

    /// Total arrival rate `n * rho`.
    pub fn lambda(&self) -> f64 {
        f64::from(self.n) * self.rho
    }

    /// Total job capacity `n * theta`.
    pub fn capacity(&self) -> u64 {
        u64::from(self.n) * u64::from(self.theta)
    }
}

/// A probability vector over buffer levels `0..=theta` together with its mean.
///
/// Used for the mean-field profile `p(c)`, the fixed point `p_hat`, empirical
/// occupancy fractions `q` and ODE states.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelDistribution {
    probs: Vec<f64>,
    mean: f64,
}

impl LevelDistribution {
    /// Accepts vectors whose entries are non-negative and sum to one within
    /// `1e-9`; the stored vector is renormalized exactly.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.len() < 2 {
            return Err(Error::invalid("probs", "need at least levels 0 and 1"));
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::invalid("probs", "entries must be finite and non-negative"));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(
                "probs",
                alloc::format!("entries sum to {total}, not 1"),
            ));
        }
        Ok(Self::from_weights(probs))
    }

    /// Normalizes arbitrary non-negative weights (at least one positive).
    pub(crate) fn from_weights(mut probs: Vec<f64>) -> Self {
        let total: f64 = probs.iter().sum();
        for p in probs.iter_mut() {
            *p /= total;
        }
        let mean = probs
            .iter()
            .enumerate()
            .map(|(k, p)| k as f64 * p)
            .sum();
        LevelDistribution { probs, mean }
    }

    /// Point mass at level `level`.
    pub fn point_mass(theta: u32, level: u32) -> Self {
        let mut probs = alloc::vec![0.0; theta as usize + 1];
        probs[level as usize] = 1.0;
        LevelDistribution {
            probs,
            mean: f64::from(level),
        }
    }

    pub fn theta(&self) -> u32 {
        (self.probs.len() - 1) as u32
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.probs
    }

    /// Sup-norm distance to another distribution on the same levels.
    pub fn sup_distance(&self, other: &LevelDistribution) -> f64 {
        self.probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}
