//! Servers grouped into types with their own count, speed and buffer depth.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::exact::generator::Generator;
use crate::exact::state::{check_cap, for_each_state, state_count, OccupancyVector};
use crate::math::special::{ln_factorial, ln_multinomial, LogSumExp};

/// Default cap on heterogeneous enumerations.
pub const HETERO_STATE_CAP: u128 = 100_000;

/// One server type: `count` servers of speed `speed` holding at most `theta` jobs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ServerType {
    pub count: u32,
    pub speed: f64,
    pub theta: u32,
}

/// Multi-type system fed at rate `n rho`, `n = sum_j count_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct HeteroConfig {
    types: Vec<ServerType>,
    rho: f64,
}

/// One occupancy vector per server type.
pub type HeteroState = Vec<OccupancyVector>;

impl HeteroConfig {
    pub fn new(types: Vec<ServerType>, rho: f64) -> Result<Self> {
        if types.is_empty() {
            return Err(Error::invalid("types", "need at least one server type"));
        }
        for t in &types {
            if t.count == 0 || t.theta == 0 {
                return Err(Error::invalid("types", "counts and depths must be positive"));
            }
            if !(t.speed.is_finite() && t.speed > 0.0) {
                return Err(Error::invalid("types", "speeds must be positive"));
            }
        }
        if !(rho.is_finite() && rho > 0.0) {
            return Err(Error::invalid("rho", "load must be positive"));
        }
        Ok(HeteroConfig { types, rho })
    }

    pub fn types(&self) -> &[ServerType] {
        &self.types
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn n(&self) -> u32 {
        self.types.iter().map(|t| t.count).sum()
    }

    pub fn lambda(&self) -> f64 {
        f64::from(self.n()) * self.rho
    }

    /// `rho_j = rho / c_j`.
    pub fn rho_of(&self, j: usize) -> f64 {
        self.rho / self.types[j].speed
    }

    /// Total capacity `sum_j n_j theta_j`.
    pub fn capacity(&self) -> u64 {
        self.types
            .iter()
            .map(|t| u64::from(t.count) * u64::from(t.theta))
            .sum()
    }

    fn check_state(&self, state: &[OccupancyVector]) -> Result<()> {
        if state.len() != self.types.len() {
            return Err(Error::invalid("state", "one occupancy vector per type is required"));
        }
        for (s, t) in state.iter().zip(&self.types) {
            if s.theta() != t.theta || s.n() != t.count {
                return Err(Error::invalid("state", "occupancy vector does not match its type"));
            }
        }
        Ok(())
    }

    pub fn state_count(&self) -> u128 {
        self.types
            .iter()
            .map(|t| state_count(t.count, t.theta))
            .fold(1u128, |a, b| a.saturating_mul(b))
    }
}

/// Unnormalized `ln pi(state)`:
/// `ln (C - sbar)! + sum_j [ln multinomial(n_j; s_j) + sum_k s_kj ln(theta_j!/(theta_j-k)! (n rho_j)^k)]`.
pub fn hetero_stationary_log_prob(config: &HeteroConfig, state: &[OccupancyVector]) -> Result<f64> {
    config.check_state(state)?;
    Ok(hetero_log_weight(config, state))
}

fn hetero_log_weight(config: &HeteroConfig, state: &[OccupancyVector]) -> f64 {
    let n = f64::from(config.n());
    let mut total = 0u64;
    let mut acc = 0.0;
    for (j, (s, t)) in state.iter().zip(config.types()).enumerate() {
        total += s.total_jobs();
        acc += ln_multinomial(s.counts());
        let ln_load = libm::log(n * config.rho_of(j));
        let lf = ln_factorial(u64::from(t.theta));
        for (k, &c) in s.counts().iter().enumerate() {
            if c > 0 {
                let per = lf - ln_factorial(u64::from(t.theta) - k as u64) + k as f64 * ln_load;
                acc += f64::from(c) * per;
            }
        }
    }
    ln_factorial(config.capacity() - total) + acc
}

/// Arrival rates `lambda_{i,j} = n rho (theta_j - i) s_{i,j} / sum_j (n_j theta_j - sbar_j)`,
/// indexed `[j][i]`; all zero when every server is full.
pub fn hetero_routing_rates(config: &HeteroConfig, state: &[OccupancyVector]) -> Result<Vec<Vec<f64>>> {
    config.check_state(state)?;
    let jobs: u64 = state.iter().map(OccupancyVector::total_jobs).sum();
    let free = config.capacity() - jobs;
    let scale = if free == 0 { 0.0 } else { config.lambda() / free as f64 };
    Ok(state
        .iter()
        .zip(config.types())
        .map(|(s, t)| {
            (0..t.theta as usize)
                .map(|i| scale * (t.theta as usize - i) as f64 * f64::from(s.counts()[i]))
                .collect()
        })
        .collect())
}

/// Every joint state, with the first type varying slowest.
pub fn enumerate_hetero_states(config: &HeteroConfig, cap: u128) -> Result<Vec<HeteroState>> {
    check_cap(config.state_count(), cap)?;
    let mut out: Vec<HeteroState> = vec![Vec::new()];
    for t in config.types() {
        let mut per_type = Vec::new();
        for_each_state(t.count, t.theta, cap, |s| per_type.push(OccupancyVector::from_counts(s.to_vec())))?;
        out = out
            .into_iter()
            .flat_map(|prefix| {
                per_type.iter().map(move |s| {
                    let mut p = prefix.clone();
                    p.push(s.clone());
                    p
                })
            })
            .collect();
    }
    Ok(out)
}

/// Normalized heterogeneous stationary distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct HeteroStationary {
    pub states: Vec<HeteroState>,
    pub log_probs: Vec<f64>,
    /// Probability that every server of every type is full.
    pub blocking: f64,
}

pub fn hetero_stationary(config: &HeteroConfig, cap: u128) -> Result<HeteroStationary> {
    let states = enumerate_hetero_states(config, cap)?;
    let mut log_probs: Vec<f64> = states.iter().map(|s| hetero_log_weight(config, s)).collect();
    let mut lse = LogSumExp::default();
    log_probs.iter().for_each(|&w| lse.push(w));
    let ln_z = lse.value();
    log_probs.iter_mut().for_each(|l| *l -= ln_z);
    let blocking = states
        .iter()
        .zip(&log_probs)
        .filter(|(s, _)| s.iter().all(OccupancyVector::is_full))
        .map(|(_, &l)| libm::exp(l))
        .sum();
    Ok(HeteroStationary {
        states,
        log_probs,
        blocking,
    })
}

/// Generator of the heterogeneous chain: arrivals per
/// [`hetero_routing_rates`], departures from a type-`j` server at rate `c_j`.
pub fn hetero_generator(config: &HeteroConfig, cap: u128) -> Result<Generator<HeteroState>> {
    let states = enumerate_hetero_states(config, cap)?;
    let index: alloc::collections::BTreeMap<&HeteroState, usize> =
        states.iter().enumerate().map(|(i, s)| (s, i)).collect();
    let mut transitions = Vec::with_capacity(states.len());
    for s in &states {
        let rates = hetero_routing_rates(config, s)?;
        let mut row = Vec::new();
        for (j, t) in config.types().iter().enumerate() {
            let moved = |from: usize, to: usize| {
                let mut next = s.clone();
                next[j] = s[j].shifted(from, to)?;
                index.get(&next).copied()
            };
            for (i, &r) in rates[j].iter().enumerate() {
                if r > 0.0 {
                    row.push((moved(i, i + 1).expect("target state exists"), r));
                }
            }
            for i in 1..=t.theta as usize {
                let busy = f64::from(s[j].counts()[i]);
                if busy > 0.0 {
                    row.push((moved(i, i - 1).expect("target state exists"), busy * t.speed));
                }
            }
        }
        transitions.push(row);
    }
    Ok(Generator::from_transitions(states, transitions))
}
