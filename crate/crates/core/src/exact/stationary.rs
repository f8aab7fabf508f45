use alloc::vec::Vec;

use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::exact::state::{for_each_state, state_rank, OccupancyVector};
use crate::math::special::{ln_factorial, LogSumExp};

pub(crate) fn check_shape(config: &SystemConfig, s: &[u32]) -> Result<()> {
    if s.len() != config.theta as usize + 1 {
        return Err(Error::invalid(
            "s",
            alloc::format!("expected {} levels, got {}", config.theta + 1, s.len()),
        ));
    }
    let n: u64 = s.iter().map(|&c| u64::from(c)).sum();
    if n != u64::from(config.n) {
        return Err(Error::invalid(
            "s",
            alloc::format!("counts sum to {n}, expected n = {}", config.n),
        ));
    }
    Ok(())
}

/// Arrival rates `lambda_i(s) = n rho (theta - i) s_i / (n theta - sbar)` into
/// servers at level `i = 0..theta-1`; empty when every server is full.
pub fn routing_rates(config: &SystemConfig, s: &OccupancyVector) -> Result<Vec<f64>> {
    check_shape(config, s.counts())?;
    Ok(rates_unchecked(config, s.counts()))
}

pub(crate) fn rates_unchecked(config: &SystemConfig, s: &[u32]) -> Vec<f64> {
    let theta = config.theta as usize;
    let total: u64 = s.iter().enumerate().map(|(k, &c)| k as u64 * u64::from(c)).sum();
    let free = config.capacity() - total;
    if free == 0 {
        return Vec::new();
    }
    let scale = config.lambda() / free as f64;
    (0..theta)
        .map(|i| scale * (theta - i) as f64 * f64::from(s[i]))
        .collect()
}

/// Unnormalized `ln pi(s)`:
/// `ln (n theta - sbar)! + ln multinomial(n; s) + sum_k s_k (-ln (theta-k)! + (k - theta) ln(n rho))`.
///
/// With this scaling the full state has weight `0`.
pub fn stationary_log_prob(config: &SystemConfig, s: &OccupancyVector) -> Result<f64> {
    check_shape(config, s.counts())?;
    Ok(log_weight(config, s.counts()))
}

pub(crate) fn log_weight(config: &SystemConfig, s: &[u32]) -> f64 {
    let theta = config.theta as usize;
    let ln_load = libm::log(config.lambda());
    let mut total: u64 = 0;
    let mut acc = 0.0;
    let mut ln_n = 0.0;
    for (k, &c) in s.iter().enumerate() {
        if c == 0 {
            continue;
        }
        total += k as u64 * u64::from(c);
        ln_n += ln_factorial(u64::from(c));
        let per_server = -ln_factorial((theta - k) as u64) + (k as f64 - theta as f64) * ln_load;
        acc += f64::from(c) * per_server;
    }
    ln_factorial(config.capacity() - total) + ln_factorial(u64::from(config.n)) - ln_n + acc
}

/// Normalized stationary distribution over the full enumeration.
#[derive(Debug, Clone, PartialEq)]
pub struct StationaryResult {
    /// States in [`crate::exact::enumerate_states`] order.
    pub states: Vec<OccupancyVector>,
    /// `ln pi(s)` aligned with `states`.
    pub log_probs: Vec<f64>,
    /// `pi(all full)`, the blocking probability by PASTA.
    pub blocking: f64,
    /// `ln pi_0`, the log probability of the all-empty state.
    pub normalizer: f64,
}

impl StationaryResult {
    pub fn log_prob(&self, s: &[u32]) -> Option<f64> {
        let i = state_rank(s);
        (self.states.get(i)?.counts() == s).then(|| self.log_probs[i])
    }

    pub fn probs(&self) -> impl Iterator<Item = f64> + '_ {
        self.log_probs.iter().map(|&l| libm::exp(l))
    }

    /// `E[S_k / n]` for every level `k`.
    pub fn mean_fractions(&self) -> Vec<f64> {
        let levels = self.states.first().map_or(0, |s| s.counts().len());
        let n = self.states.first().map_or(1, |s| s.n());
        let mut out = alloc::vec![0.0; levels];
        for (s, p) in self.states.iter().zip(self.probs()) {
            for (o, &c) in out.iter_mut().zip(s.counts()) {
                *o += p * f64::from(c) / f64::from(n);
            }
        }
        out
    }
}

/// Enumerates all states and normalizes `exp(stationary_log_prob)` by
/// log-sum-exp.
pub fn exact_stationary(config: &SystemConfig, cap: u128) -> Result<StationaryResult> {
    let mut states = Vec::new();
    let mut log_probs = Vec::new();
    let mut lse = LogSumExp::default();
    for_each_state(config.n, config.theta, cap, |s| {
        let w = log_weight(config, s);
        lse.push(w);
        states.push(OccupancyVector::from_counts(s.to_vec()));
        log_probs.push(w);
    })?;
    let ln_z = lse.value();
    for l in log_probs.iter_mut() {
        *l -= ln_z;
    }
    Ok(StationaryResult {
        blocking: libm::exp(*log_probs.last().expect("at least one state")),
        normalizer: log_probs[0],
        states,
        log_probs,
    })
}

/// Exact blocking `pi(all full)` by streaming over the enumeration.
pub fn exact_blocking_enumeration(config: &SystemConfig, cap: u128) -> Result<f64> {
    let mut lse = LogSumExp::default();
    for_each_state(config.n, config.theta, cap, |s| lse.push(log_weight(config, s)))?;
    // The full state has unnormalized log weight 0.
    Ok(libm::exp(-lse.value()))
}

/// `B = pi_0 (n rho)^(n theta) (theta!)^n / (n theta)!` given `ln pi_0`.
pub fn blocking_from_empty_state(config: &SystemConfig, ln_pi0: f64) -> f64 {
    let n = f64::from(config.n);
    libm::exp(
        ln_pi0 + n * f64::from(config.theta) * libm::log(config.lambda())
            + n * ln_factorial(u64::from(config.theta))
            - ln_factorial(config.capacity()),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::state::{enumerate_states, DEFAULT_STATE_CAP};
    use crate::math::erlang_b;
    use alloc::vec;

    fn cfg(n: u32, theta: u32, rho: f64) -> SystemConfig {
        SystemConfig::new(n, theta, rho).unwrap()
    }

    #[test]
    fn routing_rate_examples() {
        let c = cfg(2, 1, 0.5);
        let r = routing_rates(&c, &OccupancyVector::new(vec![2, 0]).unwrap()).unwrap();
        assert_eq!(r, vec![1.0]);
        assert!(routing_rates(&c, &OccupancyVector::new(vec![0, 2]).unwrap())
            .unwrap()
            .is_empty());
        let c = cfg(2, 2, 1.0);
        let r = routing_rates(&c, &OccupancyVector::new(vec![1, 1, 0]).unwrap()).unwrap();
        assert!((r[0] - 4.0 / 3.0).abs() < 1e-15 && (r[1] - 2.0 / 3.0).abs() < 1e-15);
        assert!(routing_rates(&c, &OccupancyVector::new(vec![1, 1]).unwrap()).is_err());
    }

    #[test]
    fn rates_sum_to_lambda() {
        let c = cfg(5, 3, 0.7);
        for s in enumerate_states(5, 3, DEFAULT_STATE_CAP).unwrap() {
            let r = routing_rates(&c, &s).unwrap();
            if !s.is_full() {
                assert!((r.iter().sum::<f64>() - c.lambda()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn small_distributions() {
        let res = exact_stationary(&cfg(2, 1, 0.5), DEFAULT_STATE_CAP).unwrap();
        let p: Vec<f64> = res.probs().collect();
        // states (2,0), (1,1), (0,2): s_0 = 2, 1, 0
        assert!((p[0] - 0.4).abs() < 1e-14 && (p[1] - 0.4).abs() < 1e-14 && (p[2] - 0.2).abs() < 1e-14);
        assert!((res.blocking - 0.2).abs() < 1e-14);
        let res = exact_stationary(&cfg(1, 1, 0.3), DEFAULT_STATE_CAP).unwrap();
        assert!((libm::exp(res.normalizer) - 1.0 / 1.3).abs() < 1e-15);
        assert!((exact_blocking_enumeration(&cfg(1, 1, 0.5), DEFAULT_STATE_CAP).unwrap() - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn local_balance_holds() {
        for &(n, theta, rho) in &[(4, 3, 0.6), (6, 2, 1.3), (3, 4, 1.0)] {
            let c = cfg(n, theta, rho);
            let res = exact_stationary(&c, DEFAULT_STATE_CAP).unwrap();
            for (s, &lp) in res.states.iter().zip(&res.log_probs) {
                let rates = routing_rates(&c, &s).unwrap();
                for (i, &r) in rates.iter().enumerate() {
                    let Some(t) = s.shifted(i, i + 1) else { continue };
                    let lq = res.log_prob(t.counts()).unwrap();
                    let up = libm::exp(lp) * r;
                    let down = libm::exp(lq) * f64::from(t.counts()[i + 1]);
                    assert!((up - down).abs() <= 1e-10 * up.max(down));
                }
            }
        }
    }

    #[test]
    fn single_buffer_is_erlang_loss() {
        for &(n, rho) in &[(1, 0.5), (7, 0.8), (30, 1.0), (50, 1.5)] {
            let b = exact_blocking_enumeration(&cfg(n, 1, rho), DEFAULT_STATE_CAP).unwrap();
            let erl = erlang_b(n, f64::from(n) * rho);
            assert!((b - erl).abs() <= 1e-12 * erl, "n={n} rho={rho}");
            // pi(s_0) ∝ (n rho)^(n - s_0) / (n - s_0)!
            let res = exact_stationary(&cfg(n, 1, rho), DEFAULT_STATE_CAP).unwrap();
            let ln_load = libm::log(f64::from(n) * rho);
            for (s, &lp) in res.states.iter().zip(&res.log_probs) {
                let busy = u64::from(s.counts()[1]);
                let expected = busy as f64 * ln_load - ln_factorial(busy) + res.normalizer;
                assert!((lp - expected).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn blocking_closed_form_from_empty_state() {
        for &(n, theta, rho) in &[(3, 2, 1.0), (10, 3, 0.4), (8, 2, 1.7)] {
            let c = cfg(n, theta, rho);
            let res = exact_stationary(&c, DEFAULT_STATE_CAP).unwrap();
            let b = blocking_from_empty_state(&c, res.normalizer);
            assert!((b - res.blocking).abs() <= 1e-11 * b);
            let total: f64 = res.probs().sum();
            assert!((total - 1.0).abs() < 1e-10);
        }
    }
}
