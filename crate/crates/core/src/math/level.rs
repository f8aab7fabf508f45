use alloc::vec::Vec;

use crate::config::LevelDistribution;
use crate::error::{Error, Result};
use crate::math::erlang::{erlang_b_inverse, ln_truncated_exp_sum, truncated_exp_sum};
use crate::math::special::ln_factorial;

fn check_rho(rho: f64) -> Result<()> {
    if rho.is_finite() && rho > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid("rho", "load per server must be positive"))
    }
}

fn check_mean(theta: u32, c: f64) -> Result<()> {
    if (0.0..=f64::from(theta)).contains(&c) {
        Ok(())
    } else {
        Err(Error::invalid(
            "c",
            alloc::format!("mean level {c} outside [0, {theta}]"),
        ))
    }
}

/// Mean occupancy `c_hat` of the mean-field stationary point:
/// `theta - rho * Erl_theta^{-1}(1 - rho)` for `rho <= 1`, `theta` above.
///
/// Evaluated as the mean of the profile with `a = gamma`, which equals the
/// expression above but avoids cancelling `theta` against `rho * gamma`.
pub fn fixed_point_mean(theta: u32, rho: f64) -> Result<f64> {
    check_rho(rho)?;
    if rho >= 1.0 {
        return Ok(f64::from(theta));
    }
    let gamma = erlang_b_inverse(theta, 1.0 - rho)?;
    Ok(profile(theta, gamma).mean())
}

/// Levels weighted by `a^(theta - k) / (theta - k)!`.
fn profile(theta: u32, a: f64) -> LevelDistribution {
    if a <= 0.0 {
        return LevelDistribution::point_mass(theta, theta);
    }
    let ln_a = libm::log(a);
    let ln_w: Vec<f64> = (0..=theta)
        .map(|k| {
            let j = u64::from(theta - k);
            j as f64 * ln_a - ln_factorial(j)
        })
        .collect();
    let top = ln_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    LevelDistribution::from_weights(ln_w.iter().map(|w| libm::exp(w - top)).collect())
}

/// `psi(c) = g_theta((theta - c) / rho)`.
pub fn psi(theta: u32, rho: f64, c: f64) -> Result<f64> {
    check_rho(rho)?;
    check_mean(theta, c)?;
    Ok(truncated_exp_sum(theta, (f64::from(theta) - c) / rho))
}

/// `ln psi(c)`.
pub fn ln_psi(theta: u32, rho: f64, c: f64) -> Result<f64> {
    check_rho(rho)?;
    check_mean(theta, c)?;
    Ok(ln_truncated_exp_sum(theta, (f64::from(theta) - c) / rho))
}

/// The profile `p(c)` with `p_k ∝ ((theta - c)/rho)^(theta - k) / (theta - k)!`.
///
/// At `c = c_hat` this is the mean-field fixed point `p_hat`, whose mean is
/// `c_hat`; for other `c` the mean generally differs from `c`.
pub fn level_distribution(theta: u32, rho: f64, c: f64) -> Result<LevelDistribution> {
    check_rho(rho)?;
    check_mean(theta, c)?;
    Ok(profile(theta, (f64::from(theta) - c) / rho))
}

/// Mean sojourn time from the mean-field expression
/// `(1/rho) * sum_i (theta - i)/(theta - c_hat) * i * p_hat_i`.
///
/// Note that this weights level `i` by the routing probability of a server
/// *holding* `i` jobs; compare [`mean_sojourn_little`].
pub fn mean_sojourn_meanfield(theta: u32, rho: f64) -> Result<f64> {
    check_rho(rho)?;
    if rho >= 1.0 {
        return Err(Error::invalid(
            "rho",
            "mean-field sojourn needs rho < 1 (c_hat < theta)",
        ));
    }
    let c_hat = fixed_point_mean(theta, rho)?;
    let p_hat = level_distribution(theta, rho, c_hat)?;
    let free = f64::from(theta) - c_hat;
    let sum: f64 = p_hat
        .probs()
        .iter()
        .enumerate()
        .map(|(i, p)| (f64::from(theta) - i as f64) / free * i as f64 * p)
        .sum();
    Ok(sum / rho)
}

/// Mean sojourn time of the mean-field fixed point by Little's law,
/// `c_hat / rho` (accepted jobs per server per unit time is `rho` when
/// blocking vanishes).
pub fn mean_sojourn_little(theta: u32, rho: f64) -> Result<f64> {
    check_rho(rho)?;
    if rho >= 1.0 {
        return Err(Error::invalid("rho", "Little's-law sojourn needs rho < 1"));
    }
    Ok(fixed_point_mean(theta, rho)? / rho)
}
