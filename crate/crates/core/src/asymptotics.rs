//! Large-`n` laws: blocking in the three load regimes, QED staffing, the
//! CLT covariance, moderate and large deviations.

use alloc::vec::Vec;

use crate::config::{LevelDistribution, SystemConfig};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::math::{
    fixed_point_mean, gamma_alpha, level_distribution, ln_phi_hat, ln_psi, psi,
};

/// Load regime an estimate belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regime {
    /// `rho < 1`: blocking decays exponentially in `n`.
    Subcritical,
    /// `rho = 1 - a n^(-theta/(theta+1))`: blocking decays like `n^(-theta/(theta+1))`.
    CriticalQed,
    /// `rho > 1`: blocking tends to `1 - 1/rho`.
    Supercritical,
}

impl Regime {
    pub fn as_str(self) -> &'static str {
        match self {
            Regime::Subcritical => "subcritical",
            Regime::CriticalQed => "critical_qed",
            Regime::Supercritical => "supercritical",
        }
    }
}

/// A large-`n` blocking estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoticEstimate {
    pub value: f64,
    pub regime: Regime,
    /// Load per server the estimate refers to.
    pub rho: f64,
    /// Size of the neglected terms.
    pub order_term: &'static str,
}

fn check_theta(theta: u32) -> Result<()> {
    if theta == 0 {
        Err(Error::invalid("theta", "buffer depth must be at least 1"))
    } else {
        Ok(())
    }
}

/// Laplace-method blocking `exp(-n R(gamma)) sqrt(alpha / (2 pi n))` for `rho < 1`.
pub fn blocking_subcritical(config: &SystemConfig) -> Result<AsymptoticEstimate> {
    let data = gamma_alpha(config.theta, config.rho)?;
    let n = f64::from(config.n);
    let ln_b = -n * data.r_at_gamma + 0.5 * libm::log(data.alpha / (2.0 * core::f64::consts::PI * n));
    Ok(AsymptoticEstimate {
        value: libm::exp(ln_b),
        regime: Regime::Subcritical,
        rho: config.rho,
        order_term: "relative o(1)",
    })
}

/// Two-term super-critical blocking `1 - 1/rho + ((rho - 1) n)^(-theta)`.
pub fn blocking_supercritical(config: &SystemConfig) -> Result<AsymptoticEstimate> {
    let excess = (config.rho - 1.0) * f64::from(config.n);
    if config.rho <= 1.0 {
        return Err(Error::invalid("rho", "super-critical expansion needs rho > 1"));
    }
    if excess < 1.0 {
        return Err(Error::invalid(
            "rho",
            alloc::format!("n (rho - 1) = {excess} must be at least 1"),
        ));
    }
    Ok(AsymptoticEstimate {
        value: 1.0 - 1.0 / config.rho + libm::pow(excess, -f64::from(config.theta)),
        regime: Regime::Supercritical,
        rho: config.rho,
        order_term: "o(((rho - 1) n)^-theta)",
    })
}

/// Load `rho = 1 - a n^(-theta/(theta+1))` of the QED window.
pub fn qed_rho(n: u32, theta: u32, a: f64) -> f64 {
    1.0 - a * libm::pow(f64::from(n), -f64::from(theta) / f64::from(theta + 1))
}

/// QED blocking `[n^(theta/(theta+1)) PhiHat_theta(0; a)]^-1` at `rho = qed_rho(n, theta, a)`.
pub fn blocking_qed(n: u32, theta: u32, a: f64) -> Result<AsymptoticEstimate> {
    check_theta(theta)?;
    if n == 0 {
        return Err(Error::invalid("n", "need at least one server"));
    }
    let exponent = f64::from(theta) / f64::from(theta + 1);
    let ln_b = -exponent * libm::log(f64::from(n)) - ln_phi_hat(theta, 0.0, a)?;
    Ok(AsymptoticEstimate {
        value: libm::exp(ln_b),
        regime: Regime::CriticalQed,
        rho: qed_rho(n, theta, a),
        order_term: "relative o(1)",
    })
}

/// Half-width of the QED window in the `a` scale used by [`blocking_asymptotic`].
pub const QED_WINDOW: f64 = 2.0;

/// QED parameter `a = (1 - rho) n^(theta/(theta+1))` of a configuration.
pub fn qed_parameter(config: &SystemConfig) -> f64 {
    let exponent = f64::from(config.theta) / f64::from(config.theta + 1);
    (1.0 - config.rho) * libm::pow(f64::from(config.n), exponent)
}

/// Picks the regime from `a = qed_parameter(config)`: QED for
/// `|a| <= QED_WINDOW`, otherwise sub- or super-critical by the sign of `a`.
pub fn blocking_asymptotic(config: &SystemConfig) -> Result<AsymptoticEstimate> {
    let a = qed_parameter(config);
    if a.abs() <= QED_WINDOW {
        let mut estimate = blocking_qed(config.n, config.theta, a)?;
        estimate.rho = config.rho;
        Ok(estimate)
    } else if a > 0.0 {
        blocking_subcritical(config)
    } else {
        blocking_supercritical(config)
    }
}

/// A staffing decision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Staffing {
    pub servers: u32,
    /// QED parameter after the refinement step.
    pub a: f64,
}

const STAFFING_A_RANGE: (f64, f64) = (-50.0, 50.0);

/// The `a` in `[-50, 50]` with `[scale^(theta/(theta+1)) PhiHat_theta(0; a)]^-1 = target`.
fn solve_qed_parameter(scale: f64, theta: u32, target: f64) -> Result<f64> {
    let exponent = f64::from(theta) / f64::from(theta + 1);
    let goal = -libm::log(target) - exponent * libm::log(scale);
    let (mut lo, mut hi) = STAFFING_A_RANGE;
    let f = |a: f64| ln_phi_hat(theta, 0.0, a).map(|v| v - goal);
    if f(lo)? > 0.0 || f(hi)? < 0.0 {
        return Err(Error::UnreachableTarget { target, lo, hi });
    }
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if f(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Servers needed so that QED blocking at offered load `lambda` meets `target_b`:
/// `n = ceil(lambda + a lambda^(1/(theta+1)))`. One refinement re-solves `a`
/// with the first server count, rather than `lambda`, in the `n^(theta/(theta+1))` factor.
pub fn staffing(lambda: f64, theta: u32, target_b: f64) -> Result<Staffing> {
    check_theta(theta)?;
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::invalid("lambda", "offered load must be positive"));
    }
    if !(target_b > 0.0 && target_b < 1.0) {
        return Err(Error::invalid("target_b", "target blocking must lie in (0, 1)"));
    }
    let root = 1.0 / f64::from(theta + 1);
    let a0 = solve_qed_parameter(lambda, theta, target_b)?;
    let n0 = (lambda + a0 * libm::pow(lambda, root)).max(1.0);
    let a1 = solve_qed_parameter(n0, theta, target_b)?;
    let n = libm::ceil(lambda + a1 * libm::pow(lambda, root)).max(1.0);
    if n > f64::from(u32::MAX) {
        return Err(Error::invalid("lambda", "server count overflows"));
    }
    Ok(Staffing {
        servers: n as u32,
        a: a1,
    })
}

/// Limiting covariance of `(S_0, ..., S_{theta-1}) / sqrt(n)` around `n p_hat`.
#[derive(Debug, Clone, PartialEq)]
pub struct CltResult {
    pub sigma_inv: Matrix,
    pub sigma: Matrix,
}

/// `Sigma^-1 = psi 11^T - v v^T / (theta - c_hat) + diag(1/p_hat_0, ..., 1/p_hat_{theta-1})`
/// with `v = (theta, theta-1, ..., 1)`; `Sigma` by inversion.
pub fn clt_covariance(theta: u32, rho: f64) -> Result<CltResult> {
    check_theta(theta)?;
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::invalid("rho", "CLT covariance needs 0 < rho < 1"));
    }
    let c_hat = fixed_point_mean(theta, rho)?;
    let p_hat = level_distribution(theta, rho, c_hat)?;
    let psi_hat = psi(theta, rho, c_hat)?;
    let free = f64::from(theta) - c_hat;
    let dim = theta as usize;
    let v: Vec<f64> = (0..dim).map(|i| (dim - i) as f64).collect();
    let sigma_inv = Matrix::from_fn(dim, |i, j| {
        let diag = if i == j { 1.0 / p_hat.probs()[i] } else { 0.0 };
        psi_hat - v[i] * v[j] / free + diag
    });
    let sigma = sigma_inv.inverse()?;
    Ok(CltResult { sigma_inv, sigma })
}

/// Limit of `P(S_{theta-1} / n^(theta/(theta+1)) > z)` at `rho = 1`:
/// `PhiHat_theta(z; 0) / PhiHat_theta(0; 0)`.
pub fn md_tail(theta: u32, z: f64) -> Result<f64> {
    check_theta(theta)?;
    if !(z.is_finite() && z >= 0.0) {
        return Err(Error::invalid("z", "threshold must be finite and non-negative"));
    }
    Ok(libm::exp(ln_phi_hat(theta, z, 0.0)? - ln_phi_hat(theta, 0.0, 0.0)?))
}

/// `P(S_{theta-1} = k) = (1 - 1/rho) rho^-k` in the super-critical limit.
pub fn geometric_law(rho: f64, k: u32) -> Result<f64> {
    if !(rho.is_finite() && rho > 1.0) {
        return Err(Error::invalid("rho", "geometric limit needs rho > 1"));
    }
    Ok((1.0 - 1.0 / rho) * libm::pow(rho, -f64::from(k)))
}

/// Large-deviation rate `(c - c_hat) + ln(psi(c)/psi(c_hat)) - D_KL(q || p(c))`
/// of an occupancy profile `q` with mean `c`; `-inf` when `q` charges a level
/// that `p(c)` does not.
pub fn ld_rate(config: &SystemConfig, q: &LevelDistribution) -> Result<f64> {
    let (theta, rho) = (config.theta, config.rho);
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::invalid("rho", "rate function is stated for 0 < rho < 1"));
    }
    if q.theta() != theta {
        return Err(Error::invalid("q", "level count does not match theta"));
    }
    let c = q.mean().clamp(0.0, f64::from(theta));
    let c_hat = fixed_point_mean(theta, rho)?;
    let p = level_distribution(theta, rho, c)?;
    let mut kl = 0.0;
    for (&qk, &pk) in q.probs().iter().zip(p.probs()) {
        if qk == 0.0 {
            continue;
        }
        if pk == 0.0 {
            return Ok(f64::NEG_INFINITY);
        }
        kl += qk * libm::log(qk / pk);
    }
    Ok((c - c_hat) + ln_psi(theta, rho, c)? - ln_psi(theta, rho, c_hat)? - kl)
}
