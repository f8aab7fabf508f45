use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::math::ln_truncated_exp_sum;
use crate::math::quadrature::ln_integral_unimodal;
use crate::math::special::ln_factorial;

const REL_TOL: f64 = 1e-12;

/// `ln int_0^inf h_z(t)^n exp(-t n rho) dt` with
/// `h_z(t) = sum_k t^k z^(theta-k) / k!`; `z = 1` gives `h = g_theta`.
fn ln_transform(config: &SystemConfig, z: f64) -> Result<f64> {
    let n = f64::from(config.n);
    let theta = config.theta;
    let rho = config.rho;
    let ln_h = move |t: f64| -> f64 {
        if z == 1.0 {
            ln_truncated_exp_sum(theta, t)
        } else if z == 0.0 {
            f64::from(theta) * libm::log(t) - ln_factorial(u64::from(theta))
        } else {
            // h_z(t) = z^theta g_theta(t / z)
            f64::from(theta) * libm::log(z) + ln_truncated_exp_sum(theta, t / z)
        }
    };
    let log_f = |t: f64| n * (ln_h(t) - rho * t);
    ln_integral_unimodal(&log_f, 0.0, 1.0 / libm::sqrt(n), REL_TOL)
}

/// `ln B` from `B = [n rho int_0^inf g_theta(t)^n e^(-t n rho) dt]^-1`.
pub fn ln_blocking_via_integral(config: &SystemConfig) -> Result<f64> {
    Ok(-libm::log(config.lambda()) - ln_transform(config, 1.0)?)
}

/// Blocking probability from the integral transform; valid far beyond the
/// enumeration cap.
pub fn blocking_via_integral(config: &SystemConfig) -> Result<f64> {
    ln_blocking_via_integral(config).map(libm::exp)
}

/// Generating function `E[z^sbar]` of the total number of jobs,
/// `B n rho int (sum_k t^k z^(theta-k)/k!)^n e^(-t n rho) dt`.
pub fn tasks_mgf(config: &SystemConfig, z: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&z) {
        return Err(Error::invalid("z", "generating function argument must lie in [0, 1]"));
    }
    if z == 1.0 {
        return Ok(1.0);
    }
    Ok(libm::exp(ln_transform(config, z)? - ln_transform(config, 1.0)?))
}
