use crate::error::{Error, Result};
use crate::math::quadrature::{adaptive_simpson, ln_integral_unimodal};
use crate::math::special::ln_factorial;

const REL_TOL: f64 = 1e-12;

/// `ln PhiHat_theta(z; a)`, the log of `int_z^inf exp(a u - u^(theta+1)/(theta+1)!) du`.
///
/// On `[0, inf)` the exponent is concave, so the half-line integrator applies.
/// A negative `z` adds a finite piece `[z, 0]` integrated directly.
pub fn ln_phi_hat(theta: u32, z: f64, a: f64) -> Result<f64> {
    if theta == 0 {
        return Err(Error::invalid("theta", "buffer depth must be at least 1"));
    }
    if !z.is_finite() || !a.is_finite() {
        return Err(Error::invalid("z", "arguments must be finite"));
    }
    let power = theta + 1;
    let ln_fact = ln_factorial(u64::from(power));
    let exponent = move |u: f64| a * u - libm::pow(u, f64::from(power)) / libm::exp(ln_fact);

    let lower = z.max(0.0);
    let right = ln_integral_unimodal(&exponent, lower, 1.0, REL_TOL)?;
    if z >= 0.0 {
        return Ok(right);
    }

    // Largest exponent on [z, 0]: endpoints or the interior critical point
    // where u^theta / theta! = a.
    let mut top = exponent(z).max(exponent(0.0));
    let target = a * libm::exp(ln_factorial(u64::from(theta)));
    let critical = if theta % 2 == 0 && target > 0.0 {
        Some(-libm::pow(target, 1.0 / f64::from(theta)))
    } else if theta % 2 == 1 && target < 0.0 {
        Some(-libm::pow(-target, 1.0 / f64::from(theta)))
    } else {
        None
    };
    if let Some(u) = critical.filter(|&u| u > z) {
        top = top.max(exponent(u));
    }
    let left = adaptive_simpson(&|u: f64| libm::exp(exponent(u) - top), z, 0.0, REL_TOL * 1e-3)?;
    let hi = right.max(top + libm::log(left));
    Ok(hi + libm::log(libm::exp(right - hi) + left * libm::exp(top - hi)))
}

/// `PhiHat_theta(z; a) = int_z^inf exp(a u - u^(theta+1)/(theta+1)!) du`.
pub fn phi_hat(theta: u32, z: f64, a: f64) -> Result<f64> {
    ln_phi_hat(theta, z, a).map(libm::exp)
}
