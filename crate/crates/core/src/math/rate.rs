use crate::error::{Error, Result};
use crate::math::erlang::{erlang_b, erlang_b_inverse, ln_truncated_exp_sum};
use crate::math::special::{ln_factorial, LogSumExp};

/// Maximizer and curvature data of `R(t) = ln g_theta(t) - rho t` for `rho < 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFunctionData {
    /// Unique maximizer `gamma = Erl_theta^{-1}(1 - rho)`.
    pub gamma: f64,
    /// `((1 - rho)/rho) * (theta/(rho gamma) - 1)`.
    pub alpha: f64,
    /// `R(gamma)`.
    pub r_at_gamma: f64,
}

/// `R(t) = ln g_theta(t) - rho t` (order 0) and its first two derivatives.
///
/// With `g' = g_{theta-1}` the first derivative is `1 - Erl_theta(t) - rho`.
/// The second derivative is `(g g_{theta-2} - g_{theta-1}^2)/g^2`, whose
/// numerator is a polynomial with only negative coefficients; it is summed
/// in that form so no cancellation occurs for large `t`.
pub fn rate_function(theta: u32, rho: f64, t: f64, order: u8) -> Result<f64> {
    if theta == 0 {
        return Err(Error::invalid("theta", "buffer depth must be at least 1"));
    }
    if !(rho.is_finite() && rho > 0.0) {
        return Err(Error::invalid("rho", "load per server must be positive"));
    }
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::invalid("t", "argument must be finite and non-negative"));
    }
    match order {
        0 => Ok(ln_truncated_exp_sum(theta, t) - rho * t),
        1 => Ok(1.0 - erlang_b(theta, t) - rho),
        2 => Ok(second_derivative(theta, t)),
        _ => Err(Error::invalid("order", "derivative order must be 0, 1 or 2")),
    }
}

fn second_derivative(theta: u32, t: f64) -> f64 {
    // -numerator = t^(theta-1) * sum_{m=0}^{theta-1} c_m t^m with
    // c_0 = 1/(theta-1)! and c_m = (1/m - 1/theta) / ((theta-1)! (m-1)!).
    let lf = ln_factorial(u64::from(theta - 1));
    let ln_t = libm::log(t);
    let mut acc = LogSumExp::default();
    acc.push(-lf);
    if t > 0.0 {
        for m in 1..theta {
            let coef = 1.0 / f64::from(m) - 1.0 / f64::from(theta);
            acc.push(libm::log(coef) - lf - ln_factorial(u64::from(m - 1)) + f64::from(m) * ln_t);
        }
    }
    let ln_lead = if theta == 1 { 0.0 } else { f64::from(theta - 1) * ln_t };
    -libm::exp(ln_lead + acc.value() - 2.0 * ln_truncated_exp_sum(theta, t))
}

/// Maximizer `gamma`, curvature constant `alpha` and `R(gamma)` for `rho < 1`.
pub fn gamma_alpha(theta: u32, rho: f64) -> Result<RateFunctionData> {
    if theta == 0 {
        return Err(Error::invalid("theta", "buffer depth must be at least 1"));
    }
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::invalid(
            "rho",
            "the interior maximizer exists only for 0 < rho < 1",
        ));
    }
    let gamma = erlang_b_inverse(theta, 1.0 - rho)?;
    let alpha = (1.0 - rho) / rho * (f64::from(theta) / (rho * gamma) - 1.0);
    let r_at_gamma = rate_function(theta, rho, gamma, 0)?;
    if rate_function(theta, rho, gamma, 2)? >= 0.0 {
        return Err(Error::Numerical(alloc::format!(
            "R'' is not negative at gamma = {gamma}"
        )));
    }
    Ok(RateFunctionData {
        gamma,
        alpha,
        r_at_gamma,
    })
}

/// `ln g_theta(t) - (t - t^(theta+1)/(theta+1)!)`, the remainder of the
/// two-term expansion of the log truncated exponential near zero.
pub fn log_truncexp_expansion_residual(theta: u32, t: f64) -> Result<f64> {
    if !(t > 0.0 && t <= 0.1) {
        return Err(Error::invalid("t", "expansion is checked on (0, 0.1]"));
    }
    let lead = libm::exp(f64::from(theta + 1) * libm::log(t) - ln_factorial(u64::from(theta + 1)));
    Ok(ln_truncated_exp_sum(theta, t) - (t - lead))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::erlang::truncated_exp_sum;

    #[test]
    fn rate_function_examples() {
        assert_eq!(rate_function(3, 0.4, 0.0, 0).unwrap(), 0.0);
        let v = rate_function(1, 0.8, 0.25, 0).unwrap();
        assert!((v - (libm::log(1.25) - 0.2)).abs() < 1e-15);
        assert!(rate_function(1, 0.8, 0.25, 1).unwrap().abs() < 1e-15);
        assert!(rate_function(1, 0.8, 0.25, 3).is_err());
        assert!(rate_function(1, 0.8, -1.0, 0).is_err());
    }

    #[test]
    fn second_derivative_matches_closed_forms() {
        // theta = 1: R'' = -1/(1+t)^2.
        for &t in &[0.0, 0.3, 5.0, 100.0] {
            let v = rate_function(1, 0.5, t, 2).unwrap();
            assert!((v + 1.0 / ((1.0 + t) * (1.0 + t))).abs() < 1e-15);
        }
        // theta = 2: (g g_0 - g_1^2)/g^2 with g = 1 + t + t^2/2.
        for &t in &[0.0, 0.3, 5.0, 40.0] {
            let g = 1.0 + t + 0.5 * t * t;
            let expected = (g - (1.0 + t) * (1.0 + t)) / (g * g);
            let v = rate_function(2, 0.5, t, 2).unwrap();
            assert!((v - expected).abs() < 1e-12 * expected.abs().max(1e-3));
        }
        // finite-difference check of the first derivative
        for theta in 1..=6 {
            for &t in &[0.5, 2.0, 7.0] {
                let h = 1e-5;
                let d1 = rate_function(theta, 0.7, t, 1).unwrap();
                let fd = (rate_function(theta, 0.7, t + h, 0).unwrap()
                    - rate_function(theta, 0.7, t - h, 0).unwrap())
                    / (2.0 * h);
                assert!((d1 - fd).abs() < 1e-8);
                let d2 = rate_function(theta, 0.7, t, 2).unwrap();
                let fd2 = (rate_function(theta, 0.7, t + h, 1).unwrap()
                    - rate_function(theta, 0.7, t - h, 1).unwrap())
                    / (2.0 * h);
                assert!((d2 - fd2).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn rate_function_is_concave() {
        for theta in 1..=10 {
            for i in 1..=1000 {
                let t = 0.1 * f64::from(i);
                assert!(rate_function(theta, 0.5, t, 2).unwrap() < 0.0, "theta={theta} t={t}");
            }
        }
    }

    #[test]
    fn gamma_alpha_examples() {
        let d = gamma_alpha(1, 0.8).unwrap();
        assert!((d.gamma - 0.25).abs() < 1e-12);
        assert!((d.alpha - 1.0).abs() < 1e-10);
        let d = gamma_alpha(2, 0.5).unwrap();
        assert!((d.gamma - (1.0 + libm::sqrt(3.0))).abs() < 1e-12);
        assert!(gamma_alpha(1, 1.0 - 1e-9).unwrap().gamma < 1e-8);
        assert!(gamma_alpha(2, 1.0).is_err());
        assert!(gamma_alpha(2, 1.5).is_err());
    }

    #[test]
    fn gamma_is_stationary_point() {
        for theta in 1..=10 {
            for i in 1..=19 {
                let rho = 0.05 * f64::from(i);
                let d = gamma_alpha(theta, rho).unwrap();
                assert!(rate_function(theta, rho, d.gamma, 1).unwrap().abs() <= 1e-10);
                let g = truncated_exp_sum(theta, d.gamma);
                let lead = libm::exp(
                    f64::from(theta) * libm::log(d.gamma) - ln_factorial(u64::from(theta)),
                );
                assert!(((1.0 - rho) * g - lead).abs() <= 1e-10 * g);
                assert!(d.alpha > 0.0);
            }
        }
    }

    #[test]
    fn expansion_residual() {
        assert!(log_truncexp_expansion_residual(1, 1e-3).unwrap().abs() <= 1e-8);
        let r = log_truncexp_expansion_residual(2, 1e-2).unwrap();
        assert!(r.abs() / 1e-6 <= 1e-1);
        let mut prev = f64::INFINITY;
        for k in 2..8 {
            let r = log_truncexp_expansion_residual(1, libm::pow(10.0, -f64::from(k))).unwrap().abs();
            assert!(r < prev);
            prev = r;
        }
        assert!(log_truncexp_expansion_residual(1, 0.0).is_err());
    }
}
