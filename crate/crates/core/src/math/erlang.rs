use crate::error::{Error, Result};
use crate::math::special::ln_factorial;

/// `g_theta(t) = sum_{k=0}^{theta} t^k / k!`, evaluated in Horner form.
pub fn truncated_exp_sum(theta: u32, t: f64) -> f64 {
    let mut acc = 1.0;
    for k in (1..=theta).rev() {
        acc = 1.0 + acc * t / f64::from(k);
    }
    acc
}

/// `g_theta(t) - 1`, without the cancellation of subtracting one.
pub(crate) fn truncated_exp_sum_minus_one(theta: u32, t: f64) -> f64 {
    if theta == 0 {
        return 0.0;
    }
    let mut acc = 1.0;
    for k in (2..=theta).rev() {
        acc = 1.0 + acc * t / f64::from(k);
    }
    acc * t
}

/// `ln g_theta(t)`, safe for large `t` and `theta`.
pub fn ln_truncated_exp_sum(theta: u32, t: f64) -> f64 {
    if t <= f64::from(theta).max(1.0) {
        return libm::log1p(truncated_exp_sum_minus_one(theta, t));
    }
    // Factor out the leading term t^theta / theta!:
    // g = t^theta/theta! * sum_j theta!/(theta-j)! t^-j, nested innermost first.
    let mut acc = 1.0;
    for m in 1..=theta {
        acc = 1.0 + acc * f64::from(m) / t;
    }
    f64::from(theta) * libm::log(t) - ln_factorial(u64::from(theta)) + libm::log(acc)
}

/// Erlang loss probability `Erl_theta(a) = (a^theta/theta!) / g_theta(a)` for
/// `theta` lines at offered load `a`.
///
/// Uses the recursion `B_k = a B_{k-1} / (k + a B_{k-1})`, which stays in
/// `[0, 1]` and never overflows.
pub fn erlang_b(theta: u32, a: f64) -> f64 {
    let mut b = 1.0;
    for k in 1..=theta {
        let ab = a * b;
        b = ab / (f64::from(k) + ab);
    }
    b
}

/// The offered load `a >= 0` with `erlang_b(theta, a) == b`, by bisection on a
/// geometrically grown bracket. Absolute tolerance `1e-12`.
pub fn erlang_b_inverse(theta: u32, b: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&b) {
        return Err(Error::invalid(
            "b",
            alloc::format!("blocking {b} has no finite offered load (need 0 <= b < 1)"),
        ));
    }
    if b == 0.0 || theta == 0 {
        return Ok(0.0);
    }
    let mut lo = 0.0;
    let mut hi = (f64::from(theta) / (1.0 - b)).max(1.0);
    while erlang_b(theta, hi) < b {
        lo = hi;
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(Error::Numerical(alloc::format!(
                "no bracket for Erlang inverse at b = {b}"
            )));
        }
    }
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= 1e-12 || mid <= lo || mid >= hi {
            break;
        }
        if erlang_b(theta, mid) < b {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
