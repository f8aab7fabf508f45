//! Adaptive Simpson quadrature and a half-line integrator for unimodal,
//! log-scaled integrands.

use alloc::format;

use crate::error::{Error, Result};

const MIN_DEPTH: u32 = 4;
const MAX_DEPTH: u32 = 48;

/// Log-integrand drop (relative to the peak) beyond which the tail is
/// discarded; `exp(-60)` is about `1e-26`.
const TAIL_DROP: f64 = 60.0;

/// Integrates `f` over `[a, b]` to absolute tolerance `tol` with adaptive
/// Simpson and Richardson extrapolation.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let fa = f(a);
    let fb = f(b);
    let (m, fm, whole) = simpson(f, a, fa, b, fb);
    refine(f, a, fa, b, fb, m, fm, whole, tol, 0)
}

fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
    let m = 0.5 * (a + b);
    let fm = f(m);
    (m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb))
}

#[allow(clippy::too_many_arguments)]
fn refine<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    fa: f64,
    b: f64,
    fb: f64,
    m: f64,
    fm: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64> {
    let (lm, flm, left) = simpson(f, a, fa, m, fm);
    let (rm, frm, right) = simpson(f, m, fm, b, fb);
    let delta = left + right - whole;
    let converged = delta.abs() <= 15.0 * tol
        // tolerance below rounding noise of the panel itself
        || delta.abs() <= 64.0 * f64::EPSILON * (left.abs() + right.abs());
    if depth >= MIN_DEPTH && converged {
        return Ok(left + right + delta / 15.0);
    }
    if !delta.is_finite() {
        return Err(Error::Quadrature(format!(
            "non-finite integrand on [{a}, {b}]"
        )));
    }
    if depth >= MAX_DEPTH {
        return Err(Error::Quadrature(format!(
            "no convergence on [{a}, {b}] (panel error {delta:e}, tolerance {tol:e})"
        )));
    }
    let l = refine(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth + 1)?;
    let r = refine(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth + 1)?;
    Ok(l + r)
}

/// Locates the maximizer of a unimodal function on `[lower, inf)` by a
/// doubling bracket followed by golden-section search.
pub fn maximize_unimodal<F: Fn(f64) -> f64>(g: &F, lower: f64, step: f64) -> Result<f64> {
    let g_lower = g(lower);
    let mut prev = lower;
    let mut x = lower + step;
    let mut gx = g(x);
    let (mut lo, mut hi) = if gx <= g_lower && g_lower.is_finite() {
        (lower, x)
    } else {
        let mut bracket = None;
        for _ in 0..1100 {
            let next = lower + 2.0 * (x - lower);
            let g_next = g(next);
            if g_next < gx || !next.is_finite() {
                bracket = Some((prev, next));
                break;
            }
            prev = x;
            x = next;
            gx = g_next;
        }
        bracket.ok_or_else(|| Error::Quadrature(format!("no peak found above {lower}")))?
    };

    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut g1 = g(x1);
    let mut g2 = g(x2);
    for _ in 0..200 {
        if hi - lo <= 1e-13 * (1.0 + lo.abs()) {
            break;
        }
        if g1 < g2 {
            lo = x1;
            x1 = x2;
            g1 = g2;
            x2 = lo + INV_PHI * (hi - lo);
            g2 = g(x2);
        } else {
            hi = x2;
            x2 = x1;
            g2 = g1;
            x1 = hi - INV_PHI * (hi - lo);
            g1 = g(x1);
        }
    }
    let mid = 0.5 * (lo + hi);
    // Peak sitting on the boundary.
    if g_lower.is_finite() && g_lower >= g(mid) {
        return Ok(lower);
    }
    Ok(mid)
}

/// Natural log of `int_lower^inf exp(log_f(t)) dt` for a unimodal `log_f`.
///
/// The peak is found first; the integral is then split into panels whose
/// width doubles away from the peak, each integrated by adaptive Simpson on
/// `exp(log_f - log_f(peak))`, until the integrand has dropped by `e^-60`.
/// `width_hint` is a rough guess of the peak width.
pub fn ln_integral_unimodal<F: Fn(f64) -> f64>(
    log_f: &F,
    lower: f64,
    width_hint: f64,
    rel_tol: f64,
) -> Result<f64> {
    let peak = maximize_unimodal(log_f, lower, width_hint)?;
    let top = log_f(peak);
    if !top.is_finite() {
        return Err(Error::Quadrature(format!(
            "log-integrand is {top} at its peak {peak}"
        )));
    }
    let shifted = |t: f64| libm::exp(log_f(t) - top);

    let right_width = unit_drop_width(log_f, peak, top, width_hint, 1.0, f64::INFINITY);
    let left_room = peak - lower;
    let left_width = if left_room > 0.0 {
        unit_drop_width(log_f, peak, top, width_hint, -1.0, left_room)
    } else {
        0.0
    };
    let reference = if left_width > 0.0 {
        right_width.min(left_width)
    } else {
        right_width
    };
    let tol = rel_tol * reference / 32.0;

    let mut total = 0.0;
    let mut x0 = peak;
    let mut d = right_width;
    let mut done = false;
    for _ in 0..1100 {
        let x1 = peak + d;
        if !x1.is_finite() {
            break;
        }
        total += adaptive_simpson(&shifted, x0, x1, tol)?;
        if log_f(x1) - top < -TAIL_DROP {
            done = true;
            break;
        }
        x0 = x1;
        d *= 2.0;
    }
    if !done {
        return Err(Error::Quadrature(format!(
            "integrand does not decay to the right of {peak}"
        )));
    }

    if left_width > 0.0 {
        let mut x1 = peak;
        let mut d = left_width;
        loop {
            let x0 = (peak - d).max(lower);
            total += adaptive_simpson(&shifted, x0, x1, tol)?;
            if x0 <= lower || log_f(x0) - top < -TAIL_DROP {
                break;
            }
            x1 = x0;
            d *= 2.0;
        }
    }
    Ok(top + libm::log(total))
}

/// Distance from the peak at which the log-integrand has dropped by about
/// one unit in direction `dir`, never beyond `max_d`.
fn unit_drop_width<F: Fn(f64) -> f64>(
    log_f: &F,
    peak: f64,
    top: f64,
    start: f64,
    dir: f64,
    max_d: f64,
) -> f64 {
    let mut d = if start > 0.0 { start.min(max_d) } else { 1.0f64.min(max_d) };
    for _ in 0..400 {
        let drop = top - log_f(peak + dir * d);
        if drop > 2.0 || drop.is_nan() {
            d *= 0.5;
        } else if drop < 0.5 {
            if d >= max_d {
                return max_d;
            }
            d = (2.0 * d).min(max_d);
            if d > 1e300 {
                break;
            }
        } else {
            break;
        }
    }
    d
}
