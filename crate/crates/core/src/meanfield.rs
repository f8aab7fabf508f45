//! Mean-field dynamics of the fraction of servers at each buffer level.

use alloc::vec;
use alloc::vec::Vec;

use crate::config::LevelDistribution;
use crate::error::{Error, Result};
use crate::math::{fixed_point_mean, level_distribution};

/// Denominator guard used by the integrator near the full boundary.
const GUARD: f64 = 1e-12;
/// Free capacity below which a super-critical trajectory is snapped onto `e_theta`.
const SNAP: f64 = 1e-9;
/// Largest negative entry tolerated (and clipped) after a step.
const SIMPLEX_TOL: f64 = 1e-8;

/// State of the mean-field ODE at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryPoint {
    pub time: f64,
    pub y: LevelDistribution,
}

fn check_rho(rho: f64) -> Result<()> {
    if rho.is_finite() && rho > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid("rho", "load per server must be positive"))
    }
}

/// Free capacity per server, `theta - sum_k k y_k`.
fn free_capacity(y: &[f64]) -> f64 {
    let theta = (y.len() - 1) as f64;
    theta - y.iter().enumerate().map(|(k, v)| k as f64 * v).sum::<f64>()
}

fn drift_with(rho: f64, y: &[f64], free: f64, out: &mut [f64]) {
    let theta = y.len() - 1;
    let inflow = rho / free;
    for j in 0..=theta {
        let mut d = 0.0;
        if j >= 1 {
            d += inflow * (theta - j + 1) as f64 * y[j - 1] - y[j];
        }
        if j < theta {
            d += y[j + 1] - inflow * (theta - j) as f64 * y[j];
        }
        out[j] = d;
    }
}

/// Mean-field drift `dy/dt`: a level-`j` server gains a job at rate
/// `rho (theta - j) / (theta - sum_k k y_k)` and loses one at rate `1`.
///
/// On the full boundary the drift is zero for `rho >= 1` and undefined for
/// `rho < 1`.
pub fn drift(theta: u32, rho: f64, y: &LevelDistribution) -> Result<Vec<f64>> {
    check_rho(rho)?;
    if y.theta() != theta {
        return Err(Error::invalid("y", "level count does not match theta"));
    }
    let free = free_capacity(y.probs());
    let mut out = vec![0.0; theta as usize + 1];
    if free <= 0.0 {
        return if rho >= 1.0 {
            Ok(out)
        } else {
            Err(Error::SingularDrift { rho })
        };
    }
    drift_with(rho, y.probs(), free, &mut out);
    Ok(out)
}

/// Classical RK4 with fixed `step` up to `t_end`, keeping every point.
pub fn integrate(
    theta: u32,
    rho: f64,
    y0: &LevelDistribution,
    t_end: f64,
    step: f64,
) -> Result<Vec<TrajectoryPoint>> {
    integrate_sampled(theta, rho, y0, t_end, step, 1)
}

/// As [`integrate`], keeping every `every`-th point plus the last.
///
/// After each step tiny negative entries are clipped and the vector is
/// renormalized; for `rho >= 1` a trajectory whose free capacity falls below
/// `1e-9` is absorbed at `e_theta`.
pub fn integrate_sampled(
    theta: u32,
    rho: f64,
    y0: &LevelDistribution,
    t_end: f64,
    step: f64,
    every: usize,
) -> Result<Vec<TrajectoryPoint>> {
    check_rho(rho)?;
    if y0.theta() != theta {
        return Err(Error::invalid("y0", "level count does not match theta"));
    }
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::invalid("step", "step size must be positive"));
    }
    if !(t_end.is_finite() && t_end >= 0.0) {
        return Err(Error::invalid("t_end", "horizon must be finite and non-negative"));
    }
    let every = every.max(1);
    let levels = theta as usize + 1;
    let steps = libm::ceil(t_end / step - 1e-9) as usize;
    let mut y = y0.probs().to_vec();
    let mut absorbed = rho >= 1.0 && free_capacity(&y) <= SNAP;
    if absorbed {
        y = LevelDistribution::point_mass(theta, theta).into_inner();
    }
    let mut out = vec![TrajectoryPoint {
        time: 0.0,
        y: LevelDistribution::from_weights(y.clone()),
    }];

    let mut stepper = Rk4 {
        rho,
        k: [vec![0.0; levels], vec![0.0; levels], vec![0.0; levels], vec![0.0; levels]],
        tmp: vec![0.0; levels],
    };
    for i in 1..=steps {
        let time = if i == steps { t_end } else { i as f64 * step };
        let h = time - (i - 1) as f64 * step;
        if !absorbed {
            absorbed = stepper.advance(&mut y, h, time, 0)?;
            if absorbed {
                y = LevelDistribution::point_mass(theta, theta).into_inner();
            }
        }
        if i % every == 0 || i == steps {
            out.push(TrajectoryPoint {
                time,
                y: LevelDistribution::from_weights(y.clone()),
            });
        }
    }
    Ok(out)
}

/// Deepest step halving tried near the super-critical boundary, where the
/// inflow rate `rho / free` stiffens the system.
const MAX_HALVINGS: u32 = 60;

struct Rk4 {
    rho: f64,
    k: [Vec<f64>; 4],
    tmp: Vec<f64>,
}

impl Rk4 {
    fn eval(rho: f64, state: &[f64], out: &mut [f64]) {
        let free = free_capacity(state);
        if rho >= 1.0 && free <= SNAP {
            out.iter_mut().for_each(|v| *v = 0.0);
        } else {
            drift_with(rho, state, free.max(GUARD), out);
        }
    }

    /// One RK4 step of size `h` into `next`.
    fn step(&mut self, y: &[f64], h: f64, next: &mut [f64]) {
        let levels = y.len();
        Self::eval(self.rho, y, &mut self.k[0]);
        for (stage, scale) in [(1usize, 0.5), (2, 0.5), (3, 1.0)] {
            for j in 0..levels {
                self.tmp[j] = y[j] + scale * h * self.k[stage - 1][j];
            }
            Self::eval(self.rho, &self.tmp, &mut self.k[stage]);
        }
        let k = &self.k;
        for j in 0..levels {
            next[j] = y[j] + h / 6.0 * (k[0][j] + 2.0 * k[1][j] + 2.0 * k[2][j] + k[3][j]);
        }
    }

    /// Advances `y` by `h`, halving the step for `rho >= 1` when a step
    /// leaves the simplex. Returns true once the boundary absorbs `y`.
    fn advance(&mut self, y: &mut Vec<f64>, h: f64, time: f64, depth: u32) -> Result<bool> {
        let mut next = vec![0.0; y.len()];
        self.step(y, h, &mut next);
        if self.rho >= 1.0 && free_capacity(&next) <= SNAP {
            return Ok(true);
        }
        let worst = next.iter().copied().fold(0.0, f64::min);
        if worst < -SIMPLEX_TOL || next.iter().any(|v| !v.is_finite()) {
            if self.rho >= 1.0 && depth < MAX_HALVINGS {
                if self.advance(y, 0.5 * h, time, depth + 1)? {
                    return Ok(true);
                }
                return self.advance(y, 0.5 * h, time, depth + 1);
            }
            return Err(Error::StepSize {
                time,
                violation: -worst,
            });
        }
        let total: f64 = next.iter().map(|v| v.max(0.0)).sum();
        for (v, n) in y.iter_mut().zip(&next) {
            *v = n.max(0.0) / total;
        }
        Ok(false)
    }
}

/// Max-norm of the drift at the fixed point `p_hat` (zero on the absorbing
/// boundary for `rho >= 1`).
pub fn fixed_point_residual(theta: u32, rho: f64) -> Result<f64> {
    let c_hat = fixed_point_mean(theta, rho)?;
    let p_hat = level_distribution(theta, rho, c_hat)?;
    Ok(drift(theta, rho, &p_hat)?
        .iter()
        .fold(0.0, |m: f64, v| m.max(v.abs())))
}
