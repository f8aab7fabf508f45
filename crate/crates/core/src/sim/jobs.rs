use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::Rng;
use rand_distr::Exp1;

use crate::error::{Error, Result};

/// Job-size law; every variant has mean one.
#[derive(Debug, Clone, PartialEq)]
pub enum JobSizeDist {
    Exponential,
    Deterministic,
    /// `0.1` with probability `9/9.9`, `10` with probability `0.9/9.9`.
    TwoPoint,
    /// Discrete law given as `(value, probability)` pairs.
    Custom(Vec<(f64, f64)>),
}

const TWO_POINT: [(f64, f64); 2] = [(0.1, 9.0 / 9.9), (10.0, 0.9 / 9.9)];

impl JobSizeDist {
    /// Validates a custom law: positive finite values, probabilities summing
    /// to one and unit mean, both within `1e-12`.
    pub fn custom(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::invalid("jobdist", "custom law needs at least one point"));
        }
        if points
            .iter()
            .any(|&(v, p)| !(v.is_finite() && v > 0.0 && p.is_finite() && p >= 0.0))
        {
            return Err(Error::invalid("jobdist", "values must be positive and probabilities non-negative"));
        }
        let total: f64 = points.iter().map(|&(_, p)| p).sum();
        let mean: f64 = points.iter().map(|&(v, p)| v * p).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::invalid("jobdist", alloc::format!("probabilities sum to {total}")));
        }
        if (mean - 1.0).abs() > 1e-12 {
            return Err(Error::invalid("jobdist", alloc::format!("mean is {mean}, not 1")));
        }
        Ok(JobSizeDist::Custom(points))
    }

    pub fn mean(&self) -> f64 {
        match self {
            JobSizeDist::Exponential | JobSizeDist::Deterministic => 1.0,
            JobSizeDist::TwoPoint => TWO_POINT.iter().map(|&(v, p)| v * p).sum(),
            JobSizeDist::Custom(points) => points.iter().map(|&(v, p)| v * p).sum(),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            JobSizeDist::Exponential => rng.sample(Exp1),
            JobSizeDist::Deterministic => 1.0,
            JobSizeDist::TwoPoint => discrete(&TWO_POINT, rng),
            JobSizeDist::Custom(points) => discrete(points, rng),
        }
    }
}

fn discrete<R: Rng + ?Sized>(points: &[(f64, f64)], rng: &mut R) -> f64 {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for &(v, p) in points {
        acc += p;
        if u < acc {
            return v;
        }
    }
    points.last().map_or(1.0, |&(v, _)| v)
}

impl fmt::Display for JobSizeDist {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            JobSizeDist::Exponential => f.write_str("exponential"),
            JobSizeDist::Deterministic => f.write_str("deterministic"),
            JobSizeDist::TwoPoint => f.write_str("twopoint"),
            JobSizeDist::Custom(points) => {
                f.write_str("custom:")?;
                for (i, (v, p)) in points.iter().enumerate() {
                    if i > 0 {
                        f.write_str(";")?;
                    }
                    write!(f, "{v}@{p}")?;
                }
                Ok(())
            }
        }
    }
}

/// Parses `exponential`, `deterministic`, `twopoint` or
/// `custom:value@prob;value@prob;...`.
impl FromStr for JobSizeDist {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        match lower.as_str() {
            "exponential" | "exp" => return Ok(JobSizeDist::Exponential),
            "deterministic" | "det" => return Ok(JobSizeDist::Deterministic),
            "twopoint" | "two-point" => return Ok(JobSizeDist::TwoPoint),
            _ => {}
        }
        let Some(body) = lower.strip_prefix("custom:") else {
            return Err(Error::invalid("jobdist", alloc::format!("unknown job-size law `{s}`")));
        };
        let parse = |t: &str| -> Result<f64> {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::invalid("jobdist", alloc::format!("bad number `{t}`")))
        };
        let points = body
            .split(';')
            .map(|item| {
                let (v, p) = item
                    .split_once('@')
                    .ok_or_else(|| Error::invalid("jobdist", String::from("custom points are value@prob")))?;
                Ok((parse(v)?, parse(p)?))
            })
            .collect::<Result<Vec<_>>>()?;
        JobSizeDist::custom(points)
    }
}

impl JobSizeDist {
    pub fn name(&self) -> String {
        self.to_string()
    }
}
