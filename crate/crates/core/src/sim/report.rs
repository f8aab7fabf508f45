use alloc::vec::Vec;
use core::time::Duration;

/// Statistics of one replication.
#[derive(Debug, Clone, PartialEq)]
pub struct SimReport {
    /// Counted arrivals, after warmup.
    pub arrivals: u64,
    pub blocked: u64,
    pub blocking_estimate: f64,
    /// Mean sojourn of counted jobs that completed.
    pub sojourn_mean: f64,
    /// Naive standard error of `sojourn_mean`, ignoring autocorrelation.
    pub sojourn_se: f64,
    pub completed: u64,
    pub seed: u64,
    /// Filled in by callers that have a clock.
    pub wall_clock: Option<Duration>,
}

/// Streaming mean and variance.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Welford {
    count: u64,
    mean: f64,
    m2: f64,
}

impl Welford {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance; zero below two samples.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }

    pub fn standard_error(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            libm::sqrt(self.variance() / self.count as f64)
        }
    }
}

impl FromIterator<f64> for Welford {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut w = Welford::default();
        for x in iter {
            w.push(x);
        }
        w
    }
}

/// Normal quantile for a two-sided 95% interval.
pub const Z95: f64 = 1.96;

/// Replication means with normal-approximation 95% half-widths.
#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    pub replications: usize,
    pub arrivals: u64,
    pub blocked: u64,
    pub blocking_mean: f64,
    pub blocking_se: f64,
    pub blocking_ci95: f64,
    pub sojourn_mean: f64,
    pub sojourn_se: f64,
    pub sojourn_ci95: f64,
    pub reports: Vec<SimReport>,
}

/// Aggregates replications. The result does not depend on their order
/// beyond floating-point rounding, and callers sort by seed to make it
/// bitwise reproducible.
pub fn aggregate(mut reports: Vec<SimReport>) -> Aggregate {
    reports.sort_by_key(|r| r.seed);
    let blocking: Welford = reports.iter().map(|r| r.blocking_estimate).collect();
    let sojourn: Welford = reports.iter().map(|r| r.sojourn_mean).collect();
    Aggregate {
        replications: reports.len(),
        arrivals: reports.iter().map(|r| r.arrivals).sum(),
        blocked: reports.iter().map(|r| r.blocked).sum(),
        blocking_mean: blocking.mean(),
        blocking_se: blocking.standard_error(),
        blocking_ci95: Z95 * blocking.standard_error(),
        sojourn_mean: sojourn.mean(),
        sojourn_se: sojourn.standard_error(),
        sojourn_ci95: Z95 * sojourn.standard_error(),
        reports,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn report(seed: u64, b: f64) -> SimReport {
        SimReport {
            arrivals: 100,
            blocked: (b * 100.0) as u64,
            blocking_estimate: b,
            sojourn_mean: 1.0 + b,
            sojourn_se: 0.0,
            completed: 90,
            seed,
            wall_clock: None,
        }
    }

    #[test]
    fn welford_matches_two_pass() {
        let xs = [1.0, 4.0, 2.5, 7.0, 3.25];
        let w: Welford = xs.iter().copied().collect();
        let mean = xs.iter().sum::<f64>() / 5.0;
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / 4.0;
        assert!((w.mean() - mean).abs() < 1e-14 && (w.variance() - var).abs() < 1e-13);
    }

    #[test]
    fn aggregate_is_order_independent() {
        let a = aggregate(vec![report(1, 0.1), report(2, 0.3), report(3, 0.2)]);
        let b = aggregate(vec![report(3, 0.2), report(1, 0.1), report(2, 0.3)]);
        assert_eq!(a, b);
        assert!((a.blocking_mean - 0.2).abs() < 1e-15);
        assert!((a.blocking_ci95 - 1.96 * 0.1 / libm::sqrt(3.0)).abs() < 1e-15);
        assert_eq!(a.arrivals, 300);
    }
}
