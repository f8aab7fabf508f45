//! Replicated simulation experiments, fanned out over threads.

use std::time::Instant;

use insensitive_core::exact::OccupancyVector;
use insensitive_core::sim::{aggregate, Aggregate, Horizon, SimReport, SimSpec, Simulator};
use rayon::prelude::*;

use crate::error::{CliError, CliResult};

/// Arrival budget of one replication.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunLength {
    pub arrivals: u64,
    pub warmup: u64,
}

impl RunLength {
    /// `arrivals` in total, of which the first 20% are discarded.
    pub fn with_default_warmup(arrivals: u64) -> Self {
        RunLength {
            arrivals,
            warmup: arrivals / 5,
        }
    }
}

fn check_replications(replications: usize) -> CliResult<()> {
    if replications < 2 {
        return Err(CliError::validation("replications must be at least 2"));
    }
    Ok(())
}

/// Runs replication `i` with seed `base_seed + i`, in parallel, and
/// aggregates the replication means. Output is independent of thread count.
pub fn run_experiment(
    spec: &SimSpec,
    replications: usize,
    length: RunLength,
    base_seed: u64,
) -> CliResult<Aggregate> {
    check_replications(replications)?;
    let horizon = Horizon::Arrivals {
        total: length.arrivals,
        warmup: length.warmup,
    };
    let reports = (0..replications as u64)
        .into_par_iter()
        .map(|i| {
            let start = Instant::now();
            let mut report: SimReport =
                Simulator::new(spec.clone(), base_seed.wrapping_add(i)).run(horizon, None, |_, _| {})?;
            report.wall_clock = Some(start.elapsed());
            Ok(report)
        })
        .collect::<CliResult<Vec<_>>>()?;
    Ok(aggregate(reports))
}

/// Snapshot streams of independent replications over `[warmup, t_end)`,
/// ordered by replication index.
pub fn snapshot_replications(
    spec: &SimSpec,
    replications: usize,
    t_end: f64,
    warmup: f64,
    period: f64,
    base_seed: u64,
) -> CliResult<Vec<Vec<OccupancyVector>>> {
    (0..replications as u64)
        .into_par_iter()
        .map(|i| {
            insensitive_core::sim::occupancy_snapshot_stream(spec, t_end, warmup, period, base_seed.wrapping_add(i))
                .map_err(CliError::from)
        })
        .collect()
}
