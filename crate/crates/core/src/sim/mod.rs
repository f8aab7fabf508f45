//! Discrete-event simulation of processor-sharing servers with finite
//! buffers under pluggable routing policies and job-size laws.

mod engine;
mod heap;
mod jobs;
mod policy;
mod report;

pub use engine::{
    occupancy_snapshot_stream, run_replication, time_average_states, Event, Horizon, SimSpec,
    Simulator,
};
pub use jobs::JobSizeDist;
pub use policy::{route, PolicyKind, Route};
pub use report::{aggregate, Aggregate, SimReport, Welford, Z95};
