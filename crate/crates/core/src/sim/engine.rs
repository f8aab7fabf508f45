use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;

use super::heap::IndexedHeap;
use super::jobs::JobSizeDist;
use super::policy::{LevelIndex, PolicyKind, Route};
use super::report::{SimReport, Welford};
use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::exact::OccupancyVector;

/// Everything that defines a simulated system apart from its horizon and seed.
#[derive(Debug, Clone, PartialEq)]
pub struct SimSpec {
    pub config: SystemConfig,
    pub policy: PolicyKind,
    pub jobs: JobSizeDist,
    /// Per-server service speeds; empty means unit speed everywhere. The
    /// arrival rate is `rho` times the total speed.
    pub speeds: Vec<f64>,
}

impl SimSpec {
    pub fn new(config: SystemConfig, policy: PolicyKind, jobs: JobSizeDist) -> Result<Self> {
        Ok(SimSpec {
            config,
            policy: policy.validate(config.n)?,
            jobs,
            speeds: Vec::new(),
        })
    }

    pub fn with_speeds(mut self, speeds: Vec<f64>) -> Result<Self> {
        if speeds.len() != self.config.n as usize {
            return Err(Error::invalid("speeds", alloc::format!("need {} speeds, got {}", self.config.n, speeds.len())));
        }
        if speeds.iter().any(|&c| !(c.is_finite() && c > 0.0)) {
            return Err(Error::invalid("speeds", "speeds must be positive and finite"));
        }
        self.speeds = speeds;
        Ok(self)
    }

    pub fn speed(&self, server: usize) -> f64 {
        self.speeds.get(server).copied().unwrap_or(1.0)
    }

    pub fn arrival_rate(&self) -> f64 {
        if self.speeds.is_empty() {
            self.config.lambda()
        } else {
            self.config.rho * self.speeds.iter().sum::<f64>()
        }
    }
}

/// When a run stops and when statistics start.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Horizon {
    /// Stop after `total` arrivals; the first `warmup` are not counted.
    Arrivals { total: u64, warmup: u64 },
    /// Stop at time `end`; arrivals before `warmup` are not counted.
    Time { end: f64, warmup: f64 },
}

impl Horizon {
    /// Arrival horizon with the default warmup of 20%.
    pub fn arrivals(total: u64) -> Self {
        Horizon::Arrivals { total, warmup: total / 5 }
    }

    fn validate(self) -> Result<Self> {
        match self {
            Horizon::Arrivals { total, warmup } if total <= warmup => {
                Err(Error::invalid("horizon", "need horizon_arrivals > warmup_arrivals"))
            }
            Horizon::Time { end, warmup } if !(warmup >= 0.0 && end > warmup && end.is_finite()) => {
                Err(Error::invalid("horizon", "need 0 <= warmup < t_end"))
            }
            _ => Ok(self),
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Job {
    /// Attained service of the server at which this job completes.
    finish: f64,
    arrival: f64,
    counted: bool,
}

/// A processor-sharing server tracked by its cumulative per-job attained
/// service, so that resident jobs never need individual updates.
#[derive(Debug, Clone)]
struct Server {
    jobs: Vec<Job>,
    attained: f64,
    updated: f64,
    speed: f64,
}

impl Server {
    fn advance(&mut self, now: f64) {
        if !self.jobs.is_empty() {
            self.attained += (now - self.updated) * self.speed / self.jobs.len() as f64;
        }
        self.updated = now;
    }

    /// Time of the next completion; jobs are kept sorted by decreasing
    /// finish so the next one to leave is last.
    fn next_departure(&self) -> Option<f64> {
        let job = self.jobs.last()?;
        let wait = (job.finish - self.attained).max(0.0) * self.jobs.len() as f64 / self.speed;
        Some(self.updated + wait)
    }

    fn insert(&mut self, job: Job) {
        let at = self.jobs.partition_point(|j| j.finish > job.finish);
        self.jobs.insert(at, job);
    }
}

/// Event-driven simulator of one replication.
#[derive(Debug, Clone)]
pub struct Simulator {
    spec: SimSpec,
    rng: ChaCha8Rng,
    seed: u64,
    lambda: f64,
    now: f64,
    next_arrival: f64,
    servers: Vec<Server>,
    levels: LevelIndex,
    departures: IndexedHeap,
    arrivals: u64,
    counted_arrivals: u64,
    blocked: u64,
    sojourn: Welford,
}

/// What the last call to [`Simulator::step`] did.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Event {
    Arrival { time: f64, route: Route },
    Departure { time: f64, server: usize, sojourn: f64 },
}

impl Simulator {
    pub fn new(spec: SimSpec, seed: u64) -> Self {
        let n = spec.config.n;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let lambda = spec.arrival_rate();
        let next_arrival = rng.sample::<f64, _>(Exp1) / lambda;
        let servers = (0..n as usize)
            .map(|i| Server {
                jobs: Vec::with_capacity(spec.config.theta as usize),
                attained: 0.0,
                updated: 0.0,
                speed: spec.speed(i),
            })
            .collect();
        Simulator {
            levels: LevelIndex::new(n, spec.config.theta),
            spec,
            rng,
            seed,
            lambda,
            now: 0.0,
            next_arrival,
            servers,
            departures: IndexedHeap::new(n as usize),
            arrivals: 0,
            counted_arrivals: 0,
            blocked: 0,
            sojourn: Welford::default(),
        }
    }

    pub fn now(&self) -> f64 {
        self.now
    }

    /// Time of the next event without executing it.
    pub fn peek_time(&self) -> f64 {
        self.departures
            .peek()
            .map_or(self.next_arrival, |(t, _)| t.min(self.next_arrival))
    }

    pub fn occupancy(&self) -> &[u32] {
        self.levels.occupancy()
    }

    /// Current level counts `(s_0, ..., s_theta)`.
    pub fn level_counts(&self) -> Vec<u32> {
        self.levels.counts()
    }

    pub fn snapshot(&self) -> OccupancyVector {
        OccupancyVector::new(self.levels.counts()).expect("level counts are consistent")
    }

    /// Remaining work of every resident job at `server`, at the current time.
    pub fn residual_work(&self, server: usize) -> Vec<f64> {
        let mut s = self.servers[server].clone();
        s.advance(self.now);
        s.jobs.iter().map(|j| j.finish - s.attained).collect()
    }

    fn schedule(&mut self, server: usize) {
        match self.servers[server].next_departure() {
            Some(time) => self.departures.set(server, time),
            None => self.departures.remove(server),
        }
    }

    /// Accepts a job of the given size at `server` at the current time,
    /// bypassing the policy. Used to build crafted traces.
    pub fn inject(&mut self, server: usize, size: f64, counted: bool) -> Result<()> {
        if self.levels.occupancy()[server] >= self.spec.config.theta {
            return Err(Error::invalid("server", "server is full"));
        }
        let now = self.now;
        let s = &mut self.servers[server];
        s.advance(now);
        let finish = s.attained + size;
        s.insert(Job { finish, arrival: now, counted });
        self.levels.shift(server, true);
        self.schedule(server);
        Ok(())
    }

    /// Executes the next event, counting the arrival when `counted`.
    pub fn step(&mut self, counted: bool) -> Event {
        match self.departures.peek() {
            Some((time, server)) if time < self.next_arrival => self.depart(server, time),
            _ => self.arrive(counted),
        }
    }

    fn depart(&mut self, server: usize, time: f64) -> Event {
        self.now = time;
        let s = &mut self.servers[server];
        s.advance(time);
        let job = s.jobs.pop().expect("scheduled server is busy");
        if s.jobs.is_empty() {
            s.attained = 0.0;
        }
        let sojourn = time - job.arrival;
        if job.counted {
            self.sojourn.push(sojourn);
        }
        self.levels.shift(server, false);
        self.schedule(server);
        Event::Departure { time, server, sojourn }
    }

    fn arrive(&mut self, counted: bool) -> Event {
        let time = self.next_arrival;
        self.now = time;
        self.next_arrival = time + self.rng.sample::<f64, _>(Exp1) / self.lambda;
        self.arrivals += 1;
        if counted {
            self.counted_arrivals += 1;
        }
        let route = self.levels.choose(self.spec.policy, &mut self.rng);
        match route {
            Route::Server(server) => {
                let size = self.spec.jobs.sample(&mut self.rng);
                self.inject(server, size, counted).expect("policy picked a non-full server");
            }
            Route::Blocked => {
                if counted {
                    self.blocked += 1;
                }
            }
        }
        Event::Arrival { time, route }
    }

    /// Statistics over counted arrivals so far.
    pub fn report(&self) -> SimReport {
        SimReport {
            arrivals: self.counted_arrivals,
            blocked: self.blocked,
            blocking_estimate: if self.counted_arrivals == 0 {
                0.0
            } else {
                self.blocked as f64 / self.counted_arrivals as f64
            },
            sojourn_mean: self.sojourn.mean(),
            sojourn_se: self.sojourn.standard_error(),
            completed: self.sojourn.count(),
            seed: self.seed,
            wall_clock: None,
        }
    }

    /// Runs to the horizon, calling `observe(time, counts)` at every
    /// `period` from the start of the counted window (time horizons only).
    pub fn run(
        &mut self,
        horizon: Horizon,
        period: Option<f64>,
        mut observe: impl FnMut(f64, &[u32]),
    ) -> Result<SimReport> {
        let horizon = horizon.validate()?;
        if let Some(p) = period {
            if !(p > 0.0 && p.is_finite()) {
                return Err(Error::invalid("period", "sampling period must be positive"));
            }
        }
        match horizon {
            Horizon::Arrivals { total, warmup } => {
                while self.arrivals < total {
                    let counted = self.arrivals >= warmup;
                    self.step(counted);
                }
            }
            Horizon::Time { end, warmup } => {
                let samples = period.map_or(0, |p| ((end - warmup) / p).floor() as u64);
                let mut taken = 0u64;
                loop {
                    let next = self.peek_time();
                    while taken < samples {
                        let at = warmup + taken as f64 * period.unwrap_or(0.0);
                        if at > next {
                            break;
                        }
                        observe(at, &self.levels.counts());
                        taken += 1;
                    }
                    if next > end {
                        break;
                    }
                    self.step(next >= warmup);
                }
            }
        }
        Ok(self.report())
    }
}

/// Runs one replication over an arrival horizon.
pub fn run_replication(
    config: SystemConfig,
    policy: PolicyKind,
    jobs: JobSizeDist,
    horizon_arrivals: u64,
    warmup_arrivals: u64,
    seed: u64,
) -> Result<SimReport> {
    let spec = SimSpec::new(config, policy, jobs)?;
    Simulator::new(spec, seed).run(
        Horizon::Arrivals {
            total: horizon_arrivals,
            warmup: warmup_arrivals,
        },
        None,
        |_, _| {},
    )
}

/// Samples the level counts every `period` over `[warmup, t_end)`, giving
/// `floor((t_end - warmup) / period)` snapshots.
pub fn occupancy_snapshot_stream(
    spec: &SimSpec,
    t_end: f64,
    warmup: f64,
    period: f64,
    seed: u64,
) -> Result<Vec<OccupancyVector>> {
    let mut out = Vec::new();
    Simulator::new(spec.clone(), seed).run(Horizon::Time { end: t_end, warmup }, Some(period), |_, counts| {
        out.push(OccupancyVector::new(counts.to_vec()).expect("level counts are consistent"));
    })?;
    Ok(out)
}

/// Empirical time-stationary distribution of the state, accumulated over
/// `events` events after a warmup of `warmup_events`.
pub fn time_average_states(
    spec: &SimSpec,
    warmup_events: u64,
    events: u64,
    seed: u64,
) -> Vec<(OccupancyVector, f64)> {
    let mut sim = Simulator::new(spec.clone(), seed);
    for _ in 0..warmup_events {
        sim.step(false);
    }
    let mut acc: alloc::collections::BTreeMap<Vec<u32>, f64> = alloc::collections::BTreeMap::new();
    let start = sim.now();
    for _ in 0..events {
        let dt = sim.peek_time() - sim.now();
        *acc.entry(sim.level_counts()).or_insert(0.0) += dt;
        sim.step(true);
    }
    let total = sim.now() - start;
    acc.into_iter()
        .map(|(c, w)| (OccupancyVector::new(c).expect("level counts are consistent"), w / total))
        .collect()
}
