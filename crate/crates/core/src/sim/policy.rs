use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};

/// Dispatching rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PolicyKind {
    /// Route to server `i` with probability proportional to `theta - x_i`.
    Insensitive,
    /// Join a least-loaded non-full server.
    Jsq,
    /// Sample `d` distinct servers and join the least loaded of them.
    JsqD(u32),
    /// Join an idle server if any, otherwise a uniformly chosen one.
    Jiq,
    /// Join a uniformly chosen server.
    Bernoulli,
}

impl PolicyKind {
    pub fn validate(self, n: u32) -> Result<Self> {
        if let PolicyKind::JsqD(d) = self {
            if d == 0 || d > n {
                return Err(Error::invalid("policy", alloc::format!("JSQ(d) needs 1 <= d <= n, got d = {d}")));
            }
        }
        Ok(self)
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PolicyKind::Insensitive => f.write_str("insensitive"),
            PolicyKind::Jsq => f.write_str("jsq"),
            PolicyKind::JsqD(d) => write!(f, "jsq{d}"),
            PolicyKind::Jiq => f.write_str("jiq"),
            PolicyKind::Bernoulli => f.write_str("bernoulli"),
        }
    }
}

/// Parses `insensitive`, `jsq`, `jsqD` / `jsq(D)`, `jiq` or `bernoulli`.
impl FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        match lower.as_str() {
            "insensitive" => return Ok(PolicyKind::Insensitive),
            "jsq" => return Ok(PolicyKind::Jsq),
            "jiq" => return Ok(PolicyKind::Jiq),
            "bernoulli" | "random" => return Ok(PolicyKind::Bernoulli),
            _ => {}
        }
        let d = lower
            .strip_prefix("jsq")
            .map(|rest| rest.trim_start_matches('(').trim_end_matches(')'))
            .and_then(|rest| rest.parse::<u32>().ok())
            .ok_or_else(|| Error::invalid("policy", alloc::format!("unknown policy `{s}`")))?;
        Ok(PolicyKind::JsqD(d))
    }
}

/// Outcome of a routing decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Route {
    Server(usize),
    Blocked,
}

/// Reference O(n) implementation of every policy over per-server occupancies.
pub fn route<R: Rng + ?Sized>(policy: PolicyKind, occupancy: &[u32], theta: u32, rng: &mut R) -> Route {
    let n = occupancy.len();
    match policy {
        PolicyKind::Insensitive => {
            let total: u64 = occupancy.iter().map(|&x| u64::from(theta - x)).sum();
            if total == 0 {
                return Route::Blocked;
            }
            let mut r = rng.random_range(0..total);
            for (i, &x) in occupancy.iter().enumerate() {
                let w = u64::from(theta - x);
                if r < w {
                    return Route::Server(i);
                }
                r -= w;
            }
            unreachable!("draw below the total weight")
        }
        PolicyKind::Jsq => {
            let Some(min) = occupancy.iter().copied().filter(|&x| x < theta).min() else {
                return Route::Blocked;
            };
            let ties: Vec<usize> = (0..n).filter(|&i| occupancy[i] == min).collect();
            Route::Server(ties[rng.random_range(0..ties.len())])
        }
        PolicyKind::JsqD(d) => {
            let picks = rand::seq::index::sample(rng, n, (d as usize).min(n));
            least_loaded(picks.iter(), occupancy, theta, rng)
        }
        PolicyKind::Jiq => {
            let idle: Vec<usize> = (0..n).filter(|&i| occupancy[i] == 0).collect();
            if !idle.is_empty() {
                return Route::Server(idle[rng.random_range(0..idle.len())]);
            }
            uniform(occupancy, theta, rng)
        }
        PolicyKind::Bernoulli => uniform(occupancy, theta, rng),
    }
}

fn uniform<R: Rng + ?Sized>(occupancy: &[u32], theta: u32, rng: &mut R) -> Route {
    let i = rng.random_range(0..occupancy.len());
    if occupancy[i] < theta {
        Route::Server(i)
    } else {
        Route::Blocked
    }
}

/// Least occupied among `picks`, ties broken uniformly; blocked if all are full.
fn least_loaded<R: Rng + ?Sized>(
    picks: impl Iterator<Item = usize>,
    occupancy: &[u32],
    theta: u32,
    rng: &mut R,
) -> Route {
    let mut best = None;
    let mut best_occ = theta;
    let mut ties = 0u32;
    for i in picks {
        let x = occupancy[i];
        if x < best_occ {
            best = Some(i);
            best_occ = x;
            ties = 1;
        } else if x == best_occ && best.is_some() {
            ties += 1;
            if rng.random_range(0..ties) == 0 {
                best = Some(i);
            }
        }
    }
    best.map_or(Route::Blocked, Route::Server)
}

/// Servers grouped by occupancy level, supporting O(1) moves and O(theta)
/// policy decisions.
#[derive(Debug, Clone)]
pub(crate) struct LevelIndex {
    theta: u32,
    occupancy: Vec<u32>,
    members: Vec<Vec<u32>>,
    position: Vec<u32>,
    free_slots: u64,
}

impl LevelIndex {
    pub fn new(n: u32, theta: u32) -> Self {
        let mut members = vec![Vec::new(); theta as usize + 1];
        members[0] = (0..n).collect();
        LevelIndex {
            theta,
            occupancy: vec![0; n as usize],
            members,
            position: (0..n).collect(),
            free_slots: u64::from(n) * u64::from(theta),
        }
    }

    pub fn occupancy(&self) -> &[u32] {
        &self.occupancy
    }

    /// Server counts per level, `s_k = |members_k|`.
    pub fn counts(&self) -> Vec<u32> {
        self.members.iter().map(|m| m.len() as u32).collect()
    }

    pub fn shift(&mut self, server: usize, up: bool) {
        let from = self.occupancy[server] as usize;
        let to = if up { from + 1 } else { from - 1 };
        let pos = self.position[server] as usize;
        let bucket = &mut self.members[from];
        bucket.swap_remove(pos);
        if let Some(&moved) = bucket.get(pos) {
            self.position[moved as usize] = pos as u32;
        }
        self.position[server] = self.members[to].len() as u32;
        self.members[to].push(server as u32);
        self.occupancy[server] = to as u32;
        if up {
            self.free_slots -= 1;
        } else {
            self.free_slots += 1;
        }
    }

    fn pick<R: Rng + ?Sized>(&self, level: usize, rng: &mut R) -> usize {
        let bucket = &self.members[level];
        bucket[rng.random_range(0..bucket.len())] as usize
    }

    pub fn choose<R: Rng + ?Sized>(&self, policy: PolicyKind, rng: &mut R) -> Route {
        let theta = self.theta as usize;
        match policy {
            PolicyKind::Insensitive => {
                if self.free_slots == 0 {
                    return Route::Blocked;
                }
                let mut r = rng.random_range(0..self.free_slots);
                for k in 0..theta {
                    let weight = (theta - k) as u64;
                    let w = weight * self.members[k].len() as u64;
                    if r < w {
                        return Route::Server(self.members[k][(r / weight) as usize] as usize);
                    }
                    r -= w;
                }
                unreachable!("draw below the free capacity")
            }
            PolicyKind::Jsq => (0..theta)
                .find(|&k| !self.members[k].is_empty())
                .map_or(Route::Blocked, |k| Route::Server(self.pick(k, rng))),
            PolicyKind::JsqD(d) => {
                let n = self.occupancy.len();
                let d = (d as usize).min(n);
                if d == 1 {
                    return uniform(&self.occupancy, self.theta, rng);
                }
                let picks = rand::seq::index::sample(rng, n, d);
                least_loaded(picks.iter(), &self.occupancy, self.theta, rng)
            }
            PolicyKind::Jiq => {
                if self.members[0].is_empty() {
                    uniform(&self.occupancy, self.theta, rng)
                } else {
                    Route::Server(self.pick(0, rng))
                }
            }
            PolicyKind::Bernoulli => uniform(&self.occupancy, self.theta, rng),
        }
    }
}
