use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Default upper bound on the number of enumerated states.
pub const DEFAULT_STATE_CAP: u128 = 5_000_000;

/// Server-occupancy counts `s = (s_0, ..., s_theta)`: `s_k` servers hold `k` jobs.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OccupancyVector {
    counts: Vec<u32>,
    total_jobs: u64,
}

impl OccupancyVector {
    pub fn new(counts: Vec<u32>) -> Result<Self> {
        if counts.len() < 2 {
            return Err(Error::invalid("counts", "need at least levels 0 and 1"));
        }
        if counts.iter().all(|&c| c == 0) {
            return Err(Error::invalid("counts", "need at least one server"));
        }
        Ok(Self::from_counts(counts))
    }

    pub(crate) fn from_counts(counts: Vec<u32>) -> Self {
        let total_jobs = counts
            .iter()
            .enumerate()
            .map(|(k, &c)| k as u64 * u64::from(c))
            .sum();
        OccupancyVector { counts, total_jobs }
    }

    /// All `n` servers empty.
    pub fn empty(n: u32, theta: u32) -> Self {
        let mut counts = vec![0; theta as usize + 1];
        counts[0] = n;
        OccupancyVector {
            counts,
            total_jobs: 0,
        }
    }

    /// All `n` servers full.
    pub fn full(n: u32, theta: u32) -> Self {
        let mut counts = vec![0; theta as usize + 1];
        counts[theta as usize] = n;
        OccupancyVector {
            counts,
            total_jobs: u64::from(n) * u64::from(theta),
        }
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    /// Total number of jobs `sbar = sum_k k s_k`.
    pub fn total_jobs(&self) -> u64 {
        self.total_jobs
    }

    pub fn n(&self) -> u32 {
        self.counts.iter().sum()
    }

    pub fn theta(&self) -> u32 {
        (self.counts.len() - 1) as u32
    }

    pub fn is_full(&self) -> bool {
        self.counts[..self.counts.len() - 1].iter().all(|&c| c == 0)
    }

    /// Moves one server from level `from` to level `to`, if one is there.
    pub fn shifted(&self, from: usize, to: usize) -> Option<Self> {
        if self.counts[from] == 0 {
            return None;
        }
        let mut counts = self.counts.clone();
        counts[from] -= 1;
        counts[to] += 1;
        let total_jobs = self.total_jobs + to as u64 - from as u64;
        Some(OccupancyVector { counts, total_jobs })
    }
}

/// `C(m, k)` in `u128`, saturating on overflow.
pub(crate) fn binomial(m: u64, k: u64) -> u128 {
    if k > m {
        return 0;
    }
    let k = k.min(m - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = match acc.checked_mul(u128::from(m - i)) {
            Some(v) => v / u128::from(i + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// Number of occupancy vectors, `C(n + theta, theta)`.
pub fn state_count(n: u32, theta: u32) -> u128 {
    binomial(u64::from(n) + u64::from(theta), u64::from(theta))
}

pub(crate) fn check_cap(states: u128, cap: u128) -> Result<()> {
    if states > cap {
        Err(Error::StateSpaceTooLarge { states, cap })
    } else {
        Ok(())
    }
}

/// Calls `visit` on every composition of `n` into `theta + 1` parts, in
/// descending lexicographic order, reusing one buffer.
pub fn for_each_state(n: u32, theta: u32, cap: u128, mut visit: impl FnMut(&[u32])) -> Result<()> {
    check_cap(state_count(n, theta), cap)?;
    let last = theta as usize;
    let mut s = vec![0u32; last + 1];
    s[0] = n;
    loop {
        visit(&s);
        // rightmost non-last position holding anything
        let Some(i) = (0..last).rev().find(|&i| s[i] > 0) else {
            return Ok(());
        };
        let tail: u32 = s[i + 1..].iter().sum();
        s[i] -= 1;
        for v in s[i + 1..].iter_mut() {
            *v = 0;
        }
        s[i + 1] = tail + 1;
    }
}

/// All occupancy vectors for `n` servers and depth `theta`, in descending
/// lexicographic order: `(n, 0, ..., 0)` first, `(0, ..., 0, n)` last.
pub fn enumerate_states(n: u32, theta: u32, cap: u128) -> Result<Vec<OccupancyVector>> {
    let mut out = Vec::with_capacity(state_count(n, theta).min(cap) as usize);
    for_each_state(n, theta, cap, |s| out.push(OccupancyVector::from_counts(s.to_vec())))?;
    Ok(out)
}

/// Position of `s` in the [`enumerate_states`] order.
pub fn state_rank(s: &[u32]) -> usize {
    let theta = s.len() - 1;
    let mut remaining: u64 = s.iter().map(|&c| u64::from(c)).sum();
    let mut rank: u128 = 0;
    for (j, &sj) in s[..theta].iter().enumerate() {
        let sj = u64::from(sj);
        let parts = (theta - j) as u64;
        // states with a larger value at position j: sum over v > s_j of
        // C(remaining - v + parts - 1, parts - 1) = C(remaining - s_j - 1 + parts, parts)
        if sj < remaining {
            rank += binomial(remaining - sj - 1 + parts, parts);
        }
        remaining -= sj;
    }
    rank as usize
}
