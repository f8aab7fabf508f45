use alloc::vec;
use alloc::vec::Vec;

use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::exact::state::{enumerate_states, state_rank, OccupancyVector};
use crate::exact::stationary::rates_unchecked;
use crate::linalg::Matrix;

/// Largest chain the dense stationary solve accepts.
pub const DENSE_SOLVE_LIMIT: usize = 4000;

/// Sparse generator: off-diagonal rates per row plus the diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct Generator<S> {
    pub states: Vec<S>,
    /// `(column, rate)` pairs for each row, rates positive.
    pub transitions: Vec<Vec<(usize, f64)>>,
    /// Minus the total outflow of each row.
    pub diagonal: Vec<f64>,
}

impl<S> Generator<S> {
    pub(crate) fn from_transitions(states: Vec<S>, transitions: Vec<Vec<(usize, f64)>>) -> Self {
        let diagonal = transitions
            .iter()
            .map(|row| -row.iter().map(|&(_, r)| r).sum::<f64>())
            .collect();
        Generator {
            states,
            transitions,
            diagonal,
        }
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Rate of the `from -> to` transition (zero if absent).
    pub fn rate(&self, from: usize, to: usize) -> f64 {
        if from == to {
            return self.diagonal[from];
        }
        self.transitions[from]
            .iter()
            .filter(|&&(c, _)| c == to)
            .map(|&(_, r)| r)
            .sum()
    }

    /// Largest absolute row sum (zero for a proper generator).
    pub fn max_row_sum(&self) -> f64 {
        self.transitions
            .iter()
            .zip(&self.diagonal)
            .map(|(row, d)| (row.iter().map(|&(_, r)| r).sum::<f64>() + d).abs())
            .fold(0.0, f64::max)
    }

    /// Solves `pi Q = 0`, `sum(pi) = 1` by dense elimination, replacing the
    /// last balance equation with the normalization.
    pub fn stationary(&self) -> Result<Vec<f64>> {
        let m = self.len();
        if m > DENSE_SOLVE_LIMIT {
            return Err(Error::invalid(
                "states",
                alloc::format!("{m} states exceed the dense solve limit {DENSE_SOLVE_LIMIT}"),
            ));
        }
        // Row j of Q^T is the balance equation of state j.
        let mut a = Matrix::zeros(m);
        for (i, row) in self.transitions.iter().enumerate() {
            a[(i, i)] += self.diagonal[i];
            for &(j, r) in row {
                a[(j, i)] += r;
            }
        }
        for j in 0..m {
            a[(m - 1, j)] = 1.0;
        }
        let mut b = vec![0.0; m];
        b[m - 1] = 1.0;
        a.solve(&b)
    }
}

/// Generator of the homogeneous chain on [`enumerate_states`]: an arrival
/// moves a server from level `i` to `i + 1` at rate `lambda_i(s)`, a
/// departure moves one from `i + 1` to `i` at rate `s_{i+1}`.
pub fn generator_matrix(config: &SystemConfig, cap: u128) -> Result<Generator<OccupancyVector>> {
    let states = enumerate_states(config.n, config.theta, cap)?;
    let theta = config.theta as usize;
    let transitions = states
        .iter()
        .map(|s| {
            let mut row = Vec::new();
            for (i, r) in rates_unchecked(config, s.counts()).into_iter().enumerate() {
                if r > 0.0 {
                    let t = s.shifted(i, i + 1).expect("positive rate needs a server");
                    row.push((state_rank(t.counts()), r));
                }
            }
            for i in 1..=theta {
                if let Some(t) = s.shifted(i, i - 1) {
                    row.push((state_rank(t.counts()), f64::from(s.counts()[i])));
                }
            }
            row
        })
        .collect();
    Ok(Generator::from_transitions(states, transitions))
}
