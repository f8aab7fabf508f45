use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::special::ln_multinomial;

fn remaining(theta: &[u32], x: &[u32]) -> Result<Vec<u32>> {
    if theta.len() != x.len() {
        return Err(Error::invalid("x", "job vector and depth vector differ in length"));
    }
    theta
        .iter()
        .zip(x)
        .map(|(&t, &v)| {
            t.checked_sub(v)
                .ok_or_else(|| Error::invalid("x", "a server holds more jobs than its depth"))
        })
        .collect()
}

/// `ln Lambda_theta(x) = ln multinomial(|theta - x|; theta - x) + |x| ln lambda`.
pub fn ln_balance_function(theta: &[u32], x: &[u32], lambda: f64) -> Result<f64> {
    let free = remaining(theta, x)?;
    let jobs: u64 = x.iter().map(|&v| u64::from(v)).sum();
    Ok(ln_multinomial(&free) + jobs as f64 * libm::log(lambda))
}

/// Routing balance function `Lambda_theta(x)` over per-server job counts `x`.
pub fn balance_function(theta: &[u32], x: &[u32], lambda: f64) -> Result<f64> {
    ln_balance_function(theta, x, lambda).map(libm::exp)
}

/// Routing probabilities `a_i(x) = (theta_i - x_i) / sum_j (theta_j - x_j)`;
/// all zero when every server is full.
pub fn routing_probabilities(theta: &[u32], x: &[u32]) -> Result<Vec<f64>> {
    let free = remaining(theta, x)?;
    let total: u64 = free.iter().map(|&v| u64::from(v)).sum();
    Ok(free
        .iter()
        .map(|&v| if total == 0 { 0.0 } else { f64::from(v) / total as f64 })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn examples() {
        assert!((balance_function(&[1, 1], &[0, 0], 1.0).unwrap() - 2.0).abs() < 1e-14);
        let full = balance_function(&[2, 3], &[2, 3], 1.5).unwrap();
        assert!((full - libm::pow(1.5, 5.0)).abs() < 1e-12);
        assert!(balance_function(&[1], &[2], 1.0).is_err());
    }

    #[test]
    fn ratio_is_routing_rate() {
        let theta = [2u32, 2, 2];
        let lambda = 1.7;
        for a in 0..=2u32 {
            for b in 0..=2u32 {
                for c in 0..=2u32 {
                    let x = [a, b, c];
                    let base = balance_function(&theta, &x, lambda).unwrap();
                    let probs = routing_probabilities(&theta, &x).unwrap();
                    for i in 0..3 {
                        if x[i] == theta[i] {
                            assert_eq!(probs[i], 0.0);
                            continue;
                        }
                        let mut y = x;
                        y[i] += 1;
                        let up = balance_function(&theta, &y, lambda).unwrap();
                        assert!((up / base - lambda * probs[i]).abs() < 1e-12);
                    }
                }
            }
        }
        assert_eq!(routing_probabilities(&[1, 1], &[1, 1]).unwrap(), vec![0.0, 0.0]);
    }
}
