//! Finite-n exact results approaching their large-n limits, and the
//! simulator against the heterogeneous exact model.

use insensitive_core::exact::{exact_stationary, hetero_stationary, HeteroConfig, ServerType, DEFAULT_STATE_CAP, HETERO_STATE_CAP};
use insensitive_core::math::{fixed_point_mean, level_distribution};
use insensitive_core::meanfield::integrate;
use insensitive_core::sim::{aggregate, Horizon, JobSizeDist, PolicyKind, SimSpec, Simulator};
use insensitive_core::{LevelDistribution, SystemConfig};

#[test]
fn mean_occupancy_profile_tends_to_fixed_point() {
    let (theta, rho) = (2, 0.7);
    let p_hat = level_distribution(theta, rho, fixed_point_mean(theta, rho).unwrap()).unwrap();
    let gaps: Vec<f64> = [20u32, 50, 100, 200]
        .iter()
        .map(|&n| {
            let result = exact_stationary(&SystemConfig::new(n, theta, rho).unwrap(), DEFAULT_STATE_CAP).unwrap();
            result
                .mean_fractions()
                .iter()
                .zip(p_hat.probs())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
        })
        .collect();
    assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{gaps:?}");
    assert!(gaps[3] <= 2e-2, "{gaps:?}");
}

#[test]
fn ode_limit_and_stationary_limit_commute() {
    // long-run ODE state from two different starts equals the fixed point
    let (theta, rho) = (3, 0.6);
    let p_hat = level_distribution(theta, rho, fixed_point_mean(theta, rho).unwrap()).unwrap();
    for y0 in [LevelDistribution::point_mass(theta, 0), LevelDistribution::point_mass(theta, 2)] {
        let traj = integrate(theta, rho, &y0, 200.0, 0.01).unwrap();
        assert!(traj.last().unwrap().y.sup_distance(&p_hat) < 1e-6);
    }
}

#[test]
fn fast_servers_match_heterogeneous_exact_model() {
    // two speed-2 and three speed-1 servers, theta = 2, total arrival rate 4
    let types = vec![
        ServerType { count: 2, speed: 2.0, theta: 2 },
        ServerType { count: 3, speed: 1.0, theta: 2 },
    ];
    let n = 5.0;
    let lambda = 4.0;
    let exact = hetero_stationary(&HeteroConfig::new(types, lambda / n).unwrap(), HETERO_STATE_CAP).unwrap();
    let speeds = vec![2.0, 2.0, 1.0, 1.0, 1.0];
    let total_speed: f64 = speeds.iter().sum();
    let cfg = SystemConfig::new(5, 2, lambda / total_speed).unwrap();
    let reports: Vec<_> = (0..10)
        .map(|i| {
            let spec = SimSpec::new(cfg, PolicyKind::Insensitive, JobSizeDist::TwoPoint)
                .unwrap()
                .with_speeds(speeds.clone())
                .unwrap();
            Simulator::new(spec, 100 + i).run(Horizon::arrivals(200_000), None, |_, _| {}).unwrap()
        })
        .collect();
    let agg = aggregate(reports);
    assert!(
        (agg.blocking_mean - exact.blocking).abs() <= 3.0 * agg.blocking_se,
        "{} +- {} vs {}",
        agg.blocking_mean,
        agg.blocking_se,
        exact.blocking
    );
}
