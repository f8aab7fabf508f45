//! Acceptance criteria AC1-AC14. Each criterion prints one PASS/FAIL line to
//! stderr (outside the test harness capture) and asserts its outcome and
//! runtime budget. Criteria run one at a time so budgets are not shared.

use std::io::Write;
use std::process::Command;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use insensitive::experiment::{run_experiment, snapshot_replications, RunLength};
use insensitive_core::asymptotics::{ld_rate, staffing};
use insensitive_core::exact::{
    blocking_via_integral, exact_blocking_enumeration, exact_stationary, generator_matrix,
    stationary_log_prob, OccupancyVector, DEFAULT_STATE_CAP,
};
use insensitive_core::math::{fixed_point_mean, gamma_alpha, level_distribution, phi_hat};
use insensitive_core::meanfield::{fixed_point_residual, integrate_sampled};
use insensitive_core::sim::{JobSizeDist, PolicyKind, SimSpec, Welford};
use insensitive_core::{LevelDistribution, SystemConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};

static SERIAL: Mutex<()> = Mutex::new(());

fn cfg(n: u32, theta: u32, rho: f64) -> SystemConfig {
    SystemConfig::new(n, theta, rho).unwrap()
}

/// Runs one criterion under the global lock, prints its verdict and fails
/// the test if the check or the budget is missed.
fn criterion(id: &str, name: &str, budget: Option<Duration>, check: impl FnOnce() -> (bool, String)) {
    let _guard = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let start = Instant::now();
    let (ok, detail) = check();
    let elapsed = start.elapsed();
    let in_budget = budget.is_none_or(|b| elapsed <= b);
    let verdict = if ok && in_budget { "PASS" } else { "FAIL" };
    let budget_text = budget.map_or_else(|| "no budget".to_string(), |b| format!("budget {:.0} s", b.as_secs_f64()));
    let line = format!(
        "\n{id:<5} {verdict} {name}: {detail} [{:.2} s, {budget_text}]\n",
        elapsed.as_secs_f64()
    );
    let _ = std::io::stderr().write_all(line.as_bytes());
    assert!(ok, "{id} {name}: {detail}");
    assert!(in_budget, "{id} {name}: took {elapsed:?}, budget {budget:?}");
}

fn secs(s: u64) -> Option<Duration> {
    Some(Duration::from_secs(s))
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn strictly_decreasing(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| w[1] < w[0])
}

/// Erlang loss by direct summation in log space, independent of the library.
fn erlang_loss_direct(lines: u32, load: f64) -> f64 {
    let terms: Vec<f64> = (0..=lines)
        .map(|k| f64::from(k) * load.ln() - (1..=k).map(|i| f64::from(i).ln()).sum::<f64>())
        .collect();
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let total: f64 = terms.iter().map(|t| (t - max).exp()).sum();
    (terms[lines as usize] - max).exp() / total
}

#[test]
fn ac01_erlang_identity() {
    criterion("AC1", "erlang identity", secs(1), || {
        let mut worst = 0.0f64;
        for n in 1..=50 {
            for rho in [0.3, 0.8, 1.0, 1.5] {
                let exact = exact_blocking_enumeration(&cfg(n, 1, rho), DEFAULT_STATE_CAP).unwrap();
                worst = worst.max(rel(exact, erlang_loss_direct(n, f64::from(n) * rho)));
            }
        }
        (worst <= 1e-12, format!("max relative error {worst:.2e} (tol 1e-12)"))
    });
}

#[test]
fn ac02_generator_oracle() {
    criterion("AC2", "generator oracle", secs(10), || {
        let (mut sup, mut rev) = (0.0f64, 0.0f64);
        for n in 1..=6 {
            for theta in 1..=3 {
                for rho in [0.5, 1.0, 1.3] {
                    let c = cfg(n, theta, rho);
                    let closed = exact_stationary(&c, DEFAULT_STATE_CAP).unwrap();
                    let g = generator_matrix(&c, DEFAULT_STATE_CAP).unwrap();
                    let pi = g.stationary().unwrap();
                    let closed_pi: Vec<f64> =
                        g.states.iter().map(|s| closed.log_prob(s.counts()).unwrap().exp()).collect();
                    for (a, b) in pi.iter().zip(&closed_pi) {
                        sup = sup.max((a - b).abs());
                    }
                    for (i, row) in g.transitions.iter().enumerate() {
                        for &(j, q) in row {
                            let back = g.rate(j, i);
                            let ratio = closed_pi[i] * q / (closed_pi[j] * back);
                            rev = rev.max((ratio - 1.0).abs());
                        }
                    }
                }
            }
        }
        (
            sup <= 1e-9 && rev <= 1e-10,
            format!("sup-norm {sup:.2e} (tol 1e-9), reversibility {rev:.2e} (tol 1e-10)"),
        )
    });
}

#[test]
fn ac03_integral_equals_enumeration() {
    criterion("AC3", "integral equals enumeration", secs(30), || {
        let mut worst = 0.0f64;
        let mut cases = Vec::new();
        for n in [1, 2, 3, 5, 8, 13, 20, 29, 36, 43, 50] {
            for theta in 1..=3 {
                for rho in [0.3, 0.8, 1.0, 1.5] {
                    cases.push((n, theta, rho));
                }
            }
        }
        cases.push((200, 2, 0.8));
        for (n, theta, rho) in cases {
            let c = cfg(n, theta, rho);
            let e = exact_blocking_enumeration(&c, DEFAULT_STATE_CAP).unwrap();
            let i = blocking_via_integral(&c).unwrap();
            worst = worst.max(rel(i, e));
        }
        (worst <= 1e-8, format!("max relative gap {worst:.2e} (tol 1e-8)"))
    });
}

#[test]
fn ac04_laplace_convergence() {
    criterion("AC4", "laplace convergence", secs(60), || {
        let mut ok = true;
        let mut parts = Vec::new();
        for theta in [1, 2] {
            let data = gamma_alpha(theta, 0.8).unwrap();
            let ratios: Vec<f64> = [50u32, 100, 200, 400]
                .iter()
                .map(|&n| {
                    let nf = f64::from(n);
                    let b = exact_blocking_enumeration(&cfg(n, theta, 0.8), DEFAULT_STATE_CAP).unwrap();
                    b * (nf * data.r_at_gamma).exp() * (2.0 * std::f64::consts::PI * nf / data.alpha).sqrt()
                })
                .collect();
            let gaps: Vec<f64> = ratios.iter().map(|r| (r - 1.0).abs()).collect();
            ok &= strictly_decreasing(&gaps) && gaps[3] <= 0.05;
            parts.push(format!("theta={theta} ratios {ratios:.5?}"));
        }
        (ok, parts.join("; "))
    });
}

#[test]
fn ac05_qed_constant() {
    criterion("AC5", "qed constant", secs(60), || {
        let mut ok = true;
        let mut parts = Vec::new();
        for theta in [1, 2] {
            let phi = phi_hat(theta, 0.0, 0.0).unwrap();
            let exponent = f64::from(theta) / f64::from(theta + 1);
            let ratios: Vec<f64> = [100u32, 300, 1000]
                .iter()
                .map(|&n| {
                    let b = exact_blocking_enumeration(&cfg(n, theta, 1.0), DEFAULT_STATE_CAP).unwrap();
                    b * f64::from(n).powf(exponent) * phi
                })
                .collect();
            let gaps: Vec<f64> = ratios.iter().map(|r| (r - 1.0).abs()).collect();
            ok &= strictly_decreasing(&gaps) && gaps[2] <= 0.10;
            parts.push(format!("theta={theta} ratios {ratios:.4?}"));
        }
        (ok, parts.join("; "))
    });
}

#[test]
fn ac06_supercritical_expansion() {
    criterion("AC6", "supercritical expansion", secs(10), || {
        let (n, rho, theta) = (500u32, 1.5, 1u32);
        let b = exact_blocking_enumeration(&cfg(n, theta, rho), DEFAULT_STATE_CAP).unwrap();
        let scaled = (b - (1.0 - 1.0 / rho)) * ((rho - 1.0) * f64::from(n)).powi(theta as i32);
        let trend: Vec<f64> = [100u32, 2000]
            .iter()
            .map(|&m| {
                let b = blocking_via_integral(&cfg(m, theta, rho)).unwrap();
                (b - (1.0 - 1.0 / rho)) * ((rho - 1.0) * f64::from(m)).powi(theta as i32)
            })
            .collect();
        (
            (scaled - 1.0).abs() <= 0.10,
            format!(
                "scaled correction {scaled:.4} (want 1 +- 10%); n=100: {:.4}, n=2000: {:.4}, limit 1/rho = {:.4}",
                trend[0],
                trend[1],
                1.0 / rho
            ),
        )
    });
}

#[test]
fn ac07_meanfield_convergence() {
    criterion("AC7", "mean-field convergence", secs(10), || {
        let (theta, rho) = (2, 0.7);
        let c_hat = fixed_point_mean(theta, rho).unwrap();
        let p_hat = level_distribution(theta, rho, c_hat).unwrap();
        let traj = integrate_sampled(theta, rho, &LevelDistribution::point_mass(theta, 0), 200.0, 0.01, 1000).unwrap();
        let last = traj.last().unwrap();
        let dist = last.y.sup_distance(&p_hat);
        let mut residual = 0.0f64;
        for theta in 1..=6 {
            for k in 1..=20 {
                let rho = if k == 20 { 0.99 } else { 0.05 * f64::from(k) };
                residual = residual.max(fixed_point_residual(theta, rho).unwrap());
            }
        }
        (
            (last.time - 200.0).abs() < 1e-9 && dist <= 1e-6 && residual <= 1e-10,
            format!("distance at t=200 {dist:.2e} (tol 1e-6), max drift residual {residual:.2e} (tol 1e-10)"),
        )
    });
}

#[test]
fn ac08_insensitivity() {
    criterion("AC8", "insensitivity", secs(120), || {
        let c = cfg(20, 10, 0.9);
        let oracle = blocking_via_integral(&c).unwrap();
        let length = RunLength::with_default_warmup(12_000_000);
        let mut ok = true;
        let mut parts = vec![format!("integral {oracle:.4e}")];
        for jobs in [JobSizeDist::Exponential, JobSizeDist::Deterministic, JobSizeDist::TwoPoint] {
            let spec = SimSpec::new(c, PolicyKind::Insensitive, jobs.clone()).unwrap();
            let agg = run_experiment(&spec, 10, length, 8_000).unwrap();
            let within = (agg.blocking_mean - oracle).abs() <= 3.0 * agg.blocking_se;
            ok &= within;
            parts.push(format!(
                "{jobs} {:.3e} +- {:.2e} ({} blocked of {})",
                agg.blocking_mean, agg.blocking_se, agg.blocked, agg.arrivals
            ));
        }
        (ok, parts.join("; "))
    });
}

fn pooled_variance(xs: impl Iterator<Item = f64>) -> f64 {
    xs.collect::<Welford>().variance()
}

#[test]
fn ac09_clt_variance() {
    criterion("AC9", "clt variance", secs(120), || {
        let (n, rho) = (400u32, 0.7);
        let spec = SimSpec::new(cfg(n, 1, rho), PolicyKind::Insensitive, JobSizeDist::Exponential).unwrap();
        let streams = snapshot_replications(&spec, 20, 520.0, 20.0, 0.5, 9_000).unwrap();
        let var = pooled_variance(streams.iter().flatten().map(|s| f64::from(s.counts()[0])));
        let scaled = var / f64::from(n);
        (
            rel(scaled, rho) <= 0.10,
            format!("Var(S_0)/n = {scaled:.4} vs rho = {rho} (tol 10%), {} samples", streams.iter().map(Vec::len).sum::<usize>()),
        )
    });
}

/// Mean of per-replication frequencies and its standard error.
fn replication_frequency(streams: &[Vec<OccupancyVector>], event: impl Fn(&OccupancyVector) -> bool) -> (f64, f64) {
    let w: Welford = streams
        .iter()
        .map(|s| s.iter().filter(|v| event(v)).count() as f64 / s.len() as f64)
        .collect();
    (w.mean(), w.standard_error())
}

#[test]
fn ac10_geometric_law() {
    criterion("AC10", "geometric law", secs(120), || {
        let (n, theta, rho) = (500u32, 2u32, 1.25);
        let spec = SimSpec::new(cfg(n, theta, rho), PolicyKind::Insensitive, JobSizeDist::Exponential).unwrap();
        let streams = snapshot_replications(&spec, 20, 120.0, 20.0, 0.05, 10_000).unwrap();
        let mut ok = true;
        let mut parts = Vec::new();
        for k in 0..3u32 {
            let want = (1.0 - 1.0 / rho) * rho.powi(-(k as i32));
            let (p, se) = replication_frequency(&streams, |v| v.counts()[theta as usize - 1] == k);
            ok &= (p - want).abs() <= 3.0 * se;
            parts.push(format!("P(S_1={k}) {p:.4} +- {se:.4} vs {want:.4}"));
        }
        (ok, parts.join("; "))
    });
}

#[test]
fn ac11_moderate_deviation_tail() {
    criterion("AC11", "moderate deviation tail", secs(180), || {
        let n = 2500u32;
        let c = cfg(n, 1, 1.0);
        let threshold = f64::from(n).sqrt();
        let spec = SimSpec::new(c, PolicyKind::Insensitive, JobSizeDist::Exponential).unwrap();
        let streams = snapshot_replications(&spec, 20, 120.0, 20.0, 0.5, 11_000).unwrap();
        let (p, se) = replication_frequency(&streams, |v| f64::from(v.counts()[0]) > threshold);
        let limit = 0.3173;
        // the same probability for the finite system, from its stationary law
        let exact = exact_stationary(&c, DEFAULT_STATE_CAP).unwrap();
        let finite: f64 = exact
            .states
            .iter()
            .zip(exact.probs())
            .filter(|(s, _)| f64::from(s.counts()[0]) > threshold)
            .map(|(_, p)| p)
            .sum();
        (
            (p - limit).abs() <= 3.0 * se && (p - finite).abs() <= 3.0 * se,
            format!("P(S_0 > sqrt n) {p:.4} +- {se:.4} vs limit {limit} and finite-n exact {finite:.4}"),
        )
    });
}

/// Rounds `n * p` to integers summing to `n` by largest remainders.
fn lattice_point(n: u32, p: &[f64]) -> Vec<u32> {
    let raw: Vec<f64> = p.iter().map(|x| x * f64::from(n)).collect();
    let mut counts: Vec<u32> = raw.iter().map(|x| x.floor() as u32).collect();
    let mut order: Vec<usize> = (0..p.len()).collect();
    order.sort_by(|&a, &b| (raw[b] - raw[b].floor()).total_cmp(&(raw[a] - raw[a].floor())));
    let missing = n - counts.iter().sum::<u32>();
    for &i in order.iter().take(missing as usize) {
        counts[i] += 1;
    }
    counts
}

fn to_profile(counts: &[u32], n: u32) -> LevelDistribution {
    LevelDistribution::new(counts.iter().map(|&c| f64::from(c) / f64::from(n)).collect()).unwrap()
}

#[test]
fn ac12_large_deviations() {
    criterion("AC12", "large deviations", secs(60), || {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let mut max_rate = f64::NEG_INFINITY;
        let mut at_fixed_point = 0.0f64;
        for theta in 1..=4u32 {
            for rho in [0.5, 0.9] {
                let c = cfg(1, theta, rho);
                let p_hat = level_distribution(theta, rho, fixed_point_mean(theta, rho).unwrap()).unwrap();
                at_fixed_point = at_fixed_point.max(ld_rate(&c, &p_hat).unwrap().abs());
                for _ in 0..1000 {
                    let w: Vec<f64> = (0..=theta).map(|_| Exp1.sample(&mut rng)).collect();
                    let total: f64 = w.iter().sum();
                    let q = LevelDistribution::new(w.iter().map(|x| x / total).collect()).unwrap();
                    max_rate = max_rate.max(ld_rate(&c, &q).unwrap());
                }
            }
        }
        // finite-n log-probability ratio against the rate, on a fixed lattice profile
        let (theta, rho) = (2u32, 0.5);
        let q = [0.5, 0.3, 0.2];
        let p_hat = level_distribution(theta, rho, fixed_point_mean(theta, rho).unwrap()).unwrap();
        let gaps: Vec<f64> = [50u32, 100, 200]
            .iter()
            .map(|&n| {
                let c = cfg(n, theta, rho);
                let sq: Vec<u32> = q.iter().map(|x| (x * f64::from(n)).round() as u32).collect();
                let sp = lattice_point(n, p_hat.probs());
                let lq = stationary_log_prob(&c, &OccupancyVector::new(sq.clone()).unwrap()).unwrap();
                let lp = stationary_log_prob(&c, &OccupancyVector::new(sp.clone()).unwrap()).unwrap();
                let empirical = (lq - lp) / f64::from(n);
                let rate = ld_rate(&c, &to_profile(&sq, n)).unwrap() - ld_rate(&c, &to_profile(&sp, n)).unwrap();
                (empirical - rate).abs()
            })
            .collect();
        (
            max_rate < 0.0 && at_fixed_point <= 1e-10 && strictly_decreasing(&gaps),
            format!(
                "max rate over random profiles {max_rate:.3e}, |rate(p_hat)| {at_fixed_point:.1e}, finite-n gaps {gaps:.4?}"
            ),
        )
    });
}

#[test]
fn ac13_staffing() {
    criterion("AC13", "staffing", secs(5), || {
        let (lambda, target) = (400.0, 0.01);
        let s = staffing(lambda, 1, target).unwrap();
        let b = blocking_via_integral(&cfg(s.servers, 1, lambda / f64::from(s.servers))).unwrap();
        (
            rel(b, target) <= 0.20,
            format!("n = {}, exact blocking {b:.5} vs target {target} (tol 20%)", s.servers),
        )
    });
}

fn cli_output(args: &[&str], dir: &std::path::Path, tag: &str) -> Vec<u8> {
    let path = dir.join(format!("{tag}.csv"));
    let status = Command::new(env!("CARGO_BIN_EXE_insensitive"))
        .args(args)
        .arg("--output")
        .arg(&path)
        .env_remove(insensitive::cli::OUTPUT_DIR_ENV)
        .status()
        .unwrap();
    assert!(status.success(), "{args:?} exited with {status}");
    std::fs::read(path).unwrap()
}

#[test]
fn ac14_determinism() {
    criterion("AC14", "determinism", None, || {
        let runs: &[&[&str]] = &[
            &["exact", "--n", "6", "--theta", "2", "--rho", "0.9", "--table"],
            &["integral", "--n", "50", "--theta", "3", "--rho", "1.1", "--z", "0.5"],
            &["meanfield", "--theta", "3", "--rho", "0.8", "--t-end", "20"],
            &["asymptotic", "--n", "300", "--theta", "2", "--rho", "0.95"],
            &["qed", "--n", "400", "--theta", "2", "--a", "1"],
            &["staffing", "--lambda", "400", "--theta", "1", "--target", "0.01"],
            &["clt", "--theta", "3", "--rho", "0.6"],
            &["mdtail", "--theta", "2", "--z", "0,0.5,1"],
            &["ldrate", "--theta", "2", "--rho", "0.5", "--q", "0.5,0.3,0.2"],
            &[
                "simulate", "--n", "20", "--theta", "3", "--rho", "0.95", "--policy", "jsq2",
                "--jobdist", "twopoint", "--replications", "4", "--arrivals", "50000", "--seed", "5",
            ],
            &[
                "sweep", "--n", "30", "--theta", "1,2", "--rho-min", "0.8", "--rho-max", "1.2",
                "--rho-step", "0.2", "--methods", "exact,integral,asymptotic,simulated",
                "--replications", "3", "--arrivals", "20000",
            ],
        ];
        let dir = tempfile::tempdir().unwrap();
        let mut differing = Vec::new();
        for (i, args) in runs.iter().enumerate() {
            let a = cli_output(args, dir.path(), &format!("{i}a"));
            let b = cli_output(args, dir.path(), &format!("{i}b"));
            if a != b || a.is_empty() {
                differing.push(args[0]);
            }
        }
        (
            differing.is_empty(),
            format!("{} subcommands byte-identical across runs; differing: {differing:?}", runs.len() - differing.len()),
        )
    });
}
