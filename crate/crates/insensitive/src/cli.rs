//! Command-line front end: every analytic operation and the simulator as a
//! subcommand writing CSV.

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Arg, ArgAction, ArgMatches, Command};
use insensitive_core::asymptotics::{
    blocking_asymptotic, blocking_qed, blocking_subcritical, blocking_supercritical,
    clt_covariance, ld_rate, md_tail, qed_parameter, staffing, AsymptoticEstimate,
};
use insensitive_core::exact::{
    blocking_via_integral, exact_blocking_enumeration, exact_stationary, tasks_mgf,
    DEFAULT_STATE_CAP,
};
use insensitive_core::meanfield::integrate_sampled;
use insensitive_core::sim::{JobSizeDist, PolicyKind, SimSpec};
use insensitive_core::{LevelDistribution, SystemConfig};

use crate::error::{CliError, CliResult};
use crate::experiment::{run_experiment, RunLength};
use crate::params::{load_config, Params};
use crate::table::{fmt_f64, Table};

/// Directory for `<subcommand>.csv` when `--output` is not given.
pub const OUTPUT_DIR_ENV: &str = "INSENSITIVE_OUTPUT_DIR";

const SIM_KEYS: &[(&str, &str)] = &[
    ("policy", "insensitive, jsq, jsqD, jiq or bernoulli [default: insensitive]"),
    ("jobdist", "exponential, deterministic, twopoint or custom:v@p;v@p [default: exponential]"),
    ("replications", "independent replications, at least 2 [default: 10]"),
    ("arrivals", "arrivals per replication [default: 1000000]"),
    ("warmup", "discarded arrivals per replication [default: 20% of arrivals]"),
    ("seed", "base seed; replication i uses seed + i [default: 1]"),
];

struct Spec {
    name: &'static str,
    about: &'static str,
    keys: &'static [(&'static str, &'static str)],
    extra: &'static [(&'static str, &'static str)],
    flags: &'static [(&'static str, &'static str)],
}

const SUBCOMMANDS: &[Spec] = &[
    Spec {
        name: "exact",
        about: "Exact blocking by enumerating the stationary measure",
        keys: &[
            ("n", "number of servers"),
            ("theta", "buffer depth per server"),
            ("rho", "load per server"),
            ("cap", "enumeration cap on the number of states [default: 5000000]"),
        ],
        extra: &[],
        flags: &[("table", "emit the full stationary table instead of the summary row")],
    },
    Spec {
        name: "integral",
        about: "Exact blocking through the one-dimensional integral",
        keys: &[
            ("n", "number of servers"),
            ("theta", "buffer depth per server"),
            ("rho", "load per server"),
            ("z", "also report the generating function E[z^(n theta - total jobs)]"),
        ],
        extra: &[],
        flags: &[],
    },
    Spec {
        name: "meanfield",
        about: "Mean-field trajectory of the level fractions",
        keys: &[
            ("theta", "buffer depth per server"),
            ("rho", "load per server"),
            ("t-end", "final time [default: 200]"),
            ("step", "integration step [default: 0.01]"),
            ("every", "keep every k-th step [default: 100]"),
            ("init", "empty, full or comma-separated fractions y_0..y_theta [default: empty]"),
        ],
        extra: &[],
        flags: &[],
    },
    Spec {
        name: "asymptotic",
        about: "Large-n blocking estimate in the regime implied by the inputs",
        keys: &[
            ("n", "number of servers"),
            ("theta", "buffer depth per server"),
            ("rho", "load per server"),
            ("regime", "force subcritical, qed or supercritical [default: automatic]"),
        ],
        extra: &[],
        flags: &[],
    },
    Spec {
        name: "qed",
        about: "Critical-window blocking at rho = 1 - a n^(-theta/(theta+1))",
        keys: &[
            ("n", "number of servers"),
            ("theta", "buffer depth per server"),
            ("a", "window parameter"),
        ],
        extra: &[],
        flags: &[],
    },
    Spec {
        name: "staffing",
        about: "Servers needed for a target blocking at offered load lambda",
        keys: &[
            ("lambda", "total arrival rate"),
            ("theta", "buffer depth per server"),
            ("target", "target blocking probability"),
        ],
        extra: &[],
        flags: &[],
    },
    Spec {
        name: "clt",
        about: "Limiting covariance of the fluctuations around the fixed point",
        keys: &[("theta", "buffer depth per server"), ("rho", "load per server, below 1")],
        extra: &[],
        flags: &[],
    },
    Spec {
        name: "mdtail",
        about: "Moderate-deviation tail at rho = 1",
        keys: &[("theta", "buffer depth per server"), ("z", "threshold, or a comma-separated list")],
        extra: &[],
        flags: &[],
    },
    Spec {
        name: "ldrate",
        about: "Large-deviation rate of an occupancy profile",
        keys: &[
            ("theta", "buffer depth per server"),
            ("rho", "load per server, below 1"),
            ("q", "comma-separated profile q_0..q_theta"),
        ],
        extra: &[],
        flags: &[],
    },
    Spec {
        name: "simulate",
        about: "Replicated discrete-event simulation",
        keys: &[
            ("n", "number of servers"),
            ("theta", "buffer depth per server"),
            ("rho", "load per server"),
        ],
        extra: SIM_KEYS,
        flags: &[],
    },
    Spec {
        name: "sweep",
        about: "Blocking over a load grid by several methods",
        keys: &[
            ("n", "number of servers"),
            ("theta", "buffer depth, or a comma-separated list"),
            ("rho-min", "first load"),
            ("rho-max", "last load"),
            ("rho-step", "grid step"),
            ("methods", "comma-separated subset of exact, integral, asymptotic, simulated [default: exact,integral,asymptotic]"),
            ("cap", "enumeration cap for the exact method [default: 5000000]"),
        ],
        extra: SIM_KEYS,
        flags: &[],
    },
];

fn find_spec(name: &str) -> CliResult<&'static Spec> {
    SUBCOMMANDS
        .iter()
        .find(|s| s.name == name)
        .ok_or_else(|| CliError::validation(format!("unknown subcommand `{name}`")))
}

impl Spec {
    fn value_keys(&self) -> impl Iterator<Item = &'static (&'static str, &'static str)> {
        self.keys.iter().chain(self.extra.iter())
    }

    fn allowed(&self) -> Vec<&'static str> {
        self.value_keys().chain(self.flags.iter()).map(|(k, _)| *k).collect()
    }
}

/// The clap command tree.
pub fn command() -> Command {
    let mut cmd = Command::new("insensitive")
        .about("Exact, mean-field, asymptotic and simulated analysis of insensitive load balancing")
        .version(env!("CARGO_PKG_VERSION"))
        .subcommand_required(true)
        .arg_required_else_help(true);
    for spec in SUBCOMMANDS {
        let mut sub = Command::new(spec.name)
            .about(spec.about)
            .arg(Arg::new("config").long("config").value_name("PATH").help("flat key = value file; flags override it"))
            .arg(Arg::new("output").long("output").value_name("PATH").help(format!(
                "CSV destination, `-` for standard output [default: ${OUTPUT_DIR_ENV}/{}.csv if set, else standard output]",
                spec.name
            )));
        for (key, help) in spec.value_keys() {
            sub = sub.arg(Arg::new(*key).long(*key).value_name("VALUE").help(*help));
        }
        for (key, help) in spec.flags {
            sub = sub.arg(Arg::new(*key).long(*key).action(ArgAction::SetTrue).help(*help));
        }
        cmd = cmd.subcommand(sub);
    }
    cmd
}

fn collect_params(spec: &Spec, m: &ArgMatches) -> CliResult<Params> {
    let allowed = spec.allowed();
    let mut params = match m.get_one::<String>("config") {
        Some(path) => load_config(path.as_ref(), &allowed)?,
        None => Params::new(),
    };
    let mut flags = Params::new();
    for (key, _) in spec.value_keys() {
        if let Some(v) = m.get_one::<String>(key) {
            flags.set(key, v.clone());
        }
    }
    for (key, _) in spec.flags {
        if m.get_flag(key) {
            flags.set(key, "true");
        }
    }
    params.merge(flags);
    Ok(params)
}

/// Parses `args` (program name first), runs the subcommand and writes its
/// CSV. Returns the process exit code: 0 on success, 2 on invalid input,
/// 1 on numerical or IO failure.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let matches = match command().try_get_matches_from(args) {
        Ok(m) => m,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = e.print();
                    0
                }
                ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => {
                    let _ = e.print();
                    2
                }
                _ => {
                    let msg = e.to_string();
                    let line = msg.lines().next().unwrap_or("invalid arguments");
                    eprintln!("{line}");
                    2
                }
            };
        }
    };
    match dispatch(&matches) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(matches: &ArgMatches) -> CliResult<()> {
    let (name, m) = matches
        .subcommand()
        .ok_or_else(|| CliError::validation("missing subcommand"))?;
    let spec = find_spec(name)?;
    let params = collect_params(spec, m)?;
    let table = execute(name, &params)?;
    let target = match m.get_one::<String>("output") {
        Some(p) if p == "-" => None,
        Some(p) => Some(PathBuf::from(p)),
        None => std::env::var_os(OUTPUT_DIR_ENV)
            .filter(|d| !d.is_empty())
            .map(|d| PathBuf::from(d).join(format!("{name}.csv"))),
    };
    match target {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir)?;
            }
            table.write(io::BufWriter::new(fs::File::create(&path)?))
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            table.write(&mut lock)?;
            lock.flush()?;
            Ok(())
        }
    }
}

/// Runs subcommand `name` on already merged parameters.
pub fn execute(name: &str, p: &Params) -> CliResult<Table> {
    let spec = find_spec(name)?;
    let allowed = spec.allowed();
    if let Some(bad) = p.keys().find(|k| !allowed.contains(k)) {
        return Err(CliError::validation(format!("unknown key `{bad}` for `{name}`")));
    }
    match name {
        "exact" => cmd_exact(p),
        "integral" => cmd_integral(p),
        "meanfield" => cmd_meanfield(p),
        "asymptotic" => cmd_asymptotic(p),
        "qed" => cmd_qed(p),
        "staffing" => cmd_staffing(p),
        "clt" => cmd_clt(p),
        "mdtail" => cmd_mdtail(p),
        "ldrate" => cmd_ldrate(p),
        "simulate" => cmd_simulate(p),
        "sweep" => cmd_sweep(p),
        _ => unreachable!("find_spec accepted `{name}`"),
    }
}

fn system(p: &Params) -> CliResult<SystemConfig> {
    Ok(SystemConfig::new(p.required("n")?, p.required("theta")?, p.required("rho")?)?)
}

fn cap(p: &Params) -> CliResult<u128> {
    p.or("cap", DEFAULT_STATE_CAP)
}

fn cmd_exact(p: &Params) -> CliResult<Table> {
    let cfg = system(p)?;
    let result = exact_stationary(&cfg, cap(p)?)?;
    if p.or("table", false)? {
        let mut t = Table::new((0..=cfg.theta).map(|k| format!("s_{k}")).chain(["log_prob".to_string()]));
        for (s, lp) in result.states.iter().zip(&result.log_probs) {
            let mut row: Vec<String> = s.counts().iter().map(u32::to_string).collect();
            row.push(fmt_f64(*lp));
            t.push(row);
        }
        return Ok(t);
    }
    let mut t = Table::new(["n", "theta", "rho", "blocking", "normalizer", "states"]);
    t.push(vec![
        cfg.n.to_string(),
        cfg.theta.to_string(),
        fmt_f64(cfg.rho),
        fmt_f64(result.blocking),
        fmt_f64(result.normalizer),
        result.states.len().to_string(),
    ]);
    Ok(t)
}

fn cmd_integral(p: &Params) -> CliResult<Table> {
    let cfg = system(p)?;
    let blocking = blocking_via_integral(&cfg)?;
    let head = vec![cfg.n.to_string(), cfg.theta.to_string(), fmt_f64(cfg.rho), fmt_f64(blocking)];
    match p.optional::<f64>("z")? {
        None => {
            let mut t = Table::new(["n", "theta", "rho", "blocking"]);
            t.push(head);
            Ok(t)
        }
        Some(z) => {
            let mut t = Table::new(["n", "theta", "rho", "blocking", "z", "mgf"]);
            let mut row = head;
            row.extend([fmt_f64(z), fmt_f64(tasks_mgf(&cfg, z)?)]);
            t.push(row);
            Ok(t)
        }
    }
}

fn cmd_meanfield(p: &Params) -> CliResult<Table> {
    let theta: u32 = p.required("theta")?;
    let rho: f64 = p.required("rho")?;
    let init = p.raw("init").unwrap_or("empty").trim().to_ascii_lowercase();
    if theta == 0 {
        return Err(CliError::validation("theta must be at least 1"));
    }
    let y0 = match init.as_str() {
        "empty" => LevelDistribution::point_mass(theta, 0),
        "full" => LevelDistribution::point_mass(theta, theta),
        _ => LevelDistribution::new(p.list::<f64>("init")?.unwrap_or_default())?,
    };
    let every: usize = p.or("every", 100)?;
    if every == 0 {
        return Err(CliError::validation("every must be at least 1"));
    }
    let traj = integrate_sampled(theta, rho, &y0, p.or("t-end", 200.0)?, p.or("step", 0.01)?, every)?;
    let mut t = Table::new(std::iter::once("t".to_string()).chain((0..=theta).map(|k| format!("y_{k}"))));
    for point in traj {
        t.push(
            std::iter::once(fmt_f64(point.time))
                .chain(point.y.probs().iter().map(|&y| fmt_f64(y)))
                .collect(),
        );
    }
    Ok(t)
}

fn estimate_row(cfg: &SystemConfig, e: &AsymptoticEstimate) -> Vec<String> {
    vec![
        cfg.n.to_string(),
        cfg.theta.to_string(),
        fmt_f64(cfg.rho),
        e.regime.as_str().to_string(),
        fmt_f64(qed_parameter(cfg)),
        fmt_f64(e.value),
        e.order_term.to_string(),
    ]
}

fn asymptotic_estimate(cfg: &SystemConfig, regime: Option<&str>) -> CliResult<AsymptoticEstimate> {
    let e = match regime.map(str::trim) {
        None | Some("auto") => blocking_asymptotic(cfg)?,
        Some("subcritical") => blocking_subcritical(cfg)?,
        Some("supercritical") => blocking_supercritical(cfg)?,
        Some("qed" | "critical_qed") => {
            let mut e = blocking_qed(cfg.n, cfg.theta, qed_parameter(cfg))?;
            e.rho = cfg.rho;
            e
        }
        Some(other) => return Err(CliError::validation(format!("unknown regime `{other}`"))),
    };
    Ok(e)
}

fn cmd_asymptotic(p: &Params) -> CliResult<Table> {
    let cfg = system(p)?;
    let e = asymptotic_estimate(&cfg, p.raw("regime"))?;
    let mut t = Table::new(["n", "theta", "rho", "regime", "a", "blocking", "order_term"]);
    t.push(estimate_row(&cfg, &e));
    Ok(t)
}

fn cmd_qed(p: &Params) -> CliResult<Table> {
    let (n, theta, a): (u32, u32, f64) = (p.required("n")?, p.required("theta")?, p.required("a")?);
    if !a.is_finite() {
        return Err(CliError::validation("a must be finite"));
    }
    let e = blocking_qed(n, theta, a)?;
    let mut t = Table::new(["n", "theta", "a", "rho", "blocking"]);
    t.push(vec![n.to_string(), theta.to_string(), fmt_f64(a), fmt_f64(e.rho), fmt_f64(e.value)]);
    Ok(t)
}

fn cmd_staffing(p: &Params) -> CliResult<Table> {
    let (lambda, theta, target): (f64, u32, f64) =
        (p.required("lambda")?, p.required("theta")?, p.required("target")?);
    let s = staffing(lambda, theta, target)?;
    let mut t = Table::new(["lambda", "theta", "target", "servers", "a"]);
    t.push(vec![fmt_f64(lambda), theta.to_string(), fmt_f64(target), s.servers.to_string(), fmt_f64(s.a)]);
    Ok(t)
}

fn cmd_clt(p: &Params) -> CliResult<Table> {
    let (theta, rho): (u32, f64) = (p.required("theta")?, p.required("rho")?);
    let c = clt_covariance(theta, rho)?;
    let mut t = Table::new(["i", "j", "sigma", "sigma_inv"]);
    let dim = c.sigma.dim();
    for i in 0..dim {
        for j in 0..dim {
            t.push(vec![i.to_string(), j.to_string(), fmt_f64(c.sigma[(i, j)]), fmt_f64(c.sigma_inv[(i, j)])]);
        }
    }
    Ok(t)
}

fn cmd_mdtail(p: &Params) -> CliResult<Table> {
    let theta: u32 = p.required("theta")?;
    let zs: Vec<f64> = p
        .list("z")?
        .ok_or_else(|| CliError::validation("missing required key `z`"))?;
    let mut t = Table::new(["theta", "z", "tail"]);
    for z in zs {
        t.push(vec![theta.to_string(), fmt_f64(z), fmt_f64(md_tail(theta, z)?)]);
    }
    Ok(t)
}

fn cmd_ldrate(p: &Params) -> CliResult<Table> {
    let (theta, rho): (u32, f64) = (p.required("theta")?, p.required("rho")?);
    let q = LevelDistribution::new(
        p.list::<f64>("q")?
            .ok_or_else(|| CliError::validation("missing required key `q`"))?,
    )?;
    // the rate does not depend on n
    let cfg = SystemConfig::new(1, theta, rho)?;
    let mut t = Table::new(["theta", "rho", "rate"]);
    t.push(vec![theta.to_string(), fmt_f64(rho), fmt_f64(ld_rate(&cfg, &q)?)]);
    Ok(t)
}

struct SimParams {
    policy: PolicyKind,
    jobs: JobSizeDist,
    replications: usize,
    length: RunLength,
    seed: u64,
}

fn sim_params(p: &Params) -> CliResult<SimParams> {
    let policy: PolicyKind = p.raw("policy").unwrap_or("insensitive").parse()?;
    let jobs: JobSizeDist = p.raw("jobdist").unwrap_or("exponential").parse()?;
    let arrivals: u64 = p.or("arrivals", 1_000_000)?;
    let warmup: u64 = p.or("warmup", arrivals / 5)?;
    if arrivals <= warmup {
        return Err(CliError::validation("arrivals must exceed warmup"));
    }
    Ok(SimParams {
        policy,
        jobs,
        replications: p.or("replications", 10)?,
        length: RunLength { arrivals, warmup },
        seed: p.or("seed", 1)?,
    })
}

fn cmd_simulate(p: &Params) -> CliResult<Table> {
    let cfg = system(p)?;
    let sp = sim_params(p)?;
    let spec = SimSpec::new(cfg, sp.policy, sp.jobs.clone())?;
    let agg = run_experiment(&spec, sp.replications, sp.length, sp.seed)?;
    let mut t = Table::new([
        "policy", "n", "theta", "rho", "jobdist", "seed", "replications", "arrivals",
        "blocking_mean", "blocking_ci95", "sojourn_mean", "sojourn_ci95",
    ]);
    t.push(vec![
        sp.policy.to_string(),
        cfg.n.to_string(),
        cfg.theta.to_string(),
        fmt_f64(cfg.rho),
        sp.jobs.to_string(),
        sp.seed.to_string(),
        agg.replications.to_string(),
        agg.arrivals.to_string(),
        fmt_f64(agg.blocking_mean),
        fmt_f64(agg.blocking_ci95),
        fmt_f64(agg.sojourn_mean),
        fmt_f64(agg.sojourn_ci95),
    ]);
    Ok(t)
}

const MAX_GRID: usize = 100_000;

/// `rho_min + k * step` for every `k` with value at most `rho_max`, allowing
/// for rounding in the last point.
pub fn rho_grid(rho_min: f64, rho_max: f64, step: f64) -> CliResult<Vec<f64>> {
    if !(rho_min > 0.0 && rho_max > rho_min && rho_max.is_finite()) {
        return Err(CliError::validation("need 0 < rho-min < rho-max"));
    }
    if !(step > 0.0 && step.is_finite()) {
        return Err(CliError::validation("rho-step must be positive"));
    }
    let count = ((rho_max - rho_min) / step + 1e-9).floor() as usize + 1;
    if count > MAX_GRID {
        return Err(CliError::validation(format!("grid has {count} points, above {MAX_GRID}")));
    }
    Ok((0..count).map(|k| rho_min + k as f64 * step).collect())
}

fn cmd_sweep(p: &Params) -> CliResult<Table> {
    let n: u32 = p.required("n")?;
    let thetas: Vec<u32> = p
        .list("theta")?
        .ok_or_else(|| CliError::validation("missing required key `theta`"))?;
    let grid = rho_grid(p.required("rho-min")?, p.required("rho-max")?, p.required("rho-step")?)?;
    let methods: Vec<String> = p
        .list::<String>("methods")?
        .unwrap_or_else(|| vec!["exact".into(), "integral".into(), "asymptotic".into()]);
    for m in &methods {
        if !["exact", "integral", "asymptotic", "simulated"].contains(&m.as_str()) {
            return Err(CliError::validation(format!("unknown method `{m}`")));
        }
    }
    let simulated = methods.iter().any(|m| m == "simulated");
    let sp = if simulated { Some(sim_params(p)?) } else { None };
    let cap = cap(p)?;
    let mut t = Table::new(["n", "theta", "rho", "method", "blocking", "ci95"]);
    for &theta in &thetas {
        for &rho in &grid {
            let cfg = SystemConfig::new(n, theta, rho)?;
            for method in &methods {
                let (blocking, ci95) = match method.as_str() {
                    "exact" => (exact_blocking_enumeration(&cfg, cap)?, 0.0),
                    "integral" => (blocking_via_integral(&cfg)?, 0.0),
                    "asymptotic" => (blocking_asymptotic(&cfg)?.value, 0.0),
                    _ => {
                        let sp = sp.as_ref().expect("simulation parameters parsed");
                        let spec = SimSpec::new(cfg, sp.policy, sp.jobs.clone())?;
                        let agg = run_experiment(&spec, sp.replications, sp.length, sp.seed)?;
                        (agg.blocking_mean, agg.blocking_ci95)
                    }
                };
                t.push(vec![
                    n.to_string(),
                    theta.to_string(),
                    fmt_f64(rho),
                    method.clone(),
                    fmt_f64(blocking),
                    fmt_f64(ci95),
                ]);
            }
        }
    }
    Ok(t)
}
