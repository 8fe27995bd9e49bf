//! Config-driven runner: `sweep`, `estimate`, `verify`, `quantize` and
//! `oracle`. Exit code 0 on success, 1 when a verification or oracle check
//! fails, 2 on a config or input error.

pub mod config;
pub mod oracle;
pub mod suites;

#[cfg(test)]
mod randomized;

#[cfg(test)]
mod cli_tests;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

pub use config::{Budgets, ExperimentConfig, GridSpec, HorizonSpec, Method, Outputs, QuantizeSpec, VerifySpec};
pub use oracle::{
    oracle_count, oracle_levy_prokhorov, oracle_quantization, oracle_wasserstein, OracleInstance, OracleReport,
};
pub use suites::{run_verify, tail_length, Replay, ReportEntry, Suite, VerificationReport, VerifyInput};

use crate::error::{Error, Result};
use crate::estimators::{
    box_dimension_estimate, dynamical_quantization_order, entropy_at_scale, estimate_csv_row, mdim_estimate,
    mdim_mo_estimate, mean_box_dimension_estimate, metric_order_estimate, quantization_order, ScaleSweep,
    SlopeEstimate, ESTIMATE_CSV_HEADER,
};
use crate::measures::quantization_table;
use crate::metric_core::{FiniteMetricSpace, Quantity};
use crate::systems::{DynamicalSystem, ResolvedSystem};

/// Sweeps with fewer horizons get no entropy-rate estimates.
pub const MIN_RATE_HORIZONS: usize = 4;

/// Nets up to this size get a distance cache.
pub const MAX_CACHE_POINTS: usize = 1024;

#[derive(Parser, Debug)]
#[command(name = "mdim", version, about = "Finite-scale entropy, dimension and quantization experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Experiment config (or oracle instance) JSON.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `outputs.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Node budget for the exact solvers.
    #[arg(long)]
    budget: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Count tables over the (n, ε) grid.
    Sweep(Common),
    /// Slope estimates from a sweep.
    Estimate(Common),
    /// Inequality suites, cell by cell.
    Verify {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "all")]
        suite: String,
    },
    /// Quantization numbers of the configured measure.
    Quantize(Common),
    /// Exhaustive oracle on one instance, next to the solver.
    Oracle(Common),
}

pub fn main_with_args<I: IntoIterator<Item = OsString>>(args: I) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(ok) => {
            if ok {
                0
            } else {
                1
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

fn load(common: &Common) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(&common.config)?;
    cfg.override_with(common.budget, common.seed);
    if let Some(dir) = &common.out {
        cfg.outputs.dir = dir.clone();
    }
    Ok(cfg)
}

fn dispatch(cmd: Command) -> Result<bool> {
    match cmd {
        Command::Sweep(c) => {
            let cfg = load(&c)?;
            for (path, sw) in run_sweep(&cfg)? {
                println!("{}: {} cells", path.display(), sw.rows.len());
            }
            Ok(true)
        }
        Command::Estimate(c) => {
            let cfg = load(&c)?;
            let path = run_estimate(&cfg)?;
            print!("{}", fs::read_to_string(&path)?);
            Ok(true)
        }
        Command::Verify { common, suite } => {
            let cfg = load(&common)?;
            let suites = Suite::parse_selector(&suite)?;
            let reports = run_verify_config(&cfg, &suites)?;
            let mut ok = true;
            for r in &reports {
                let (p, f, i) = r.tally();
                match &r.skipped {
                    Some(why) => println!("{}: skipped ({why})", r.suite),
                    None => println!("{}: {p} pass, {f} fail, {i} inconclusive", r.suite),
                }
                ok &= !r.failed();
            }
            Ok(ok)
        }
        Command::Quantize(c) => {
            let cfg = load(&c)?;
            for p in run_quantize(&cfg)? {
                println!("{}", p.display());
            }
            Ok(true)
        }
        Command::Oracle(c) => {
            let text = fs::read_to_string(&c.config)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", c.config.display())))?;
            let inst = OracleInstance::from_json(&text)?;
            let mut budgets = Budgets::default();
            if let Some(n) = c.budget {
                budgets.counts.nodes = n;
                budgets.quantization.nodes = n;
            }
            budgets.quantization.seed = c.seed.unwrap_or(0);
            let report = inst.run(&budgets.counts, &budgets.quantization)?;
            let json = serde_json::to_string_pretty(&report).map_err(|e| Error::Format(e.to_string()))?;
            println!("{json}");
            if let Some(dir) = &c.out {
                fs::create_dir_all(dir)?;
                fs::write(dir.join("oracle.json"), json + "\n")?;
            }
            Ok(report.agree)
        }
    }
}

/// 64-bit FNV-1a, used to name distance caches.
fn fingerprint(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf29ce484222325u64, |h, &b| (h ^ b as u64).wrapping_mul(0x100000001b3))
}

/// Resolves the configured system. Nets without a line structure reuse a
/// distance cache from the output directory when one matches.
pub fn resolve(cfg: &ExperimentConfig) -> Result<ResolvedSystem> {
    let mut resolved = cfg.system.resolve()?;
    let sys = &resolved.system;
    if !cfg.outputs.cache || sys.size() > MAX_CACHE_POINTS || sys.space().line().is_some() {
        return Ok(resolved);
    }
    let key = serde_json::to_string(&cfg.system).map_err(|e| Error::Format(e.to_string()))?;
    let path = cfg.outputs.dir.join(format!("distances-{:016x}.bin", fingerprint(key.as_bytes())));
    if path.exists() {
        if let Ok(space) = FiniteMetricSpace::read_cache(&path) {
            if space.size() == sys.size() {
                resolved.system = DynamicalSystem::new(sys.name(), space, sys.map().to_vec())?;
                return Ok(resolved);
            }
        }
    }
    fs::create_dir_all(&cfg.outputs.dir)?;
    sys.space().write_cache(&path)?;
    // Later runs read the dense cache; use it now too so that every run
    // goes through the same distance oracle.
    let space = FiniteMetricSpace::read_cache(&path)?;
    resolved.system = DynamicalSystem::new(sys.name(), space, sys.map().to_vec())?;
    Ok(resolved)
}

/// One sweep per configured quantity.
pub fn compute_sweeps(cfg: &ExperimentConfig) -> Result<Vec<ScaleSweep>> {
    let horizons = cfg.horizons.values()?;
    let scales = cfg.grid.values()?;
    if cfg.method == Method::Symbolic {
        let t = cfg.system.resolve()?.kolyada.ok_or_else(|| Error::Config("symbolic method needs kolyada".into()))?;
        let n_max = *horizons.iter().max().unwrap();
        if horizons != (1..=n_max).collect::<Vec<_>>() {
            return Err(Error::Config("symbolic sweeps need horizons 1..=n".into()));
        }
        return cfg
            .quantity_list()?
            .into_iter()
            .map(|q| {
                if q != Quantity::S {
                    return Err(Error::Config(format!("symbolic sweeps bracket S only, not {}", q.tag())));
                }
                ScaleSweep::kolyada(&t, n_max, &scales)
            })
            .collect();
    }
    let resolved = resolve(cfg)?;
    cfg.quantity_list()?
        .into_iter()
        .map(|q| ScaleSweep::compute(&resolved.system, q, &horizons, &scales, &cfg.budgets.counts))
        .collect()
}

/// Writes `sweep_<Q>.csv` for each quantity.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<Vec<(PathBuf, ScaleSweep)>> {
    let sweeps = compute_sweeps(cfg)?;
    fs::create_dir_all(&cfg.outputs.dir)?;
    sweeps
        .into_iter()
        .map(|sw| {
            let path = cfg.outputs.dir.join(format!("sweep_{}.csv", sw.quantity.tag()));
            fs::write(&path, sw.to_csv())?;
            Ok((path, sw))
        })
        .collect()
}

fn push_estimate(out: &mut String, label: &str, system: &str, at: &str, est: Result<SlopeEstimate>) {
    match est {
        Ok(e) => out.push_str(&estimate_csv_row(label, system, at, &e)),
        Err(e) => eprintln!("{label} at {at}: {e}"),
    }
}

/// Every estimate the configured sweeps support, as CSV.
pub fn estimates_csv(cfg: &ExperimentConfig, sweeps: &[ScaleSweep]) -> String {
    let mut out = String::from(ESTIMATE_CSV_HEADER);
    for sw in sweeps {
        let sys = sw.system.as_str();
        let q = sw.quantity.tag();
        // Rates in n need a few horizons; single-horizon sweeps feed the
        // dimension estimates only.
        let rates = sw.horizons.len() >= MIN_RATE_HORIZONS;
        for (s, e) in sw.scales.iter().enumerate().filter(|_| rates) {
            push_estimate(&mut out, &format!("h_eps[{q}]"), sys, &e.to_string(), entropy_at_scale(sw, s, &cfg.rate_fit));
        }
        if rates && sw.scales.len() >= 2 {
            push_estimate(&mut out, &format!("mdim[{q}]"), sys, "grid", mdim_estimate(sw, &cfg.rate_fit, &cfg.scale_fit));
            push_estimate(&mut out, &format!("mdim_mo[{q}]"), sys, "grid", mdim_mo_estimate(sw, &cfg.rate_fit, &cfg.scale_fit));
        }
        let n0 = sw.horizons[0];
        match sw.quantity {
            Quantity::S => {
                let est = metric_order_estimate(sw, n0, &cfg.scale_fit);
                push_estimate(&mut out, "metric_order", sys, &format!("n={n0}"), est);
            }
            Quantity::N => {
                for &n in &sw.horizons {
                    let est = box_dimension_estimate(sw, n, &cfg.scale_fit);
                    push_estimate(&mut out, "box_dimension", sys, &format!("n={n}"), est);
                }
                if sw.horizons.len() >= 2 {
                    let est = mean_box_dimension_estimate(sw, &cfg.scale_fit).map(|(e, _)| e);
                    push_estimate(&mut out, "mean_box_dimension", sys, "slope_in_n", est);
                }
            }
            _ => {}
        }
    }
    out
}

/// Writes `estimates.csv`.
pub fn run_estimate(cfg: &ExperimentConfig) -> Result<PathBuf> {
    let sweeps = compute_sweeps(cfg)?;
    let csv = estimates_csv(cfg, &sweeps);
    fs::create_dir_all(&cfg.outputs.dir)?;
    let path = cfg.outputs.dir.join("estimates.csv");
    fs::write(&path, csv)?;
    Ok(path)
}

/// Runs the suites on the configured grid and writes `verify.json`.
pub fn run_verify_config(cfg: &ExperimentConfig, suites: &[Suite]) -> Result<Vec<VerificationReport>> {
    let resolved = resolve(cfg)?;
    let (horizons, scales) = cfg.verify_grid()?;
    let input = VerifyInput {
        descriptor: &cfg.system,
        resolved: &resolved,
        horizons: &horizons,
        scales: &scales,
        budget: &cfg.budgets.counts,
    };
    let reports = run_verify(&input, suites)?;
    fs::create_dir_all(&cfg.outputs.dir)?;
    let json = serde_json::to_string_pretty(&reports).map_err(|e| Error::Format(e.to_string()))?;
    fs::write(cfg.outputs.dir.join("verify.json"), json + "\n")?;
    Ok(reports)
}

/// Writes `quantize.csv` and `quantize_estimates.csv`.
pub fn run_quantize(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let spec = cfg.quantize.as_ref().ok_or_else(|| Error::Config("quantize needs a \"quantize\" section".into()))?;
    let mu = cfg.measure()?.expect("quantize section present");
    let resolved = resolve(cfg)?;
    let horizons = cfg.horizons.values()?;
    let scales = cfg.grid.values()?;
    let reports = quantization_table(&resolved.system, &mu, spec.kind, &horizons, &scales, &cfg.budgets.quantization)?;
    let mut csv = String::from("system,kind,n,eps,count,lower,mode,sites\n");
    for r in &reports {
        let sites: Vec<String> = r.sites.iter().map(|s| s.to_string()).collect();
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{}",
            crate::estimators::csv_field(resolved.system.name()),
            r.kind.tag(),
            r.horizon,
            r.eps,
            r.count,
            r.lower,
            r.mode.tag(),
            sites.join(" ")
        );
    }
    fs::create_dir_all(&cfg.outputs.dir)?;
    let table = cfg.outputs.dir.join("quantize.csv");
    fs::write(&table, csv)?;
    let mut est = String::from(ESTIMATE_CSV_HEADER);
    let name = resolved.system.name();
    for &n in &horizons {
        let at_n: Vec<_> = reports.iter().filter(|r| r.horizon == n).cloned().collect();
        push_estimate(&mut est, "quantization_order", name, &format!("n={n}"), quantization_order(&at_n, &cfg.scale_fit));
    }
    if horizons.len() >= 2 {
        let dq = dynamical_quantization_order(&reports, &cfg.rate_fit, &cfg.scale_fit).map(|(e, _)| e);
        push_estimate(&mut est, "dynamical_quantization_order", name, "grid", dq);
    }
    let est_path = cfg.outputs.dir.join("quantize_estimates.csv");
    fs::write(&est_path, est)?;
    Ok(vec![table, est_path])
}

/// Shipped configs, sorted by file name.
pub fn shipped_configs(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut v: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    v.sort();
    Ok(v)
}
