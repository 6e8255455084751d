//! Command-line front end: one subcommand per capability, JSON config in,
//! CSV or JSON out.
//!
//! Outputs are assembled in memory, checked for non-finite numbers, and only
//! then written, so a partial file never hides a numerical failure. CSV
//! outputs carry the effective configuration in a leading `# config:`
//! comment line; re-running with that configuration reproduces the output
//! byte for byte, independently of the worker thread count.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 configuration or validation
//! failure, 3 numerical-accuracy failure (including any non-finite output).

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{axis_points, Measure, RunConfig};
use crate::density::phi_with_transform;
use crate::error::Error;
use crate::filtering::{filter_along_path, write_filter_csv};
use crate::futures_pricing::{
    delta_futures_derivative_n, price_futures_derivative, price_futures_derivative_n,
    FuturesPayoff,
};
use crate::indifference::indifference_price;
use crate::model::ThetaAtom;
use crate::simulate::{simulate_one_from_prior, simulate_physical, simulate_risk_neutral};

/// Environment variable giving the default worker thread count; the
/// `--threads` flag overrides it.
pub const THREADS_ENV: &str = "OUYIELD_THREADS";

#[derive(Parser)]
#[command(name = "ouyield", version, about = "Hidden-parameter commodity futures toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Path to the JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the seed from the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output path; standard output when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Caps worker threads; falls back to OUYIELD_THREADS, then to the
    /// number of cores. Results do not depend on this value.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate paths of the augmented state and emit `t,y,p,q` rows.
    Simulate,
    /// Filter a simulated path and emit the running Bayes estimates.
    Filter,
    /// Price and delta-hedge a payoff on the futures.
    PriceFutures,
    /// Utility indifference price of a spot payoff (JSON result).
    PriceIndifference,
    /// Evaluate the joint state density on a grid.
    Density,
    /// Cumulant term structure with the long-time row.
    Cumulants,
}

/// Entry point used by the binary; returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests are successful output, not errors.
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };

    let config_path = match &cli.config {
        Some(p) => p.clone(),
        None => {
            eprintln!("error: --config <path> is required");
            return 2;
        }
    };
    let text = match std::fs::read_to_string(&config_path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", config_path.display());
            return 1;
        }
    };
    let mut config = match RunConfig::from_json(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    if let Some(seed) = cli.seed {
        config.seed = Some(seed);
    }
    if config.seed.is_none() {
        config.seed = Some(0);
    }

    let threads = cli.threads.or_else(|| {
        std::env::var(THREADS_ENV).ok().and_then(|v| v.parse().ok())
    });
    let output = match run_in_pool(threads, &cli.command, &config) {
        Ok(out) => out,
        Err(e) => {
            eprintln!("error: {e}");
            return match e {
                Error::Numerical(_) => 3,
                _ => 2,
            };
        }
    };

    let write_result = match &cli.out {
        Some(path) => std::fs::write(path, output.as_bytes()),
        None => {
            use std::io::Write;
            std::io::stdout().write_all(output.as_bytes())
        }
    };
    if let Err(e) = write_result {
        eprintln!("error: cannot write output: {e}");
        return 1;
    }
    0
}

fn run_in_pool(
    threads: Option<usize>,
    command: &Command,
    config: &RunConfig,
) -> Result<String, Error> {
    let dispatch = || match command {
        Command::Simulate => cmd_simulate(config),
        Command::Filter => cmd_filter(config),
        Command::PriceFutures => cmd_price_futures(config),
        Command::PriceIndifference => cmd_price_indifference(config),
        Command::Density => cmd_density(config),
        Command::Cumulants => cmd_cumulants(config),
    };
    match threads {
        None => dispatch(),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| Error::contract(format!("thread pool: {e}")))?;
            pool.install(dispatch)
        }
    }
}

/// Every command checks its numeric outputs before serialization; any
/// non-finite value aborts the run with a numerical error (exit code 3).
fn ensure_finite<I: IntoIterator<Item = f64>>(values: I, what: &str) -> Result<(), Error> {
    for v in values {
        if !v.is_finite() {
            return Err(Error::numerical(format!("non-finite {what} in output: {v}")));
        }
    }
    Ok(())
}

fn header(config: &RunConfig) -> String {
    format!("# config: {}\n", config.resolved_json())
}

fn cmd_simulate(config: &RunConfig) -> Result<String, Error> {
    let params = config.model()?;
    let sim = config
        .simulate
        .as_ref()
        .ok_or_else(|| Error::domain("missing `simulate` block"))?;
    if sim.n_paths == 0 {
        return Err(Error::domain("simulate.n_paths must be >= 1"));
    }
    let rng = config.rng();
    let mut out = header(config);
    out.push_str("t,y,p,q\n");
    for i in 0..sim.n_paths {
        let stream = rng.with_stream(i as u64);
        let mut buf = Vec::new();
        match sim.measure {
            Measure::Physical => {
                let prior = config.prior()?;
                let (atom, path) =
                    simulate_one_from_prior(&prior, &params, sim.horizon, sim.n_steps, &stream)?;
                ensure_finite(
                    path.states().iter().flat_map(|s| [s.y, s.p, s.q]),
                    "path value",
                )?;
                writeln!(out, "# path {i}: theta0={},theta1={}", atom.theta0, atom.theta1)
                    .expect("string write");
                path.write_csv_rows(&mut buf).expect("vec write");
            }
            Measure::RiskNeutral => {
                let path = simulate_risk_neutral(&params, sim.horizon, sim.n_steps, &stream)?;
                ensure_finite(
                    path.states().iter().flat_map(|s| [s.y, s.p, s.q]),
                    "path value",
                )?;
                writeln!(out, "# path {i}").expect("string write");
                path.write_csv_rows(&mut buf).expect("vec write");
            }
        }
        out.push_str(std::str::from_utf8(&buf).expect("csv is utf8"));
    }
    Ok(out)
}

fn cmd_filter(config: &RunConfig) -> Result<String, Error> {
    let params = config.model()?;
    let prior = config.prior()?;
    let cfg = config
        .filter
        .as_ref()
        .ok_or_else(|| Error::domain("missing `filter` block"))?;
    let rng = config.rng();
    let (atom, path) = match (cfg.theta0, cfg.theta1) {
        (Some(t0), Some(t1)) => {
            let atom = ThetaAtom::new(t0, t1)?;
            (atom, simulate_physical(&atom, &params, cfg.horizon, cfg.n_steps, &rng)?)
        }
        (None, None) => simulate_one_from_prior(&prior, &params, cfg.horizon, cfg.n_steps, &rng)?,
        _ => {
            return Err(Error::domain(
                "filter: give both theta0 and theta1, or neither",
            ))
        }
    };
    let posts = filter_along_path(&prior, &path, &params);
    ensure_finite(
        posts.iter().flat_map(|p| {
            let (e0, e1) = p.bayes_estimate();
            [e0, e1, p.log_normalizer()]
        }),
        "filter estimate",
    )?;
    let mut out = header(config);
    writeln!(out, "# true atom: theta0={},theta1={}", atom.theta0, atom.theta1)
        .expect("string write");
    let mut buf = Vec::new();
    write_filter_csv(&path, &posts, &mut buf)?;
    out.push_str(std::str::from_utf8(&buf).expect("csv is utf8"));
    Ok(out)
}

fn cmd_price_futures(config: &RunConfig) -> Result<String, Error> {
    let params = config.model()?;
    let cfg = config
        .futures
        .as_ref()
        .ok_or_else(|| Error::domain("missing `futures` block"))?;
    let (spec, _maturity) = config.payoff()?;
    let payoff = FuturesPayoff::from_spec_on_futures(&spec)?;
    let vol = config.vol_curve()?;
    let mut out = header(config);
    out.push_str("t,f,price,delta\n");
    for &t in &cfg.times {
        let (price, delta) = match cfg.nodes {
            Some(n) => (
                price_futures_derivative_n(&payoff, t, cfg.f_t, cfg.maturity, &vol, params.r, n)?,
                delta_futures_derivative_n(&payoff, t, cfg.f_t, cfg.maturity, &vol, params.r, n)?,
            ),
            None => (
                price_futures_derivative(&payoff, t, cfg.f_t, cfg.maturity, &vol, params.r)?,
                crate::futures_pricing::delta_futures_derivative(
                    &payoff,
                    t,
                    cfg.f_t,
                    cfg.maturity,
                    &vol,
                    params.r,
                )?,
            ),
        };
        ensure_finite([price, delta], "price")?;
        writeln!(out, "{t},{},{price},{delta}", cfg.f_t).expect("string write");
    }
    Ok(out)
}

#[derive(Serialize)]
struct IndifferenceOutput<'a> {
    config: &'a RunConfig,
    price: f64,
    std_error: f64,
    gamma: f64,
    n_paths: usize,
}

fn cmd_price_indifference(config: &RunConfig) -> Result<String, Error> {
    let params = config.model()?;
    let prior = config.prior()?;
    let (payoff, maturity) = config.payoff()?;
    let mc = config.mc()?;
    let est = indifference_price(&payoff, maturity, params.gamma, &prior, &params, &mc)?;
    ensure_finite([est.value, est.std_error], "price")?;
    let out = IndifferenceOutput {
        config,
        price: est.value,
        std_error: est.std_error,
        gamma: params.gamma,
        n_paths: mc.n_paths,
    };
    let mut text = serde_json::to_string_pretty(&out).expect("json output");
    text.push('\n');
    Ok(text)
}

fn cmd_density(config: &RunConfig) -> Result<String, Error> {
    let params = config.model()?;
    let cfg = config
        .density
        .as_ref()
        .ok_or_else(|| Error::domain("missing `density` block"))?;
    let inv = config.inversion()?;
    let form = cfg.transform.unwrap_or_default();
    let ys = axis_points(&cfg.y, "density.y")?;
    let ps = axis_points(&cfg.p, "density.p")?;
    let qs = axis_points(&cfg.q, "density.q")?;
    let mut grid = Vec::with_capacity(ys.len() * ps.len() * qs.len());
    for &y in &ys {
        for &p in &ps {
            for &q in &qs {
                grid.push((y, p, q));
            }
        }
    }
    let values: Result<Vec<f64>, Error> = grid
        .par_iter()
        .map(|&(y, p, q)| phi_with_transform(cfg.t, y, p, q, &params, &inv, form))
        .collect();
    let values = values?;
    ensure_finite(values.iter().copied(), "density value")?;
    let mut out = header(config);
    out.push_str("y,p,q,phi\n");
    for ((y, p, q), v) in grid.iter().zip(values.iter()) {
        writeln!(out, "{y},{p},{q},{v}").expect("string write");
    }
    Ok(out)
}

fn cmd_cumulants(config: &RunConfig) -> Result<String, Error> {
    let params = config.model()?;
    let prior = config.prior()?;
    let cfg = config
        .cumulants
        .as_ref()
        .ok_or_else(|| Error::domain("missing `cumulants` block"))?;
    let rows = cfg
        .times
        .iter()
        .map(|&t| Ok((t, crate::cumulants::cumulants_from_prior(&prior, t, &params)?)))
        .collect::<Result<Vec<_>, Error>>()?;
    let asymptotic = if cfg.asymptotic {
        // Marginal laws of the speed and of the mean-reversion level, with
        // weights aggregated over equal values.
        let mut speed: Vec<(f64, f64)> = Vec::new();
        let mut level: Vec<(f64, f64)> = Vec::new();
        for (atom, w) in prior.atoms() {
            let lv = atom.mean_level(params.f)?;
            merge_atom(&mut speed, atom.theta1, *w);
            merge_atom(&mut level, lv, *w);
        }
        Some(crate::cumulants::cumulants_asymptotic(&speed, &level, &params, 4)?)
    } else {
        None
    };
    ensure_finite(
        rows.iter().flat_map(|(t, c)| [*t, c.k1, c.k2, c.k3, c.k4]),
        "cumulant",
    )?;
    if let Some(k) = &asymptotic {
        ensure_finite(k.iter().copied(), "asymptotic cumulant")?;
    }
    let mut buf = Vec::new();
    crate::cumulants::write_cumulants_csv(&rows, asymptotic.as_deref(), &mut buf)
        .expect("vec write");
    let mut out = header(config);
    out.push_str(std::str::from_utf8(&buf).expect("csv is utf8"));
    Ok(out)
}

fn merge_atom(list: &mut Vec<(f64, f64)>, value: f64, weight: f64) {
    for entry in list.iter_mut() {
        if entry.0 == value {
            entry.1 += weight;
            return;
        }
    }
    list.push((value, weight));
}
