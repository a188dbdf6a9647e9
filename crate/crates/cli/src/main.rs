use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use gaseq_core::analytics::RegionMap;
use gaseq_core::calibration::{adjust_reference_sales, calibrate, CalibrationBounds, CalibrationOptions};
use gaseq_core::io::{
    build_report, load_calibration_data, load_model, load_model_file, load_updates, read_report, rederive_aggregates,
    write_report, ModelFile,
};
use gaseq_core::lcp::SolverOptions;
use gaseq_core::market::solve_model;
use gaseq_core::scenario::{build_horizon, run_plan};
use gaseq_core::Error;

/// Spatial partial-equilibrium gas market model.
#[derive(Parser)]
#[command(name = "gaseq", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a model and print prices, consumption and production.
    Solve {
        model: PathBuf,
        /// Print every period and each trader's sales.
        #[arg(long)]
        period_detail: bool,
    },
    /// Fit demand anchors and market power to reference data.
    Calibrate {
        model: PathBuf,
        /// Calibration file, or a model file with a calibration section.
        data: PathBuf,
        /// Largest accepted relative consumption deviation.
        #[arg(long, default_value_t = 0.025)]
        target: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Where to write the calibrated model (stdout if absent).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the simulation runs of every update year.
    Plan { model: PathBuf, updates: PathBuf },
    /// Execute every planned run and write the result report.
    Run {
        model: PathBuf,
        updates: PathBuf,
        /// Report path (stdout if absent).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads for the runs of one year.
        #[arg(long, default_value_t = 1)]
        parallel: usize,
        /// Accepted for symmetry with `calibrate`; runs are deterministic.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Re-derive the aggregate columns of a report and compare.
    Report { results: PathBuf },
}

/// Aggregates may differ from their recomputation by this much per unit of magnitude.
const AGGREGATE_TOL: f64 = 1e-9;

enum Failure {
    Lib(Error),
    /// Work finished but some runs failed to solve.
    Solver(String),
    /// Report aggregates disagree with the country columns.
    Mismatch(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Lib(Error::Io(e))
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Solver(_) => 2,
        Error::Io(_) => 3,
        Error::Csv(c) if c.is_io_error() => 3,
        _ => 1,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("GASEQ_LOG", "warn")).init();
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Lib(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
        Err(Failure::Solver(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Mismatch(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(cmd: Command) -> Result<(), Failure> {
    match cmd {
        Command::Solve { model, period_detail } => solve(&model, period_detail),
        Command::Calibrate { model, data, target, seed, out } => calibrate_cmd(&model, &data, target, seed, out.as_deref()),
        Command::Plan { model, updates } => plan(&model, &updates),
        Command::Run { model, updates, out, parallel, seed } => {
            log::debug!("run seed {seed}");
            run(&model, &updates, out.as_deref(), parallel)
        }
        Command::Report { results } => report(&results),
    }
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn solve(path: &Path, period_detail: bool) -> Result<(), Failure> {
    let model = load_model(path)?;
    let sol = solve_model(&model, &SolverOptions::default())?;
    let mut out = output(None)?;
    writeln!(out, "status: {}", sol.status)?;
    for (n, node) in model.consumer_nodes() {
        if period_detail {
            for (t, p) in model.periods.iter().enumerate() {
                writeln!(
                    out,
                    "node {} period {}: lambda={:.3} s={:.3}",
                    node.id,
                    p.id,
                    sol.price[[n, t]],
                    sol.consumption[[n, t]]
                )?;
                for (f, tr) in model.traders.iter().enumerate() {
                    let q = sol.sales[[f, n, t]];
                    if q > 0.0 {
                        writeln!(out, "  {} sells {:.3}", tr.id, q)?;
                    }
                }
            }
        } else {
            let days = model.total_days();
            let s: f64 = model.periods.iter().enumerate().map(|(t, p)| p.duration * sol.consumption[[n, t]]).sum::<f64>() / days;
            let spend: f64 = model
                .periods
                .iter()
                .enumerate()
                .map(|(t, p)| p.duration * sol.consumption[[n, t]] * sol.price[[n, t]])
                .sum();
            let lambda = if s > 0.0 {
                spend / (s * days)
            } else {
                model.periods.iter().enumerate().map(|(t, p)| p.duration * sol.price[[n, t]]).sum::<f64>() / days
            };
            writeln!(out, "node {}: lambda={:.3} s={:.3}", node.id, lambda, s)?;
        }
    }
    for (f, tr) in model.traders.iter().enumerate() {
        let days = model.total_days();
        let q: f64 = model.periods.iter().enumerate().map(|(t, p)| p.duration * sol.production[[f, t]]).sum::<f64>() / days;
        writeln!(out, "trader {}: production={:.3}", tr.id, q)?;
    }
    out.flush()?;
    Ok(())
}

fn calibrate_cmd(model_path: &Path, data_path: &Path, target: f64, seed: u64, out: Option<&Path>) -> Result<(), Failure> {
    let file = load_model_file(model_path)?;
    let model = file.model();
    let mut data = load_calibration_data(data_path)?;
    let adjusted = adjust_reference_sales(&data, &model);
    for d in &adjusted.diagnostics {
        log::warn!("{d}");
    }
    data.adjusted_sales = Some(adjusted.sales);
    let bounds = CalibrationBounds::from_data(&model, &data)?;
    let opts = CalibrationOptions { target, seed, ..Default::default() };
    let result = calibrate(&model, &data, &bounds, &opts)?;
    let m = &result.metrics;
    eprintln!(
        "consumption: max rel {:.4} max abs {:.3} mean {:.3} median {:.3}",
        m.consumption.max_rel, m.consumption.max_abs, m.consumption.mean, m.consumption.median
    );
    eprintln!(
        "price: max rel {:.4}; elasticity: max rel {:.4}; sales ({}): max rel {:.4}",
        m.price.max_rel, m.elasticity.max_rel, m.sales_weighting, m.sales.max_rel
    );
    eprintln!("sweeps {} evaluations {}", result.sweeps, result.evaluations);
    if !result.converged {
        eprintln!("warning: target {target} not reached");
    }
    let mut calibrated = ModelFile::from_model(&result.model);
    calibrated.calibration = Some(data);
    calibrated.updates = file.updates;
    let mut w = output(out)?;
    writeln!(w, "{}", calibrated.to_json())?;
    w.flush()?;
    Ok(())
}

fn plan(model_path: &Path, updates_path: &Path) -> Result<(), Failure> {
    let model = load_model(model_path)?;
    let updates = load_updates(updates_path)?;
    let plans = build_horizon(&model, &updates)?;
    let mut out = output(None)?;
    writeln!(out, "{:<6} {:>4} {:<8} {:>9}  expansions", "year", "id", "type", "reference")?;
    for plan in &plans {
        for run in &plan.runs {
            let reference = run.reference.map(|r| r.to_string()).unwrap_or_else(|| "-".into());
            let assets: Vec<String> = run
                .mask
                .expansions
                .iter()
                .map(|&i| {
                    let e = &plan.update.expansions[i];
                    match &e.to {
                        Some(to) => format!("{}:{}-{}", e.kind.code(), e.location, to),
                        None => format!("{}:{}", e.kind.code(), e.location),
                    }
                })
                .collect();
            writeln!(
                out,
                "{:<6} {:>4} {:<8} {:>9}  {}",
                plan.year,
                run.id,
                run.code.as_str(),
                reference,
                assets.join(" ")
            )?;
        }
    }
    out.flush()?;
    Ok(())
}

fn run(model_path: &Path, updates_path: &Path, out: Option<&Path>, parallel: usize) -> Result<(), Failure> {
    let model = load_model(model_path)?;
    let updates = load_updates(updates_path)?;
    let plans = build_horizon(&model, &updates)?;
    let solver = SolverOptions::default();
    let mut years = Vec::with_capacity(plans.len());
    for plan in plans {
        let outcomes = run_plan(&plan, &solver, parallel.max(1))?;
        years.push((plan, outcomes));
    }
    let report = build_report(&years, &RegionMap::from_model(&model))?;
    let mut w = output(out)?;
    write_report(&report, &mut w)?;
    w.flush()?;
    let failed: Vec<String> = report
        .rows
        .iter()
        .filter(|r| r.summary.is_none())
        .map(|r| format!("{}/{}: {}", r.year, r.simulation_id, r.status))
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Solver(format!("{} run(s) failed: {}", failed.len(), failed.join("; "))))
    }
}

fn report(path: &Path) -> Result<(), Failure> {
    let parsed = read_report(File::open(path)?)?;
    let checks = rederive_aggregates(&parsed)?;
    let mut out = output(None)?;
    writeln!(out, "{:<6} {:>4} {:>14} {:>14} {:>14} {:>10}", "year", "id", "dCS", "dSW_EU", "dSW", "max_diff")?;
    let mut worst: Option<String> = None;
    for c in &checks {
        let diff = c.max_abs_difference();
        let scale = c.stored.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
        writeln!(
            out,
            "{:<6} {:>4} {:>14.3} {:>14.3} {:>14.3} {:>10.2e}",
            c.year, c.simulation_id, c.derived[0], c.derived[2], c.derived[4], diff
        )?;
        if diff > AGGREGATE_TOL * scale && worst.is_none() {
            worst = Some(format!("aggregates of {}/{} differ by {diff:.3e}", c.year, c.simulation_id));
        }
    }
    out.flush()?;
    match worst {
        Some(msg) => Err(Failure::Mismatch(msg)),
        None => Ok(()),
    }
}
