//! Command-line front end: builds beam plans, evaluates them, sweeps the
//! design space and cross-checks with Monte Carlo, writing CSV.

pub mod config;
pub mod output;

use std::io::Write;
use std::path::PathBuf;

use beamswitch_core::{
    build_plan, run_sweep, simulate, Agreement, Analysis, BdeSurface, LinkBudget, OutageForm,
    PerformanceResult,
};
use clap::{Parser, Subcommand};
use thiserror::Error;

use crate::config::{load_config, ConfigError, RunConfig};
use crate::output::{fmt_g, open_sink, weights_path};

#[derive(Debug, Parser)]
#[command(name = "beamswitch", version, about = "RSU beam-switching plan designer and evaluator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Output CSV path (overrides output.path; stdout if neither is set).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Monte Carlo seed (overrides mc.seed).
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Write angles in degrees instead of radians.
    #[arg(long, global = true)]
    pub degrees: bool,

    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Write the beam table of one plan.
    Design,
    /// Evaluate one plan analytically.
    Evaluate,
    /// Evaluate every point of a sweep grid.
    Sweep,
    /// Sweep, calibrate the BDE weights and score every point.
    Bde,
    /// Compare the analytic result of one plan with Monte Carlo.
    Mc,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),

    #[error(transparent)]
    Core(beamswitch_core::Error),

    #[error("cannot write output: {0}")]
    Io(#[from] std::io::Error),

    #[error("cannot write CSV: {0}")]
    Csv(#[from] csv::Error),

    #[error("analytic and Monte Carlo results disagree: {0}")]
    Disagreement(String),
}

impl From<beamswitch_core::Error> for CliError {
    fn from(e: beamswitch_core::Error) -> Self {
        use beamswitch_core::Error as E;
        match e {
            E::InvalidParams(_) | E::InvalidSpec(_) | E::InvalidGrid(_) | E::McConfig(_) | E::Domain { .. } => {
                CliError::Config(ConfigError::Core(e))
            }
            other => CliError::Core(other),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Io(_) | CliError::Csv(_) => 2,
            CliError::Core(_) => 3,
            CliError::Disagreement(_) => 4,
        }
    }
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    if let Some(jobs) = cli.jobs {
        // Fails only if a pool already exists, in which case it is reused.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build_global();
    }
    let path = cli.config.as_ref().ok_or_else(|| {
        ConfigError::Mode("--config <path> is required".into())
    })?;
    let mut cfg = load_config(path)?;
    if let Some(seed) = cli.seed {
        cfg.mc = cfg.mc.with_seed(seed);
    }
    if let Some(out) = &cli.out {
        cfg.output_path = Some(out.clone());
    }
    match cli.command {
        Command::Design => cmd_design(&cfg, cli.degrees),
        Command::Evaluate => cmd_evaluate(&cfg),
        Command::Sweep => cmd_sweep(&cfg),
        Command::Bde => cmd_bde(&cfg),
        Command::Mc => cmd_mc(&cfg),
    }
}

fn writer(cfg: &RunConfig) -> Result<csv::Writer<Box<dyn Write>>, CliError> {
    Ok(csv::Writer::from_writer(open_sink(cfg.output_path.as_deref())?))
}

const RESULT_HEADER: [&str; 6] = ["strategy", "n_beams", "overlap", "sigma_v_mps", "rate_bps", "outage_fraction"];

fn result_row(r: &PerformanceResult) -> Vec<String> {
    vec![
        r.spec.strategy.to_string(),
        r.spec.n_beams.to_string(),
        fmt_g(r.spec.overlap),
        fmt_g(r.sigma_v),
        fmt_g(r.total_rate),
        fmt_g(r.outage_fraction),
    ]
}

pub fn cmd_design(cfg: &RunConfig, degrees: bool) -> Result<(), CliError> {
    let plan = build_plan(&cfg.design()?, &cfg.scenario)?;
    let (unit, scale) = if degrees { ("deg", 180.0 / std::f64::consts::PI) } else { ("rad", 1.0) };
    let mut w = writer(cfg)?;
    w.write_record([
        "index".to_string(),
        "b_begin_m".into(),
        "b_end_m".into(),
        "switch_m".into(),
        format!("theta_{unit}"),
        format!("theta_nom_{unit}"),
    ])?;
    for s in &plan.sectors {
        w.write_record([
            s.index.to_string(),
            fmt_g(s.b_begin),
            fmt_g(s.b_end),
            fmt_g(s.switch_out),
            fmt_g(s.azimuth_width * scale),
            fmt_g(s.nominal_width * scale),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn evaluate_with(cfg: &RunConfig, form: OutageForm) -> Result<PerformanceResult, CliError> {
    let spec = cfg.design()?;
    let plan = build_plan(&spec, &cfg.scenario)?;
    let lb = LinkBudget::derive(&cfg.scenario)?;
    Ok(Analysis::new(&plan, &lb, &cfg.scenario, &cfg.quad)?
        .with_outage_form(form)
        .evaluate()?)
}

pub fn cmd_evaluate(cfg: &RunConfig) -> Result<(), CliError> {
    let r = evaluate_with(cfg, OutageForm::Consistent)?;
    let mut w = writer(cfg)?;
    w.write_record(RESULT_HEADER)?;
    w.write_record(result_row(&r))?;
    w.flush()?;
    Ok(())
}

pub fn cmd_sweep(cfg: &RunConfig) -> Result<(), CliError> {
    let results = run_sweep(cfg.sweep()?, &cfg.scenario, &cfg.quad)?;
    let mut w = writer(cfg)?;
    w.write_record(RESULT_HEADER)?;
    for r in &results {
        w.write_record(result_row(r))?;
    }
    w.flush()?;
    Ok(())
}

pub fn cmd_bde(cfg: &RunConfig) -> Result<(), CliError> {
    let results = run_sweep(cfg.sweep()?, &cfg.scenario, &cfg.quad)?;
    let surface = BdeSurface::from_results(&results)?;

    let mut w = writer(cfg)?;
    let mut header = RESULT_HEADER.to_vec();
    header.push("bde");
    w.write_record(&header)?;
    for (r, e) in results.iter().zip(&surface.entries) {
        let mut row = result_row(r);
        row.push(fmt_g(e.bde));
        w.write_record(row)?;
    }
    w.flush()?;

    let wt = &surface.weights;
    let weights_sink: Box<dyn Write> = match &cfg.output_path {
        Some(p) => open_sink(Some(&weights_path(p)))?,
        None => Box::new(std::io::stderr()),
    };
    let mut ww = csv::Writer::from_writer(weights_sink);
    ww.write_record(["alpha", "beta", "max_rate_bps", "min_rate_bps", "max_outage", "min_outage"])?;
    ww.write_record([wt.alpha, wt.beta, wt.max_rate, wt.min_rate, wt.max_out, wt.min_out].map(fmt_g))?;
    ww.flush()?;
    Ok(())
}

/// Writes analytic (both outage forms), Monte Carlo and an agreement row.
/// In the agreement row the rate and outage columns hold absolute
/// differences and the stderr columns hold the tolerances they were held to.
pub fn cmd_mc(cfg: &RunConfig) -> Result<(), CliError> {
    let analytic = evaluate_with(cfg, OutageForm::Consistent)?;
    let printed = evaluate_with(cfg, OutageForm::AsPrinted)?;
    let plan = build_plan(&cfg.design()?, &cfg.scenario)?;
    let lb = LinkBudget::derive(&cfg.scenario)?;
    let mc = simulate(&plan, &lb, &cfg.scenario, &cfg.mc)?;
    let agreement = Agreement::new(&analytic, &mc);

    let mut w = writer(cfg)?;
    w.write_record(["source", "rate_bps", "outage_fraction", "stderr_rate", "stderr_outage"])?;
    for (name, r) in [("analytic", &analytic), ("analytic_as_printed", &printed)] {
        w.write_record([name.to_string(), fmt_g(r.total_rate), fmt_g(r.outage_fraction), "0".into(), "0".into()])?;
    }
    w.write_record([
        "montecarlo".to_string(),
        fmt_g(mc.mean_rate),
        fmt_g(mc.mean_outage_fraction),
        fmt_g(mc.stderr_rate),
        fmt_g(mc.stderr_outage),
    ])?;
    let flag = if agreement.passes() { "agreement_pass" } else { "agreement_fail" };
    w.write_record([
        flag.to_string(),
        fmt_g(agreement.rate_diff),
        fmt_g(agreement.outage_diff),
        fmt_g(agreement.rate_tol),
        fmt_g(agreement.outage_tol),
    ])?;
    w.flush()?;

    if mc.rejected > 0 {
        eprintln!("note: {} speed-error draws rejected and redrawn", mc.rejected);
    }
    if agreement.passes() {
        Ok(())
    } else {
        Err(CliError::Disagreement(format!(
            "rate diff {} (tol {}), outage diff {} (tol {})",
            fmt_g(agreement.rate_diff),
            fmt_g(agreement.rate_tol),
            fmt_g(agreement.outage_diff),
            fmt_g(agreement.outage_tol)
        )))
    }
}
