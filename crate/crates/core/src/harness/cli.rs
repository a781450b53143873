//! Command-line front end shared by the `affordance` binary and the tests.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::error::{Error, Result};
use crate::harness::config::ExperimentConfig;
use crate::harness::io;
use crate::harness::run::{demos_for, report_dir, run_baseline, run_matrix, run_single, sketch_for, RunReport};
use crate::metrics::aggregate_text;
use crate::rng::seeded;
use crate::rwmh::Bias;
use crate::targets::SHIPPED_TARGETS;

#[derive(Debug, Parser)]
#[command(name = "affordance", version, about = "Sample grasp affordance densities with Kameleon MCMC and darting")]
pub struct Cli {
    /// Seed for the run's generator (replaces the configured seed list).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Flat `key = value` config file (or a JSON config snapshot).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (overrides the config and AFFORDANCE_OUT).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Target name (overrides the config).
    #[arg(long, global = true)]
    pub target: Option<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate and print the demonstrated grasps.
    Demo,
    /// Build a sketch at one bias level and save it as JSON.
    Sketch {
        #[arg(long, default_value = "weak")]
        bias: Bias,
    },
    /// One run of the combined sampler.
    Run {
        #[arg(long, default_value = "weak")]
        bias: Bias,
        /// Kernel translation weight.
        #[arg(long, default_value_t = 0.05)]
        c: f64,
    },
    /// The full bias x c x seed sweep.
    Matrix,
    /// One random-walk Metropolis-Hastings run for comparison.
    Baseline,
    /// Re-aggregate saved reports.
    Report {
        /// Directory holding `reports/` (defaults to the output directory).
        dir: Option<PathBuf>,
    },
}

fn resolve_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    cfg.apply_env();
    if let Some(out) = &cli.out {
        cfg.output_dir = out.clone();
    }
    if let Some(seed) = cli.seed {
        cfg.seeds = vec![seed];
    }
    if let Some(t) = &cli.target {
        cfg.target.name = t.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn summary(r: &RunReport) -> String {
    let m = &r.metrics;
    format!(
        "successes {} (unique {}), acceptance {:.3}, dispersion {:.6} m^2, hash {}, {:.2}s",
        m.success_count, m.unique_success_count, m.acceptance_rate, m.dispersion_area, r.chain_hash, r.duration_secs
    )
}

fn execute(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    let cfg = resolve_config(cli)?;
    let seed = cfg.seeds[0];
    let w = |out: &mut dyn Write, s: String| writeln!(out, "{s}").map_err(|e| Error::io("<stdout>", e));
    match &cli.command {
        Command::Demo => {
            let shipped = cfg.shipped_target()?;
            let demos = demos_for(&cfg, &shipped, &mut seeded(seed))?;
            w(out, format!("# {} demonstrated grasps on `{}` (seed {seed})", demos.len(), cfg.target.name))?;
            w(out, "qw,qx,qy,qz,tx,ty,tz".into())?;
            for p in demos.poses() {
                let q = p.rot.quat();
                w(out, format!("{:.9},{:.9},{:.9},{:.9},{:.9},{:.9},{:.9}", q.w, q.x, q.y, q.z, p.tra.x, p.tra.y, p.tra.z))?;
            }
        }
        Command::Sketch { bias } => {
            let (_, sketch) = sketch_for(&cfg, *bias, seed)?;
            let path = cfg.output_dir.join(format!("sketch_{bias}_s{seed}.json"));
            io::write_json(&path, &sketch)?;
            w(out, format!("{} sketch: {} poses, {} valid -> {}", bias, sketch.len(), sketch.valid_count(), path.display()))?;
        }
        Command::Run { bias, c } => {
            let report = run_single(&cfg, *bias, *c, seed)?;
            let path = io::write_run(&report, &cfg.output_dir)?;
            w(out, format!("{bias} c={c} seed={seed}: {}", summary(&report)))?;
            w(out, format!("report -> {}", path.display()))?;
        }
        Command::Baseline => {
            let report = run_baseline(&cfg, seed)?;
            let path = io::write_run(&report, &cfg.output_dir)?;
            w(out, format!("random walk seed={seed}: {}", summary(&report)))?;
            w(out, format!("report -> {}", path.display()))?;
        }
        Command::Matrix => {
            let outcome = run_matrix(&cfg)?;
            w(out, format!("{} runs, {} failed -> {}", outcome.reports.len() + outcome.failures.len(), outcome.failures.len(), outcome.output_dir.display()))?;
            for f in &outcome.failures {
                w(out, format!("failed: {} c={} seed={}: {}", f.bias, f.c, f.seed, f.error))?;
            }
            w(out, aggregate_text(&outcome.aggregate))?;
        }
        Command::Report { dir } => {
            let dir = dir.clone().unwrap_or_else(|| cfg.output_dir.clone());
            let (metrics, rows) = report_dir(&dir)?;
            if metrics.is_empty() {
                return Err(Error::Parse { path: dir, reason: "no run reports found".into() });
            }
            w(out, format!("{} reports in {}", metrics.len(), dir.display()))?;
            w(out, aggregate_text(&rows))?;
        }
    }
    Ok(())
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run_cli<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = if e.use_stderr() { write!(err, "{e}") } else { write!(out, "{e}") };
            return code;
        }
    };
    match execute(&cli, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            if matches!(e, Error::UnknownTarget { .. }) {
                let _ = writeln!(err, "available targets: {}", SHIPPED_TARGETS.join(", "));
            }
            1
        }
    }
}
