//! A reduced bias x c matrix written to disk, then aggregated.
//!
//! `cargo run --release --example c_sweep -- [output dir]`

use std::path::PathBuf;

use affordance::harness::run::run_matrix_in;
use affordance::harness::{CSweep, ExperimentConfig};
use affordance::metrics::aggregate_text;

fn main() -> affordance::Result<()> {
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("affordance_c_sweep"));
    let mut cfg = ExperimentConfig::default();
    cfg.sweep = CSweep::List(vec![0.0, 0.05, 0.1, 0.15, 0.2]);
    cfg.seeds = vec![1, 2];
    cfg.output_dir = out.clone();

    let outcome = run_matrix_in(&cfg, &out, None)?;
    println!("{} runs ({} failed) -> {}", outcome.reports.len(), outcome.failures.len(), out.display());
    print!("{}", aggregate_text(&outcome.aggregate));
    Ok(())
}
