//! Random-walk Metropolis-Hastings on a shipped target, the comparison baseline.

use affordance::harness::{run_baseline, ExperimentConfig};

fn main() -> affordance::Result<()> {
    let cfg = ExperimentConfig::default();
    let shipped = cfg.shipped_target()?;
    for seed in 1..=3 {
        let r = run_baseline(&cfg, seed)?;
        println!(
            "seed {seed}: acceptance {:.3}, successes {}, unique {}, basins {:?}",
            r.metrics.acceptance_rate,
            r.metrics.success_count,
            r.metrics.unique_success_count,
            r.basins_visited(shipped.target.as_ref())
        );
    }
    Ok(())
}
