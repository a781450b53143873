//! Sketches at the three bias levels: how many valid grasps each one carries.

use affordance::harness::run::sketch_for;
use affordance::harness::ExperimentConfig;
use affordance::rwmh::Bias;

fn main() -> affordance::Result<()> {
    let mut cfg = ExperimentConfig::default();
    for target in ["tri_mode", "ring", "handle"] {
        cfg.target.name = target.into();
        for bias in Bias::ALL {
            let (demos, sketch) = sketch_for(&cfg, bias, 1)?;
            println!("{target:>9} {bias:>9}: {} poses, {} valid, {} demos", sketch.len(), sketch.valid_count(), demos.len());
        }
    }
    Ok(())
}
