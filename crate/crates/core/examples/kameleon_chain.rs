//! A pure Kameleon chain on a single-mode target, without darting.

use affordance::geometry::{d_mag_linearized, Pose, UnitQuat};
use affordance::kameleon::{kameleon_step, ChainState, KameleonParams};
use affordance::kernel::KernelParams;
use affordance::rng::seeded;
use affordance::rwmh::{build_sketch, Bias, RwParams};
use affordance::targets::{DemoGrasps, MixtureTarget, Mode};
use nalgebra::Vector3;

fn main() -> affordance::Result<()> {
    let center = Pose::new(UnitQuat::from_axis_angle(Vector3::y(), 0.5), Vector3::new(0.1, 0.0, 0.05));
    let target = MixtureTarget::new("single", vec![Mode { center, weight: 1.0, scale: 0.1 }], 400.0)?;
    let mut rng = seeded(3);

    let demos = DemoGrasps::new(vec![center], &target)?;
    let sketch = build_sketch(&target, &demos, Bias::Weak, 1000, &RwParams::default(), &mut rng)?;
    let params = KameleonParams::new(KernelParams::new(0.2, 1.0, 0.2)?);
    let mut state = ChainState::new(center, sketch.poses(), params.burn_in, &target);

    let mut accepted = 0;
    let mut dist = Vec::new();
    for i in 0..params.burn_in + params.iterations {
        let step = kameleon_step(&mut state, &target, &params, &mut rng)?;
        if i >= params.burn_in {
            accepted += step.accepted as usize;
            dist.push(d_mag_linearized(&state.current, &center, 400.0)?);
        }
    }
    let mean = dist.iter().sum::<f64>() / dist.len() as f64;
    println!("acceptance {:.3}", accepted as f64 / params.iterations as f64);
    println!("mean distance to the mode {mean:.4}");
    println!("history length {}", state.history().len());
    Ok(())
}
