//! Jump regions around two distant modes, and darting between them.

use affordance::gdmc::{build_regions, combined_step, dart, Branch, DartingParams};
use affordance::geometry::{Pose, UnitQuat};
use affordance::kameleon::{ChainState, KameleonParams};
use affordance::kernel::KernelParams;
use affordance::rng::{seeded, standard_normal};
use affordance::rwmh::vmf_sample;
use affordance::targets::{DemoGrasps, MixtureTarget, Mode, TargetDensity};
use nalgebra::Vector3;

fn main() -> affordance::Result<()> {
    let a = Pose::identity();
    let b = Pose::new(UnitQuat::from_axis_angle(Vector3::z(), 2.5), Vector3::new(0.2, 0.1, 0.0));
    let modes = vec![Mode { center: a, weight: 1.0, scale: 0.1 }, Mode { center: b, weight: 1.0, scale: 0.1 }];
    let target = MixtureTarget::new("two", modes, 100.0)?;
    let demos = DemoGrasps::new(vec![a, b], &target)?;
    let mut rng = seeded(5);

    // Stand-in for a burned-in chain: scatter around both modes.
    let history: Vec<Pose> = (0..200)
        .map(|i| {
            let c = if i % 2 == 0 { a } else { b };
            let t = Vector3::new(standard_normal(&mut rng), standard_normal(&mut rng), standard_normal(&mut rng)) * 0.03;
            Pose::new(vmf_sample(c.rot, 100.0, &mut rng), c.tra + t)
        })
        .collect();
    let darting = DartingParams::default();
    let regions = build_regions(&demos, &history, &darting)?;
    for (i, r) in regions.iter().enumerate() {
        println!("region {i}: volume {:.3e}", r.volume());
    }
    let moved = dart(&a, &regions[0], &regions[1])?;
    println!("dart of mode a lands in basin {:?}", target.basin_of(&moved));

    let params = KameleonParams::new(KernelParams::new(0.2, 1.0, 0.1)?);
    let mut state = ChainState::new(a, history, 0, &target);
    let (mut darts, mut jumps, mut holds) = (0, 0, 0);
    let mut visits = [0usize; 2];
    for _ in 0..2000 {
        let step = combined_step(&mut state, &target, &regions, &params, &darting, &mut rng)?;
        match step.branch {
            Branch::Dart => {
                darts += 1;
                jumps += step.accepted as usize;
            }
            Branch::Hold => holds += 1,
            _ => {}
        }
        if let Some(k) = target.basin_of(&state.current) {
            visits[k] += 1;
        }
    }
    println!("darts {darts}, accepted {jumps}, holds {holds}, time in each mode {visits:?}");
    Ok(())
}
