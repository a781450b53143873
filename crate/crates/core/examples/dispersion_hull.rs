//! Convex hull area of grasp positions, the dispersion metric.

use affordance::harness::{run_single, ExperimentConfig};
use affordance::metrics::convex_hull_area;
use affordance::rwmh::Bias;
use nalgebra::Vector3;

fn main() -> affordance::Result<()> {
    let cube: Vec<Vector3<f64>> = (0..8).map(|i| Vector3::new((i & 1) as f64, ((i >> 1) & 1) as f64, ((i >> 2) & 1) as f64)).collect();
    println!("unit cube: {:?}", convex_hull_area(&cube));
    println!("flat square: {:?}", convex_hull_area(&cube[..4]));

    let report = run_single(&ExperimentConfig::default(), Bias::Weak, 0.05, 1)?;
    let m = &report.metrics;
    println!("tri_mode run: {} unique successes spread over {:.6} m^2", m.unique_success_count, m.dispersion_area);
    Ok(())
}
