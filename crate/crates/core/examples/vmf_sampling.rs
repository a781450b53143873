//! von Mises-Fisher draws on unit quaternions at several concentrations.

use affordance::geometry::UnitQuat;
use affordance::rng::seeded;
use affordance::rwmh::vmf_sample;
use nalgebra::{Vector3, Vector4};

fn main() {
    let mut rng = seeded(1);
    let mean = UnitQuat::from_axis_angle(Vector3::new(1.0, 1.0, 0.0).normalize(), 0.7);
    println!("{:>7} {:>12} {:>16}", "kappa", "mean <x,mu>", "mean resultant");
    for kappa in [0.0, 1.0, 10.0, 50.0, 500.0] {
        let n = 20_000;
        let mut dot = 0.0;
        let mut sum = Vector4::zeros();
        for _ in 0..n {
            let x = vmf_sample(mean, kappa, &mut rng);
            dot += x.dot(mean);
            sum += x.to_vector();
        }
        println!("{kappa:>7} {:>12.4} {:>16.4}", dot / n as f64, sum.norm() / n as f64);
    }
}
