//! Kernel values, gradients, and the proposal covariance they induce.

use affordance::geometry::{Pose, UnitQuat};
use affordance::kernel::{gradient_matrix, kernel_eval, kernel_grad, proposal_covariance, KernelParams};
use nalgebra::{SymmetricEigen, Vector3};

fn main() -> affordance::Result<()> {
    let params = KernelParams::new(0.2, 1.0, 0.1)?;
    let y = Pose::identity();
    let z: Vec<Pose> = (0..8)
        .map(|i| {
            let angle = 0.1 * i as f64;
            Pose::new(UnitQuat::from_axis_angle(Vector3::z(), angle), Vector3::new(0.02 * i as f64, 0.0, 0.0))
        })
        .collect();

    for zi in z.iter().take(3) {
        let g = kernel_grad(&y, zi, &params)?;
        println!("k = {:.5}  |grad| = {:.5}", kernel_eval(&y, zi, &params), g.norm());
    }

    let m = gradient_matrix(&z, &y, 1.0, &params)?;
    let cov = proposal_covariance(&m, 1e-5, affordance::kameleon::default_nu())?;
    let eig = SymmetricEigen::new(*cov.matrix());
    let mut values: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    values.sort_by(|a, b| b.total_cmp(a));
    let shown: Vec<String> = values.iter().map(|v| format!("{v:.3e}")).collect();
    println!("proposal covariance eigenvalues: {}", shown.join(" "));
    println!("log det = {:.3}", cov.log_det());
    Ok(())
}
