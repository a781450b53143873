//! Compose poses, measure distances, and see the quaternion double cover.

use affordance::geometry::{d_arc, d_mag, d_mag_linearized, relative_transform, Pose, UnitQuat};
use nalgebra::Vector3;

fn main() -> affordance::Result<()> {
    let a = Pose::new(UnitQuat::from_axis_angle(Vector3::z(), 0.4), Vector3::new(0.1, 0.0, 0.0));
    let b = Pose::new(UnitQuat::from_axis_angle(Vector3::x(), -0.9), Vector3::new(0.0, 0.05, 0.02));

    let ab = a.compose(&b);
    println!("a * b      = {:?} t={:?}", ab.rot.quat(), ab.tra.as_slice());
    println!("a * a^-1   = {:?}", a.compose(&a.conjugate()).rot.quat());

    let delta = relative_transform(&a, &b);
    println!("relative   = {:?} t={:?}", delta.rot.quat(), delta.tra.as_slice());

    for c in [0.0, 1.0, 100.0] {
        println!(
            "c = {c:>5}: d_mag = {:.6}, linearized = {:.6}, sign flipped = {:.6}",
            d_mag(&a, &b, c)?,
            d_mag_linearized(&a, &b, c)?,
            d_mag(&a.sign_flipped(), &b, c)?
        );
    }
    println!("arc(q, r) = {:.6}, arc(-q, r) = {:.6}", d_arc(a.rot, b.rot), d_arc(a.rot.neg(), b.rot));

    let mut v = ab.embed();
    v *= 3.0;
    let back = Pose::project(&v)?;
    println!("project(3 * embed) recovers the pose: {}", back.rot.dot(ab.rot).abs() > 1.0 - 1e-12);
    Ok(())
}
