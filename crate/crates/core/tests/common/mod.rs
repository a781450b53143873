#![allow(dead_code)]

use affordance::geometry::{Pose, Quat, UnitQuat};
use affordance::rng::{standard_normal, uniform, SimRng};
use nalgebra::Vector3;

pub fn random_unit_quat(rng: &mut SimRng) -> UnitQuat {
    let q = Quat::new(standard_normal(rng), standard_normal(rng), standard_normal(rng), standard_normal(rng));
    UnitQuat::normalize(q).expect("gaussian quaternion is nonzero")
}

pub fn random_pose(rng: &mut SimRng, spread: f64) -> Pose {
    let t = Vector3::new(uniform(rng) - 0.5, uniform(rng) - 0.5, uniform(rng) - 0.5) * 2.0 * spread;
    Pose::new(random_unit_quat(rng), t)
}

/// A pose within roughly `angle` radians and `dist` meters of `p`.
pub fn nearby_pose(rng: &mut SimRng, p: &Pose, angle: f64, dist: f64) -> Pose {
    let axis = Vector3::new(standard_normal(rng), standard_normal(rng), standard_normal(rng)).normalize();
    let rot = p.rot * UnitQuat::from_axis_angle(axis, angle * uniform(rng));
    let t = p.tra + Vector3::new(standard_normal(rng), standard_normal(rng), standard_normal(rng)) * dist;
    Pose::new(rot, t)
}

/// Two-sample Kolmogorov-Smirnov statistic and asymptotic p-value.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> (f64, f64) {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (n1, n2) = (a.len(), b.len());
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < n1 && j < n2 {
        let x = a[i].min(b[j]);
        while i < n1 && a[i] <= x {
            i += 1;
        }
        while j < n2 && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n1 as f64 - j as f64 / n2 as f64).abs());
    }
    let ne = (n1 * n2) as f64 / (n1 + n2) as f64;
    let lambda = (ne.sqrt() + 0.12 + 0.11 / ne.sqrt()) * d;
    let mut p = 0.0;
    for k in 1..=100 {
        let k = k as f64;
        let sign = if k as u64 % 2 == 1 { 1.0 } else { -1.0 };
        p += 2.0 * sign * (-2.0 * k * k * lambda * lambda).exp();
    }
    (d, p.clamp(0.0, 1.0))
}

/// Modified Bessel function of the first kind by its power series.
pub fn bessel_i(order: u32, x: f64) -> f64 {
    let half = x / 2.0;
    let mut term = half.powi(order as i32) / (1..=order).map(f64::from).product::<f64>();
    let mut sum = term;
    for k in 1..500 {
        let k = k as f64;
        term *= half * half / (k * (k + order as f64));
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    sum
}

/// Mean resultant length of a von Mises-Fisher law on the 3-sphere.
pub fn vmf_s3_mean_resultant(kappa: f64) -> f64 {
    bessel_i(2, kappa) / bessel_i(1, kappa)
}

pub fn median(v: &[f64]) -> f64 {
    let mut v = v.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    (v[n / 2] + v[(n - 1) / 2]) / 2.0
}
