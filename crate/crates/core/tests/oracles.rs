//! Library results checked against independently computed reference values.

mod common;

use std::f64::consts::PI;

use affordance::gdmc::{gamma_one_plus_half, Ellipsoid, VolumeFormula};
use affordance::geometry::{AmbientVec, Pose, UnitQuat};
use affordance::kameleon::{kameleon_propose, KameleonParams};
use affordance::kernel::{gradient_matrix, kernel_eval, kernel_grad, proposal_covariance, KernelParams, Matrix7};
use affordance::rng::{seeded, standard_normal, uniform};
use affordance::rwmh::vmf_sample;
use common::{bessel_i, nearby_pose, random_pose, random_unit_quat, vmf_s3_mean_resultant};
use nalgebra::{DMatrix, DVector, SymmetricEigen};

#[test]
fn kernel_gradient_matches_central_differences() {
    let mut rng = seeded(11);
    let params = KernelParams::new(1.0, 0.5, 0.3).unwrap();
    let h = 1e-6;
    for _ in 0..50 {
        let y = random_pose(&mut rng, 0.3);
        let z = nearby_pose(&mut rng, &y, 0.8, 0.2);
        let g = kernel_grad(&y, &z, &params).unwrap();
        let base = y.embed();
        let fd = AmbientVec::from_fn(|i, _| {
            let (mut up, mut down) = (base, base);
            up[i] += h;
            down[i] -= h;
            (kernel_eval(&Pose::project(&up).unwrap(), &z, &params) - kernel_eval(&Pose::project(&down).unwrap(), &z, &params)) / (2.0 * h)
        });
        assert!((fd - g).norm() <= 1e-5 * g.norm(), "fd {fd:?} vs {g:?}");
    }
}

#[test]
fn kernel_gradient_is_tangent_to_quaternion() {
    let mut rng = seeded(12);
    let params = KernelParams::new(0.2, 1.0, 0.1).unwrap();
    for _ in 0..100 {
        let y = random_pose(&mut rng, 0.3);
        let z = nearby_pose(&mut rng, &y, 1.0, 0.2);
        let g = kernel_grad(&y, &z, &params).unwrap();
        let radial = g.fixed_rows::<4>(0).dot(&y.rot.to_vector());
        assert!(radial.abs() < 1e-12);
    }
}

/// CDF of `t = <x, mu>` for vMF on S^3: density proportional to `exp(kappa t) sqrt(1 - t^2)`.
fn vmf_cosine_cdf(kappa: f64) -> impl Fn(f64) -> f64 {
    let n = 20_000;
    let xs: Vec<f64> = (0..=n).map(|i| -1.0 + 2.0 * i as f64 / n as f64).collect();
    let f = |t: f64| (kappa * (t - 1.0)).exp() * (1.0 - t * t).max(0.0).sqrt();
    let mut cum = vec![0.0];
    for w in xs.windows(2) {
        // Simpson on each cell.
        let (a, b) = (w[0], w[1]);
        let s = (b - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b));
        cum.push(cum.last().unwrap() + s);
    }
    let total = *cum.last().unwrap();
    move |t: f64| {
        let pos = ((t + 1.0) / 2.0 * n as f64).clamp(0.0, n as f64);
        let i = (pos.floor() as usize).min(n - 1);
        let frac = pos - i as f64;
        (cum[i] + frac * (cum[i + 1] - cum[i])) / total
    }
}

#[test]
fn vmf_cosine_distribution_passes_one_sample_ks() {
    let mut rng = seeded(13);
    for kappa in [0.5, 5.0, 40.0] {
        let mean = random_unit_quat(&mut rng);
        let cdf = vmf_cosine_cdf(kappa);
        let n = 5000;
        let mut ts: Vec<f64> = (0..n).map(|_| vmf_sample(mean, kappa, &mut rng).dot(mean)).collect();
        ts.sort_by(f64::total_cmp);
        let d = ts
            .iter()
            .enumerate()
            .map(|(i, &t)| {
                let c = cdf(t);
                (c - i as f64 / n as f64).abs().max(((i + 1) as f64 / n as f64 - c).abs())
            })
            .fold(0.0, f64::max);
        // 1% critical value of the one-sample statistic.
        assert!(d < 1.63 / (n as f64).sqrt(), "kappa {kappa}: D = {d}");
    }
}

#[test]
fn vmf_mean_resultant_matches_bessel_ratio() {
    let mut rng = seeded(14);
    for kappa in [2.0, 20.0] {
        let mean = UnitQuat::IDENTITY;
        let n = 20_000;
        let r = (0..n).map(|_| vmf_sample(mean, kappa, &mut rng).to_vector()).sum::<nalgebra::Vector4<f64>>().norm() / n as f64;
        let oracle = vmf_s3_mean_resultant(kappa);
        assert!((r / oracle - 1.0).abs() < 0.02, "kappa {kappa}: {r} vs {oracle}");
    }
    // Series check against the asymptotic form at large argument.
    let x: f64 = 30.0;
    let asym = x.exp() / (2.0 * PI * x).sqrt() * (1.0 - (4.0 - 1.0) / (8.0 * x));
    assert!((bessel_i(1, x) / asym - 1.0).abs() < 1e-3);
}

#[test]
fn half_integer_gamma_matches_recurrence() {
    // Gamma(1 + d/2) from Gamma(1) = 1, Gamma(1/2) = sqrt(pi), Gamma(z + 1) = z Gamma(z).
    for d in 0..12 {
        let mut z = if d % 2 == 0 { 1.0 } else { 0.5 };
        let mut g = if d % 2 == 0 { 1.0 } else { PI.sqrt() };
        while z < 1.0 + d as f64 / 2.0 - 1e-9 {
            g *= z;
            z += 1.0;
        }
        assert!((gamma_one_plus_half(d) / g - 1.0).abs() < 1e-13, "d = {d}");
    }
}

#[test]
fn seven_dimensional_unit_ball() {
    let e = Ellipsoid::new(DVector::zeros(7), DMatrix::identity(7, 7), DVector::from_element(7, 1.0), 1.0).unwrap();
    assert!((e.volume(VolumeFormula::Ellipsoid) - 16.0 * PI.powi(3) / 105.0).abs() < 1e-12);
    assert!((e.volume(VolumeFormula::Ellipsoid) - 4.7248).abs() < 1e-4);
}

#[test]
fn ellipsoid_volume_by_monte_carlo() {
    let mut rng = seeded(15);
    for _ in 0..3 {
        let a = DMatrix::from_fn(4, 4, |_, _| standard_normal(&mut rng));
        let cov = &a * a.transpose() + DMatrix::identity(4, 4) * 0.1;
        let e = Ellipsoid::from_covariance(DVector::zeros(4), &cov, 0.9).unwrap();
        let half = 0.9 * (0..4).map(|i| cov[(i, i)].sqrt()).fold(0.0, f64::max);
        let draws = 200_000;
        let hits = (0..draws).filter(|_| e.contains(&DVector::from_fn(4, |_, _| half * (2.0 * uniform(&mut rng) - 1.0)))).count();
        let mc = hits as f64 / draws as f64 * (2.0 * half).powi(4);
        assert!((mc / e.volume(VolumeFormula::Ellipsoid) - 1.0).abs() < 0.05);
    }
}

#[test]
fn proposal_covariance_matches_explicit_sum_and_factors() {
    let mut rng = seeded(16);
    let params = KernelParams::new(0.2, 1.0, 0.1).unwrap();
    for _ in 0..100 {
        let y = random_pose(&mut rng, 0.2);
        let z: Vec<Pose> = (0..12).map(|_| nearby_pose(&mut rng, &y, 0.8, 0.1)).collect();
        let (gamma, nu, eta) = (1e-3, 0.9, 1.0);
        let m = gradient_matrix(&z, &y, eta, &params).unwrap();
        let cov = proposal_covariance(&m, gamma, nu).unwrap();
        let cols: Vec<AmbientVec> = z.iter().map(|zi| kernel_grad(&y, zi, &params).unwrap() * (2.0 * eta)).collect();
        let mean = cols.iter().sum::<AmbientVec>() / cols.len() as f64;
        let mut expected = Matrix7::identity() * gamma * gamma;
        for c in &cols {
            expected += (c - mean) * (c - mean).transpose() * nu * nu;
        }
        let scale = expected.norm();
        assert!((cov.matrix() - expected).norm() < 1e-12 * scale);
        let l = cov.factor();
        assert!((l * l.transpose() - expected).norm() < 1e-12 * scale);
        assert!(SymmetricEigen::new(expected).eigenvalues.min() > 0.0);
    }
}

#[test]
fn isotropic_proposal_without_kernel_term() {
    let mut rng = seeded(17);
    let mut params = KameleonParams::new(KernelParams::new(0.2, 1.0, 0.1).unwrap());
    params.nu = 0.0;
    params.gamma = 0.01;
    let x = random_pose(&mut rng, 0.2);
    let z: Vec<Pose> = (0..10).map(|_| nearby_pose(&mut rng, &x, 0.5, 0.1)).collect();
    let n = 20_000;
    let mut acc = Matrix7::zeros();
    for _ in 0..n {
        let d = kameleon_propose(&x, &z, &params, &mut rng).unwrap().ambient - x.embed();
        acc += d * d.transpose();
    }
    let eig = SymmetricEigen::new(acc / n as f64).eigenvalues;
    assert!(eig.max() / eig.min() < 1.2, "{eig:?}");
    assert!((eig.mean() / (0.01 * 0.01) - 1.0).abs() < 0.05);
}
