//! Acceptance suite: one line per criterion, nonzero exit if any fails.

mod common;

use std::f64::consts::PI;
use std::time::Instant;

use affordance::gdmc::{dart_ambient, Ellipsoid, JumpRegion, VolumeFormula};
use affordance::geometry::{d_arc, d_mag, d_mag_linearized, relative_transform, AmbientVec, Pose, UnitQuat};
use affordance::harness::cli::run_cli;
use affordance::harness::{run_baseline, run_single, ExperimentConfig};
use affordance::kameleon::{kameleon_step, ChainState, KameleonParams};
use affordance::kernel::{kernel_eval, kernel_grad, KernelParams};
use affordance::metrics::{aggregate, convex_hull_area};
use affordance::rng::{seeded, standard_normal, uniform};
use affordance::rwmh::{build_sketch, rw_step, vmf_sample, Bias, RwChain, RwParams};
use affordance::targets::{DemoGrasps, MixtureTarget, Mode, SHIPPED_TARGETS};
use common::{ks_two_sample, median, nearby_pose, random_pose, random_unit_quat, vmf_s3_mean_resultant};
use nalgebra::{DMatrix, DVector, Vector3};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn kernel_gradient() -> Outcome {
    let mut rng = seeded(101);
    let params = KernelParams::new(0.2, 1.0, 0.1).unwrap();
    let h = 1e-6;
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let y = random_pose(&mut rng, 0.5);
        let z = nearby_pose(&mut rng, &y, 1.0, 0.3);
        let g = kernel_grad(&y, &z, &params).unwrap();
        let base = y.embed();
        let fd = AmbientVec::from_fn(|i, _| {
            let mut up = base;
            let mut down = base;
            up[i] += h;
            down[i] -= h;
            let kp = kernel_eval(&Pose::project(&up).unwrap(), &z, &params);
            let km = kernel_eval(&Pose::project(&down).unwrap(), &z, &params);
            (kp - km) / (2.0 * h)
        });
        worst = worst.max((fd - g).norm() / g.norm());
    }
    outcome(worst < 1e-5, format!("max relative error {worst:.2e} over 100 pairs (< 1e-5)"))
}

fn pose_algebra() -> Outcome {
    let mut rng = seeded(102);
    let mut worst = 0.0f64;
    let mut bump = |x: f64| worst = worst.max(x.abs());
    for _ in 0..1000 {
        let (a, b, c) = (random_pose(&mut rng, 1.0), random_pose(&mut rng, 1.0), random_pose(&mut rng, 1.0));
        let cw = 0.3 * uniform(&mut rng);
        let l = a.compose(&b).compose(&c);
        let r = a.compose(&b.compose(&c));
        bump(l.rot.dot(r.rot).abs() - 1.0);
        bump((l.tra - r.tra).norm());
        let id = a.compose(&Pose::identity());
        bump(id.rot.dot(a.rot).abs() - 1.0);
        bump((id.tra - a.tra).norm());
        let inv = a.compose(&a.conjugate());
        bump(inv.rot.w().abs() - 1.0);
        bump(inv.tra.norm());
        bump(d_arc(a.rot, b.rot) - d_arc(a.rot.neg(), b.rot));
        bump(d_mag(&a, &b, cw).unwrap() - d_mag(&a.sign_flipped(), &b, cw).unwrap());
        let (d1, d2) = (relative_transform(&a, &b), relative_transform(&a.sign_flipped(), &b));
        bump(d1.rot.dot(d2.rot) - 1.0);
        bump((d1.tra - d2.tra).norm());
        bump(d_mag(&a, &a, cw).unwrap());
        bump(d_mag_linearized(&a, &a, cw).unwrap());
        bump(d_mag(&a, &b, cw).unwrap() - d_mag(&b, &a, cw).unwrap());
        bump(d_mag_linearized(&a, &b, cw).unwrap() - d_mag_linearized(&b, &a, cw).unwrap());
        bump(d_mag(&a, &b, 0.0).unwrap() - d_arc(a.rot, b.rot));
    }
    outcome(worst < 1e-9, format!("largest violation {worst:.2e} over 1000 triples (< 1e-9)"))
}

fn gdmc_geometry() -> Outcome {
    let mut rng = seeded(103);
    let mut involution = 0.0f64;
    for _ in 0..200 {
        let mk = |rng: &mut affordance::rng::SimRng| {
            let a = DMatrix::from_fn(7, 7, |_, _| standard_normal(rng) * 0.05);
            JumpRegion::new(random_pose(rng, 0.3), &(&a * a.transpose()), 0.7, VolumeFormula::Ellipsoid).unwrap()
        };
        let (ra, rb) = (mk(&mut rng), mk(&mut rng));
        let x = ra.center().embed() + AmbientVec::from_fn(|_, _| 0.01 * standard_normal(&mut rng));
        let back = dart_ambient(&dart_ambient(&x, &ra, &rb), &rb, &ra);
        involution = involution.max((back - x).norm());
    }
    let ball = Ellipsoid::new(DVector::zeros(3), DMatrix::identity(3, 3), DVector::from_element(3, 1.0), 1.0).unwrap();
    let ball_err = (ball.volume(VolumeFormula::Ellipsoid) - 4.0 * PI / 3.0).abs();
    let q = DMatrix::from_fn(3, 3, |_, _| standard_normal(&mut rng)).qr().q();
    let e = Ellipsoid::new(DVector::from_vec(vec![0.3, -0.2, 1.0]), q, DVector::from_vec(vec![0.25, 1.0, 2.25]), 0.7).unwrap();
    let half = 0.7 * 1.5;
    let draws = 200_000;
    let hits = (0..draws)
        .filter(|_| {
            let p = DVector::from_fn(3, |i, _| e.center()[i] + half * (2.0 * uniform(&mut rng) - 1.0));
            e.contains(&p)
        })
        .count();
    let mc = hits as f64 / draws as f64 * (2.0 * half).powi(3);
    let rel = (mc / e.volume(VolumeFormula::Ellipsoid) - 1.0).abs();
    outcome(
        involution < 1e-9 && ball_err < 1e-12 && rel < 0.05,
        format!("involution {involution:.1e} (< 1e-9), unit ball {ball_err:.1e} (< 1e-12), Monte-Carlo volume off by {:.2}% (< 5%)", rel * 100.0),
    )
}

fn sampler_calibration() -> Outcome {
    let center = Pose::new(UnitQuat::new(0.9, 0.2, -0.1, 0.3).unwrap(), Vector3::new(0.1, 0.0, 0.05));
    let tc = 400.0;
    let target = MixtureTarget::new("single", vec![Mode { center, weight: 1.0, scale: 0.1 }], tc).unwrap();
    let dist = |p: &Pose| d_mag_linearized(p, &center, tc).unwrap();
    let mut rng = seeded(1000);
    let fine = RwParams::isotropic(0.0025, 400.0).unwrap();
    let mut walker = RwChain::start(center, &target);
    let mut reference = Vec::new();
    for i in 0..100_000 {
        rw_step(&mut walker, &target, &fine, &mut rng, None);
        if i % 20 == 0 {
            reference.push(dist(&walker.current));
        }
    }
    let thin = 10;
    let mut passes = 0;
    let mut ps = Vec::new();
    for seed in 1..=3 {
        let mut rng = seeded(seed);
        let demos = DemoGrasps::new(vec![center], &target).unwrap();
        let sketch = build_sketch(&target, &demos, Bias::Weak, 1000, &RwParams::default(), &mut rng).unwrap();
        let kp = KameleonParams::new(KernelParams::new(0.2, 1.0, 0.2).unwrap());
        let mut state = ChainState::new(center, sketch.poses(), kp.burn_in, &target);
        for _ in 0..kp.burn_in {
            kameleon_step(&mut state, &target, &kp, &mut rng).unwrap();
        }
        let mut xs = Vec::new();
        for i in 0..5000 * thin {
            kameleon_step(&mut state, &target, &kp, &mut rng).unwrap();
            if i % thin == 0 {
                xs.push(dist(&state.current));
            }
        }
        let (_, p) = ks_two_sample(&xs, &reference);
        passes += (p > 0.01) as usize;
        ps.push(format!("{p:.3}"));
    }
    outcome(passes >= 2, format!("KS p-values [{}], {passes}/3 above 0.01 (majority needed)", ps.join(", ")))
}

fn acceptance_rates() -> Outcome {
    let mut cfg = ExperimentConfig::default();
    let mut parts = Vec::new();
    let mut pass = true;
    for name in SHIPPED_TARGETS {
        cfg.target.name = name.into();
        let mut rates = Vec::new();
        for seed in 1..=3 {
            for bias in Bias::ALL {
                for c in [0.0, 0.05, 0.1, 0.15, 0.2] {
                    rates.push(run_single(&cfg, bias, c, seed).unwrap().metrics.acceptance_rate);
                }
            }
        }
        let mean = rates.iter().sum::<f64>() / rates.len() as f64;
        pass &= (0.15..=0.35).contains(&mean);
        parts.push(format!("{name} {mean:.3}"));
    }
    outcome(pass, format!("mean acceptance {} (each in [0.15, 0.35])", parts.join(", ")))
}

fn mode_coverage() -> Outcome {
    let cfg = ExperimentConfig::default();
    let shipped = cfg.shipped_target().unwrap();
    let target = shipped.target.as_ref();
    let mut pure = cfg.clone();
    pure.sampler.p_check = 1.0;
    let (mut unique, mut rw_unique) = (Vec::new(), Vec::new());
    let (mut two, mut pure_two) = (0, 0);
    for seed in 1..=20 {
        let r = run_single(&cfg, Bias::Weak, 0.1, seed).unwrap();
        unique.push(r.metrics.unique_success_count as f64);
        two += (r.basins_visited(target).len() >= 2) as usize;
        pure_two += (run_single(&pure, Bias::Weak, 0.1, seed).unwrap().basins_visited(target).len() >= 2) as usize;
        rw_unique.push(run_baseline(&cfg, seed).unwrap().metrics.unique_success_count as f64);
    }
    let (mu, mrw) = (median(&unique), median(&rw_unique));
    outcome(
        mu >= 50.0 && two >= 16 && mrw <= 5.0 && pure_two <= 4,
        format!(
            "combined median unique {mu} (>= 50), >= 2 basins in {two}/20 (>= 16); random walk median unique {mrw} (<= 5); pure Kameleon >= 2 basins in {pure_two}/20 (<= 4)"
        ),
    )
}

fn bias_ordering() -> Outcome {
    let mut cfg = ExperimentConfig::parse("sweep.fine_step = 0.02\nsweep.coarse_step = 0.02").unwrap();
    let mut ordered = 0;
    let mut parts = Vec::new();
    for name in SHIPPED_TARGETS {
        cfg.target.name = name.into();
        let mut runs = Vec::new();
        for seed in 1..=5 {
            for bias in Bias::ALL {
                for c in cfg.sweep.values() {
                    runs.push(run_single(&cfg, bias, c, seed).unwrap().metrics);
                }
            }
        }
        let rows = aggregate(&runs);
        let (imp, weak, strong) = (rows[0].mean_success, rows[1].mean_success, rows[2].mean_success);
        let ok = imp <= weak && weak <= 1.1 * strong;
        ordered += ok as usize;
        parts.push(format!("{name} {imp:.1}/{weak:.1}/{strong:.1}{}", if ok { "" } else { " (out of order)" }));
    }
    outcome(ordered >= 2, format!("impartial/weak/strong mean successes: {}; ordered on {ordered}/3 (>= 2)", parts.join(", ")))
}

fn vmf_resultant() -> Outcome {
    let mut rng = seeded(108);
    let mut worst = 0.0f64;
    let mut parts = Vec::new();
    for kappa in [1.0, 10.0, 50.0] {
        let mean = random_unit_quat(&mut rng);
        let n = 10_000;
        let mut sum = nalgebra::Vector4::zeros();
        for _ in 0..n {
            sum += vmf_sample(mean, kappa, &mut rng).to_vector();
        }
        let r = sum.norm() / n as f64;
        let oracle = vmf_s3_mean_resultant(kappa);
        let rel = (r / oracle - 1.0).abs();
        worst = worst.max(rel);
        parts.push(format!("kappa {kappa}: {r:.4} vs {oracle:.4}"));
    }
    outcome(worst < 0.02, format!("{}; worst relative error {:.2}% (< 2%)", parts.join(", "), worst * 100.0))
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("default.cfg");
    std::fs::write(&cfg_path, ExperimentConfig::default().to_text()).unwrap();
    let mut csvs = Vec::new();
    for k in 0..2 {
        let out = dir.path().join(format!("out{k}"));
        let args = ["affordance", "run", "--config", cfg_path.to_str().unwrap(), "--seed", "7", "--out", out.to_str().unwrap()];
        let code = run_cli(args, &mut Vec::new(), &mut Vec::new());
        assert_eq!(code, 0);
        csvs.push(std::fs::read(out.join("chains").join("run_weak_c0.050000_s7.csv")).unwrap());
    }
    let lines = String::from_utf8_lossy(&csvs[0]).lines().count();
    outcome(csvs[0] == csvs[1] && lines == 1101, format!("two CLI invocations with seed 7 wrote {} chain CSVs ({lines} lines)", if csvs[0] == csvs[1] { "identical" } else { "different" }))
}

fn hull_metric() -> Outcome {
    let cube: Vec<Vector3<f64>> = (0..8).map(|i| Vector3::new((i & 1) as f64, ((i >> 1) & 1) as f64, ((i >> 2) & 1) as f64)).collect();
    let cube_err = (convex_hull_area(&cube).area - 6.0).abs();
    let s = 1.0 / 8f64.sqrt();
    let tet = [Vector3::new(s, s, s), Vector3::new(s, -s, -s), Vector3::new(-s, s, -s), Vector3::new(-s, -s, s)];
    let tet_err = (convex_hull_area(&tet).area - 3f64.sqrt()).abs();
    let mut rng = seeded(110);
    let mut motion = 0.0f64;
    for _ in 0..20 {
        let pts: Vec<Vector3<f64>> = (0..200).map(|_| Vector3::new(standard_normal(&mut rng), uniform(&mut rng), 0.3 * standard_normal(&mut rng))).collect();
        let q = random_unit_quat(&mut rng);
        let t = Vector3::new(standard_normal(&mut rng), standard_normal(&mut rng), standard_normal(&mut rng));
        let moved: Vec<Vector3<f64>> = pts.iter().map(|p| q.rotate(p) + t).collect();
        motion = motion.max((convex_hull_area(&moved).area - convex_hull_area(&pts).area).abs());
    }
    outcome(
        cube_err < 1e-9 && tet_err < 1e-9 && motion < 1e-9,
        format!("cube error {cube_err:.1e}, tetrahedron error {tet_err:.1e}, rigid motion change {motion:.1e} (all < 1e-9)"),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome, f64); 10] = [
        ("kernel gradient vs central differences", kernel_gradient, 1.0),
        ("dual-quaternion algebra", pose_algebra, 1.0),
        ("darting geometry", gdmc_geometry, 10.0),
        ("sampler calibration (KS)", sampler_calibration, 120.0),
        ("acceptance rate on shipped targets", acceptance_rates, 60.0),
        ("mode coverage vs random walk", mode_coverage, 600.0),
        ("bias ordering over the c sweep", bias_ordering, 1800.0),
        ("von Mises-Fisher mean resultant", vmf_resultant, 5.0),
        ("bit-identical reruns", determinism, 120.0),
        ("convex hull area", hull_metric, 1.0),
    ];
    let mut failed = 0;
    for (i, (name, f, budget)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = f();
        let secs = start.elapsed().as_secs_f64();
        let pass = o.pass && secs <= *budget;
        failed += !pass as usize;
        let time = if secs <= *budget { format!("{secs:.2}s") } else { format!("{secs:.2}s, over the {budget}s budget") };
        println!("criterion {:>2} [{}] {name}: {} ({time})", i + 1, if pass { "PASS" } else { "FAIL" }, o.detail);
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
