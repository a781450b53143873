//! Random-walk Metropolis-Hastings over poses.
//!
//! Position and orientation are proposed independently: a Gaussian step for
//! the position and a von Mises-Fisher draw on `S^3` for the rotation
//! quaternion. Both are symmetric, so the acceptance ratio is the density
//! ratio alone. The same sampler produces the rough sketches that seed the
//! kernel-adaptive chain.

use std::fmt;
use std::str::FromStr;

use nalgebra::{Cholesky, Matrix3, Vector3, Vector4};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Pose, Quat, UnitQuat};
use crate::rng::{standard_normal, uniform, uniform_index};
use crate::targets::{DemoGrasps, TargetDensity};

/// Draws from the von Mises-Fisher distribution on `S^3` with mean direction
/// `mean` and concentration `kappa` (Wood's rejection sampler).
///
/// The mean-direction component `W` is drawn with a Beta(3/2, 3/2) envelope;
/// the Beta variate is built from six standard normals as
/// `(n1^2 + n2^2 + n3^2) / (n1^2 + ... + n6^2)`. The tangent direction is a
/// normalized Gaussian 4-vector with its `mean` component removed.
/// `kappa = 0` is the uniform distribution.
pub fn vmf_sample<R: Rng + ?Sized>(mean: UnitQuat, kappa: f64, rng: &mut R) -> UnitQuat {
    const DIM_M1: f64 = 3.0;
    let kappa = kappa.max(0.0);
    let b = DIM_M1 / (2.0 * kappa + (4.0 * kappa * kappa + DIM_M1 * DIM_M1).sqrt());
    let x0 = (1.0 - b) / (1.0 + b);
    let c = kappa * x0 + DIM_M1 * (1.0 - x0 * x0).ln();
    let w = loop {
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..6 {
            let n = standard_normal(rng);
            if i < 3 {
                num += n * n;
            }
            den += n * n;
        }
        let z = num / den;
        let w = (1.0 - (1.0 + b) * z) / (1.0 - (1.0 - b) * z);
        let u = uniform(rng);
        if kappa * w + DIM_M1 * (1.0 - x0 * w).ln() - c >= (1.0 - u).ln() {
            break w;
        }
    };
    let mu = mean.to_vector();
    let tangent = loop {
        let v = Vector4::new(standard_normal(rng), standard_normal(rng), standard_normal(rng), standard_normal(rng));
        let v = v - mu * mu.dot(&v);
        let n = v.norm();
        if n > 1e-12 {
            break v / n;
        }
    };
    let out = mu * w + tangent * (1.0 - w * w).max(0.0).sqrt();
    UnitQuat::normalize(Quat::from_vector(&out)).unwrap_or(mean)
}

#[derive(Debug, Clone)]
pub struct RwParams {
    pos_cov: Matrix3<f64>,
    pos_chol: Matrix3<f64>,
    kappa: f64,
}

impl RwParams {
    pub fn new(pos_cov: Matrix3<f64>, kappa: f64) -> Result<Self> {
        if (pos_cov - pos_cov.transpose()).norm() > 1e-12 * pos_cov.norm().max(1.0) {
            return Err(Error::param("pos_cov", "must be symmetric"));
        }
        let chol = Cholesky::new(pos_cov).ok_or_else(|| Error::param("pos_cov", "must be positive definite"))?;
        if !(kappa >= 0.0 && kappa.is_finite()) {
            return Err(Error::param("kappa", format!("must be >= 0, got {kappa}")));
        }
        Ok(RwParams { pos_cov, pos_chol: chol.l(), kappa })
    }

    /// Isotropic position covariance `pos_sigma^2 I`.
    pub fn isotropic(pos_sigma: f64, kappa: f64) -> Result<Self> {
        Self::new(Matrix3::identity() * (pos_sigma * pos_sigma), kappa)
    }

    pub fn pos_cov(&self) -> &Matrix3<f64> {
        &self.pos_cov
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }
}

impl Default for RwParams {
    fn default() -> Self {
        RwParams::isotropic(0.05, 50.0).expect("default random-walk parameters are valid")
    }
}

/// Draw order: three position normals, then the vMF rotation.
pub fn rw_propose<R: Rng + ?Sized>(x: &Pose, params: &RwParams, rng: &mut R) -> Pose {
    let n = Vector3::new(standard_normal(rng), standard_normal(rng), standard_normal(rng));
    let tra = x.tra + params.pos_chol * n;
    let rot = vmf_sample(x.rot, params.kappa, rng);
    Pose::new(rot, tra)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RwChain {
    pub current: Pose,
    pub log_density: f64,
}

impl RwChain {
    pub fn start(at: Pose, target: &dyn TargetDensity) -> Self {
        RwChain { current: at, log_density: target.log_density(&at) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RwStep {
    pub proposal: Pose,
    pub proposal_quality: f64,
    pub accepted: bool,
}

/// Metropolis acceptance on log densities, tolerant of `-inf` on either side.
pub(crate) fn mh_accept(log_ratio_num: f64, log_ratio_den: f64, u: f64) -> bool {
    if log_ratio_num == f64::NEG_INFINITY {
        return false;
    }
    if log_ratio_den == f64::NEG_INFINITY {
        return true;
    }
    (1.0 - u).ln() <= log_ratio_num - log_ratio_den
}

/// One random-walk MH step. When `recorder` is given the proposal is
/// appended to it whether or not it is accepted.
pub fn rw_step<R: Rng + ?Sized>(
    chain: &mut RwChain,
    target: &dyn TargetDensity,
    params: &RwParams,
    rng: &mut R,
    recorder: Option<&mut Vec<SketchSample>>,
) -> RwStep {
    let proposal = rw_propose(&chain.current, params, rng);
    let quality = target.quality(&proposal);
    let lp = if quality > 0.0 { quality.ln() } else { f64::NEG_INFINITY };
    let u = uniform(rng);
    let accepted = mh_accept(lp, chain.log_density, u);
    if accepted {
        chain.current = proposal;
        chain.log_density = lp;
    }
    if let Some(rec) = recorder {
        rec.push(SketchSample { pose: proposal, quality, valid: quality > target.success_threshold() });
    }
    RwStep { proposal, proposal_quality: quality, accepted }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SketchSample {
    pub pose: Pose,
    pub quality: f64,
    pub valid: bool,
}

/// How much knowledge of valid grasps the sketch carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Bias {
    Impartial,
    Weak,
    Strong,
}

impl Bias {
    pub const ALL: [Bias; 3] = [Bias::Impartial, Bias::Weak, Bias::Strong];

    pub fn as_str(&self) -> &'static str {
        match self {
            Bias::Impartial => "impartial",
            Bias::Weak => "weak",
            Bias::Strong => "strong",
        }
    }
}

impl fmt::Display for Bias {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Bias {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim() {
            "impartial" => Ok(Bias::Impartial),
            "weak" => Ok(Bias::Weak),
            "strong" => Ok(Bias::Strong),
            other => Err(format!("unknown bias `{other}` (expected impartial, weak or strong)")),
        }
    }
}

/// Labeled random-walk proposals used to initialize the adaptive chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sketch {
    pub bias: Bias,
    pub samples: Vec<SketchSample>,
}

impl Sketch {
    pub fn poses(&self) -> Vec<Pose> {
        self.samples.iter().map(|s| s.pose).collect()
    }

    pub fn valid_count(&self) -> usize {
        self.samples.iter().filter(|s| s.valid).count()
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Proposals per random-walk segment before the walk restarts at a demo.
pub const SKETCH_SEGMENT: usize = 50;

struct SketchWalk<'a> {
    target: &'a dyn TargetDensity,
    demos: &'a [Pose],
    params: &'a RwParams,
    random_restarts: bool,
    chain: RwChain,
    segment_left: usize,
    next_demo: usize,
    draws: usize,
}

impl<'a> SketchWalk<'a> {
    fn draw<R: Rng + ?Sized>(&mut self, rng: &mut R) -> SketchSample {
        if self.segment_left == 0 {
            let k = if self.random_restarts {
                uniform_index(rng, self.demos.len())
            } else {
                let k = self.next_demo;
                self.next_demo = (k + 1) % self.demos.len();
                k
            };
            self.chain = RwChain::start(self.demos[k], self.target);
            self.segment_left = SKETCH_SEGMENT;
        }
        self.segment_left -= 1;
        self.draws += 1;
        let mut rec = Vec::with_capacity(1);
        rw_step(&mut self.chain, self.target, self.params, rng, Some(&mut rec));
        rec[0]
    }
}

/// Builds a sketch of `count` random-walk proposals at the requested bias.
///
/// The walk starts at a demo and restarts every [`SKETCH_SEGMENT`] proposals,
/// cycling through the demos in order (impartial, weak) or picking one
/// uniformly at random (strong). Then:
///
/// * impartial keeps only invalid proposals until `count` are collected;
/// * weak keeps `count - m` invalid proposals and appends the `m` demos;
/// * strong walks until at least `ceil(count / 2)` valid proposals exist and
///   fills the rest with the earliest invalid ones, in draw order.
pub fn build_sketch<R: Rng + ?Sized>(
    target: &dyn TargetDensity,
    demos: &DemoGrasps,
    bias: Bias,
    count: usize,
    params: &RwParams,
    rng: &mut R,
) -> Result<Sketch> {
    let m = demos.len();
    if matches!(bias, Bias::Weak | Bias::Strong) && count < m {
        return Err(Error::param("count", format!("sketch of {count} cannot hold {m} demonstrated grasps")));
    }
    let mut walk = SketchWalk {
        target,
        demos: demos.poses(),
        params,
        random_restarts: bias == Bias::Strong,
        chain: RwChain::start(demos.poses()[0], target),
        segment_left: 0,
        next_demo: 0,
        draws: 0,
    };
    let samples = match bias {
        Bias::Impartial | Bias::Weak => {
            let need = if bias == Bias::Weak { count - m } else { count };
            let cap = 100 * count.max(1);
            let mut out = Vec::with_capacity(count);
            while out.len() < need {
                if walk.draws >= cap {
                    return Err(Error::SketchExhausted {
                        draws: walk.draws,
                        reason: format!("found {} of {need} invalid proposals", out.len()),
                    });
                }
                let s = walk.draw(rng);
                if !s.valid {
                    out.push(s);
                }
            }
            if bias == Bias::Weak {
                out.extend(demos.poses().iter().map(|p| {
                    let q = target.quality(p);
                    SketchSample { pose: *p, quality: q, valid: true }
                }));
            }
            out
        }
        Bias::Strong => {
            let need_valid = count.div_ceil(2);
            let cap = 2000 * count.max(1);
            let mut all = Vec::new();
            let mut valid = 0;
            while valid < need_valid || all.len() < count {
                if walk.draws >= cap {
                    return Err(Error::SketchExhausted {
                        draws: walk.draws,
                        reason: format!("found {valid} of {need_valid} valid proposals"),
                    });
                }
                let s = walk.draw(rng);
                valid += s.valid as usize;
                all.push(s);
            }
            let mut invalid_budget = count - valid.min(count);
            let mut valid_budget = count.min(valid);
            all.into_iter()
                .filter(|s| {
                    let budget = if s.valid { &mut valid_budget } else { &mut invalid_budget };
                    if *budget > 0 {
                        *budget -= 1;
                        true
                    } else {
                        false
                    }
                })
                .collect()
        }
    };
    let sketch = Sketch { bias, samples };
    debug_assert_eq!(sketch.len(), count);
    match bias {
        Bias::Impartial => debug_assert_eq!(sketch.valid_count(), 0),
        Bias::Weak => debug_assert_eq!(sketch.valid_count(), m),
        Bias::Strong => debug_assert!(sketch.valid_count() >= count.div_ceil(2)),
    }
    Ok(sketch)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use crate::targets::{generate_demo_grasps, shipped_target, DemoSearch, Mode, MixtureTarget};
    use std::collections::BTreeMap;

    #[test]
    fn vmf_draws_are_unit() {
        let mut rng = seeded(41);
        let mean = UnitQuat::new(0.2, 0.5, -0.1, 0.8).unwrap();
        for kappa in [0.0, 1.0, 50.0, 1e6] {
            for _ in 0..1000 {
                let q = vmf_sample(mean, kappa, &mut rng);
                assert!((q.quat().norm() - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn vmf_uniform_has_no_preferred_direction() {
        let mut rng = seeded(42);
        let mean = UnitQuat::IDENTITY;
        let n = 10_000;
        let sum = (0..n).fold(Vector4::zeros(), |acc, _| acc + vmf_sample(mean, 0.0, &mut rng).to_vector());
        assert!((sum / n as f64).norm() < 0.05);
    }

    #[test]
    fn degenerate_proposal_stays_put() {
        let params = RwParams::new(Matrix3::identity() * 1e-12, 1e6).unwrap();
        let x = Pose::new(UnitQuat::new(0.7, 0.1, 0.6, -0.2).unwrap(), Vector3::new(0.1, 0.2, 0.3));
        let mut rng = seeded(43);
        for _ in 0..100 {
            let p = rw_propose(&x, &params, &mut rng);
            assert!((p.tra - x.tra).norm() < 1e-3);
            assert!((p.rot.to_vector() - x.rot.to_vector()).norm() < 1e-2);
        }
    }

    #[test]
    fn position_mean_within_clt_bound() {
        let params = RwParams::default();
        let x = Pose::from_translation(Vector3::new(0.3, -0.2, 0.1));
        let mut rng = seeded(44);
        let n = 10_000;
        let mean = (0..n).fold(Vector3::zeros(), |acc, _| acc + rw_propose(&x, &params, &mut rng).tra) / n as f64;
        let bound = 3.0 * 0.05 / (n as f64).sqrt();
        for i in 0..3 {
            assert!((mean[i] - x.tra[i]).abs() < bound);
        }
    }

    #[test]
    fn params_validation() {
        assert!(RwParams::new(Matrix3::zeros(), 1.0).is_err());
        assert!(RwParams::isotropic(0.1, -1.0).is_err());
        let mut asym = Matrix3::identity();
        asym[(0, 1)] = 0.5;
        assert!(RwParams::new(asym, 1.0).is_err());
    }

    fn one_mode() -> MixtureTarget {
        MixtureTarget::new("one", vec![Mode { center: Pose::identity(), weight: 1.0, scale: 0.2 }], 25.0).unwrap()
    }

    #[test]
    fn acceptance_edge_cases() {
        assert!(mh_accept(0.0, -1.0, 0.999_999));
        assert!(!mh_accept(f64::NEG_INFINITY, -1.0, 0.0));
        assert!(mh_accept(-3.0, f64::NEG_INFINITY, 0.5));
        assert!(!mh_accept(f64::NEG_INFINITY, f64::NEG_INFINITY, 0.5));
    }

    #[test]
    fn records_one_sample_per_step_and_acceptance_in_range() {
        let t = one_mode();
        let params = RwParams::isotropic(0.04, 100.0).unwrap();
        let mut chain = RwChain::start(Pose::identity(), &t);
        let mut rng = seeded(45);
        let mut rec = Vec::new();
        let mut acc = 0;
        let steps = 10_000;
        for i in 0..steps {
            acc += rw_step(&mut chain, &t, &params, &mut rng, Some(&mut rec)).accepted as usize;
            assert_eq!(rec.len(), i + 1);
        }
        let rate = acc as f64 / steps as f64;
        assert!((0.1..=0.5).contains(&rate), "acceptance {rate}");
    }

    fn demos_for(name: &str, rng: &mut crate::rng::SimRng) -> (crate::targets::ShippedTarget, DemoGrasps) {
        let st = shipped_target(name, &BTreeMap::new()).unwrap();
        let d = generate_demo_grasps(st.target.as_ref(), &st.demo_seeds, 5, &DemoSearch::default(), rng).unwrap();
        (st, d)
    }

    #[test]
    fn sketch_bias_invariants() {
        let mut rng = seeded(46);
        let (st, demos) = demos_for("tri_mode", &mut rng);
        let t = st.target.as_ref();
        let params = RwParams::default();
        let imp = build_sketch(t, &demos, Bias::Impartial, 1000, &params, &mut rng).unwrap();
        assert_eq!(imp.len(), 1000);
        assert_eq!(imp.valid_count(), 0);
        let weak = build_sketch(t, &demos, Bias::Weak, 1000, &params, &mut rng).unwrap();
        assert_eq!(weak.len(), 1000);
        assert_eq!(weak.valid_count(), 5);
        let valid: Vec<Pose> = weak.samples.iter().filter(|s| s.valid).map(|s| s.pose).collect();
        assert_eq!(valid, demos.poses());
        let strong = build_sketch(t, &demos, Bias::Strong, 1000, &params, &mut rng).unwrap();
        assert_eq!(strong.len(), 1000);
        assert!(strong.valid_count() >= 500);
        for s in &strong.samples {
            assert_eq!(s.valid, t.is_success(&s.pose));
        }
    }

    #[test]
    fn weak_sketch_needs_room_for_demos() {
        let mut rng = seeded(47);
        let (st, demos) = demos_for("tri_mode", &mut rng);
        let err = build_sketch(st.target.as_ref(), &demos, Bias::Weak, 3, &RwParams::default(), &mut rng);
        assert!(err.is_err());
    }

    #[test]
    fn impartial_sketch_fails_on_everywhere_valid_target() {
        struct Flat;
        impl TargetDensity for Flat {
            fn name(&self) -> &str {
                "flat"
            }
            fn quality(&self, _g: &Pose) -> f64 {
                1.0
            }
            fn success_threshold(&self) -> f64 {
                0.5
            }
        }
        let demos = DemoGrasps::new(vec![Pose::identity()], &Flat).unwrap();
        let mut rng = seeded(48);
        let err = build_sketch(&Flat, &demos, Bias::Impartial, 10, &RwParams::default(), &mut rng);
        assert!(matches!(err, Err(Error::SketchExhausted { .. })));
    }

    #[test]
    fn bias_parses() {
        for b in Bias::ALL {
            assert_eq!(b.as_str().parse::<Bias>().unwrap(), b);
        }
        assert!("medium".parse::<Bias>().is_err());
    }
}
