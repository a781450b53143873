//! Grasp quality oracles and demonstrated-grasp generation.
//!
//! A [`TargetDensity`] is any pure, nonnegative quality function over poses.
//! Its unnormalized density is the quality itself; samplers only ever use
//! ratios, so the normalizer is tracked as a diagnostic ([`RunningNormalizer`]).
//!
//! Two analytic families ship with the crate: [`MixtureTarget`] (isolated
//! modes in pose space) and [`CylinderRingTarget`] (a continuum of grasps
//! around a cylinder with a hard zero outside the valid shell).

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::Vector3;
use rand::Rng;

use crate::error::{Error, Result};
use crate::geometry::{d_mag_linearized_sq, Pose, UnitQuat};
use crate::rwmh::vmf_sample;

pub trait TargetDensity: Send + Sync {
    fn name(&self) -> &str;

    /// Nonnegative grasp quality. Must be deterministic.
    fn quality(&self, g: &Pose) -> f64;

    /// Poses with quality strictly above this count as successful grasps.
    fn success_threshold(&self) -> f64;

    /// `ln(quality)`, with zero quality mapped to `-inf`.
    fn log_density(&self, g: &Pose) -> f64 {
        let q = self.quality(g);
        if q > 0.0 {
            q.ln()
        } else {
            f64::NEG_INFINITY
        }
    }

    fn is_success(&self, g: &Pose) -> bool {
        self.quality(g) > self.success_threshold()
    }

    /// Index of the mode basin containing `g`, for targets with discrete modes.
    fn basin_of(&self, _g: &Pose) -> Option<usize> {
        None
    }
}

/// Running sum of observed qualities.
#[derive(Debug, Clone, Copy, Default, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RunningNormalizer {
    pub sum: f64,
    pub count: u64,
}

impl RunningNormalizer {
    pub fn observe(&mut self, quality: f64) {
        self.sum += quality;
        self.count += 1;
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mode {
    pub center: Pose,
    pub weight: f64,
    pub scale: f64,
}

/// `quality(g) = sum_k w_k exp(-d_lin(g, mu_k; c)^2 / (2 s_k^2))`.
#[derive(Debug, Clone)]
pub struct MixtureTarget {
    name: String,
    modes: Vec<Mode>,
    c: f64,
    tau: f64,
}

impl MixtureTarget {
    /// Mixture with the default threshold `0.05 * min_k w_k`.
    pub fn new(name: impl Into<String>, modes: Vec<Mode>, c: f64) -> Result<Self> {
        let min_w = modes.iter().map(|m| m.weight).fold(f64::INFINITY, f64::min);
        Self::with_threshold(name, modes, c, 0.05 * min_w)
    }

    pub fn with_threshold(name: impl Into<String>, modes: Vec<Mode>, c: f64, tau: f64) -> Result<Self> {
        if modes.is_empty() {
            return Err(Error::param("modes", "mixture needs at least one mode"));
        }
        if modes.iter().any(|m| !(m.weight > 0.0) || !(m.scale > 0.0)) {
            return Err(Error::param("modes", "weights and scales must be > 0"));
        }
        if !(c >= 0.0 && c.is_finite()) {
            return Err(Error::param("c", format!("must be >= 0, got {c}")));
        }
        if !(tau >= 0.0) {
            return Err(Error::param("tau", format!("must be >= 0, got {tau}")));
        }
        Ok(MixtureTarget { name: name.into(), modes, c, tau })
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn translation_weight(&self) -> f64 {
        self.c
    }
}

impl TargetDensity for MixtureTarget {
    fn name(&self) -> &str {
        &self.name
    }

    fn quality(&self, g: &Pose) -> f64 {
        self.modes
            .iter()
            .map(|m| m.weight * (-d_mag_linearized_sq(g, &m.center, self.c) / (2.0 * m.scale * m.scale)).exp())
            .sum()
    }

    fn success_threshold(&self) -> f64 {
        self.tau
    }

    fn basin_of(&self, g: &Pose) -> Option<usize> {
        self.modes
            .iter()
            .map(|m| d_mag_linearized_sq(g, &m.center, self.c))
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(i, _)| i)
    }
}

/// Side grasps around an upright cylinder centered at the origin.
///
/// A pose is valid when its position lies in the shell
/// `radius + standoff_min <= rho <= radius + standoff_max`, `|z| <= height / 2`,
/// and its closing axis (the pose's local x-axis) points at the cylinder axis
/// within `angular_tol`. Valid poses score
/// `window(rho) * (cos(misalign) - cos(tol)) / (1 - cos(tol))` where the window
/// is a parabola equal to 1 mid-shell and 0 at its walls.
#[derive(Debug, Clone)]
pub struct CylinderRingTarget {
    name: String,
    pub radius: f64,
    pub height: f64,
    pub standoff_min: f64,
    pub standoff_max: f64,
    pub angular_tol: f64,
    pub tau: f64,
}

impl CylinderRingTarget {
    pub fn new(radius: f64, height: f64, standoff_min: f64, standoff_max: f64, angular_tol: f64) -> Result<Self> {
        if !(radius > 0.0 && height > 0.0) {
            return Err(Error::param("radius", "radius and height must be > 0"));
        }
        if !(standoff_min >= 0.0 && standoff_max > standoff_min) {
            return Err(Error::param("standoff", "need 0 <= standoff_min < standoff_max"));
        }
        if !(angular_tol > 0.0 && angular_tol < PI) {
            return Err(Error::param("angular_tol", "must lie in (0, pi)"));
        }
        Ok(CylinderRingTarget {
            name: "ring".into(),
            radius,
            height,
            standoff_min,
            standoff_max,
            angular_tol,
            tau: 0.0,
        })
    }

    /// Cosine between the closing axis and the inward radial direction.
    pub fn alignment(&self, g: &Pose) -> f64 {
        let rho = g.tra.xy().norm();
        if rho == 0.0 {
            return -1.0;
        }
        let inward = Vector3::new(-g.tra.x / rho, -g.tra.y / rho, 0.0);
        g.rot.rotate(&Vector3::x()).dot(&inward)
    }

    fn window(&self, g: &Pose) -> f64 {
        let rho = g.tra.xy().norm();
        let (lo, hi) = (self.radius + self.standoff_min, self.radius + self.standoff_max);
        if rho < lo || rho > hi || g.tra.z.abs() > 0.5 * self.height {
            return 0.0;
        }
        let mid = 0.5 * (lo + hi);
        let half = 0.5 * (hi - lo);
        1.0 - ((rho - mid) / half).powi(2)
    }
}

impl TargetDensity for CylinderRingTarget {
    fn name(&self) -> &str {
        &self.name
    }

    fn quality(&self, g: &Pose) -> f64 {
        let w = self.window(g);
        if w <= 0.0 {
            return 0.0;
        }
        let cos_tol = self.angular_tol.cos();
        let a = ((self.alignment(g) - cos_tol) / (1.0 - cos_tol)).max(0.0);
        w * a
    }

    fn success_threshold(&self) -> f64 {
        self.tau
    }
}

/// Demonstrated grasps: every pose succeeds under the target that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct DemoGrasps(Vec<Pose>);

impl DemoGrasps {
    pub fn new(poses: Vec<Pose>, target: &dyn TargetDensity) -> Result<Self> {
        if poses.is_empty() {
            return Err(Error::param("demos", "need at least one demonstrated grasp"));
        }
        if let Some(i) = poses.iter().position(|p| !target.is_success(p)) {
            return Err(Error::param("demos", format!("demo {i} is not a successful grasp")));
        }
        Ok(DemoGrasps(poses))
    }

    pub fn poses(&self) -> &[Pose] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Orientation-only hill climbing used to turn seed positions into grasps.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DemoSearch {
    /// Quality evaluations per seed.
    pub budget: usize,
    /// vMF concentration of the first and the last perturbation; intermediate
    /// steps interpolate geometrically.
    pub kappa_start: f64,
    pub kappa_end: f64,
}

impl Default for DemoSearch {
    fn default() -> Self {
        DemoSearch { budget: 500, kappa_start: 2.0, kappa_end: 4000.0 }
    }
}

fn climb_orientation<R: Rng + ?Sized>(target: &dyn TargetDensity, seed: &Pose, search: &DemoSearch, rng: &mut R) -> (Pose, f64) {
    let mut best = *seed;
    let mut best_q = target.quality(&best);
    let steps = search.budget.max(1);
    let ratio = search.kappa_end / search.kappa_start;
    for i in 0..steps {
        let frac = if steps > 1 { i as f64 / (steps - 1) as f64 } else { 1.0 };
        // Anneal only once something nonzero has been found.
        let kappa = if best_q > 0.0 { search.kappa_start * ratio.powf(frac) } else { search.kappa_start };
        let cand = Pose::new(vmf_sample(best.rot, kappa, rng), best.tra);
        let q = target.quality(&cand);
        if q > best_q {
            best = cand;
            best_q = q;
        }
    }
    (best, best_q)
}

/// Hill-climbs the orientation of every seed (position held fixed) and keeps
/// the `m` best results, in seed order.
pub fn generate_demo_grasps<R: Rng + ?Sized>(
    target: &dyn TargetDensity,
    seeds: &[Pose],
    m: usize,
    search: &DemoSearch,
    rng: &mut R,
) -> Result<DemoGrasps> {
    if m > seeds.len() {
        return Err(Error::NotEnoughSeeds { requested: m, available: seeds.len() });
    }
    if m == 0 {
        return Err(Error::param("m", "need at least one demonstrated grasp"));
    }
    let mut results: Vec<(usize, Pose, f64)> = seeds
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let (p, q) = climb_orientation(target, s, search, rng);
            (i, p, q)
        })
        .collect();
    let tau = target.success_threshold();
    let succeeded = results.iter().filter(|r| r.2 > tau).count();
    if succeeded < m {
        return Err(Error::DemoGenerationFailed { requested: m, succeeded });
    }
    results.sort_by(|a, b| b.2.total_cmp(&a.2).then(a.0.cmp(&b.0)));
    results.truncate(m);
    results.sort_by_key(|r| r.0);
    DemoGrasps::new(results.into_iter().map(|r| r.1).collect(), target)
}

/// A target bundled with the seed poses its demonstrations start from.
#[derive(Clone)]
pub struct ShippedTarget {
    pub target: Arc<dyn TargetDensity>,
    pub demo_seeds: Vec<Pose>,
}

pub const SHIPPED_TARGETS: [&str; 3] = ["tri_mode", "ring", "handle"];

fn take_param(params: &mut BTreeMap<String, f64>, key: &str, default: f64) -> f64 {
    params.remove(key).unwrap_or(default)
}

fn reject_leftovers(target: &str, params: BTreeMap<String, f64>) -> Result<()> {
    match params.into_keys().next() {
        Some(k) => Err(Error::Config { key: format!("target.{k}"), reason: format!("not a parameter of target `{target}`") }),
        None => Ok(()),
    }
}

fn axis_angle(axis: [f64; 3], angle: f64) -> UnitQuat {
    UnitQuat::from_axis_angle(Vector3::from(axis), angle)
}

/// Gripper orientation whose closing axis (local x) points along `dir` in the
/// xy-plane, rolled by `roll` about that axis.
fn facing(dir_angle: f64, roll: f64) -> UnitQuat {
    axis_angle([0.0, 0.0, 1.0], dir_angle) * axis_angle([1.0, 0.0, 0.0], roll)
}

/// Three isolated grasp modes at different positions and orientations.
fn tri_mode(mut params: BTreeMap<String, f64>) -> Result<ShippedTarget> {
    let scale = take_param(&mut params, "scale", 0.1);
    let c = take_param(&mut params, "trans_weight", 400.0);
    let offset = take_param(&mut params, "offset", 0.1);
    reject_leftovers("tri_mode", params)?;
    let mut modes = Vec::new();
    let mut seeds = Vec::new();
    let jitter = [Vector3::new(0.002, -0.001, 0.0), Vector3::new(-0.001, 0.0, 0.002)];
    for (k, (angle, roll)) in [(0.0, 0.3), (2.0 * PI / 3.0, 1.4), (4.0 * PI / 3.0, -0.8)].into_iter().enumerate() {
        let pos = Vector3::new(offset * angle.cos(), offset * angle.sin(), 0.02 * k as f64);
        let rot = facing(angle + PI, roll);
        modes.push(Mode { center: Pose::new(rot, pos), weight: 1.0, scale });
        let copies = if k < 2 { 2 } else { 1 };
        for j in 0..copies {
            seeds.push(Pose::from_translation(pos + jitter[j]));
        }
    }
    let target = MixtureTarget::new("tri_mode", modes, c)?;
    Ok(ShippedTarget { target: Arc::new(target), demo_seeds: seeds })
}

/// Elongated ridge of overlapping modes, a handle-like affordance.
fn handle(mut params: BTreeMap<String, f64>) -> Result<ShippedTarget> {
    let scale = take_param(&mut params, "scale", 0.08);
    let c = take_param(&mut params, "trans_weight", 400.0);
    let length = take_param(&mut params, "length", 0.12);
    let count = take_param(&mut params, "modes", 9.0);
    reject_leftovers("handle", params)?;
    if !(count >= 2.0) {
        return Err(Error::Config { key: "target.modes".into(), reason: "need at least 2 modes".into() });
    }
    let count = count as usize;
    let modes: Vec<Mode> = (0..count)
        .map(|i| {
            let s = i as f64 / (count - 1) as f64;
            let pos = Vector3::new(0.08 + length * s, 0.0, 0.03);
            // Closing axis points down onto the handle, rolled slightly along it.
            let rot = axis_angle([0.0, 1.0, 0.0], PI / 2.0) * axis_angle([1.0, 0.0, 0.0], 0.6 * (s - 0.5));
            Mode { center: Pose::new(rot, pos), weight: 1.0, scale }
        })
        .collect();
    let seeds = [0.1, 0.3, 0.5, 0.7, 0.9]
        .iter()
        .map(|s| Pose::from_translation(Vector3::new(0.08 + length * s, 0.001, 0.03)))
        .collect();
    let target = MixtureTarget::new("handle", modes, c)?;
    Ok(ShippedTarget { target: Arc::new(target), demo_seeds: seeds })
}

fn ring(mut params: BTreeMap<String, f64>) -> Result<ShippedTarget> {
    let radius = take_param(&mut params, "radius", 0.04);
    let height = take_param(&mut params, "height", 0.12);
    let smin = take_param(&mut params, "standoff_min", 0.01);
    let smax = take_param(&mut params, "standoff_max", 0.03);
    let tol = take_param(&mut params, "angular_tol", 0.35);
    reject_leftovers("ring", params)?;
    let target = CylinderRingTarget::new(radius, height, smin, smax, tol)?;
    let rho = radius + 0.5 * (smin + smax);
    let seeds = [(0.3, -0.03), (1.6, 0.0), (2.9, 0.03), (4.2, -0.015), (5.4, 0.015)]
        .iter()
        .map(|&(a, z)| Pose::from_translation(Vector3::new(rho * f64::cos(a), rho * f64::sin(a), z)))
        .collect();
    Ok(ShippedTarget { target: Arc::new(target), demo_seeds: seeds })
}

/// Builds one of [`SHIPPED_TARGETS`] with optional parameter overrides.
pub fn shipped_target(name: &str, params: &BTreeMap<String, f64>) -> Result<ShippedTarget> {
    let params = params.clone();
    match name {
        "tri_mode" => tri_mode(params),
        "ring" => ring(params),
        "handle" => handle(params),
        _ => Err(Error::UnknownTarget { name: name.into(), available: SHIPPED_TARGETS.join(", ") }),
    }
}
