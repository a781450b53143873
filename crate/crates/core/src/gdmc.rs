//! Generalized darting Monte Carlo on top of the Kameleon chain.
//!
//! Every demonstrated grasp gets an elliptical jump region shaped by the
//! covariance of the chain history near it. A darting move maps the current
//! state's standardized coordinates `u` in one region to `-u` in another,
//! which makes the map its own inverse.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{d_mag_linearized_sq, AmbientVec, Pose};
use crate::kameleon::{kameleon_step, ChainState, KameleonParams, KameleonStep};
use crate::rng::{uniform, uniform_index};
use crate::rwmh::mh_accept;
use crate::targets::{DemoGrasps, TargetDensity};

pub const EIGEN_FLOOR: f64 = 1e-10;
/// Regions with fewer assigned history samples borrow the global covariance.
pub const MIN_REGION_SAMPLES: usize = 8;
pub const FALLBACK_VARIANCE: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum VolumeFormula {
    /// Ellipsoid with semi-axes `omega * sqrt(lambda_i)`.
    #[default]
    Ellipsoid,
    /// `pi^(d/2) omega^d prod(lambda_i) / Gamma(1 + d/2)`, eigenvalues not square-rooted.
    Literal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum AcceptanceMode {
    /// Metropolis-Hastings: accept with probability `min(1, pi(y) n(x) / (pi(x) n(y)))`.
    #[default]
    Standard,
    /// Accept iff `u2 > min(1, n(x) pi(x) / (n(y) pi(y)))`.
    PaperLiteral,
}

impl std::str::FromStr for VolumeFormula {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "ellipsoid" => Ok(VolumeFormula::Ellipsoid),
            "literal" => Ok(VolumeFormula::Literal),
            _ => Err(format!("expected `ellipsoid` or `literal`, got `{s}`")),
        }
    }
}

impl std::str::FromStr for AcceptanceMode {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "standard" => Ok(AcceptanceMode::Standard),
            "paper_literal" => Ok(AcceptanceMode::PaperLiteral),
            _ => Err(format!("expected `standard` or `paper_literal`, got `{s}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DartingParams {
    pub p_check: f64,
    pub omega: f64,
    pub acceptance_mode: AcceptanceMode,
    pub volume_formula: VolumeFormula,
    /// Translation weight of the distance used to assign history to regions.
    pub assign_c: f64,
}

impl Default for DartingParams {
    fn default() -> Self {
        DartingParams {
            p_check: 0.5,
            omega: 0.7,
            acceptance_mode: AcceptanceMode::Standard,
            volume_formula: VolumeFormula::Ellipsoid,
            assign_c: 1.0,
        }
    }
}

impl DartingParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.p_check) {
            return Err(Error::param("p_check", format!("must lie in [0, 1], got {}", self.p_check)));
        }
        if !(self.omega > 0.0 && self.omega.is_finite()) {
            return Err(Error::param("omega", format!("must be > 0, got {}", self.omega)));
        }
        if !(self.assign_c >= 0.0 && self.assign_c.is_finite()) {
            return Err(Error::param("assign_c", format!("must be >= 0, got {}", self.assign_c)));
        }
        Ok(())
    }
}

/// `Gamma(1 + d/2)` evaluated exactly by the half-integer recursion.
pub fn gamma_one_plus_half(d: usize) -> f64 {
    // Gamma(x + 1) = x Gamma(x), starting from Gamma(1) = 1 or Gamma(1/2) = sqrt(pi).
    let mut x = if d % 2 == 0 { 1.0 } else { 0.5 };
    let mut g = if d % 2 == 0 { 1.0 } else { PI.sqrt() };
    let target = 1.0 + d as f64 / 2.0;
    while x < target - 0.25 {
        g *= x;
        x += 1.0;
    }
    g
}

/// Ellipsoid `{ x : |S^{-1/2} U^T (x - center)| <= omega }` in any dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct Ellipsoid {
    center: DVector<f64>,
    basis: DMatrix<f64>,
    eigenvalues: DVector<f64>,
    omega: f64,
}

impl Ellipsoid {
    /// Eigenvalues below [`EIGEN_FLOOR`] are raised to it.
    pub fn new(center: DVector<f64>, basis: DMatrix<f64>, eigenvalues: DVector<f64>, omega: f64) -> Result<Self> {
        let d = center.len();
        if basis.nrows() != d || basis.ncols() != d || eigenvalues.len() != d {
            return Err(Error::param("ellipsoid", format!("dimension mismatch, center has {d} entries")));
        }
        if !(omega > 0.0 && omega.is_finite()) {
            return Err(Error::param("omega", format!("must be > 0, got {omega}")));
        }
        if eigenvalues.iter().any(|l| !l.is_finite()) {
            return Err(Error::param("eigenvalues", "must be finite"));
        }
        let eigenvalues = eigenvalues.map(|l| l.max(EIGEN_FLOOR));
        Ok(Ellipsoid { center, basis, eigenvalues, omega })
    }

    /// Principal axes of a symmetric covariance.
    pub fn from_covariance(center: DVector<f64>, cov: &DMatrix<f64>, omega: f64) -> Result<Self> {
        let sym = (cov + cov.transpose()) * 0.5;
        let eig = SymmetricEigen::new(sym);
        Ellipsoid::new(center, eig.eigenvectors, eig.eigenvalues, omega)
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn center(&self) -> &DVector<f64> {
        &self.center
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigenvalues
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn volume(&self, formula: VolumeFormula) -> f64 {
        let d = self.dim();
        let prod: f64 = match formula {
            VolumeFormula::Ellipsoid => self.eigenvalues.iter().map(|l| l.sqrt()).product(),
            VolumeFormula::Literal => self.eigenvalues.iter().product(),
        };
        PI.powf(d as f64 / 2.0) * self.omega.powi(d as i32) * prod / gamma_one_plus_half(d)
    }

    /// `S^{-1/2} U^T (x - center)`.
    pub fn standardize(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut u = self.basis.tr_mul(&(x - &self.center));
        for (ui, l) in u.iter_mut().zip(self.eigenvalues.iter()) {
            *ui /= l.sqrt();
        }
        u
    }

    pub fn contains(&self, x: &DVector<f64>) -> bool {
        self.standardize(x).norm() <= self.omega
    }

    /// `to.center - U_to S_to^{1/2} S_from^{-1/2} U_from^T (x - from.center)`.
    pub fn dart(x: &DVector<f64>, from: &Ellipsoid, to: &Ellipsoid) -> DVector<f64> {
        let mut u = from.standardize(x);
        for (ui, l) in u.iter_mut().zip(to.eigenvalues.iter()) {
            *ui *= l.sqrt();
        }
        &to.center - &to.basis * u
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct JumpRegion {
    center: Pose,
    shape: Ellipsoid,
    volume: f64,
}

impl JumpRegion {
    pub fn new(center: Pose, cov: &DMatrix<f64>, omega: f64, formula: VolumeFormula) -> Result<Self> {
        if cov.nrows() != 7 || cov.ncols() != 7 {
            return Err(Error::param("covariance", "jump region covariance must be 7x7"));
        }
        let shape = Ellipsoid::from_covariance(DVector::from_column_slice(center.embed().as_slice()), cov, omega)?;
        let volume = shape.volume(formula);
        Ok(JumpRegion { center, shape, volume })
    }

    pub fn center(&self) -> &Pose {
        &self.center
    }

    pub fn shape(&self) -> &Ellipsoid {
        &self.shape
    }

    pub fn volume(&self) -> f64 {
        self.volume
    }

    fn aligned(&self, x: &Pose) -> DVector<f64> {
        DVector::from_column_slice(x.embed_aligned(self.center.rot).as_slice())
    }

    pub fn standardized_radius(&self, x: &Pose) -> f64 {
        self.shape.standardize(&self.aligned(x)).norm()
    }
}

pub fn region_volume(region: &JumpRegion, formula: VolumeFormula) -> f64 {
    region.shape.volume(formula)
}

/// Membership after aligning `x`'s quaternion sign with the region center.
pub fn contains(region: &JumpRegion, x: &Pose) -> bool {
    region.shape.contains(&region.aligned(x))
}

/// Number of regions containing `x`.
pub fn containing_count(regions: &[JumpRegion], x: &Pose) -> usize {
    regions.iter().filter(|r| contains(r, x)).count()
}

fn sample_covariance(points: &[AmbientVec]) -> DMatrix<f64> {
    let n = points.len() as f64;
    let mean = points.iter().fold(AmbientVec::zeros(), |a, p| a + p) / n;
    let mut cov = DMatrix::zeros(7, 7);
    for p in points {
        let d = DVector::from_column_slice((p - mean).as_slice());
        cov += &d * d.transpose();
    }
    cov / (n - 1.0)
}

/// One region per demonstrated grasp, shaped by the history samples nearest to it.
pub fn build_regions(modes: &DemoGrasps, history: &[Pose], params: &DartingParams) -> Result<Vec<JumpRegion>> {
    params.validate()?;
    let centers = modes.poses();
    let fallback = DMatrix::identity(7, 7) * FALLBACK_VARIANCE;
    let mut assigned: Vec<Vec<Pose>> = vec![Vec::new(); centers.len()];
    for h in history {
        let nearest = centers
            .iter()
            .enumerate()
            .map(|(i, c)| (i, d_mag_linearized_sq(h, c, params.assign_c)))
            .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
            .map(|(i, _)| i)
            .unwrap_or(0);
        assigned[nearest].push(*h);
    }
    centers
        .iter()
        .zip(&assigned)
        .map(|(center, mine)| {
            let cov = if mine.len() >= MIN_REGION_SAMPLES {
                sample_covariance(&mine.iter().map(|p| p.embed_aligned(center.rot)).collect::<Vec<_>>())
            } else if history.len() >= MIN_REGION_SAMPLES {
                sample_covariance(&history.iter().map(|p| p.embed_aligned(center.rot)).collect::<Vec<_>>())
            } else {
                fallback.clone()
            };
            JumpRegion::new(*center, &cov, params.omega, params.volume_formula)
        })
        .collect()
}

/// Categorical draw with probabilities proportional to region volumes (one uniform).
pub fn select_region<R: Rng + ?Sized>(regions: &[JumpRegion], rng: &mut R) -> usize {
    let total: f64 = regions.iter().map(|r| r.volume).sum();
    let mut u = uniform(rng) * total;
    for (i, r) in regions.iter().enumerate() {
        if u < r.volume {
            return i;
        }
        u -= r.volume;
    }
    regions.len().saturating_sub(1)
}

/// Darting map in ambient coordinates; `x` must already be sign-aligned to `from`.
pub fn dart_ambient(x: &AmbientVec, from: &JumpRegion, to: &JumpRegion) -> AmbientVec {
    let y = Ellipsoid::dart(&DVector::from_column_slice(x.as_slice()), &from.shape, &to.shape);
    AmbientVec::from_column_slice(y.as_slice())
}

/// Darts `x` from one region to another and projects back onto a pose.
/// Fails only when the image has a near-zero quaternion part.
pub fn dart(x: &Pose, from: &JumpRegion, to: &JumpRegion) -> Result<Pose> {
    Pose::project(&dart_ambient(&x.embed_aligned(from.center.rot), from, to))
}

/// Acceptance decision for a darting move from `x` to `x_new`, consuming one uniform.
pub fn dart_accept<R: Rng + ?Sized>(
    x: &Pose,
    x_new: &Pose,
    regions: &[JumpRegion],
    target: &dyn TargetDensity,
    mode: AcceptanceMode,
    rng: &mut R,
) -> bool {
    let u = uniform(rng);
    dart_decision(target.log_density(x), target.log_density(x_new), containing_count(regions, x), containing_count(regions, x_new), mode, u)
}

fn dart_decision(lp: f64, lp_new: f64, n_x: usize, n_new: usize, mode: AcceptanceMode, u: f64) -> bool {
    if n_new == 0 {
        return false;
    }
    let (ln_nx, ln_nnew) = ((n_x as f64).ln(), (n_new as f64).ln());
    match mode {
        AcceptanceMode::Standard => mh_accept(lp_new + ln_nx, lp + ln_nnew, u),
        AcceptanceMode::PaperLiteral => {
            let log_ratio = ln_nx + lp - ln_nnew - lp_new;
            let p = if log_ratio.is_nan() { 1.0 } else { log_ratio.min(0.0).exp() };
            u > p
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Kameleon,
    Dart,
    Hold,
    /// Steps of the random-walk baseline.
    RandomWalk,
}

impl Branch {
    pub fn as_str(&self) -> &'static str {
        match self {
            Branch::Kameleon => "kameleon",
            Branch::Dart => "dart",
            Branch::Hold => "hold",
            Branch::RandomWalk => "random_walk",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CombinedStep {
    pub branch: Branch,
    pub proposal: Option<Pose>,
    pub accepted: bool,
}

impl From<KameleonStep> for CombinedStep {
    fn from(s: KameleonStep) -> Self {
        CombinedStep { branch: Branch::Kameleon, proposal: s.proposal, accepted: s.accepted }
    }
}

/// One step of the combined sampler.
///
/// Draw order: `u1` (skipped when `p_check >= 1`), then either a Kameleon step,
/// or, for a dart, the source-region index among containing regions, the
/// destination uniform, and `u2`. A state outside every region is held.
pub fn combined_step<R: Rng + ?Sized>(
    state: &mut ChainState,
    target: &dyn TargetDensity,
    regions: &[JumpRegion],
    kameleon: &KameleonParams,
    darting: &DartingParams,
    rng: &mut R,
) -> Result<CombinedStep> {
    let local = darting.p_check >= 1.0 || uniform(rng) < darting.p_check;
    if local {
        return kameleon_step(state, target, kameleon, rng).map(Into::into);
    }
    let x = state.current;
    let inside: Vec<usize> = (0..regions.len()).filter(|&i| contains(&regions[i], &x)).collect();
    if inside.is_empty() {
        state.record_current();
        return Ok(CombinedStep { branch: Branch::Hold, proposal: None, accepted: false });
    }
    let from = inside[uniform_index(rng, inside.len())];
    let to = select_region(regions, rng);
    let proposal = dart(&x, &regions[from], &regions[to]).ok();
    let u = uniform(rng);
    let mut accepted = false;
    if let Some(y) = proposal {
        let lp_new = target.log_density(&y);
        let n_new = containing_count(regions, &y);
        accepted = dart_decision(state.current_log_density, lp_new, inside.len(), n_new, darting.acceptance_mode, u);
        if accepted {
            state.move_to(y, lp_new);
        }
    }
    state.record_current();
    Ok(CombinedStep { branch: Branch::Dart, proposal, accepted })
}
