//! Kernel-adaptive Metropolis-Hastings (MCMC Kameleon) on poses.
//!
//! Each step draws a subsample `z` of the chain history, proposes
//! `x* ~ N(x_t, gamma^2 I + nu^2 M H M^T)` in ambient coordinates where `M`
//! holds the kernel gradients at `x_t`, projects back onto a pose, and applies
//! the MH correction with the (asymmetric) proposal densities. Adaptation only
//! happens during burn-in: afterwards the subsample is frozen.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{AmbientVec, Pose};
use crate::kernel::{gradient_matrix, proposal_covariance, KernelParams, ProposalCovariance};
use crate::rng::{sample_indices, standard_normal, uniform};
use crate::rwmh::mh_accept;
use crate::targets::TargetDensity;

/// Scaling for a 6-dimensional random walk, `2.38 / sqrt(6)`.
pub fn default_nu() -> f64 {
    2.38 / 6f64.sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KameleonParams {
    pub gamma: f64,
    pub nu: f64,
    /// Subsample size.
    pub n: usize,
    pub burn_in: usize,
    pub iterations: usize,
    /// Gradient step size. Only `eta * nu` reaches the proposal, so it stays at 1.
    pub eta: f64,
    pub kernel: KernelParams,
}

impl KameleonParams {
    pub fn new(kernel: KernelParams) -> Self {
        KameleonParams { gamma: 1e-5, nu: default_nu(), n: 100, burn_in: 100, iterations: 1000, eta: 1.0, kernel }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::param("gamma", format!("must be > 0, got {}", self.gamma)));
        }
        if !(self.nu >= 0.0 && self.nu.is_finite()) {
            return Err(Error::param("nu", format!("must be >= 0, got {}", self.nu)));
        }
        if self.n == 0 {
            return Err(Error::param("n", "subsample size must be >= 1"));
        }
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(Error::param("eta", format!("must be > 0, got {}", self.eta)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct ChainState {
    pub current: Pose,
    pub current_log_density: f64,
    history: Vec<Pose>,
    frozen_subsample: Option<Vec<Pose>>,
    iteration: usize,
    burn_in: usize,
}

impl ChainState {
    /// Chain starting at `start` whose history is seeded with `initial_history`
    /// (typically every pose of a sketch).
    pub fn new(start: Pose, initial_history: Vec<Pose>, burn_in: usize, target: &dyn TargetDensity) -> Self {
        ChainState {
            current: start,
            current_log_density: target.log_density(&start),
            history: initial_history,
            frozen_subsample: None,
            iteration: 0,
            burn_in,
        }
    }

    pub fn history(&self) -> &[Pose] {
        &self.history
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    pub fn in_burn_in(&self) -> bool {
        self.iteration < self.burn_in
    }

    pub fn frozen_subsample(&self) -> Option<&[Pose]> {
        self.frozen_subsample.as_deref()
    }

    /// Fixes the subsample used by every later step. No-op when already frozen.
    pub fn freeze<R: Rng + ?Sized>(&mut self, n: usize, rng: &mut R) {
        if self.frozen_subsample.is_none() {
            let z = self.draw_subsample(n, rng);
            self.frozen_subsample = Some(z);
        }
    }

    fn draw_subsample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<Pose> {
        sample_indices(rng, self.history.len(), n).into_iter().map(|i| self.history[i]).collect()
    }

    /// `n` history poses without replacement (all of them if fewer exist).
    /// Drawn afresh during burn-in; afterwards the frozen subsample is returned,
    /// freezing it on first use.
    pub fn subsample_history<R: Rng + ?Sized>(&mut self, n: usize, rng: &mut R) -> Vec<Pose> {
        if let Some(z) = &self.frozen_subsample {
            return z.clone();
        }
        if self.in_burn_in() {
            return self.draw_subsample(n, rng);
        }
        self.freeze(n, rng);
        self.frozen_subsample.clone().unwrap_or_default()
    }

    /// Appends the current state to the history and advances the iteration.
    pub(crate) fn record_current(&mut self) {
        self.history.push(self.current);
        self.iteration += 1;
    }

    pub(crate) fn move_to(&mut self, pose: Pose, log_density: f64) {
        self.current = pose;
        self.current_log_density = log_density;
    }
}

fn covariance_at(x: &Pose, z: &[Pose], params: &KameleonParams) -> Result<ProposalCovariance> {
    let m = gradient_matrix(z, x, params.eta, &params.kernel)?;
    proposal_covariance(&m, params.gamma, params.nu)
}

#[derive(Debug, Clone)]
pub struct KameleonProposal {
    /// `None` when the draw landed on a near-zero quaternion.
    pub pose: Option<Pose>,
    pub ambient: AmbientVec,
    pub covariance: ProposalCovariance,
}

/// Draws the ambient proposal (7 standard normals) and projects it.
pub fn kameleon_propose<R: Rng + ?Sized>(x: &Pose, z: &[Pose], params: &KameleonParams, rng: &mut R) -> Result<KameleonProposal> {
    let covariance = covariance_at(x, z, params)?;
    let xi = AmbientVec::from_fn(|_, _| standard_normal(rng));
    let ambient = x.embed() + covariance.factor() * xi;
    let pose = Pose::project(&ambient).ok();
    Ok(KameleonProposal { pose, ambient, covariance })
}

fn log_q_with(cov: &ProposalCovariance, x_to: &Pose, x_from: &Pose) -> f64 {
    let delta = x_to.embed_aligned(x_from.rot) - x_from.embed();
    let mut radial = AmbientVec::zeros();
    radial.fixed_rows_mut::<4>(0).copy_from(&x_from.rot.to_vector());
    cov.log_density_split(&delta, &radial)
}

/// Log-density of proposing `x_to` from `x_from` under subsample `z`.
///
/// The quaternion of `x_to` is sign-aligned with `x_from` before evaluation.
/// The kernel gradients at `x_from` are orthogonal to its quaternion, so that
/// direction carries variance `gamma^2` exactly and is scored in closed form.
pub fn log_q(x_to: &Pose, x_from: &Pose, z: &[Pose], params: &KameleonParams) -> Result<f64> {
    let cov = covariance_at(x_from, z, params)?;
    Ok(log_q_with(&cov, x_to, x_from))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KameleonStep {
    pub proposal: Option<Pose>,
    pub proposal_log_density: f64,
    pub log_alpha: f64,
    pub accepted: bool,
}

/// One Kameleon MH step. Draw order: subsample (burn-in only), 7 proposal
/// normals, one acceptance uniform. The current state is appended to the
/// history whether or not the proposal is accepted.
pub fn kameleon_step<R: Rng + ?Sized>(
    state: &mut ChainState,
    target: &dyn TargetDensity,
    params: &KameleonParams,
    rng: &mut R,
) -> Result<KameleonStep> {
    let z = state.subsample_history(params.n, rng);
    if z.is_empty() {
        return Err(Error::param("history", "chain history is empty"));
    }
    let prop = kameleon_propose(&state.current, &z, params, rng)?;
    let u = uniform(rng);
    let mut out = KameleonStep { proposal: prop.pose, proposal_log_density: f64::NEG_INFINITY, log_alpha: f64::NEG_INFINITY, accepted: false };
    if let Some(x_new) = prop.pose {
        let lp_new = target.log_density(&x_new);
        out.proposal_log_density = lp_new;
        if lp_new > f64::NEG_INFINITY {
            let forward = log_q_with(&prop.covariance, &x_new, &state.current);
            let backward = log_q(&state.current, &x_new, &z, params)?;
            let lp_cur = state.current_log_density;
            out.log_alpha = if lp_cur == f64::NEG_INFINITY { 0.0 } else { (lp_new + backward - lp_cur - forward).min(0.0) };
            out.accepted = mh_accept(lp_new + backward, lp_cur + forward, u);
            if out.accepted {
                state.move_to(x_new, lp_new);
            }
        }
    }
    state.record_current();
    Ok(out)
}
