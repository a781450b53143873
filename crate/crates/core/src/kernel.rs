//! Pose-space Gaussian kernel, its ambient gradient, and the kernel-informed
//! proposal covariance.
//!
//! The kernel replaces the Euclidean distance of a Gaussian kernel with the
//! linearized transformation magnitude:
//!
//! ```text
//! k(a, b) = sigma^2 exp(-d_lin(a, b; c)^2 / (2 ell^2))
//! d_lin^2 = ||q_0 - v_rot||^2 + c ||v_tra||^2 = 2 - 2|<q_a, q_b>| + c ||t_b - t_a||^2
//! ```
//!
//! As a function of ambient coordinates `x = (p, t)` the first argument is read
//! through [`Pose::project`], so `k(x, z) = k(project(x), z)`. The gradient
//! therefore has no component along the quaternion itself.

use nalgebra::{Cholesky, DMatrix, SMatrix, Vector4};

use crate::error::{Error, Result};
use crate::geometry::{d_mag_linearized_sq, AmbientVec, Pose};

pub type Matrix7 = SMatrix<f64, 7, 7>;

/// Relative rotations with `|w|` at or below this are treated as lying on the
/// canonicalization boundary, where the kernel is not differentiable.
pub const BOUNDARY_W: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct KernelParams {
    sigma: f64,
    ell: f64,
    c: f64,
}

impl KernelParams {
    pub fn new(sigma: f64, ell: f64, c: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::param("sigma", format!("must be > 0, got {sigma}")));
        }
        if !(ell > 0.0 && ell.is_finite()) {
            return Err(Error::param("ell", format!("must be > 0, got {ell}")));
        }
        if !(c >= 0.0 && c.is_finite()) {
            return Err(Error::param("c", format!("must be >= 0, got {c}")));
        }
        Ok(KernelParams { sigma, ell, c })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn ell(&self) -> f64 {
        self.ell
    }

    pub fn c(&self) -> f64 {
        self.c
    }
}

pub fn kernel_eval(a: &Pose, b: &Pose, params: &KernelParams) -> f64 {
    let d2 = d_mag_linearized_sq(a, b, params.c);
    params.sigma * params.sigma * (-d2 / (2.0 * params.ell * params.ell)).exp()
}

/// Gradient of `x -> k(x, z)` at `x = embed(y)` in the 7 ambient coordinates.
///
/// Fails with [`Error::CanonicalBoundary`] when `|<q_y, q_z>| <= BOUNDARY_W`.
pub fn kernel_grad(y: &Pose, z: &Pose, params: &KernelParams) -> Result<AmbientVec> {
    let q = y.rot.to_vector();
    let r = z.rot.to_vector();
    let w = q.dot(&r);
    if w.abs() <= BOUNDARY_W {
        return Err(Error::CanonicalBoundary(w));
    }
    let dt = z.tra - y.tra;
    let inv_l2 = 1.0 / (params.ell * params.ell);
    let d2 = 2.0 - 2.0 * w.abs() + params.c * dt.norm_squared();
    let k = params.sigma * params.sigma * (-0.5 * d2 * inv_l2).exp();

    // d|w|/dp on the unit sphere is sign(w) (r - w q).
    let rot: Vector4<f64> = (r - q * w) * (w.signum() * k * inv_l2);
    let tra = dt * (k * params.c * inv_l2);
    Ok(AmbientVec::from([rot[0], rot[1], rot[2], rot[3], tra[0], tra[1], tra[2]]))
}

/// `7 x n` matrix whose column `i` is `2 eta grad_x k(x, z_i)` at `x = y`.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientMatrix {
    m: DMatrix<f64>,
    boundary_columns: usize,
}

impl GradientMatrix {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn ncols(&self) -> usize {
        self.m.ncols()
    }

    /// Columns zero-filled because the pair sat on the canonicalization boundary.
    pub fn boundary_columns(&self) -> usize {
        self.boundary_columns
    }
}

pub fn gradient_matrix(z: &[Pose], y: &Pose, eta: f64, params: &KernelParams) -> Result<GradientMatrix> {
    if z.is_empty() {
        return Err(Error::param("z", "subsample must not be empty"));
    }
    let mut m = DMatrix::zeros(7, z.len());
    let mut boundary_columns = 0;
    for (i, zi) in z.iter().enumerate() {
        match kernel_grad(y, zi, params) {
            Ok(g) => m.set_column(i, &(g * (2.0 * eta))),
            Err(_) => boundary_columns += 1,
        }
    }
    Ok(GradientMatrix { m, boundary_columns })
}

/// `gamma^2 I + nu^2 M H M^T` with `H = I - 11^T / n`, plus its Cholesky factor.
#[derive(Debug, Clone)]
pub struct ProposalCovariance {
    cov: Matrix7,
    chol: Cholesky<f64, nalgebra::Const<7>>,
    gamma: f64,
}

impl ProposalCovariance {
    pub fn matrix(&self) -> &Matrix7 {
        &self.cov
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Lower-triangular factor `L` with `L L^T = C`.
    pub fn factor(&self) -> Matrix7 {
        self.chol.l()
    }

    pub fn log_det(&self) -> f64 {
        let l = self.chol.l_dirty();
        2.0 * (0..7).map(|i| l[(i, i)].ln()).sum::<f64>()
    }

    /// Log-density of `N(0, C)` at `delta`.
    pub fn log_density(&self, delta: &AmbientVec) -> f64 {
        let sol = self.chol.solve(delta);
        -0.5 * (delta.dot(&sol) + self.log_det() + 7.0 * (2.0 * std::f64::consts::PI).ln())
    }

    /// Same as [`log_density`](Self::log_density), for covariances where the
    /// unit vector `dir` is an eigenvector with eigenvalue `gamma^2`.
    ///
    /// The component of `delta` along `dir` is scored in closed form, so a
    /// large offset in that direction does not lose precision in the solve.
    pub fn log_density_split(&self, delta: &AmbientVec, dir: &AmbientVec) -> f64 {
        let along = delta.dot(dir);
        let rest = delta - dir * along;
        let sol = self.chol.solve(&rest);
        let quad = along * along / (self.gamma * self.gamma) + rest.dot(&sol);
        -0.5 * (quad + self.log_det() + 7.0 * (2.0 * std::f64::consts::PI).ln())
    }
}

pub fn proposal_covariance(m: &GradientMatrix, gamma: f64, nu: f64) -> Result<ProposalCovariance> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::param("gamma", format!("must be > 0, got {gamma}")));
    }
    if !(nu >= 0.0 && nu.is_finite()) {
        return Err(Error::param("nu", format!("must be >= 0, got {nu}")));
    }
    let mut centered = m.m.clone();
    let mean = centered.column_mean();
    for mut col in centered.column_iter_mut() {
        col -= &mean;
    }
    let mhm = &centered * centered.transpose();
    let mut cov = Matrix7::identity() * (gamma * gamma);
    cov += Matrix7::from_iterator(mhm.iter().copied()) * (nu * nu);
    cov = (cov + cov.transpose()) * 0.5;
    let chol = Cholesky::new(cov).ok_or_else(|| Error::param("gradient_matrix", "covariance is not positive definite"))?;
    Ok(ProposalCovariance { cov, chol, gamma })
}
