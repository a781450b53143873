//! Rigid-body pose algebra and pose-space distances.
//!
//! A [`Pose`] is a unit dual quaternion `q_rot + eps * q_tra` stored as its
//! rotation quaternion and translation vector. The dual part is implied by
//! that pair and is never materialized. Every distance below is invariant
//! under negating either rotation quaternion.

use std::ops::Mul;

use nalgebra::{SVector, Vector3, Vector4};

use crate::error::{Error, Result};

/// Pose coordinates `[qw, qx, qy, qz, tx, ty, tz]` in which Gaussian
/// proposals, kernel gradients and jump regions are expressed.
pub type AmbientVec = SVector<f64, 7>;

/// Quaternions with a norm below this cannot be projected back onto a pose.
pub const MIN_QUAT_NORM: f64 = 1e-9;

/// A general (not necessarily unit) quaternion `w + xi + yj + zk`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quat {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Quat {
    pub const fn new(w: f64, x: f64, y: f64, z: f64) -> Self {
        Quat { w, x, y, z }
    }

    pub fn conj(self) -> Self {
        Quat::new(self.w, -self.x, -self.y, -self.z)
    }

    pub fn dot(self, o: Quat) -> f64 {
        self.w * o.w + self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn to_vector(self) -> Vector4<f64> {
        Vector4::new(self.w, self.x, self.y, self.z)
    }

    pub fn from_vector(v: &Vector4<f64>) -> Self {
        Quat::new(v[0], v[1], v[2], v[3])
    }
}

impl Mul for Quat {
    type Output = Quat;

    fn mul(self, b: Quat) -> Quat {
        let a = self;
        Quat::new(
            a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
            a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
            a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
            a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w,
        )
    }
}

/// A rotation quaternion with `||q|| = 1`.
///
/// `q` and `-q` are the same rotation; [`UnitQuat::canonical`] picks the
/// representative with `w >= 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitQuat(Quat);

impl UnitQuat {
    pub const IDENTITY: UnitQuat = UnitQuat(Quat::new(1.0, 0.0, 0.0, 0.0));

    /// Normalizes `q`. Fails when the norm is below [`MIN_QUAT_NORM`].
    pub fn normalize(q: Quat) -> Result<Self> {
        let n = q.norm();
        if !(n > MIN_QUAT_NORM) || !n.is_finite() {
            return Err(Error::DegenerateQuaternion(n));
        }
        Ok(UnitQuat(Quat::new(q.w / n, q.x / n, q.y / n, q.z / n)))
    }

    pub fn new(w: f64, x: f64, y: f64, z: f64) -> Result<Self> {
        Self::normalize(Quat::new(w, x, y, z))
    }

    /// Renormalizes a quaternion that is known to be close to unit length.
    pub(crate) fn renormalized(q: Quat) -> Self {
        let n = q.norm();
        UnitQuat(Quat::new(q.w / n, q.x / n, q.y / n, q.z / n))
    }

    /// Rotation by `angle` radians about `axis` (need not be normalized).
    pub fn from_axis_angle(axis: Vector3<f64>, angle: f64) -> Self {
        let n = axis.norm();
        if n == 0.0 {
            return Self::IDENTITY;
        }
        let a = axis / n;
        let (s, c) = (0.5 * angle).sin_cos();
        UnitQuat(Quat::new(c, s * a.x, s * a.y, s * a.z))
    }

    pub fn quat(&self) -> Quat {
        self.0
    }

    pub fn w(&self) -> f64 {
        self.0.w
    }

    pub fn to_vector(&self) -> Vector4<f64> {
        self.0.to_vector()
    }

    pub fn conj(self) -> Self {
        UnitQuat(self.0.conj())
    }

    pub fn neg(self) -> Self {
        let q = self.0;
        UnitQuat(Quat::new(-q.w, -q.x, -q.y, -q.z))
    }

    pub fn dot(self, o: UnitQuat) -> f64 {
        self.0.dot(o.0)
    }

    /// Representative with `w > 0`; at `w = 0` the first nonzero of
    /// `(x, y, z)` is made positive.
    pub fn canonical(self) -> Self {
        let q = self.0;
        let flip = if q.w != 0.0 {
            q.w < 0.0
        } else {
            [q.x, q.y, q.z].into_iter().find(|v| *v != 0.0).is_some_and(|v| v < 0.0)
        };
        if flip {
            self.neg()
        } else {
            self
        }
    }

    /// Sign-flipped copy of `self` lying in the same hemisphere as `reference`.
    pub fn aligned_to(self, reference: UnitQuat) -> Self {
        if self.dot(reference) < 0.0 {
            self.neg()
        } else {
            self
        }
    }

    pub fn rotate(&self, v: &Vector3<f64>) -> Vector3<f64> {
        let q = self.0;
        let u = Vector3::new(q.x, q.y, q.z);
        let t = 2.0 * u.cross(v);
        v + q.w * t + u.cross(&t)
    }
}

impl Mul for UnitQuat {
    type Output = UnitQuat;

    fn mul(self, rhs: UnitQuat) -> UnitQuat {
        UnitQuat::renormalized(self.0 * rhs.0)
    }
}

/// Rigid transform: rotate by `rot`, then translate by `tra` (meters).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub rot: UnitQuat,
    pub tra: Vector3<f64>,
}

impl Pose {
    pub fn identity() -> Self {
        Pose { rot: UnitQuat::IDENTITY, tra: Vector3::zeros() }
    }

    pub fn new(rot: UnitQuat, tra: Vector3<f64>) -> Self {
        Pose { rot, tra }
    }

    pub fn from_translation(tra: Vector3<f64>) -> Self {
        Pose { rot: UnitQuat::IDENTITY, tra }
    }

    /// `self` followed by `other` expressed in `self`'s frame.
    pub fn compose(&self, other: &Pose) -> Pose {
        Pose { rot: self.rot * other.rot, tra: self.tra + self.rot.rotate(&other.tra) }
    }

    /// The inverse transform (dual-quaternion conjugate).
    pub fn conjugate(&self) -> Pose {
        let inv = self.rot.conj();
        Pose { rot: inv, tra: -inv.rotate(&self.tra) }
    }

    /// Same pose with the rotation quaternion negated.
    pub fn sign_flipped(&self) -> Pose {
        Pose { rot: self.rot.neg(), tra: self.tra }
    }

    pub fn embed(&self) -> AmbientVec {
        let q = self.rot.quat();
        AmbientVec::from([q.w, q.x, q.y, q.z, self.tra.x, self.tra.y, self.tra.z])
    }

    /// Embedding with the quaternion sign chosen to face `reference`.
    pub fn embed_aligned(&self, reference: UnitQuat) -> AmbientVec {
        Pose { rot: self.rot.aligned_to(reference), tra: self.tra }.embed()
    }

    /// Renormalizes the quaternion block and copies the translation.
    pub fn project(v: &AmbientVec) -> Result<Pose> {
        let rot = UnitQuat::normalize(Quat::new(v[0], v[1], v[2], v[3]))?;
        Ok(Pose { rot, tra: Vector3::new(v[4], v[5], v[6]) })
    }
}

impl serde::Serialize for Pose {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let v: [f64; 7] = self.embed().into();
        v.serialize(serializer)
    }
}

impl<'de> serde::Deserialize<'de> for Pose {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let v = <[f64; 7]>::deserialize(deserializer)?;
        Pose::project(&AmbientVec::from(v)).map_err(serde::de::Error::custom)
    }
}

/// `conj(a) * b`, split into a canonical rotation and a translation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransformDelta {
    pub rot: UnitQuat,
    pub tra: Vector3<f64>,
}

pub fn relative_transform(a: &Pose, b: &Pose) -> TransformDelta {
    let inv = a.rot.conj();
    TransformDelta { rot: (inv * b.rot).canonical(), tra: inv.rotate(&(b.tra - a.tra)) }
}

/// Arc distance `min over +- of arccos <q, +-r>`, in `[0, pi/2]`.
pub fn d_arc(q: UnitQuat, r: UnitQuat) -> f64 {
    q.dot(r).abs().clamp(-1.0, 1.0).acos()
}

fn check_weight(c: f64) -> Result<()> {
    if c >= 0.0 && c.is_finite() {
        Ok(())
    } else {
        Err(Error::param("c", format!("translation weight must be finite and >= 0, got {c}")))
    }
}

/// Transformation magnitude between two poses with translation weight `c`.
pub fn d_mag(a: &Pose, b: &Pose, c: f64) -> Result<f64> {
    check_weight(c)?;
    let v = relative_transform(a, b);
    let arc = d_arc(UnitQuat::IDENTITY, v.rot);
    Ok((arc * arc + c * v.tra.norm_squared()).sqrt())
}

/// [`d_mag`] with the arc replaced by the chord `||q_0 - v_rot||`.
pub fn d_mag_linearized(a: &Pose, b: &Pose, c: f64) -> Result<f64> {
    check_weight(c)?;
    Ok(d_mag_linearized_sq(a, b, c).sqrt())
}

/// Squared linearized distance; `c` is assumed valid.
pub(crate) fn d_mag_linearized_sq(a: &Pose, b: &Pose, c: f64) -> f64 {
    let v = relative_transform(a, b);
    let q = v.rot.quat();
    let chord = (1.0 - q.w).powi(2) + q.x * q.x + q.y * q.y + q.z * q.z;
    chord + c * v.tra.norm_squared()
}
