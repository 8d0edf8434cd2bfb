//! Rigid motions and planes.

use nalgebra::{Matrix3, Matrix4, Rotation3, Unit};
use serde::{Deserialize, Serialize};

use super::{MeshError, Point3, Vector3};

/// Tolerance used when accepting a matrix read from a file as a rotation.
const INPUT_ORTHONORMAL_TOL: f64 = 1e-6;

/// A proper rigid motion `x -> R x + t` (no scale, no reflection).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RigidTransform {
    rotation: Matrix3<f64>,
    translation: Vector3,
}

impl Default for RigidTransform {
    fn default() -> Self {
        Self::identity()
    }
}

impl RigidTransform {
    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    /// Builds a transform from an already orthonormal rotation block.
    ///
    /// The rotation is re-projected onto SO(3) so accumulated rounding never leaks
    /// into later compositions.
    pub fn from_parts(rotation: Matrix3<f64>, translation: Vector3) -> Self {
        Self {
            rotation: project_to_rotation(&rotation),
            translation,
        }
    }

    pub fn from_translation(t: Vector3) -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: t,
        }
    }

    /// Rotation by `angle` radians about `axis` through the origin.
    pub fn from_axis_angle(axis: &Vector3, angle: f64) -> Self {
        let rot = Rotation3::from_axis_angle(&Unit::new_normalize(*axis), angle);
        Self {
            rotation: *rot.matrix(),
            translation: Vector3::zeros(),
        }
    }

    /// Rotation by `angle` about an axis through `center`.
    pub fn rotation_about(center: &Point3, axis: &Vector3, angle: f64) -> Self {
        let to = Self::from_translation(center.coords);
        let from = Self::from_translation(-center.coords);
        to.compose(&Self::from_axis_angle(axis, angle)).compose(&from)
    }

    /// Exponential map of a twist `(omega, v)` where `omega` is a rotation vector.
    pub fn from_rotation_vector(omega: &Vector3, translation: Vector3) -> Self {
        let rot = Rotation3::from_scaled_axis(*omega);
        Self {
            rotation: *rot.matrix(),
            translation,
        }
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> &Vector3 {
        &self.translation
    }

    /// `self ∘ other`: applies `other` first.
    pub fn compose(&self, other: &RigidTransform) -> RigidTransform {
        RigidTransform {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    pub fn inverse(&self) -> RigidTransform {
        let rt = self.rotation.transpose();
        RigidTransform {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }

    pub fn apply_point(&self, p: &Point3) -> Point3 {
        Point3::from(self.rotation * p.coords + self.translation)
    }

    pub fn apply_vector(&self, v: &Vector3) -> Vector3 {
        self.rotation * v
    }

    /// Rotation angle in radians, from `acos((trace(R) - 1) / 2)`.
    pub fn rotation_angle(&self) -> f64 {
        let c = ((self.rotation.trace() - 1.0) * 0.5).clamp(-1.0, 1.0);
        // acos loses precision near 0; the skew part keeps small angles exact.
        let skew = Vector3::new(
            self.rotation[(2, 1)] - self.rotation[(1, 2)],
            self.rotation[(0, 2)] - self.rotation[(2, 0)],
            self.rotation[(1, 0)] - self.rotation[(0, 1)],
        );
        let s = 0.5 * skew.norm();
        s.atan2(c)
    }

    pub fn to_matrix(&self) -> Matrix4<f64> {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.rotation);
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.translation);
        m
    }

    /// The 16 entries of the homogeneous matrix, row-major.
    pub fn to_row_major(&self) -> [f64; 16] {
        let m = self.to_matrix();
        let mut out = [0.0; 16];
        for r in 0..4 {
            for c in 0..4 {
                out[r * 4 + c] = m[(r, c)];
            }
        }
        out
    }

    /// Parses 16 row-major numbers, rejecting anything that is not a proper rigid motion.
    pub fn from_row_major(values: &[f64]) -> Result<RigidTransform, MeshError> {
        if values.len() != 16 {
            return Err(MeshError::NotRigid(format!(
                "expected 16 matrix entries, got {}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(MeshError::NotRigid("non-finite matrix entry".into()));
        }
        let m = Matrix4::from_row_slice(values);
        Self::from_matrix(&m)
    }

    pub fn from_matrix(m: &Matrix4<f64>) -> Result<RigidTransform, MeshError> {
        let bottom = [m[(3, 0)], m[(3, 1)], m[(3, 2)], m[(3, 3)]];
        if bottom[0].abs() > INPUT_ORTHONORMAL_TOL
            || bottom[1].abs() > INPUT_ORTHONORMAL_TOL
            || bottom[2].abs() > INPUT_ORTHONORMAL_TOL
            || (bottom[3] - 1.0).abs() > INPUT_ORTHONORMAL_TOL
        {
            return Err(MeshError::NotRigid("bottom row must be 0 0 0 1".into()));
        }
        let r: Matrix3<f64> = m.fixed_view::<3, 3>(0, 0).into_owned();
        let err = (r.transpose() * r - Matrix3::identity()).abs().max();
        if err > INPUT_ORTHONORMAL_TOL {
            return Err(MeshError::NotRigid(format!(
                "rotation block is not orthonormal (max |RᵀR - I| = {err:.3e})"
            )));
        }
        if r.determinant() < 0.0 {
            return Err(MeshError::NotRigid("rotation block is a reflection".into()));
        }
        let t: Vector3 = m.fixed_view::<3, 1>(0, 3).into_owned();
        Ok(Self::from_parts(r, t))
    }

    /// Largest elementwise difference between the homogeneous matrices.
    pub fn max_abs_diff(&self, other: &RigidTransform) -> f64 {
        (self.to_matrix() - other.to_matrix()).abs().max()
    }

    /// Checks RᵀR = I and det R = +1 within `tol`.
    pub fn is_rigid(&self, tol: f64) -> bool {
        let err = (self.rotation.transpose() * self.rotation - Matrix3::identity())
            .abs()
            .max();
        err <= tol && (self.rotation.determinant() - 1.0).abs() <= tol
    }
}

/// Nearest rotation matrix in the Frobenius sense (polar decomposition via SVD).
pub(crate) fn project_to_rotation(m: &Matrix3<f64>) -> Matrix3<f64> {
    let err = (m.transpose() * m - Matrix3::identity()).abs().max();
    if err < 1e-14 && m.determinant() > 0.0 {
        return *m;
    }
    let svd = m.svd(true, true);
    let u = svd.u.expect("svd u");
    let vt = svd.v_t.expect("svd v_t");
    let mut d = Matrix3::identity();
    if (u * vt).determinant() < 0.0 {
        d[(2, 2)] = -1.0;
    }
    u * d * vt
}

impl Serialize for RigidTransform {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_row_major().to_vec().serialize(s)
    }
}

impl<'de> Deserialize<'de> for RigidTransform {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v: Vec<f64> = Vec::deserialize(d)?;
        RigidTransform::from_row_major(&v).map_err(serde::de::Error::custom)
    }
}

/// Oriented plane `{x : n·x = offset}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Plane {
    normal: Vector3,
    offset: f64,
}

impl Plane {
    pub fn new(normal: Vector3, offset: f64) -> Result<Plane, MeshError> {
        let n = normal.norm();
        if !(n.is_finite() && n > 1e-12) || !offset.is_finite() {
            return Err(MeshError::InvalidPlane);
        }
        Ok(Plane {
            normal: normal / n,
            offset: offset / n,
        })
    }

    pub fn from_point_normal(point: &Point3, normal: Vector3) -> Result<Plane, MeshError> {
        let n = normal.norm();
        if !(n.is_finite() && n > 1e-12) {
            return Err(MeshError::InvalidPlane);
        }
        let unit = normal / n;
        Ok(Plane {
            normal: unit,
            offset: unit.dot(&point.coords),
        })
    }

    pub fn normal(&self) -> &Vector3 {
        &self.normal
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn signed_distance(&self, p: &Point3) -> f64 {
        self.normal.dot(&p.coords) - self.offset
    }

    pub fn project(&self, p: &Point3) -> Point3 {
        p - self.normal * self.signed_distance(p)
    }

    pub fn transformed(&self, t: &RigidTransform) -> Plane {
        let n = t.apply_vector(&self.normal);
        let p = t.apply_point(&Point3::from(self.normal * self.offset));
        Plane {
            normal: n,
            offset: n.dot(&p.coords),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PlaneRecord {
    normal: [f64; 3],
    offset: f64,
}

impl Serialize for Plane {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        PlaneRecord {
            normal: [self.normal.x, self.normal.y, self.normal.z],
            offset: self.offset,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Plane {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let r = PlaneRecord::deserialize(d)?;
        Plane::new(Vector3::from(r.normal), r.offset).map_err(serde::de::Error::custom)
    }
}
