use nalgebra::{Matrix3, Point3, Unit, Vector3};

use crate::error::MeshError;

/// A proper rigid transform `p -> R p + t` (rotation plus translation, no
/// scale, no reflection).
#[derive(Debug, Clone, PartialEq)]
pub struct RigidTransform {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

impl RigidTransform {
    pub fn identity() -> Self {
        RigidTransform {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self, MeshError> {
        let t = RigidTransform {
            rotation,
            translation,
        };
        t.validate()?;
        Ok(t)
    }

    pub fn from_axis_angle(axis: &Vector3<f64>, angle_rad: f64, translation: Vector3<f64>) -> Self {
        let rotation = nalgebra::Rotation3::from_axis_angle(&Unit::new_normalize(*axis), angle_rad);
        RigidTransform {
            rotation: rotation.into_inner(),
            translation,
        }
    }

    /// Orthonormality (RᵀR = I) and det = +1, both within 1e-9.
    pub fn validate(&self) -> Result<(), MeshError> {
        let r = &self.rotation;
        let ortho = (r.transpose() * r - Matrix3::identity()).norm();
        let det = r.determinant();
        if ortho > 1e-9 || (det - 1.0).abs() > 1e-9 {
            return Err(MeshError::InvalidRotation { ortho, det });
        }
        Ok(())
    }

    pub fn apply(&self, p: &Point3<f64>) -> Point3<f64> {
        Point3::from(self.rotation * p.coords + self.translation)
    }

    pub fn apply_vector(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * v
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

    /// Rotation angle in radians of `self.rotation` relative to identity.
    pub fn rotation_angle(&self) -> f64 {
        rotation_angle_of(&self.rotation)
    }

    /// Angle in radians between the rotations of two transforms.
    pub fn rotation_angle_to(&self, other: &RigidTransform) -> f64 {
        rotation_angle_of(&(self.rotation.transpose() * other.rotation))
    }
}

/// Angle of a rotation matrix via atan2(sin, cos): sin from the skew part,
/// cos from the trace. Accurate near identity, unlike the plain acos form.
fn rotation_angle_of(r: &Matrix3<f64>) -> f64 {
    let skew = Vector3::new(
        r[(2, 1)] - r[(1, 2)],
        r[(0, 2)] - r[(2, 0)],
        r[(1, 0)] - r[(0, 1)],
    );
    let sin = skew.norm() / 2.0;
    let cos = (r.trace() - 1.0) / 2.0;
    sin.atan2(cos)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn compose_then_invert_is_identity() {
        let a = RigidTransform::from_axis_angle(
            &Vector3::new(1.0, 2.0, 0.5),
            0.7,
            Vector3::new(3.0, -1.0, 2.0),
        );
        let b = a.compose(&a.inverse());
        assert_relative_eq!(b.rotation, Matrix3::identity(), epsilon = 1e-12);
        assert_relative_eq!(b.translation.norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn apply_matches_composition() {
        let a = RigidTransform::from_axis_angle(&Vector3::z(), 0.3, Vector3::new(1.0, 0.0, 0.0));
        let b = RigidTransform::from_axis_angle(&Vector3::x(), -0.2, Vector3::new(0.0, 2.0, 0.0));
        let p = Point3::new(0.5, -1.5, 2.0);
        let via_compose = a.compose(&b).apply(&p);
        let via_apply = a.apply(&b.apply(&p));
        assert_relative_eq!(via_compose, via_apply, epsilon = 1e-12);
    }

    #[test]
    fn rotation_angle_recovers_input() {
        let t = RigidTransform::from_axis_angle(&Vector3::y(), 0.42, Vector3::zeros());
        assert_relative_eq!(t.rotation_angle(), 0.42, epsilon = 1e-12);
    }

    #[test]
    fn reflection_fails_validation() {
        let mut r = Matrix3::identity();
        r[(0, 0)] = -1.0;
        assert!(RigidTransform::new(r, Vector3::zeros()).is_err());
    }
}
