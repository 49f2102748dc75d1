//! Gaussian covariance kernels over mesh vertices, optionally masked to
//! labeled regions. A spec is a sum of masked terms; each term acts
//! identically on the x/y/z displacement components.

use mesh_core::{Point3, RegionLabel, SurfaceMesh};

use crate::error::GpError;

/// `k(x, x') = s · exp(−‖x−x'‖² / l²)`, the kernel value between two points.
/// `s` is the variance amplitude (mm²), `l` the correlation length (mm).
pub fn gaussian_kernel(x: &Point3<f64>, y: &Point3<f64>, s: f64, l: f64) -> f64 {
    s * (-(x - y).norm_squared() / (l * l)).exp()
}

/// Which vertices a kernel term couples.
#[derive(Debug, Clone, PartialEq)]
pub enum LabelMask {
    /// Every vertex.
    Any,
    /// Only vertices carrying one of these labels.
    OneOf(Vec<RegionLabel>),
}

impl LabelMask {
    pub fn matches(&self, label: Option<RegionLabel>) -> bool {
        match self {
            LabelMask::Any => true,
            LabelMask::OneOf(set) => label.is_some_and(|l| set.contains(&l)),
        }
    }
}

#[derive(Debug, Clone)]
pub struct KernelTerm {
    /// Variance amplitude s (mm²).
    pub scale: f64,
    /// Correlation length l (mm).
    pub length: f64,
    pub mask: LabelMask,
}

/// Sum of masked Gaussian kernels.
#[derive(Debug, Clone)]
pub struct KernelSpec {
    pub terms: Vec<KernelTerm>,
}

impl KernelSpec {
    pub fn validate(&self) -> Result<(), GpError> {
        for (index, term) in self.terms.iter().enumerate() {
            if !(term.scale > 0.0 && term.length > 0.0)
                || !term.scale.is_finite()
                || !term.length.is_finite()
            {
                return Err(GpError::BadKernelTerm {
                    index,
                    scale: term.scale,
                    length: term.length,
                });
            }
        }
        Ok(())
    }

    /// Single unmasked Gaussian term.
    pub fn single(scale: f64, length: f64) -> KernelSpec {
        KernelSpec {
            terms: vec![KernelTerm {
                scale,
                length,
                mask: LabelMask::Any,
            }],
        }
    }

    /// Resolves the masks against a mesh for fast repeated evaluation.
    pub fn bind<'a>(&self, mesh: &'a SurfaceMesh) -> Result<BoundKernel<'a>, GpError> {
        self.validate()?;
        let labels = mesh.labels.as_deref();
        let terms = self
            .terms
            .iter()
            .map(|term| {
                let mask: Vec<bool> = (0..mesh.vertex_count())
                    .map(|v| term.mask.matches(labels.map(|l| l[v])))
                    .collect();
                BoundTerm {
                    scale: term.scale,
                    inv_l2: 1.0 / (term.length * term.length),
                    mask,
                }
            })
            .collect();
        Ok(BoundKernel {
            points: &mesh.vertices,
            terms,
        })
    }
}

struct BoundTerm {
    scale: f64,
    inv_l2: f64,
    mask: Vec<bool>,
}

/// A kernel spec resolved against one mesh.
pub struct BoundKernel<'a> {
    points: &'a [Point3<f64>],
    terms: Vec<BoundTerm>,
}

impl BoundKernel<'_> {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Kernel value between vertices `i` and `j`.
    pub fn eval(&self, i: usize, j: usize) -> f64 {
        let d2 = (self.points[i] - self.points[j]).norm_squared();
        self.terms
            .iter()
            .filter(|t| t.mask[i] && t.mask[j])
            .map(|t| t.scale * (-d2 * t.inv_l2).exp())
            .sum()
    }

    /// Diagonal entry (distance zero): the sum of active term scales.
    pub fn diag(&self, i: usize) -> f64 {
        self.terms
            .iter()
            .filter(|t| t.mask[i])
            .map(|t| t.scale)
            .sum()
    }

    pub fn trace(&self) -> f64 {
        (0..self.len()).map(|i| self.diag(i)).sum()
    }

    /// True if vertex `i` is outside every term's mask (zero kernel row).
    pub fn is_inert(&self, i: usize) -> bool {
        self.terms.iter().all(|t| !t.mask[i])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use mesh_core::Vector3;

    #[test]
    fn zero_distance_returns_scale() {
        let p = Point3::new(1.0, 2.0, 3.0);
        assert_relative_eq!(gaussian_kernel(&p, &p, 50.0, 40.0), 50.0);
    }

    #[test]
    fn distance_equal_to_length_gives_exp_minus_one() {
        let x = Point3::origin();
        let y = Point3::new(7.0, 0.0, 0.0);
        let v = gaussian_kernel(&x, &y, 1.0, 7.0);
        assert_relative_eq!(v, (-1.0f64).exp(), epsilon = 1e-12);
        assert_relative_eq!(v, 0.367879, epsilon = 1e-6);
    }

    #[test]
    fn body_parameters_at_forty_millimeters() {
        // s = 50 mm², l = 40 mm at distance 40 mm.
        let x = Point3::origin();
        let y = Point3::new(40.0, 0.0, 0.0);
        let v = gaussian_kernel(&x, &y, 50.0, 40.0);
        assert_relative_eq!(v, 50.0 * (-1.0f64).exp(), epsilon = 1e-12);
        assert_relative_eq!(v, 18.394, epsilon = 1e-3);
    }

    #[test]
    fn kernel_is_symmetric() {
        let x = Point3::new(1.0, -2.0, 0.5);
        let y = Point3::new(-3.0, 4.0, 2.0);
        assert_eq!(
            gaussian_kernel(&x, &y, 20.0, 20.0),
            gaussian_kernel(&y, &x, 20.0, 20.0)
        );
    }

    #[test]
    fn masked_term_requires_both_endpoints() {
        let mesh = SurfaceMesh {
            vertices: vec![
                Point3::origin(),
                Point3::new(1.0, 0.0, 0.0),
                Point3::new(2.0, 0.0, 0.0),
            ],
            triangles: vec![],
            labels: Some(vec![RegionLabel::Laa, RegionLabel::Laa, RegionLabel::Body]),
        };
        let spec = KernelSpec {
            terms: vec![KernelTerm {
                scale: 20.0,
                length: 20.0,
                mask: LabelMask::OneOf(vec![RegionLabel::Laa, RegionLabel::Raa]),
            }],
        };
        let bound = spec.bind(&mesh).unwrap();
        assert!(bound.eval(0, 1) > 0.0);
        assert_eq!(bound.eval(0, 2), 0.0);
        assert_eq!(bound.eval(2, 2), 0.0);
        assert!(bound.is_inert(2));
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        assert!(KernelSpec::single(0.0, 40.0).validate().is_err());
        assert!(KernelSpec::single(50.0, -1.0).validate().is_err());
    }

    #[test]
    fn random_kernel_matrix_is_positive_semidefinite() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let vertices: Vec<Point3<f64>> = (0..50)
            .map(|_| {
                Point3::from(Vector3::new(
                    rng.random_range(-30.0..30.0),
                    rng.random_range(-30.0..30.0),
                    rng.random_range(-30.0..30.0),
                ))
            })
            .collect();
        let mesh = SurfaceMesh {
            vertices,
            triangles: vec![],
            labels: None,
        };
        let bound = KernelSpec::single(50.0, 40.0).bind(&mesh).unwrap();
        let n = bound.len();
        let mut k = nalgebra::DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                k[(i, j)] = bound.eval(i, j);
            }
        }
        let trace = k.trace();
        let eig = k.symmetric_eigen();
        let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(min > -1e-8 * trace, "smallest eigenvalue {min}");
    }
}
