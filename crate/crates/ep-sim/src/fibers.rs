//! Analytic fiber fields.

use mesh_core::{Point3, Vector3};
use nalgebra::Matrix3;

use crate::tetmesh::TetMesh;

#[derive(Debug, Clone)]
pub enum FiberRule {
    /// The same unit direction everywhere.
    Uniform(Vector3<f64>),
    /// Tangent to circles around a fixed axis: `axis × (centroid − point)`.
    Circumferential {
        point: Point3<f64>,
        axis: Vector3<f64>,
    },
    /// Circumferential around each region's own principal axis (computed from
    /// the region's tet centroids).
    RegionPrincipal,
}

/// Assigns one unit fiber per tet. Tets where the field vanishes (centroid on
/// the axis) fall back to the axis direction itself and are logged.
pub fn assign_fibers(mesh: &TetMesh, rule: &FiberRule) -> TetMesh {
    let fibers: Vec<Vector3<f64>> = match rule {
        FiberRule::Uniform(dir) => vec![dir.normalize(); mesh.tet_count()],
        FiberRule::Circumferential { point, axis } => (0..mesh.tet_count())
            .map(|t| circumferential(&mesh.centroid(t), point, axis, t))
            .collect(),
        FiberRule::RegionPrincipal => {
            let mut fibers = vec![Vector3::x(); mesh.tet_count()];
            for region in crate::tetmesh::AtrialRegion::ALL {
                let members: Vec<usize> = (0..mesh.tet_count())
                    .filter(|&t| mesh.regions[t] == region)
                    .collect();
                if members.is_empty() {
                    continue;
                }
                let (point, axis) = principal_axis(mesh, &members);
                for &t in &members {
                    fibers[t] = circumferential(&mesh.centroid(t), &point, &axis, t);
                }
            }
            fibers
        }
    };
    TetMesh {
        vertices: mesh.vertices.clone(),
        tets: mesh.tets.clone(),
        regions: mesh.regions.clone(),
        fibers,
    }
}

fn circumferential(c: &Point3<f64>, point: &Point3<f64>, axis: &Vector3<f64>, tet: usize) -> Vector3<f64> {
    let a = axis.normalize();
    let f = a.cross(&(c - point));
    if f.norm() < 1e-9 {
        log::warn!("tet {tet}: centroid on the fiber axis, falling back to the axis direction");
        return a;
    }
    f.normalize()
}

/// Mean centroid and dominant covariance eigenvector of a tet subset, with a
/// deterministic sign (largest-magnitude component positive).
fn principal_axis(mesh: &TetMesh, members: &[usize]) -> (Point3<f64>, Vector3<f64>) {
    let centroids: Vec<Point3<f64>> = members.iter().map(|&t| mesh.centroid(t)).collect();
    let mean =
        centroids.iter().map(|p| p.coords).sum::<Vector3<f64>>() / centroids.len() as f64;
    let mut cov = Matrix3::<f64>::zeros();
    for p in &centroids {
        let d = p.coords - mean;
        cov += d * d.transpose();
    }
    let eig = cov.symmetric_eigen();
    let mut best = 0;
    for i in 1..3 {
        if eig.eigenvalues[i] > eig.eigenvalues[best] {
            best = i;
        }
    }
    let mut axis: Vector3<f64> = eig.eigenvectors.column(best).into();
    let imax = axis.iamax();
    if axis[imax] < 0.0 {
        axis = -axis;
    }
    if axis.norm() < 1e-12 {
        axis = Vector3::x();
    }
    (Point3::from(mean), axis.normalize())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tetmesh::{AtrialRegion, TetMesh};

    #[test]
    fn uniform_rule_sets_every_fiber() {
        let slab = TetMesh::structured_slab(3, 2, 1, 1.0, AtrialRegion::RightAtrium);
        let out = assign_fibers(&slab, &FiberRule::Uniform(Vector3::new(2.0, 0.0, 0.0)));
        for f in &out.fibers {
            assert_eq!(*f, Vector3::new(1.0, 0.0, 0.0));
        }
        out.validate().unwrap();
    }

    #[test]
    fn circumferential_fibers_are_tangent_on_a_ring_slab() {
        // Slab offset from the axis: every fiber must be perpendicular to the
        // radial direction and to the axis.
        let slab = TetMesh::structured_slab(6, 6, 2, 2.0, AtrialRegion::LeftAtrium);
        let rule = FiberRule::Circumferential {
            point: Point3::new(-20.0, -20.0, 0.0),
            axis: Vector3::z(),
        };
        let out = assign_fibers(&slab, &rule);
        for t in 0..out.tet_count() {
            let c = out.centroid(t);
            let radial = (c - Point3::new(-20.0, -20.0, c.z)).normalize();
            assert!(out.fibers[t].dot(&radial).abs() < 1e-6, "radial component");
            assert!(out.fibers[t].z.abs() < 1e-12);
        }
    }

    #[test]
    fn fibers_are_unit_on_a_random_phantom() {
        use crate::wall::{extrude_wall, WallConfig};
        let endo = mesh_core::primitives::two_lobe_phantom(18.0, 2);
        let wall = extrude_wall(&endo, &WallConfig::default()).unwrap();
        let out = assign_fibers(&wall, &FiberRule::RegionPrincipal);
        for f in &out.fibers {
            assert!((f.norm() - 1.0).abs() < 1e-9);
        }
        out.validate().unwrap();
    }

    #[test]
    fn centroid_on_axis_falls_back_to_axis() {
        // A single tet centered exactly on the rotation axis.
        let mesh = TetMesh {
            vertices: vec![
                Point3::new(-0.5, -0.5, 0.0),
                Point3::new(0.5, -0.25, 0.0),
                Point3::new(0.0, 0.75, 0.0),
                Point3::new(0.0, 0.0, 1.0),
            ],
            tets: vec![[0, 1, 2, 3]],
            regions: vec![AtrialRegion::RightAtrium],
            fibers: vec![Vector3::x()],
        };
        let c = mesh.centroid(0);
        let rule = FiberRule::Circumferential {
            point: Point3::new(c.x, c.y, -5.0),
            axis: Vector3::z(),
        };
        let out = assign_fibers(&mesh, &rule);
        assert_eq!(out.fibers[0], Vector3::z());
    }
}
