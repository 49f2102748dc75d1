//! Iterative closest point alignment with an orthogonal-Procrustes inner step.
//!
//! Correspondences are sought from the moving shape to the reference (each
//! moving vertex pairs with its nearest reference vertex), then the rigid
//! transform minimizing the summed squared pair distances is applied. Scale
//! is never estimated and reflections are rejected.

use mesh_core::{Point3, RigidTransform, SurfaceMesh, Vector3};

use crate::error::AlignError;
use crate::spatial::PointGrid;

#[derive(Debug, Clone)]
pub struct IcpConfig {
    /// Hard iteration cap.
    pub max_iterations: usize,
    /// Convergence on the absolute change of the mean residual within one
    /// iteration (mm). Zero disables convergence, running to the cap.
    pub convergence_tol: f64,
    /// Fraction in [0, 1) of the worst pairs discarded before Procrustes.
    pub trim_fraction: f64,
}

impl Default for IcpConfig {
    fn default() -> Self {
        IcpConfig {
            max_iterations: 150,
            convergence_tol: 1e-4,
            trim_fraction: 0.0,
        }
    }
}

impl IcpConfig {
    pub fn validate(&self) -> Result<(), AlignError> {
        if self.max_iterations < 1 {
            return Err(AlignError::BadConfig("max_iterations must be >= 1".into()));
        }
        if !(self.convergence_tol >= 0.0 && self.convergence_tol.is_finite()) {
            return Err(AlignError::BadConfig("convergence_tol must be finite and >= 0".into()));
        }
        if !(0.0..1.0).contains(&self.trim_fraction) {
            return Err(AlignError::BadConfig("trim_fraction must be in [0, 1)".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct IcpReport {
    pub iterations_run: usize,
    /// Mean pair distance (mm) recorded at pairing time, one per iteration.
    pub residual_history: Vec<f64>,
    pub final_transform: RigidTransform,
}

/// Rigid transform minimizing Σ‖R·p_i + t − q_i‖² over proper rotations and
/// translations (Kabsch). Reflections are folded back to rotations, so the
/// returned rotation always has det = +1.
pub fn procrustes_rigid(
    source: &[Point3<f64>],
    target: &[Point3<f64>],
) -> Result<RigidTransform, AlignError> {
    if source.len() != target.len() {
        return Err(AlignError::CountMismatch {
            source_count: source.len(),
            target_count: target.len(),
        });
    }
    if source.len() < 3 {
        return Err(AlignError::TooFewPoints(source.len()));
    }
    let n = source.len() as f64;
    let s_mean: Vector3<f64> = source.iter().map(|p| p.coords).sum::<Vector3<f64>>() / n;
    let t_mean: Vector3<f64> = target.iter().map(|p| p.coords).sum::<Vector3<f64>>() / n;

    // Cross-covariance H = Σ (p−p̄)(q−q̄)ᵀ.
    let mut h = nalgebra::Matrix3::<f64>::zeros();
    for (p, q) in source.iter().zip(target) {
        let sc = p.coords - s_mean;
        let tc = q.coords - t_mean;
        h += sc * tc.transpose();
    }

    let svd = h.svd(true, true);
    let u = svd.u.expect("svd with u requested");
    let v_t = svd.v_t.expect("svd with v_t requested");
    let sv = svd.singular_values;
    if sv[0] <= 0.0 || sv[1] / sv[0] <= 1e-12 {
        return Err(AlignError::Degenerate {
            ratio: if sv[0] > 0.0 { sv[1] / sv[0] } else { 0.0 },
        });
    }

    let v = v_t.transpose();
    let d = (v * u.transpose()).determinant();
    let correction = nalgebra::Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, d.signum()));
    let rotation = v * correction * u.transpose();
    let translation = t_mean - rotation * s_mean;
    Ok(RigidTransform {
        rotation,
        translation,
    })
}

/// For each moving vertex, the index of the nearest reference vertex
/// (Euclidean; ties broken by lowest index). Exact.
pub fn nearest_correspondences(
    moving: &SurfaceMesh,
    reference: &SurfaceMesh,
) -> Result<Vec<u32>, AlignError> {
    if moving.vertices.is_empty() || reference.vertices.is_empty() {
        return Err(AlignError::EmptyMesh);
    }
    let grid = PointGrid::build(&reference.vertices);
    Ok(moving
        .vertices
        .iter()
        .map(|p| grid.nearest(p).0)
        .collect())
}

/// Aligns `moving` onto `reference`, returning the transformed mesh and a
/// per-iteration report. Stops at `convergence_tol` or `max_iterations`,
/// whichever comes first.
pub fn icp_align(
    moving: &SurfaceMesh,
    reference: &SurfaceMesh,
    cfg: &IcpConfig,
) -> Result<(SurfaceMesh, IcpReport), AlignError> {
    cfg.validate()?;
    if moving.vertices.is_empty() || reference.vertices.is_empty() {
        return Err(AlignError::EmptyMesh);
    }

    let grid = PointGrid::build(&reference.vertices);

    // Centroid pre-alignment: the translation part of the first Procrustes
    // step under an identity pairing. Removes gross offset so the
    // nearest-neighbor pairing starts meaningfully.
    let centroid = |pts: &[Point3<f64>]| -> Vector3<f64> {
        pts.iter().map(|p| p.coords).sum::<Vector3<f64>>() / pts.len() as f64
    };
    let mut cumulative = RigidTransform {
        rotation: nalgebra::Matrix3::identity(),
        translation: centroid(&reference.vertices) - centroid(&moving.vertices),
    };
    let mut current: Vec<Point3<f64>> =
        moving.vertices.iter().map(|p| cumulative.apply(p)).collect();
    let mut history = Vec::new();

    for _ in 0..cfg.max_iterations {
        // Pair and (optionally) trim the worst pairs.
        let mut pairs: Vec<(usize, u32, f64)> = current
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let (j, d2) = grid.nearest(p);
                (i, j, d2)
            })
            .collect();
        let kept = if cfg.trim_fraction > 0.0 {
            pairs.sort_by(|a, b| a.2.total_cmp(&b.2));
            let keep = ((pairs.len() as f64) * (1.0 - cfg.trim_fraction)).ceil() as usize;
            pairs.truncate(keep.max(3));
            pairs
        } else {
            pairs
        };

        let residual =
            kept.iter().map(|&(_, _, d2)| d2.sqrt()).sum::<f64>() / kept.len() as f64;
        let previous = history.last().copied();
        history.push(residual);

        // Converged: the mean residual stopped changing between iterations,
        // or the alignment is exact.
        if residual == 0.0 {
            break;
        }
        if let Some(prev) = previous {
            if (prev - residual).abs() < cfg.convergence_tol {
                break;
            }
        }

        let src: Vec<Point3<f64>> = kept.iter().map(|&(i, _, _)| current[i]).collect();
        let dst: Vec<Point3<f64>> = kept
            .iter()
            .map(|&(_, j, _)| reference.vertices[j as usize])
            .collect();
        let step = procrustes_rigid(&src, &dst)?;

        for p in &mut current {
            *p = step.apply(p);
        }
        cumulative = step.compose(&cumulative);
    }

    let aligned = moving.transformed(&cumulative);
    let report = IcpReport {
        iterations_run: history.len(),
        residual_history: history,
        final_transform: cumulative,
    };
    Ok((aligned, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use mesh_core::primitives::bumpy_sphere;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn phantom() -> SurfaceMesh {
        mesh_core::primitives::two_lobe_phantom(25.0, 3)
    }

    fn random_rigid(rng: &mut ChaCha8Rng, max_angle_deg: f64, max_trans: f64) -> RigidTransform {
        let axis = Vector3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        let angle = rng.random_range(-max_angle_deg..max_angle_deg).to_radians();
        let t = Vector3::new(
            rng.random_range(-max_trans..max_trans),
            rng.random_range(-max_trans..max_trans),
            rng.random_range(-max_trans..max_trans),
        );
        RigidTransform::from_axis_angle(&axis, angle, t)
    }

    #[test]
    fn identical_point_sets_give_identity() {
        let pts: Vec<Point3<f64>> = phantom().vertices;
        let t = procrustes_rigid(&pts, &pts).unwrap();
        assert_relative_eq!(t.rotation, nalgebra::Matrix3::identity(), epsilon = 1e-10);
        assert_relative_eq!(t.translation.norm(), 0.0, epsilon = 1e-10);
    }

    #[test]
    fn recovers_known_transform() {
        let pts = phantom().vertices;
        let truth = RigidTransform::from_axis_angle(
            &Vector3::z(),
            30.0f64.to_radians(),
            Vector3::new(5.0, 0.0, 0.0),
        );
        let moved: Vec<Point3<f64>> = pts.iter().map(|p| truth.apply(p)).collect();
        let est = procrustes_rigid(&pts, &moved).unwrap();
        assert_relative_eq!(est.rotation, truth.rotation, epsilon = 1e-8);
        assert_relative_eq!(est.translation, truth.translation, epsilon = 1e-8);
    }

    #[test]
    fn reflection_is_rejected_det_stays_positive() {
        let pts = phantom().vertices;
        let mirrored: Vec<Point3<f64>> = pts
            .iter()
            .map(|p| Point3::new(-p.x, p.y, p.z))
            .collect();
        let est = procrustes_rigid(&pts, &mirrored).unwrap();
        assert!(est.rotation.determinant() > 0.999999999);
        est.validate().unwrap();
        // A reflection cannot be reproduced by a rotation: residual stays > 0.
        let residual: f64 = pts
            .iter()
            .zip(&mirrored)
            .map(|(p, q)| (est.apply(p) - q).norm_squared())
            .sum();
        assert!(residual > 1.0);
    }

    #[test]
    fn too_few_and_collinear_points_error() {
        let two = vec![Point3::origin(), Point3::new(1.0, 0.0, 0.0)];
        assert!(matches!(
            procrustes_rigid(&two, &two),
            Err(AlignError::TooFewPoints(2))
        ));
        let line: Vec<Point3<f64>> = (0..5).map(|i| Point3::new(i as f64, 0.0, 0.0)).collect();
        assert!(matches!(
            procrustes_rigid(&line, &line),
            Err(AlignError::Degenerate { .. })
        ));
    }

    #[test]
    fn procrustes_rotation_is_proper_for_random_inputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let src: Vec<Point3<f64>> = (0..20)
                .map(|_| {
                    Point3::new(
                        rng.random_range(-10.0..10.0),
                        rng.random_range(-10.0..10.0),
                        rng.random_range(-10.0..10.0),
                    )
                })
                .collect();
            let dst: Vec<Point3<f64>> = (0..20)
                .map(|_| {
                    Point3::new(
                        rng.random_range(-10.0..10.0),
                        rng.random_range(-10.0..10.0),
                        rng.random_range(-10.0..10.0),
                    )
                })
                .collect();
            let t = procrustes_rigid(&src, &dst).unwrap();
            t.validate().unwrap();
        }
    }

    #[test]
    fn identity_pairing_on_equal_meshes() {
        let mesh = phantom();
        let pairs = nearest_correspondences(&mesh, &mesh).unwrap();
        for (i, &j) in pairs.iter().enumerate() {
            assert_eq!(i as u32, j);
        }
    }

    #[test]
    fn pairing_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let cloud = |rng: &mut ChaCha8Rng, n: usize| -> Vec<Point3<f64>> {
            (0..n)
                .map(|_| {
                    Point3::new(
                        rng.random_range(-20.0..20.0),
                        rng.random_range(-20.0..20.0),
                        rng.random_range(-20.0..20.0),
                    )
                })
                .collect()
        };
        let moving = SurfaceMesh {
            vertices: cloud(&mut rng, 500),
            triangles: vec![],
            labels: None,
        };
        let reference = SurfaceMesh {
            vertices: cloud(&mut rng, 500),
            triangles: vec![],
            labels: None,
        };
        let pairs = nearest_correspondences(&moving, &reference).unwrap();
        for (i, q) in moving.vertices.iter().enumerate() {
            let mut best = (0u32, f64::INFINITY);
            for (j, p) in reference.vertices.iter().enumerate() {
                let d2 = (p - q).norm_squared();
                if d2 < best.1 {
                    best = (j as u32, d2);
                }
            }
            assert_eq!(pairs[i], best.0);
        }
    }

    #[test]
    fn already_aligned_stops_after_one_iteration() {
        let mesh = phantom();
        let (_, report) = icp_align(&mesh, &mesh, &IcpConfig::default()).unwrap();
        assert_eq!(report.iterations_run, 1);
        assert!(report.final_transform.rotation_angle() < 1e-9);
        assert!(report.final_transform.translation.norm() < 1e-9);
    }

    #[test]
    fn recovers_random_rigid_perturbations() {
        let reference = phantom();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..10 {
            let truth = random_rigid(&mut rng, 30.0, 20.0);
            let moving = reference.transformed(&truth);
            let (aligned, report) = icp_align(&moving, &reference, &IcpConfig::default()).unwrap();
            assert!(report.iterations_run <= 150);
            let recovered = report.final_transform;
            let expected = truth.inverse();
            let rot_err_deg = recovered.rotation_angle_to(&expected).to_degrees();
            let trans_err = (recovered.translation - expected.translation).norm();
            assert!(rot_err_deg < 0.5, "rotation error {rot_err_deg}°");
            assert!(trans_err < 0.1, "translation error {trans_err} mm");
            let max_vertex_err = aligned
                .vertices
                .iter()
                .zip(&reference.vertices)
                .map(|(a, b)| (a - b).norm())
                .fold(0.0f64, f64::max);
            assert!(max_vertex_err < 0.1);
        }
    }

    #[test]
    fn zero_tol_runs_exactly_the_iteration_cap() {
        let reference = phantom();
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let moving = reference.transformed(&random_rigid(&mut rng, 20.0, 10.0));
        let cfg = IcpConfig {
            convergence_tol: 0.0,
            ..IcpConfig::default()
        };
        let (_, report) = icp_align(&moving, &reference, &cfg).unwrap();
        assert_eq!(report.iterations_run, 150);
        assert_eq!(report.residual_history.len(), 150);
    }

    #[test]
    fn residual_history_is_non_increasing() {
        let reference = phantom();
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let moving = reference.transformed(&random_rigid(&mut rng, 30.0, 15.0));
        let (_, report) = icp_align(&moving, &reference, &IcpConfig::default()).unwrap();
        for w in report.residual_history.windows(2) {
            assert!(w[1] <= w[0] + 1e-9, "residual increased: {} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn invariant_to_global_rigid_pretransform() {
        let reference = phantom();
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        let moving = reference.transformed(&random_rigid(&mut rng, 25.0, 10.0));
        let (_, base_report) = icp_align(&moving, &reference, &IcpConfig::default()).unwrap();

        let global = random_rigid(&mut rng, 40.0, 30.0);
        let (_, moved_report) = icp_align(
            &moving.transformed(&global),
            &reference.transformed(&global),
            &IcpConfig::default(),
        )
        .unwrap();

        assert_eq!(
            base_report.residual_history.len(),
            moved_report.residual_history.len()
        );
        for (a, b) in base_report
            .residual_history
            .iter()
            .zip(&moved_report.residual_history)
        {
            assert!((a - b).abs() < 1e-6, "histories differ: {a} vs {b}");
        }
    }
}
