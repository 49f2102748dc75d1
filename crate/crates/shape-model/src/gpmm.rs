//! Low-rank Gaussian-process deformation models of a reference mesh, and the
//! fit that establishes dense vertex correspondence with an aligned target.
//!
//! A model holds 3D deformation modes over the reference vertices. The scalar
//! kernel acts identically on x/y/z, so each scalar eigenpair expands into
//! three vector modes with the same eigenvalue. Deforming with coefficients α
//! moves vertex m by Σ_k α_k·√λ_k·φ_k(m).

use mesh_core::{Point3, SurfaceMesh, Vector3};

use crate::error::GpError;
use crate::kernel::KernelSpec;
use crate::lbfgs::{self, LbfgsConfig};
use crate::nystrom::nystrom_eigens;
use crate::spatial::PointGrid;

/// A rank-limited deformation model over a reference mesh.
#[derive(Debug, Clone)]
pub struct GpModel {
    pub reference: SurfaceMesh,
    /// Per-mode variance λ_k (mm²), non-increasing.
    pub eigenvalues: Vec<f64>,
    /// `modes[k][m]`: unit-norm 3D eigenfunction k at vertex m, orthonormal
    /// under the discrete vertex inner product.
    pub modes: Vec<Vec<Vector3<f64>>>,
    /// Fraction of the scalar kernel trace captured by the basis, if the
    /// model came from a kernel (None for constructed models).
    pub captured: Option<f64>,
}

impl GpModel {
    pub fn rank(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Same modes expressed on a different base mesh (same topology), used to
    /// chain sequential fits.
    pub fn rebased(&self, base: SurfaceMesh) -> Result<GpModel, GpError> {
        if base.vertex_count() != self.reference.vertex_count() {
            return Err(GpError::BaseMismatch {
                got: base.vertex_count(),
                expected: self.reference.vertex_count(),
            });
        }
        Ok(GpModel {
            reference: base,
            eigenvalues: self.eigenvalues.clone(),
            modes: self.modes.clone(),
            captured: self.captured,
        })
    }
}

#[derive(Debug, Clone)]
pub struct GpBuildOptions {
    /// Number of 3D deformation modes kept (three per scalar eigenpair).
    pub rank: usize,
    /// Landmark samples for the low-rank construction; capped at the vertex
    /// count.
    pub landmark_count: usize,
}

impl Default for GpBuildOptions {
    fn default() -> Self {
        GpBuildOptions {
            rank: 100,
            landmark_count: 1000,
        }
    }
}

/// Builds a low-rank deformation model for `spec` over `reference`.
pub fn build_low_rank_gp(
    reference: &SurfaceMesh,
    spec: &KernelSpec,
    opts: &GpBuildOptions,
) -> Result<GpModel, GpError> {
    let bound = spec.bind(reference)?;
    let scalar_rank = opts.rank.div_ceil(3);
    let basis = nystrom_eigens(&bound, opts.landmark_count, scalar_rank)?;

    let mut eigenvalues = Vec::with_capacity(opts.rank);
    let mut modes = Vec::with_capacity(opts.rank);
    'outer: for (lambda, phi) in basis.eigenvalues.iter().zip(&basis.functions) {
        for axis in 0..3 {
            if eigenvalues.len() == opts.rank {
                break 'outer;
            }
            let mut unit = Vector3::zeros();
            unit[axis] = 1.0;
            eigenvalues.push(*lambda);
            modes.push(phi.iter().map(|&v| unit * v).collect());
        }
    }

    Ok(GpModel {
        reference: reference.clone(),
        eigenvalues,
        modes,
        captured: Some(basis.captured_trace_fraction),
    })
}

/// Applies the deformation with coefficients `alpha` to the model reference.
pub fn gp_deform(model: &GpModel, alpha: &[f64]) -> Result<SurfaceMesh, GpError> {
    deform_vertices(model, &model.reference.vertices, alpha).map(|vertices| SurfaceMesh {
        vertices,
        triangles: model.reference.triangles.clone(),
        labels: model.reference.labels.clone(),
    })
}

fn deform_vertices(
    model: &GpModel,
    base: &[Point3<f64>],
    alpha: &[f64],
) -> Result<Vec<Point3<f64>>, GpError> {
    if alpha.len() != model.rank() {
        return Err(GpError::CoefficientLength {
            got: alpha.len(),
            rank: model.rank(),
        });
    }
    let mut out = base.to_vec();
    for (k, a) in alpha.iter().enumerate() {
        if *a == 0.0 {
            continue;
        }
        let scale = a * model.eigenvalues[k].sqrt();
        for (p, phi) in out.iter_mut().zip(&model.modes[k]) {
            p.coords += scale * phi;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct FitConfig {
    /// Tikhonov weight on ‖α‖² added to the mean squared pair distance.
    pub reg_weight: f64,
    /// Re-pairing rounds (nearest neighbors re-sought each round).
    pub outer_iterations: usize,
    /// Quasi-Newton settings for each fixed-pairing solve.
    pub lbfgs: LbfgsConfig,
    /// Stop outer rounds when the objective improves less than this (mm²).
    pub outer_tol: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            reg_weight: 1e-3,
            outer_iterations: 20,
            lbfgs: LbfgsConfig::default(),
            outer_tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FitResult {
    pub coefficients: Vec<f64>,
    pub deformed_reference: SurfaceMesh,
    /// Mean squared nearest-neighbor distance (mm²) of the final deformation.
    pub mse: f64,
    /// Total quasi-Newton iterations across all re-pairing rounds.
    pub iterations: usize,
    /// Objective (mse + reg·‖α‖²) at each accepted outer round.
    pub objective_history: Vec<f64>,
}

/// Fits the model to an aligned target by minimizing the mean squared
/// nearest-neighbor distance from the deformed reference to the target, plus
/// `reg_weight`·‖α‖². The deformed reference vertices are the correspondence.
pub fn fit_to_target(
    model: &GpModel,
    target: &SurfaceMesh,
    cfg: &FitConfig,
) -> Result<FitResult, GpError> {
    let start = vec![0.0; model.rank()];
    fit_with_base(model, &model.reference.vertices, target, &start, cfg)
}

/// Same fit warm-started from `initial` coefficients.
pub fn fit_to_target_from(
    model: &GpModel,
    target: &SurfaceMesh,
    initial: &[f64],
    cfg: &FitConfig,
) -> Result<FitResult, GpError> {
    if initial.len() != model.rank() {
        return Err(GpError::CoefficientLength {
            got: initial.len(),
            rank: model.rank(),
        });
    }
    fit_with_base(model, &model.reference.vertices, target, initial, cfg)
}

fn nn_mse(points: &[Point3<f64>], grid: &PointGrid) -> f64 {
    points.iter().map(|p| grid.nearest(p).1).sum::<f64>() / points.len() as f64
}

fn fit_with_base(
    model: &GpModel,
    base: &[Point3<f64>],
    target: &SurfaceMesh,
    initial: &[f64],
    cfg: &FitConfig,
) -> Result<FitResult, GpError> {
    if base.len() != model.reference.vertex_count() {
        return Err(GpError::BaseMismatch {
            got: base.len(),
            expected: model.reference.vertex_count(),
        });
    }
    let rank = model.rank();
    let m = base.len() as f64;
    let grid = PointGrid::build(&target.vertices);
    let sqrt_l: Vec<f64> = model.eigenvalues.iter().map(|l| l.sqrt()).collect();

    let mut alpha = initial.to_vec();
    let mut current = deform_vertices(model, base, &alpha)?;
    let mut objective =
        nn_mse(&current, &grid) + cfg.reg_weight * alpha.iter().map(|a| a * a).sum::<f64>();
    let mut history = vec![objective];
    let mut total_inner = 0usize;

    for _ in 0..cfg.outer_iterations {
        // Fix the pairing for a smooth inner problem.
        let pairs: Vec<u32> = current.iter().map(|p| grid.nearest(p).0).collect();
        let targets: Vec<Point3<f64>> = pairs
            .iter()
            .map(|&j| target.vertices[j as usize])
            .collect();

        let outcome = lbfgs::minimize(
            |a, g| {
                let deformed = deform_vertices(model, base, a).expect("rank checked");
                let residuals: Vec<Vector3<f64>> = deformed
                    .iter()
                    .zip(&targets)
                    .map(|(y, t)| y - t)
                    .collect();
                let mut value = residuals.iter().map(|r| r.norm_squared()).sum::<f64>() / m;
                for k in 0..rank {
                    let acc: f64 = residuals
                        .iter()
                        .zip(&model.modes[k])
                        .map(|(r, phi)| phi.dot(r))
                        .sum();
                    g[k] = 2.0 * sqrt_l[k] * acc / m + 2.0 * cfg.reg_weight * a[k];
                }
                value += cfg.reg_weight * a.iter().map(|ai| ai * ai).sum::<f64>();
                value
            },
            alpha.clone(),
            &cfg.lbfgs,
        );
        total_inner += outcome.iterations;
        if !outcome.value.is_finite() {
            return Err(GpError::Diverged {
                iterations: total_inner,
                history,
            });
        }
        alpha = outcome.x;
        current = deform_vertices(model, base, &alpha)?;

        let reg: f64 = cfg.reg_weight * alpha.iter().map(|a| a * a).sum::<f64>();
        let new_objective = nn_mse(&current, &grid) + reg;
        let improved = objective - new_objective;
        objective = new_objective.min(objective);
        history.push(objective);
        if improved < cfg.outer_tol {
            break;
        }
    }

    let mse = nn_mse(&current, &grid);
    Ok(FitResult {
        coefficients: alpha,
        deformed_reference: SurfaceMesh {
            vertices: current,
            triangles: model.reference.triangles.clone(),
            labels: model.reference.labels.clone(),
        },
        mse,
        iterations: total_inner,
        objective_history: history,
    })
}

/// Sequential multi-stage correspondence: each model is fitted in turn, the
/// deformed output of one stage becoming the base of the next. Stage order
/// is typically body, appendages, vein orientation.
pub fn establish_correspondence(
    stages: &[&GpModel],
    target: &SurfaceMesh,
    cfg: &FitConfig,
) -> Result<FitResult, GpError> {
    assert!(!stages.is_empty(), "need at least one stage model");
    let mut base = stages[0].reference.vertices.clone();
    let mut last: Option<FitResult> = None;
    let mut total_iterations = 0;
    let mut coefficients = Vec::new();
    for model in stages {
        let start = vec![0.0; model.rank()];
        let fit = fit_with_base(model, &base, target, &start, cfg)?;
        base = fit.deformed_reference.vertices.clone();
        total_iterations += fit.iterations;
        coefficients.extend_from_slice(&fit.coefficients);
        last = Some(fit);
    }
    let mut result = last.expect("at least one stage");
    result.iterations = total_iterations;
    result.coefficients = coefficients;
    Ok(result)
}
