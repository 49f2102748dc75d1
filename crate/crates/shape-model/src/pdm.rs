//! PCA point-distribution model: build from a corpus of corresponded shape
//! vectors, project shapes to coefficients, reconstruct, and sample.
//!
//! The eigendecomposition runs in the N-dimensional dual space (Gram matrix
//! of the centered shape vectors) since the coordinate dimension 3M is far
//! larger than the corpus size N. Sample covariance uses divisor N−1; the
//! divisor is recorded in the model and its file header.

use mesh_core::{RegionLabel, ShapeVector};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::PdmError;

/// Unitless standardized mode weights; entry k multiplies √σ²_k·v_k.
#[derive(Debug, Clone, PartialEq)]
pub struct Coefficients {
    pub r: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct PdmModel {
    pub mean: ShapeVector,
    /// Mode variances σ²_k (mm²), non-increasing.
    pub eigenvalues: Vec<f64>,
    /// Unit-norm, mutually orthogonal basis vectors, one per mode.
    pub eigenvectors: Vec<Vec<f64>>,
    pub topology: Vec<[u32; 3]>,
    pub vertex_labels: Option<Vec<RegionLabel>>,
    /// Corpus size the model was built from.
    pub corpus_size: usize,
    /// Covariance divisor (N−1).
    pub covariance_divisor: usize,
}

impl PdmModel {
    pub fn mode_count(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn dimension(&self) -> usize {
        self.mean.len()
    }
}

/// Removes masked-out vertices from a shape vector.
fn apply_mask(coords: &[f64], keep: &[bool]) -> Vec<f64> {
    let mut out = Vec::with_capacity(coords.len());
    for (m, &k) in keep.iter().enumerate() {
        if k {
            out.extend_from_slice(&coords[3 * m..3 * m + 3]);
        }
    }
    out
}

/// Filters topology to triangles whose vertices are all kept, remapping
/// indices to the compacted vertex order.
fn mask_topology(topology: &[[u32; 3]], keep: &[bool]) -> Vec<[u32; 3]> {
    let mut remap = vec![u32::MAX; keep.len()];
    let mut next = 0u32;
    for (m, &k) in keep.iter().enumerate() {
        if k {
            remap[m] = next;
            next += 1;
        }
    }
    topology
        .iter()
        .filter(|tri| tri.iter().all(|&i| keep[i as usize]))
        .map(|tri| [remap[tri[0] as usize], remap[tri[1] as usize], remap[tri[2] as usize]])
        .collect()
}

/// Builds the model. `vertex_mask`, when given, discards vertices before the
/// PCA (the cut applied to distal structures); `true` keeps a vertex.
pub fn build_pdm(
    corpus: &[ShapeVector],
    topology: &[[u32; 3]],
    vertex_labels: Option<&[RegionLabel]>,
    vertex_mask: Option<&[bool]>,
) -> Result<PdmModel, PdmError> {
    let n = corpus.len();
    if n < 2 {
        return Err(PdmError::TooFewShapes(n));
    }
    let raw_len = corpus[0].len();
    for (index, s) in corpus.iter().enumerate() {
        if s.len() != raw_len {
            return Err(PdmError::LengthMismatch {
                index,
                got: s.len(),
                expected: raw_len,
            });
        }
    }
    if let Some(mask) = vertex_mask {
        if mask.len() != raw_len / 3 {
            return Err(PdmError::MaskLength {
                got: mask.len(),
                expected: raw_len / 3,
            });
        }
    }

    let data: Vec<Vec<f64>> = match vertex_mask {
        Some(mask) => corpus.iter().map(|s| apply_mask(&s.coords, mask)).collect(),
        None => corpus.iter().map(|s| s.coords.clone()).collect(),
    };
    let topology = match vertex_mask {
        Some(mask) => mask_topology(topology, mask),
        None => topology.to_vec(),
    };
    let labels = vertex_labels.map(|l| match vertex_mask {
        Some(mask) => l
            .iter()
            .zip(mask)
            .filter(|(_, &k)| k)
            .map(|(&lab, _)| lab)
            .collect(),
        None => l.to_vec(),
    });

    let dim = data[0].len();
    let mut mean = vec![0.0; dim];
    for s in &data {
        for (m, v) in mean.iter_mut().zip(s) {
            *m += v;
        }
    }
    for m in mean.iter_mut() {
        *m /= n as f64;
    }

    // Centered rows; Gram matrix in the N-dimensional dual space.
    let centered: Vec<Vec<f64>> = data
        .iter()
        .map(|s| s.iter().zip(&mean).map(|(v, m)| v - m).collect())
        .collect();
    let divisor = (n - 1) as f64;
    let mut gram = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let dot: f64 = centered[i].iter().zip(&centered[j]).map(|(a, b)| a * b).sum();
            gram[(i, j)] = dot / divisor;
            gram[(j, i)] = gram[(i, j)];
        }
    }

    let eig = gram.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

    let lambda_max = eig.eigenvalues[order[0]].max(0.0);
    let cutoff = 1e-12 * lambda_max;
    let mut eigenvalues = Vec::new();
    let mut eigenvectors = Vec::new();
    for &i in order.iter().take(n - 1) {
        let lambda = eig.eigenvalues[i];
        if lambda <= cutoff {
            break;
        }
        // v = Xᵀ w / ‖Xᵀ w‖; with Gw = λw the norm is √((N−1)·λ).
        let mut v = vec![0.0; dim];
        for (row, c) in centered.iter().enumerate() {
            let w = eig.eigenvectors[(row, i)];
            if w != 0.0 {
                for (vj, cj) in v.iter_mut().zip(c) {
                    *vj += w * cj;
                }
            }
        }
        let norm = (divisor * lambda).sqrt();
        for vj in v.iter_mut() {
            *vj /= norm;
        }
        // Deterministic sign: the largest-magnitude component is positive.
        let (imax, _) = v
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            .expect("non-empty eigenvector");
        if v[imax] < 0.0 {
            for vj in v.iter_mut() {
                *vj = -*vj;
            }
        }
        eigenvalues.push(lambda);
        eigenvectors.push(v);
    }

    Ok(PdmModel {
        mean: ShapeVector { coords: mean },
        eigenvalues,
        eigenvectors,
        topology,
        vertex_labels: labels,
        corpus_size: n,
        covariance_divisor: n - 1,
    })
}

/// Least-squares coefficients of `shape` in the model basis. Because the
/// basis is orthonormal these are plain projections onto each mode.
pub fn project(model: &PdmModel, shape: &ShapeVector) -> Result<Coefficients, PdmError> {
    if shape.len() != model.dimension() {
        return Err(PdmError::ShapeLength {
            got: shape.len(),
            expected: model.dimension(),
        });
    }
    let centered: Vec<f64> = shape
        .coords
        .iter()
        .zip(&model.mean.coords)
        .map(|(s, m)| s - m)
        .collect();
    let r = model
        .eigenvectors
        .iter()
        .zip(&model.eigenvalues)
        .map(|(v, &sigma2)| {
            let dot: f64 = v.iter().zip(&centered).map(|(a, b)| a * b).sum();
            dot / sigma2.sqrt()
        })
        .collect();
    Ok(Coefficients { r })
}

/// Mean + Σ_{k<k_modes} r_k·√σ²_k·v_k.
pub fn reconstruct(
    model: &PdmModel,
    coefficients: &Coefficients,
    k_modes: usize,
) -> Result<ShapeVector, PdmError> {
    if k_modes > model.mode_count() {
        return Err(PdmError::ModeCount {
            requested: k_modes,
            available: model.mode_count(),
        });
    }
    if coefficients.r.len() < k_modes {
        return Err(PdmError::CoefficientLength {
            got: coefficients.r.len(),
            needed: k_modes,
        });
    }
    let mut coords = model.mean.coords.clone();
    for k in 0..k_modes {
        let scale = coefficients.r[k] * model.eigenvalues[k].sqrt();
        if scale == 0.0 {
            continue;
        }
        for (c, v) in coords.iter_mut().zip(&model.eigenvectors[k]) {
            *c += scale * v;
        }
    }
    Ok(ShapeVector { coords })
}

/// Draws one uniform sample of the coefficients within `bounds` (one closed
/// interval per mode) and reconstructs it. Deterministic for a given seed.
pub fn sample(
    model: &PdmModel,
    seed: u64,
    bounds: &[(f64, f64)],
) -> Result<(Coefficients, ShapeVector), PdmError> {
    if bounds.len() != model.mode_count() {
        return Err(PdmError::CoefficientLength {
            got: bounds.len(),
            needed: model.mode_count(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r: Vec<f64> = bounds
        .iter()
        .map(|&(lo, hi)| {
            if lo == hi {
                lo
            } else {
                rng.random_range(lo..=hi)
            }
        })
        .collect();
    let coefficients = Coefficients { r };
    let shape = reconstruct(model, &coefficients, model.mode_count())?;
    Ok((coefficients, shape))
}

/// The default sampling interval [−3, +3] for every mode.
pub fn default_bounds(model: &PdmModel) -> Vec<(f64, f64)> {
    vec![(-3.0, 3.0); model.mode_count()]
}

/// Per-mode [min, max] of the training coefficients, the empirical sampling
/// range used for simulation batches.
pub fn empirical_bounds(
    model: &PdmModel,
    corpus: &[ShapeVector],
) -> Result<Vec<(f64, f64)>, PdmError> {
    let mut bounds = vec![(f64::INFINITY, f64::NEG_INFINITY); model.mode_count()];
    for shape in corpus {
        let c = project(model, shape)?;
        for (b, r) in bounds.iter_mut().zip(&c.r) {
            b.0 = b.0.min(*r);
            b.1 = b.1.max(*r);
        }
    }
    Ok(bounds)
}

/// Smallest k with Σ_{i≤k} σ²_i / Σ σ²_i ≥ fraction.
pub fn modes_for_variance(model: &PdmModel, fraction: f64) -> Result<usize, PdmError> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(PdmError::BadFraction(fraction));
    }
    let total: f64 = model.eigenvalues.iter().sum();
    if total <= 0.0 {
        return Err(PdmError::ZeroVariance);
    }
    let mut cum = 0.0;
    for (k, sigma2) in model.eigenvalues.iter().enumerate() {
        cum += sigma2;
        if cum / total >= fraction {
            return Ok(k + 1);
        }
    }
    Ok(model.mode_count())
}
