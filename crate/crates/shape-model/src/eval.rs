//! Model quality metrics: generalization (leave-one-out reconstruction),
//! specificity (random samples vs. the training set), and compactness
//! (cumulative variance per mode count).

use mesh_core::ShapeVector;

use crate::error::PdmError;
use crate::pdm::{self, PdmModel};

/// Distribution summary of per-vertex distances for one instance, with
/// 1.5·IQR whiskers and the 95th percentile recorded explicitly.
#[derive(Debug, Clone)]
pub struct DistanceSummary {
    pub distances: Vec<f64>,
    pub mean: f64,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub p95: f64,
    pub whisker_low: f64,
    pub whisker_high: f64,
    pub outliers: Vec<f64>,
}

/// Linear-interpolation percentile on sorted data (`p` in [0, 1]).
fn percentile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

impl DistanceSummary {
    pub fn from_distances(distances: Vec<f64>) -> DistanceSummary {
        let mut sorted = distances.clone();
        sorted.sort_by(f64::total_cmp);
        let mean = sorted.iter().sum::<f64>() / sorted.len() as f64;
        let q1 = percentile_sorted(&sorted, 0.25);
        let median = percentile_sorted(&sorted, 0.5);
        let q3 = percentile_sorted(&sorted, 0.75);
        let p95 = percentile_sorted(&sorted, 0.95);
        let iqr = q3 - q1;
        let lo_fence = q1 - 1.5 * iqr;
        let hi_fence = q3 + 1.5 * iqr;
        let whisker_low = sorted
            .iter()
            .copied()
            .find(|&d| d >= lo_fence)
            .unwrap_or(sorted[0]);
        let whisker_high = sorted
            .iter()
            .rev()
            .copied()
            .find(|&d| d <= hi_fence)
            .unwrap_or(sorted[sorted.len() - 1]);
        let outliers = sorted
            .iter()
            .copied()
            .filter(|&d| d < lo_fence || d > hi_fence)
            .collect();
        DistanceSummary {
            distances,
            mean,
            median,
            q1,
            q3,
            p95,
            whisker_low,
            whisker_high,
            outliers,
        }
    }

    pub fn rmse(&self) -> f64 {
        rmse_of(&self.distances)
    }
}

/// Per-vertex Euclidean distances between two shapes of equal length.
pub fn vertex_distances(a: &ShapeVector, b: &ShapeVector) -> Result<Vec<f64>, PdmError> {
    if a.len() != b.len() {
        return Err(PdmError::ShapeLength {
            got: b.len(),
            expected: a.len(),
        });
    }
    Ok(a.coords
        .chunks_exact(3)
        .zip(b.coords.chunks_exact(3))
        .map(|(p, q)| {
            ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) + (p[2] - q[2]).powi(2)).sqrt()
        })
        .collect())
}

/// Root mean square of a distance list.
pub fn rmse_of(distances: &[f64]) -> f64 {
    (distances.iter().map(|d| d * d).sum::<f64>() / distances.len() as f64).sqrt()
}

/// Leave-one-out generalization: for each instance, a model is built on the
/// rest, the instance is projected and reconstructed (with all modes of the
/// reduced model, or `k_modes` if given), and the per-vertex distance
/// distribution is summarized.
pub fn generalization_loo(
    corpus: &[ShapeVector],
    k_modes: Option<usize>,
) -> Result<Vec<DistanceSummary>, PdmError> {
    if corpus.len() < 3 {
        return Err(PdmError::TooFewShapes(corpus.len()));
    }
    let mut out = Vec::with_capacity(corpus.len());
    for n in 0..corpus.len() {
        let reduced: Vec<ShapeVector> = corpus
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != n)
            .map(|(_, s)| s.clone())
            .collect();
        let model = pdm::build_pdm(&reduced, &[], None, None)?;
        let k = k_modes
            .unwrap_or(model.mode_count())
            .min(model.mode_count());
        let coeffs = pdm::project(&model, &corpus[n])?;
        let recon = pdm::reconstruct(&model, &coeffs, k)?;
        let distances = vertex_distances(&corpus[n], &recon)?;
        out.push(DistanceSummary::from_distances(distances));
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct SpecificityReport {
    /// Per-sample rmse to the closest corpus shape (mm).
    pub rmse: Vec<f64>,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    pub sd: f64,
}

fn mix_seed(master: u64, index: u64) -> u64 {
    // splitmix64 step keyed by the sample index.
    let mut z = master ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Draws `n_samples` uniform shapes and reports the rmse of each to its
/// closest training shape. Per-sample seeds derive from the master seed by
/// index, so parallel or reordered evaluation cannot change results.
pub fn specificity(
    model: &PdmModel,
    corpus: &[ShapeVector],
    n_samples: usize,
    seed: u64,
    bounds: Option<&[(f64, f64)]>,
) -> Result<SpecificityReport, PdmError> {
    let default_bounds = pdm::default_bounds(model);
    let bounds = bounds.unwrap_or(&default_bounds);
    let mut rmse = Vec::with_capacity(n_samples);
    for i in 0..n_samples {
        let (_, shape) = pdm::sample(model, mix_seed(seed, i as u64), bounds)?;
        let mut best = f64::INFINITY;
        for train in corpus {
            let d = rmse_of(&vertex_distances(&shape, train)?);
            best = best.min(d);
        }
        rmse.push(best);
    }
    let min = rmse.iter().copied().fold(f64::INFINITY, f64::min);
    let max = rmse.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mean = rmse.iter().sum::<f64>() / rmse.len() as f64;
    let var = rmse.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (rmse.len() - 1).max(1) as f64;
    Ok(SpecificityReport {
        rmse,
        min,
        max,
        mean,
        sd: var.sqrt(),
    })
}

/// Cumulative explained-variance curve; entry k−1 is Σ_{i≤k}σ²_i / Σσ²_i.
/// The final entry is exactly 1.
pub fn compactness(model: &PdmModel) -> Result<Vec<f64>, PdmError> {
    if model.mode_count() == 0 {
        return Err(PdmError::ZeroVariance);
    }
    let mut cum = Vec::with_capacity(model.mode_count());
    let mut acc = 0.0;
    for sigma2 in &model.eigenvalues {
        acc += sigma2;
        cum.push(acc);
    }
    let total = *cum.last().expect("non-empty");
    if total <= 0.0 {
        return Err(PdmError::ZeroVariance);
    }
    Ok(cum.into_iter().map(|c| c / total).collect())
}
