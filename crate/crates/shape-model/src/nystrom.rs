//! Low-rank eigenbasis of a kernel operator over mesh vertices.
//!
//! The kernel matrix over all M vertices is approximated from a landmark
//! subset S as K ≈ C·K_SS⁻¹·Cᵀ with C = K(:, S), and the eigenpairs of that
//! approximation are computed exactly through an |S|×|S| problem. The
//! returned eigenfunctions are orthonormal under the plain discrete vertex
//! inner product (Σ_m f(m)·g(m)) to machine precision; eigenvalues are exact
//! when the landmarks cover all vertices.

use nalgebra::DMatrix;

use crate::error::GpError;
use crate::kernel::BoundKernel;

/// Scalar eigenpairs of the (approximated) kernel matrix, descending.
pub struct ScalarEigenBasis {
    pub eigenvalues: Vec<f64>,
    /// `functions[k][m]`: value of eigenfunction k at vertex m.
    pub functions: Vec<Vec<f64>>,
    /// Σ retained eigenvalues / trace of the full kernel matrix.
    pub captured_trace_fraction: f64,
}

/// Evenly spaced landmark indices: `floor(j·n/m)` for j in 0..m, which are
/// strictly increasing whenever m ≤ n.
pub fn even_landmarks(n: usize, m: usize) -> Vec<usize> {
    let m = m.min(n).max(1);
    (0..m).map(|j| j * n / m).collect()
}

/// Computes the leading `rank` eigenpairs from `landmark_count` samples.
pub fn nystrom_eigens(
    kernel: &BoundKernel,
    landmark_count: usize,
    rank: usize,
) -> Result<ScalarEigenBasis, GpError> {
    let n = kernel.len();
    let landmarks = even_landmarks(n, landmark_count);
    let m = landmarks.len();
    if rank > m {
        return Err(GpError::RankTooLarge {
            rank,
            available: m,
        });
    }

    let mut k_ss = DMatrix::<f64>::zeros(m, m);
    for a in 0..m {
        for b in a..m {
            let v = kernel.eval(landmarks[a], landmarks[b]);
            k_ss[(a, b)] = v;
            k_ss[(b, a)] = v;
        }
    }
    let trace_ss = k_ss.trace();

    let eig = k_ss.symmetric_eigen();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

    let worst = eig.eigenvalues[order[m - 1]];
    if worst < -1e-8 * trace_ss.max(1.0) {
        return Err(GpError::NotPositiveSemiDefinite { worst });
    }

    // Keep the numerically nonzero part of K_SS (pseudo-inverse cutoff).
    let lambda_max = eig.eigenvalues[order[0]].max(0.0);
    let kept: Vec<usize> = order
        .iter()
        .copied()
        .filter(|&i| eig.eigenvalues[i] > 1e-12 * lambda_max && eig.eigenvalues[i] > 0.0)
        .collect();
    if kept.is_empty() {
        return Err(GpError::NotPositiveSemiDefinite { worst: lambda_max });
    }
    let p = kept.len();

    // Z = C · U · Λ^{-1/2}  (n×p), so the approximated matrix is Z·Zᵀ.
    let mut c = DMatrix::<f64>::zeros(n, m);
    for i in 0..n {
        for (b, &lm) in landmarks.iter().enumerate() {
            c[(i, b)] = kernel.eval(i, lm);
        }
    }
    let mut u_scaled = DMatrix::<f64>::zeros(m, p);
    for (col, &i) in kept.iter().enumerate() {
        let scale = 1.0 / eig.eigenvalues[i].sqrt();
        for row in 0..m {
            u_scaled[(row, col)] = eig.eigenvectors[(row, i)] * scale;
        }
    }
    let z = c * u_scaled;

    // Exact eigenpairs of Z·Zᵀ via the p×p Gram matrix.
    let gram = z.transpose() * &z;
    let inner = gram.symmetric_eigen();
    let mut inner_order: Vec<usize> = (0..p).collect();
    inner_order.sort_by(|&a, &b| inner.eigenvalues[b].total_cmp(&inner.eigenvalues[a]));

    let take = rank.min(p);
    let mut eigenvalues = Vec::with_capacity(take);
    let mut functions = Vec::with_capacity(take);
    for &i in inner_order.iter().take(take) {
        let theta = inner.eigenvalues[i].max(0.0);
        if theta <= 0.0 {
            break;
        }
        // v = Z q / sqrt(theta) is a unit eigenvector of Z·Zᵀ.
        let q = inner.eigenvectors.column(i);
        let v = (&z * q) / theta.sqrt();
        eigenvalues.push(theta);
        functions.push(v.iter().copied().collect());
    }

    let captured_trace_fraction = eigenvalues.iter().sum::<f64>() / kernel.trace();
    Ok(ScalarEigenBasis {
        eigenvalues,
        functions,
        captured_trace_fraction,
    })
}
