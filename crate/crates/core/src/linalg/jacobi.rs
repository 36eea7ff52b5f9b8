//! Cyclic Jacobi eigenvalue iteration for dense symmetric matrices.

use super::matrix::SymmetricMatrix;

/// Relative size below which an off-diagonal entry is not rotated away.
pub const ROTATION_THRESHOLD: f64 = 1e-12;
pub const MAX_SWEEPS: usize = 100;

/// Eigenvalues (unsorted, in diagonal order) and row-major eigenvector
/// matrix `v` with `v[k * n + j]` the k-th component of eigenvector `j`.
pub(crate) fn jacobi_eigen(a: &SymmetricMatrix) -> (Vec<f64>, Vec<f64>, usize) {
    let n = a.dim();
    let mut m = a.as_slice().to_vec();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    if n < 2 {
        return (m, v, 0);
    }

    // Skipped entries sum to at most ROTATION_THRESHOLD·‖A‖_F in Frobenius norm.
    let scale = a.frobenius_norm();
    let threshold = ROTATION_THRESHOLD * scale / n as f64;

    let mut sweeps = 0;
    while sweeps < MAX_SWEEPS {
        sweeps += 1;
        let mut rotated = false;
        for p in 0..n - 1 {
            for q in p + 1..n {
                let apq = m[p * n + q];
                if apq.abs() <= threshold {
                    continue;
                }
                rotated = true;
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;

                // A <- A J (columns p, q)
                for k in 0..n {
                    let akp = m[k * n + p];
                    let akq = m[k * n + q];
                    m[k * n + p] = c * akp - s * akq;
                    m[k * n + q] = s * akp + c * akq;
                }
                // A <- Jᵀ A (rows p, q)
                for k in 0..n {
                    let apk = m[p * n + k];
                    let aqk = m[q * n + k];
                    m[p * n + k] = c * apk - s * aqk;
                    m[q * n + k] = s * apk + c * aqk;
                }
                m[p * n + q] = 0.0;
                m[q * n + p] = 0.0;
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let values = (0..n).map(|i| m[i * n + i]).collect();
    (values, v, sweeps)
}
