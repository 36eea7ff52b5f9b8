//! Dense symmetric linear algebra: eigendecompositions, the projection onto
//! the 1-Fantope `{P = Pᵀ, tr P = 1, 0 ⪯ P ⪯ I}` and entrywise soft
//! thresholding.
//!
//! Eigenvectors follow one sign convention everywhere: the entry of largest
//! magnitude is positive, and among equal magnitudes the lowest index wins.

mod jacobi;
mod matrix;
mod tridiag;

pub use jacobi::{MAX_SWEEPS, ROTATION_THRESHOLD};
pub use matrix::{axpy, dot, norm2, Matrix, SymmetricMatrix};

use crate::error::{Error, Result};
use tridiag::Tridiagonal;

/// Diagonal entries with `|P_ii|` above this count towards the support.
pub const DEFAULT_SUPP_TOL: f64 = 1e-8;

/// The Fantope projection uses inverse iteration while at most
/// `max(8, p / PARTIAL_EIGEN_FRACTION)` eigenpairs are active, and a full
/// Jacobi decomposition beyond that.
const PARTIAL_EIGEN_FRACTION: usize = 2;

/// `A = V diag(values) Vᵀ` with values sorted descending.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenDecomposition {
    pub values: Vec<f64>,
    /// Row-major `p × p`; column `j` is the eigenvector of `values[j]`.
    pub vectors: Matrix,
    /// Jacobi sweeps used.
    pub sweeps: usize,
}

impl EigenDecomposition {
    pub fn vector(&self, j: usize) -> Vec<f64> {
        self.vectors.column(j)
    }

    /// `V diag(values) Vᵀ`.
    pub fn reconstruct(&self) -> SymmetricMatrix {
        self.reconstruct_with(&self.values)
    }

    /// `V diag(weights) Vᵀ`.
    pub fn reconstruct_with(&self, weights: &[f64]) -> SymmetricMatrix {
        let cols: Vec<Vec<f64>> = (0..self.values.len()).map(|j| self.vector(j)).collect();
        let terms: Vec<(f64, &[f64])> = weights
            .iter()
            .zip(&cols)
            .filter(|(w, _)| **w != 0.0)
            .map(|(&w, v)| (w, v.as_slice()))
            .collect();
        SymmetricMatrix::from_outer_products(self.values.len(), &terms)
    }
}

fn check_finite(a: &SymmetricMatrix, what: &str) -> Result<()> {
    if a.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite(what.to_string()))
    }
}

/// Flips `v` so that its largest-magnitude entry (lowest index on ties) is positive.
pub fn canonical_sign(v: &mut [f64]) {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v.get(best).is_some_and(|&x| x < 0.0) {
        for x in v.iter_mut() {
            *x = -*x;
        }
    }
}

/// Full eigendecomposition by cyclic Jacobi rotations.
pub fn sym_eig(a: &SymmetricMatrix) -> Result<EigenDecomposition> {
    check_finite(a, "sym_eig input")?;
    let n = a.dim();
    let (values, v, sweeps) = jacobi::jacobi_eigen(a);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| values[j].total_cmp(&values[i]));

    let mut vectors = Matrix::zeros(n, n);
    let mut sorted = Vec::with_capacity(n);
    for (col, &src) in order.iter().enumerate() {
        let mut x: Vec<f64> = (0..n).map(|k| v[k * n + src]).collect();
        canonical_sign(&mut x);
        for (k, xk) in x.into_iter().enumerate() {
            vectors[(k, col)] = xk;
        }
        sorted.push(values[src]);
    }
    Ok(EigenDecomposition {
        values: sorted,
        vectors,
        sweeps,
    })
}

/// All eigenvalues, descending, via tridiagonal QL.
pub fn eigenvalues(a: &SymmetricMatrix) -> Result<Vec<f64>> {
    check_finite(a, "eigenvalues input")?;
    let t = Tridiagonal::reduce(a);
    Ok(t.eigenvalues()?.into_iter().map(|(v, _)| v).collect())
}

/// All eigenvalues (descending) and unit eigenvectors for the `k` largest.
///
/// Uses Householder reduction and inverse iteration, so it is much cheaper
/// than [`sym_eig`] when `k ≪ p`.
pub fn top_eigenpairs(a: &SymmetricMatrix, k: usize) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    check_finite(a, "top_eigenpairs input")?;
    let t = Tridiagonal::reduce(a);
    let tagged = t.eigenvalues()?;
    let k = k.min(tagged.len());
    let mut vectors = t.eigenvectors(&tagged[..k]);
    for v in vectors.iter_mut() {
        canonical_sign(v);
    }
    if vectors.iter().flatten().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("inverse iteration".into()));
    }
    Ok((tagged.into_iter().map(|(v, _)| v).collect(), vectors))
}

/// Unit eigenvector of the largest eigenvalue.
pub fn leading_eigenvector(a: &SymmetricMatrix) -> Result<Vec<f64>> {
    if a.dim() == 0 {
        return Err(Error::InvalidParameter("empty matrix".into()));
    }
    let (_, mut vecs) = top_eigenpairs(a, 1)?;
    Ok(vecs.remove(0))
}

/// Euclidean projection onto `{γ : 0 ≤ γ_i ≤ 1, Σ γ_i = 1}`.
///
/// Sort-based simplex projection; for unit trace the upper cap can only be
/// reached at a vertex, where the simplex projection already satisfies it.
pub fn capped_simplex_projection(v: &[f64]) -> Vec<f64> {
    if v.is_empty() {
        return Vec::new();
    }
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut shift = 0.0;
    for (k, &x) in sorted.iter().enumerate() {
        cumulative += x;
        let t = (cumulative - 1.0) / (k + 1) as f64;
        if x - t > 0.0 {
            shift = t;
        } else {
            break;
        }
    }
    v.iter().map(|&x| (x - shift).clamp(0.0, 1.0)).collect()
}

/// A symmetric matrix in the 1-Fantope together with its diagonal support.
#[derive(Debug, Clone, PartialEq)]
pub struct FantopeCandidate {
    pub matrix: SymmetricMatrix,
    /// `{i : |P_ii| > tol}`, sorted.
    pub support: Vec<usize>,
}

impl FantopeCandidate {
    pub fn new(matrix: SymmetricMatrix, supp_tol: f64) -> Self {
        let support = diagonal_support(&matrix, supp_tol);
        Self { matrix, support }
    }
}

/// `{i : |A_ii| > tol}`.
pub fn diagonal_support(a: &SymmetricMatrix, tol: f64) -> Vec<usize> {
    (0..a.dim()).filter(|&i| a.get(i, i).abs() > tol).collect()
}

/// Frobenius-nearest point of the 1-Fantope.
pub fn fantope1_projection(a: &SymmetricMatrix) -> Result<FantopeCandidate> {
    Ok(FantopeCandidate::new(
        fantope1_project(a)?,
        DEFAULT_SUPP_TOL,
    ))
}

pub(crate) fn fantope1_project(a: &SymmetricMatrix) -> Result<SymmetricMatrix> {
    check_finite(a, "fantope projection input")?;
    let n = a.dim();
    if n == 0 {
        return Err(Error::InvalidParameter("empty matrix".into()));
    }
    let t = Tridiagonal::reduce(a);
    let tagged = t.eigenvalues()?;
    let values: Vec<f64> = tagged.iter().map(|v| v.0).collect();
    let weights = capped_simplex_projection(&values);
    let active = weights.iter().take_while(|&&w| w > 0.0).count();

    if active <= (n / PARTIAL_EIGEN_FRACTION).max(8) && active < n {
        let vectors = t.eigenvectors(&tagged[..active]);
        if vectors.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("inverse iteration".into()));
        }
        let terms: Vec<(f64, &[f64])> = weights
            .iter()
            .zip(&vectors)
            .map(|(&w, v)| (w, v.as_slice()))
            .collect();
        Ok(SymmetricMatrix::from_outer_products(n, &terms))
    } else {
        let eig = sym_eig(a)?;
        Ok(eig.reconstruct_with(&capped_simplex_projection(&eig.values)))
    }
}

/// Entrywise `sign(a)·max(|a| − t, 0)`.
pub fn soft_threshold(a: &SymmetricMatrix, t: f64) -> Result<SymmetricMatrix> {
    if !(t >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "threshold must be non-negative, got {t}"
        )));
    }
    Ok(a.map(|x| soft_threshold_scalar(x, t)))
}

#[inline]
pub fn soft_threshold_scalar(x: f64, t: f64) -> f64 {
    if x > t {
        x - t
    } else if x < -t {
        x + t
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, GaussianSource, Stream};

    fn random_symmetric(n: usize, seed: u64) -> SymmetricMatrix {
        let mut rng = stream(seed, Stream::Noise);
        let mut g = Matrix::zeros(n, n);
        rng.fill_standard_normal(g.as_mut_slice());
        SymmetricMatrix::symmetrize(&g).unwrap()
    }

    fn dense_close(a: &SymmetricMatrix, b: &SymmetricMatrix, tol: f64) -> bool {
        a.distance(b) <= tol
    }

    #[test]
    fn diagonal_eigendecomposition() {
        let e = sym_eig(&SymmetricMatrix::from_diagonal(&[3.0, 1.0])).unwrap();
        assert_eq!(e.values, vec![3.0, 1.0]);
        assert_eq!(e.vector(0), vec![1.0, 0.0]);
        assert_eq!(e.vector(1), vec![0.0, 1.0]);
        let e = sym_eig(&SymmetricMatrix::from_diagonal(&[1.0, 3.0])).unwrap();
        assert_eq!(e.values, vec![3.0, 1.0]);
        assert_eq!(e.vector(0), vec![0.0, 1.0]);
    }

    #[test]
    fn swap_matrix_eigendecomposition() {
        let a = SymmetricMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let e = sym_eig(&a).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((e.values[0] - 1.0).abs() < 1e-15 && (e.values[1] + 1.0).abs() < 1e-15);
        let v0 = e.vector(0);
        let v1 = e.vector(1);
        assert!((v0[0] - h).abs() < 1e-15 && (v0[1] - h).abs() < 1e-15);
        // (1, −1)/√2: tie in magnitude, lowest index is made positive.
        assert!((v1[0] - h).abs() < 1e-15 && (v1[1] + h).abs() < 1e-15);
    }

    #[test]
    fn jacobi_reconstruction_and_orthogonality() {
        for (n, seed) in [(1, 1), (2, 2), (5, 3), (40, 4)] {
            let a = random_symmetric(n, seed);
            let e = sym_eig(&a).unwrap();
            let err = e.reconstruct().distance(&a);
            assert!(err <= 1e-10 * (1.0 + a.frobenius_norm()), "n={n} err={err}");
            assert!(e.values.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn non_finite_input_is_rejected() {
        let a = SymmetricMatrix::from_diagonal(&[1.0, f64::NAN]);
        assert!(matches!(sym_eig(&a), Err(Error::NonFinite(_))));
        assert!(leading_eigenvector(&a).is_err());
        assert!(fantope1_projection(&a).is_err());
    }

    #[test]
    fn leading_eigenvector_examples() {
        let theta = [0.0, 2.0, -1.0, 2.0];
        let nrm = norm2(&theta);
        let unit: Vec<f64> = theta.iter().map(|x| x / nrm).collect();
        let p = SymmetricMatrix::outer(&unit);
        let u = leading_eigenvector(&p).unwrap();
        // Largest-magnitude entry of θ is positive (index 1), so no flip.
        for (a, b) in u.iter().zip(&unit) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(
            leading_eigenvector(&SymmetricMatrix::identity(2)).unwrap(),
            vec![1.0, 0.0]
        );
    }

    #[test]
    fn leading_eigenvector_matches_jacobi() {
        for seed in 0..20 {
            let a = random_symmetric(3 + (seed as usize % 17), 1000 + seed);
            let u = leading_eigenvector(&a).unwrap();
            let e = sym_eig(&a).unwrap();
            let v = e.vector(0);
            let d: f64 = u
                .iter()
                .zip(&v)
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max);
            assert!(d < 1e-8, "seed {seed}: {d}");
        }
    }

    #[test]
    fn simplex_projection_examples() {
        assert_eq!(capped_simplex_projection(&[0.5, 0.5]), vec![0.5, 0.5]);
        let v = capped_simplex_projection(&[0.6, 0.6]);
        assert!((v[0] - 0.5).abs() < 1e-15 && (v[1] - 0.5).abs() < 1e-15);
        assert_eq!(capped_simplex_projection(&[2.0, 0.0]), vec![1.0, 0.0]);
        let v = capped_simplex_projection(&[0.0, 0.0, 0.0, 0.0]);
        assert_eq!(v, vec![0.25; 4]);
    }

    #[test]
    fn fantope_examples() {
        let u = [0.6, 0.8];
        let uu = SymmetricMatrix::outer(&u);
        let p = fantope1_projection(&uu).unwrap();
        assert!(dense_close(&p.matrix, &uu, 1e-12));
        assert_eq!(p.support, vec![0, 1]);

        let p = fantope1_projection(&SymmetricMatrix::from_diagonal(&[2.0, 0.0])).unwrap();
        assert!(dense_close(
            &p.matrix,
            &SymmetricMatrix::from_diagonal(&[1.0, 0.0]),
            1e-15
        ));
        assert_eq!(p.support, vec![0]);

        for n in [1, 3, 12] {
            let p = fantope1_projection(&SymmetricMatrix::zeros(n)).unwrap();
            let expect = SymmetricMatrix::identity(n).map(|x| x / n as f64);
            assert!(dense_close(&p.matrix, &expect, 1e-14));
        }
    }

    #[test]
    fn fantope_projection_is_feasible_and_idempotent() {
        for seed in 0..10 {
            let n = 2 + seed as usize * 3;
            let a = random_symmetric(n, 50 + seed);
            let p = fantope1_projection(&a).unwrap().matrix;
            assert!((p.trace() - 1.0).abs() < 1e-10);
            let e = sym_eig(&p).unwrap();
            assert!(e.values[0] <= 1.0 + 1e-10 && e.values[n - 1] >= -1e-10);
            let pp = fantope1_projection(&p).unwrap().matrix;
            assert!(p.distance(&pp) < 1e-10, "seed {seed}: {}", p.distance(&pp));
        }
    }

    #[test]
    fn reprojecting_large_low_rank_inputs() {
        // Projections of these have a zero eigenvalue of high multiplicity,
        // which leaves exact zeros on the tridiagonal diagonal.
        for (n, seed) in [(93, 9006), (67, 9010), (96, 9016), (61, 9043)] {
            let p = fantope1_projection(&random_symmetric(n, seed))
                .unwrap()
                .matrix;
            let pp = fantope1_projection(&p).unwrap().matrix;
            assert!(p.distance(&pp) < 1e-10, "n={n}: {}", p.distance(&pp));
            let values = eigenvalues(&p).unwrap();
            assert!((values.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn fantope_partial_and_full_paths_agree() {
        for seed in 0..10 {
            let n = 6 + seed as usize * 5;
            let mut a = random_symmetric(n, 70 + seed);
            // Scale so that several eigenvalues are active.
            a = a.map(|x| 0.05 * x);
            let fast = fantope1_project(&a).unwrap();
            let e = sym_eig(&a).unwrap();
            let slow = e.reconstruct_with(&capped_simplex_projection(&e.values));
            assert!(
                fast.distance(&slow) < 1e-10,
                "seed {seed}: {}",
                fast.distance(&slow)
            );
        }
    }

    #[test]
    fn soft_threshold_examples() {
        assert_eq!(soft_threshold_scalar(1.5, 0.5), 1.0);
        assert_eq!(soft_threshold_scalar(-0.3, 0.5), 0.0);
        assert_eq!(soft_threshold_scalar(-1.5, 0.5), -1.0);
        let a = random_symmetric(4, 9);
        assert_eq!(soft_threshold(&a, 0.0).unwrap(), a);
        assert!(matches!(
            soft_threshold(&a, -0.1),
            Err(Error::InvalidParameter(_))
        ));
        assert!(soft_threshold(&a, f64::NAN).is_err());
    }
}
