//! Two clustering procedures for the symmetric two-component mixture.
//!
//! * [`sparse_spectral_cluster`]: solve the penalized Fantope program on
//!   `XXᵀ/n − I`, take a leading eigenvector `û` of the solution and label
//!   each sample by the sign of `ûᵀX_i`. Uses the full sample throughout.
//! * [`sparse_cluster_splitting`]: split `X` into three independent noisy
//!   copies, screen the largest mean coordinate on the first, estimate the
//!   top-`s` mean on the second and relabel with the third.

use crate::error::{Error, Result};
use crate::fps::{input_matrix, solve_sdp, SolverConfig};
use crate::linalg::{dot, leading_eigenvector, Matrix};
use crate::model::{misclustering_loss, Dataset, Labels, SparseMean};
use crate::rng::{self, GaussianSource, Stream};

pub use crate::model::sgn;

/// ADMM outcome carried along with a clustering.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverSummary {
    pub iterations: usize,
    pub converged: bool,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterResult {
    pub zhat: Labels,
    /// Leading eigenvector of the SDP solution.
    pub uhat: Option<Vec<f64>>,
    /// Hard-thresholded mean estimate of the splitting pipeline.
    pub theta_hat: Option<SparseMean>,
    /// Coordinate picked by diagonal thresholding.
    pub k_hat: Option<usize>,
    pub lambda_used: Option<f64>,
    /// `ℓ(ẑ, z)` when the data carry ground truth.
    pub loss: Option<f64>,
    /// Support of `P̂` (spectral) or `θ̂` (splitting).
    pub support: Vec<usize>,
    pub solver: Option<SolverSummary>,
}

fn loss_against_truth(data: &Dataset, zhat: &Labels) -> Result<Option<f64>> {
    data.truth
        .as_ref()
        .map(|t| misclustering_loss(zhat, &t.z))
        .transpose()
}

/// Sparse spectral clustering on the full sample.
///
/// A solver that stops at `max_iters` does not fail the call: the last
/// iterate is used and `solver.converged` is false.
pub fn sparse_spectral_cluster(data: &Dataset, cfg: &SolverConfig) -> Result<ClusterResult> {
    if data.n() < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least 2 samples, got {}",
            data.n()
        )));
    }
    if data.p() == 0 {
        return Err(Error::InvalidParameter("need p >= 1".into()));
    }
    let m = input_matrix(data);
    let sol = solve_sdp(&m, cfg)?;
    let u = leading_eigenvector(&sol.p_hat.matrix)?;
    let scores = data.x.tr_mul_vec(&u)?;
    let zhat = Labels::from_signs(&scores);
    let loss = loss_against_truth(data, &zhat)?;
    Ok(ClusterResult {
        zhat,
        uhat: Some(u),
        theta_hat: None,
        k_hat: None,
        lambda_used: Some(cfg.lambda),
        loss,
        support: sol.p_hat.support.clone(),
        solver: Some(SolverSummary {
            iterations: sol.iterations,
            converged: sol.converged,
            primal_residual: sol.primal_residual,
            dual_residual: sol.dual_residual,
            objective: sol.objective,
        }),
    })
}

/// Three independent copies of a dataset together with the noise used.
#[derive(Debug, Clone, PartialEq)]
pub struct ThreeWaySplit {
    /// `X − Ẽ − Ě`
    pub x1: Dataset,
    /// `X − Ẽ + Ě`
    pub x2: Dataset,
    /// `X + Ẽ`
    pub x3: Dataset,
    /// `Ẽ`, i.i.d. `N(0, 1)`
    pub tilde: Matrix,
    /// `Ě`, i.i.d. `N(0, 2)`
    pub check: Matrix,
}

/// `X⁽¹⁾ = X − Ẽ − Ě`, `X⁽²⁾ = X − Ẽ + Ě`, `X⁽³⁾ = X + Ẽ` with fresh
/// `Ẽ ~ N(0,1)` and `Ě ~ N(0,2)` from `(seed, Stream::Split)`.
pub fn split_three(data: &Dataset, seed: u64) -> Result<(Dataset, Dataset, Dataset)> {
    let s = split_three_with(data, &mut rng::stream(seed, Stream::Split))?;
    Ok((s.x1, s.x2, s.x3))
}

/// [`split_three`] with an explicit noise source; `Ẽ` is drawn first, then `Ě`.
pub fn split_three_with(data: &Dataset, noise: &mut impl GaussianSource) -> Result<ThreeWaySplit> {
    let (p, n) = (data.p(), data.n());
    let mut tilde = Matrix::zeros(p, n);
    noise.fill_standard_normal(tilde.as_mut_slice());
    let mut check = Matrix::zeros(p, n);
    noise.fill_standard_normal(check.as_mut_slice());
    let check = check.map(|x| std::f64::consts::SQRT_2 * x);

    let minus_tilde = data.x.lin_comb(1.0, &tilde, -1.0)?;
    let x1 = minus_tilde.lin_comb(1.0, &check, -1.0)?;
    let x2 = minus_tilde.lin_comb(1.0, &check, 1.0)?;
    let x3 = data.x.lin_comb(1.0, &tilde, 1.0)?;
    let wrap = |x: Matrix| Dataset {
        x,
        truth: data.truth.clone(),
    };
    Ok(ThreeWaySplit {
        x1: wrap(x1),
        x2: wrap(x2),
        x3: wrap(x3),
        tilde,
        check,
    })
}

/// `argmax_k (X Xᵀ)_kk`, lowest index on ties.
pub fn diag_threshold_select(x1: &Dataset) -> usize {
    let mut best = 0;
    let mut best_val = f64::NEG_INFINITY;
    for k in 0..x1.p() {
        let row = x1.x.row(k);
        let v = dot(row, row);
        if v > best_val {
            best = k;
            best_val = v;
        }
    }
    best
}

/// `z̃_i = sgn(X_{k i})`.
pub fn preliminary_labels(x1: &Dataset, k: usize) -> Result<Labels> {
    if k >= x1.p() {
        return Err(Error::DimensionMismatch(format!(
            "coordinate {k} out of range for p = {}",
            x1.p()
        )));
    }
    Ok(Labels::from_signs(x1.x.row(k)))
}

/// Keeps the `s` largest-magnitude entries of `v` (lowest index on ties).
pub(crate) fn top_s_indices(v: &[f64], s: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| v[b].abs().total_cmp(&v[a].abs()).then(a.cmp(&b)));
    order.truncate(s);
    order
}

/// `v = X z̃ / n` restricted to its `s` largest-magnitude entries.
pub fn hard_threshold_mean(x2: &Dataset, ztilde: &Labels, s: usize) -> Result<SparseMean> {
    if s == 0 || s > x2.p() {
        return Err(Error::InvalidParameter(format!(
            "need 1 <= s <= p, got s={s} p={}",
            x2.p()
        )));
    }
    if ztilde.len() != x2.n() {
        return Err(Error::DimensionMismatch(format!(
            "{} labels for {} samples",
            ztilde.len(),
            x2.n()
        )));
    }
    let n = x2.n() as f64;
    let v: Vec<f64> =
        x2.x.mul_vec(&ztilde.to_f64())?
            .into_iter()
            .map(|x| x / n)
            .collect();
    let mut theta = vec![0.0; v.len()];
    for j in top_s_indices(&v, s) {
        theta[j] = v[j];
    }
    Ok(SparseMean::from_dense(theta))
}

/// `ẑ_i = sgn(⟨θ̂, X_i⟩)`. A zero `θ̂` is an error rather than all −1 labels.
pub fn refine_labels(x3: &Dataset, theta_hat: &SparseMean) -> Result<Labels> {
    if theta_hat.dim() != x3.p() {
        return Err(Error::DimensionMismatch(format!(
            "theta_hat of length {} for p = {}",
            theta_hat.dim(),
            x3.p()
        )));
    }
    if theta_hat.is_zero() {
        return Err(Error::Degenerate(
            "mean estimate is zero, labels would be arbitrary".into(),
        ));
    }
    let scores = x3.x.tr_mul_vec(theta_hat.theta())?;
    Ok(Labels::from_signs(&scores))
}

/// Three-way sample-splitting pipeline with known sparsity `s`.
pub fn sparse_cluster_splitting(data: &Dataset, s: usize, seed: u64) -> Result<ClusterResult> {
    let split = split_three_with(data, &mut rng::stream(seed, Stream::Split))?;
    cluster_from_split(data, &split, s)
}

pub(crate) fn cluster_from_split(
    data: &Dataset,
    split: &ThreeWaySplit,
    s: usize,
) -> Result<ClusterResult> {
    let k_hat = diag_threshold_select(&split.x1);
    let ztilde = preliminary_labels(&split.x1, k_hat)?;
    let theta_hat = hard_threshold_mean(&split.x2, &ztilde, s)?;
    let zhat = refine_labels(&split.x3, &theta_hat)?;
    let loss = loss_against_truth(data, &zhat)?;
    Ok(ClusterResult {
        zhat,
        uhat: None,
        support: theta_hat.support().to_vec(),
        theta_hat: Some(theta_hat),
        k_hat: Some(k_hat),
        lambda_used: None,
        loss,
        solver: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{sample_model, sample_model_with, sample_prior, ModelParams};
    use crate::rng::ZeroNoise;

    fn noiseless(theta: &[f64], z: &[i8]) -> Dataset {
        let params = ModelParams::new(z.len(), theta.len(), theta.len(), 1.0).unwrap();
        sample_model_with(
            &params,
            &SparseMean::from_dense(theta.to_vec()),
            &Labels::new(z.to_vec()).unwrap(),
            &mut ZeroNoise,
        )
        .unwrap()
    }

    #[test]
    fn spectral_noiseless_is_exact() {
        let d = noiseless(&[0.0, 2.0, -1.0, 0.0], &[1, -1, -1, 1, 1, -1]);
        let r = sparse_spectral_cluster(&d, &SolverConfig::with_lambda(0.0)).unwrap();
        assert_eq!(r.loss, Some(0.0));
        assert!(r.solver.as_ref().unwrap().converged);
        let u = r.uhat.unwrap();
        assert!((dot(&u, &u) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn spectral_rejects_single_sample() {
        let d = noiseless(&[1.0], &[1]);
        assert!(sparse_spectral_cluster(&d, &SolverConfig::default()).is_err());
    }

    #[test]
    fn spectral_is_deterministic_and_sign_equivariant() {
        let params = ModelParams::new(40, 12, 3, 3.0).unwrap();
        let (theta, z) = sample_prior(&params, 4).unwrap();
        let d = sample_model(&params, &theta, &z, 4).unwrap();
        let cfg = SolverConfig::with_lambda(0.3);
        let a = sparse_spectral_cluster(&d, &cfg).unwrap();
        let b = sparse_spectral_cluster(&d, &cfg).unwrap();
        assert_eq!(a, b);

        let neg = Dataset {
            x: d.x.map(|v| -v),
            truth: d.truth.clone(),
        };
        let c = sparse_spectral_cluster(&neg, &cfg).unwrap();
        assert_eq!(c.zhat, a.zhat.flipped());
        assert_eq!(c.loss, a.loss);
    }

    #[test]
    fn spectral_permutation_equivariance() {
        let params = ModelParams::new(30, 10, 2, 3.0).unwrap();
        let (theta, z) = sample_prior(&params, 8).unwrap();
        let d = sample_model(&params, &theta, &z, 8).unwrap();
        let cfg = SolverConfig::with_lambda(0.3);
        let a = sparse_spectral_cluster(&d, &cfg).unwrap();
        let perm: Vec<usize> = (0..30).map(|k| (k * 7) % 30).collect();
        let b = sparse_spectral_cluster(&d.permute_samples(&perm), &cfg).unwrap();
        let permuted: Vec<i8> = perm.iter().map(|&k| a.zhat.as_slice()[k]).collect();
        assert_eq!(b.zhat.as_slice(), permuted.as_slice());
    }

    #[test]
    fn split_identities_hold() {
        let params = ModelParams::new(15, 6, 2, 2.0).unwrap();
        let d = crate::model::sample_planted(&params, 3).unwrap();
        let s = split_three_with(&d, &mut rng::stream(9, Stream::Split)).unwrap();
        for j in 0..6 {
            for i in 0..15 {
                let x = d.x[(j, i)];
                let (t, c) = (s.tilde[(j, i)], s.check[(j, i)]);
                assert!((s.x2.x[(j, i)] - s.x1.x[(j, i)] - 2.0 * c).abs() < 1e-12);
                assert!((s.x3.x[(j, i)] - x - t).abs() < 1e-12);
                assert!((s.x1.x[(j, i)] + s.x3.x[(j, i)] - (2.0 * x - c)).abs() < 1e-12);
            }
        }
        let (a, b, c) = split_three(&d, 9).unwrap();
        assert_eq!((a, b, c), (s.x1, s.x2, s.x3));
    }

    #[test]
    fn diagonal_selection_examples() {
        let d = noiseless(&[1.0, -3.0, 2.0], &[1, -1, 1]);
        assert_eq!(diag_threshold_select(&d), 1);
        let flat = Dataset::new(Matrix::from_fn(4, 3, |_, _| 1.0));
        assert_eq!(diag_threshold_select(&flat), 0);
    }

    #[test]
    fn preliminary_labels_examples() {
        let z = [1, -1, -1, 1];
        let d = noiseless(&[0.5, 2.0], &z);
        assert_eq!(preliminary_labels(&d, 1).unwrap().as_slice(), &z);
        let d = noiseless(&[0.5, -2.0], &z);
        let zt = preliminary_labels(&d, 1).unwrap();
        assert_eq!(zt, Labels::new(z.to_vec()).unwrap().flipped());
        assert!(preliminary_labels(&d, 2).is_err());
    }

    #[test]
    fn hard_threshold_examples() {
        // v = X z̃ / n with a single sample equal to (3, 1, 0.5).
        let one = Dataset::new(Matrix::from_vec(3, 1, vec![3.0, 1.0, 0.5]).unwrap());
        let z = Labels::constant(1, 1);
        assert_eq!(
            hard_threshold_mean(&one, &z, 2).unwrap().theta(),
            &[3.0, 1.0, 0.0]
        );
        assert_eq!(
            hard_threshold_mean(&one, &z, 3).unwrap().theta(),
            &[3.0, 1.0, 0.5]
        );
        assert!(hard_threshold_mean(&one, &z, 0).is_err());
        assert!(hard_threshold_mean(&one, &z, 4).is_err());

        let ties = Dataset::new(Matrix::from_vec(3, 1, vec![1.0, -1.0, 1.0]).unwrap());
        assert_eq!(
            hard_threshold_mean(&ties, &z, 2).unwrap().support(),
            &[0, 1]
        );

        let theta = [0.0, 1.5, 0.0, -2.0];
        let zs = [1, 1, -1, 1, -1];
        let d = noiseless(&theta, &zs);
        let est = hard_threshold_mean(&d, &Labels::new(zs.to_vec()).unwrap(), 2).unwrap();
        assert_eq!(est.theta(), &theta);
    }

    #[test]
    fn refine_examples() {
        let theta = SparseMean::from_dense(vec![1.0, 0.0, -2.0]);
        let z = [1, -1, 1, -1];
        let d = noiseless(theta.theta(), &z);
        assert_eq!(refine_labels(&d, &theta).unwrap().as_slice(), &z);
        let flipped = refine_labels(&d, &theta.scaled(-1.0)).unwrap();
        assert_eq!(
            misclustering_loss(&flipped, &Labels::new(z.to_vec()).unwrap()).unwrap(),
            0.0
        );
        assert!(matches!(
            refine_labels(&d, &SparseMean::zeros(3)),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn splitting_pipeline_noiseless_and_deterministic() {
        let theta = [0.0, 4.0, 0.0, 0.0];
        let zs = [1, -1, -1, 1, 1, 1];
        let d = noiseless(&theta, &zs);
        let split = split_three_with(&d, &mut ZeroNoise).unwrap();
        let r = cluster_from_split(&d, &split, 1).unwrap();
        assert_eq!(r.loss, Some(0.0));
        assert_eq!(r.k_hat, Some(1));

        let params = ModelParams::new(50, 20, 2, 5.0).unwrap();
        let noisy = crate::model::sample_planted(&params, 2).unwrap();
        assert_eq!(
            sparse_cluster_splitting(&noisy, 2, 5).unwrap(),
            sparse_cluster_splitting(&noisy, 2, 5).unwrap()
        );
    }

    #[test]
    fn top_s_keeps_exactly_min_s_nonzeros() {
        let d = Dataset::new(Matrix::from_vec(5, 1, vec![0.0, 2.0, 0.0, -1.0, 0.0]).unwrap());
        let z = Labels::constant(1, 1);
        for s in 1..=5 {
            let t = hard_threshold_mean(&d, &z, s).unwrap();
            assert_eq!(t.support().len(), s.min(2));
        }
    }
}
