//! The symmetric two-component Gaussian mixture `X_i = z_i θ + ε_i`,
//! `ε_i ~ N(0, I_p)`, its planted prior and the misclustering loss.

use rand::seq::index;
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{norm2, Matrix, SymmetricMatrix};
use crate::rng::{self, rademacher, GaussianSource, Stream};

/// Size and signal strength of one problem instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub n: usize,
    pub p: usize,
    pub s: usize,
    /// Signal norm `‖θ‖₂`.
    pub delta: f64,
    /// Entrywise cap on `|θ_j|`, used by the default penalty level.
    pub kappa: Option<f64>,
}

impl ModelParams {
    pub fn new(n: usize, p: usize, s: usize, delta: f64) -> Result<Self> {
        let params = Self {
            n,
            p,
            s,
            delta,
            kappa: None,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn with_kappa(mut self, kappa: f64) -> Result<Self> {
        self.kappa = Some(kappa);
        self.validate()?;
        Ok(self)
    }

    /// `κ` if set, otherwise the entry size `Δ/√s` of a prior draw.
    pub fn kappa_or_default(&self) -> f64 {
        self.kappa.unwrap_or(self.delta / (self.s as f64).sqrt())
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidParameter("n must be positive".into()));
        }
        if self.p == 0 {
            return Err(Error::InvalidParameter("p must be positive".into()));
        }
        if self.s == 0 || self.s > self.p {
            return Err(Error::InvalidParameter(format!(
                "need 1 <= s <= p, got s={} p={}",
                self.s, self.p
            )));
        }
        if !(self.delta >= 0.0) || !self.delta.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "delta must be finite and >= 0, got {}",
                self.delta
            )));
        }
        if let Some(k) = self.kappa {
            if !(k > 0.0) || !k.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "kappa must be finite and > 0, got {k}"
                )));
            }
        }
        Ok(())
    }
}

/// Mean vector `θ` with its support `{j : θ_j ≠ 0}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMean {
    theta: Vec<f64>,
    support: Vec<usize>,
}

impl SparseMean {
    pub fn from_dense(theta: Vec<f64>) -> Self {
        let support = theta
            .iter()
            .enumerate()
            .filter(|(_, &x)| x != 0.0)
            .map(|(j, _)| j)
            .collect();
        Self { theta, support }
    }

    pub fn zeros(p: usize) -> Self {
        Self::from_dense(vec![0.0; p])
    }

    /// `θ_j = value` for `j ∈ support`, zero elsewhere.
    pub fn constant_on(p: usize, support: &[usize], value: f64) -> Result<Self> {
        let mut theta = vec![0.0; p];
        for &j in support {
            if j >= p {
                return Err(Error::DimensionMismatch(format!(
                    "support index {j} out of range for p={p}"
                )));
            }
            theta[j] = value;
        }
        Ok(Self::from_dense(theta))
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn dim(&self) -> usize {
        self.theta.len()
    }

    pub fn norm(&self) -> f64 {
        norm2(&self.theta)
    }

    pub fn max_abs(&self) -> f64 {
        self.theta.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn is_zero(&self) -> bool {
        self.support.is_empty()
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self::from_dense(self.theta.iter().map(|x| c * x).collect())
    }
}

/// Cluster labels in `{−1, +1}ⁿ`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Labels(Vec<i8>);

impl Labels {
    pub fn new(z: Vec<i8>) -> Result<Self> {
        if let Some(bad) = z.iter().find(|&&v| v != 1 && v != -1) {
            return Err(Error::InvalidParameter(format!(
                "labels must be -1 or +1, found {bad}"
            )));
        }
        Ok(Self(z))
    }

    pub fn constant(n: usize, value: i8) -> Self {
        Self(vec![if value < 0 { -1 } else { 1 }; n])
    }

    pub fn from_signs(values: &[f64]) -> Self {
        Self(values.iter().map(|&x| sgn(x)).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[i8] {
        &self.0
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.0.iter().map(|&v| f64::from(v)).collect()
    }

    pub fn flipped(&self) -> Self {
        Self(self.0.iter().map(|v| -v).collect())
    }
}

/// `𝟙(x > 0) − 𝟙(x ≤ 0)`: zero maps to −1.
#[inline]
pub fn sgn(x: f64) -> i8 {
    if x > 0.0 {
        1
    } else {
        -1
    }
}

/// Ground truth attached to simulated data.
#[derive(Debug, Clone, PartialEq)]
pub struct Truth {
    pub theta: SparseMean,
    pub z: Labels,
}

/// A `p × n` data matrix whose columns are samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub x: Matrix,
    pub truth: Option<Truth>,
}

impl Dataset {
    pub fn new(x: Matrix) -> Self {
        Self { x, truth: None }
    }

    pub fn p(&self) -> usize {
        self.x.rows()
    }

    pub fn n(&self) -> usize {
        self.x.cols()
    }

    pub fn sample(&self, i: usize) -> Vec<f64> {
        self.x.column(i)
    }

    /// Same data with the samples reordered: new column `k` is old column `perm[k]`.
    pub fn permute_samples(&self, perm: &[usize]) -> Self {
        let x = Matrix::from_fn(self.p(), self.n(), |j, k| self.x[(j, perm[k])]);
        let truth = self.truth.as_ref().map(|t| Truth {
            theta: t.theta.clone(),
            z: Labels(perm.iter().map(|&k| t.z.0[k]).collect()),
        });
        Self { x, truth }
    }
}

/// `X_i = z_i θ + ε_i` with noise from `(seed, Stream::Noise)`.
pub fn sample_model(
    params: &ModelParams,
    theta: &SparseMean,
    z: &Labels,
    seed: u64,
) -> Result<Dataset> {
    let mut noise = rng::stream(seed, Stream::Noise);
    sample_model_with(params, theta, z, &mut noise)
}

/// [`sample_model`] with an explicit noise source. Noise is drawn sample by
/// sample, coordinate by coordinate.
pub fn sample_model_with(
    params: &ModelParams,
    theta: &SparseMean,
    z: &Labels,
    noise: &mut impl GaussianSource,
) -> Result<Dataset> {
    params.validate()?;
    if theta.dim() != params.p {
        return Err(Error::DimensionMismatch(format!(
            "theta has length {}, p = {}",
            theta.dim(),
            params.p
        )));
    }
    if z.len() != params.n {
        return Err(Error::DimensionMismatch(format!(
            "z has length {}, n = {}",
            z.len(),
            params.n
        )));
    }
    let (p, n) = (params.p, params.n);
    let mut x = Matrix::zeros(p, n);
    let mut eps = vec![0.0; p];
    for i in 0..n {
        noise.fill_standard_normal(&mut eps);
        let zi = f64::from(z.0[i]);
        for j in 0..p {
            x[(j, i)] = zi * theta.theta[j] + eps[j];
        }
    }
    Ok(Dataset {
        x,
        truth: Some(Truth {
            theta: theta.clone(),
            z: z.clone(),
        }),
    })
}

/// One draw of `(θ, z)` from the planted prior: a uniform `s`-subset `S`,
/// `θ_j = ±Δ/√s` with independent Rademacher signs on `S`, and i.i.d.
/// Rademacher labels.
pub fn sample_prior(params: &ModelParams, seed: u64) -> Result<(SparseMean, Labels)> {
    sample_prior_from(params, &mut rng::stream(seed, Stream::Prior))
}

/// [`sample_prior`] drawing from an arbitrary generator: support, then signs,
/// then labels.
pub fn sample_prior_from<R: Rng + ?Sized>(
    params: &ModelParams,
    rng: &mut R,
) -> Result<(SparseMean, Labels)> {
    params.validate()?;
    let mut support = index::sample(rng, params.p, params.s).into_vec();
    support.sort_unstable();
    let amplitude = params.delta / (params.s as f64).sqrt();
    let mut theta = vec![0.0; params.p];
    for &j in &support {
        theta[j] = amplitude * rademacher(rng);
    }
    let z = (0..params.n)
        .map(|_| if rademacher(rng) > 0.0 { 1 } else { -1 })
        .collect();
    Ok((SparseMean::from_dense(theta), Labels(z)))
}

/// Labels drawn as in [`sample_prior`], paired with `θ = 0`.
fn null_truth(params: &ModelParams, seed: u64) -> Result<(SparseMean, Labels)> {
    let (_, z) = sample_prior(params, seed)?;
    Ok((SparseMean::zeros(params.p), z))
}

/// Data from the null `θ = 0`: pure `N(0, I_p)` columns.
pub fn sample_null(params: &ModelParams, seed: u64) -> Result<Dataset> {
    let (theta, z) = null_truth(params, seed)?;
    sample_model(params, &theta, &z, seed)
}

/// Data from the planted prior: `(θ, z)` then the model, both keyed by `seed`.
pub fn sample_planted(params: &ModelParams, seed: u64) -> Result<Dataset> {
    let (theta, z) = sample_prior(params, seed)?;
    sample_model(params, &theta, &z, seed)
}

/// `min_{π = ±1} (1/n) Σ 𝟙(π ẑ_i ≠ z_i)`.
pub fn misclustering_loss(zhat: &Labels, z: &Labels) -> Result<f64> {
    if zhat.len() != z.len() {
        return Err(Error::DimensionMismatch(format!(
            "label vectors of length {} and {}",
            zhat.len(),
            z.len()
        )));
    }
    if z.is_empty() {
        return Err(Error::InvalidParameter("empty label vectors".into()));
    }
    let n = z.len();
    let disagree = zhat.0.iter().zip(&z.0).filter(|(a, b)| a != b).count();
    Ok(disagree.min(n - disagree) as f64 / n as f64)
}

/// `θθᵀ/‖θ‖²`.
pub fn planted_projector(theta: &SparseMean) -> Result<SymmetricMatrix> {
    let nrm = theta.norm();
    if nrm == 0.0 {
        return Err(Error::Degenerate(
            "planted projector of a zero vector".into(),
        ));
    }
    let unit: Vec<f64> = theta.theta.iter().map(|x| x / nrm).collect();
    Ok(SymmetricMatrix::outer(&unit))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::ZeroNoise;
    use proptest::prelude::*;

    fn labels(v: &[i8]) -> Labels {
        Labels::new(v.to_vec()).unwrap()
    }

    #[test]
    fn params_validation() {
        assert!(ModelParams::new(10, 5, 6, 1.0).is_err());
        assert!(ModelParams::new(10, 5, 0, 1.0).is_err());
        assert!(ModelParams::new(0, 5, 1, 1.0).is_err());
        assert!(ModelParams::new(10, 5, 2, -1.0).is_err());
        assert!(ModelParams::new(10, 5, 2, 1.0)
            .unwrap()
            .with_kappa(0.0)
            .is_err());
        assert!(Labels::new(vec![1, 0, -1]).is_err());
    }

    #[test]
    fn loss_examples() {
        let z = labels(&[1, 1, -1, -1]);
        assert_eq!(misclustering_loss(&z, &z).unwrap(), 0.0);
        assert_eq!(misclustering_loss(&z.flipped(), &z).unwrap(), 0.0);
        assert_eq!(
            misclustering_loss(&labels(&[1, -1, -1, -1]), &z).unwrap(),
            0.25
        );
        assert!(misclustering_loss(&labels(&[1]), &z).is_err());
    }

    #[test]
    fn sgn_maps_zero_to_minus_one() {
        assert_eq!(sgn(3.2), 1);
        assert_eq!(sgn(-0.1), -1);
        assert_eq!(sgn(0.0), -1);
        assert_eq!(sgn(-0.0), -1);
    }

    #[test]
    fn noiseless_model_is_exact() {
        let params = ModelParams::new(4, 3, 2, 1.0).unwrap();
        let theta = SparseMean::from_dense(vec![0.5, 0.0, -2.0]);
        let z = labels(&[1, -1, -1, 1]);
        let d = sample_model_with(&params, &theta, &z, &mut ZeroNoise).unwrap();
        for i in 0..4 {
            for j in 0..3 {
                assert_eq!(d.x[(j, i)], f64::from(z.as_slice()[i]) * theta.theta()[j]);
            }
        }
        assert!(sample_model_with(&params, &SparseMean::zeros(2), &z, &mut ZeroNoise).is_err());
        assert!(sample_model_with(&params, &theta, &labels(&[1]), &mut ZeroNoise).is_err());
    }

    #[test]
    fn null_variance_near_one() {
        let params = ModelParams::new(20_000, 3, 1, 0.0).unwrap();
        let d = sample_model(
            &params,
            &SparseMean::zeros(3),
            &Labels::constant(20_000, 1),
            5,
        )
        .unwrap();
        for j in 0..3 {
            let row = d.x.row(j);
            let var = row.iter().map(|x| x * x).sum::<f64>() / row.len() as f64;
            assert!((var - 1.0).abs() < 0.05, "{var}");
        }
    }

    #[test]
    fn law_of_large_numbers_recovers_theta() {
        let params = ModelParams::new(10_000, 2, 1, 1.0).unwrap();
        let theta = SparseMean::from_dense(vec![1.0, 0.0]);
        let (_, z) = sample_prior(&params, 3).unwrap();
        let d = sample_model(&params, &theta, &z, 3).unwrap();
        let zf = z.to_f64();
        let est = d.x.mul_vec(&zf).unwrap();
        assert!((est[0] / 10_000.0 - 1.0).abs() < 0.05);
        assert!((est[1] / 10_000.0).abs() < 0.05);
    }

    #[test]
    fn null_matches_model_with_zero_theta() {
        let params = ModelParams::new(30, 6, 2, 3.0).unwrap();
        let a = sample_null(&params, 11).unwrap();
        let z = a.truth.as_ref().unwrap().z.clone();
        let b = sample_model(&params, &SparseMean::zeros(6), &z, 11).unwrap();
        assert_eq!(a, b);
        assert!(a.truth.unwrap().theta.is_zero());
    }

    #[test]
    fn null_moments() {
        let params = ModelParams::new(10_000, 5, 1, 0.0).unwrap();
        let d = sample_null(&params, 21).unwrap();
        let c = d.x.gram(10_000.0);
        for i in 0..5 {
            let mean = d.x.row(i).iter().sum::<f64>() / 10_000.0;
            assert!(mean.abs() < 0.05);
            for j in 0..5 {
                let target = if i == j { 1.0 } else { 0.0 };
                assert!((c.get(i, j) - target).abs() < 0.1);
            }
        }
    }

    #[test]
    fn prior_full_support_when_s_equals_p() {
        let params = ModelParams::new(3, 4, 4, 2.0).unwrap();
        let (theta, _) = sample_prior(&params, 1).unwrap();
        assert_eq!(theta.support(), &[0, 1, 2, 3]);
    }

    #[test]
    fn prior_subsets_are_uniform() {
        let params = ModelParams::new(1, 4, 2, 1.0).unwrap();
        let mut counts = std::collections::HashMap::new();
        let draws = 10_000;
        for seed in 0..draws {
            let (theta, _) = sample_prior(&params, seed).unwrap();
            *counts.entry(theta.support().to_vec()).or_insert(0usize) += 1;
        }
        assert_eq!(counts.len(), 6);
        for (_, c) in counts {
            assert!((c as f64 / draws as f64 - 1.0 / 6.0).abs() < 0.02);
        }
    }

    #[test]
    fn projector_examples() {
        let p = planted_projector(&SparseMean::from_dense(vec![1.0, 0.0, 0.0])).unwrap();
        assert_eq!(p, SymmetricMatrix::from_diagonal(&[1.0, 0.0, 0.0]));
        let p = planted_projector(&SparseMean::from_dense(vec![1.0, 1.0])).unwrap();
        for &v in p.as_slice() {
            assert!((v - 0.5).abs() < 1e-15);
        }
        assert!(planted_projector(&SparseMean::zeros(3)).is_err());
    }

    proptest! {
        #[test]
        fn loss_is_sign_symmetric_and_at_most_half(
            a in prop::collection::vec(prop::bool::ANY, 1..40),
            b_seed in any::<u64>(),
        ) {
            let z = Labels(a.iter().map(|&x| if x { 1 } else { -1 }).collect());
            let zhat = Labels((0..z.len()).map(|i| if (crate::rng::mix64(b_seed ^ i as u64) & 1) == 1 { 1 } else { -1 }).collect());
            let l = misclustering_loss(&zhat, &z).unwrap();
            prop_assert!(l <= 0.5);
            prop_assert_eq!(l, misclustering_loss(&zhat.flipped(), &z).unwrap());
            prop_assert_eq!(l, misclustering_loss(&zhat, &z.flipped()).unwrap());
            prop_assert_eq!(l, misclustering_loss(&z, &zhat).unwrap());
        }

        #[test]
        fn prior_draws_have_exact_norm_and_sparsity(
            p in 1usize..30, s_frac in 0.0f64..1.0, delta in 0.0f64..10.0, seed in any::<u64>(),
        ) {
            let s = 1 + ((p - 1) as f64 * s_frac) as usize;
            let params = ModelParams::new(5, p, s, delta).unwrap();
            let (theta, z) = sample_prior(&params, seed).unwrap();
            prop_assert_eq!(z.len(), 5);
            prop_assert!((theta.norm() - delta).abs() <= 1e-12 * (1.0 + delta));
            if delta > 0.0 {
                prop_assert_eq!(theta.support().len(), s);
            }
        }

        #[test]
        fn same_seed_same_data(seed in any::<u64>()) {
            let params = ModelParams::new(7, 5, 2, 1.5).unwrap();
            prop_assert_eq!(sample_planted(&params, seed).unwrap(), sample_planted(&params, seed).unwrap());
        }

        #[test]
        fn projector_is_idempotent(theta in prop::collection::vec(-5.0f64..5.0, 1..12)) {
            let t = SparseMean::from_dense(theta);
            prop_assume!(t.norm() > 1e-3);
            let p = planted_projector(&t).unwrap();
            prop_assert!(p.square().distance(&p) < 1e-12);
            prop_assert!((p.trace() - 1.0).abs() < 1e-12);
        }
    }
}
