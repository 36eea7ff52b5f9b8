//! Detection through clustering: split the data in two independent copies,
//! cluster the second, project the first onto the estimated labels and
//! reject the null when the top-`s` energy of that projection is large.

use crate::cluster::top_s_indices;
use crate::error::{Error, Result};
use crate::model::{sample_null, sample_planted, Dataset, Labels, ModelParams, Truth};
use crate::rng::{self, derive_seed, rademacher, GaussianSource, Stream};

pub const DEFAULT_THRESHOLD_MULT: f64 = 6.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectConfig {
    /// Splitting parameter in `(0, 1]`.
    pub epsilon: f64,
    pub s: usize,
    pub p: usize,
    pub n: usize,
    pub threshold_mult: f64,
}

impl DetectConfig {
    pub fn new(epsilon: f64, s: usize, p: usize, n: usize) -> Result<Self> {
        let cfg = DetectConfig {
            epsilon,
            s,
            p,
            n,
            threshold_mult: DEFAULT_THRESHOLD_MULT,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        check_epsilon(self.epsilon)?;
        if self.n == 0 || self.s == 0 || self.s > self.p {
            return Err(Error::InvalidParameter(format!(
                "need n >= 1 and 1 <= s <= p, got n={} s={} p={}",
                self.n, self.s, self.p
            )));
        }
        if !(self.threshold_mult >= 0.0) || !self.threshold_mult.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "threshold multiplier must be finite and >= 0, got {}",
                self.threshold_mult
            )));
        }
        Ok(())
    }
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if epsilon > 0.0 && epsilon <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "epsilon must lie in (0, 1], got {epsilon}"
        )))
    }
}

/// `X⁽¹⁾ = (X + Ẽ/ε)/√(1+1/ε²)` and `X⁽²⁾ = (X − εẼ)/√(1+ε²)` with fresh
/// `Ẽ ~ N(0,1)` from `(seed, Stream::Split)`.
pub fn split_two(data: &Dataset, epsilon: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    split_two_with(data, epsilon, &mut rng::stream(seed, Stream::Split))
}

pub fn split_two_with(
    data: &Dataset,
    epsilon: f64,
    noise: &mut impl GaussianSource,
) -> Result<(Dataset, Dataset)> {
    check_epsilon(epsilon)?;
    let c1 = (1.0 + 1.0 / (epsilon * epsilon)).sqrt();
    let c2 = (1.0 + epsilon * epsilon).sqrt();
    let mut x1 = data.x.clone();
    let mut x2 = data.x.clone();
    let mut e = vec![0.0; data.n()];
    for j in 0..data.p() {
        noise.fill_standard_normal(&mut e);
        for ((a, b), &ej) in x1.row_mut(j).iter_mut().zip(x2.row_mut(j)).zip(&e) {
            let x = *a;
            *a = (x + ej / epsilon) / c1;
            *b = (x - epsilon * ej) / c2;
        }
    }
    let truth = |c: f64| {
        data.truth.as_ref().map(|t| Truth {
            theta: t.theta.scaled(1.0 / c),
            z: t.z.clone(),
        })
    };
    Ok((
        Dataset {
            x: x1,
            truth: truth(c1),
        },
        Dataset {
            x: x2,
            truth: truth(c2),
        },
    ))
}

/// `T² = Σ_{i ≤ s} v_(i)²` where `v = X ẑ / n` and `v_(i)` is its `i`-th
/// largest entry in magnitude.
pub fn test_statistic(x1: &Dataset, zhat: &Labels, s: usize) -> Result<f64> {
    if zhat.len() != x1.n() {
        return Err(Error::DimensionMismatch(format!(
            "{} labels for {} samples",
            zhat.len(),
            x1.n()
        )));
    }
    if s > x1.p() {
        return Err(Error::InvalidParameter(format!(
            "s={s} exceeds p={}",
            x1.p()
        )));
    }
    let n = x1.n() as f64;
    let v = x1.x.mul_vec(&zhat.to_f64())?;
    Ok(top_s_indices(&v, s)
        .into_iter()
        .map(|j| (v[j] / n).powi(2))
        .sum())
}

/// `threshold_mult · s · ln(e p / s) / n`.
pub fn detection_threshold(cfg: &DetectConfig) -> f64 {
    let (s, p, n) = (cfg.s as f64, cfg.p as f64, cfg.n as f64);
    cfg.threshold_mult * s * (1.0 + (p / s).ln()) / n
}

/// A clustering procedure plugged into the detection test.
pub type Labeler<'a> = dyn Fn(&Dataset) -> Result<Labels> + Sync + 'a;

/// Returns true (reject the null) when [`detection_statistic`] exceeds
/// [`detection_threshold`].
pub fn detection_test(
    data: &Dataset,
    cluster_fn: &Labeler,
    cfg: &DetectConfig,
    seed: u64,
) -> Result<bool> {
    Ok(detection_statistic(data, cluster_fn, cfg, seed)? > detection_threshold(cfg))
}

/// `T²` of the first split, with labels from `cluster_fn` on the second.
pub fn detection_statistic(
    data: &Dataset,
    cluster_fn: &Labeler,
    cfg: &DetectConfig,
    seed: u64,
) -> Result<f64> {
    cfg.validate()?;
    if data.p() != cfg.p || data.n() != cfg.n {
        return Err(Error::DimensionMismatch(format!(
            "data is {}x{}, config expects p={} n={}",
            data.p(),
            data.n(),
            cfg.p,
            cfg.n
        )));
    }
    let (x1, x2) = split_two(data, cfg.epsilon, seed)?;
    let zhat = cluster_fn(&x2)?;
    test_statistic(&x1, &zhat, cfg.s)
}

/// The true labels carried by the data.
pub fn oracle_labels(data: &Dataset) -> Result<Labels> {
    data.truth
        .as_ref()
        .map(|t| t.z.clone())
        .ok_or_else(|| Error::InvalidParameter("data carry no ground-truth labels".into()))
}

/// I.i.d. Rademacher labels from `(seed, Stream::Labeler)`.
pub fn random_labels(n: usize, seed: u64) -> Labels {
    let mut rng = rng::stream(seed, Stream::Labeler);
    let signs: Vec<f64> = (0..n).map(|_| rademacher(&mut rng)).collect();
    Labels::from_signs(&signs)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorRates {
    pub trials: usize,
    /// Rejection rate on null data.
    pub type_i: f64,
    pub type_i_se: f64,
    /// Acceptance rate on data from the planted prior.
    pub type_ii: f64,
    pub type_ii_se: f64,
}

fn binomial_se(q: f64, trials: usize) -> f64 {
    (q * (1.0 - q) / trials as f64).sqrt()
}

/// Monte-Carlo error rates of [`detection_test`]. Trial `t` uses seed
/// `derive_seed(seed, 0, t)` for null data and `derive_seed(seed, 1, t)` for
/// planted data; the same seed keys the data and the split.
pub fn error_rates(
    trials: usize,
    params: &ModelParams,
    cluster_fn: &Labeler,
    cfg: &DetectConfig,
    seed: u64,
) -> Result<ErrorRates> {
    if trials == 0 {
        return Err(Error::InvalidParameter("need at least one trial".into()));
    }
    let mut rejections = 0usize;
    let mut misses = 0usize;
    for t in 0..trials as u64 {
        let null_seed = derive_seed(seed, 0, t);
        if detection_test(&sample_null(params, null_seed)?, cluster_fn, cfg, null_seed)? {
            rejections += 1;
        }
        let alt_seed = derive_seed(seed, 1, t);
        if !detection_test(
            &sample_planted(params, alt_seed)?,
            cluster_fn,
            cfg,
            alt_seed,
        )? {
            misses += 1;
        }
    }
    let type_i = rejections as f64 / trials as f64;
    let type_ii = misses as f64 / trials as f64;
    Ok(ErrorRates {
        trials,
        type_i,
        type_i_se: binomial_se(type_i, trials),
        type_ii,
        type_ii_se: binomial_se(type_ii, trials),
    })
}
