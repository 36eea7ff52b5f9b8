//! Norm of the degree-`D` projection of the likelihood ratio between the
//! planted prior and the null, for the symmetric mixture.
//!
//! For two independent prior draws `(θ, z)` and `(θ̃, z̃)`,
//!
//! ```text
//! ‖L≤D‖² = E Σ_{d=0}^{D} ⟨z, z̃⟩^d ⟨θ, θ̃⟩^d / d!
//! ```
//!
//! This module evaluates that expectation exactly for tiny instances, by
//! Monte-Carlo for larger ones, and bounds it by a geometric sum.

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::dot;
use crate::model::{sample_prior_from, Labels, ModelParams, SparseMean};
use crate::rng::{self, Stream};

/// Largest number of second-draw states the exact evaluator will visit.
pub const ENUMERATION_LIMIT: f64 = 1e7;

/// Terms whose log-magnitude exceed this are treated as overflow. It leaves
/// room for summing a few hundred of them below `f64::MAX`.
const MAX_LOG_TERM: f64 = 700.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LowDegParams {
    pub n: usize,
    pub p: usize,
    pub s: usize,
    pub delta: f64,
    pub degree: usize,
}

impl LowDegParams {
    pub fn new(n: usize, p: usize, s: usize, delta: f64, degree: usize) -> Result<Self> {
        let params = LowDegParams {
            n,
            p,
            s,
            delta,
            degree,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        self.model_params().validate()
    }

    pub fn model_params(&self) -> ModelParams {
        ModelParams {
            n: self.n,
            p: self.p,
            s: self.s,
            delta: self.delta,
            kappa: None,
        }
    }

    /// `r = √(nΔ⁴/p) + √(4nΔ⁴D/s²)`.
    pub fn radius(&self) -> f64 {
        let (n, p, s, d) = (
            self.n as f64,
            self.p as f64,
            self.s as f64,
            self.degree as f64,
        );
        let d4 = self.delta.powi(4);
        (n * d4 / p).sqrt() + (4.0 * n * d4 * d / (s * s)).sqrt()
    }

    /// Number of second draws `2ⁿ·C(p,s)·2ˢ`.
    pub fn enumeration_states(&self) -> f64 {
        2f64.powi(self.n as i32) * binomial(self.p, self.s) * 2f64.powi(self.s as i32)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Exact,
    MonteCarlo,
    Bound,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormEstimate {
    /// Estimate of `‖L≤D‖²`.
    pub value: f64,
    /// Monte-Carlo standard error, 0 for exact values and bounds.
    pub std_error: f64,
    pub method: Method,
}

fn ln_factorials(upto: usize) -> Vec<f64> {
    let mut table = Vec::with_capacity(upto + 1);
    let mut acc = 0.0;
    table.push(acc);
    for k in 1..=upto {
        acc += (k as f64).ln();
        table.push(acc);
    }
    table
}

fn ln_binomial(ln_fact: &[f64], n: usize, k: usize) -> f64 {
    ln_fact[n] - ln_fact[k] - ln_fact[n - k]
}

/// `C(n, k)` as a float; exact while it fits in 53 bits.
fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut c = 1.0;
    for i in 0..k {
        c = c * (n - i) as f64 / (i + 1) as f64;
    }
    c.round()
}

/// `E|S ∩ S̃|^d` for independent uniform `s`-subsets of `{1..p}`, from the
/// hypergeometric law `P(|S∩S̃| = j) = C(s,j) C(p−s,s−j) / C(p,s)`.
pub fn overlap_moment_exact(p: usize, s: usize, d: u32) -> Result<f64> {
    if p == 0 || s > p {
        return Err(Error::InvalidParameter(format!(
            "need s <= p and p >= 1, got p={p} s={s}"
        )));
    }
    let lf = ln_factorials(p);
    let lo = (2 * s).saturating_sub(p);
    let total = ln_binomial(&lf, p, s);
    let mut moment = 0.0;
    for j in lo..=s {
        let prob = (ln_binomial(&lf, s, j) + ln_binomial(&lf, p - s, s - j) - total).exp();
        moment += prob * (j as f64).powi(d as i32);
    }
    Ok(moment)
}

/// `Σ_{d=0}^{D} x^d / d!`, each term evaluated in log-space.
fn truncated_exp(x: f64, ln_fact: &[f64]) -> Result<f64> {
    if x == 0.0 {
        return Ok(1.0);
    }
    let lx = x.abs().ln();
    let mut sum = 0.0;
    for (d, lf) in ln_fact.iter().enumerate() {
        let t = d as f64 * lx - lf;
        if t > MAX_LOG_TERM {
            return Err(Error::Overflow { degree: d });
        }
        let term = t.exp();
        sum += if x < 0.0 && d % 2 == 1 { -term } else { term };
    }
    if !sum.is_finite() {
        return Err(Error::Overflow {
            degree: ln_fact.len() - 1,
        });
    }
    Ok(sum)
}

/// Monte-Carlo estimate from `reps` independent pairs of prior draws taken
/// from `(seed, Stream::LowDegree)`.
pub fn lowdeg_norm_mc(params: &LowDegParams, reps: usize, seed: u64) -> Result<NormEstimate> {
    params.validate()?;
    if reps < 2 {
        return Err(Error::InvalidParameter(format!(
            "need reps >= 2, got {reps}"
        )));
    }
    let lf = ln_factorials(params.degree);
    let mp = params.model_params();
    let mut rng = rng::stream(seed, Stream::LowDegree);
    let mut values = Vec::with_capacity(reps);
    for _ in 0..reps {
        values.push(pair_summand(&mp, &lf, &mut rng)?);
    }
    let mean = values.iter().sum::<f64>() / reps as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (reps - 1) as f64;
    if !mean.is_finite() || !var.is_finite() {
        return Err(Error::Overflow {
            degree: params.degree,
        });
    }
    Ok(NormEstimate {
        value: mean,
        std_error: (var / reps as f64).sqrt(),
        method: Method::MonteCarlo,
    })
}

fn pair_summand<R: Rng + ?Sized>(mp: &ModelParams, lf: &[f64], rng: &mut R) -> Result<f64> {
    let (theta, z) = sample_prior_from(mp, rng)?;
    let (theta2, z2) = sample_prior_from(mp, rng)?;
    let a: i64 = z
        .as_slice()
        .iter()
        .zip(z2.as_slice())
        .map(|(&x, &y)| i64::from(x * y))
        .sum();
    truncated_exp(a as f64 * dot(theta.theta(), theta2.theta()), lf)
}

/// Exact value by enumerating the second draw against the canonical first
/// draw `z = 1`, `S = {0..s−1}`, positive signs.
pub fn lowdeg_norm_exact(params: &LowDegParams) -> Result<NormEstimate> {
    params.validate()?;
    let amp = params.delta / (params.s as f64).sqrt();
    let theta = SparseMean::constant_on(params.p, &(0..params.s).collect::<Vec<_>>(), amp)?;
    lowdeg_norm_exact_anchored(params, &theta, &Labels::constant(params.n, 1))
}

/// [`lowdeg_norm_exact`] with the first draw `(θ, z)` given.
///
/// The summand only sees the pair through `⟨z,z̃⟩` and `⟨θ,θ̃⟩`. Flipping
/// entries of `z̃`, flipping signs of `θ̃` and permuting coordinates map the
/// prior onto itself, so the joint law of the two inner products under a
/// uniform second draw is the same for every first draw. Averaging over the
/// second draw alone therefore gives the full expectation. `z̃` and `θ̃` are
/// independent, so the two inner products are tabulated separately and the
/// expectation of each power factorizes.
pub fn lowdeg_norm_exact_anchored(
    params: &LowDegParams,
    theta: &SparseMean,
    z: &Labels,
) -> Result<NormEstimate> {
    params.validate()?;
    let (n, p, s) = (params.n, params.p, params.s);
    let states = params.enumeration_states();
    if states > ENUMERATION_LIMIT {
        return Err(Error::TooLarge {
            states,
            limit: ENUMERATION_LIMIT,
        });
    }
    let amp = params.delta / (s as f64).sqrt();
    let anchored = theta.dim() == p
        && z.len() == n
        && if amp == 0.0 {
            theta.is_zero()
        } else {
            theta.support().len() == s
                && theta
                    .support()
                    .iter()
                    .all(|&j| theta.theta()[j].abs() == amp)
        };
    if !anchored {
        return Err(Error::InvalidParameter(
            "anchor is not a draw from the prior with these parameters".into(),
        ));
    }

    // ⟨z, z̃⟩ ranges over −n..=n.
    let mut z_counts = vec![0u64; 2 * n + 1];
    for mask in 0u64..(1u64 << n) {
        let a: i64 = z
            .as_slice()
            .iter()
            .enumerate()
            .map(|(i, &zi)| {
                if mask >> i & 1 == 1 {
                    -i64::from(zi)
                } else {
                    i64::from(zi)
                }
            })
            .sum();
        z_counts[(a + n as i64) as usize] += 1;
    }

    // ⟨θ, θ̃⟩ = (Δ²/s)·k with k ranging over −s..=s.
    let mut anchor_sign = vec![0i64; p];
    for &j in theta.support() {
        anchor_sign[j] = if theta.theta()[j] > 0.0 { 1 } else { -1 };
    }
    let mut k_counts = vec![0u64; 2 * s + 1];
    let mut subset: Vec<usize> = (0..s).collect();
    loop {
        for mask in 0u64..(1u64 << s) {
            let k: i64 = subset
                .iter()
                .enumerate()
                .map(|(b, &j)| {
                    if mask >> b & 1 == 1 {
                        -anchor_sign[j]
                    } else {
                        anchor_sign[j]
                    }
                })
                .sum();
            k_counts[(k + s as i64) as usize] += 1;
        }
        if !next_combination(&mut subset, p) {
            break;
        }
    }

    // Σ_d E⟨z,z̃⟩^d E⟨θ,θ̃⟩^d / d! from power sums over the integer tables.
    // Those sums are exact while below 2^53, so odd moments cancel exactly
    // and the d = 0 term contributes exactly 1.
    let lf = ln_factorials(params.degree);
    let ln_z_total = (z_counts.iter().sum::<u64>() as f64).ln();
    let ln_k_total = (k_counts.iter().sum::<u64>() as f64).ln();
    let ln_step = (amp * amp).ln();
    let mut value = 1.0;
    for (d, &lf_d) in lf.iter().enumerate().skip(1) {
        let za = power_sum(&z_counts, n, d);
        let kb = power_sum(&k_counts, s, d);
        if za == 0.0 || kb == 0.0 || amp == 0.0 {
            continue;
        }
        let log =
            za.abs().ln() - ln_z_total + kb.abs().ln() - ln_k_total + d as f64 * ln_step - lf_d;
        if !(log <= MAX_LOG_TERM) {
            return Err(Error::Overflow { degree: d });
        }
        value += (za.signum() * kb.signum()) * log.exp();
    }
    Ok(NormEstimate {
        value,
        std_error: 0.0,
        method: Method::Exact,
    })
}

/// `Σ_j counts[j] (j − offset)^d`.
fn power_sum(counts: &[u64], offset: usize, d: usize) -> f64 {
    counts
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(j, &c)| c as f64 * (j as f64 - offset as f64).powi(d as i32))
        .sum()
}

/// Advances a sorted `k`-subset of `0..n` to the next one in lexicographic
/// order. Returns false after the last subset.
fn next_combination(c: &mut [usize], n: usize) -> bool {
    let k = c.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if c[i] < n - k + i {
            c[i] += 1;
            for j in i + 1..k {
                c[j] = c[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// `1 + Σ_{d=1}^{⌊D/2⌋} r^{2d}` with `r` from [`LowDegParams::radius`].
/// Only valid for `r < 1`; otherwise `Error::OutsideRegime`.
pub fn lowdeg_bound(params: &LowDegParams) -> Result<f64> {
    params.validate()?;
    let r = params.radius();
    if !(r < 1.0) {
        return Err(Error::OutsideRegime { r });
    }
    let r2 = r * r;
    let mut term = 1.0;
    let mut sum = 1.0;
    for _ in 0..params.degree / 2 {
        term *= r2;
        sum += term;
    }
    Ok(sum)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TestOutcome {
    Zero,
    One,
    /// `f` fell outside `[0, 1]`.
    Undefined,
}

/// `Ψ_f`: a Bernoulli(`f`) coin from `(seed, Stream::Coin)` when `f ∈ [0,1]`.
pub fn randomized_test(f: f64, seed: u64) -> TestOutcome {
    if !(0.0..=1.0).contains(&f) {
        return TestOutcome::Undefined;
    }
    let u: f64 = rng::stream(seed, Stream::Coin).random();
    if u < f {
        TestOutcome::One
    } else {
        TestOutcome::Zero
    }
}
