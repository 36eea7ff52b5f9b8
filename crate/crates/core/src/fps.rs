//! The ℓ1-penalized Fantope program
//!
//! ```text
//! maximize ⟨M, P⟩ − λ‖P‖₁   over   P = Pᵀ, tr P = 1, 0 ⪯ P ⪯ I
//! ```
//!
//! solved by ADMM on the split `P = Y`: `P` carries the Fantope constraint,
//! `Y` the penalty. The returned estimate is `Y`, whose zeros are exact.

use crate::error::{Error, Result};
use crate::linalg::{
    diagonal_support, eigenvalues, fantope1_project, soft_threshold_scalar, FantopeCandidate,
    SymmetricMatrix, DEFAULT_SUPP_TOL,
};
use crate::model::{planted_projector, Dataset, ModelParams, SparseMean};

/// Default constant in the penalty level `C (1 + κ) √(log p / n)`.
pub const DEFAULT_LAMBDA_C: f64 = 2.0;

/// Residual ratio that triggers a change of `ρ`.
const BALANCE_RATIO: f64 = 10.0;
/// Iterations between checks for residual balancing.
const BALANCE_EVERY: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub lambda: f64,
    /// Initial ADMM penalty.
    pub rho: f64,
    pub max_iters: usize,
    /// Relative primal tolerance: `‖P − Y‖_F ≤ tol_primal (1 + ‖P‖_F)`.
    pub tol_primal: f64,
    /// Absolute dual tolerance: `ρ ‖Y − Y_prev‖_F ≤ tol_dual`.
    pub tol_dual: f64,
    pub supp_tol: f64,
    /// Double or halve `ρ` when one residual exceeds the other tenfold.
    pub residual_balancing: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            lambda: 0.0,
            rho: 1.0,
            max_iters: 20_000,
            tol_primal: 1e-7,
            tol_dual: 1e-7,
            supp_tol: DEFAULT_SUPP_TOL,
            residual_balancing: true,
        }
    }
}

impl SolverConfig {
    pub fn with_lambda(lambda: f64) -> Self {
        Self {
            lambda,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!(
                    "{name} must be positive, got {v}"
                )))
            }
        };
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "lambda must be finite and >= 0, got {}",
                self.lambda
            )));
        }
        positive("rho", self.rho)?;
        positive("tol_primal", self.tol_primal)?;
        positive("tol_dual", self.tol_dual)?;
        positive("supp_tol", self.supp_tol)?;
        if self.max_iters == 0 {
            return Err(Error::InvalidParameter("max_iters must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverResult {
    /// The sparse iterate `Y`, support read off its diagonal exactly.
    pub p_hat: FantopeCandidate,
    /// The Fantope-side iterate `P`.
    pub fantope_iterate: SymmetricMatrix,
    /// `{i : |P_ii| > supp_tol}` for the Fantope-side iterate.
    pub fantope_support: Vec<usize>,
    /// Unscaled dual variable `ρU`; at a solution `ρU/λ` is a subgradient of
    /// `‖·‖₁` at `Y`.
    pub dual: SymmetricMatrix,
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    /// `⟨M, P̂⟩ − λ‖P̂‖₁` at the reported estimate.
    pub objective: f64,
    pub converged: bool,
    pub rho: f64,
}

/// `M̂ = XXᵀ/n − I_p`.
pub fn input_matrix(data: &Dataset) -> SymmetricMatrix {
    data.x.gram(data.n() as f64).add_scaled_identity(-1.0)
}

/// `C (1 + κ) √(log p / n)` with the natural log.
pub fn default_lambda(params: &ModelParams, c: f64) -> Result<f64> {
    if params.p < 2 {
        return Err(Error::InvalidParameter(format!(
            "default lambda needs p >= 2, got {}",
            params.p
        )));
    }
    if params.n == 0 {
        return Err(Error::InvalidParameter("n must be positive".into()));
    }
    if !(c > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "C must be positive, got {c}"
        )));
    }
    let kappa = params.kappa_or_default();
    if !(kappa > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "kappa must be positive, got {kappa}"
        )));
    }
    Ok(c * (1.0 + kappa) * ((params.p as f64).ln() / params.n as f64).sqrt())
}

/// `⟨M, P⟩ − λ‖P‖₁`.
pub fn objective(m: &SymmetricMatrix, p: &SymmetricMatrix, lambda: f64) -> f64 {
    m.inner(p) - lambda * p.l1_norm()
}

/// ADMM for the penalized Fantope program.
///
/// Iterates, with scaled dual `U`,
/// `P ← Π_F(Y − U + M/ρ)`, `Y ← soft(P + U, λ/ρ)` with the diagonal clamped
/// at zero, `U ← U + P − Y`. Non-convergence is reported through
/// `converged = false`; non-finite iterates are an error.
pub fn solve_sdp(m: &SymmetricMatrix, cfg: &SolverConfig) -> Result<SolverResult> {
    cfg.validate()?;
    if !m.is_finite() {
        return Err(Error::NonFinite("solve_sdp input".into()));
    }
    let n = m.dim();
    if n == 0 {
        return Err(Error::InvalidParameter("empty matrix".into()));
    }

    let mut rho = cfg.rho;
    let mut y = SymmetricMatrix::zeros(n);
    let mut u = SymmetricMatrix::zeros(n);
    let mut p = SymmetricMatrix::zeros(n);
    let mut primal = f64::INFINITY;
    let mut dual = f64::INFINITY;
    let mut converged = false;
    let mut iterations = 0;

    for it in 1..=cfg.max_iters {
        iterations = it;
        let w = SymmetricMatrix::from_fn(n, |i, j| y.get(i, j) - u.get(i, j) + m.get(i, j) / rho);
        p = fantope1_project(&w)?;

        let t = cfg.lambda / rho;
        let y_new = SymmetricMatrix::from_fn(n, |i, j| {
            let v = p.get(i, j) + u.get(i, j);
            let shrunk = soft_threshold_scalar(v, t);
            if i == j {
                shrunk.max(0.0)
            } else {
                shrunk
            }
        });
        u = SymmetricMatrix::from_fn(n, |i, j| u.get(i, j) + p.get(i, j) - y_new.get(i, j));

        primal = p.distance(&y_new);
        dual = rho * y.distance(&y_new);
        y = y_new;
        if !(primal.is_finite() && dual.is_finite()) {
            return Err(Error::NonFinite(format!("ADMM iterate at iteration {it}")));
        }

        if primal <= cfg.tol_primal * (1.0 + p.frobenius_norm()) && dual <= cfg.tol_dual {
            converged = true;
            break;
        }

        if cfg.residual_balancing && it % BALANCE_EVERY == 0 {
            let scaled_primal = primal / (1.0 + p.frobenius_norm());
            if scaled_primal > BALANCE_RATIO * dual {
                rho *= 2.0;
                u = u.map(|x| 0.5 * x);
            } else if dual > BALANCE_RATIO * scaled_primal {
                rho *= 0.5;
                u = u.map(|x| 2.0 * x);
            }
        }
    }

    let objective = objective(m, &y, cfg.lambda);
    let fantope_support = diagonal_support(&p, cfg.supp_tol);
    Ok(SolverResult {
        p_hat: FantopeCandidate::new(y, 0.0),
        fantope_iterate: p,
        fantope_support,
        dual: u.map(|x| rho * x),
        iterations,
        primal_residual: primal,
        dual_residual: dual,
        objective,
        converged,
        rho,
    })
}

/// Outcome of the support-recovery certificate check.
#[derive(Debug, Clone, PartialEq)]
pub struct CertificateReport {
    /// `max |Z̃_ij|` over `i ≠ j`, `(i, j) ∉ S × S`, where `Z̃_ij = M_ij/λ`.
    pub off_support_max: f64,
    /// `‖Z̃‖∞ ≤ 1`.
    pub subgradient_valid: bool,
    /// `supp(P̂) ⊆ S`.
    pub support_contained: bool,
    /// `λ_max(M − λZ̃) − ⟨M − λZ̃, P̂⟩`; near zero when `P̂` maximizes the
    /// linearized objective.
    pub stationarity_gap: f64,
}

impl CertificateReport {
    /// Both conditions of the support-recovery argument hold.
    pub fn valid(&self) -> bool {
        self.subgradient_valid && self.support_contained
    }
}

/// Builds the modified subgradient `Z̃`: `M_ij/λ` off `S × S` (off the
/// diagonal), zero on the diagonal, and on `S × S` the subgradient read from
/// the solver (`sgn P̂_ij` where `P̂_ij ≠ 0`, else the clipped dual).
pub fn dual_certificate(
    m: &SymmetricMatrix,
    result: &SolverResult,
    support: &[usize],
    lambda: f64,
) -> Result<CertificateReport> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "certificate needs lambda > 0, got {lambda}"
        )));
    }
    let n = m.dim();
    if result.p_hat.matrix.dim() != n {
        return Err(Error::DimensionMismatch(format!(
            "solver result of dimension {} against M of dimension {n}",
            result.p_hat.matrix.dim()
        )));
    }
    let mut in_s = vec![false; n];
    for &j in support {
        if j >= n {
            return Err(Error::DimensionMismatch(format!(
                "support index {j} >= {n}"
            )));
        }
        in_s[j] = true;
    }

    let p_hat = &result.p_hat.matrix;
    let mut off_support_max: f64 = 0.0;
    let z = SymmetricMatrix::from_fn(n, |i, j| {
        if i == j {
            0.0
        } else if in_s[i] && in_s[j] {
            let v = p_hat.get(i, j);
            if v > 0.0 {
                1.0
            } else if v < 0.0 {
                -1.0
            } else {
                (result.dual.get(i, j) / lambda).clamp(-1.0, 1.0)
            }
        } else {
            m.get(i, j) / lambda
        }
    });
    for i in 0..n {
        for j in 0..n {
            if i != j && !(in_s[i] && in_s[j]) {
                off_support_max = off_support_max.max(z.get(i, j).abs());
            }
        }
    }
    let support_contained = result.p_hat.support.iter().all(|&j| in_s[j]);

    let linear = m.lin_comb(1.0, &z, -lambda);
    let top = eigenvalues(&linear)?[0];
    let stationarity_gap = top - linear.inner(p_hat);

    Ok(CertificateReport {
        off_support_max,
        subgradient_valid: off_support_max <= 1.0,
        support_contained,
        stationarity_gap,
    })
}

/// `‖P̂ − θθᵀ/‖θ‖²‖_F`.
pub fn projector_error(p_hat: &FantopeCandidate, theta: &SparseMean) -> Result<f64> {
    let target = planted_projector(theta)?;
    if target.dim() != p_hat.matrix.dim() {
        return Err(Error::DimensionMismatch(format!(
            "estimate of dimension {} against theta of length {}",
            p_hat.matrix.dim(),
            target.dim()
        )));
    }
    Ok(p_hat.matrix.distance(&target))
}
