//! Runs every (cell, replicate) of an [`ExperimentConfig`].
//!
//! Replicate `r` of cell `c` is keyed by `derive_seed(seed, c, r)` and
//! depends on nothing else, so records are identical whatever the number of
//! worker threads. They are returned in row-major (cell, replicate) order.

use std::time::Instant;

use rayon::prelude::*;

use sparsecluster::cluster::{sparse_cluster_splitting, sparse_spectral_cluster};
use sparsecluster::detect::{
    detection_statistic, detection_threshold, oracle_labels, random_labels, DetectConfig,
};
use sparsecluster::error::Error as CoreError;
use sparsecluster::fps::{
    default_lambda, dual_certificate, input_matrix, projector_error, solve_sdp, SolverConfig,
};
use sparsecluster::lowdeg::{lowdeg_bound, lowdeg_norm_exact, lowdeg_norm_mc, LowDegParams};
use sparsecluster::model::{sample_null, sample_planted, Dataset, Labels};
use sparsecluster::rng::derive_seed;

use crate::config::{Cell, ExperimentConfig, Kind, LabelerKind};
use crate::error::{CliError, Result};
use crate::record::{ExperimentRecord, Metric};

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<ExperimentRecord>> {
    cfg.validate()?;
    let cells = cfg.cells();
    let tasks: Vec<(usize, usize)> = (0..cells.len())
        .flat_map(|c| (0..cfg.replicates).map(move |r| (c, r)))
        .collect();
    let run = |&(c, r): &(usize, usize)| run_replicate(cfg, c, &cells[c], r);

    let results: Vec<Result<ExperimentRecord>> = if cfg.jobs == 1 {
        tasks.iter().map(run).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.jobs)
            .build()
            .map_err(|e| CliError::Config(format!("cannot start {} workers: {e}", cfg.jobs)))?;
        pool.install(|| tasks.par_iter().map(run).collect())
    };
    results.into_iter().collect()
}

fn truth_support(data: &Dataset) -> &[usize] {
    data.truth
        .as_ref()
        .map(|t| t.theta.support())
        .unwrap_or(&[])
}

fn contained(estimate: &[usize], truth: &[usize]) -> bool {
    estimate.iter().all(|j| truth.contains(j))
}

fn solver_for(cfg: &ExperimentConfig, cell: &Cell) -> Result<SolverConfig> {
    let lambda = default_lambda(&cell.model_params(), cell.lambda_c)?;
    Ok(SolverConfig {
        lambda,
        ..cfg.solver
    })
}

pub fn run_replicate(
    cfg: &ExperimentConfig,
    c: usize,
    cell: &Cell,
    r: usize,
) -> Result<ExperimentRecord> {
    let seed = derive_seed(cfg.seed, c as u64, r as u64);
    let mut rec = ExperimentRecord::new(cfg.kind, c, r, seed, *cell);
    let params = cell.model_params();
    let start = Instant::now();

    match cfg.kind {
        Kind::Cluster1 => {
            let data = sample_planted(&params, seed)?;
            let solver = solver_for(cfg, cell)?;
            let res = sparse_spectral_cluster(&data, &solver)?;
            rec.set(Metric::Lambda, solver.lambda);
            if let Some(loss) = res.loss {
                rec.set(Metric::Loss, loss);
            }
            if let Some(s) = &res.solver {
                rec.set(Metric::Iterations, s.iterations as f64);
                rec.set_flag(Metric::Converged, s.converged);
                rec.set(Metric::PrimalResidual, s.primal_residual);
                rec.set(Metric::DualResidual, s.dual_residual);
                rec.set(Metric::Objective, s.objective);
            }
            rec.set(Metric::SupportSize, res.support.len() as f64);
            rec.set_flag(
                Metric::SupportRecovered,
                contained(&res.support, truth_support(&data)),
            );
        }
        Kind::SdpDiag => {
            let data = sample_planted(&params, seed)?;
            let solver = solver_for(cfg, cell)?;
            let m = input_matrix(&data);
            let sol = solve_sdp(&m, &solver)?;
            let truth = truth_support(&data);
            rec.set(Metric::Lambda, solver.lambda);
            rec.set(Metric::Iterations, sol.iterations as f64);
            rec.set_flag(Metric::Converged, sol.converged);
            rec.set(Metric::PrimalResidual, sol.primal_residual);
            rec.set(Metric::DualResidual, sol.dual_residual);
            rec.set(Metric::Objective, sol.objective);
            rec.set(Metric::SupportSize, sol.p_hat.support.len() as f64);
            rec.set_flag(
                Metric::SupportRecovered,
                contained(&sol.p_hat.support, truth),
            );
            if let Some(t) = &data.truth {
                if !t.theta.is_zero() {
                    rec.set(
                        Metric::ProjectorError,
                        projector_error(&sol.p_hat, &t.theta)?,
                    );
                }
            }
            if solver.lambda > 0.0 {
                let cert = dual_certificate(&m, &sol, truth, solver.lambda)?;
                rec.set_flag(Metric::CertificateValid, cert.valid());
            }
        }
        Kind::Cluster2 => {
            let data = sample_planted(&params, seed)?;
            let res = sparse_cluster_splitting(&data, cell.s, seed)?;
            let truth = truth_support(&data);
            if let Some(loss) = res.loss {
                rec.set(Metric::Loss, loss);
            }
            if let Some(k) = res.k_hat {
                rec.set_flag(Metric::KHatInSupport, truth.contains(&k));
            }
            rec.set(Metric::SupportSize, res.support.len() as f64);
            rec.set_flag(Metric::SupportRecovered, contained(&res.support, truth));
        }
        Kind::Lowdeg => {
            let lp = LowDegParams::new(cell.n, cell.p, cell.s, cell.delta, cell.degree)?;
            let mc = lowdeg_norm_mc(&lp, cfg.mc_reps, seed)?;
            rec.set(Metric::Norm, mc.value);
            rec.set(Metric::NormSe, mc.std_error);
            match lowdeg_norm_exact(&lp) {
                Ok(v) => rec.set(Metric::NormExact, v.value),
                Err(CoreError::TooLarge { .. }) => {}
                Err(e) => return Err(e.into()),
            }
            match lowdeg_bound(&lp) {
                Ok(b) => rec.set(Metric::Bound, b),
                Err(CoreError::OutsideRegime { .. }) => {}
                Err(e) => return Err(e.into()),
            }
        }
        Kind::Detect => {
            let dc = DetectConfig {
                threshold_mult: cfg.threshold_mult,
                ..DetectConfig::new(cell.epsilon, cell.s, cell.p, cell.n)?
            };
            let solver = solver_for(cfg, cell)?;
            let s = cell.s;
            let labeler = move |d: &Dataset| -> sparsecluster::error::Result<Labels> {
                match cfg.labeler {
                    LabelerKind::Oracle => oracle_labels(d),
                    LabelerKind::Cluster1 => Ok(sparse_spectral_cluster(d, &solver)?.zhat),
                    LabelerKind::Cluster2 => Ok(sparse_cluster_splitting(d, s, seed)?.zhat),
                    LabelerKind::Random => Ok(random_labels(d.n(), seed)),
                }
            };
            let null_seed = derive_seed(seed, 0, 0);
            let alt_seed = derive_seed(seed, 1, 0);
            let t_null =
                detection_statistic(&sample_null(&params, null_seed)?, &labeler, &dc, null_seed)?;
            let t_alt =
                detection_statistic(&sample_planted(&params, alt_seed)?, &labeler, &dc, alt_seed)?;
            let threshold = detection_threshold(&dc);
            rec.set(Metric::StatisticNull, t_null);
            rec.set(Metric::Statistic, t_alt);
            rec.set(Metric::Threshold, threshold);
            rec.set_flag(Metric::RejectNull, t_null > threshold);
            rec.set_flag(Metric::RejectPlanted, t_alt > threshold);
        }
    }

    if cfg.wall_time {
        rec.set(Metric::WallTime, start.elapsed().as_secs_f64());
    }
    if let Some(m) = rec.non_finite() {
        return Err(CliError::Numerical(format!(
            "{} is not finite in cell {c}, replicate {r}",
            m.name()
        )));
    }
    Ok(rec)
}
