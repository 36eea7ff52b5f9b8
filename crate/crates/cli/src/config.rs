//! Experiment configuration.
//!
//! The file format is one `key=value` per line; `#` starts a comment and
//! list values are comma separated. Flags given on the command line replace
//! the file's value for the same key. List-valued keys span the grid; cells
//! are enumerated in row-major order over the keys of [`GRID_KEYS`], the last
//! key varying fastest.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use sparsecluster::fps::SolverConfig;
use sparsecluster::model::ModelParams;

use crate::error::{CliError, Result};

pub const GRID_KEYS: [&str; 8] = [
    "n", "p", "s", "delta", "kappa", "lambda_c", "degree", "epsilon",
];

const SCALAR_KEYS: [&str; 12] = [
    "kind",
    "replicates",
    "seed",
    "jobs",
    "out",
    "max_iters",
    "tol",
    "rho",
    "mc_reps",
    "threshold_mult",
    "labeler",
    "wall_time",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Cluster1,
    Cluster2,
    Lowdeg,
    Detect,
    SdpDiag,
}

impl Kind {
    pub fn as_str(self) -> &'static str {
        match self {
            Kind::Cluster1 => "cluster1",
            Kind::Cluster2 => "cluster2",
            Kind::Lowdeg => "lowdeg",
            Kind::Detect => "detect",
            Kind::SdpDiag => "sdp-diag",
        }
    }
}

impl FromStr for Kind {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "cluster1" => Kind::Cluster1,
            "cluster2" => Kind::Cluster2,
            "lowdeg" => Kind::Lowdeg,
            "detect" => Kind::Detect,
            "sdp-diag" => Kind::SdpDiag,
            other => {
                return Err(CliError::Config(format!(
                    "unknown experiment kind '{other}'"
                )))
            }
        })
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Clustering procedure plugged into the detection test.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelerKind {
    Oracle,
    Cluster1,
    Cluster2,
    Random,
}

impl FromStr for LabelerKind {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "oracle" => LabelerKind::Oracle,
            "cluster1" => LabelerKind::Cluster1,
            "cluster2" => LabelerKind::Cluster2,
            "random" => LabelerKind::Random,
            other => return Err(CliError::Config(format!("unknown labeler '{other}'"))),
        })
    }
}

/// One point of the parameter grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub n: usize,
    pub p: usize,
    pub s: usize,
    pub delta: f64,
    /// `None` means `Δ/√s`, the sup-norm of an equal-magnitude mean.
    pub kappa: Option<f64>,
    pub lambda_c: f64,
    pub degree: usize,
    pub epsilon: f64,
}

impl Cell {
    pub fn model_params(&self) -> ModelParams {
        ModelParams {
            n: self.n,
            p: self.p,
            s: self.s,
            delta: self.delta,
            kappa: self.kappa,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub kind: Kind,
    pub n: Vec<usize>,
    pub p: Vec<usize>,
    pub s: Vec<usize>,
    pub delta: Vec<f64>,
    pub kappa: Vec<Option<f64>>,
    pub lambda_c: Vec<f64>,
    pub degree: Vec<usize>,
    pub epsilon: Vec<f64>,
    pub replicates: usize,
    pub seed: u64,
    /// Worker threads; does not affect the output.
    pub jobs: usize,
    pub out: Option<PathBuf>,
    /// `lambda` is set per cell.
    pub solver: SolverConfig,
    /// Pair draws per low-degree Monte-Carlo estimate.
    pub mc_reps: usize,
    pub threshold_mult: f64,
    pub labeler: LabelerKind,
    /// Record measured wall time; off by default so reruns are byte-identical.
    pub wall_time: bool,
}

/// Reads `key=value` lines. Blank lines and `#` comments are skipped.
pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>> {
    let mut pairs = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("line {}: expected key=value", lineno + 1)))?;
        let key = key.trim().to_string();
        if pairs
            .insert(key.clone(), value.trim().to_string())
            .is_some()
        {
            return Err(CliError::Config(format!(
                "line {}: duplicate key '{key}'",
                lineno + 1
            )));
        }
    }
    Ok(pairs)
}

fn parse_one<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| CliError::Config(format!("{key}: cannot parse '{value}'")))
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    let items = value
        .split(',')
        .map(|v| parse_one(key, v))
        .collect::<Result<Vec<T>>>()?;
    if items.is_empty() {
        return Err(CliError::Config(format!("{key}: empty list")));
    }
    Ok(items)
}

fn parse_kappa(value: &str) -> Result<Vec<Option<f64>>> {
    value
        .split(',')
        .map(|v| match v.trim() {
            "auto" => Ok(None),
            x => parse_one("kappa", x).map(Some),
        })
        .collect()
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.trim() {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        other => Err(CliError::Config(format!(
            "{key}: expected true or false, got '{other}'"
        ))),
    }
}

impl ExperimentConfig {
    /// Builds a config from `key=value` pairs; absent keys take defaults.
    pub fn from_pairs(pairs: &BTreeMap<String, String>) -> Result<Self> {
        for key in pairs.keys() {
            if !GRID_KEYS.contains(&key.as_str()) && !SCALAR_KEYS.contains(&key.as_str()) {
                return Err(CliError::Config(format!("unknown key '{key}'")));
            }
        }
        let get = |k: &str| pairs.get(k).map(String::as_str);
        let kind = get("kind")
            .ok_or_else(|| CliError::Config("missing key 'kind'".into()))?
            .parse()?;

        let defaults = SolverConfig::default();
        let tol = get("tol")
            .map(|v| parse_one("tol", v))
            .transpose()?
            .unwrap_or(defaults.tol_primal);
        let solver = SolverConfig {
            rho: get("rho")
                .map(|v| parse_one("rho", v))
                .transpose()?
                .unwrap_or(defaults.rho),
            max_iters: get("max_iters")
                .map(|v| parse_one("max_iters", v))
                .transpose()?
                .unwrap_or(defaults.max_iters),
            tol_primal: tol,
            tol_dual: tol,
            ..defaults
        };

        let cfg = ExperimentConfig {
            kind,
            n: parse_list("n", get("n").unwrap_or("200"))?,
            p: parse_list("p", get("p").unwrap_or("500"))?,
            s: parse_list("s", get("s").unwrap_or("5"))?,
            delta: parse_list("delta", get("delta").unwrap_or("4"))?,
            kappa: parse_kappa(get("kappa").unwrap_or("auto"))?,
            lambda_c: parse_list("lambda_c", get("lambda_c").unwrap_or("2"))?,
            degree: parse_list("degree", get("degree").unwrap_or("4"))?,
            epsilon: parse_list("epsilon", get("epsilon").unwrap_or("1"))?,
            replicates: parse_one("replicates", get("replicates").unwrap_or("1"))?,
            seed: parse_one("seed", get("seed").unwrap_or("0"))?,
            jobs: parse_one("jobs", get("jobs").unwrap_or("1"))?,
            out: get("out").map(PathBuf::from),
            solver,
            mc_reps: parse_one("mc_reps", get("mc_reps").unwrap_or("1000"))?,
            threshold_mult: parse_one("threshold_mult", get("threshold_mult").unwrap_or("6"))?,
            labeler: get("labeler").unwrap_or("oracle").parse()?,
            wall_time: parse_bool("wall_time", get("wall_time").unwrap_or("false"))?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(CliError::Config("replicates must be >= 1".into()));
        }
        if self.jobs == 0 {
            return Err(CliError::Config("jobs must be >= 1".into()));
        }
        if self.kind == Kind::Lowdeg && self.mc_reps < 2 {
            return Err(CliError::Config("mc_reps must be >= 2".into()));
        }
        self.solver.validate()?;
        for cell in self.cells() {
            cell.model_params().validate()?;
            if !(cell.lambda_c > 0.0) {
                return Err(CliError::Config(format!(
                    "lambda_c must be positive, got {}",
                    cell.lambda_c
                )));
            }
            if !(cell.epsilon > 0.0 && cell.epsilon <= 1.0) {
                return Err(CliError::Config(format!(
                    "epsilon must lie in (0, 1], got {}",
                    cell.epsilon
                )));
            }
        }
        Ok(())
    }

    /// Grid cells in row-major order.
    pub fn cells(&self) -> Vec<Cell> {
        let mut cells = Vec::new();
        for &n in &self.n {
            for &p in &self.p {
                for &s in &self.s {
                    for &delta in &self.delta {
                        for &kappa in &self.kappa {
                            for &lambda_c in &self.lambda_c {
                                for &degree in &self.degree {
                                    for &epsilon in &self.epsilon {
                                        cells.push(Cell {
                                            n,
                                            p,
                                            s,
                                            delta,
                                            kappa,
                                            lambda_c,
                                            degree,
                                            epsilon,
                                        });
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        cells
    }
}
