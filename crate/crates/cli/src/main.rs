use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use sparsecluster::model::sample_planted;
use sparsecluster_cli::config::{parse_config_text, ExperimentConfig, Kind};
use sparsecluster_cli::dataset::write_dataset;
use sparsecluster_cli::error::{CliError, Result};
use sparsecluster_cli::record::{read_records, write_records};
use sparsecluster_cli::runner::run_experiment;
use sparsecluster_cli::summary::{format_summary_text, summarize, write_summary_csv};

#[derive(Parser)]
#[command(
    name = "sparsecluster",
    version,
    about = "Seeded simulations for sparse clustering of a symmetric Gaussian mixture"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw one dataset from the planted prior and write it as CSV
    Simulate(Common),
    /// Sparse spectral clustering through the penalized Fantope program
    Cluster1(Common),
    /// Clustering by three-way sample splitting
    Cluster2(Common),
    /// Low-degree likelihood-ratio norm: Monte-Carlo, exact and bound
    Lowdeg(Common),
    /// Detection test built on a clustering procedure
    Detect(Common),
    /// Run the experiment named by the `kind` key
    Sweep(Common),
    /// Per-cell mean, median and standard error of a record file
    Summarize {
        /// Record CSV written by one of the experiment commands
        input: PathBuf,
        /// Write the summary as CSV here; the aligned table goes to stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Flags shared by the experiment commands. Every flag replaces the key of
/// the same name in the config file; list values are comma separated.
#[derive(Args)]
struct Common {
    /// key=value config file
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<String>,
    /// Output CSV (stdout when absent)
    #[arg(long)]
    out: Option<String>,
    #[arg(long)]
    replicates: Option<String>,
    /// Worker threads; output does not depend on it
    #[arg(long)]
    jobs: Option<String>,
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    p: Option<String>,
    #[arg(long)]
    s: Option<String>,
    #[arg(long)]
    delta: Option<String>,
    /// Sup-norm used in the default lambda, or `auto` for delta/sqrt(s)
    #[arg(long)]
    kappa: Option<String>,
    /// Constant C in lambda = C (1 + kappa) sqrt(ln p / n)
    #[arg(long = "lambda-C")]
    lambda_c: Option<String>,
    #[arg(long)]
    degree: Option<String>,
    #[arg(long)]
    epsilon: Option<String>,
    /// Any other config key, e.g. --set labeler=cluster1
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl Common {
    fn pairs(&self, kind: Option<Kind>) -> Result<BTreeMap<String, String>> {
        let mut pairs = match &self.config {
            Some(path) => parse_config_text(&std::fs::read_to_string(path)?)?,
            None => BTreeMap::new(),
        };
        for item in &self.set {
            let (k, v) = item.split_once('=').ok_or_else(|| {
                CliError::Config(format!("--set expects KEY=VALUE, got '{item}'"))
            })?;
            pairs.insert(k.trim().to_string(), v.trim().to_string());
        }
        let flags = [
            ("seed", &self.seed),
            ("out", &self.out),
            ("replicates", &self.replicates),
            ("jobs", &self.jobs),
            ("n", &self.n),
            ("p", &self.p),
            ("s", &self.s),
            ("delta", &self.delta),
            ("kappa", &self.kappa),
            ("lambda_c", &self.lambda_c),
            ("degree", &self.degree),
            ("epsilon", &self.epsilon),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                pairs.insert(key.to_string(), v.clone());
            }
        }
        if let Some(kind) = kind {
            pairs.insert("kind".into(), kind.as_str().into());
        }
        Ok(pairs)
    }
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn experiment(common: &Common, kind: Option<Kind>) -> Result<()> {
    let cfg = ExperimentConfig::from_pairs(&common.pairs(kind)?)?;
    let records = run_experiment(&cfg)?;
    let mut out = output(cfg.out.as_deref())?;
    write_records(&mut out, &records)?;
    out.flush()?;
    Ok(())
}

fn simulate(common: &Common) -> Result<()> {
    // Any kind works here; only the model parameters are read.
    let cfg = ExperimentConfig::from_pairs(&common.pairs(Some(Kind::Cluster1))?)?;
    let cells = cfg.cells();
    if cells.len() != 1 {
        return Err(CliError::Config(
            "simulate takes a single value per parameter".into(),
        ));
    }
    let data = sample_planted(&cells[0].model_params(), cfg.seed)?;
    let mut out = output(cfg.out.as_deref())?;
    write_dataset(&mut out, &data)?;
    out.flush()?;
    Ok(())
}

fn summarize_file(input: &Path, out: Option<&Path>) -> Result<()> {
    let records = read_records(File::open(input)?)?;
    let summaries = summarize(&records)?;
    if let Some(path) = out {
        let mut w = BufWriter::new(File::create(path)?);
        write_summary_csv(&mut w, &summaries)?;
        w.flush()?;
    }
    let mut stdout = io::stdout().lock();
    stdout.write_all(format_summary_text(&summaries).as_bytes())?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate(c) => simulate(c),
        Command::Cluster1(c) => experiment(c, Some(Kind::Cluster1)),
        Command::Cluster2(c) => experiment(c, Some(Kind::Cluster2)),
        Command::Lowdeg(c) => experiment(c, Some(Kind::Lowdeg)),
        Command::Detect(c) => experiment(c, Some(Kind::Detect)),
        Command::Sweep(c) => experiment(c, None),
        Command::Summarize { input, out } => summarize_file(input, out.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
