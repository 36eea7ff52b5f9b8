//! One CSV row per (grid cell, replicate).
//!
//! Files start with the comment line `# schema=1` followed by a header row.
//! Integral values are written as plain integers and every other float in
//! scientific notation with 17 significant digits, so values read back
//! bit-identically. Outputs that do not apply to a kind are left empty.

use std::io::{Read, Write};

use crate::config::{Cell, Kind};
use crate::error::{CliError, Result};

pub const SCHEMA_LINE: &str = "# schema=1";

pub const PARAM_COLUMNS: [&str; 12] = [
    "kind",
    "cell",
    "replicate",
    "seed",
    "n",
    "p",
    "s",
    "delta",
    "kappa",
    "lambda_c",
    "degree",
    "epsilon",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Loss,
    Lambda,
    Iterations,
    Converged,
    PrimalResidual,
    DualResidual,
    Objective,
    SupportSize,
    /// 1 when the estimated support lies inside the true one.
    SupportRecovered,
    ProjectorError,
    CertificateValid,
    KHatInSupport,
    StatisticNull,
    Statistic,
    Threshold,
    RejectNull,
    RejectPlanted,
    Norm,
    NormSe,
    NormExact,
    Bound,
    WallTime,
}

impl Metric {
    pub const ALL: [Metric; 22] = [
        Metric::Loss,
        Metric::Lambda,
        Metric::Iterations,
        Metric::Converged,
        Metric::PrimalResidual,
        Metric::DualResidual,
        Metric::Objective,
        Metric::SupportSize,
        Metric::SupportRecovered,
        Metric::ProjectorError,
        Metric::CertificateValid,
        Metric::KHatInSupport,
        Metric::StatisticNull,
        Metric::Statistic,
        Metric::Threshold,
        Metric::RejectNull,
        Metric::RejectPlanted,
        Metric::Norm,
        Metric::NormSe,
        Metric::NormExact,
        Metric::Bound,
        Metric::WallTime,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Loss => "loss",
            Metric::Lambda => "lambda",
            Metric::Iterations => "iterations",
            Metric::Converged => "converged",
            Metric::PrimalResidual => "primal_residual",
            Metric::DualResidual => "dual_residual",
            Metric::Objective => "objective",
            Metric::SupportSize => "support_size",
            Metric::SupportRecovered => "support_recovered",
            Metric::ProjectorError => "projector_error",
            Metric::CertificateValid => "certificate_valid",
            Metric::KHatInSupport => "k_hat_in_support",
            Metric::StatisticNull => "statistic_null",
            Metric::Statistic => "statistic",
            Metric::Threshold => "threshold",
            Metric::RejectNull => "reject_null",
            Metric::RejectPlanted => "reject_planted",
            Metric::Norm => "norm",
            Metric::NormSe => "norm_se",
            Metric::NormExact => "norm_exact",
            Metric::Bound => "bound",
            Metric::WallTime => "wall_time",
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRecord {
    pub kind: Kind,
    pub cell: usize,
    pub replicate: usize,
    pub seed: u64,
    pub params: Cell,
    values: [Option<f64>; Metric::ALL.len()],
}

impl ExperimentRecord {
    pub fn new(kind: Kind, cell: usize, replicate: usize, seed: u64, params: Cell) -> Self {
        ExperimentRecord {
            kind,
            cell,
            replicate,
            seed,
            params,
            values: [None; Metric::ALL.len()],
        }
    }

    pub fn get(&self, m: Metric) -> Option<f64> {
        self.values[m.index()]
    }

    pub fn set(&mut self, m: Metric, v: f64) {
        self.values[m.index()] = Some(v);
    }

    pub fn set_flag(&mut self, m: Metric, v: bool) {
        self.set(m, if v { 1.0 } else { 0.0 });
    }

    /// First output that is NaN or infinite.
    pub fn non_finite(&self) -> Option<Metric> {
        Metric::ALL
            .into_iter()
            .find(|&m| self.get(m).is_some_and(|v| !v.is_finite()))
    }
}

/// Plain integer for integral values below 2^53, else 17 significant digits.
pub fn format_float(x: f64) -> String {
    if x.fract() == 0.0 && x.abs() < 9_007_199_254_740_992.0 {
        format!("{}", x as i64)
    } else {
        format!("{x:.16e}")
    }
}

pub fn header() -> Vec<&'static str> {
    PARAM_COLUMNS
        .iter()
        .copied()
        .chain(Metric::ALL.iter().map(|m| m.name()))
        .collect()
}

pub fn write_records<W: Write>(mut out: W, records: &[ExperimentRecord]) -> Result<()> {
    writeln!(out, "{SCHEMA_LINE}")?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header())?;
    for r in records {
        let c = &r.params;
        let mut row = vec![
            r.kind.as_str().to_string(),
            r.cell.to_string(),
            r.replicate.to_string(),
            r.seed.to_string(),
            c.n.to_string(),
            c.p.to_string(),
            c.s.to_string(),
            format_float(c.delta),
            c.kappa.map(format_float).unwrap_or_else(|| "auto".into()),
            format_float(c.lambda_c),
            c.degree.to_string(),
            format_float(c.epsilon),
        ];
        row.extend(
            Metric::ALL
                .iter()
                .map(|&m| r.get(m).map(format_float).unwrap_or_default()),
        );
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn field<T: std::str::FromStr>(row: &csv::StringRecord, idx: usize, name: &str) -> Result<T> {
    let raw = row.get(idx).unwrap_or("");
    raw.parse()
        .map_err(|_| CliError::Input(format!("column {name}: cannot parse '{raw}'")))
}

pub fn read_records<R: Read>(input: R) -> Result<Vec<ExperimentRecord>> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(input);
    let got: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    if got != header() {
        return Err(CliError::Input("header does not match schema 1".into()));
    }
    let mut records = Vec::new();
    for row in reader.records() {
        let row = row?;
        let kappa = match row.get(8).unwrap_or("") {
            "auto" => None,
            _ => Some(field(&row, 8, "kappa")?),
        };
        let params = Cell {
            n: field(&row, 4, "n")?,
            p: field(&row, 5, "p")?,
            s: field(&row, 6, "s")?,
            delta: field(&row, 7, "delta")?,
            kappa,
            lambda_c: field(&row, 9, "lambda_c")?,
            degree: field(&row, 10, "degree")?,
            epsilon: field(&row, 11, "epsilon")?,
        };
        let kind: Kind = row
            .get(0)
            .unwrap_or("")
            .parse()
            .map_err(|e: CliError| CliError::Input(e.to_string()))?;
        let mut rec = ExperimentRecord::new(
            kind,
            field(&row, 1, "cell")?,
            field(&row, 2, "replicate")?,
            field(&row, 3, "seed")?,
            params,
        );
        for (k, &m) in Metric::ALL.iter().enumerate() {
            let idx = PARAM_COLUMNS.len() + k;
            if !row.get(idx).unwrap_or("").is_empty() {
                rec.set(m, field(&row, idx, m.name())?);
            }
        }
        records.push(rec);
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cell() -> Cell {
        Cell {
            n: 10,
            p: 20,
            s: 3,
            delta: 1.0 / 3.0,
            kappa: None,
            lambda_c: 2.0,
            degree: 4,
            epsilon: 0.7,
        }
    }

    #[test]
    fn floats_survive_the_round_trip() {
        for x in [
            0.1,
            1.0 / 3.0,
            -2.5e-300,
            1e300,
            12345.0,
            0.0,
            f64::MIN_POSITIVE,
            4.0e17,
        ] {
            assert_eq!(format_float(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(format_float(47.0), "47");
        assert_eq!(format_float(0.5), "5.0000000000000000e-1");
    }

    #[test]
    fn records_round_trip_through_csv() {
        let mut a = ExperimentRecord::new(Kind::Cluster1, 0, 1, u64::MAX, cell());
        a.set(Metric::Loss, 0.015);
        a.set_flag(Metric::Converged, true);
        a.set(Metric::PrimalResidual, 3.2e-9);
        let mut b = ExperimentRecord::new(
            Kind::Lowdeg,
            1,
            0,
            7,
            Cell {
                kappa: Some(0.25),
                ..cell()
            },
        );
        b.set(Metric::Norm, 1.0 + 1e-15);
        let mut buf = Vec::new();
        write_records(&mut buf, &[a.clone(), b.clone()]).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# schema=1\nkind,cell,replicate,seed,"));
        assert_eq!(read_records(buf.as_slice()).unwrap(), vec![a, b]);
    }

    #[test]
    fn flags_non_finite_outputs() {
        let mut r = ExperimentRecord::new(Kind::Cluster2, 0, 0, 0, cell());
        assert_eq!(r.non_finite(), None);
        r.set(Metric::Statistic, f64::NAN);
        assert_eq!(r.non_finite(), Some(Metric::Statistic));
    }

    #[test]
    fn rejects_foreign_headers() {
        assert!(read_records("# schema=1\na,b\n1,2\n".as_bytes()).is_err());
    }
}
