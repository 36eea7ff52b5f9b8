//! Per-cell mean, median and standard error of every recorded output.

use std::io::Write;

use crate::config::{Cell, Kind};
use crate::error::{CliError, Result};
use crate::record::{format_float, ExperimentRecord, Metric};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stat {
    pub count: usize,
    pub mean: f64,
    pub median: f64,
    /// Sample standard deviation over `√count`; `None` for a single value.
    pub se: Option<f64>,
}

impl Stat {
    pub fn of(values: &[f64]) -> Option<Stat> {
        let count = values.len();
        if count == 0 {
            return None;
        }
        let k = count as f64;
        let mean = values.iter().sum::<f64>() / k;
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let median = if count % 2 == 1 {
            sorted[count / 2]
        } else {
            0.5 * (sorted[count / 2 - 1] + sorted[count / 2])
        };
        let se = (count > 1).then(|| {
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0);
            (var / k).sqrt()
        });
        Some(Stat {
            count,
            mean,
            median,
            se,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellSummary {
    pub kind: Kind,
    pub cell: usize,
    pub params: Cell,
    pub replicates: usize,
    pub stats: Vec<(Metric, Stat)>,
}

impl CellSummary {
    pub fn stat(&self, m: Metric) -> Option<&Stat> {
        self.stats.iter().find(|(k, _)| *k == m).map(|(_, s)| s)
    }
}

/// One summary per distinct `(kind, cell)`, in order of first appearance.
pub fn summarize(records: &[ExperimentRecord]) -> Result<Vec<CellSummary>> {
    if records.is_empty() {
        return Err(CliError::Input("no records to summarize".into()));
    }
    let mut groups: Vec<Vec<&ExperimentRecord>> = Vec::new();
    for r in records {
        match groups
            .iter_mut()
            .find(|g| g[0].kind == r.kind && g[0].cell == r.cell)
        {
            Some(g) => g.push(r),
            None => groups.push(vec![r]),
        }
    }
    Ok(groups
        .into_iter()
        .map(|g| {
            let stats = Metric::ALL
                .into_iter()
                .filter_map(|m| {
                    let values: Vec<f64> = g.iter().filter_map(|r| r.get(m)).collect();
                    Stat::of(&values).map(|s| (m, s))
                })
                .collect();
            CellSummary {
                kind: g[0].kind,
                cell: g[0].cell,
                params: g[0].params,
                replicates: g.len(),
                stats,
            }
        })
        .collect())
}

const SUMMARY_PARAMS: [&str; 11] = [
    "kind",
    "cell",
    "n",
    "p",
    "s",
    "delta",
    "kappa",
    "lambda_c",
    "degree",
    "epsilon",
    "replicates",
];

/// Metrics present in at least one summary, in schema order.
fn present_metrics(summaries: &[CellSummary]) -> Vec<Metric> {
    Metric::ALL
        .into_iter()
        .filter(|&m| summaries.iter().any(|s| s.stat(m).is_some()))
        .collect()
}

fn param_fields(s: &CellSummary, fmt: impl Fn(f64) -> String) -> Vec<String> {
    let c = &s.params;
    vec![
        s.kind.as_str().to_string(),
        s.cell.to_string(),
        c.n.to_string(),
        c.p.to_string(),
        c.s.to_string(),
        fmt(c.delta),
        c.kappa.map(&fmt).unwrap_or_else(|| "auto".into()),
        fmt(c.lambda_c),
        c.degree.to_string(),
        fmt(c.epsilon),
        s.replicates.to_string(),
    ]
}

pub fn write_summary_csv<W: Write>(mut out: W, summaries: &[CellSummary]) -> Result<()> {
    writeln!(out, "{}", crate::record::SCHEMA_LINE)?;
    let metrics = present_metrics(summaries);
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = SUMMARY_PARAMS.iter().map(|s| s.to_string()).collect();
    for m in &metrics {
        for suffix in ["mean", "median", "se"] {
            header.push(format!("{}_{suffix}", m.name()));
        }
    }
    w.write_record(&header)?;
    for s in summaries {
        let mut row = param_fields(s, format_float);
        for &m in &metrics {
            match s.stat(m) {
                Some(st) => {
                    row.push(format_float(st.mean));
                    row.push(format_float(st.median));
                    row.push(st.se.map(format_float).unwrap_or_default());
                }
                None => row.extend(std::iter::repeat_n(String::new(), 3)),
            }
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn short(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || (1e-3..1e6).contains(&a) {
        let s = format!("{x:.4}");
        let s = s.trim_end_matches('0').trim_end_matches('.');
        s.to_string()
    } else {
        format!("{x:.3e}")
    }
}

/// Fixed-width table: parameters, then `mean ± se` per output.
pub fn format_summary_text(summaries: &[CellSummary]) -> String {
    let metrics = present_metrics(summaries);
    let mut rows: Vec<Vec<String>> = Vec::new();
    let mut header: Vec<String> = SUMMARY_PARAMS.iter().map(|s| s.to_string()).collect();
    header.extend(metrics.iter().map(|m| m.name().to_string()));
    rows.push(header);
    for s in summaries {
        let mut row = param_fields(s, short);
        for &m in &metrics {
            row.push(match s.stat(m) {
                Some(Stat {
                    mean, se: Some(se), ..
                }) => format!("{} ± {}", short(*mean), short(*se)),
                Some(st) => short(st.mean),
                None => "-".into(),
            });
        }
        rows.push(row);
    }
    let widths: Vec<usize> = (0..rows[0].len())
        .map(|k| rows.iter().map(|r| r[k].chars().count()).max().unwrap_or(0))
        .collect();
    let mut text = String::new();
    for row in rows {
        let cells: Vec<String> = row
            .iter()
            .zip(&widths)
            .map(|(v, &w)| format!("{v:>w$}"))
            .collect();
        text.push_str(cells.join("  ").trim_end());
        text.push('\n');
    }
    text
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(cell: usize, replicate: usize, loss: f64) -> ExperimentRecord {
        let params = Cell {
            n: 10,
            p: 20,
            s: 2,
            delta: cell as f64 + 1.0,
            kappa: None,
            lambda_c: 2.0,
            degree: 4,
            epsilon: 1.0,
        };
        let mut r = ExperimentRecord::new(Kind::Cluster1, cell, replicate, 0, params);
        r.set(Metric::Loss, loss);
        r
    }

    #[test]
    fn stat_examples() {
        let s = Stat::of(&[0.25; 5]).unwrap();
        assert_eq!((s.mean, s.median, s.se), (0.25, 0.25, Some(0.0)));
        assert_eq!(Stat::of(&[3.0]).unwrap().se, None);
        let s = Stat::of(&[4.0, 1.0, 3.0, 2.0]).unwrap();
        assert_eq!((s.mean, s.median), (2.5, 2.5));
        assert!((s.se.unwrap() - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
        assert!(Stat::of(&[]).is_none());
    }

    #[test]
    fn one_row_per_cell() {
        let records = vec![rec(0, 0, 0.1), rec(0, 1, 0.3), rec(1, 0, 0.2)];
        let sums = summarize(&records).unwrap();
        assert_eq!(sums.len(), 2);
        assert_eq!(sums[0].replicates, 2);
        assert!((sums[0].stat(Metric::Loss).unwrap().mean - 0.2).abs() < 1e-15);
        assert_eq!(sums[1].stat(Metric::Loss).unwrap().se, None);
        assert!(sums[0].stat(Metric::Norm).is_none());

        let mut buf = Vec::new();
        write_summary_csv(&mut buf, &sums).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 4);
        assert!(lines[1].ends_with("replicates,loss_mean,loss_median,loss_se"));
        assert!(lines[3].ends_with(','));

        let table = format_summary_text(&sums);
        assert_eq!(table.lines().count(), 3);
        assert!(table.contains("0.2 ± 0.1"));
    }

    #[test]
    fn empty_input_is_an_error() {
        assert!(summarize(&[]).is_err());
    }
}
