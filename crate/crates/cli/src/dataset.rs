//! CSV export of a simulated dataset: one row per sample.

use std::io::Write;

use sparsecluster::model::Dataset;

use crate::error::Result;
use crate::record::{format_float, SCHEMA_LINE};

/// Writes `# schema=1`, a `# theta=...` comment when the data carry ground
/// truth, then columns `sample,z,x_0..x_{p-1}`. `z` is empty without truth.
pub fn write_dataset<W: Write>(mut out: W, data: &Dataset) -> Result<()> {
    writeln!(out, "{SCHEMA_LINE}")?;
    if let Some(t) = &data.truth {
        let theta: Vec<String> = t.theta.theta().iter().map(|&v| format_float(v)).collect();
        writeln!(out, "# theta={}", theta.join(","))?;
    }
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["sample".to_string(), "z".to_string()];
    header.extend((0..data.p()).map(|j| format!("x_{j}")));
    w.write_record(&header)?;
    for i in 0..data.n() {
        let mut row = vec![i.to_string()];
        row.push(
            data.truth
                .as_ref()
                .map(|t| t.z.as_slice()[i].to_string())
                .unwrap_or_default(),
        );
        row.extend(data.sample(i).into_iter().map(format_float));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use sparsecluster::model::{sample_planted, ModelParams};

    #[test]
    fn writes_one_row_per_sample() {
        let params = ModelParams::new(4, 3, 1, 2.0).unwrap();
        let data = sample_planted(&params, 1).unwrap();
        let mut buf = Vec::new();
        write_dataset(&mut buf, &data).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# schema=1");
        assert!(lines[1].starts_with("# theta="));
        assert_eq!(lines[2], "sample,z,x_0,x_1,x_2");
        assert_eq!(lines.len(), 7);
        let first: Vec<&str> = lines[3].split(',').collect();
        assert_eq!(first[2].parse::<f64>().unwrap(), data.x[(0, 0)]);
    }
}
