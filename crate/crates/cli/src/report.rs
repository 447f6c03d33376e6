//! Engine comparison table and its plot-ready emission.

use std::path::Path;

use serde::Serialize;

use crate::output::{fmt, write_csv, write_json};
use crate::CliError;

/// Max and mean `| |A_a| - |A_b| |` over one closed `tau` interval.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metric {
    pub a: String,
    pub b: String,
    pub range: [f64; 2],
    pub points: usize,
    pub max_abs_dev: f64,
    pub mean_abs_dev: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Column {
    pub name: String,
    pub description: String,
    #[serde(skip)]
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    #[serde(skip)]
    pub tau: Vec<f64>,
    pub columns: Vec<Column>,
    #[serde(skip)]
    pub n_saddles: Option<Vec<usize>>,
    pub metrics: Vec<Metric>,
    pub parameters: serde_json::Value,
    pub tau1: Option<f64>,
    pub tau2: Option<f64>,
}

impl ComparisonReport {
    /// Fills `metrics` for every column pair and range. An empty range list
    /// means the whole grid.
    pub fn compute_metrics(&mut self, ranges: &[[f64; 2]]) {
        let whole = match (self.tau.first(), self.tau.last()) {
            (Some(&a), Some(&b)) => vec![[a, b]],
            _ => Vec::new(),
        };
        let ranges = if ranges.is_empty() { whole } else { ranges.to_vec() };
        self.metrics.clear();
        for (i, a) in self.columns.iter().enumerate() {
            for b in &self.columns[i + 1..] {
                for &range in &ranges {
                    let devs: Vec<f64> = self
                        .tau
                        .iter()
                        .zip(a.values.iter().zip(&b.values))
                        .filter(|(&t, _)| t >= range[0] && t <= range[1])
                        .map(|(_, (x, y))| (x - y).abs())
                        .collect();
                    if devs.is_empty() {
                        continue;
                    }
                    self.metrics.push(Metric {
                        a: a.name.clone(),
                        b: b.name.clone(),
                        range,
                        points: devs.len(),
                        max_abs_dev: devs.iter().copied().fold(0.0, f64::max),
                        mean_abs_dev: devs.iter().sum::<f64>() / devs.len() as f64,
                    });
                }
            }
        }
    }

    fn header(&self) -> Vec<&str> {
        let mut h = vec!["tau"];
        h.extend(self.columns.iter().map(|c| c.name.as_str()));
        if self.n_saddles.is_some() {
            h.push("n_saddles");
        }
        h
    }
}

#[derive(Serialize)]
struct Sidecar<'a> {
    csv: String,
    columns: Vec<ColumnDoc<'a>>,
    parameters: &'a serde_json::Value,
    tau1: Option<f64>,
    tau2: Option<f64>,
    metrics: &'a [Metric],
}

#[derive(Serialize)]
struct ColumnDoc<'a> {
    name: &'a str,
    description: &'a str,
}

/// Writes `<stem>.csv` (metrics as a `#` footer) and `<stem>.json`.
pub fn emit_plot_data(report: &ComparisonReport, dir: &Path, stem: &str) -> Result<Vec<std::path::PathBuf>, CliError> {
    let csv_path = dir.join(format!("{stem}.csv"));
    let json_path = dir.join(format!("{stem}.json"));
    let rows: Vec<Vec<String>> = (0..report.tau.len())
        .map(|k| {
            let mut row = vec![fmt(report.tau[k])];
            row.extend(report.columns.iter().map(|c| fmt(c.values[k])));
            if let Some(n) = &report.n_saddles {
                row.push(n[k].to_string());
            }
            row
        })
        .collect();
    let mut footer = Vec::new();
    if !report.metrics.is_empty() {
        footer.push("metrics: a,b,range_start,range_end,points,max_abs_dev,mean_abs_dev".to_string());
        footer.extend(report.metrics.iter().map(|m| {
            format!(
                "{},{},{},{},{},{},{}",
                m.a,
                m.b,
                fmt(m.range[0]),
                fmt(m.range[1]),
                m.points,
                fmt(m.max_abs_dev),
                fmt(m.mean_abs_dev)
            )
        }));
    }
    write_csv(&csv_path, &report.header(), &rows, &footer)?;

    let mut columns = vec![ColumnDoc {
        name: "tau",
        description: "scaled time",
    }];
    columns.extend(report.columns.iter().map(|c| ColumnDoc {
        name: &c.name,
        description: &c.description,
    }));
    if report.n_saddles.is_some() {
        columns.push(ColumnDoc {
            name: "n_saddles",
            description: "contributing saddles",
        });
    }
    let sidecar = Sidecar {
        csv: format!("{stem}.csv"),
        columns,
        parameters: &report.parameters,
        tau1: report.tau1,
        tau2: report.tau2,
        metrics: &report.metrics,
    };
    write_json(&json_path, &sidecar)?;
    Ok(vec![csv_path, json_path])
}
