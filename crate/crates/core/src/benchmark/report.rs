use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{BenchmarkConfig, Method};

pub const SCHEMA_VERSION: u32 = 1;

/// Test-set MSE of one feature subset over all repeats.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub mse_mean: f64,
    pub mse_std: f64,
    pub mse_per_repeat: Vec<f64>,
    /// Hyperparameter chosen by cross-validation in each repeat.
    pub tuned_params: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodRow {
    pub method: Method,
    pub selected: Vec<String>,
    pub count: usize,
    /// The method kept no feature; the MSE columns are the full-feature ones.
    pub zero_selection: bool,
    #[serde(flatten)]
    pub evaluation: Evaluation,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

/// Wall-clock seconds per phase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub selection: BTreeMap<String, f64>,
    pub evaluation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub dataset: String,
    pub n: usize,
    pub d: usize,
    pub seed: u64,
    pub config: BenchmarkConfig,
    pub notes: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timings: Option<Timings>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub schema_version: u32,
    pub metadata: Metadata,
    pub methods: Vec<MethodRow>,
    /// Every feature kept; absent when no method was run.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<Evaluation>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Text,
    Json,
    Csv,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "text" | "table" | "text-table" => Ok(ReportFormat::Text),
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            other => Err(Error::input(format!("unknown report format '{other}'"))),
        }
    }
}

/// `0.012(±0.001)`: three decimals, with the std switched to scientific
/// notation when it would otherwise print as zero.
pub fn format_mse(mean: f64, std: f64) -> String {
    let s = format!("{std:.3}");
    let s = if s == "0.000" && std > 0.0 {
        format!("{std:.2e}")
    } else {
        s
    };
    format!("{mean:.3}(±{s})")
}

pub fn emit_report(report: &BenchmarkReport, format: ReportFormat) -> Result<String> {
    match format {
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(report)?;
            s.push('\n');
            Ok(s)
        }
        ReportFormat::Text => Ok(text_table(report)),
        ReportFormat::Csv => csv_rows(report),
    }
}

fn text_table(report: &BenchmarkReport) -> String {
    let m = &report.metadata;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "dataset {} (n = {}, d = {}), {} repeats, evaluator {}",
        m.dataset, m.n, m.d, m.config.repeats, m.config.evaluator
    );
    let _ = writeln!(out, "{:<10} {:>9}  mse", "method", "features");
    for row in &report.methods {
        let mark = if row.zero_selection { "*" } else { "" };
        let _ = writeln!(
            out,
            "{:<10} {:>9}  {}",
            row.method.to_string(),
            format!("{}{mark}", row.count),
            format_mse(row.evaluation.mse_mean, row.evaluation.mse_std)
        );
    }
    if let Some(r) = &report.reference {
        let _ = writeln!(
            out,
            "{:<10} {:>9}  {}",
            "all",
            m.d,
            format_mse(r.mse_mean, r.mse_std)
        );
    }
    if report.methods.iter().any(|r| r.zero_selection) {
        let _ = writeln!(out, "* no feature selected; full-feature MSE reported");
    }
    out
}

fn csv_rows(report: &BenchmarkReport) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "dataset",
        "method",
        "count",
        "zero_selection",
        "mse_mean",
        "mse_std",
        "selected",
    ])?;
    let dataset = &report.metadata.dataset;
    for row in &report.methods {
        w.write_record([
            dataset.clone(),
            row.method.to_string(),
            row.count.to_string(),
            row.zero_selection.to_string(),
            row.evaluation.mse_mean.to_string(),
            row.evaluation.mse_std.to_string(),
            row.selected.join(";"),
        ])?;
    }
    if let Some(r) = &report.reference {
        w.write_record([
            dataset.clone(),
            "all".to_string(),
            report.metadata.d.to_string(),
            "false".to_string(),
            r.mse_mean.to_string(),
            r.mse_std.to_string(),
            String::new(),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Input(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv writer emits utf-8"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mse_formatting() {
        assert_eq!(format_mse(0.0123456, 0.0011), "0.012(±0.001)");
        assert_eq!(format_mse(0.0123456, 0.00012), "0.012(±1.20e-4)");
        assert_eq!(format_mse(1.5, 0.0), "1.500(±0.000)");
    }

    #[test]
    fn format_names() {
        assert_eq!("json".parse::<ReportFormat>().unwrap(), ReportFormat::Json);
        assert_eq!("TEXT".parse::<ReportFormat>().unwrap(), ReportFormat::Text);
        assert!("xml".parse::<ReportFormat>().is_err());
    }
}
