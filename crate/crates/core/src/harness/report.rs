//! Benchmark reports and their JSON/CSV renderings.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::benchmark::BenchmarkConfig;
use crate::imgproc::Stage;
use crate::metrics::{aggregate_summaries, FoldSummary, MeanStd, MetricName};

/// Fold rows plus the aggregate row derived from them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreTable {
    pub folds: Vec<FoldSummary>,
    pub aggregate: BTreeMap<MetricName, MeanStd>,
}

impl ScoreTable {
    pub fn from_folds(folds: Vec<FoldSummary>) -> Result<Self> {
        let aggregate = aggregate_summaries(&folds)?;
        Ok(Self { folds, aggregate })
    }

    /// `metric,fold,value,std` with one block per metric: the fold rows and
    /// then an `Avg.` row. Values use three decimals.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("metric,fold,value,std\n");
        for (name, agg) in &self.aggregate {
            for f in &self.folds {
                let v = f.get(*name).unwrap_or(f64::NAN);
                let _ = writeln!(out, "{name},{},{v:.3},", f.fold);
            }
            let _ = writeln!(out, "{name},Avg.,{:.3},{:.3}", agg.mean, agg.std);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldMeta {
    /// 1-based.
    pub fold: usize,
    pub train_records: usize,
    /// Training samples after augmentation.
    pub train_samples: usize,
    pub validation_records: usize,
    /// Validation samples actually scored; equals `validation_records` since
    /// validation splits are never augmented.
    pub validation_samples: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub best_epoch: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub seed: u64,
    pub code_version: String,
    pub dataset: String,
    pub records: usize,
    /// Preprocessing stages in execution order.
    pub stages: Vec<Stage>,
    pub folds: Vec<FoldMeta>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub started_unix: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub finished_unix: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub config: BenchmarkConfig,
    pub scores: ScoreTable,
    pub metadata: RunMetadata,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReportFormat {
    #[default]
    Json,
    Csv,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            _ => Err(Error::InvalidParameter(format!("unknown report format {s:?}"))),
        }
    }
}

pub fn render_report(r: &BenchmarkReport, format: ReportFormat) -> Result<String> {
    Ok(match format {
        ReportFormat::Json => serde_json::to_string_pretty(r)? + "\n",
        ReportFormat::Csv => r.scores.to_csv(),
    })
}

pub fn emit_report(r: &BenchmarkReport, format: ReportFormat, path: impl AsRef<Path>) -> Result<()> {
    write_text(path.as_ref(), &render_report(r, format)?)
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn load_report(path: impl AsRef<Path>) -> Result<BenchmarkReport> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

/// Reads a fold table with header `fold,<metric>,<metric>,...` and one row
/// per fold.
pub fn read_fold_table(path: impl AsRef<Path>) -> Result<Vec<FoldSummary>> {
    let path = path.as_ref();
    let mut reader = csv::Reader::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::InvalidParameter(format!("{other:?}")),
    })?;
    let header = reader.headers()?.clone();
    if header.get(0).map(str::trim) != Some("fold") {
        return Err(Error::InvalidParameter("fold table must start with a `fold` column".into()));
    }
    let metrics = header
        .iter()
        .skip(1)
        .map(|h| h.trim().parse::<MetricName>())
        .collect::<Result<Vec<_>>>()?;
    let mut folds = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row = row?;
        let num = |j: usize| -> Result<f64> {
            row.get(j)
                .map(str::trim)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::InvalidParameter(format!("row {}: bad number in column {}", i + 1, j + 1)))
        };
        let fold = row
            .get(0)
            .and_then(|s| s.trim().parse::<usize>().ok())
            .ok_or_else(|| Error::InvalidParameter(format!("row {}: bad fold number", i + 1)))?;
        let mut summary = FoldSummary::new(fold);
        for (j, &m) in metrics.iter().enumerate() {
            summary.insert(m, num(j + 1)?)?;
        }
        folds.push(summary);
    }
    Ok(folds)
}
