//! Per-run metrics records and the aggregated results table.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use emomtl::metrics::MetricsReport;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Contents of a run's `metrics.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub dataset: String,
    pub model: String,
    pub setting: String,
    pub train_corpus: String,
    pub test_corpus: String,
    pub alpha: Option<f64>,
    pub seed: u64,
    pub best_epoch: usize,
    pub epochs_run: usize,
    pub stopped_early: bool,
    pub vocab_size: usize,
    pub n_train: usize,
    pub n_validation: usize,
    pub n_test: usize,
    pub test: MetricsReport,
    pub aux_accuracy: Option<f64>,
}

impl MetricsRecord {
    pub fn row(&self) -> ResultRow {
        ResultRow {
            dataset: self.dataset.clone(),
            model: self.model.clone(),
            setting: self.setting.clone(),
            accuracy: self.test.accuracy,
            precision: self.test.precision,
            recall: self.test.recall,
            f1: self.test.f1,
        }
    }

    pub fn write(&self, path: &Path) -> CliResult<()> {
        crate::error::write(path, serde_json::to_string_pretty(self).expect("record serialises") + "\n")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub dataset: String,
    pub model: String,
    pub setting: String,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

pub const RESULTS_HEADER: &str = "dataset,model,setting,accuracy,precision,recall,f1";

fn setting_rank(setting: &str) -> usize {
    ["STL", "MTL(Ekman)", "MTL(Plutchik)", "MTL(Domain)"].iter().position(|s| *s == setting).unwrap_or(4)
}

impl ResultRow {
    fn metrics(&self) -> [f64; 4] {
        [self.accuracy, self.precision, self.recall, self.f1]
    }

    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{:.6},{:.6},{:.6},{:.6}",
            self.dataset, self.model, self.setting, self.accuracy, self.precision, self.recall, self.f1
        )
    }
}

/// Appends one row to `path`, writing the header when the file is new.
pub fn append_row(path: &Path, row: &ResultRow) -> CliResult<()> {
    use std::io::Write;
    let fresh = !path.exists();
    let mut f = std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| CliError::runtime(format!("{}: {e}", path.display())))?;
    let mut text = String::new();
    if fresh {
        text.push_str(RESULTS_HEADER);
        text.push('\n');
    }
    text.push_str(&row.csv_line());
    text.push('\n');
    f.write_all(text.as_bytes()).map_err(|e| CliError::runtime(format!("{}: {e}", path.display())))
}

/// Rows ordered by (dataset, model, setting).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ResultsTable {
    pub rows: Vec<ResultRow>,
}

impl ResultsTable {
    pub fn new(mut rows: Vec<ResultRow>) -> Self {
        rows.sort_by(|a, b| {
            (&a.dataset, &a.model, setting_rank(&a.setting), &a.setting).cmp(&(
                &b.dataset,
                &b.model,
                setting_rank(&b.setting),
                &b.setting,
            ))
        });
        Self { rows }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(RESULTS_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.csv_line());
            out.push('\n');
        }
        out
    }

    #[cfg(test)]
    pub fn from_csv(text: &str) -> CliResult<Self> {
        let mut lines = text.lines();
        if lines.next() != Some(RESULTS_HEADER) {
            return Err(CliError::invalid("results CSV has an unexpected header"));
        }
        let mut rows = Vec::new();
        for (i, line) in lines.enumerate() {
            let f: Vec<&str> = line.split(',').collect();
            let bad = || CliError::invalid(format!("results CSV line {}: malformed row", i + 2));
            if f.len() != 7 {
                return Err(bad());
            }
            let num = |s: &str| s.parse::<f64>().map_err(|_| bad());
            rows.push(ResultRow {
                dataset: f[0].into(),
                model: f[1].into(),
                setting: f[2].into(),
                accuracy: num(f[3])?,
                precision: num(f[4])?,
                recall: num(f[5])?,
                f1: num(f[6])?,
            });
        }
        Ok(Self { rows })
    }

    /// Markdown table; within each (dataset, model) group the best value of
    /// every metric is set in bold.
    pub fn to_markdown(&self) -> String {
        let mut best: BTreeMap<(&str, &str), [f64; 4]> = BTreeMap::new();
        for r in &self.rows {
            let entry = best.entry((&r.dataset, &r.model)).or_insert([f64::NEG_INFINITY; 4]);
            for (b, v) in entry.iter_mut().zip(r.metrics()) {
                *b = b.max(v);
            }
        }
        let mut out = String::from("| Dataset | Model | Setting | Accuracy | Precision | Recall | F1 |\n");
        out.push_str("|---|---|---|---|---|---|---|\n");
        for r in &self.rows {
            let b = best[&(r.dataset.as_str(), r.model.as_str())];
            let cells: Vec<String> = r
                .metrics()
                .iter()
                .zip(b)
                .map(
                    |(v, m)| {
                        if format!("{v:.6}") == format!("{m:.6}") {
                            format!("**{v:.6}**")
                        } else {
                            format!("{v:.6}")
                        }
                    },
                )
                .collect();
            let _ = writeln!(out, "| {} | {} | {} | {} |", r.dataset, r.model, r.setting, cells.join(" | "));
        }
        out
    }
}
