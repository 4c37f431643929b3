use std::path::{Path, PathBuf};

use crate::error::{write, CliError, CliResult};
use crate::results::{MetricsRecord, ResultsTable};

fn collect(dir: &Path, out: &mut Vec<PathBuf>) -> CliResult<()> {
    let entries = std::fs::read_dir(dir).map_err(|e| CliError::invalid(format!("{}: {e}", dir.display())))?;
    let mut paths: Vec<PathBuf> = entries.filter_map(|e| e.ok().map(|e| e.path())).collect();
    paths.sort();
    for p in paths {
        if p.is_dir() {
            collect(&p, out)?;
        } else if p.file_name().is_some_and(|n| n == "metrics.json") {
            out.push(p);
        }
    }
    Ok(())
}

/// Aggregates every `metrics.json` under `dir` into `report.csv` and `report.md`.
pub fn cmd_report(dir: &Path) -> CliResult<ResultsTable> {
    let mut files = Vec::new();
    collect(dir, &mut files)?;
    if files.is_empty() {
        return Err(CliError::invalid(format!("no runs found under {}", dir.display())));
    }
    let mut rows = Vec::with_capacity(files.len());
    for f in &files {
        let text = std::fs::read_to_string(f).map_err(|e| CliError::runtime(format!("{}: {e}", f.display())))?;
        let rec: MetricsRecord =
            serde_json::from_str(&text).map_err(|e| CliError::invalid(format!("{}: {e}", f.display())))?;
        rows.push(rec.row());
    }
    let table = ResultsTable::new(rows);
    write(&dir.join("report.csv"), table.to_csv())?;
    let md = table.to_markdown();
    write(&dir.join("report.md"), &md)?;
    print!("{md}");
    Ok(table)
}
