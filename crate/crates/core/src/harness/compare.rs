use std::fmt;
use std::path::Path;

use super::{HarnessError, RunSummary};

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub label: String,
    pub mode: String,
    pub total_violations: u64,
    pub mean_performance: f64,
    pub final_performance: f64,
    pub first_switch_step: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub rows: Vec<ComparisonRow>,
}

impl ComparisonReport {
    pub fn new(baseline: &RunSummary, hybrid: &RunSummary) -> Self {
        let row = |label: &str, s: &RunSummary| ComparisonRow {
            label: label.to_string(),
            mode: s.mode.as_str().to_string(),
            total_violations: s.total_violations,
            mean_performance: s.mean_performance,
            final_performance: s.final_performance,
            first_switch_step: s.first_switch_step,
        };
        Self { rows: vec![row("baseline", baseline), row("hybrid", hybrid)] }
    }
}

impl fmt::Display for ComparisonReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:<10} {:<11} {:>10} {:>10} {:>10} {:>12}",
            "run", "mode", "violations", "mean_perf", "final_perf", "first_switch"
        )?;
        for r in &self.rows {
            let switch = r.first_switch_step.map_or_else(|| "-".to_string(), |s| s.to_string());
            writeln!(
                f,
                "{:<10} {:<11} {:>10} {:>10.4} {:>10.4} {:>12}",
                r.label, r.mode, r.total_violations, r.mean_performance, r.final_performance, switch
            )?;
        }
        Ok(())
    }
}

fn load_summary(dir: &Path) -> Result<RunSummary, HarnessError> {
    let path = dir.join("summary.json");
    let text = std::fs::read_to_string(&path).map_err(|e| HarnessError::io(&path, e))?;
    serde_json::from_str(&text).map_err(|e| HarnessError::Parse {
        path: path.clone(),
        line: e.line() as u64,
        message: e.to_string(),
    })
}

/// Compares the `summary.json` files of two run directories.
pub fn compare_dirs(baseline: &Path, hybrid: &Path) -> Result<ComparisonReport, HarnessError> {
    Ok(ComparisonReport::new(&load_summary(baseline)?, &load_summary(hybrid)?))
}
