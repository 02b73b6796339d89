use std::io::Write;

use serde::Serialize;

use super::HarnessError;
use super::RunMode;
use crate::discriminator::PolicyChoice;

/// Bumped whenever a column is added, removed or reinterpreted.
pub const CSV_SCHEMA_VERSION: u32 = 1;

const FIXED_COLUMNS: [&str; 14] = [
    "schema_version",
    "step",
    "mode",
    "chosen",
    "projected_perf_rules",
    "projected_perf_adaptive",
    "tracked_rules",
    "tracked_adaptive",
    "actual_performance",
    "solver_failed",
    "sac_warmup",
    "buffer_len",
    "newly_disconnected",
    "cumulative_violations",
];

/// One simulation step. Fields a mode does not produce are `None` and
/// written as empty cells.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub step: u64,
    pub mode: RunMode,
    /// The policy whose proposal was applied.
    pub chosen: PolicyChoice,
    pub projected_perf_rules: Option<f64>,
    pub projected_perf_adaptive: Option<f64>,
    pub tracked_rules: Option<f64>,
    pub tracked_adaptive: Option<f64>,
    pub actual_performance: f64,
    pub solver_failed: bool,
    pub sac_warmup: Option<bool>,
    pub buffer_len: Option<usize>,
    pub voltages: Vec<f64>,
    pub newly_disconnected: Vec<usize>,
    pub cumulative_violations: u64,
}

/// Header row for a grid with `bus_count` buses.
pub fn csv_header(bus_count: usize) -> Vec<String> {
    FIXED_COLUMNS
        .iter()
        .map(|s| s.to_string())
        .chain((0..bus_count).map(|i| format!("v_{i}")))
        .collect()
}

/// Nine significant digits.
fn num(x: f64) -> String {
    format!("{x:.8e}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

impl RunRecord {
    fn fields(&self) -> Vec<String> {
        let mut row = vec![
            CSV_SCHEMA_VERSION.to_string(),
            self.step.to_string(),
            self.mode.as_str().to_string(),
            self.chosen.as_str().to_string(),
            opt(self.projected_perf_rules),
            opt(self.projected_perf_adaptive),
            opt(self.tracked_rules),
            opt(self.tracked_adaptive),
            num(self.actual_performance),
            u8::from(self.solver_failed).to_string(),
            self.sac_warmup.map(|w| u8::from(w).to_string()).unwrap_or_default(),
            self.buffer_len.map(|n| n.to_string()).unwrap_or_default(),
            self.newly_disconnected.iter().map(|b| b.to_string()).collect::<Vec<_>>().join(";"),
            self.cumulative_violations.to_string(),
        ];
        row.extend(self.voltages.iter().map(|&v| num(v)));
        row
    }
}

pub fn write_csv<W: Write>(records: &[RunRecord], bus_count: usize, out: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(csv_header(bus_count))?;
    for r in records {
        w.write_record(r.fields())?;
    }
    w.flush()?;
    Ok(())
}

pub(crate) fn write_csv_file(records: &[RunRecord], bus_count: usize, path: &std::path::Path) -> Result<(), HarnessError> {
    let file = std::fs::File::create(path).map_err(|e| HarnessError::io(path, e))?;
    write_csv(records, bus_count, std::io::BufWriter::new(file)).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => HarnessError::io(path, io),
        other => HarnessError::Runtime(format!("{}: {other:?}", path.display())),
    })
}
