use std::path::{Path, PathBuf};

use plotters::prelude::*;

use super::HarnessError;

const PERFORMANCE_SERIES: [(&str, RGBColor); 5] = [
    ("actual_performance", BLACK),
    ("tracked_rules", BLUE),
    ("tracked_adaptive", RED),
    ("projected_perf_rules", CYAN),
    ("projected_perf_adaptive", MAGENTA),
];

/// Numeric view of a run CSV. Empty cells become `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub steps: Vec<f64>,
    columns: Vec<Vec<Option<f64>>>,
}

impl CsvTable {
    pub fn column(&self, name: &str) -> Option<&[Option<f64>]> {
        let i = self.header.iter().position(|h| h == name)?;
        Some(&self.columns[i])
    }

    pub fn voltage_columns(&self) -> Vec<(&str, &[Option<f64>])> {
        self.header
            .iter()
            .zip(&self.columns)
            .filter(|(h, _)| h.starts_with("v_"))
            .map(|(h, c)| (h.as_str(), c.as_slice()))
            .collect()
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

const TEXT_COLUMNS: [&str; 3] = ["mode", "chosen", "newly_disconnected"];

pub fn read_records(path: &Path) -> Result<CsvTable, HarnessError> {
    let parse_err = |line: u64, message: String| HarnessError::Parse { path: path.to_path_buf(), line, message };
    let mut reader = csv::Reader::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => HarnessError::io(path, io),
        other => parse_err(1, format!("{other:?}")),
    })?;
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| parse_err(1, e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    let Some(step_col) = header.iter().position(|h| h == "step") else {
        return Err(parse_err(1, "missing `step` column".into()));
    };
    let mut steps = Vec::new();
    let mut columns = vec![Vec::new(); header.len()];
    for row in reader.records() {
        let row = row.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(line, e.to_string())
        })?;
        let line = row.position().map_or(0, |p| p.line());
        for (i, cell) in row.iter().enumerate() {
            let value = if cell.is_empty() || TEXT_COLUMNS.contains(&header[i].as_str()) {
                None
            } else {
                Some(cell.parse::<f64>().map_err(|_| {
                    parse_err(line, format!("column `{}`: `{cell}` is not a number", header[i]))
                })?)
            };
            if i == step_col {
                steps.push(value.ok_or_else(|| parse_err(line, "empty step".into()))?);
            }
            columns[i].push(value);
        }
    }
    Ok(CsvTable { header, steps, columns })
}

fn points(steps: &[f64], values: &[Option<f64>]) -> Vec<(f64, f64)> {
    steps.iter().zip(values).filter_map(|(&s, v)| v.map(|v| (s, v))).collect()
}

fn draw_err<E: std::fmt::Debug>(path: &Path) -> impl Fn(E) -> HarnessError + '_ {
    move |e| HarnessError::Runtime(format!("{}: {e:?}", path.display()))
}

/// Renders `performance.svg` and `voltages.svg` into `out_dir` and returns
/// their paths. Series with no values (e.g. tracked estimates of a
/// rules-only run) are left out.
pub fn emit_plots(csv_path: &Path, out_dir: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    let table = read_records(csv_path)?;
    if table.is_empty() {
        return Err(HarnessError::Parse { path: csv_path.to_path_buf(), line: 2, message: "no records".into() });
    }
    std::fs::create_dir_all(out_dir).map_err(|e| HarnessError::io(out_dir, e))?;
    let x_max = table.steps.iter().cloned().fold(1.0, f64::max);

    let perf_path = out_dir.join("performance.svg");
    {
        let root = SVGBackend::new(&perf_path, (1200, 500)).into_drawing_area();
        root.fill(&WHITE).map_err(draw_err(&perf_path))?;
        let mut chart = ChartBuilder::on(&root)
            .caption("performance", ("sans-serif", 20))
            .margin(10)
            .x_label_area_size(35)
            .y_label_area_size(50)
            .build_cartesian_2d(0.0..x_max, 0.0..1.05)
            .map_err(draw_err(&perf_path))?;
        chart
            .configure_mesh()
            .x_desc("step")
            .y_desc("performance")
            .draw()
            .map_err(draw_err(&perf_path))?;
        for (name, color) in PERFORMANCE_SERIES {
            let Some(col) = table.column(name) else { continue };
            let pts = points(&table.steps, col);
            if pts.is_empty() {
                continue;
            }
            chart
                .draw_series(LineSeries::new(pts, color))
                .map_err(draw_err(&perf_path))?
                .label(name)
                .legend(move |(x, y)| PathElement::new([(x, y), (x + 15, y)], color));
        }
        chart
            .configure_series_labels()
            .background_style(WHITE.mix(0.8))
            .border_style(BLACK)
            .position(SeriesLabelPosition::LowerRight)
            .draw()
            .map_err(draw_err(&perf_path))?;
        root.present().map_err(draw_err(&perf_path))?;
    }

    let volt_path = out_dir.join("voltages.svg");
    {
        let series = table.voltage_columns();
        let root = SVGBackend::new(&volt_path, (1200, 500)).into_drawing_area();
        root.fill(&WHITE).map_err(draw_err(&volt_path))?;
        let mut chart = ChartBuilder::on(&root)
            .caption("voltage magnitudes", ("sans-serif", 20))
            .margin(10)
            .x_label_area_size(35)
            .y_label_area_size(50)
            .build_cartesian_2d(0.0..x_max, 0.0..1.2)
            .map_err(draw_err(&volt_path))?;
        chart
            .configure_mesh()
            .x_desc("step")
            .y_desc("|V| (pu)")
            .draw()
            .map_err(draw_err(&volt_path))?;
        let count = series.len().max(1);
        for (i, (_, col)) in series.iter().enumerate() {
            let color = HSLColor(i as f64 / count as f64, 0.7, 0.45);
            chart
                .draw_series(LineSeries::new(points(&table.steps, col), color))
                .map_err(draw_err(&volt_path))?;
        }
        root.present().map_err(draw_err(&volt_path))?;
    }
    Ok(vec![perf_path, volt_path])
}
