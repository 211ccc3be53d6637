//! CSV traces and JSON summaries.
//!
//! CSV: header row, comma separated, LF endings, floats with 17 significant digits so a
//! re-read reproduces every value bit for bit. JSON: pretty-printed with struct fields in
//! declaration order and maps sorted by key.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use klopt_core::dynamics::fit_loglog;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    Int(u64),
    Float(f64),
}

impl Cell {
    pub fn as_f64(self) -> f64 {
        match self {
            Cell::Int(v) => v as f64,
            Cell::Float(v) => v,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table { columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Result<Vec<f64>> {
        let i = self.columns.iter().position(|c| c == name).ok_or_else(|| anyhow!("no column `{name}`"))?;
        Ok(self.rows.iter().map(|r| r[i].as_f64()).collect())
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.columns.join(",");
        s.push('\n');
        for row in &self.rows {
            for (j, c) in row.iter().enumerate() {
                if j > 0 {
                    s.push(',');
                }
                match c {
                    Cell::Int(v) => write!(s, "{v}").unwrap(),
                    Cell::Float(v) => write!(s, "{v:.16e}").unwrap(),
                }
            }
            s.push('\n');
        }
        s
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_csv()).with_context(|| format!("writing {}", path.display()))
    }
}

/// Reads a CSV written by [`Table::write_csv`] into named float columns.
pub fn read_csv(path: &Path) -> Result<BTreeMap<String, Vec<f64>>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut lines = text.lines();
    let header: Vec<String> = lines.next().ok_or_else(|| anyhow!("empty CSV"))?.split(',').map(String::from).collect();
    let mut cols: Vec<Vec<f64>> = vec![Vec::new(); header.len()];
    for (i, line) in lines.enumerate() {
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != header.len() {
            bail!("{}: row {} has {} cells, header has {}", path.display(), i + 2, cells.len(), header.len());
        }
        for (c, v) in cols.iter_mut().zip(cells) {
            c.push(v.parse().with_context(|| format!("{}: row {}: bad number `{v}`", path.display(), i + 2))?);
        }
    }
    Ok(header.into_iter().zip(cols).collect())
}

/// Which columns and window a slope was fitted on, so it can be recomputed from the CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSpec {
    pub x: String,
    pub y: String,
    pub x_min: f64,
}

impl FitSpec {
    pub fn new(x: &str, y: &str, x_min: f64) -> Self {
        FitSpec { x: x.into(), y: y.into(), x_min }
    }

    pub fn slope(&self, t: &Table) -> Result<f64> {
        Ok(fit_loglog(&t.column(&self.x)?, &t.column(&self.y)?, self.x_min)?.slope)
    }
}

/// Fit recomputed from a persisted trace.
pub fn refit_csv(path: &Path, fit: &FitSpec) -> Result<f64> {
    let cols = read_csv(path)?;
    let get = |n: &str| cols.get(n).ok_or_else(|| anyhow!("{}: no column `{n}`", path.display()));
    Ok(fit_loglog(get(&fit.x)?, get(&fit.y)?, fit.x_min)?.slope)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct ResultSummary {
    pub fitted_slope: Option<f64>,
    pub predicted_slope: Option<f64>,
    pub tolerance: Option<f64>,
    /// |fitted − predicted| ≤ tolerance for slope runs; the run's own check otherwise
    pub pass: bool,
    pub clamp_events: u64,
    /// seconds
    pub wall_time: f64,
    pub fit: Option<FitSpec>,
    pub metrics: BTreeMap<String, f64>,
}

impl ResultSummary {
    /// Summary of a slope comparison.
    pub fn slope(fitted: f64, predicted: f64, tolerance: f64, fit: FitSpec) -> Self {
        ResultSummary {
            fitted_slope: Some(fitted),
            predicted_slope: Some(predicted),
            tolerance: Some(tolerance),
            pass: slope_pass(fitted, predicted, tolerance),
            fit: Some(fit),
            ..Default::default()
        }
    }
}

pub fn slope_pass(fitted: f64, predicted: f64, tolerance: f64) -> bool {
    (fitted - predicted).abs() <= tolerance
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    fs::write(path, s).with_context(|| format!("writing {}", path.display()))
}
