use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Formats a float with 17 significant digits so that CSV output is bit-stable
/// and round-trips exactly.
pub fn format_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// A time grid paired with one column of values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinnedSeries {
    pub name: String,
    pub t: Vec<f64>,
    pub values: Vec<f64>,
}

impl BinnedSeries {
    pub fn new(name: impl Into<String>, t: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if t.len() != values.len() {
            return Err(Error::InvalidData(format!(
                "grid has {} points but {} values",
                t.len(),
                values.len()
            )));
        }
        Ok(Self {
            name: name.into(),
            t,
            values,
        })
    }

    /// Evaluates `f` on every grid point.
    pub fn from_fn<F: FnMut(f64) -> f64>(name: impl Into<String>, grid: &[f64], f: F) -> Self {
        Self {
            name: name.into(),
            t: grid.to_vec(),
            values: grid.iter().copied().map(f).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// Largest absolute pointwise difference to another series on the same grid.
    pub fn sup_distance(&self, other: &BinnedSeries) -> Result<f64> {
        if self.t != other.t {
            return Err(Error::InvalidData("series are on different grids".into()));
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }

    /// Writes `t,<name>` rows with a single header line.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        write_columns(out, &["t", &self.name], &[&self.t, &self.values])
    }
}

/// Evenly spaced grid of `n` points on `[start, end]` (both ends included).
pub fn uniform_grid(start: f64, end: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![start],
        _ => {
            let step = (end - start) / (n - 1) as f64;
            (0..n)
                .map(|i| if i == n - 1 { end } else { start + step * i as f64 })
                .collect()
        }
    }
}

/// Writes equally long float columns as CSV with `.` decimals and `\n` row ends.
pub fn write_columns<W: Write>(out: W, header: &[&str], columns: &[&[f64]]) -> Result<()> {
    let rows = columns.first().map_or(0, |c| c.len());
    if header.len() != columns.len() || columns.iter().any(|c| c.len() != rows) {
        return Err(Error::InvalidData("ragged CSV columns".into()));
    }
    let mut wtr = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    wtr.write_record(header)?;
    for i in 0..rows {
        wtr.write_record(columns.iter().map(|c| format_f64(c[i])))?;
    }
    wtr.flush()?;
    Ok(())
}
