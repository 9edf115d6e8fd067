//! Timestamped tri-axis CSV streams (baseplate force, or acceleration
//! exported from other tools).

use std::fs::File;
use std::path::Path;

use log::warn;

use crate::error::{Error, Result};
use crate::signal::{SignalKind, TriAxisSeries};

const TIME_COLUMNS: [&str; 4] = ["timestamp", "time", "t", "time_s"];
pub const FORCE_COLUMNS: [&str; 3] = ["fx", "fy", "fz"];
pub const ACCEL_COLUMNS: [&str; 3] = ["x", "y", "z"];

/// Relative deviation of a sample interval from nominal that still counts
/// as uniform sampling.
const UNIFORM_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct CsvImport {
    pub series: TriAxisSeries,
    /// True when timestamps were irregular and the data was interpolated
    /// onto a uniform grid.
    pub resampled: bool,
    pub warnings: Vec<String>,
}

pub fn read_force_csv(path: &Path) -> Result<CsvImport> {
    read_tri_csv(path, FORCE_COLUMNS, SignalKind::Force)
}

/// Reads `timestamp` plus the three named columns; other columns (torques,
/// for instance) are ignored.
pub fn read_tri_csv(path: &Path, columns: [&str; 3], kind: SignalKind) -> Result<CsvImport> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let headers: Vec<String> = reader.headers()?.iter().map(|h| h.to_ascii_lowercase()).collect();
    let find = |name: &str| headers.iter().position(|h| h == name);
    let time_col = TIME_COLUMNS
        .iter()
        .find_map(|n| find(n))
        .ok_or_else(|| Error::schema(path, "no timestamp column"))?;
    let mut axis_cols = [0usize; 3];
    for (slot, name) in axis_cols.iter_mut().zip(columns) {
        *slot = find(name).ok_or_else(|| Error::schema(path, format!("missing column {name:?}")))?;
    }

    let mut times = Vec::new();
    let mut axes: [Vec<f64>; 3] = Default::default();
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        let field = |col: usize| -> Result<f64> {
            record
                .get(col)
                .and_then(|s| s.parse::<f64>().ok())
                .ok_or_else(|| Error::schema(path, format!("row {}: bad value in column {}", row + 2, col + 1)))
        };
        times.push(field(time_col)?);
        for (axis, &col) in axes.iter_mut().zip(&axis_cols) {
            axis.push(field(col)?);
        }
    }
    if times.len() < 2 {
        return Err(Error::schema(path, "need at least two samples to infer a rate"));
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::schema(path, "timestamps not strictly increasing"));
    }

    let mut intervals: Vec<f64> = times.windows(2).map(|w| w[1] - w[0]).collect();
    intervals.sort_by(f64::total_cmp);
    let median = intervals[intervals.len() / 2];
    let rate = (1.0 / median).round().max(1.0);
    let nominal = 1.0 / rate;
    let uniform = times
        .windows(2)
        .all(|w| ((w[1] - w[0]) - nominal).abs() <= UNIFORM_TOLERANCE * nominal);

    let [x, y, z] = axes;
    if uniform {
        return Ok(CsvImport {
            series: TriAxisSeries::new(x, y, z, rate, kind)?,
            resampled: false,
            warnings: Vec::new(),
        });
    }

    // jitter skews the median; the mean interval is the better estimate here
    let t0 = times[0];
    let span = times[times.len() - 1] - t0;
    let rate = ((times.len() - 1) as f64 / span).round().max(1.0);
    let message = format!(
        "{}: irregular timestamps, resampled to {rate} Hz by linear interpolation",
        path.display()
    );
    warn!("{message}");
    let len = (span * rate + 1e-9).floor() as usize + 1;
    let mut out: [Vec<f64>; 3] = Default::default();
    let mut k = 0usize;
    for n in 0..len {
        let t = t0 + n as f64 / rate;
        while k + 2 < times.len() && times[k + 1] < t {
            k += 1;
        }
        let (ta, tb) = (times[k], times[k + 1]);
        let w = ((t - ta) / (tb - ta)).clamp(0.0, 1.0);
        for (dst, src) in out.iter_mut().zip([&x, &y, &z]) {
            dst.push(src[k] + w * (src[k + 1] - src[k]));
        }
    }
    let [rx, ry, rz] = out;
    Ok(CsvImport {
        series: TriAxisSeries::new(rx, ry, rz, rate, kind)?,
        resampled: true,
        warnings: vec![message],
    })
}

/// Writes `timestamp,<c0>,<c1>,<c2>` with timestamps `n / rate`.
pub fn write_tri_csv(series: &TriAxisSeries, columns: [&str; 3], path: &Path) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(["timestamp", columns[0], columns[1], columns[2]])?;
    for n in 0..series.len() {
        let [a, b, c] = series.sample(n);
        writer.write_record([
            format!("{:.9}", n as f64 / series.rate()),
            a.to_string(),
            b.to_string(),
            c.to_string(),
        ])?;
    }
    writer.flush().map_err(|e| Error::io(path, e))
}

pub fn write_force_csv(series: &TriAxisSeries, path: &Path) -> Result<()> {
    write_tri_csv(series, FORCE_COLUMNS, path)
}
