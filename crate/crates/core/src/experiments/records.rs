//! Sweep records, CSV round-trip and log-log rate fits.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One level of a refinement sweep.
///
/// `value` is the deficit of the interpolated bubble for an upper-bound sweep
/// and S_h − S_{N,s} for a discrete-constant sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub level: usize,
    pub h: f64,
    pub c_h: f64,
    pub value: f64,
    pub slack: f64,
    /// Seconds.
    pub wall_time: f64,
}

/// Column names, in order, as written to CSV.
pub const SWEEP_COLUMNS: [&str; 6] = ["level", "h", "c_h", "value", "slack", "wall_time"];

/// h strictly decreasing and every field finite.
pub fn validate_records(records: &[SweepRecord]) -> Result<()> {
    for r in records {
        if ![r.h, r.c_h, r.value, r.slack, r.wall_time].iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidParams(format!("non-finite field in record for level {}", r.level)));
        }
    }
    for w in records.windows(2) {
        if !(w[1].h < w[0].h) {
            return Err(Error::InvalidParams(format!("h not strictly decreasing between levels {} and {}", w[0].level, w[1].level)));
        }
    }
    Ok(())
}

/// Header row plus one line per record.
pub fn write_csv<W: Write, R: Serialize>(w: W, records: &[R]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in records {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_csv<Rd: Read, R: for<'de> Deserialize<'de>>(r: Rd) -> Result<Vec<R>> {
    let mut input = csv::Reader::from_reader(r);
    let mut out = Vec::new();
    for row in input.deserialize() {
        out.push(row?);
    }
    Ok(out)
}

/// Least-squares line through (log x, log value).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub points: usize,
}

/// Fits log value = intercept + slope·log x. No outlier handling: drop points
/// before calling if needed.
pub fn fit_rate(points: &[(f64, f64)]) -> Result<RateFit> {
    if points.len() < 3 {
        return Err(Error::TooFewPoints(points.len()));
    }
    for &(h, v) in points {
        if !(v > 0.0) || !(h > 0.0) {
            return Err(Error::NonPositiveValue { h, value: v });
        }
    }
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    if !(sxx > 0.0) {
        return Err(Error::InvalidParams("rate fit needs at least two distinct abscissae".into()));
    }
    let slope = sxy / sxx;
    let r2 = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    Ok(RateFit { slope, intercept: my - slope * mx, r2, points: points.len() })
}
