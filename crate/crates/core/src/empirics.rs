//! Measured track starts: CSV ingestion, empirical CDFs of planar radius, and
//! model–data distances in count units.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A track start in calibrated image-plane coordinates (mm, relative to the
/// source).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackRecord {
    pub frame_id: i64,
    pub x: f64,
    pub y: f64,
}

impl TrackRecord {
    pub fn radius(&self) -> f64 {
        self.x.hypot(self.y)
    }
}

#[derive(Debug, Deserialize)]
struct PixelRow {
    frame: i64,
    x: f64,
    y: f64,
}

/// Reads a `frame,x,y` pixel CSV and converts every row to mm relative to the
/// source at `source_xy` (pixels). Row order is preserved.
pub fn ingest_tracks<R: Read>(source: R, calibration: f64, source_xy: (f64, f64)) -> Result<Vec<TrackRecord>> {
    if !(calibration > 0.0 && calibration.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "calibration must be a positive mm-per-pixel factor, got {calibration}"
        )));
    }
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(source);
    let header = reader.headers()?.clone();
    if header.iter().collect::<Vec<_>>() != ["frame", "x", "y"] {
        return Err(Error::Data {
            line: 1,
            message: format!(
                "expected header `frame,x,y`, found `{}`",
                header.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }

    let mut out = Vec::new();
    for row in reader.deserialize::<PixelRow>() {
        let row = row.map_err(|e| Error::Data {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        if !(row.x.is_finite() && row.y.is_finite()) {
            return Err(Error::Data {
                line: out.len() as u64 + 2,
                message: "coordinates must be finite".into(),
            });
        }
        out.push(TrackRecord {
            frame_id: row.frame,
            x: (row.x - source_xy.0) * calibration,
            y: (row.y - source_xy.1) * calibration,
        });
    }
    Ok(out)
}

/// Writes records as a `frame,x,y` CSV in mm. Ingesting the output with
/// calibration 1 and source (0, 0) reproduces the records exactly.
pub fn write_tracks<W: Write>(sink: W, records: &[TrackRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["frame", "x", "y"])?;
    for r in records {
        w.write_record([r.frame_id.to_string(), r.x.to_string(), r.y.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Cumulative count of track starts against planar radius.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalCdf {
    /// Sorted ascending, ties repeated.
    pub radii: Vec<f64>,
    /// `cumulative[i] == i + 1`.
    pub cumulative: Vec<u64>,
}

impl EmpiricalCdf {
    /// Builds the CDF from planar radii in any order.
    pub fn from_radii(mut radii: Vec<f64>) -> Result<Self> {
        if radii.is_empty() {
            return Err(Error::Empty("track records"));
        }
        if radii.iter().any(|r| !r.is_finite()) {
            return Err(Error::InvalidParameter("radii must be finite".into()));
        }
        radii.sort_by(f64::total_cmp);
        let cumulative = (1..=radii.len() as u64).collect();
        Ok(Self { radii, cumulative })
    }

    pub fn len(&self) -> usize {
        self.radii.len()
    }

    pub fn is_empty(&self) -> bool {
        self.radii.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.cumulative.last().copied().unwrap_or(0)
    }

    pub fn counts(&self) -> Vec<f64> {
        self.cumulative.iter().map(|&c| c as f64).collect()
    }

    pub fn max_radius(&self) -> f64 {
        self.radii.last().copied().unwrap_or(0.0)
    }

    /// Writes `radius_mm,cumulative_count`.
    pub fn write_csv<W: Write>(&self, sink: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(sink);
        w.write_record(["radius_mm", "cumulative_count"])?;
        for (r, c) in self.radii.iter().zip(&self.cumulative) {
            w.write_record([r.to_string(), c.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn empirical_cdf(records: &[TrackRecord]) -> Result<EmpiricalCdf> {
    EmpiricalCdf::from_radii(records.iter().map(TrackRecord::radius).collect())
}

/// A model CDF tabulated on an ascending radius grid, linearly interpolated
/// between nodes. At repeated radii the last value applies (right-continuous).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCdf {
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
}

impl GridCdf {
    pub fn new(radii: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if radii.is_empty() || radii.len() != values.len() {
            return Err(Error::InvalidParameter(
                "grid CDF needs equally many (non-zero) radii and values".into(),
            ));
        }
        if radii.windows(2).any(|w| !(w[1] >= w[0])) {
            return Err(Error::InvalidParameter(
                "grid CDF radii must be sorted ascending".into(),
            ));
        }
        Ok(Self { radii, values })
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            radii: self.radii.clone(),
            values: self.values.iter().map(|v| v * factor).collect(),
        }
    }

    pub fn covers(&self, lo: f64, hi: f64) -> bool {
        self.radii[0] <= lo && hi <= self.radii[self.radii.len() - 1]
    }

    /// Value at `r`, which must lie within the grid.
    pub fn eval(&self, r: f64) -> f64 {
        let idx = self.radii.partition_point(|&x| x <= r);
        if idx == 0 {
            return self.values[0];
        }
        let i = idx - 1;
        if self.radii[i] == r || idx == self.radii.len() {
            return self.values[i];
        }
        let (x0, x1) = (self.radii[i], self.radii[idx]);
        let w = (r - x0) / (x1 - x0);
        self.values[i] + w * (self.values[idx] - self.values[i])
    }

    /// Values at each radius of `data`, checking coverage first.
    pub fn eval_at(&self, data: &EmpiricalCdf) -> Result<Vec<f64>> {
        if data.is_empty() {
            return Err(Error::Empty("empirical CDF"));
        }
        if !self.covers(data.radii[0], data.max_radius()) {
            return Err(Error::Domain(format!(
                "model grid [{}, {}] mm does not cover data radii [{}, {}] mm",
                self.radii[0],
                self.radii[self.radii.len() - 1],
                data.radii[0],
                data.max_radius()
            )));
        }
        Ok(data.radii.iter().map(|&r| self.eval(r)).collect())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    /// Largest absolute difference.
    #[default]
    Ks,
    /// Root-mean-square difference.
    Rms,
}

impl std::str::FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ks" => Ok(Self::Ks),
            "rms" => Ok(Self::Rms),
            other => Err(Error::InvalidParameter(format!(
                "unknown metric `{other}` (expected ks or rms)"
            ))),
        }
    }
}

/// Distance between two equally long vectors of CDF values.
pub fn distance(model: &[f64], data: &[f64], metric: Metric) -> f64 {
    debug_assert_eq!(model.len(), data.len());
    let diffs = model.iter().zip(data).map(|(m, d)| m - d);
    match metric {
        Metric::Ks => diffs.fold(0.0, |acc, d| acc.max(d.abs())),
        Metric::Rms => {
            let n = model.len().max(1) as f64;
            (diffs.map(|d| d * d).sum::<f64>() / n).sqrt()
        }
    }
}

/// Distance between a model CDF in counts and the data, evaluated at every
/// data radius.
pub fn cdf_distance(model: &GridCdf, data: &EmpiricalCdf, metric: Metric) -> Result<f64> {
    let m = model.eval_at(data)?;
    Ok(distance(&m, &data.counts(), metric))
}

/// One-sample Kolmogorov–Smirnov statistic of `samples` against `cdf`,
/// checking both sides of every jump of the empirical CDF.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter().enumerate().fold(0.0, |acc, (i, &x)| {
        let f = cdf(x);
        let above = (i as f64 + 1.0) / n - f;
        let below = f - i as f64 / n;
        acc.max(above).max(below)
    })
}

/// Two-sample Kolmogorov–Smirnov statistic.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut xs = a.to_vec();
    let mut ys = b.to_vec();
    xs.sort_by(f64::total_cmp);
    ys.sort_by(f64::total_cmp);
    let (n, m) = (xs.len() as f64, ys.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < xs.len() && j < ys.len() {
        let t = xs[i].min(ys[j]);
        while i < xs.len() && xs[i] <= t {
            i += 1;
        }
        while j < ys.len() && ys[j] <= t {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    d
}
