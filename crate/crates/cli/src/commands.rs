use std::fmt;
use std::path::{Path, PathBuf};

use mottlab::empirics::{ks_statistic, EmpiricalCdf, GridCdf};
use mottlab::fitting::{fit_cutoff, fit_parameters, fitted_geometry, model_shape_at};
use mottlab::geiger::{fit_stopping_equiv, normalized_curves_with_nodes, NormalizedCurve};
use mottlab::plot::{Chart, Series};
use mottlab::{empirical_cdf, ingest_tracks, model_cdf_truncated, planar_radius, sample_track_starts_truncated, Error};
use serde::{Deserialize, Serialize};

use crate::artifacts::{csv_bytes, json_bytes, Artifacts};
use crate::config::{self, ChamberFitConfig, Formats, GeigerConfig, SimulateConfig};

/// Failure of a subcommand, carrying its exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags or configuration (exit 2).
    Usage(String),
    /// Unreadable or malformed input data (exit 3).
    Data(String),
    /// A model or fit could not be evaluated (exit 4).
    Numerical(String),
    /// Output could not be written (exit 2: the output location is part of
    /// the invocation).
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Usage(_) | Self::Io(_) => 2,
            Self::Data(_) => 3,
            Self::Numerical(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Usage(m) => write!(f, "usage error: {m}"),
            Self::Data(m) => write!(f, "data error: {m}"),
            Self::Numerical(m) => write!(f, "numerical failure: {m}"),
            Self::Io(m) => write!(f, "cannot write output: {m}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::InvalidParameter(_) => Self::Usage(msg),
            Error::Data { .. } | Error::Empty(_) | Error::Degenerate(_) | Error::Csv(_) | Error::Io(_) => {
                Self::Data(msg)
            }
            Error::Json(_) => Self::Usage(msg),
            Error::Domain(_)
            | Error::NoCriticalRadius { .. }
            | Error::DivergentAtContact(_)
            | Error::UnsupportedKind(_)
            | Error::ZeroNormalization { .. } => Self::Numerical(msg),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Options {
    pub config: Option<PathBuf>,
    pub out: PathBuf,
    pub formats: Formats,
}

fn open_data(path: &Path) -> Result<std::fs::File, CliError> {
    std::fs::File::open(path).map_err(|e| CliError::Data(format!("cannot open {}: {e}", path.display())))
}

fn uniform_grid(top: f64, points: usize) -> Vec<f64> {
    (0..points).map(|i| top * i as f64 / (points - 1) as f64).collect()
}

fn fmt_f(v: f64) -> String {
    v.to_string()
}

/// Empirical count at each grid radius (number of radii ≤ r).
fn counts_on_grid(data: &EmpiricalCdf, grid: &[f64]) -> Vec<f64> {
    grid.iter()
        .map(|&r| data.radii.partition_point(|&x| x <= r) as f64)
        .collect()
}

fn overlay_chart(title: &str, grid: &[f64], model_counts: &[f64], data: &EmpiricalCdf) -> Chart {
    let empirical = counts_on_grid(data, grid);
    Chart {
        title: title.into(),
        x_label: "planar radius from source (mm)".into(),
        y_label: "cumulative track starts (counts)".into(),
        series: vec![
            Series::line(
                "model",
                grid.iter().copied().zip(model_counts.iter().copied()).collect(),
            ),
            Series::line("data", grid.iter().copied().zip(empirical).collect()),
        ],
    }
}

#[derive(Debug, Serialize)]
struct SimulateSummary<'a> {
    seed: u64,
    n: usize,
    config: &'a SimulateConfig,
    max_planar_radius_mm: f64,
    /// KS distance between sampled and model planar-radius CDFs (probability).
    ks_statistic: f64,
}

pub fn chamber_simulate(opts: &Options, seed: u64, n: Option<usize>) -> Result<(), CliError> {
    let mut cfg: SimulateConfig = config::load(opts.config.as_deref())?;
    if let Some(n) = n {
        cfg.n = n;
    }
    if cfg.n == 0 {
        return Err(CliError::Usage("n must be at least 1".into()));
    }
    if cfg.cdf_grid_points < 2 {
        return Err(CliError::Usage("cdf_grid_points must be at least 2".into()));
    }
    cfg.geometry.validate()?;
    cfg.scale.validate()?;
    if let Some(c) = cfg.cutoff_mm {
        if !(c > 0.0) {
            return Err(CliError::Usage(format!("cutoff_mm must be > 0, got {c}")));
        }
    }
    let g = cfg.geometry;

    let starts = sample_track_starts_truncated(cfg.n, seed, &cfg.scale, &g, cfg.cutoff_mm)?;
    let radii: Vec<f64> = starts.iter().map(|t| planar_radius(t, &g)).collect();
    let data = EmpiricalCdf::from_radii(radii.clone())?;

    let top = g.max_planar_extent().max(data.max_radius());
    let grid = uniform_grid(top, cfg.cdf_grid_points);
    let model = model_cdf_truncated(&g, &grid, cfg.cutoff_mm)?;
    let model_grid = GridCdf::new(grid.clone(), model.clone())?;
    let ks = ks_statistic(&radii, |r| model_grid.eval(r.min(top)));
    let n_f = cfg.n as f64;
    let model_counts: Vec<f64> = model.iter().map(|p| p * n_f).collect();

    let mut out = Artifacts::default();
    if opts.formats.csv {
        out.add(
            "samples.csv",
            csv_bytes(
                &["x_mm", "y_mm", "z_mm", "t_s"],
                starts.iter().map(|t| {
                    let [x, y, z] = t.position;
                    vec![fmt_f(x), fmt_f(y), fmt_f(z), fmt_f(t.time)]
                }),
            )?,
        );
        out.add(
            "model_cdf.csv",
            csv_bytes(
                &["radius_mm", "probability", "expected_count"],
                grid.iter()
                    .zip(&model)
                    .zip(&model_counts)
                    .map(|((r, p), c)| vec![fmt_f(*r), fmt_f(*p), fmt_f(*c)]),
            )?,
        );
        let mut buf = Vec::new();
        data.write_csv(&mut buf)?;
        out.add("empirical_cdf.csv", buf);
    }
    if opts.formats.json {
        let summary = SimulateSummary {
            seed,
            n: cfg.n,
            config: &cfg,
            max_planar_radius_mm: data.max_radius(),
            ks_statistic: ks,
        };
        out.add("summary.json", json_bytes(&summary)?);
    }
    if opts.formats.svg {
        let chart = overlay_chart("Track-start CDF: model vs simulated", &grid, &model_counts, &data);
        out.add("cdf_overlay.svg", chart.to_svg().into_bytes());
    }
    out.commit(&opts.out)?;
    println!("{} track starts, KS = {ks:.5}", cfg.n);
    Ok(())
}

fn parse_pair(s: &str) -> Result<(f64, f64), CliError> {
    let bad = || CliError::Usage(format!("--source-px expects `x,y` in pixels, got `{s}`"));
    let (a, b) = s.split_once(',').ok_or_else(bad)?;
    let x: f64 = a.trim().parse().map_err(|_| bad())?;
    let y: f64 = b.trim().parse().map_err(|_| bad())?;
    if !(x.is_finite() && y.is_finite()) {
        return Err(bad());
    }
    Ok((x, y))
}

pub fn chamber_fit(
    opts: &Options,
    data_path: &Path,
    calibration: f64,
    source_px: &str,
    with_cutoff: bool,
) -> Result<(), CliError> {
    let cfg: ChamberFitConfig = config::load(opts.config.as_deref())?;
    let source = parse_pair(source_px)?;
    if !(calibration > 0.0 && calibration.is_finite()) {
        return Err(CliError::Usage(format!(
            "--calibration must be a positive mm/px factor, got {calibration}"
        )));
    }
    cfg.geometry.validate()?;
    cfg.fit.validate()?;

    let records = ingest_tracks(open_data(data_path)?, calibration, source)
        .map_err(|e| CliError::Data(format!("{}: {e}", data_path.display())))?;
    let data = empirical_cdf(&records)?;

    let mut result = fit_parameters(&cfg.fit, &cfg.geometry, &data)?;
    let (geometry, cutoff) = fitted_geometry(&cfg.geometry, &result)?;
    if with_cutoff {
        result.cutoff = Some(fit_cutoff(&data, &geometry)?);
    }
    let scale = result.params["count_scale"].value;
    let shape = model_shape_at(&geometry, cutoff, &data, cfg.fit.grid_points)?;

    let mut out = Artifacts::default();
    if opts.formats.json {
        out.add("fit_result.json", json_bytes(&result)?);
    }
    if opts.formats.csv {
        out.add(
            "residuals.csv",
            csv_bytes(
                &["radius_mm", "data_count", "model_count", "residual"],
                data.radii.iter().zip(&data.cumulative).zip(&shape).map(|((r, c), m)| {
                    let model = m * scale;
                    vec![fmt_f(*r), c.to_string(), fmt_f(model), fmt_f(*c as f64 - model)]
                }),
            )?,
        );
    }
    if opts.formats.svg {
        let grid = uniform_grid(data.max_radius(), cfg.fit.grid_points);
        let model: Vec<f64> = model_cdf_truncated(&geometry, &grid, cutoff)?
            .iter()
            .map(|p| p * scale)
            .collect();
        let chart = overlay_chart("Track-start CDF: fitted model vs data", &grid, &model, &data);
        out.add("fit_overlay.svg", chart.to_svg().into_bytes());
    }
    out.commit(&opts.out)?;
    println!(
        "{}",
        serde_json::to_string(&result).map_err(|e| CliError::Io(e.to_string()))?
    );
    Ok(())
}

#[derive(Debug, Deserialize)]
struct RateRow {
    g_mm: f64,
    count_rate: f64,
}

fn read_rates(path: &Path) -> Result<Vec<(f64, f64)>, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(open_data(path)?);
    let header = reader
        .headers()
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?
        .clone();
    if header.iter().collect::<Vec<_>>() != ["g_mm", "count_rate"] {
        return Err(CliError::Data(format!(
            "{}: line 1: expected header `g_mm,count_rate`",
            path.display()
        )));
    }
    let mut rows = Vec::new();
    for row in reader.deserialize::<RateRow>() {
        let row = row.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            CliError::Data(format!("{}: line {line}: {e}", path.display()))
        })?;
        rows.push((row.g_mm, row.count_rate));
    }
    Ok(rows)
}

pub fn geiger_curves(opts: &Options, data_path: Option<&Path>, fit_sz: bool) -> Result<(), CliError> {
    let cfg: GeigerConfig = config::load(opts.config.as_deref())?;
    if fit_sz && data_path.is_none() {
        return Err(CliError::Usage("--fit-sz needs measured rates via --data".into()));
    }
    if cfg.kinds.is_empty() {
        return Err(CliError::Usage("kinds must name at least one model".into()));
    }
    if cfg.n_nodes == 0 {
        return Err(CliError::Usage("n_nodes must be at least 1".into()));
    }
    let grid = cfg.g_grid.points()?;
    cfg.geometry.validate()?;
    let data = data_path.map(read_rates).transpose()?;

    let curves = normalized_curves_with_nodes(&cfg.kinds, &grid, cfg.g_norm, &cfg.geometry, cfg.n_nodes)?;
    let sz_fit = match (&data, fit_sz) {
        (Some(d), true) => Some(fit_stopping_equiv(d, cfg.fit_kind, &cfg.geometry, cfg.sz_bounds)?),
        _ => None,
    };

    let mut out = Artifacts::default();
    if opts.formats.csv {
        let mut header = vec!["g_mm"];
        header.extend(curves.iter().map(|c| c.kind.name()));
        out.add(
            "geiger_curves.csv",
            csv_bytes(
                &header,
                grid.iter().enumerate().map(|(i, g)| {
                    std::iter::once(fmt_f(*g))
                        .chain(curves.iter().map(|c| fmt_f(c.values[i])))
                        .collect()
                }),
            )?,
        );
    }
    if opts.formats.svg {
        out.add(
            "geiger_curves.svg",
            geiger_chart(&grid, &curves, data.as_deref(), cfg.g_norm)
                .to_svg()
                .into_bytes(),
        );
    }
    if let Some(fit) = &sz_fit {
        if opts.formats.json {
            #[derive(Serialize)]
            struct Report<'a> {
                kind: &'static str,
                bounds_mm: (f64, f64),
                #[serde(flatten)]
                fit: &'a mottlab::geiger::StoppingFit,
            }
            out.add(
                "sz_fit.json",
                json_bytes(&Report {
                    kind: cfg.fit_kind.name(),
                    bounds_mm: cfg.sz_bounds,
                    fit,
                })?,
            );
        }
    }
    out.commit(&opts.out)?;
    if let Some(fit) = sz_fit {
        println!(
            "{}",
            serde_json::to_string(&fit).map_err(|e| CliError::Io(e.to_string()))?
        );
    }
    Ok(())
}

/// Curves normalized at `g_norm`; measured rates are scaled to match the
/// first curve at their smallest gap by least squares.
fn geiger_chart(grid: &[f64], curves: &[NormalizedCurve], data: Option<&[(f64, f64)]>, g_norm: f64) -> Chart {
    let mut series: Vec<Series> = curves
        .iter()
        .map(|c| {
            Series::line(
                c.kind.name(),
                grid.iter().copied().zip(c.values.iter().copied()).collect(),
            )
        })
        .collect();
    if let (Some(d), Some(first)) = (data, curves.first()) {
        let reference = GridCdf::new(grid.to_vec(), first.values.clone()).ok();
        let model: Vec<f64> = d
            .iter()
            .map(|&(g, _)| reference.as_ref().map_or(f64::NAN, |r| r.eval(g)))
            .collect();
        let md: f64 = model
            .iter()
            .zip(d)
            .filter(|(m, _)| m.is_finite())
            .map(|(m, p)| m * p.1)
            .sum();
        let dd: f64 = d.iter().map(|p| p.1 * p.1).sum();
        let k = if dd > 0.0 { md / dd } else { 1.0 };
        series.push(Series::markers("data", d.iter().map(|&(g, c)| (g, k * c)).collect()));
    }
    Chart {
        title: format!("Window count rate vs gap (normalized at g = {g_norm} mm)"),
        x_label: "source-window gap g (mm)".into(),
        y_label: "normalized count rate".into(),
        series,
    }
}
