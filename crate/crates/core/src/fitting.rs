//! Fitting the Born-rule CDF to measured track starts.
//!
//! The count scale (the lumped ρ_c·A·τ coefficient) enters linearly and is
//! always solved in closed form. Up to two geometry parameters are searched by
//! golden sections (coordinate descent when there are two), re-solving the
//! scale at every evaluation.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::chamber::{model_cdf_truncated, ChamberGeometry, ChamberShape};
use crate::empirics::{distance, EmpiricalCdf, GridCdf, Metric};
use crate::error::{Error, Result};
use crate::optimize::{coordinate_descent, golden_section};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitParam {
    CountScale,
    SourceHeight,
    DishRadius,
    CutoffRadius,
}

impl FitParam {
    pub fn name(self) -> &'static str {
        match self {
            Self::CountScale => "count_scale",
            Self::SourceHeight => "source_height",
            Self::DishRadius => "dish_radius",
            Self::CutoffRadius => "cutoff_radius",
        }
    }

    pub fn unit(self) -> &'static str {
        match self {
            Self::CountScale => "counts",
            _ => "mm",
        }
    }
}

fn default_tolerance() -> f64 {
    1e-3
}

fn default_max_evals() -> usize {
    200
}

fn default_grid_points() -> usize {
    512
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitConfig {
    /// Parameters to fit. The count scale is always solved analytically, so
    /// listing it is optional.
    #[serde(default)]
    pub free_params: Vec<FitParam>,
    /// Search interval for each free geometry parameter, in mm.
    #[serde(default)]
    pub bounds: BTreeMap<FitParam, (f64, f64)>,
    #[serde(default)]
    pub metric: Metric,
    /// Stop once every search bracket is narrower than this (mm).
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default = "default_max_evals")]
    pub max_evals: usize,
    /// Nodes of the radius grid the model CDF is tabulated on.
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            free_params: Vec::new(),
            bounds: BTreeMap::new(),
            metric: Metric::Ks,
            tolerance: default_tolerance(),
            max_evals: default_max_evals(),
            grid_points: default_grid_points(),
        }
    }
}

impl FitConfig {
    /// Free geometry parameters with their bounds, in a fixed order.
    fn searched(&self) -> Result<Vec<(FitParam, (f64, f64))>> {
        let mut out: Vec<(FitParam, (f64, f64))> = Vec::new();
        for &p in &self.free_params {
            if p == FitParam::CountScale || out.iter().any(|(q, _)| *q == p) {
                continue;
            }
            let &(lo, hi) = self
                .bounds
                .get(&p)
                .ok_or_else(|| Error::InvalidParameter(format!("no bounds given for {}", p.name())))?;
            if !(lo < hi) {
                return Err(Error::InvalidParameter(format!(
                    "bounds for {} must satisfy lo < hi, got ({lo}, {hi})",
                    p.name()
                )));
            }
            out.push((p, (lo, hi)));
        }
        if out.len() > 2 {
            return Err(Error::InvalidParameter(
                "at most two geometry parameters can be fitted at once".into(),
            ));
        }
        Ok(out)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "tolerance must be > 0, got {}",
                self.tolerance
            )));
        }
        if self.max_evals == 0 {
            return Err(Error::InvalidParameter("max_evals must be > 0".into()));
        }
        if self.grid_points < 2 {
            return Err(Error::InvalidParameter("grid_points must be >= 2".into()));
        }
        self.searched().map(|_| ())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamValue {
    pub value: f64,
    pub unit: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutoffFit {
    pub cutoff_mm: f64,
    pub objective_with: f64,
    pub objective_without: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub params: BTreeMap<String, ParamValue>,
    pub objective: f64,
    pub evals: usize,
    pub converged: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub cutoff: Option<CutoffFit>,
}

/// Least-squares count scale Σ mᵢdᵢ / Σ mᵢ² for a model shape (probability)
/// and data counts on the same radii.
pub fn fit_count_scale(model_shape: &[f64], data: &EmpiricalCdf) -> Result<f64> {
    scale_for(model_shape, &data.counts())
}

fn scale_for(shape: &[f64], counts: &[f64]) -> Result<f64> {
    if shape.len() != counts.len() {
        return Err(Error::InvalidParameter(format!(
            "model shape has {} points but data has {}",
            shape.len(),
            counts.len()
        )));
    }
    let mm: f64 = shape.iter().map(|m| m * m).sum();
    if !(mm > 0.0) {
        return Err(Error::Degenerate("model shape is identically zero".into()));
    }
    let md: f64 = shape.iter().zip(counts).map(|(m, d)| m * d).sum();
    Ok(md / mm)
}

fn radius_grid(max_radius: f64, points: usize) -> Vec<f64> {
    let top = max_radius.max(f64::MIN_POSITIVE);
    (0..points).map(|i| top * i as f64 / (points - 1) as f64).collect()
}

/// Model CDF in probability evaluated at every data radius, via a uniform
/// grid over [0, max data radius].
pub fn model_shape_at(
    geometry: &ChamberGeometry,
    cutoff: Option<f64>,
    data: &EmpiricalCdf,
    grid_points: usize,
) -> Result<Vec<f64>> {
    let radii = radius_grid(data.max_radius(), grid_points.max(2));
    let values = model_cdf_truncated(geometry, &radii, cutoff)?;
    GridCdf::new(radii, values)?.eval_at(data)
}

struct Evaluation {
    objective: f64,
    scale: f64,
}

fn evaluate(
    geometry: &ChamberGeometry,
    cutoff: Option<f64>,
    data: &EmpiricalCdf,
    counts: &[f64],
    metric: Metric,
    grid_points: usize,
) -> Result<Evaluation> {
    let shape = model_shape_at(geometry, cutoff, data, grid_points)?;
    let scale = scale_for(&shape, counts)?;
    let model: Vec<f64> = shape.iter().map(|m| m * scale).collect();
    Ok(Evaluation {
        objective: distance(&model, counts, metric),
        scale,
    })
}

fn apply(template: &ChamberGeometry, params: &[(FitParam, f64)]) -> Result<(ChamberGeometry, Option<f64>)> {
    let mut g = *template;
    let mut cutoff = None;
    for &(p, value) in params {
        match (p, &mut g.shape) {
            (FitParam::SourceHeight, ChamberShape::Cylinder { floor_z, .. }) => g.source[2] = *floor_z + value,
            (FitParam::SourceHeight, ChamberShape::Sphere { .. }) => g.source[2] = value,
            (FitParam::DishRadius, ChamberShape::Cylinder { dish_radius, .. }) => *dish_radius = value,
            (FitParam::DishRadius, ChamberShape::Sphere { radius }) => *radius = value,
            (FitParam::CutoffRadius, _) => cutoff = Some(value),
            (FitParam::CountScale, _) => {}
        }
    }
    g.validate()?;
    Ok((g, cutoff))
}

/// Fits the free parameters of `cfg` to the data. Exhausting the evaluation
/// budget is not an error; it yields `converged == false`.
pub fn fit_parameters(cfg: &FitConfig, geometry_template: &ChamberGeometry, data: &EmpiricalCdf) -> Result<FitResult> {
    cfg.validate()?;
    geometry_template.validate()?;
    if data.is_empty() {
        return Err(Error::Empty("empirical CDF"));
    }
    let searched = cfg.searched()?;
    let counts = data.counts();
    let run = |values: &[f64]| -> Result<Evaluation> {
        let assigned: Vec<(FitParam, f64)> = searched.iter().map(|(p, _)| *p).zip(values.iter().copied()).collect();
        let (g, cutoff) = apply(geometry_template, &assigned)?;
        evaluate(&g, cutoff, data, &counts, cfg.metric, cfg.grid_points)
    };

    let (best, evals, converged) = if searched.is_empty() {
        (Vec::new(), 1, true)
    } else {
        let bounds: Vec<(f64, f64)> = searched.iter().map(|(_, b)| *b).collect();
        let objective = |x: &[f64]| run(x).map_or(f64::INFINITY, |e| e.objective);
        let m = if bounds.len() == 1 {
            golden_section(
                |x| objective(&[x]),
                bounds[0].0,
                bounds[0].1,
                cfg.tolerance,
                cfg.max_evals,
            )
        } else {
            coordinate_descent(objective, &bounds, cfg.tolerance, cfg.max_evals)
        };
        if m.x.iter().any(|v| v.is_nan()) {
            return Err(Error::Degenerate("no admissible parameter point was found".into()));
        }
        (m.x, m.evals, m.converged)
    };

    let final_eval = run(&best)?;
    let mut params = BTreeMap::new();
    params.insert(
        FitParam::CountScale.name().to_string(),
        ParamValue {
            value: final_eval.scale,
            unit: FitParam::CountScale.unit().to_string(),
        },
    );
    for ((p, _), v) in searched.iter().zip(&best) {
        params.insert(
            p.name().to_string(),
            ParamValue {
                value: *v,
                unit: p.unit().to_string(),
            },
        );
    }
    Ok(FitResult {
        params,
        objective: final_eval.objective,
        evals,
        converged,
        cutoff: None,
    })
}

/// Geometry and cutoff described by a fit result, applied to the template it
/// was fitted from.
pub fn fitted_geometry(template: &ChamberGeometry, result: &FitResult) -> Result<(ChamberGeometry, Option<f64>)> {
    let assigned: Vec<(FitParam, f64)> = [FitParam::SourceHeight, FitParam::DishRadius, FitParam::CutoffRadius]
        .into_iter()
        .filter_map(|p| result.params.get(p.name()).map(|v| (p, v.value)))
        .collect();
    apply(template, &assigned)
}

/// Objective of the truncated model at one cutoff: the CDF is renormalized
/// inside the cutoff and scaled to the total count of the data.
pub fn cutoff_objective(
    data: &EmpiricalCdf,
    geometry: &ChamberGeometry,
    cutoff: Option<f64>,
    metric: Metric,
) -> Result<f64> {
    let shape = model_shape_at(geometry, cutoff, data, default_grid_points())?;
    let total = data.total() as f64;
    let model: Vec<f64> = shape.iter().map(|m| m * total).collect();
    Ok(distance(&model, &data.counts(), metric))
}

/// Cutoff search interval and the number of coarse scan points that seed
/// the golden-section refinement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutoffScan {
    pub lo: f64,
    pub hi: f64,
    pub coarse_points: usize,
    pub metric: Metric,
}

impl CutoffScan {
    /// From the smallest data radius out to the longest chord of the chamber.
    pub fn over_data(data: &EmpiricalCdf, geometry: &ChamberGeometry) -> Self {
        Self {
            lo: data.radii.first().copied().unwrap_or(0.0).max(1e-6),
            hi: geometry.max_chord(),
            coarse_points: 64,
            metric: Metric::Ks,
        }
    }
}

/// Scans a hard large-distance cutoff of the density and reports the best
/// cutoff with the objectives of the truncated and untruncated models.
pub fn fit_cutoff(data: &EmpiricalCdf, geometry: &ChamberGeometry) -> Result<CutoffFit> {
    fit_cutoff_with(data, geometry, &CutoffScan::over_data(data, geometry))
}

pub fn fit_cutoff_with(data: &EmpiricalCdf, geometry: &ChamberGeometry, scan: &CutoffScan) -> Result<CutoffFit> {
    if data.is_empty() {
        return Err(Error::Empty("empirical CDF"));
    }
    if !(scan.lo > 0.0 && scan.lo < scan.hi) || scan.coarse_points < 2 {
        return Err(Error::InvalidParameter(format!(
            "cutoff scan needs 0 < lo < hi and at least 2 points, got [{}, {}] x {}",
            scan.lo, scan.hi, scan.coarse_points
        )));
    }
    let objective_without = cutoff_objective(data, geometry, None, scan.metric)?;
    let at = |c: f64| cutoff_objective(data, geometry, Some(c), scan.metric).unwrap_or(f64::INFINITY);

    let step = (scan.hi - scan.lo) / (scan.coarse_points - 1) as f64;
    let coarse: Vec<(f64, f64)> = (0..scan.coarse_points)
        .map(|i| {
            let c = scan.lo + step * i as f64;
            (c, at(c))
        })
        .collect();
    // first minimum wins ties, which keeps flat objectives deterministic
    let (best_c, best_v) = coarse.iter().copied().fold(
        (f64::NAN, f64::INFINITY),
        |acc, (c, v)| if v < acc.1 { (c, v) } else { acc },
    );

    let lo = (best_c - step).max(scan.lo);
    let hi = (best_c + step).min(scan.hi);
    let refined = golden_section(at, lo, hi, 1e-3, 100);
    let (cutoff_mm, objective_with) = if refined.value < best_v {
        (refined.x[0], refined.value)
    } else {
        (best_c, best_v)
    };
    Ok(CutoffFit {
        cutoff_mm,
        objective_with,
        objective_without,
    })
}
