//! JSON configuration files for each subcommand. Every field has a default,
//! so `{}` is a valid configuration.

use std::path::Path;

use mottlab::{ChamberGeometry, FitConfig, GeigerGeometry, ModelKind, ScaleParams};
use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::commands::CliError;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Formats {
    pub csv: bool,
    pub json: bool,
    pub svg: bool,
}

impl Formats {
    pub fn parse(list: &str) -> Result<Self, CliError> {
        let mut f = Formats::default();
        for item in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            match item {
                "csv" => f.csv = true,
                "json" => f.json = true,
                "svg" => f.svg = true,
                other => {
                    return Err(CliError::Usage(format!(
                        "unknown format `{other}` (expected csv, json, svg)"
                    )))
                }
            }
        }
        if f == Formats::default() {
            return Err(CliError::Usage("--formats selects no artifacts".into()));
        }
        Ok(f)
    }
}

pub fn load<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T, CliError> {
    let Some(path) = path else {
        return Ok(T::default());
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("invalid config {}: {e}", path.display())))
}

fn default_n() -> usize {
    100_000
}

fn default_grid_points() -> usize {
    256
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default)]
    pub geometry: ChamberGeometry,
    #[serde(default)]
    pub scale: ScaleParams,
    /// Optional hard cutoff of the density (mm from the source).
    #[serde(default)]
    pub cutoff_mm: Option<f64>,
    #[serde(default = "default_grid_points")]
    pub cdf_grid_points: usize,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self {
            n: default_n(),
            geometry: ChamberGeometry::default(),
            scale: ScaleParams::default(),
            cutoff_mm: None,
            cdf_grid_points: default_grid_points(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChamberFitConfig {
    #[serde(default)]
    pub geometry: ChamberGeometry,
    #[serde(default)]
    pub fit: FitConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GapGrid {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl GapGrid {
    pub fn points(&self) -> Result<Vec<f64>, CliError> {
        if !(self.step > 0.0 && self.start >= 0.0 && self.stop >= self.start) {
            return Err(CliError::Usage(format!(
                "g_grid needs 0 <= start <= stop and step > 0, got {self:?}"
            )));
        }
        let count = ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1;
        Ok((0..count).map(|i| self.start + self.step * i as f64).collect())
    }
}

fn default_kinds() -> Vec<ModelKind> {
    ModelKind::ALL.to_vec()
}

fn default_gap_grid() -> GapGrid {
    GapGrid {
        start: 0.0,
        stop: 40.0,
        step: 1.0,
    }
}

fn default_nodes() -> usize {
    mottlab::geiger::DEFAULT_SOURCE_NODES
}

fn default_fit_kind() -> ModelKind {
    ModelKind::CaseI
}

fn default_sz_bounds() -> (f64, f64) {
    (1.0, 30.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeigerConfig {
    #[serde(default)]
    pub geometry: GeigerGeometry,
    #[serde(default = "default_kinds")]
    pub kinds: Vec<ModelKind>,
    #[serde(default = "default_gap_grid")]
    pub g_grid: GapGrid,
    /// Gap at which every curve is normalized to 1 (mm).
    #[serde(default)]
    pub g_norm: f64,
    #[serde(default = "default_nodes")]
    pub n_nodes: usize,
    /// Model used for the S·Z fit.
    #[serde(default = "default_fit_kind")]
    pub fit_kind: ModelKind,
    #[serde(default = "default_sz_bounds")]
    pub sz_bounds: (f64, f64),
}

impl Default for GeigerConfig {
    fn default() -> Self {
        Self {
            geometry: GeigerGeometry::default(),
            kinds: default_kinds(),
            g_grid: default_gap_grid(),
            g_norm: 0.0,
            n_nodes: default_nodes(),
            fit_kind: default_fit_kind(),
            sz_bounds: default_sz_bounds(),
        }
    }
}
