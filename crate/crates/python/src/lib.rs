//! Python bindings: thin wrappers over the core types, with configuration
//! objects passed as JSON strings where they mirror the CLI config files.

use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyComplex;

use ::mottlab::chamber::{self, ChamberGeometry, ScaleParams};
use ::mottlab::empirics::{EmpiricalCdf, Metric};
use ::mottlab::fitting::{self, FitConfig};
use ::mottlab::geiger::{self, GeigerGeometry, ModelKind};
use ::mottlab::physics::{self, ClusterModel, FluxMode, GamowParams};

create_exception!(mottlab, MottlabError, PyValueError);

fn err(e: ::mottlab::Error) -> PyErr {
    MottlabError::new_err(e.to_string())
}

fn json_err(e: serde_json::Error) -> PyErr {
    MottlabError::new_err(e.to_string())
}

#[pyclass(name = "GamowParams", frozen)]
struct PyGamow(GamowParams);

#[pymethods]
impl PyGamow {
    #[new]
    fn new(gamma: f64, v: f64, k: f64) -> PyResult<Self> {
        GamowParams::new(gamma, v, k).map(Self).map_err(err)
    }

    #[getter]
    fn gamma(&self) -> f64 {
        self.0.gamma
    }

    #[getter]
    fn v(&self) -> f64 {
        self.0.v
    }

    #[getter]
    fn k(&self) -> f64 {
        self.0.k
    }

    fn __repr__(&self) -> String {
        format!("GamowParams(gamma={}, v={}, k={})", self.0.gamma, self.0.v, self.0.k)
    }
}

#[pyfunction]
fn eval_amplitude<'py>(py: Python<'py>, r: f64, t: f64, params: &PyGamow) -> PyResult<Bound<'py, PyComplex>> {
    physics::eval_amplitude(r, t, &params.0)
        .map(|z| PyComplex::from_doubles(py, z.re, z.im))
        .map_err(err)
}

#[pyfunction]
fn total_square_norm(t: f64, params: &PyGamow) -> f64 {
    physics::total_square_norm(t, &params.0)
}

/// `mode` is "exact" or "asymptotic".
#[pyfunction]
#[pyo3(signature = (r, t, params, mode = "exact"))]
fn flux_magnitude(r: f64, t: f64, params: &PyGamow, mode: &str) -> PyResult<f64> {
    let mode = match mode {
        "exact" => FluxMode::Exact,
        "asymptotic" => FluxMode::Asymptotic,
        other => return Err(MottlabError::new_err(format!("unknown flux mode `{other}`"))),
    };
    physics::flux_magnitude(r, t, &params.0, mode).map_err(err)
}

#[pyclass(name = "ClusterModel", frozen)]
struct PyCluster(ClusterModel);

#[pymethods]
impl PyCluster {
    #[new]
    fn new(charge_q: f64, epsilon: f64, r_ion: f64, binding_energy: f64) -> PyResult<Self> {
        ClusterModel::new(charge_q, epsilon, r_ion, binding_energy)
            .map(Self)
            .map_err(err)
    }

    /// Energy (eV) of a cluster of radius `r_cluster` (nm) around the ion.
    fn polarization_energy(&self, r_cluster: f64) -> PyResult<f64> {
        physics::polarization_energy(&self.0, r_cluster).map_err(err)
    }

    /// Cluster radius (nm) at which the polarization energy balances the
    /// binding energy.
    fn critical_radius(&self) -> PyResult<f64> {
        physics::critical_radius(&self.0).map_err(err)
    }
}

#[pyfunction]
fn collimation_criterion(sigma: f64, flux: f64, tau: f64) -> PyResult<(f64, bool)> {
    physics::collimation_criterion(sigma, flux, tau)
        .map(|c| (c.drain_rate, c.collimates))
        .map_err(err)
}

#[pyfunction]
fn collimation_cone(mass_energy: f64, kinetic_energy: f64, aperture: f64) -> PyResult<(f64, f64)> {
    physics::collimation_cone(mass_energy, kinetic_energy, aperture)
        .map(|c| (c.wavelength, c.opening_angle))
        .map_err(err)
}

#[pyclass(name = "ChamberGeometry", frozen)]
struct PyChamber(ChamberGeometry);

#[pymethods]
impl PyChamber {
    /// The default cylinder: 45 mm radius, 10 mm tall, source 2 mm above
    /// the floor on the axis.
    #[new]
    fn new() -> Self {
        Self(ChamberGeometry::default())
    }

    #[staticmethod]
    fn cylinder(dish_radius: f64, floor_z: f64, ceiling_z: f64, source: [f64; 3]) -> PyResult<Self> {
        ChamberGeometry::cylinder(dish_radius, floor_z, ceiling_z, source)
            .map(Self)
            .map_err(err)
    }

    #[staticmethod]
    fn sphere(radius: f64, source: [f64; 3]) -> PyResult<Self> {
        ChamberGeometry::sphere(radius, source).map(Self).map_err(err)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let g: ChamberGeometry = serde_json::from_str(text).map_err(json_err)?;
        g.validate().map_err(err)?;
        Ok(Self(g))
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.0).map_err(json_err)
    }

    #[getter]
    fn source(&self) -> [f64; 3] {
        self.0.source
    }

    fn volume(&self) -> f64 {
        self.0.volume()
    }

    fn max_chord(&self) -> f64 {
        self.0.max_chord()
    }

    /// Track starts as `(positions, times)`, positions a list of `[x, y, z]`
    /// in mm.
    #[pyo3(signature = (n, seed, coeff = 1.0, gamma = 1.0, cutoff = None))]
    fn sample(
        &self,
        py: Python<'_>,
        n: usize,
        seed: u64,
        coeff: f64,
        gamma: f64,
        cutoff: Option<f64>,
    ) -> PyResult<(Vec<[f64; 3]>, Vec<f64>)> {
        let s = ScaleParams { coeff, gamma };
        let g = self.0;
        let starts = py
            .detach(|| chamber::sample_track_starts_truncated(n, seed, &s, &g, cutoff))
            .map_err(err)?;
        Ok(starts.iter().map(|t| (t.position, t.time)).unzip())
    }

    /// Planar distances (mm) of points from the source, as seen by a camera
    /// looking down the z axis.
    fn planar_radii(&self, positions: Vec<[f64; 3]>) -> Vec<f64> {
        let s = self.0.source;
        positions.iter().map(|p| (p[0] - s[0]).hypot(p[1] - s[1])).collect()
    }

    /// Model probability that a track starts within planar radius `r`, for
    /// each radius.
    #[pyo3(signature = (radii, cutoff = None))]
    fn model_cdf(&self, py: Python<'_>, radii: Vec<f64>, cutoff: Option<f64>) -> PyResult<Vec<f64>> {
        let g = self.0;
        py.detach(|| chamber::model_cdf_truncated(&g, &radii, cutoff))
            .map_err(err)
    }

    fn __repr__(&self) -> String {
        serde_json::to_string(&self.0).unwrap_or_default()
    }
}

/// Fits the chamber model to planar radii (mm). `config` is a JSON fit
/// configuration; returns the fit result as a JSON string.
#[pyfunction]
#[pyo3(signature = (radii, geometry, config = "{}", cutoff = false))]
fn fit_chamber(py: Python<'_>, radii: Vec<f64>, geometry: &PyChamber, config: &str, cutoff: bool) -> PyResult<String> {
    let cfg: FitConfig = serde_json::from_str(config).map_err(json_err)?;
    let template = geometry.0;
    let result = py
        .detach(|| -> ::mottlab::Result<_> {
            let data = EmpiricalCdf::from_radii(radii)?;
            let mut result = fitting::fit_parameters(&cfg, &template, &data)?;
            if cutoff {
                let (g, _) = fitting::fitted_geometry(&template, &result)?;
                result.cutoff = Some(fitting::fit_cutoff(&data, &g)?);
            }
            Ok(result)
        })
        .map_err(err)?;
    serde_json::to_string(&result).map_err(json_err)
}

/// Distance between the model CDF scaled to the data count and the
/// empirical CDF of `radii`; `metric` is "ks" or "rms".
#[pyfunction]
#[pyo3(signature = (radii, geometry, metric = "ks"))]
fn cdf_distance(radii: Vec<f64>, geometry: &PyChamber, metric: &str) -> PyResult<f64> {
    let metric: Metric = metric.parse().map_err(err)?;
    let data = EmpiricalCdf::from_radii(radii).map_err(err)?;
    fitting::cutoff_objective(&data, &geometry.0, None, metric).map_err(err)
}

#[pyclass(name = "GeigerGeometry", frozen)]
struct PyGeiger(GeigerGeometry);

#[pymethods]
impl PyGeiger {
    #[new]
    #[pyo3(signature = (window_radius_w = 4.5, window_thickness_z = 0.008, slowing_scale_s = 2000.0, stopping_distance_l = 38.0, source_extent = 3.0))]
    fn new(
        window_radius_w: f64,
        window_thickness_z: f64,
        slowing_scale_s: f64,
        stopping_distance_l: f64,
        source_extent: f64,
    ) -> PyResult<Self> {
        let g = GeigerGeometry {
            window_radius_w,
            window_thickness_z,
            slowing_scale_s,
            stopping_distance_l,
            source_extent,
        };
        g.validate().map_err(err)?;
        Ok(Self(g))
    }

    #[getter]
    fn sz(&self) -> f64 {
        self.0.sz()
    }

    fn with_sz(&self, sz: f64) -> Self {
        Self(self.0.with_sz(sz))
    }

    fn __repr__(&self) -> String {
        serde_json::to_string(&self.0).unwrap_or_default()
    }
}

fn kind(name: &str) -> PyResult<ModelKind> {
    name.parse().map_err(err)
}

/// Point-source window flux of model `kind` at gap `g` (mm).
#[pyfunction]
fn geiger_flux(kind_name: &str, g: f64, geometry: &PyGeiger) -> PyResult<f64> {
    geiger::flux(kind(kind_name)?, g, &geometry.0).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (kind_name, g, geometry, n_nodes = geiger::DEFAULT_SOURCE_NODES))]
fn source_averaged_flux(kind_name: &str, g: f64, geometry: &PyGeiger, n_nodes: usize) -> PyResult<f64> {
    geiger::source_averaged_flux(kind(kind_name)?, g, &geometry.0, n_nodes).map_err(err)
}

/// Curves for each named model over `gaps`, each divided by its value at
/// `g_norm`. Returns a dict keyed by model name.
#[pyfunction]
#[pyo3(signature = (gaps, geometry, g_norm = 0.0, kinds = None))]
fn normalized_curves(
    py: Python<'_>,
    gaps: Vec<f64>,
    geometry: &PyGeiger,
    g_norm: f64,
    kinds: Option<Vec<String>>,
) -> PyResult<Vec<(String, Vec<f64>)>> {
    let kinds = match kinds {
        Some(names) => names.iter().map(|n| kind(n)).collect::<PyResult<Vec<_>>>()?,
        None => ModelKind::ALL.to_vec(),
    };
    let g = geometry.0;
    let curves = py
        .detach(|| geiger::normalized_curves(&kinds, &gaps, g_norm, &g))
        .map_err(err)?;
    Ok(curves
        .into_iter()
        .map(|c| (c.kind.name().to_string(), c.values))
        .collect())
}

/// Fits S·Z (mm) to `(gap_mm, count_rate)` pairs; returns
/// `(sz_equiv_mm, objective)`.
#[pyfunction]
#[pyo3(signature = (data, geometry, bounds = (1.0, 30.0), kind_name = "case_i"))]
fn fit_stopping_equiv(
    py: Python<'_>,
    data: Vec<(f64, f64)>,
    geometry: &PyGeiger,
    bounds: (f64, f64),
    kind_name: &str,
) -> PyResult<(f64, f64)> {
    let k = kind(kind_name)?;
    let g = geometry.0;
    py.detach(|| geiger::fit_stopping_equiv(&data, k, &g, bounds))
        .map(|f| (f.sz_equiv_mm, f.objective))
        .map_err(err)
}

#[pymodule(name = "mottlab")]
fn mottlab_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("MottlabError", m.py().get_type::<MottlabError>())?;
    m.add_class::<PyGamow>()?;
    m.add_class::<PyCluster>()?;
    m.add_class::<PyChamber>()?;
    m.add_class::<PyGeiger>()?;
    m.add_function(wrap_pyfunction!(eval_amplitude, m)?)?;
    m.add_function(wrap_pyfunction!(total_square_norm, m)?)?;
    m.add_function(wrap_pyfunction!(flux_magnitude, m)?)?;
    m.add_function(wrap_pyfunction!(collimation_criterion, m)?)?;
    m.add_function(wrap_pyfunction!(collimation_cone, m)?)?;
    m.add_function(wrap_pyfunction!(fit_chamber, m)?)?;
    m.add_function(wrap_pyfunction!(cdf_distance, m)?)?;
    m.add_function(wrap_pyfunction!(geiger_flux, m)?)?;
    m.add_function(wrap_pyfunction!(source_averaged_flux, m)?)?;
    m.add_function(wrap_pyfunction!(normalized_curves, m)?)?;
    m.add_function(wrap_pyfunction!(fit_stopping_equiv, m)?)?;
    Ok(())
}
