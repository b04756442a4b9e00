//! Count rate through a Geiger–Müller window against source–window gap `g`
//! for the four collimation hypotheses.
//!
//! Lengths are in mm. `SZ` is the window thickness expressed as the
//! equivalent slowing distance in air and `L` the alpha range in air; every
//! model only lets alphas through whose total slowing stays below `L`.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::optimize::golden_section;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeigerGeometry {
    /// Window radius W (mm).
    pub window_radius_w: f64,
    /// Window thickness Z (mm).
    pub window_thickness_z: f64,
    /// Air-equivalent slowing per unit of window material, S.
    pub slowing_scale_s: f64,
    /// Alpha range in air L (mm).
    pub stopping_distance_l: f64,
    /// Length of the source along the gap direction (mm).
    pub source_extent: f64,
}

impl Default for GeigerGeometry {
    /// 4.5 mm window, 38 mm air range, 3 mm source, and an 8 µm mica window
    /// with S chosen so that SZ = 16 mm.
    fn default() -> Self {
        Self {
            window_radius_w: 4.5,
            window_thickness_z: 0.008,
            slowing_scale_s: 2000.0,
            stopping_distance_l: 38.0,
            source_extent: 3.0,
        }
    }
}

impl GeigerGeometry {
    /// Air-equivalent window thickness S·Z (mm).
    pub fn sz(&self) -> f64 {
        self.slowing_scale_s * self.window_thickness_z
    }

    /// SZ / L.
    pub fn stopping_fraction(&self) -> f64 {
        self.sz() / self.stopping_distance_l
    }

    /// Same geometry with S rescaled so that S·Z equals `sz` mm.
    pub fn with_sz(&self, sz: f64) -> Self {
        let mut g = *self;
        if g.window_thickness_z > 0.0 {
            g.slowing_scale_s = sz / g.window_thickness_z;
        } else {
            g.window_thickness_z = 1.0;
            g.slowing_scale_s = sz;
        }
        g
    }

    pub fn validate(&self) -> Result<()> {
        ensure(self.window_radius_w > 0.0, || {
            format!("window radius must be > 0, got {}", self.window_radius_w)
        })?;
        ensure(self.stopping_distance_l > 0.0, || {
            format!("stopping distance must be > 0, got {}", self.stopping_distance_l)
        })?;
        ensure(self.window_thickness_z >= 0.0 && self.slowing_scale_s >= 0.0, || {
            "window thickness and slowing scale must be >= 0".into()
        })?;
        ensure(self.source_extent >= 0.0, || {
            format!("source extent must be >= 0, got {}", self.source_extent)
        })?;
        ensure(self.sz() < self.stopping_distance_l, || {
            format!(
                "window stops every alpha: S*Z = {} mm is not below L = {} mm",
                self.sz(),
                self.stopping_distance_l
            )
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    /// Collimation at the decaying nucleus; slowing in air and window.
    Geometric,
    /// Collimation at the air–window interface.
    CaseI,
    /// Collimation at the window–fill-gas interface.
    CaseII,
    /// Collimation inside the window.
    CaseIII,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [Self::Geometric, Self::CaseI, Self::CaseII, Self::CaseIII];

    pub fn name(self) -> &'static str {
        match self {
            Self::Geometric => "geometric",
            Self::CaseI => "case_i",
            Self::CaseII => "case_ii",
            Self::CaseIII => "case_iii",
        }
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown model kind `{s}`")))
    }
}

fn check_gap(g: f64) -> Result<()> {
    if g >= 0.0 && g.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("gap must be finite and >= 0, got {g}")))
    }
}

fn window_angle(g: f64, geom: &GeigerGeometry) -> f64 {
    if g == 0.0 {
        FRAC_PI_2
    } else {
        (geom.window_radius_w / g).atan()
    }
}

/// Limiting cone half-angle for the single-angle models.
pub fn theta_limit(kind: ModelKind, g: f64, geom: &GeigerGeometry) -> Result<f64> {
    check_gap(g)?;
    let window = window_angle(g, geom);
    let l = geom.stopping_distance_l;
    Ok(match kind {
        ModelKind::Geometric => {
            let reach = (g + geom.sz()) / l;
            if reach >= 1.0 {
                0.0
            } else {
                window.min(reach.acos())
            }
        }
        ModelKind::CaseI => window.min((geom.sz() / l).acos()),
        ModelKind::CaseII => window,
        ModelKind::CaseIII => return Err(Error::UnsupportedKind("case_iii")),
    })
}

/// Gap below which case (iii) uses its near-window branch:
/// g* = W s / √(1 − s²) with s = SZ/L.
pub fn case_iii_boundary(geom: &GeigerGeometry) -> f64 {
    let s = geom.stopping_fraction();
    geom.window_radius_w * s / (1.0 - s * s).sqrt()
}

fn case_iii_far(g: f64, geom: &GeigerGeometry) -> f64 {
    let s = geom.stopping_fraction();
    let w = geom.window_radius_w;
    s * ((g * g + w * w) / (g * g)).ln()
}

fn case_iii_near(g: f64, geom: &GeigerGeometry) -> f64 {
    let s = geom.stopping_fraction();
    let w = geom.window_radius_w;
    (s - g / (g * g + w * w).sqrt()) - s * s.ln()
}

/// Unnormalized flux into the tube at gap `g`.
///
/// Cases (i) and (ii) integrate the inverse-square density over the window,
/// giving −ln cos θ; that diverges at contact whenever the window angle
/// binds at g = 0, reported as [`Error::DivergentAtContact`].
pub fn flux(kind: ModelKind, g: f64, geom: &GeigerGeometry) -> Result<f64> {
    check_gap(g)?;
    match kind {
        ModelKind::Geometric => Ok(1.0 - theta_limit(kind, g, geom)?.cos()),
        ModelKind::CaseI | ModelKind::CaseII => {
            let theta = theta_limit(kind, g, geom)?;
            if theta >= FRAC_PI_2 {
                return Err(Error::DivergentAtContact(kind.name()));
            }
            Ok(-theta.cos().ln())
        }
        ModelKind::CaseIII => {
            let s = geom.stopping_fraction();
            if s <= 0.0 {
                return Ok(0.0);
            }
            if g > case_iii_boundary(geom) {
                Ok(case_iii_far(g, geom))
            } else {
                Ok(case_iii_near(g, geom))
            }
        }
    }
}

/// Both case (iii) branches evaluated exactly at the boundary gap g*.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BranchJump {
    pub boundary_mm: f64,
    pub far: f64,
    pub near: f64,
    /// |far − near|; equals s·|ln s| for s = SZ/L.
    pub jump: f64,
}

pub fn case_iii_branch_jump(geom: &GeigerGeometry) -> Result<BranchJump> {
    geom.validate()?;
    let s = geom.stopping_fraction();
    if !(s > 0.0) {
        return Err(Error::Domain("case (iii) needs S*Z > 0".into()));
    }
    let g = case_iii_boundary(geom);
    let far = case_iii_far(g, geom);
    let near = case_iii_near(g, geom);
    Ok(BranchJump {
        boundary_mm: g,
        far,
        near,
        jump: (far - near).abs(),
    })
}

/// Default quadrature nodes for source-extent averaging.
pub const DEFAULT_SOURCE_NODES: usize = 4096;

/// Midpoint-rule average of the flux over gaps [g, g + source_extent]. Finite
/// for every g ≥ 0 when the extent is positive, since no node sits at 0.
pub fn source_averaged_flux(kind: ModelKind, g: f64, geom: &GeigerGeometry, n_nodes: usize) -> Result<f64> {
    check_gap(g)?;
    if n_nodes == 0 {
        return Err(Error::InvalidParameter("n_nodes must be >= 1".into()));
    }
    let extent = geom.source_extent;
    if extent == 0.0 {
        return flux(kind, g, geom);
    }
    let h = extent / n_nodes as f64;
    let mut sum = 0.0;
    for i in 0..n_nodes {
        sum += flux(kind, g + (i as f64 + 0.5) * h, geom)?;
    }
    Ok(sum / n_nodes as f64)
}

/// Divides `flux` over the grid by its value at `g_norm`.
pub fn normalize_curve<F: Fn(f64) -> Result<f64>>(
    flux: F,
    g_grid: &[f64],
    g_norm: f64,
    kind: ModelKind,
) -> Result<Vec<f64>> {
    let norm = flux(g_norm)?;
    if !(norm > 0.0) {
        return Err(Error::ZeroNormalization {
            kind: kind.name(),
            g_norm,
        });
    }
    g_grid.iter().map(|&g| Ok(flux(g)? / norm)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizedCurve {
    pub kind: ModelKind,
    pub values: Vec<f64>,
}

/// Source-averaged flux of each model on `g_grid`, each curve divided by its
/// own value at `g_norm`.
pub fn normalized_curves(
    kinds: &[ModelKind],
    g_grid: &[f64],
    g_norm: f64,
    geom: &GeigerGeometry,
) -> Result<Vec<NormalizedCurve>> {
    normalized_curves_with_nodes(kinds, g_grid, g_norm, geom, DEFAULT_SOURCE_NODES)
}

pub fn normalized_curves_with_nodes(
    kinds: &[ModelKind],
    g_grid: &[f64],
    g_norm: f64,
    geom: &GeigerGeometry,
    n_nodes: usize,
) -> Result<Vec<NormalizedCurve>> {
    geom.validate()?;
    check_gap(g_norm)?;
    kinds
        .iter()
        .map(|&kind| {
            let values = normalize_curve(|g| source_averaged_flux(kind, g, geom, n_nodes), g_grid, g_norm, kind)?;
            Ok(NormalizedCurve { kind, values })
        })
        .collect()
}

/// Result of fitting the air-equivalent window thickness.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StoppingFit {
    pub sz_equiv_mm: f64,
    pub objective: f64,
    pub evals: usize,
}

/// RMS misfit between the model curve normalized at the smallest gap and the
/// data expressed in the same units. The data normalization is the
/// least-squares count rate of the model at that gap, so no single noisy
/// point sets the scale.
pub fn stopping_objective(data: &[(f64, f64)], kind: ModelKind, geom: &GeigerGeometry, n_nodes: usize) -> Result<f64> {
    let gaps: Vec<f64> = data.iter().map(|d| d.0).collect();
    let g_norm = gaps.iter().copied().fold(f64::INFINITY, f64::min);
    let model = normalize_curve(|g| source_averaged_flux(kind, g, geom, n_nodes), &gaps, g_norm, kind)?;
    let md: f64 = model.iter().zip(data).map(|(m, d)| m * d.1).sum();
    let dd: f64 = data.iter().map(|d| d.1 * d.1).sum();
    if !(md > 0.0) {
        return Err(Error::Degenerate("model and data share no signal".into()));
    }
    // data scaled by k so that k·d best matches the model
    let k = md / dd;
    let sq: f64 = model.iter().zip(data).map(|(m, d)| (m - k * d.1).powi(2)).sum();
    Ok((sq / data.len() as f64).sqrt())
}

/// Golden-section fit of S·Z (air-equivalent window thickness, mm) within
/// `bounds` to measured `(g_mm, count_rate)` pairs.
pub fn fit_stopping_equiv(
    data: &[(f64, f64)],
    kind: ModelKind,
    geom_template: &GeigerGeometry,
    bounds: (f64, f64),
) -> Result<StoppingFit> {
    geom_template.validate()?;
    if data.len() < 3 {
        return Err(Error::Degenerate(format!(
            "need at least 3 data points, got {}",
            data.len()
        )));
    }
    if data.iter().any(|&(g, c)| !(g >= 0.0 && g.is_finite() && c.is_finite())) {
        return Err(Error::Degenerate("gaps must be finite and >= 0, rates finite".into()));
    }
    let g0 = data[0].0;
    if data.iter().all(|d| d.0 == g0) {
        return Err(Error::Degenerate("all data points share the same gap".into()));
    }
    let (lo, hi) = bounds;
    let l = geom_template.stopping_distance_l;
    if !(lo >= 0.0 && lo < hi && hi < l) {
        return Err(Error::InvalidParameter(format!(
            "S*Z bounds must satisfy 0 <= lo < hi < L = {l}, got ({lo}, {hi})"
        )));
    }
    let objective = |sz: f64| {
        stopping_objective(data, kind, &geom_template.with_sz(sz), DEFAULT_SOURCE_NODES).unwrap_or(f64::INFINITY)
    };
    let m = golden_section(objective, lo, hi, 1e-4, 500);
    // the search never lands exactly on a bound; check both explicitly
    let (mut best, mut value) = (m.x[0], m.value);
    for edge in [lo, hi] {
        let v = objective(edge);
        if v < value {
            best = edge;
            value = v;
        }
    }
    Ok(StoppingFit {
        sz_equiv_mm: best,
        objective: value,
        evals: m.evals + 2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::Integrator;
    use approx::assert_relative_eq;
    use std::f64::consts::FRAC_PI_4;

    fn geom() -> GeigerGeometry {
        GeigerGeometry::default()
    }

    #[test]
    fn theta_examples() {
        let g = geom();
        let l_minus_sz = g.stopping_distance_l - g.sz();
        assert_eq!(theta_limit(ModelKind::Geometric, l_minus_sz, &g).unwrap(), 0.0);
        assert_relative_eq!(
            theta_limit(ModelKind::CaseII, g.window_radius_w, &g).unwrap(),
            FRAC_PI_4
        );
        assert_eq!(theta_limit(ModelKind::CaseII, 0.0, &g).unwrap(), FRAC_PI_2);
        assert!(matches!(
            theta_limit(ModelKind::CaseIII, 1.0, &g),
            Err(Error::UnsupportedKind(_))
        ));
    }

    #[test]
    fn case_ii_closed_form() {
        let g = geom();
        for i in 1..200 {
            let gap = 0.2 * f64::from(i);
            let w = g.window_radius_w;
            let closed = 0.5 * (1.0 + (w / gap).powi(2)).ln();
            assert_relative_eq!(flux(ModelKind::CaseII, gap, &g).unwrap(), closed, max_relative = 1e-12);
        }
    }

    #[test]
    fn contact_divergence_is_signalled() {
        let g = geom();
        assert!(matches!(
            flux(ModelKind::CaseII, 0.0, &g),
            Err(Error::DivergentAtContact("case_ii"))
        ));
        // with a window thick enough to bind, case (i) stays finite at contact
        assert!(flux(ModelKind::CaseI, 0.0, &g).unwrap().is_finite());
        let bare = g.with_sz(0.0);
        assert!(matches!(
            flux(ModelKind::CaseI, 0.0, &bare),
            Err(Error::DivergentAtContact("case_i"))
        ));
    }

    #[test]
    fn case_iii_far_limit() {
        let g = geom();
        let s = g.stopping_fraction();
        let w = g.window_radius_w;
        let gap = 1e4;
        assert_relative_eq!(
            flux(ModelKind::CaseIII, gap, &g).unwrap(),
            s * w * w / (gap * gap),
            max_relative = 1e-6
        );
    }

    #[test]
    fn case_iii_branch_values() {
        for s in [0.1, 0.42, 0.8] {
            let g = geom().with_sz(s * 38.0);
            let jump = case_iii_branch_jump(&g).unwrap();
            assert_relative_eq!(jump.far, -2.0 * s * s.ln(), max_relative = 1e-9);
            assert_relative_eq!(jump.near, -s * s.ln(), max_relative = 1e-9);
            assert_relative_eq!(jump.jump, s * s.ln().abs(), max_relative = 1e-9);
        }
    }

    #[test]
    fn geometric_cutoff() {
        let g = geom();
        let edge = g.stopping_distance_l - g.sz();
        for i in 0..50 {
            let gap = edge + 0.3 * f64::from(i);
            assert_eq!(flux(ModelKind::Geometric, gap, &g).unwrap(), 0.0);
        }
        assert!(flux(ModelKind::Geometric, edge - 0.5, &g).unwrap() > 0.0);
    }

    #[test]
    fn degenerate_extent_is_pointwise() {
        let mut g = geom();
        g.source_extent = 0.0;
        for kind in ModelKind::ALL {
            assert_eq!(
                source_averaged_flux(kind, 5.0, &g, 1).unwrap(),
                flux(kind, 5.0, &g).unwrap()
            );
        }
        g.source_extent = 1e-9;
        let avg = source_averaged_flux(ModelKind::CaseII, 5.0, &g, 1).unwrap();
        assert_relative_eq!(avg, flux(ModelKind::CaseII, 5.0, &g).unwrap(), max_relative = 1e-9);
    }

    #[test]
    fn source_average_at_contact_matches_quadrature() {
        let g = geom();
        let midpoint = source_averaged_flux(ModelKind::CaseII, 0.0, &g, 1_000_000).unwrap();
        let oracle = Integrator::new(1e-14, 1e-13)
            .integrate(|x| flux(ModelKind::CaseII, x, &g).unwrap(), 0.0, g.source_extent)
            .value
            / g.source_extent;
        assert!(midpoint.is_finite());
        assert_relative_eq!(midpoint, oracle, max_relative = 1e-6);
    }

    #[test]
    fn averaged_flux_decreasing_in_gap() {
        let g = geom();
        let grid: Vec<f64> = (0..200).map(|i| g.stopping_distance_l * f64::from(i) / 200.0).collect();
        for kind in ModelKind::ALL {
            let v: Vec<f64> = grid
                .iter()
                .map(|&x| source_averaged_flux(kind, x, &g, 512).unwrap())
                .collect();
            // geometric is identically zero once the whole source is beyond L − SZ
            assert!(
                v.windows(2).all(|w| w[1] < w[0] || (w[1] == 0.0 && w[0] == 0.0)),
                "{}",
                kind.name()
            );
        }
    }

    #[test]
    fn normalization_at_point() {
        let g = geom();
        let grid: Vec<f64> = (0..=40).map(f64::from).collect();
        let curves = normalized_curves(&ModelKind::ALL, &grid, 0.0, &g).unwrap();
        for c in &curves {
            assert_eq!(c.values[0], 1.0);
            assert!(c.values.iter().all(|v| v.is_finite() && *v >= 0.0));
        }
        let err = normalized_curves(&[ModelKind::Geometric], &grid, 30.0, &g).unwrap_err();
        assert!(matches!(err, Error::ZeroNormalization { .. }));
    }

    #[test]
    fn stopping_fit_noiseless_and_pinned() {
        let truth = geom();
        let gaps: Vec<f64> = (0..=40).map(|i| 0.5 * f64::from(i)).collect();
        let curve = normalized_curves(&[ModelKind::CaseI], &gaps, 0.0, &truth)
            .unwrap()
            .remove(0);
        let data: Vec<(f64, f64)> = gaps.iter().zip(&curve.values).map(|(&g, &v)| (g, 1234.0 * v)).collect();

        assert!(stopping_objective(&data, ModelKind::CaseI, &truth, DEFAULT_SOURCE_NODES).unwrap() < 1e-10);
        let fit = fit_stopping_equiv(&data, ModelKind::CaseI, &truth, (5.0, 30.0)).unwrap();
        assert!((fit.sz_equiv_mm - 16.0).abs() < 1e-2, "{fit:?}");

        let pinned = fit_stopping_equiv(&data, ModelKind::CaseI, &truth, (20.0, 30.0)).unwrap();
        assert_eq!(pinned.sz_equiv_mm, 20.0);
        assert!(pinned.objective > fit.objective);
    }

    #[test]
    fn stopping_fit_rejects_degenerate_data() {
        let g = geom();
        let same = [(2.0, 10.0), (2.0, 11.0), (2.0, 9.0)];
        assert!(matches!(
            fit_stopping_equiv(&same, ModelKind::CaseI, &g, (5.0, 30.0)),
            Err(Error::Degenerate(_))
        ));
        assert!(fit_stopping_equiv(&same[..2], ModelKind::CaseI, &g, (5.0, 30.0)).is_err());
    }
}
