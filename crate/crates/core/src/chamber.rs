//! Born-rule track-initiation density over a chamber volume.
//!
//! The density is coeff·e^{−γt}/(4πr²) with r the distance from the source.
//! In source-centred spherical coordinates the r² of the volume element
//! cancels the 1/r², so along every direction ω the density is uniform in r up
//! to the exit distance d(ω). Both the sampler and the model CDF are built on
//! that observation.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::quadrature::Integrator;

pub type Vec3 = [f64; 3];

/// Lumped Born-rule coefficient and the decay rate it decays with.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleParams {
    /// ρ_c·A·v·τ lumped into one count-scale coefficient.
    pub coeff: f64,
    /// Decay rate γ (1/s).
    pub gamma: f64,
}

impl ScaleParams {
    pub fn validate(&self) -> Result<()> {
        ensure(self.coeff > 0.0, || format!("coeff must be > 0, got {}", self.coeff))?;
        ensure(self.gamma > 0.0, || format!("gamma must be > 0, got {}", self.gamma))
    }
}

impl Default for ScaleParams {
    fn default() -> Self {
        Self { coeff: 1.0, gamma: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ChamberShape {
    /// Upright cylinder on the z axis.
    Cylinder {
        dish_radius: f64,
        floor_z: f64,
        ceiling_z: f64,
    },
    /// Sphere centred on the origin.
    Sphere { radius: f64 },
}

/// Sensitive volume plus the source position, all in mm. The camera looks
/// down the z axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChamberGeometry {
    pub shape: ChamberShape,
    pub source: Vec3,
}

impl Default for ChamberGeometry {
    /// Petri-dish-like defaults: 45 mm radius, 10 mm tall, source 2 mm above
    /// the floor on the axis.
    fn default() -> Self {
        Self {
            shape: ChamberShape::Cylinder {
                dish_radius: 45.0,
                floor_z: 0.0,
                ceiling_z: 10.0,
            },
            source: [0.0, 0.0, 2.0],
        }
    }
}

/// Where and when a track started.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackStart {
    pub position: Vec3,
    pub time: f64,
}

const BOUNDARY_EPS: f64 = 1e-9;

impl ChamberGeometry {
    pub fn cylinder(dish_radius: f64, floor_z: f64, ceiling_z: f64, source: Vec3) -> Result<Self> {
        let g = Self {
            shape: ChamberShape::Cylinder {
                dish_radius,
                floor_z,
                ceiling_z,
            },
            source,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn sphere(radius: f64, source: Vec3) -> Result<Self> {
        let g = Self {
            shape: ChamberShape::Sphere { radius },
            source,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        match self.shape {
            ChamberShape::Cylinder {
                dish_radius,
                floor_z,
                ceiling_z,
            } => {
                ensure(dish_radius > 0.0, || {
                    format!("dish_radius must be > 0, got {dish_radius}")
                })?;
                ensure(ceiling_z > floor_z, || {
                    format!("ceiling_z ({ceiling_z}) must exceed floor_z ({floor_z})")
                })?;
            }
            ChamberShape::Sphere { radius } => {
                ensure(radius > 0.0, || format!("sphere radius must be > 0, got {radius}"))?;
            }
        }
        ensure(self.source.iter().all(|c| c.is_finite()), || {
            "source must be finite".into()
        })?;
        ensure(self.contains(self.source), || {
            format!("source {:?} lies outside the chamber", self.source)
        })
    }

    /// Closed-set membership with a small tolerance so boundary sources count.
    pub fn contains(&self, p: Vec3) -> bool {
        match self.shape {
            ChamberShape::Cylinder {
                dish_radius,
                floor_z,
                ceiling_z,
            } => {
                let rho = p[0].hypot(p[1]);
                rho <= dish_radius * (1.0 + BOUNDARY_EPS)
                    && p[2] >= floor_z - BOUNDARY_EPS
                    && p[2] <= ceiling_z + BOUNDARY_EPS
            }
            ChamberShape::Sphere { radius } => norm(p) <= radius * (1.0 + BOUNDARY_EPS),
        }
    }

    pub fn volume(&self) -> f64 {
        match self.shape {
            ChamberShape::Cylinder {
                dish_radius,
                floor_z,
                ceiling_z,
            } => PI * dish_radius * dish_radius * (ceiling_z - floor_z),
            ChamberShape::Sphere { radius } => 4.0 / 3.0 * PI * radius.powi(3),
        }
    }

    /// Distance from the source to the boundary along unit direction `dir`.
    pub fn exit_distance(&self, dir: Vec3) -> f64 {
        let s = self.source;
        let d = match self.shape {
            ChamberShape::Cylinder {
                dish_radius,
                floor_z,
                ceiling_z,
            } => {
                let vertical = if dir[2] > 0.0 {
                    (ceiling_z - s[2]) / dir[2]
                } else if dir[2] < 0.0 {
                    (floor_z - s[2]) / dir[2]
                } else {
                    f64::INFINITY
                };
                let a = dir[0] * dir[0] + dir[1] * dir[1];
                let radial = if a > 0.0 {
                    let b = s[0] * dir[0] + s[1] * dir[1];
                    let c = s[0] * s[0] + s[1] * s[1] - dish_radius * dish_radius;
                    (-b + (b * b - a * c).max(0.0).sqrt()) / a
                } else {
                    f64::INFINITY
                };
                vertical.min(radial)
            }
            ChamberShape::Sphere { radius } => {
                let b = dot(s, dir);
                let c = dot(s, s) - radius * radius;
                -b + (b * b - c).max(0.0).sqrt()
            }
        };
        d.max(0.0)
    }

    /// Longest chord from the source to the boundary.
    pub fn max_chord(&self) -> f64 {
        let s = self.source;
        match self.shape {
            ChamberShape::Cylinder {
                dish_radius,
                floor_z,
                ceiling_z,
            } => {
                let horizontal = dish_radius + s[0].hypot(s[1]);
                let vertical = (s[2] - floor_z).abs().max((ceiling_z - s[2]).abs());
                horizontal.hypot(vertical)
            }
            ChamberShape::Sphere { radius } => radius + norm(s),
        }
    }

    /// Largest planar (camera-plane) distance from the source to any point in
    /// the chamber.
    pub fn max_planar_extent(&self) -> f64 {
        let s = self.source;
        match self.shape {
            ChamberShape::Cylinder { dish_radius, .. } => dish_radius + s[0].hypot(s[1]),
            ChamberShape::Sphere { radius } => radius + s[0].hypot(s[1]),
        }
    }

    /// True when the chamber is symmetric under rotation about the vertical
    /// line through the source.
    fn axisymmetric_about_source(&self) -> bool {
        self.source[0] == 0.0 && self.source[1] == 0.0
    }

    fn source_height(&self) -> Option<(f64, f64)> {
        match self.shape {
            ChamberShape::Cylinder { floor_z, ceiling_z, .. } => {
                Some((self.source[2] - floor_z, ceiling_z - self.source[2]))
            }
            ChamberShape::Sphere { .. } => None,
        }
    }
}

fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn norm(a: Vec3) -> f64 {
    dot(a, a).sqrt()
}

fn direction(theta: f64, phi: f64) -> Vec3 {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    [st * cp, st * sp, ct]
}

/// Track-initiation density in 1/(mm³·s) at position `x` and time `t`.
/// Zero outside the chamber.
pub fn track_density(x: Vec3, t: f64, s: &ScaleParams, g: &ChamberGeometry) -> Result<f64> {
    let r = norm([x[0] - g.source[0], x[1] - g.source[1], x[2] - g.source[2]]);
    if !(r > 0.0) {
        return Err(Error::Domain("density is singular at the source".into()));
    }
    if !g.contains(x) {
        return Ok(0.0);
    }
    Ok(s.coeff * (-s.gamma * t).exp() / (4.0 * PI * r * r))
}

/// Number of samples drawn from each random stream. Stream `i` produces
/// samples `[i * SAMPLES_PER_STREAM, (i + 1) * SAMPLES_PER_STREAM)`.
pub const SAMPLES_PER_STREAM: usize = 4096;

/// RNG for stream `index` of a run seeded with `seed`: ChaCha8 keyed by the
/// seed, with the stream index selecting one of its 2⁶⁴ independent streams.
pub fn stream_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn draw_start<R: Rng>(rng: &mut R, g: &ChamberGeometry, cutoff: f64, d_max: f64, gamma: f64) -> TrackStart {
    loop {
        let cos_t: f64 = 2.0 * rng.random::<f64>() - 1.0;
        let phi = 2.0 * PI * rng.random::<f64>();
        let sin_t = (1.0 - cos_t * cos_t).max(0.0).sqrt();
        let dir = [sin_t * phi.cos(), sin_t * phi.sin(), cos_t];
        let d = g.exit_distance(dir).min(cutoff);
        if rng.random::<f64>() * d_max >= d {
            continue;
        }
        // 1 - u lies in (0, 1], so the radius lies in (0, d]
        let r = d * (1.0 - rng.random::<f64>());
        let t = -(1.0 - rng.random::<f64>()).ln() / gamma;
        let s = g.source;
        return TrackStart {
            position: [s[0] + r * dir[0], s[1] + r * dir[1], s[2] + r * dir[2]],
            time: t,
        };
    }
}

/// Draws `n` track starts from the Born-rule density restricted to `g`.
/// Deterministic in `seed`, independent of the rayon thread count.
pub fn sample_track_starts(n: usize, seed: u64, s: &ScaleParams, g: &ChamberGeometry) -> Result<Vec<TrackStart>> {
    sample_track_starts_truncated(n, seed, s, g, None)
}

/// As [`sample_track_starts`], with the density additionally set to zero
/// beyond distance `cutoff` (mm) from the source.
pub fn sample_track_starts_truncated(
    n: usize,
    seed: u64,
    s: &ScaleParams,
    g: &ChamberGeometry,
    cutoff: Option<f64>,
) -> Result<Vec<TrackStart>> {
    if n == 0 {
        return Err(Error::InvalidParameter("sample count must be > 0".into()));
    }
    s.validate()?;
    g.validate()?;
    if !(g.volume() > 0.0) {
        return Err(Error::InvalidParameter("chamber has zero volume".into()));
    }
    let cutoff = cutoff.unwrap_or(f64::INFINITY);
    if !(cutoff > 0.0) {
        return Err(Error::InvalidParameter(format!("cutoff must be > 0, got {cutoff}")));
    }
    let d_max = g.max_chord().min(cutoff);
    if !(d_max > 0.0) {
        return Err(Error::InvalidParameter("source has no room to emit into".into()));
    }

    let streams = n.div_ceil(SAMPLES_PER_STREAM);
    let chunks: Vec<Vec<TrackStart>> = (0..streams)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, i as u64);
            let count = SAMPLES_PER_STREAM.min(n - i * SAMPLES_PER_STREAM);
            (0..count)
                .map(|_| draw_start(&mut rng, g, cutoff, d_max, s.gamma))
                .collect()
        })
        .collect();
    Ok(chunks.concat())
}

/// Distance from the source in the camera (x, y) plane.
pub fn planar_radius(ts: &TrackStart, g: &ChamberGeometry) -> f64 {
    (ts.position[0] - g.source[0]).hypot(ts.position[1] - g.source[1])
}

/// Probability that a track starts within planar radius `s` of the source,
/// for each entry of the ascending grid `radii`.
pub fn model_cdf(g: &ChamberGeometry, radii: &[f64]) -> Result<Vec<f64>> {
    model_cdf_truncated(g, radii, None)
}

/// As [`model_cdf`] for the density truncated beyond `cutoff` mm from the
/// source and renormalized.
///
/// Along direction (θ, φ) the mass is uniform in r on (0, d(ω)] and the
/// planar radius is r·sinθ, so the mass with planar radius ≤ s is
/// min(d(ω), s/sinθ). The remaining angular integrals are done adaptively; the
/// azimuthal one is skipped when the chamber is axisymmetric about the source.
pub fn model_cdf_truncated(g: &ChamberGeometry, radii: &[f64], cutoff: Option<f64>) -> Result<Vec<f64>> {
    if radii.is_empty() {
        return Err(Error::Empty("model CDF radius grid"));
    }
    if radii.windows(2).any(|w| w[1] < w[0]) || radii.iter().any(|r| r.is_nan()) {
        return Err(Error::InvalidParameter("radius grid must be sorted ascending".into()));
    }
    g.validate()?;
    let cutoff = cutoff.unwrap_or(f64::INFINITY);
    if !(cutoff > 0.0) {
        return Err(Error::InvalidParameter(format!("cutoff must be > 0, got {cutoff}")));
    }

    // a cutoff past the farthest wall changes nothing
    let cutoff = if cutoff >= g.max_chord() { f64::INFINITY } else { cutoff };
    let angular = AngularIntegral::new(g, cutoff);
    let total = angular.mass(f64::INFINITY);
    if !(total > 0.0) {
        return Err(Error::InvalidParameter("chamber has zero volume".into()));
    }
    let extent = g.max_planar_extent().min(cutoff);

    let mut out: Vec<f64> = radii
        .par_iter()
        .map(|&s| {
            if s <= 0.0 {
                0.0
            } else if s >= extent {
                1.0
            } else {
                (angular.mass(s) / total).clamp(0.0, 1.0)
            }
        })
        .collect();
    // quadrature noise must not break monotonicity
    for i in 1..out.len() {
        out[i] = out[i].max(out[i - 1]);
    }
    Ok(out)
}

struct AngularIntegral<'a> {
    g: &'a ChamberGeometry,
    cutoff: f64,
    quad: Integrator,
}

impl<'a> AngularIntegral<'a> {
    fn new(g: &'a ChamberGeometry, cutoff: f64) -> Self {
        Self {
            g,
            cutoff,
            quad: Integrator {
                abs_tol: 1e-11,
                rel_tol: 1e-11,
                max_subdivisions: 4000,
            },
        }
    }

    fn reach(&self, theta: f64, phi: f64, s: f64) -> f64 {
        let d = self.g.exit_distance(direction(theta, phi)).min(self.cutoff);
        let sin_t = theta.sin();
        let planar_limit = if sin_t > 0.0 { s / sin_t } else { f64::INFINITY };
        d.min(planar_limit) * sin_t
    }

    /// θ values where the integrand has kinks, for a cylinder with the source
    /// on its axis. Other configurations rely on adaptive refinement alone.
    fn theta_breaks(&self, s: f64) -> Vec<f64> {
        let mut breaks = vec![0.0, PI];
        if let (ChamberShape::Cylinder { dish_radius, .. }, Some((below, above))) =
            (self.g.shape, self.g.source_height())
        {
            breaks.push(dish_radius.atan2(above));
            breaks.push(PI - dish_radius.atan2(below));
            if s.is_finite() {
                breaks.push(s.atan2(above));
                breaks.push(PI - s.atan2(below));
            }
        }
        let c = self.cutoff;
        if c.is_finite() {
            for x in [s / c, self.g.max_planar_extent() / c] {
                if x < 1.0 {
                    let a = x.asin();
                    breaks.extend([a, PI - a]);
                }
            }
            if let Some((below, above)) = self.g.source_height() {
                for h in [above, below] {
                    if h < c {
                        let a = (h / c).acos();
                        breaks.extend([a, PI - a]);
                    }
                }
            }
        }
        breaks.retain(|b| b.is_finite() && (0.0..=PI).contains(b));
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        breaks
    }

    /// ∫∫ min(d(ω), s/sinθ) dω.
    fn mass(&self, s: f64) -> f64 {
        let breaks = self.theta_breaks(s);
        if self.g.axisymmetric_about_source() {
            2.0 * PI * self.quad.integrate_pieces(&|t| self.reach(t, 0.0, s), &breaks).value
        } else {
            let outer = Integrator {
                abs_tol: 1e-10,
                rel_tol: 1e-10,
                max_subdivisions: 500,
            };
            outer
                .integrate(
                    |phi| self.quad.integrate_pieces(&|t| self.reach(t, phi, s), &breaks).value,
                    0.0,
                    2.0 * PI,
                )
                .value
        }
    }
}
