//! Apparatus-free decay wavefunction, its square-norm flux, and the cluster
//! polarization machinery that makes the ionization cross section singular.
//!
//! Geometry is in mm and s. Cluster physics is in nm and eV. Nothing converts
//! between the two implicitly.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::quadrature::Integrator;

/// Coulomb constant e²/(4πε₀) in eV·nm per squared elementary charge.
pub const COULOMB_EV_NM: f64 = 1.43996;

/// ħc in MeV·m, used for de Broglie wavelengths.
pub const HBAR_C_MEV_M: f64 = 1.23984e-12;

/// Parameters of the outgoing Gamow state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GamowParams {
    /// Decay e-folding rate (1/s).
    pub gamma: f64,
    /// Alpha speed (mm/s).
    pub v: f64,
    /// Wavenumber p/ħ (1/mm).
    pub k: f64,
}

impl GamowParams {
    pub fn new(gamma: f64, v: f64, k: f64) -> Result<Self> {
        let p = Self { gamma, v, k };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        ensure(self.gamma > 0.0, || format!("gamma must be > 0, got {}", self.gamma))?;
        ensure(self.v > 0.0, || format!("v must be > 0, got {}", self.v))?;
        ensure(self.k > 0.0, || format!("k must be > 0, got {}", self.k))
    }

    fn prefactor(&self) -> f64 {
        (self.gamma / (4.0 * PI * self.v)).sqrt()
    }
}

fn check_radius(r: f64) -> Result<()> {
    if r > 0.0 && r.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("distance must be finite and > 0, got {r}")))
    }
}

/// Wavefunction amplitude at distance `r` (mm) and time `t` (s), in mm^(-3/2).
///
/// Zero outside the causal shell `r > v t`. The global phase is fixed so the
/// amplitude is real and positive on the shell itself.
pub fn eval_amplitude(r: f64, t: f64, p: &GamowParams) -> Result<Complex64> {
    check_radius(r)?;
    if t < 0.0 {
        return Err(Error::Domain(format!("time must be >= 0, got {t}")));
    }
    let lag = r / p.v - t;
    if lag > 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let exponent = Complex64::new(0.5 * p.gamma * lag, p.k * p.v * lag);
    Ok(exponent.exp() * (p.prefactor() / r))
}

/// |ψ|² without the complex exponential; identical to `eval_amplitude(..).norm_sqr()`
/// up to rounding.
fn density(r: f64, t: f64, p: &GamowParams) -> f64 {
    let lag = r / p.v - t;
    if lag > 0.0 {
        0.0
    } else {
        p.gamma / (4.0 * PI * p.v * r * r) * (p.gamma * lag).exp()
    }
}

/// Total square-norm inside the causal shell at time `t`, by adaptive radial
/// quadrature of 4πr²|ψ|². Equals 1 − e^{−γt} analytically.
pub fn total_square_norm(t: f64, p: &GamowParams) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    let shell = p.v * t;
    Integrator::new(1e-14, 1e-13)
        .integrate(
            |r| {
                if r > 0.0 {
                    4.0 * PI * r * r * density(r, t, p)
                } else {
                    0.0
                }
            },
            0.0,
            shell,
        )
        .value
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FluxMode {
    /// v·|ψ|², the phase-gradient current of the full wavefunction.
    Exact,
    /// γ e^{−γt} / (4πr²), valid for γr/v ≪ 1.
    Asymptotic,
}

/// Magnitude of the outward square-norm flux, in 1/(mm²·s).
pub fn flux_magnitude(r: f64, t: f64, p: &GamowParams, mode: FluxMode) -> Result<f64> {
    check_radius(r)?;
    Ok(match mode {
        FluxMode::Exact => {
            let psi = eval_amplitude(r, t, p)?;
            p.v * psi.norm_sqr()
        }
        FluxMode::Asymptotic => p.gamma * (-p.gamma * t).exp() / (4.0 * PI * r * r),
    })
}

/// Spherical vapor cluster hosting a freshly created ion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusterModel {
    /// Ion charge in elementary charges.
    pub charge_q: f64,
    /// Cluster dielectric constant.
    pub epsilon: f64,
    /// Effective ion radius R_i (nm).
    pub r_ion: f64,
    /// Binding energy of the ejected electron (eV).
    pub binding_energy: f64,
}

impl ClusterModel {
    pub fn new(charge_q: f64, epsilon: f64, r_ion: f64, binding_energy: f64) -> Result<Self> {
        let c = Self {
            charge_q,
            epsilon,
            r_ion,
            binding_energy,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        ensure(self.epsilon >= 1.0, || {
            format!("epsilon must be >= 1, got {}", self.epsilon)
        })?;
        ensure(self.r_ion > 0.0, || format!("r_ion must be > 0, got {}", self.r_ion))?;
        ensure(self.binding_energy >= 0.0, || {
            format!("binding_energy must be >= 0, got {}", self.binding_energy)
        })
    }

    /// Q² k_e (1 − 1/ε) / 2, in eV·nm.
    fn polarization_strength(&self) -> f64 {
        0.5 * self.charge_q * self.charge_q * COULOMB_EV_NM * (1.0 - 1.0 / self.epsilon)
    }
}

/// Polarization energy (eV) of a cluster of radius `r_cluster` (nm) around the
/// ion. Negative for clusters larger than the ion itself.
pub fn polarization_energy(c: &ClusterModel, r_cluster: f64) -> Result<f64> {
    if !(r_cluster > 0.0) {
        return Err(Error::Domain(format!("cluster radius must be > 0, got {r_cluster}")));
    }
    Ok(c.polarization_strength() * (1.0 / r_cluster - 1.0 / c.r_ion))
}

/// Cluster radius R_c (nm) at which the polarization energy cancels the
/// binding energy exactly.
pub fn critical_radius(c: &ClusterModel) -> Result<f64> {
    if !(c.binding_energy > 0.0) || !(c.epsilon > 1.0) {
        return Err(Error::Domain(
            "critical radius needs binding_energy > 0 and epsilon > 1".into(),
        ));
    }
    let inv = 1.0 / c.r_ion - c.binding_energy / c.polarization_strength();
    if inv > 0.0 {
        Ok(1.0 / inv)
    } else {
        Err(Error::NoCriticalRadius {
            binding_energy: c.binding_energy,
        })
    }
}

/// Near-critical ionization cross section σ = A / (R_c − R).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossSectionModel {
    /// Singularity coefficient A (nm³).
    pub coeff_a: f64,
    /// Critical radius R_c (nm).
    pub r_crit: f64,
}

impl CrossSectionModel {
    pub fn new(coeff_a: f64, r_crit: f64) -> Result<Self> {
        ensure(coeff_a > 0.0, || format!("coeff_a must be > 0, got {coeff_a}"))?;
        ensure(r_crit > 0.0, || format!("r_crit must be > 0, got {r_crit}"))?;
        Ok(Self { coeff_a, r_crit })
    }
}

/// Cross section in nm² for a cluster of radius `r_cluster` (nm) below R_c.
pub fn ionization_cross_section(r_cluster: f64, m: &CrossSectionModel) -> Result<f64> {
    if r_cluster >= m.r_crit || r_cluster.is_nan() {
        return Err(Error::Domain(format!(
            "cluster radius {r_cluster} nm is not below the critical radius {} nm",
            m.r_crit
        )));
    }
    Ok(m.coeff_a / (m.r_crit - r_cluster))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Collimation {
    /// σ‖J‖ in 1/s.
    pub drain_rate: f64,
    /// Whether σ‖J‖τ > 1 (strict).
    pub collimates: bool,
}

/// Square-norm drain rate through cross section `sigma` (mm²) in flux `flux`
/// (1/(mm²·s)), and whether it empties the channel within cluster lifetime `tau` (s).
pub fn collimation_criterion(sigma: f64, flux: f64, tau: f64) -> Result<Collimation> {
    if !(sigma >= 0.0 && flux >= 0.0 && tau >= 0.0) {
        return Err(Error::Domain(format!(
            "sigma, flux and tau must be >= 0, got ({sigma}, {flux}, {tau})"
        )));
    }
    let drain_rate = sigma * flux;
    Ok(Collimation {
        drain_rate,
        collimates: drain_rate * tau > 1.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollimationCone {
    /// de Broglie wavelength (m).
    pub wavelength: f64,
    /// Diffraction opening angle (rad).
    pub opening_angle: f64,
}

/// Nonrelativistic de Broglie wavelength of a particle with rest energy
/// `mass_energy` and kinetic energy `kinetic_energy` (both MeV), and the
/// opening angle of the beam leaving an aperture of `aperture` metres.
pub fn collimation_cone(mass_energy: f64, kinetic_energy: f64, aperture: f64) -> Result<CollimationCone> {
    if !(mass_energy > 0.0 && kinetic_energy > 0.0 && aperture > 0.0) {
        return Err(Error::Domain(
            "mass energy, kinetic energy and aperture must all be > 0".into(),
        ));
    }
    let wavelength = HBAR_C_MEV_M / (2.0 * mass_energy * kinetic_energy).sqrt();
    Ok(CollimationCone {
        wavelength,
        opening_angle: wavelength / aperture,
    })
}
