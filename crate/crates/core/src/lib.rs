//! Cloud-chamber track-initiation modelling and Geiger window flux models.
//!
//! * [`physics`]: Gamow-state wavefunction, square-norm flux, cluster
//!   polarization energy, critical radius and the singular cross section.
//! * [`chamber`]: Born-rule track-start density over a chamber, a seeded
//!   sampler, and the planar-radius model CDF.
//! * [`empirics`]: ingestion of measured track starts and empirical CDFs.
//! * [`fitting`]: count-scale, geometry and cutoff fits.
//! * [`geiger`]: window flux models against source–window gap.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod chamber;
pub mod empirics;
pub mod error;
pub mod fitting;
pub mod geiger;
pub mod optimize;
pub mod physics;
pub mod plot;
pub mod quadrature;

pub use chamber::{
    model_cdf, model_cdf_truncated, planar_radius, sample_track_starts, sample_track_starts_truncated, track_density,
    ChamberGeometry, ChamberShape, ScaleParams, TrackStart,
};
pub use empirics::{cdf_distance, empirical_cdf, ingest_tracks, EmpiricalCdf, GridCdf, Metric, TrackRecord};
pub use error::{Error, Result};
pub use fitting::{
    fit_count_scale, fit_cutoff, fit_parameters, fitted_geometry, CutoffFit, FitConfig, FitParam, FitResult,
};
pub use geiger::{
    fit_stopping_equiv, flux, normalized_curves, source_averaged_flux, theta_limit, GeigerGeometry, ModelKind,
};
pub use physics::{
    collimation_cone, collimation_criterion, critical_radius, eval_amplitude, flux_magnitude, ionization_cross_section,
    polarization_energy, total_square_norm, ClusterModel, CrossSectionModel, FluxMode, GamowParams,
};
