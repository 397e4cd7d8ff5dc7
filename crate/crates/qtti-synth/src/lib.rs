//! Seeded synthetic fields and field statistics on quantized tensor trains.
//!
//! The generators in [`noise`] and [`cascade`] assemble stochastic grid
//! functions scale by scale in compressed form; every one of them agrees
//! point-for-point with a classical dense construction replaying the same
//! random draws. [`metrics`] holds the measurement side: sampled errors,
//! energy spectra, structure-function flatness, rank accounting, and
//! convergence-order fits.

pub mod cascade;
pub mod metrics;
pub mod noise;
pub mod stream;

pub use cascade::{
    divergence_cascade, divergence_cascade_range, random_tucker_stream, turbulence_cascade,
    turbulence_cascade_range, CascadeLayout, CascadeSpec,
};
pub use metrics::{
    convergence_study, energy_spectrum, fit_loglog_slope, flatness, rank_stats, rmse_sampled,
    spectrum_slope, IncrementKind, MetricReport, RankStats,
};
pub use noise::{
    fractal_tt, midpoint_displacement_tt, perlin_gradient_tables, perlin_tt, random_qtt,
    value_noise_tt, NoiseSpec,
};
pub use stream::{derive_seed, labeled};
