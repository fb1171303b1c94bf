//! Periodic traveling waves of the generalized Zakharov-Kuznetsov equation
//! `u_t + u^p u_x + (Δu)_x = 0` and their transverse spectral stability.
//!
//! Every solver is generic over the floating point type ([`Real`], `f32` or
//! `f64`); the aliases below fix it to `f64`.

// `!(x < tol)` is deliberate: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fourier;
pub mod index;
pub mod instability;
pub mod io;
pub mod quadrature;
pub mod scalar;
pub mod spectral;
pub mod wave;

pub use error::{Error, Result};
pub use index::{index_quantity, threshold_scan, IndexReport, ThresholdScan};
pub use instability::{find_k0, verdict, GrowthCurve, InstabilityVerdict, Verdict, VerdictSettings};
pub use scalar::Real;
pub use spectral::{spectrum, Linearization, SpectralOperator, SpectrumReport};
pub use wave::{solve_wave, Branch, PeriodicWave, WaveParams, WaveSolver};

/// Double-precision wave.
pub type Wave = wave::PeriodicWave<f64>;
/// Double-precision linearization.
pub type Linearized = spectral::Linearization<f64>;
/// Double-precision spectrum.
pub type Spectrum = spectral::SpectrumReport<f64>;
/// Double-precision index report.
pub type Index = index::IndexReport<f64>;
/// Double-precision growth curve.
pub type Growth = instability::GrowthCurve<f64>;
/// Double-precision verdict.
pub type Analysis = instability::InstabilityVerdict<f64>;
