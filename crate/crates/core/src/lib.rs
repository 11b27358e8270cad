//! Scattering-matrix simulator for a polarization-independent, OAM-preserving
//! tunable beam splitter (TBS) and the benches used to characterize it: the
//! split-ratio tuning bench, the OAM process-tomography bench and a Sagnac
//! interferometer built around the splitter.
//!
//! Everything lives on a finite basis `port ⊗ {H, V} ⊗ l ∈ [-L, L]`. Optical
//! elements are complex matrices on that basis, circuits are products of
//! elements, and the observables are port intensities fed into the figures of
//! merit in [`metrics`].

pub mod circuits;
pub mod elements;
pub mod error;
pub mod metrics;
pub mod mode_space;
pub mod sweeps;

pub use circuits::{SagnacConfig, TbsConfig};
pub use elements::ImperfectionParams;
pub use error::{Error, Result};
pub use metrics::{DbValue, MetricsReport};
pub use mode_space::{FieldState, ModeIndex, ModeSpace, Polarization, ScatteringOperator};

pub use num_complex::Complex64;
