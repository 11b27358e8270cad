use std::sync::Arc;

use nalgebra::DVector;
use num_complex::Complex64;

use super::{ModeIndex, ModeSpace, Polarization};
use crate::error::{Error, Result};

/// Classical coherent field amplitudes over a [`ModeSpace`].
#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    space: Arc<ModeSpace>,
    amplitudes: DVector<Complex64>,
}

impl FieldState {
    pub fn vacuum(space: &Arc<ModeSpace>) -> Self {
        FieldState {
            space: Arc::clone(space),
            amplitudes: DVector::zeros(space.dimension()),
        }
    }

    pub fn from_amplitudes(space: &Arc<ModeSpace>, amplitudes: DVector<Complex64>) -> Result<Self> {
        if amplitudes.len() != space.dimension() {
            return Err(Error::Index(format!(
                "amplitude vector has length {}, space dimension is {}",
                amplitudes.len(),
                space.dimension()
            )));
        }
        Ok(FieldState {
            space: Arc::clone(space),
            amplitudes,
        })
    }

    /// Unit-intensity state in a single basis mode.
    pub fn basis(space: &Arc<ModeSpace>, mode: ModeIndex) -> Result<Self> {
        let mut s = Self::vacuum(space);
        s.amplitudes[space.flatten(mode)?] = Complex64::new(1.0, 0.0);
        Ok(s)
    }

    /// `α|h⊗l, port⟩ + β|v⊗l, port⟩`, normalized so that |α|² + |β|² = 1.
    pub fn polarized(
        space: &Arc<ModeSpace>,
        port: u32,
        l: i32,
        alpha: Complex64,
        beta: Complex64,
    ) -> Result<Self> {
        let norm = (alpha.norm_sqr() + beta.norm_sqr()).sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::Domain(
                "polarization amplitudes must not both vanish".into(),
            ));
        }
        let mut s = Self::vacuum(space);
        s.amplitudes[space.flatten(ModeIndex::new(port, Polarization::H, l))?] = alpha / norm;
        s.amplitudes[space.flatten(ModeIndex::new(port, Polarization::V, l))?] = beta / norm;
        Ok(s)
    }

    pub fn space(&self) -> &Arc<ModeSpace> {
        &self.space
    }

    pub fn amplitudes(&self) -> &DVector<Complex64> {
        &self.amplitudes
    }

    pub fn amplitude(&self, mode: ModeIndex) -> Result<Complex64> {
        Ok(self.amplitudes[self.space.flatten(mode)?])
    }

    pub fn total_intensity(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Power summed over every polarization and OAM charge at `port`.
    pub fn port_intensity(&self, port: u32) -> Result<f64> {
        let range = self.space.port_indices(port)?;
        Ok(self
            .amplitudes
            .rows_range(range)
            .iter()
            .map(|a| a.norm_sqr())
            .sum())
    }

    /// Power at `port` restricted to OAM charge `l`, both polarizations.
    pub fn mode_intensity(&self, port: u32, l: i32) -> Result<f64> {
        Polarization::BOTH.iter().try_fold(0.0, |acc, &pol| {
            Ok(acc + self.amplitude(ModeIndex::new(port, pol, l))?.norm_sqr())
        })
    }
}
