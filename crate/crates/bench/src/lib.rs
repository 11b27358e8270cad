//! Fixtures shared by the benchmarks in `benches/`.

use std::sync::Arc;

use tbs_core::{Complex64, FieldState, ModeIndex, ModeSpace, Polarization};

/// `|h⟩`, `|v⟩` and `n` elliptical states on `port`, spread deterministically
/// over the Poincaré sphere.
pub fn tuning_inputs(space: &Arc<ModeSpace>, port: u32, n: usize) -> Vec<FieldState> {
    let mut states = vec![
        FieldState::basis(space, ModeIndex::new(port, Polarization::H, 0)).expect("port in space"),
        FieldState::basis(space, ModeIndex::new(port, Polarization::V, 0)).expect("port in space"),
    ];
    for k in 0..n {
        let t = (k as f64 + 0.5) / n as f64;
        let (chi, psi) = (
            std::f64::consts::FRAC_PI_2 * t,
            2.0 * std::f64::consts::PI * t * 7.0,
        );
        let a = Complex64::from(chi.cos());
        let b = Complex64::from_polar(chi.sin(), psi);
        states.push(FieldState::polarized(space, port, 0, a, b).expect("normalizable"));
    }
    states
}
