//! Physical constants and experiment parameters of the trapped-ion setup.
//!
//! Angular frequencies are in rad/s, fields in pT, positions in µm.

use std::f64::consts::PI;

/// Zeeman coupling of the metastable manifold, rad s⁻¹ pT⁻¹.
pub const KAPPA: f64 = 2.0 * PI * 0.0168;

/// Ramsey interrogation time, s.
pub const INTERROGATION_TIME: f64 = 0.08;

/// Distance between neighboring ions, µm.
pub const ION_SPACING: f64 = 4.9;

/// Lifetime of the metastable D5/2 manifold, s.
pub const D52_LIFETIME: f64 = 1.045;

/// Bohr magneton over Planck's constant, Hz/pT.
pub const BOHR_MAGNETON_HZ_PER_PT: f64 = 0.013996;

/// Landé factor of the D5/2 manifold.
pub const LANDE_D52: f64 = 1.2;

/// Geometric correction of the AC-Stark calibration.
pub const STARK_CORRECTION: f64 = 0.979;

/// Detuning of the AC-Stark beam, rad/s.
pub const STARK_DETUNING: f64 = -2.0 * PI * 700e3;

/// Rabi frequencies of the AC-Stark calibration, rad/s.
pub const STARK_RABI_FREQUENCIES: [f64; 6] = [
    2.0 * PI * 2.21e3,
    2.0 * PI * 3.39e3,
    2.0 * PI * 4.20e3,
    2.0 * PI * 4.67e3,
    2.0 * PI * 5.24e3,
    2.0 * PI * 5.92e3,
];

/// Calibrated quadratic field strengths matching [`STARK_RABI_FREQUENCIES`], pT/µm².
pub const STARK_CALIBRATED_FIELDS: [f64; 6] = [2.1, 5.0, 7.6, 9.5, 11.9, 15.2];

/// Quadratic signals of the estimation experiment, pT/µm².
pub const EXPERIMENT_SIGNALS: [f64; 7] = [0.0, 2.1, 4.7, 7.6, 9.5, 11.9, 15.2];

/// Parity amplitude reached by the entangled protocol.
pub const AMPLITUDE_SWD: f64 = 0.45;

/// Parity amplitude reached by the separable protocol.
pub const AMPLITUDE_SEPARABLE: f64 = 0.146;

/// Ideal separable amplitude after overwhelming noise.
pub const AMPLITUDE_SEPARABLE_IDEAL: f64 = 0.25;

/// Parity phase offsets fitted for the two protocols, rad.
pub const PHASE_OFFSET_SWD: f64 = -0.18;
pub const PHASE_OFFSET_SEPARABLE: f64 = -0.19;

/// Shots per parity estimate.
pub const SHOTS_PER_ESTIMATE: usize = 72;

/// Half-width of the analysis-phase window around π/2, rad.
pub const PHASE_WINDOW: f64 = 0.73;

/// Number of points and upper end of the analysis-phase scan.
pub const PHASE_GRID_POINTS: usize = 60;
pub const PHASE_GRID_END: f64 = 1.6 * PI;

/// Error of a single π pulse.
pub const PI_PULSE_ERROR: f64 = 0.011;

/// Per-ion addressing error of the mapping pulses.
pub const ADDRESSING_ERROR: [f64; 3] = [0.040, 0.02, 0.040];

/// Signal frequency of the quadratic field for three sensors at spacing `d`:
/// the spectral range `2 κ t d²` of the protected subspace.
pub fn omega(kappa: f64, t: f64, d: f64) -> f64 {
    2.0 * kappa * t * d * d
}

/// [`omega`] with the experiment's constants.
pub fn experiment_omega() -> f64 {
    omega(KAPPA, INTERROGATION_TIME, ION_SPACING)
}

/// The analysis-phase grid, endpoints included.
pub fn phase_grid(points: usize, end: f64) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..points)
            .map(|i| end * i as f64 / (points - 1) as f64)
            .collect(),
    }
}
