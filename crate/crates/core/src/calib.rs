//! Calculators for engineering fractional sensitivities and calibrating
//! the laser-induced quadratic field.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::constants::{BOHR_MAGNETON_HZ_PER_PT, LANDE_D52, STARK_CORRECTION, STARK_DETUNING};
use crate::error::{invalid, Result};

/// A qubit dressed by a drive of Rabi frequency `Ω` at detuning `Δ` (rad/s).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DressedSensor {
    pub detuning: f64,
    pub rabi: f64,
}

impl DressedSensor {
    pub fn new(detuning: f64, rabi: f64) -> Result<Self> {
        if !detuning.is_finite() || !rabi.is_finite() {
            return Err(invalid("dressed sensor", "non-finite frequency"));
        }
        if detuning == 0.0 && rabi == 0.0 {
            return Err(invalid("dressed sensor", "detuning and Rabi frequency are both zero"));
        }
        Ok(Self { detuning, rabi })
    }

    /// Sensitivities `∓Δ / (2√(Δ² + Ω²))` of the two dressed states.
    pub fn sensitivities(&self) -> (f64, f64) {
        let s = dressed_magnitude(self.detuning, self.rabi);
        (-s, s)
    }

    /// `(δΔ / (Ω² + Δ²))²` for a field-induced detuning change `δ`; the
    /// first-order picture holds while this is small.
    pub fn validity(&self, delta_shift: f64) -> f64 {
        (delta_shift * self.detuning / (self.rabi.powi(2) + self.detuning.powi(2))).powi(2)
    }
}

fn dressed_magnitude(detuning: f64, rabi: f64) -> f64 {
    detuning / (2.0 * detuning.hypot(rabi))
}

/// Signed dressed sensitivity `Δ / (2√(Δ² + Ω²))`.
pub fn dressed_sensitivity(detuning: f64, rabi: f64) -> Result<f64> {
    let d = DressedSensor::new(detuning, rabi)?;
    Ok(dressed_magnitude(d.detuning, d.rabi))
}

/// Sign flips of the accumulated phase during one sensing window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EchoSchedule {
    pub reduction: f64,
    pub sensing_time: f64,
    pub segments: usize,
    /// Strictly increasing flip times in `(0, t_s]`.
    pub echo_times: Vec<f64>,
}

impl EchoSchedule {
    pub fn segment_time(&self) -> f64 {
        self.sensing_time / self.segments as f64
    }

    /// `|∫ σ(t) dt| / t_s` with `σ = ±1` flipped at every echo.
    pub fn effective_ratio(&self) -> f64 {
        let mut sign = 1.0;
        let mut last = 0.0;
        let mut total = 0.0;
        for &t in &self.echo_times {
            total += sign * (t - last);
            sign = -sign;
            last = t;
        }
        total += sign * (self.sensing_time - last);
        total.abs() / self.sensing_time
    }
}

/// Each of the `k` segments of length `t_echo = t_s/k` flips at
/// `(1 − F)·t_echo/2` and at `t_echo`, which leaves a fraction `F` of the
/// static-field phase. At `F = 1` no echoes are applied.
pub fn echo_schedule(reduction: f64, sensing_time: f64, segments: usize) -> Result<EchoSchedule> {
    if !(reduction > 0.0 && reduction <= 1.0) {
        return Err(invalid("reduction", "F_red must lie in (0, 1]"));
    }
    if !(sensing_time > 0.0 && sensing_time.is_finite()) {
        return Err(invalid("sensing_time", "must be positive"));
    }
    if segments == 0 {
        return Err(invalid("segments", "k must be ≥ 1"));
    }
    let t_echo = sensing_time / segments as f64;
    let echo_times = if reduction == 1.0 {
        Vec::new()
    } else {
        (0..segments)
            .flat_map(|j| {
                let start = j as f64 * t_echo;
                [start + 0.5 * (1.0 - reduction) * t_echo, start + t_echo]
            })
            .collect()
    };
    Ok(EchoSchedule {
        reduction,
        sensing_time,
        segments,
        echo_times,
    })
}

/// Inputs of the AC-Stark calibration; angular frequencies in rad/s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StarkSetup {
    pub rabi: f64,
    pub detuning: f64,
    /// Correction for Stark shifts from the other dipole transitions.
    pub correction: f64,
    /// Ion spacing, µm.
    pub spacing: f64,
    pub lande: f64,
}

impl StarkSetup {
    pub fn experiment(rabi: f64) -> Self {
        Self {
            rabi,
            detuning: STARK_DETUNING,
            correction: STARK_CORRECTION,
            spacing: crate::constants::ION_SPACING,
            lande: LANDE_D52,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StarkCalibration {
    /// Bare shift `Ω²/(4Δ_q)` of the addressed level, Hz.
    pub stark_shift_hz: f64,
    /// Shift including the correction factor, Hz.
    pub corrected_shift_hz: f64,
    /// Equivalent field offset of the central ion, `B^q d²/2`, pT.
    pub central_offset_pt: f64,
    /// Quadratic field strength, pT/µm².
    pub quadratic_field: f64,
}

/// `B^q = C Ω² / (8 Δ_q μ_B g_D d²)` with `μ_B/h` in Hz/pT.
pub fn ac_stark_quadratic(setup: &StarkSetup) -> Result<StarkCalibration> {
    if setup.detuning == 0.0 || !setup.detuning.is_finite() {
        return Err(invalid("detuning", "Δ_q must be nonzero"));
    }
    if !(setup.spacing > 0.0) || setup.lande == 0.0 {
        return Err(invalid("stark setup", "spacing and Landé factor must be nonzero"));
    }
    let stark_shift_hz = setup.rabi.powi(2) / (4.0 * setup.detuning) / (2.0 * PI);
    let corrected_shift_hz = setup.correction * stark_shift_hz;
    let central_offset_pt = corrected_shift_hz / (4.0 * BOHR_MAGNETON_HZ_PER_PT * setup.lande);
    Ok(StarkCalibration {
        stark_shift_hz,
        corrected_shift_hz,
        central_offset_pt,
        quadratic_field: 2.0 * central_offset_pt / setup.spacing.powi(2),
    })
}
