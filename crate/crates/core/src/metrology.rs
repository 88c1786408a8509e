//! Fisher information, the symmetric logarithmic derivative, Cramér-Rao
//! bounds and the parity readout model.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{self, CMatrix, ZERO};
use crate::statespace::{variance, DensityMatrix, DiagonalGenerator, PureState, SensorLevels};

/// Outcomes at or below this probability count as impossible.
pub const PROBABILITY_FLOOR: f64 = 1e-12;

/// `P(B, φ_r) = A cos(ωB + l φ_r + φ₀)` with `l` sensors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParityModel {
    pub amplitude: f64,
    pub omega: f64,
    pub offset: f64,
    pub sensors: u32,
}

impl ParityModel {
    pub fn new(amplitude: f64, omega: f64, offset: f64) -> Result<Self> {
        let m = Self {
            amplitude,
            omega,
            offset,
            sensors: 3,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.amplitude) {
            return Err(invalid("amplitude", "must lie in [0, 1]"));
        }
        if !(self.omega.is_finite() && self.omega != 0.0) {
            return Err(invalid("omega", "must be finite and nonzero"));
        }
        if !self.offset.is_finite() {
            return Err(invalid("offset", "must be finite"));
        }
        Ok(())
    }

    pub fn with_sensors(mut self, sensors: u32) -> Self {
        self.sensors = sensors;
        self
    }

    /// `Φ = ωB + l φ_r + φ₀`
    pub fn total_phase(&self, b: f64, phi_r: f64) -> f64 {
        self.omega * b + f64::from(self.sensors) * phi_r + self.offset
    }

    pub fn parity(&self, b: f64, phi_r: f64) -> f64 {
        self.amplitude * self.total_phase(b, phi_r).cos()
    }

    /// `(p₊, p₋) = ((1 + P)/2, (1 − P)/2)`
    pub fn probabilities(&self, b: f64, phi_r: f64) -> [f64; 2] {
        let p = self.parity(b, phi_r);
        [0.5 * (1.0 + p), 0.5 * (1.0 - p)]
    }

    /// Derivatives of the outcome probabilities with respect to `B`.
    pub fn probability_derivatives(&self, b: f64, phi_r: f64) -> [f64; 2] {
        let d = -0.5 * self.amplitude * self.omega * self.total_phase(b, phi_r).sin();
        [d, -d]
    }

    /// Classical Fisher information of one parity shot.
    pub fn cfi(&self, b: f64, phi_r: f64) -> f64 {
        parity_cfi(self.amplitude, self.omega, self.total_phase(b, phi_r))
    }
}

/// `A²ω² sin²Φ / (1 − A² cos²Φ)`, zero where the fringe is flat.
pub fn parity_cfi(amplitude: f64, omega: f64, phase: f64) -> f64 {
    let s = phase.sin();
    if s == 0.0 {
        return 0.0;
    }
    let a2 = amplitude * amplitude;
    let c = phase.cos();
    a2 * omega * omega * s * s / (1.0 - a2 * c * c)
}

/// `4 Var(G)`
pub fn qfi_pure(psi: &PureState, g: &DiagonalGenerator) -> Result<f64> {
    Ok(4.0 * variance(g, psi)?)
}

/// `∂ρ = −i[G, ρ]` for a phase imprinted by `exp(−iBG)`.
pub fn commutator_derivative(g: &DiagonalGenerator, rho: &DensityMatrix) -> Result<CMatrix> {
    if g.dim() != rho.dim() {
        return Err(Error::DimensionMismatch {
            expected: g.dim(),
            found: rho.dim(),
        });
    }
    let v = g.values();
    let m = rho.matrix();
    Ok(CMatrix::from_fn(rho.dim(), rho.dim(), |j, k| {
        Complex64::new(0.0, -(v[j] - v[k])) * m[(j, k)]
    }))
}

/// Symmetric logarithmic derivative and quantum Fisher information `tr(ρL²)`.
pub fn sld_and_qfi(rho: &DensityMatrix, drho: &CMatrix) -> Result<(CMatrix, f64)> {
    if drho.shape() != (rho.dim(), rho.dim()) {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            found: drho.nrows(),
        });
    }
    let herm = linalg::hermiticity_error(drho);
    if herm > 1e-10 * drho.camax().max(1.0) {
        return Err(Error::NotHermitian(herm));
    }
    let (lambda, u) = linalg::hermitian_eigen(rho.matrix());
    let d_eig = u.adjoint() * drho * &u;
    let cutoff = 1e-12 * rho.trace().abs().max(1.0);
    let n = rho.dim();
    let mut l_eig = CMatrix::zeros(n, n);
    let mut f = 0.0;
    for j in 0..n {
        for k in 0..n {
            let s = lambda[j] + lambda[k];
            if s > cutoff {
                l_eig[(j, k)] = d_eig[(j, k)] * (2.0 / s);
                f += 2.0 * d_eig[(j, k)].norm_sqr() / s;
            }
        }
    }
    let l = &u * l_eig * u.adjoint();
    Ok((l, f))
}

/// `Σ dp²/p` over outcomes with nonnegligible probability.
pub fn cfi(p: &[f64], dp: &[f64]) -> Result<f64> {
    if p.len() != dp.len() {
        return Err(Error::DimensionMismatch {
            expected: p.len(),
            found: dp.len(),
        });
    }
    let mut f = 0.0;
    for (outcome, (&pi, &di)) in p.iter().zip(dp).enumerate() {
        if pi <= PROBABILITY_FLOOR {
            if di.abs() > PROBABILITY_FLOOR {
                return Err(Error::SingularModel { outcome });
            }
        } else {
            f += di * di / pi;
        }
    }
    Ok(f)
}

/// Normalized RMSE bound `1/√F`; the shot number cancels under the √N normalization.
pub fn rmse_bound(fisher: f64) -> Result<f64> {
    if !(fisher > 0.0) {
        return Err(invalid("fisher", "Fisher information must be positive"));
    }
    Ok(1.0 / fisher.sqrt())
}

/// `10 log₁₀(rmse_ref / rmse_new)`
pub fn improvement_db(rmse_ref: f64, rmse_new: f64) -> Result<f64> {
    if !(rmse_ref > 0.0 && rmse_new > 0.0) {
        return Err(invalid("rmse", "both RMSE values must be positive"));
    }
    Ok(10.0 * (rmse_ref / rmse_new).log10())
}

/// QFI of the product state `⊗(α_i|s_i⟩ + β_i|−s_i⟩)` after overwhelming noise,
/// where only the pair `{s, −s}` stays coherent: `4 p(s) p(−s) Δ² / (p(s) + p(−s))`.
pub fn product_state_qfi(p_plus: f64, p_minus: f64, delta: f64) -> f64 {
    let w = p_plus + p_minus;
    if w <= 0.0 {
        return 0.0;
    }
    4.0 * p_plus * p_minus * delta * delta / w
}

/// Parity operator `⊗σ_φ` on the qubits spanned, per sensor, by the levels of
/// `lo` (qubit `|0⟩`) and `hi` (qubit `|1⟩`), with `σ_φ = cos φ σx + sin φ σy`.
/// Basis states outside this qubit subspace are mapped to zero.
pub fn parity_operator(levels: &SensorLevels, hi: usize, lo: usize, phi: f64) -> Result<CMatrix> {
    let l = levels.sensor_count();
    let (h, o) = (levels.label(hi), levels.label(lo));
    if h.labels().iter().zip(o.labels()).any(|(a, b)| a == b) {
        return Err(invalid("pair", "the two states must differ on every sensor"));
    }
    let embed = |bits: usize| -> usize {
        let labels: Vec<f64> = (0..l)
            .map(|site| {
                if (bits >> (l - 1 - site)) & 1 == 1 {
                    h.labels()[site]
                } else {
                    o.labels()[site]
                }
            })
            .collect();
        levels.index_of(&labels).expect("labels taken from basis states")
    };
    let up = Complex64::from_polar(1.0, phi);
    let mut op = CMatrix::zeros(levels.dim(), levels.dim());
    for row in 0..(1usize << l) {
        // ⊗σ_φ flips every qubit
        let col = !row & ((1 << l) - 1);
        let mut amp = Complex64::new(1.0, 0.0);
        for site in 0..l {
            let bit = (row >> (l - 1 - site)) & 1;
            // ⟨1|σ_φ|0⟩ = e^{iφ}, ⟨0|σ_φ|1⟩ = e^{−iφ}
            amp *= if bit == 1 { up } else { up.conj() };
        }
        op[(embed(row), embed(col))] = amp;
    }
    Ok(op)
}

/// Parity expectation `tr(ρ ⊗σ_φ)` for the readout of [`parity_operator`].
pub fn parity_expectation(rho: &DensityMatrix, op: &CMatrix) -> f64 {
    let mut acc = ZERO;
    let m = rho.matrix();
    for i in 0..rho.dim() {
        for j in 0..rho.dim() {
            if op[(j, i)] != ZERO {
                acc += m[(i, j)] * op[(j, i)];
            }
        }
    }
    acc.re
}
