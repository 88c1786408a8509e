//! Noise channels acting on density matrices over the sensor basis.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dfs::DfsCensus;
use crate::error::{invalid, Error, Result};
use crate::fields::{FieldComponent, SensorLayout};
use crate::linalg::{self, CMatrix, ONE, ZERO};
use crate::statespace::{DensityMatrix, SensorLevels};

fn check_dim(rho: &DensityMatrix, expected: usize) -> Result<()> {
    if rho.dim() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            found: rho.dim(),
        });
    }
    Ok(())
}

/// Fully dephases every coherence that is not inside a single DFS.
pub fn overwhelming_dephasing(rho: &DensityMatrix, census: &DfsCensus) -> Result<DensityMatrix> {
    check_dim(rho, census.dim)?;
    let labels = census.labels();
    let m = rho.matrix();
    let out = CMatrix::from_fn(rho.dim(), rho.dim(), |i, j| {
        if i == j || (labels[i].is_some() && labels[i] == labels[j]) {
            m[(i, j)]
        } else {
            ZERO
        }
    });
    Ok(DensityMatrix::from_matrix_unchecked(out))
}

/// Weight `tr(Π ρ)` of each DFS, followed by the weight of the remainder.
pub fn subspace_weights(rho: &DensityMatrix, census: &DfsCensus) -> Result<(Vec<f64>, f64)> {
    check_dim(rho, census.dim)?;
    let pops = rho.populations();
    let weights = census
        .subspaces
        .iter()
        .map(|d| d.members().iter().map(|&i| pops[i]).sum())
        .collect();
    let rest = census.remainder.iter().map(|&i| pops[i]).sum();
    Ok((weights, rest))
}

/// Shot-to-shot distribution of one integrated noise field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseDistribution {
    Gaussian { sigma: f64 },
    Uniform { half_width: f64 },
    Overwhelming,
}

impl NoiseDistribution {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Gaussian { sigma } if !(sigma >= 0.0 && sigma.is_finite()) => {
                Err(invalid("sigma", "must be finite and nonnegative"))
            }
            Self::Uniform { half_width } if !(half_width >= 0.0 && half_width.is_finite()) => {
                Err(invalid("half_width", "must be finite and nonnegative"))
            }
            _ => Ok(()),
        }
    }

    /// Characteristic function `E[exp(i u B̄)]` (real for these symmetric laws).
    pub fn characteristic(&self, u: f64) -> f64 {
        match *self {
            Self::Gaussian { sigma } => (-0.5 * sigma * sigma * u * u).exp(),
            Self::Uniform { half_width } => {
                let x = half_width * u;
                if x.abs() < 1e-8 {
                    1.0 - x * x / 6.0
                } else {
                    x.sin() / x
                }
            }
            Self::Overwhelming => {
                if u.abs() <= 1e-12 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// One distribution per noise component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegratedNoiseModel {
    pub components: Vec<NoiseDistribution>,
}

impl IntegratedNoiseModel {
    pub fn new(components: Vec<NoiseDistribution>) -> Result<Self> {
        for c in &components {
            c.validate()?;
        }
        Ok(Self { components })
    }

    pub fn overwhelming(count: usize) -> Self {
        Self {
            components: vec![NoiseDistribution::Overwhelming; count],
        }
    }
}

/// Averages the noise phases over the integrated-field distributions:
/// element `(s, s′)` is scaled by `Π_j χ_j(κ (s − s′)·f̃^j)`.
pub fn finite_dephasing(
    rho: &DensityMatrix,
    levels: &SensorLevels,
    layout: &SensorLayout,
    noise: &[FieldComponent],
    model: &IntegratedNoiseModel,
    kappa: f64,
) -> Result<DensityMatrix> {
    check_dim(rho, levels.dim())?;
    if model.components.len() != noise.len() {
        return Err(Error::DimensionMismatch {
            expected: noise.len(),
            found: model.components.len(),
        });
    }
    for c in &model.components {
        c.validate()?;
    }
    let rows = noise
        .iter()
        .map(|c| c.shape_vector(layout))
        .collect::<Result<Vec<_>>>()?;
    let energies: Vec<Vec<f64>> = levels
        .basis()
        .iter()
        .map(|b| rows.iter().map(|r| b.dot(r)).collect())
        .collect();
    let m = rho.matrix();
    let out = CMatrix::from_fn(rho.dim(), rho.dim(), |i, j| {
        let factor: f64 = model
            .components
            .iter()
            .enumerate()
            .map(|(k, dist)| dist.characteristic(kappa * (energies[i][k] - energies[j][k])))
            .product();
        m[(i, j)] * factor
    });
    Ok(DensityMatrix::from_matrix_unchecked(out))
}

/// Decay probability `1 − exp(−t/τ)`.
pub fn damping_probability(t: f64, tau: f64) -> Result<f64> {
    if !(tau > 0.0) {
        return Err(invalid("tau", "lifetime must be positive"));
    }
    if !(t >= 0.0) {
        return Err(invalid("t", "time must be nonnegative"));
    }
    Ok(-(-t / tau).exp_m1())
}

/// Qutrit level order used by the decay model.
pub const QUTRIT_E1: usize = 0;
pub const QUTRIT_E2: usize = 1;
pub const QUTRIT_G: usize = 2;

/// Kraus operators of qutrit amplitude damping in the order `(e1, e2, g)`:
/// `e2 → e1` and `e1 → g`, each with probability `p`.
pub fn qutrit_damping_kraus(p: f64) -> [CMatrix; 3] {
    let keep = Complex64::new((1.0 - p).sqrt(), 0.0);
    let jump = Complex64::new(p.sqrt(), 0.0);
    let mut k0 = CMatrix::zeros(3, 3);
    k0[(0, 0)] = keep;
    k0[(1, 1)] = keep;
    k0[(2, 2)] = ONE;
    let mut k1 = CMatrix::zeros(3, 3);
    k1[(QUTRIT_E1, QUTRIT_E2)] = jump;
    let mut k2 = CMatrix::zeros(3, 3);
    k2[(QUTRIT_G, QUTRIT_E1)] = jump;
    [k0, k1, k2]
}

/// Independent amplitude damping of three qutrits for a time `t`.
pub fn amplitude_damping_qutrit(rho: &DensityMatrix, t: f64, tau: f64) -> Result<DensityMatrix> {
    check_dim(rho, 27)?;
    let p = damping_probability(t, tau)?;
    let kraus = qutrit_damping_kraus(p);
    let mut m = rho.matrix().clone();
    for site in 0..3 {
        m = linalg::apply_local_kraus(&m, &[3, 3, 3], site, &kraus);
    }
    Ok(DensityMatrix::from_matrix_unchecked(m))
}

/// Embeds a three-qubit state into three qutrits, qubit `|0⟩ → e1`, `|1⟩ → e2`.
pub fn embed_qubits_in_excited(rho: &DensityMatrix) -> Result<DensityMatrix> {
    check_dim(rho, 8)?;
    let map = |q: usize| {
        (0..3).fold(0, |acc, site| {
            let bit = (q >> (2 - site)) & 1;
            acc * 3 + if bit == 0 { QUTRIT_E1 } else { QUTRIT_E2 }
        })
    };
    let mut out = CMatrix::zeros(27, 27);
    for i in 0..8 {
        for j in 0..8 {
            out[(map(i), map(j))] = rho.element(i, j);
        }
    }
    Ok(DensityMatrix::from_matrix_unchecked(out))
}

/// Ideal π pulse swapping `g` and `e1` on every qutrit.
pub fn pi_pulse_ground_e1(rho: &DensityMatrix) -> Result<DensityMatrix> {
    check_dim(rho, 27)?;
    let mut x = CMatrix::zeros(3, 3);
    x[(QUTRIT_G, QUTRIT_E1)] = ONE;
    x[(QUTRIT_E1, QUTRIT_G)] = ONE;
    x[(QUTRIT_E2, QUTRIT_E2)] = ONE;
    let mut m = rho.matrix().clone();
    for site in 0..3 {
        m = linalg::apply_local_kraus(&m, &[3, 3, 3], site, std::slice::from_ref(&x));
    }
    Ok(DensityMatrix::from_matrix_unchecked(m))
}

/// Basis indices of `|ggg⟩` and `|e2 e2 e2⟩` in the qutrit product basis.
pub fn qutrit_ghz_pair() -> (usize, usize) {
    let idx = |l: usize| l * 9 + l * 3 + l;
    (idx(QUTRIT_G), idx(QUTRIT_E2))
}

/// Decay during sensing: embed, damp, map back with a π pulse and return the
/// nearest-GHZ fidelity in the `g`–`e2` encoding.
pub fn decay_ghz_fidelity(rho_qubits: &DensityMatrix, t: f64, tau: f64) -> Result<f64> {
    let embedded = embed_qubits_in_excited(rho_qubits)?;
    let damped = amplitude_damping_qutrit(&embedded, t, tau)?;
    let mapped = pi_pulse_ground_e1(&damped)?;
    Ok(crate::tomography::ghz_fidelity(&mapped, qutrit_ghz_pair()))
}

/// Probability of a single-qubit error for a π-pulse error and an addressing error.
pub fn combined_error(p_pi: f64, p_addressing: f64) -> f64 {
    1.0 - (1.0 - p_pi) * (1.0 - p_addressing)
}

/// Per-qubit full depolarization `ρ → (1−p_i) ρ + p_i tr_i(ρ) ⊗ I/2`.
pub fn depolarize_independent(rho: &DensityMatrix, p: &[f64]) -> Result<DensityMatrix> {
    let n = p.len();
    check_dim(rho, 1 << n)?;
    if let Some(bad) = p.iter().find(|x| !(0.0..=1.0).contains(*x)) {
        return Err(invalid("p", format!("{bad} is not a probability")));
    }
    let dims = vec![2; n];
    let paulis = pauli_matrices();
    let mut m = rho.matrix().clone();
    for (site, &pi) in p.iter().enumerate() {
        // I/2 replacement equals the uniform Pauli twirl
        let kraus: Vec<CMatrix> = paulis
            .iter()
            .enumerate()
            .map(|(k, s)| {
                let w = if k == 0 { 1.0 - 0.75 * pi } else { 0.25 * pi };
                s.scale(w.sqrt())
            })
            .collect();
        m = linalg::apply_local_kraus(&m, &dims, site, &kraus);
    }
    Ok(DensityMatrix::from_matrix_unchecked(m))
}

/// `I, X, Y, Z`
pub fn pauli_matrices() -> [CMatrix; 4] {
    let i = linalg::I;
    [
        CMatrix::identity(2, 2),
        CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]),
        CMatrix::from_row_slice(2, 2, &[ZERO, -i, i, ZERO]),
        CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE]),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::*;
    use crate::dfs::enumerate_dfs;
    use crate::statespace::{Evolve, PureState};
    use crate::statespace::build_signal_generator;

    fn unit() -> SensorLayout {
        SensorLayout::new(vec![-1.0, 0.0, 1.0]).unwrap()
    }

    fn cl() -> Vec<FieldComponent> {
        vec![FieldComponent::constant(), FieldComponent::linear()]
    }

    fn swd(l: &SensorLevels) -> PureState {
        PureState::ghz(l, &[1.0, -2.0, 1.0], &[-1.0, 2.0, -1.0], 0.0).unwrap()
    }

    #[test]
    fn separable_state_loses_three_quarters() {
        let l = SensorLevels::bold();
        let census = enumerate_dfs(&l, &unit(), &cl()).unwrap();
        let sep = DensityMatrix::from_pure(&PureState::separable_pm(&l, &[1.0, -2.0, 1.0]).unwrap());
        let out = overwhelming_dephasing(&sep, &census).unwrap();
        let (w, rest) = subspace_weights(&out, &census).unwrap();
        assert!((w[0] - 0.25).abs() < 1e-15 && (rest - 0.75).abs() < 1e-15);
        let hi = l.index_of(&[1.0, -2.0, 1.0]).unwrap();
        let lo = l.index_of(&[-1.0, 2.0, -1.0]).unwrap();
        assert!((out.element(hi, lo).norm() - 0.125).abs() < 1e-15);
        // everything else off-diagonal is gone
        let mut off = 0.0;
        for i in 0..8 {
            for j in 0..8 {
                if i != j && !((i == hi && j == lo) || (i == lo && j == hi)) {
                    off += out.element(i, j).norm();
                }
            }
        }
        assert_eq!(off, 0.0);
    }

    #[test]
    fn swd_is_fixed_point() {
        let l = SensorLevels::bold();
        let census = enumerate_dfs(&l, &unit(), &cl()).unwrap();
        let rho = DensityMatrix::from_pure(&swd(&l));
        let out = overwhelming_dephasing(&rho, &census).unwrap();
        assert!((out.matrix() - rho.matrix()).norm() < 1e-15);
    }

    #[test]
    fn constant_noise_keeps_three_blocks() {
        let l = SensorLevels::bold();
        let census = enumerate_dfs(&l, &unit(), &[FieldComponent::constant()]).unwrap();
        let sep = DensityMatrix::from_pure(&PureState::separable_pm(&l, &[1.0, -2.0, 1.0]).unwrap());
        let out = overwhelming_dephasing(&sep, &census).unwrap();
        let nonzero_off = (0..8)
            .flat_map(|i| (0..8).map(move |j| (i, j)))
            .filter(|&(i, j)| i != j && out.element(i, j).norm() > 0.0)
            .count();
        assert_eq!(nonzero_off, 6);
    }

    #[test]
    fn dephasing_is_idempotent() {
        let l = SensorLevels::full_d52(3).unwrap();
        let census = enumerate_dfs(&l, &unit(), &cl()).unwrap();
        let rho = DensityMatrix::maximally_mixed(216);
        let once = overwhelming_dephasing(&rho, &census).unwrap();
        assert_eq!(overwhelming_dephasing(&once, &census).unwrap(), once);
    }

    #[test]
    fn finite_dephasing_limits() {
        let l = SensorLevels::bold();
        let layout = unit();
        let noise = cl();
        let sep = DensityMatrix::from_pure(&PureState::separable_pm(&l, &[1.0, -2.0, 1.0]).unwrap());
        let zero = IntegratedNoiseModel::new(vec![NoiseDistribution::Gaussian { sigma: 0.0 }; 2]).unwrap();
        let same = finite_dephasing(&sep, &l, &layout, &noise, &zero, KAPPA).unwrap();
        assert!((same.matrix() - sep.matrix()).norm() < 1e-15);
        // smallest nonzero energy mismatch is 2; σκ·2 = 30
        let sigma = 15.0 / KAPPA;
        let big = IntegratedNoiseModel::new(vec![NoiseDistribution::Gaussian { sigma }; 2]).unwrap();
        let strong = finite_dephasing(&sep, &l, &layout, &noise, &big, KAPPA).unwrap();
        let census = enumerate_dfs(&l, &layout, &noise).unwrap();
        let limit = overwhelming_dephasing(&sep, &census).unwrap();
        assert!((strong.matrix() - limit.matrix()).camax() < 1e-6);
        let over = finite_dephasing(&sep, &l, &layout, &noise, &IntegratedNoiseModel::overwhelming(2), KAPPA).unwrap();
        assert!((over.matrix() - limit.matrix()).camax() < 1e-15);
    }

    #[test]
    fn uniform_noise_preserves_protected_elements() {
        let l = SensorLevels::bold();
        let rho = DensityMatrix::from_pure(&PureState::separable_pm(&l, &[1.0, -2.0, 1.0]).unwrap());
        let model = IntegratedNoiseModel::new(vec![NoiseDistribution::Uniform { half_width: 40.0 }; 2]).unwrap();
        let out = finite_dephasing(&rho, &l, &unit(), &cl(), &model, KAPPA).unwrap();
        let hi = l.index_of(&[1.0, -2.0, 1.0]).unwrap();
        let lo = l.index_of(&[-1.0, 2.0, -1.0]).unwrap();
        assert_eq!(out.element(hi, lo), rho.element(hi, lo));
        assert!(IntegratedNoiseModel::new(vec![NoiseDistribution::Gaussian { sigma: -1.0 }]).is_err());
    }

    #[test]
    fn finite_dephasing_commutes_with_signal() {
        let l = SensorLevels::bold();
        let layout = SensorLayout::equidistant(3, ION_SPACING).unwrap();
        let g = build_signal_generator(&layout, &FieldComponent::quadratic(), KAPPA, INTERROGATION_TIME, &l).unwrap();
        let rho = DensityMatrix::from_pure(&PureState::separable_pm(&l, &[1.0, -2.0, 1.0]).unwrap());
        let model = IntegratedNoiseModel::new(vec![
            NoiseDistribution::Gaussian { sigma: 3.0 },
            NoiseDistribution::Uniform { half_width: 1.5 },
        ])
        .unwrap();
        let a = finite_dephasing(&rho.evolve(&g, 7.0).unwrap(), &l, &layout, &cl(), &model, KAPPA).unwrap();
        let b = finite_dephasing(&rho, &l, &layout, &cl(), &model, KAPPA).unwrap().evolve(&g, 7.0).unwrap();
        assert!((a.matrix() - b.matrix()).norm() < 1e-12);
    }

    #[test]
    fn damping_probability_value() {
        assert!((damping_probability(0.08, 1.045).unwrap() - 0.07371).abs() < 1e-4);
        assert_eq!(damping_probability(0.0, 1.0).unwrap(), 0.0);
        assert!(damping_probability(1.0, 0.0).is_err());
    }

    #[test]
    fn damping_kraus_complete() {
        let k = qutrit_damping_kraus(0.3);
        let sum: CMatrix = k.iter().map(|m| m.adjoint() * m).sum();
        assert!((sum - CMatrix::identity(3, 3)).norm() < 1e-15);
    }

    #[test]
    fn damping_identity_at_zero_time() {
        let rho = DensityMatrix::maximally_mixed(27);
        let out = amplitude_damping_qutrit(&rho, 0.0, 1.0).unwrap();
        assert!((out.matrix() - rho.matrix()).norm() < 1e-15);
        assert!(amplitude_damping_qutrit(&DensityMatrix::maximally_mixed(8), 0.1, 1.0).is_err());
    }

    #[test]
    fn decay_of_ideal_ghz() {
        let q = SensorLevels::qubits(3, 1.0).unwrap();
        let ghz = PureState::ghz(&q, &[-1.0; 3], &[1.0; 3], 0.0).unwrap();
        let rho = DensityMatrix::from_pure(&ghz);
        assert!((decay_ghz_fidelity(&rho, 0.0, D52_LIFETIME).unwrap() - 1.0).abs() < 1e-12);
        let p = damping_probability(INTERROGATION_TIME, D52_LIFETIME).unwrap();
        // populations and coherence of the g/e2 pair computed by hand
        let expected = (1.0 - p).powi(3) + p.powi(3) / 4.0;
        let f = decay_ghz_fidelity(&rho, INTERROGATION_TIME, D52_LIFETIME).unwrap();
        assert!((f - expected).abs() < 1e-12);
    }

    #[test]
    fn depolarizing_drops() {
        let p: Vec<f64> = ADDRESSING_ERROR.iter().map(|&a| combined_error(PI_PULSE_ERROR, a)).collect();
        let q = SensorLevels::qubits(3, 1.0).unwrap();
        let ghz = PureState::ghz(&q, &[-1.0; 3], &[1.0; 3], 0.0).unwrap();
        let rho = DensityMatrix::from_pure(&ghz);
        let out = depolarize_independent(&rho, &p).unwrap();
        let drop = 1.0 - out.fidelity_pure(&ghz);
        assert!((drop - 0.09).abs() <= 0.02, "{drop}");
        let sep = PureState::separable_pm(&q, &[1.0; 3]).unwrap();
        let out = depolarize_independent(&DensityMatrix::from_pure(&sep), &p).unwrap();
        let drop = 1.0 - out.fidelity_pure(&sep);
        let analytic = 1.0 - p.iter().map(|x| 1.0 - x / 2.0).product::<f64>();
        assert!((drop - analytic).abs() < 1e-12);
        assert!((drop - 0.06).abs() <= 0.01, "{drop}");
        assert!(depolarize_independent(&rho, &[0.0, 1.2, 0.0]).is_err());
        let same = depolarize_independent(&rho, &[0.0; 3]).unwrap();
        assert!((same.matrix() - rho.matrix()).norm() < 1e-15);
    }

    #[test]
    fn full_depolarization_is_maximally_mixed() {
        let q = SensorLevels::qubits(3, 1.0).unwrap();
        let ghz = PureState::ghz(&q, &[-1.0; 3], &[1.0; 3], 0.0).unwrap();
        let out = depolarize_independent(&DensityMatrix::from_pure(&ghz), &[1.0; 3]).unwrap();
        assert!((out.matrix() - DensityMatrix::maximally_mixed(8).matrix()).norm() < 1e-14);
    }
}
