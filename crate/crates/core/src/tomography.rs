//! Simulated Pauli-basis tomography of qubit registers, maximum-likelihood
//! reconstruction and bootstrap error bars.
//!
//! Qubit order: the first qubit is the most significant bit of the basis
//! index. Outcome bit 0 is the +1 eigenvector of the measured Pauli.
//!
//! Reconstruction is the diluted fixed-point iteration
//! `ρ ← (I + εR')ρ(I + εR') / tr(..)` with `R' = R/B − I`,
//! `R = Σ f/p Π`, and `B` the number of bases. The step `ε` starts at 1 and
//! is halved until the log-likelihood does not decrease, so every accepted
//! iteration is monotone. Stop once the relative log-likelihood change is
//! below [`MleConfig::tolerance`] or after [`MleConfig::max_iterations`].

use std::fmt;

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::estimation::derive_seed;
use crate::linalg::{CMatrix, CVector, ONE, ZERO};
use crate::statespace::DensityMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pauli {
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 3] = [Pauli::X, Pauli::Y, Pauli::Z];

    /// Eigenvector for outcome bit `bit` (0 ↔ eigenvalue +1).
    pub fn eigenvector(self, bit: usize) -> [Complex64; 2] {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let sign = if bit == 0 { 1.0 } else { -1.0 };
        match (self, bit) {
            (Pauli::Z, 0) => [ONE, ZERO],
            (Pauli::Z, _) => [ZERO, ONE],
            (Pauli::X, _) => [Complex64::new(h, 0.0), Complex64::new(sign * h, 0.0)],
            (Pauli::Y, _) => [Complex64::new(h, 0.0), Complex64::new(0.0, sign * h)],
        }
    }
}

/// A product of single-qubit Pauli measurements, e.g. `XYZ`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct PauliBasis(pub Vec<Pauli>);

impl PauliBasis {
    /// All `3^n` bases in lexicographic X < Y < Z order.
    pub fn all(qubits: usize) -> Vec<PauliBasis> {
        (0..3usize.pow(qubits as u32))
            .map(|mut k| {
                let mut v = vec![Pauli::X; qubits];
                for slot in v.iter_mut().rev() {
                    *slot = Pauli::ALL[k % 3];
                    k /= 3;
                }
                PauliBasis(v)
            })
            .collect()
    }

    pub fn qubits(&self) -> usize {
        self.0.len()
    }

    /// Measurement vectors `|v_k⟩` such that outcome `k` has probability `⟨v_k|ρ|v_k⟩`.
    pub fn outcome_vectors(&self) -> Vec<CVector> {
        let n = self.qubits();
        (0..1usize << n)
            .map(|k| {
                let mut v = CVector::from_element(1, ONE);
                for (q, p) in self.0.iter().enumerate() {
                    let bit = (k >> (n - 1 - q)) & 1;
                    let e = p.eigenvector(bit);
                    let mut next = CVector::zeros(v.len() * 2);
                    for (i, a) in v.iter().enumerate() {
                        next[2 * i] = a * e[0];
                        next[2 * i + 1] = a * e[1];
                    }
                    v = next;
                }
                v
            })
            .collect()
    }
}

impl fmt::Display for PauliBasis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in &self.0 {
            write!(f, "{p:?}")?;
        }
        Ok(())
    }
}

impl TryFrom<String> for PauliBasis {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                'X' => Ok(Pauli::X),
                'Y' => Ok(Pauli::Y),
                'Z' => Ok(Pauli::Z),
                other => Err(invalid("basis", format!("unknown Pauli '{other}'"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(PauliBasis)
    }
}

impl From<PauliBasis> for String {
    fn from(b: PauliBasis) -> Self {
        b.to_string()
    }
}

/// Outcome counts in one basis.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BasisCounts {
    pub basis: PauliBasis,
    pub counts: Vec<u64>,
}

impl BasisCounts {
    pub fn new(basis: PauliBasis, counts: Vec<u64>) -> Result<Self> {
        if counts.len() != 1 << basis.qubits() {
            return Err(Error::DimensionMismatch {
                expected: 1 << basis.qubits(),
                found: counts.len(),
            });
        }
        if counts.iter().sum::<u64>() == 0 {
            return Err(invalid("counts", "basis without shots"));
        }
        Ok(Self { basis, counts })
    }

    pub fn shots(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn frequencies(&self) -> Vec<f64> {
        let n = self.shots() as f64;
        self.counts.iter().map(|&c| c as f64 / n).collect()
    }
}

fn qubit_count(dim: usize) -> Result<usize> {
    if dim < 2 || !dim.is_power_of_two() {
        return Err(invalid("density matrix", format!("dimension {dim} is not a qubit register")));
    }
    Ok(dim.trailing_zeros() as usize)
}

fn expectation(rho: &CMatrix, v: &CVector) -> f64 {
    (v.adjoint() * rho * v)[(0, 0)].re
}

/// Born probabilities of all outcomes in `basis`.
pub fn basis_probabilities(rho: &DensityMatrix, basis: &PauliBasis) -> Result<Vec<f64>> {
    if qubit_count(rho.dim())? != basis.qubits() {
        return Err(Error::DimensionMismatch {
            expected: 1 << basis.qubits(),
            found: rho.dim(),
        });
    }
    Ok(basis
        .outcome_vectors()
        .iter()
        .map(|v| expectation(rho.matrix(), v).max(0.0))
        .collect())
}

/// Multinomial draw by sequential conditional binomials.
pub fn multinomial<R: Rng + ?Sized>(shots: u64, probabilities: &[f64], rng: &mut R) -> Vec<u64> {
    let mut left = shots;
    let mut mass = probabilities.iter().map(|p| p.max(0.0)).sum::<f64>();
    let mut out = Vec::with_capacity(probabilities.len());
    for (k, &p) in probabilities.iter().enumerate() {
        let p = p.max(0.0);
        let c = if k + 1 == probabilities.len() {
            left
        } else if left == 0 || mass <= 0.0 {
            0
        } else {
            let q = (p / mass).clamp(0.0, 1.0);
            Binomial::new(left, q).map(|b| b.sample(rng)).unwrap_or(0)
        };
        out.push(c);
        left -= c;
        mass -= p;
    }
    out
}

pub fn simulate_basis_counts_with<R: Rng + ?Sized>(rho: &DensityMatrix, basis: &PauliBasis, shots: u64, rng: &mut R) -> Result<BasisCounts> {
    if shots == 0 {
        return Err(invalid("shots", "must be ≥ 1"));
    }
    let p = basis_probabilities(rho, basis)?;
    BasisCounts::new(basis.clone(), multinomial(shots, &p, rng))
}

pub fn simulate_basis_counts(rho: &DensityMatrix, basis: &PauliBasis, shots: u64, seed: u64) -> Result<BasisCounts> {
    simulate_basis_counts_with(rho, basis, shots, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// Counts in every Pauli basis, one generator for the whole set.
pub fn simulate_all_bases(rho: &DensityMatrix, shots: u64, seed: u64) -> Result<Vec<BasisCounts>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    PauliBasis::all(qubit_count(rho.dim())?)
        .iter()
        .map(|b| simulate_basis_counts_with(rho, b, shots, &mut rng))
        .collect()
}

/// Noise-free counts: `shots · p` rounded to the nearest integer.
pub fn expected_counts(rho: &DensityMatrix, shots: u64) -> Result<Vec<BasisCounts>> {
    PauliBasis::all(qubit_count(rho.dim())?)
        .into_iter()
        .map(|b| {
            let p = basis_probabilities(rho, &b)?;
            let counts = p.iter().map(|x| (x * shots as f64).round() as u64).collect();
            BasisCounts::new(b, counts)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MleConfig {
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for MleConfig {
    fn default() -> Self {
        Self {
            tolerance: 1e-10,
            max_iterations: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reconstruction {
    pub rho: DensityMatrix,
    pub log_likelihood: f64,
    pub iterations: usize,
    /// Set when the iteration cap stopped the ascent.
    pub hit_iteration_cap: bool,
}

struct Projectors {
    vectors: Vec<CVector>,
    frequencies: Vec<f64>,
    weights: Vec<f64>,
    bases: usize,
    dim: usize,
}

impl Projectors {
    fn new(counts: &[BasisCounts]) -> Result<Self> {
        let first = counts.first().ok_or(Error::Empty("counts"))?;
        let n = first.basis.qubits();
        let expected = 3usize.pow(n as u32);
        let mut seen: Vec<&PauliBasis> = counts.iter().map(|c| &c.basis).collect();
        seen.sort_by_key(|b| b.to_string());
        seen.dedup();
        if counts.iter().any(|c| c.basis.qubits() != n) || seen.len() != expected || counts.len() != expected {
            return Err(invalid("counts", format!("need each of the {expected} Pauli bases exactly once")));
        }
        let total: f64 = counts.iter().map(|c| c.shots() as f64).sum();
        let mut vectors = Vec::new();
        let mut frequencies = Vec::new();
        let mut weights = Vec::new();
        for c in counts {
            let shots = c.shots() as f64;
            for (v, &k) in c.basis.outcome_vectors().into_iter().zip(&c.counts) {
                vectors.push(v);
                frequencies.push(k as f64 / shots);
                weights.push(k as f64 / total * expected as f64);
            }
        }
        Ok(Self {
            vectors,
            frequencies,
            weights,
            bases: expected,
            dim: 1 << n,
        })
    }

    fn probabilities(&self, rho: &CMatrix) -> Vec<f64> {
        self.vectors.iter().map(|v| expectation(rho, v)).collect()
    }

    /// Per-basis-normalized log-likelihood `Σ w log p`.
    fn log_likelihood(&self, p: &[f64]) -> f64 {
        self.weights
            .iter()
            .zip(p)
            .filter(|(w, _)| **w > 0.0)
            .map(|(w, p)| w * p.max(1e-300).ln())
            .sum()
    }

    fn r_operator(&self, p: &[f64]) -> CMatrix {
        let mut r = CMatrix::zeros(self.dim, self.dim);
        for ((v, f), p) in self.vectors.iter().zip(&self.frequencies).zip(p) {
            if *f > 0.0 {
                let w = Complex64::new(f / p.max(1e-300), 0.0);
                r += v * v.adjoint() * w;
            }
        }
        r / Complex64::new(self.bases as f64, 0.0)
    }
}

fn normalize(m: CMatrix) -> CMatrix {
    let herm = (&m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let tr = herm.trace().re;
    herm / Complex64::new(tr, 0.0)
}

/// Maximum-likelihood state from counts in all `3^n` Pauli bases.
pub fn reconstruct_mle(counts: &[BasisCounts], config: &MleConfig) -> Result<Reconstruction> {
    let proj = Projectors::new(counts)?;
    let identity = CMatrix::identity(proj.dim, proj.dim);
    let mut rho = identity.clone() / Complex64::new(proj.dim as f64, 0.0);
    let mut p = proj.probabilities(&rho);
    let mut ll = proj.log_likelihood(&p);
    let mut iterations = 0;
    let mut capped = true;
    while iterations < config.max_iterations {
        iterations += 1;
        let r = proj.r_operator(&p) - &identity;
        let mut eps = 1.0;
        let mut accepted = None;
        while eps > 1e-12 {
            let step = &identity + &r * Complex64::new(eps, 0.0);
            let cand = normalize(&step * &rho * &step);
            let cp = proj.probabilities(&cand);
            let cl = proj.log_likelihood(&cp);
            if cl >= ll {
                accepted = Some((cand, cp, cl));
                break;
            }
            eps *= 0.5;
        }
        let Some((cand, cp, cl)) = accepted else {
            capped = false;
            break;
        };
        let change = (cl - ll).abs() / ll.abs().max(1e-300);
        rho = cand;
        p = cp;
        ll = cl;
        if change < config.tolerance {
            capped = false;
            break;
        }
    }
    if capped {
        log::warn!("likelihood ascent stopped at the iteration cap ({})", config.max_iterations);
    }
    Ok(Reconstruction {
        rho: DensityMatrix::from_matrix_unchecked(rho),
        log_likelihood: ll,
        iterations,
        hit_iteration_cap: capped,
    })
}

/// Overlap with the nearest `(|i⟩ + e^{iφ}|j⟩)/√2`, maximized over `φ`.
pub fn ghz_fidelity(rho: &DensityMatrix, pair: (usize, usize)) -> f64 {
    let (i, j) = pair;
    0.5 * (rho.element(i, i).re + rho.element(j, j).re) + rho.element(i, j).norm()
}

/// Parity amplitude `2|ρ_ij|` carried by the coherence of a pair.
pub fn coherence_amplitude(rho: &DensityMatrix, pair: (usize, usize)) -> f64 {
    2.0 * rho.element(pair.0, pair.1).norm()
}

/// GHZ pair `(|0…0⟩, |1…1⟩)` of an `n`-qubit register.
pub fn register_ghz_pair(qubits: usize) -> (usize, usize) {
    (0, (1 << qubits) - 1)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapEstimate {
    /// Extracted from the reconstruction of the raw counts.
    pub value: f64,
    /// Standard deviation over resampled reconstructions.
    pub std: f64,
    pub repeats: usize,
}

/// Multinomial resampling of every basis from its observed frequencies.
pub fn bootstrap_errorbars<F>(counts: &[BasisCounts], extractor: F, repeats: usize, seed: u64, config: &MleConfig) -> Result<BootstrapEstimate>
where
    F: Fn(&DensityMatrix) -> f64 + Sync,
{
    if repeats < 2 {
        return Err(invalid("repeats", "need at least two bootstrap repeats"));
    }
    let value = extractor(&reconstruct_mle(counts, config)?.rho);
    let samples: Vec<f64> = (0..repeats)
        .into_par_iter()
        .map(|r| -> Result<f64> {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, r as u64));
            let resampled = counts
                .iter()
                .map(|c| BasisCounts::new(c.basis.clone(), multinomial(c.shots(), &c.frequencies(), &mut rng)))
                .collect::<Result<Vec<_>>>()?;
            Ok(extractor(&reconstruct_mle(&resampled, config)?.rho))
        })
        .collect::<Result<_>>()?;
    let mean = samples.iter().sum::<f64>() / repeats as f64;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (repeats - 1) as f64;
    Ok(BootstrapEstimate {
        value,
        std: var.sqrt(),
        repeats,
    })
}
