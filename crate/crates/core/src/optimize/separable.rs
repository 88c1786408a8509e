//! Classical Fisher information of separable states read out by separable
//! projective measurements, after overwhelming correlated dephasing.
//!
//! The dephased state keeps its populations and the coherences inside each
//! DFS. For a product measurement basis `|m⟩ = ⊗_i U_i[·, k_i]` both the
//! outcome probabilities and their derivatives factor per sensor, so every
//! coherent pair contributes one outer product of per-sensor vectors.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dfs::DfsCensus;
use crate::error::{invalid, Error, Result};
use crate::linalg::{self, CMatrix};
use crate::metrology::PROBABILITY_FLOOR;
use crate::statespace::{DiagonalGenerator, SensorLevels};

/// Minimal eigenvalue gap below which an observable counts as degenerate.
const DEGENERACY_GAP: f64 = 1e-8;

/// Per-sensor states `|ψ_i⟩ = (a^i + i b^i)/‖a^i + i b^i‖`, last `b` entry fixed to 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparableStateParams {
    pub a: Vec<Vec<f64>>,
    pub b: Vec<Vec<f64>>,
}

impl SeparableStateParams {
    pub fn parameter_count(dims: &[usize]) -> usize {
        dims.iter().map(|n| 2 * n - 1).sum()
    }

    /// Reads `a^i` (n values) then `b^i` (n − 1 values) for each sensor.
    pub fn from_slice(dims: &[usize], x: &[f64]) -> Result<Self> {
        check_len(Self::parameter_count(dims), x.len())?;
        let mut at = 0;
        let mut a = Vec::with_capacity(dims.len());
        let mut b = Vec::with_capacity(dims.len());
        for &n in dims {
            a.push(x[at..at + n].to_vec());
            at += n;
            let mut bi = x[at..at + n - 1].to_vec();
            bi.push(0.0);
            b.push(bi);
            at += n - 1;
        }
        Ok(Self { a, b })
    }

    pub fn to_vec(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (a, b) in self.a.iter().zip(&self.b) {
            out.extend_from_slice(a);
            out.extend_from_slice(&b[..b.len() - 1]);
        }
        out
    }

    /// Normalized single-sensor amplitudes.
    pub fn states(&self) -> Result<Vec<Vec<Complex64>>> {
        self.a
            .iter()
            .zip(&self.b)
            .map(|(a, b)| {
                let v: Vec<Complex64> = a.iter().zip(b).map(|(&re, &im)| Complex64::new(re, im)).collect();
                let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                if !(norm > 0.0 && norm.is_finite()) {
                    return Err(invalid("state", "single-sensor amplitudes vanish"));
                }
                Ok(v.into_iter().map(|z| z / norm).collect())
            })
            .collect()
    }
}

/// Per-sensor Hermitian observables `O^i`, `n²` reals each: the diagonal,
/// then real parts and imaginary parts of the upper triangle (row-major).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservableParams {
    pub o: Vec<Vec<f64>>,
}

impl ObservableParams {
    pub fn parameter_count(dims: &[usize]) -> usize {
        dims.iter().map(|n| n * n).sum()
    }

    pub fn from_slice(dims: &[usize], x: &[f64]) -> Result<Self> {
        check_len(Self::parameter_count(dims), x.len())?;
        let mut at = 0;
        let o = dims
            .iter()
            .map(|&n| {
                let v = x[at..at + n * n].to_vec();
                at += n * n;
                v
            })
            .collect();
        Ok(Self { o })
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.o.concat()
    }

    pub fn matrices(&self) -> Vec<CMatrix> {
        self.o.iter().map(|v| hermitian_from_params(v)).collect()
    }
}

fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

fn hermitian_from_params(v: &[f64]) -> CMatrix {
    let n = (v.len() as f64).sqrt().round() as usize;
    let upper = n * (n - 1) / 2;
    let mut h = CMatrix::zeros(n, n);
    for i in 0..n {
        h[(i, i)] = Complex64::new(v[i], 0.0);
    }
    let mut k = 0;
    for i in 0..n {
        for j in i + 1..n {
            let z = Complex64::new(v[n + k], v[n + upper + k]);
            h[(i, j)] = z;
            h[(j, i)] = z.conj();
            k += 1;
        }
    }
    h
}

/// Eigenbasis of a Hermitian observable (columns are outcomes), with a
/// deterministic diagonal jitter when eigenvalues are degenerate.
pub fn measurement_basis(h: &CMatrix) -> (CMatrix, bool) {
    let (values, vectors) = linalg::hermitian_eigen(h);
    let scale = values.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
    let degenerate = values.windows(2).any(|w| w[1] - w[0] < DEGENERACY_GAP * scale);
    if !degenerate {
        return (vectors, false);
    }
    let n = h.nrows();
    let mut jittered = h.clone();
    for i in 0..n {
        jittered[(i, i)] += Complex64::new(DEGENERACY_GAP * scale * (i as f64 + 1.0), 0.0);
    }
    log::debug!("degenerate observable, applying a {:e} diagonal jitter", DEGENERACY_GAP * scale);
    (linalg::hermitian_eigen(&jittered).1, true)
}

/// One unordered pair `s < t` of a DFS; its mirror `(t, s)` is the complex
/// conjugate and is folded in analytically.
#[derive(Debug, Clone)]
struct CoherentPair {
    row: Vec<usize>,
    col: Vec<usize>,
    /// `g_s − g_t`
    generator_gap: f64,
}

/// Outcome distribution of a product measurement and its signal derivative.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeDistribution {
    pub p: Vec<f64>,
    pub dp: Vec<f64>,
    pub degenerate: bool,
}

impl OutcomeDistribution {
    /// `Σ dp²/p`; vanishing outcomes must also have vanishing numerators.
    pub fn cfi(&self) -> Result<f64> {
        let mut f = 0.0;
        for (m, (&p, &d)) in self.p.iter().zip(&self.dp).enumerate() {
            if p < PROBABILITY_FLOOR {
                if d * d >= PROBABILITY_FLOOR {
                    return Err(Error::SingularModel { outcome: m });
                }
            } else {
                f += d * d / p;
            }
        }
        Ok(f)
    }

    /// CFI after mixing with uniform outcomes: `p → (1−ε)p + ε/D`.
    pub fn depolarized_cfi(&self, eps: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&eps) {
            return Err(invalid("epsilon", "must lie in [0, 1]"));
        }
        if eps == 0.0 {
            return self.cfi();
        }
        let floor = eps / self.p.len() as f64;
        Ok(self
            .p
            .iter()
            .zip(&self.dp)
            .map(|(&p, &d)| {
                let q = (1.0 - eps) * p.max(0.0) + floor;
                let dq = (1.0 - eps) * d;
                if q > 0.0 {
                    dq * dq / q
                } else {
                    0.0
                }
            })
            .sum())
    }

    /// CFI with singular outcomes dropped instead of rejected.
    pub fn cfi_lenient(&self) -> f64 {
        self.p
            .iter()
            .zip(&self.dp)
            .filter(|(&p, _)| p >= PROBABILITY_FLOOR)
            .map(|(&p, &d)| d * d / p)
            .sum()
    }
}

/// Separable-protocol CFI problem at `B = 0` for a fixed noise census.
#[derive(Debug, Clone)]
pub struct SeparableProblem {
    dims: Vec<usize>,
    pairs: Vec<CoherentPair>,
}

impl SeparableProblem {
    pub fn new(levels: &SensorLevels, census: &DfsCensus, g: &DiagonalGenerator) -> Result<Self> {
        if census.dim != levels.dim() || g.dim() != levels.dim() {
            return Err(Error::DimensionMismatch {
                expected: levels.dim(),
                found: if census.dim != levels.dim() { census.dim } else { g.dim() },
            });
        }
        let dims = levels.dims();
        let digits = |mut index: usize| {
            let mut d = vec![0; dims.len()];
            for (site, &n) in dims.iter().enumerate().rev() {
                d[site] = index % n;
                index /= n;
            }
            d
        };
        let mut pairs = Vec::new();
        for dfs in &census.subspaces {
            for (i, &s) in dfs.members().iter().enumerate() {
                for &t in &dfs.members()[i + 1..] {
                    pairs.push(CoherentPair {
                        row: digits(s),
                        col: digits(t),
                        generator_gap: g.value(s) - g.value(t),
                    });
                }
            }
        }
        Ok(Self { dims, pairs })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn outcome_count(&self) -> usize {
        self.dims.iter().product()
    }

    /// Unordered in-DFS pairs carrying coherence after the noise.
    pub fn coherent_pairs(&self) -> usize {
        self.pairs.len()
    }

    pub fn parameter_count(&self) -> usize {
        SeparableStateParams::parameter_count(&self.dims) + ObservableParams::parameter_count(&self.dims)
    }

    /// Splits a flat parameter vector into state and observable parts.
    pub fn split(&self, x: &[f64]) -> Result<(SeparableStateParams, ObservableParams)> {
        check_len(self.parameter_count(), x.len())?;
        let k = SeparableStateParams::parameter_count(&self.dims);
        Ok((
            SeparableStateParams::from_slice(&self.dims, &x[..k])?,
            ObservableParams::from_slice(&self.dims, &x[k..])?,
        ))
    }

    pub fn join(state: &SeparableStateParams, obs: &ObservableParams) -> Vec<f64> {
        let mut x = state.to_vec();
        x.extend(obs.to_vec());
        x
    }

    /// Outcome probabilities and their `B`-derivatives at `B = 0`.
    pub fn distribution(&self, state: &SeparableStateParams, obs: &ObservableParams) -> Result<OutcomeDistribution> {
        let psi = state.states()?;
        let mats = obs.matrices();
        if psi.len() != self.dims.len() || mats.len() != self.dims.len() {
            return Err(Error::DimensionMismatch {
                expected: self.dims.len(),
                found: psi.len().min(mats.len()),
            });
        }
        for (i, &n) in self.dims.iter().enumerate() {
            check_len(n, psi[i].len())?;
            check_len(n, mats[i].nrows())?;
        }
        let mut degenerate = false;
        let bases: Vec<CMatrix> = mats
            .iter()
            .map(|m| {
                let (u, d) = measurement_basis(m);
                degenerate |= d;
                u
            })
            .collect();
        let total = self.outcome_count();

        // populations factor into per-sensor outcome distributions
        let mut p = vec![1.0; 1];
        for (u, amp) in bases.iter().zip(&psi) {
            let n = amp.len();
            let local: Vec<f64> = (0..n)
                .map(|k| (0..n).map(|a| u[(a, k)].norm_sqr() * amp[a].norm_sqr()).sum())
                .collect();
            p = outer_real(&p, &local);
        }

        // w_i[(a n + b) n + k] = conj(U_i[a,k]) U_i[b,k]
        let overlaps: Vec<Vec<Complex64>> = bases
            .iter()
            .map(|u| {
                let n = u.nrows();
                let mut w = Vec::with_capacity(n * n * n);
                for a in 0..n {
                    for b in 0..n {
                        w.extend((0..n).map(|k| u[(a, k)].conj() * u[(b, k)]));
                    }
                }
                w
            })
            .collect();

        // each unordered pair adds 2 Re f to p and 2 (g_s − g_t) Im f to dp
        let mut dp = vec![0.0; total];
        let mut factor = vec![Complex64::new(0.0, 0.0); total];
        for pair in &self.pairs {
            let mut c = Complex64::new(1.0, 0.0);
            for (site, amp) in psi.iter().enumerate() {
                c *= amp[pair.row[site]] * amp[pair.col[site]].conj();
            }
            if c.norm_sqr() == 0.0 {
                continue;
            }
            let mut len = 1;
            factor[0] = c;
            for (site, w) in overlaps.iter().enumerate() {
                let n = self.dims[site];
                let start = (pair.row[site] * n + pair.col[site]) * n;
                let v = &w[start..start + n];
                for i in (0..len).rev() {
                    let base = factor[i];
                    for k in 0..n {
                        factor[i * n + k] = base * v[k];
                    }
                }
                len *= n;
            }
            let gap = 2.0 * pair.generator_gap;
            for ((pm, dm), f) in p.iter_mut().zip(dp.iter_mut()).zip(&factor) {
                *pm += 2.0 * f.re;
                *dm += gap * f.im;
            }
        }
        Ok(OutcomeDistribution { p, dp, degenerate })
    }

    /// CFI of the dephased separable state under the product measurement.
    pub fn objective(&self, state: &SeparableStateParams, obs: &ObservableParams) -> Result<f64> {
        self.distribution(state, obs)?.cfi()
    }

    /// [`SeparableProblem::objective`] on a flat parameter vector.
    pub fn objective_flat(&self, x: &[f64]) -> Result<f64> {
        let (s, o) = self.split(x)?;
        self.objective(&s, &o)
    }

    /// Objective used inside the optimizer: singular outcomes are dropped.
    pub fn objective_lenient(&self, x: &[f64], eps: f64) -> f64 {
        match self.split(x).and_then(|(s, o)| self.distribution(&s, &o)) {
            Ok(d) if eps > 0.0 => d.depolarized_cfi(eps).unwrap_or(0.0),
            Ok(d) => d.cfi_lenient(),
            Err(_) => 0.0,
        }
    }
}

fn outer_real(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(a.len() * b.len());
    for &x in a {
        for &y in b {
            out.push(x * y);
        }
    }
    out
}
