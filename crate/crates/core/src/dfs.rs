//! Decoherence-free subspaces: enumeration by noise-energy labels,
//! projectors, spectral ranges and the optimal in-subspace sensing state.

use std::collections::HashMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{FieldComponent, SensorLayout};
use crate::linalg::{self, CMatrix, CVector};
use crate::statespace::{BasisState, DiagonalGenerator, PureState, SensorLevels};

const KEY_SCALE: f64 = 1e9;

/// One DFS: basis states sharing the noise energies `η_j = f̃^j · s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DfsRecord {
    eta: Vec<f64>,
    members: Vec<usize>,
    dim: usize,
}

impl DfsRecord {
    /// Validates the DFS condition on explicit members.
    pub fn new(levels: &SensorLevels, noise_rows: &[Vec<f64>], members: Vec<usize>) -> Result<Self> {
        if members.len() < 2 {
            return Err(Error::Empty("DFS needs at least two members"));
        }
        if let Some(&bad) = members.iter().find(|&&m| m >= levels.dim()) {
            return Err(Error::DimensionMismatch {
                expected: levels.dim(),
                found: bad + 1,
            });
        }
        let eta: Vec<f64> = noise_rows.iter().map(|r| levels.label(members[0]).dot(r)).collect();
        for &m in &members[1..] {
            for (row, e) in noise_rows.iter().zip(&eta) {
                if (levels.label(m).dot(row) - e).abs() > 1e-10 {
                    return Err(crate::error::invalid(
                        "members",
                        format!("{} has a different noise energy", levels.label(m)),
                    ));
                }
            }
        }
        let mut members = members;
        members.sort_unstable();
        members.dedup();
        Ok(Self {
            eta,
            members,
            dim: levels.dim(),
        })
    }

    /// Noise energy label, one entry per noise component.
    pub fn eta(&self) -> &[f64] {
        &self.eta
    }

    /// Member basis indices in ascending (lexicographic) order.
    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn member_labels<'a>(&'a self, levels: &'a SensorLevels) -> impl Iterator<Item = &'a BasisState> + 'a {
        self.members.iter().map(move |&i| levels.label(i))
    }

    pub fn dimension(&self) -> usize {
        self.members.len()
    }

    pub fn contains(&self, index: usize) -> bool {
        self.members.binary_search(&index).is_ok()
    }

    pub fn projector(&self) -> CMatrix {
        index_projector(self.dim, &self.members)
    }

    pub fn eta_norm(&self) -> f64 {
        self.eta.iter().map(|e| e * e).sum::<f64>().sqrt()
    }
}

fn index_projector(dim: usize, indices: &[usize]) -> CMatrix {
    let mut p = CMatrix::zeros(dim, dim);
    for &i in indices {
        p[(i, i)] = linalg::ONE;
    }
    p
}

/// All DFSs of a basis plus the unprotected remainder `⊥`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DfsCensus {
    pub subspaces: Vec<DfsRecord>,
    /// Basis states whose noise energy is shared with no other state.
    pub remainder: Vec<usize>,
    pub dim: usize,
}

impl DfsCensus {
    pub fn len(&self) -> usize {
        self.subspaces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subspaces.is_empty()
    }

    pub fn remainder_projector(&self) -> CMatrix {
        index_projector(self.dim, &self.remainder)
    }

    /// Subspace containing a basis state, if any.
    pub fn subspace_of(&self, index: usize) -> Option<usize> {
        self.subspaces.iter().position(|d| d.contains(index))
    }

    /// Number of subspaces whose spectral range equals `delta` to `tol` (relative).
    pub fn count_with_range(&self, g: &DiagonalGenerator, delta: f64, tol: f64) -> usize {
        self.subspaces
            .iter()
            .filter(|d| (spectral_range(d, g).delta - delta).abs() <= tol * delta.abs().max(1e-300))
            .count()
    }

    /// Per basis state, the index of its subspace (`None` for `⊥`).
    pub fn labels(&self) -> Vec<Option<usize>> {
        let mut out = vec![None; self.dim];
        for (k, d) in self.subspaces.iter().enumerate() {
            for &m in d.members() {
                out[m] = Some(k);
            }
        }
        out
    }
}

/// Groups the basis by the rounded noise energies `(f̃^1·s, …, f̃^k·s)`.
/// Subspaces are listed in order of their first member.
pub fn enumerate_dfs(levels: &SensorLevels, layout: &SensorLayout, noise: &[FieldComponent]) -> Result<DfsCensus> {
    if layout.len() != levels.sensor_count() {
        return Err(Error::DimensionMismatch {
            expected: levels.sensor_count(),
            found: layout.len(),
        });
    }
    let rows = noise
        .iter()
        .map(|c| c.shape_vector(layout))
        .collect::<Result<Vec<_>>>()?;
    Ok(census_from_rows(levels, &rows))
}

/// [`enumerate_dfs`] with explicit unit-strength noise rows.
pub fn census_from_rows(levels: &SensorLevels, rows: &[Vec<f64>]) -> DfsCensus {
    let mut slot: HashMap<Vec<i64>, usize> = HashMap::new();
    let mut groups: Vec<(Vec<f64>, Vec<usize>)> = Vec::new();
    for (index, label) in levels.basis().iter().enumerate() {
        let eta: Vec<f64> = rows.iter().map(|r| label.dot(r)).collect();
        let key: Vec<i64> = eta.iter().map(|e| (e * KEY_SCALE).round() as i64).collect();
        let k = *slot.entry(key).or_insert_with(|| {
            groups.push((eta, Vec::new()));
            groups.len() - 1
        });
        groups[k].1.push(index);
    }
    let mut subspaces = Vec::new();
    let mut remainder = Vec::new();
    for (eta, members) in groups {
        if members.len() >= 2 {
            subspaces.push(DfsRecord {
                eta,
                members,
                dim: levels.dim(),
            });
        } else {
            remainder.extend(members);
        }
    }
    remainder.sort_unstable();
    DfsCensus {
        subspaces,
        remainder,
        dim: levels.dim(),
    }
}

/// Spread of the generator over a subspace and the extremal members.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralRange {
    pub delta: f64,
    pub argmax: usize,
    pub argmin: usize,
}

/// `Δ = max G − min G` over the members; ties go to the lexicographically first member.
pub fn spectral_range(dfs: &DfsRecord, g: &DiagonalGenerator) -> SpectralRange {
    let mut argmax = dfs.members[0];
    let mut argmin = dfs.members[0];
    for &m in &dfs.members[1..] {
        if g.value(m) > g.value(argmax) {
            argmax = m;
        }
        if g.value(m) < g.value(argmin) {
            argmin = m;
        }
    }
    SpectralRange {
        delta: g.value(argmax) - g.value(argmin),
        argmax,
        argmin,
    }
}

fn generator_scale(g: &DiagonalGenerator) -> f64 {
    g.values().iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

fn has_sensitivity(delta: f64, g: &DiagonalGenerator) -> bool {
    delta > 1e-12 * generator_scale(g).max(f64::MIN_POSITIVE)
}

/// `(|s_max⟩ + |s_min⟩)/√2`, the state of maximal QFI `Δ²` inside the subspace.
pub fn optimal_state(dfs: &DfsRecord, g: &DiagonalGenerator) -> Result<PureState> {
    let r = spectral_range(dfs, g);
    if !has_sensitivity(r.delta, g) {
        return Err(Error::NoSensitivity);
    }
    let mut v = CVector::zeros(dfs.dim);
    v[r.argmax] = Complex64::new(1.0, 0.0);
    v[r.argmin] = Complex64::new(1.0, 0.0);
    PureState::normalized(v)
}

/// Subspace of largest spectral range; ties by smallest `‖η‖`, then by members.
pub fn best_dfs<'a>(dfss: &'a [DfsRecord], g: &DiagonalGenerator) -> Result<&'a DfsRecord> {
    if dfss.is_empty() {
        return Err(Error::Empty("DFS list"));
    }
    let ranges: Vec<f64> = dfss.iter().map(|d| spectral_range(d, g).delta).collect();
    let top = ranges.iter().cloned().fold(f64::MIN, f64::max);
    if !has_sensitivity(top, g) {
        return Err(Error::NoSensitivity);
    }
    let tol = 1e-9 * top;
    dfss.iter()
        .zip(&ranges)
        .filter(|(_, &r)| r >= top - tol)
        .map(|(d, _)| d)
        .min_by(|a, b| {
            a.eta_norm()
                .total_cmp(&b.eta_norm())
                .then_with(|| a.members.cmp(&b.members))
        })
        .ok_or(Error::NoSensitivity)
}
