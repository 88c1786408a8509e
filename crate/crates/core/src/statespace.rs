//! Product basis over multi-level sensors, pure and mixed states, and the
//! diagonal signal generator.
//!
//! Basis states are ordered lexicographically over the per-sensor level
//! lists with the first sensor most significant. A sensor level `s` couples
//! to the field as `H ∝ s` (the bare-label convention); constant offsets of
//! the labels only add global phases inside every protected subspace.

use std::fmt;

use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fields::{FieldComponent, SensorLayout};
use crate::linalg::{self, CMatrix, CVector};

const LABEL_TOLERANCE: f64 = 1e-12;

/// Tuple of per-sensor sensitivity labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisState(pub Vec<f64>);

impl BasisState {
    pub fn labels(&self) -> &[f64] {
        &self.0
    }

    /// `Σ_i v_i s_i`
    pub fn dot(&self, v: &[f64]) -> f64 {
        self.0.iter().zip(v).map(|(s, x)| s * x).sum()
    }

    pub fn negated(&self) -> Self {
        Self(self.0.iter().map(|s| -s).collect())
    }
}

impl fmt::Display for BasisState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|")?;
        for (i, s) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{s}")?;
        }
        write!(f, ">")
    }
}

/// Sensitivity labels of every sensor, plus the precomputed product basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct SensorLevels {
    levels: Vec<Vec<f64>>,
    basis: Vec<BasisState>,
}

impl SensorLevels {
    pub fn new(levels: Vec<Vec<f64>>) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::Empty("sensor levels"));
        }
        for sensor in &levels {
            if sensor.is_empty() {
                return Err(Error::Empty("levels of a sensor"));
            }
            if sensor.iter().any(|s| !s.is_finite()) {
                return Err(invalid("levels", "labels must be finite"));
            }
            for (i, a) in sensor.iter().enumerate() {
                if sensor[i + 1..].iter().any(|b| (a - b).abs() <= LABEL_TOLERANCE) {
                    return Err(invalid("levels", format!("duplicate label {a}")));
                }
            }
        }
        let dim: usize = levels.iter().map(Vec::len).product();
        let basis = (0..dim)
            .map(|index| {
                let mut rest = index;
                let mut labels = vec![0.0; levels.len()];
                for (site, sensor) in levels.iter().enumerate().rev() {
                    labels[site] = sensor[rest % sensor.len()];
                    rest /= sensor.len();
                }
                BasisState(labels)
            })
            .collect();
        Ok(Self { levels, basis })
    }

    /// `count` two-level sensors with labels `{−s, +s}`.
    pub fn qubits(count: usize, s: f64) -> Result<Self> {
        if s <= 0.0 {
            return Err(invalid("s", "qubit sensitivity must be positive"));
        }
        Self::new(vec![vec![-s, s]; count])
    }

    /// The two-level encoding used by the three-ion experiment:
    /// `{±1} × {±2} × {±1}`.
    pub fn bold() -> Self {
        Self::new(vec![vec![-1.0, 1.0], vec![-2.0, 2.0], vec![-1.0, 1.0]]).expect("valid preset")
    }

    /// The six Zeeman labels `{−2, …, 3}` of the D5/2 manifold on every sensor.
    pub fn full_d52(count: usize) -> Result<Self> {
        Self::new(vec![vec![-2.0, -1.0, 0.0, 1.0, 2.0, 3.0]; count])
    }

    pub fn sensor_count(&self) -> usize {
        self.levels.len()
    }

    pub fn sensor(&self, site: usize) -> &[f64] {
        &self.levels[site]
    }

    pub fn dims(&self) -> Vec<usize> {
        self.levels.iter().map(Vec::len).collect()
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[BasisState] {
        &self.basis
    }

    pub fn label(&self, index: usize) -> &BasisState {
        &self.basis[index]
    }

    /// Basis index of a label tuple, if every label belongs to its sensor.
    pub fn index_of(&self, labels: &[f64]) -> Option<usize> {
        if labels.len() != self.levels.len() {
            return None;
        }
        let mut index = 0;
        for (sensor, &s) in self.levels.iter().zip(labels) {
            let k = sensor.iter().position(|&l| (l - s).abs() <= LABEL_TOLERANCE)?;
            index = index * sensor.len() + k;
        }
        Some(index)
    }

    fn require_index(&self, labels: &[f64]) -> Result<usize> {
        self.index_of(labels)
            .ok_or_else(|| invalid("labels", format!("{} is not a basis state", BasisState(labels.to_vec()))))
    }
}

impl TryFrom<Vec<Vec<f64>>> for SensorLevels {
    type Error = Error;
    fn try_from(v: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<SensorLevels> for Vec<Vec<f64>> {
    fn from(l: SensorLevels) -> Self {
        l.levels
    }
}

/// One serialized amplitude of a pure state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeRecord {
    pub labels: Vec<f64>,
    pub re: f64,
    pub im: f64,
}

/// Normalized state vector over the product basis.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    amplitudes: CVector,
}

impl PureState {
    /// Wraps amplitudes that are already normalized to 10⁻¹².
    pub fn new(amplitudes: CVector) -> Result<Self> {
        let norm = amplitudes.norm_squared();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(invalid("amplitudes", format!("norm² is {norm}, expected 1")));
        }
        Ok(Self { amplitudes })
    }

    /// Rescales arbitrary nonzero amplitudes to unit norm.
    pub fn normalized(amplitudes: CVector) -> Result<Self> {
        let norm = amplitudes.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(invalid("amplitudes", "cannot normalize a zero vector"));
        }
        Ok(Self {
            amplitudes: amplitudes.unscale(norm),
        })
    }

    pub fn basis(levels: &SensorLevels, labels: &[f64]) -> Result<Self> {
        let i = levels.require_index(labels)?;
        let mut v = CVector::zeros(levels.dim());
        v[i] = linalg::ONE;
        Ok(Self { amplitudes: v })
    }

    /// Normalized superposition `Σ c_k |s_k⟩`.
    pub fn superposition(levels: &SensorLevels, terms: &[(&[f64], Complex64)]) -> Result<Self> {
        let mut v = CVector::zeros(levels.dim());
        for (labels, c) in terms {
            v[levels.require_index(labels)?] += c;
        }
        Self::normalized(v)
    }

    /// `(|s⟩ + e^{iφ}|s′⟩)/√2`
    pub fn ghz(levels: &SensorLevels, s: &[f64], s_prime: &[f64], phase: f64) -> Result<Self> {
        Self::superposition(
            levels,
            &[(s, linalg::ONE), (s_prime, Complex64::from_polar(1.0, phase))],
        )
    }

    /// Tensor product of single-sensor states (each normalized on the way).
    pub fn product(factors: &[CVector]) -> Result<Self> {
        let mut v = CVector::from_element(1, linalg::ONE);
        for f in factors {
            let n = f.norm();
            if n == 0.0 {
                return Err(invalid("factors", "zero single-sensor state"));
            }
            v = v.kronecker(&f.unscale(n));
        }
        Self::normalized(v)
    }

    /// The product of per-sensor equal superpositions of `±s_i`.
    /// Sensors whose label is zero stay in their `0` level.
    pub fn separable_pm(levels: &SensorLevels, s: &[f64]) -> Result<Self> {
        if s.len() != levels.sensor_count() {
            return Err(Error::DimensionMismatch {
                expected: levels.sensor_count(),
                found: s.len(),
            });
        }
        let factors = s
            .iter()
            .enumerate()
            .map(|(site, &si)| {
                let sensor = levels.sensor(site);
                let find = |x: f64| {
                    sensor
                        .iter()
                        .position(|&l| (l - x).abs() <= LABEL_TOLERANCE)
                        .ok_or_else(|| invalid("s", format!("label {x} missing on sensor {site}")))
                };
                let mut v = CVector::zeros(sensor.len());
                v[find(si)?] += linalg::ONE;
                v[find(-si)?] += linalg::ONE;
                Ok(v)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::product(&factors)
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn inner(&self, other: &PureState) -> Complex64 {
        self.amplitudes.dotc(&other.amplitudes)
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn to_records(&self, levels: &SensorLevels) -> Vec<AmplitudeRecord> {
        levels
            .basis()
            .iter()
            .zip(self.amplitudes.iter())
            .map(|(b, a)| AmplitudeRecord {
                labels: b.0.clone(),
                re: a.re,
                im: a.im,
            })
            .collect()
    }

    pub fn from_records(levels: &SensorLevels, records: &[AmplitudeRecord]) -> Result<Self> {
        let mut v = CVector::zeros(levels.dim());
        for r in records {
            v[levels.require_index(&r.labels)?] = Complex64::new(r.re, r.im);
        }
        Self::new(v)
    }
}

/// Row-major serialized form of a density matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct DensityRecord {
    dim: usize,
    re: Vec<f64>,
    im: Vec<f64>,
}

/// Hermitian, unit-trace, positive semidefinite matrix over the product basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DensityRecord", into = "DensityRecord")]
pub struct DensityMatrix {
    matrix: CMatrix,
}

impl DensityMatrix {
    /// Validates Hermiticity (10⁻¹²), trace (10⁻¹⁰) and positivity (−10⁻⁹).
    pub fn new(matrix: CMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::DimensionMismatch {
                expected: matrix.nrows(),
                found: matrix.ncols(),
            });
        }
        let herm = linalg::hermiticity_error(&matrix);
        if herm > 1e-12 {
            return Err(Error::NotHermitian(herm));
        }
        let trace = matrix.trace().re;
        if (trace - 1.0).abs() > 1e-10 {
            return Err(invalid("density matrix", format!("trace is {trace}")));
        }
        let (values, _) = linalg::hermitian_eigen(&matrix);
        if let Some(&low) = values.first() {
            if low < -1e-9 {
                return Err(invalid("density matrix", format!("negative eigenvalue {low}")));
            }
        }
        Ok(Self { matrix })
    }

    /// Skips validation; for maps that preserve the invariants by construction.
    pub(crate) fn from_matrix_unchecked(matrix: CMatrix) -> Self {
        Self { matrix }
    }

    pub fn from_pure(psi: &PureState) -> Self {
        let a = psi.amplitudes();
        Self {
            matrix: a * a.adjoint(),
        }
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            matrix: CMatrix::identity(dim, dim).unscale(dim as f64),
        }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    pub fn element(&self, row: usize, col: usize) -> Complex64 {
        self.matrix[(row, col)]
    }

    pub fn populations(&self) -> Vec<f64> {
        self.matrix.diagonal().iter().map(|z| z.re).collect()
    }

    pub fn purity(&self) -> f64 {
        (&self.matrix * &self.matrix).trace().re
    }

    /// `⟨ψ|ρ|ψ⟩`
    pub fn fidelity_pure(&self, psi: &PureState) -> f64 {
        let a = psi.amplitudes();
        (a.adjoint() * &self.matrix * a)[(0, 0)].re
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        linalg::hermitian_eigen(&self.matrix).0
    }

    /// Trace distance `½‖ρ − σ‖₁`.
    pub fn trace_distance(&self, other: &DensityMatrix) -> f64 {
        let diff = &self.matrix - &other.matrix;
        0.5 * linalg::hermitian_eigen(&diff).0.iter().map(|v| v.abs()).sum::<f64>()
    }
}

impl TryFrom<DensityRecord> for DensityMatrix {
    type Error = Error;
    fn try_from(r: DensityRecord) -> Result<Self> {
        let n = r.dim * r.dim;
        if r.re.len() != n || r.im.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: r.re.len().min(r.im.len()),
            });
        }
        Self::new(CMatrix::from_fn(r.dim, r.dim, |i, j| {
            Complex64::new(r.re[i * r.dim + j], r.im[i * r.dim + j])
        }))
    }
}

impl From<DensityMatrix> for DensityRecord {
    fn from(d: DensityMatrix) -> Self {
        let dim = d.dim();
        let mut re = Vec::with_capacity(dim * dim);
        let mut im = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                re.push(d.matrix[(i, j)].re);
                im.push(d.matrix[(i, j)].im);
            }
        }
        Self { dim, re, im }
    }
}

/// Signal generator, diagonal in the sensor basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagonalGenerator {
    values: Vec<f64>,
}

impl DiagonalGenerator {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }

    /// `G[s] = scale · Σ_i field_i s_i`
    pub fn from_field_vector(levels: &SensorLevels, field: &[f64], scale: f64) -> Result<Self> {
        if field.len() != levels.sensor_count() {
            return Err(Error::DimensionMismatch {
                expected: levels.sensor_count(),
                found: field.len(),
            });
        }
        Ok(Self {
            values: levels.basis().iter().map(|b| scale * b.dot(field)).collect(),
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn value(&self, index: usize) -> f64 {
        self.values[index]
    }

    pub fn to_matrix(&self) -> CMatrix {
        CMatrix::from_diagonal(&DVector::from_iterator(
            self.dim(),
            self.values.iter().map(|&v| Complex64::new(v, 0.0)),
        ))
    }

    fn check(&self, dim: usize) -> Result<()> {
        if dim != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: dim,
            });
        }
        Ok(())
    }
}

/// `G[s] = κ t Σ_i f̃(x_i) s_i` for a unit-strength signal shape.
pub fn build_signal_generator(
    layout: &SensorLayout,
    signal: &FieldComponent,
    kappa: f64,
    t: f64,
    levels: &SensorLevels,
) -> Result<DiagonalGenerator> {
    if layout.len() != levels.sensor_count() {
        return Err(Error::DimensionMismatch {
            expected: levels.sensor_count(),
            found: layout.len(),
        });
    }
    let shape = signal.shape_vector(layout)?;
    DiagonalGenerator::from_field_vector(levels, &shape, kappa * t)
}

/// Phase accumulation `exp(−i B G)` under a diagonal generator.
pub trait Evolve: Sized {
    fn evolve(&self, g: &DiagonalGenerator, strength: f64) -> Result<Self>;
}

impl Evolve for PureState {
    fn evolve(&self, g: &DiagonalGenerator, strength: f64) -> Result<Self> {
        g.check(self.dim())?;
        let amplitudes = CVector::from_iterator(
            self.dim(),
            self.amplitudes
                .iter()
                .zip(g.values())
                .map(|(a, &v)| a * Complex64::from_polar(1.0, -strength * v)),
        );
        Ok(Self { amplitudes })
    }
}

impl Evolve for DensityMatrix {
    fn evolve(&self, g: &DiagonalGenerator, strength: f64) -> Result<Self> {
        g.check(self.dim())?;
        let v = g.values();
        let matrix = CMatrix::from_fn(self.dim(), self.dim(), |i, j| {
            self.matrix[(i, j)] * Complex64::from_polar(1.0, -strength * (v[i] - v[j]))
        });
        Ok(Self { matrix })
    }
}

pub fn evolve_signal<T: Evolve>(state: &T, g: &DiagonalGenerator, strength: f64) -> Result<T> {
    state.evolve(g, strength)
}

/// `⟨G²⟩ − ⟨G⟩²`
pub fn variance(g: &DiagonalGenerator, psi: &PureState) -> Result<f64> {
    g.check(psi.dim())?;
    let (mut m1, mut m2) = (0.0, 0.0);
    for (p, &v) in psi.probabilities().iter().zip(g.values()) {
        m1 += p * v;
        m2 += p * v * v;
    }
    Ok((m2 - m1 * m1).max(0.0))
}
