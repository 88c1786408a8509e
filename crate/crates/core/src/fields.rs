//! Spatial field components over a line of sensors and the noise matrix
//! whose kernel decides whether a protected subspace exists.
//!
//! Positions are in µm. Polynomial components follow the Taylor convention
//! `f(x) = x^k / k!`, so a quadratic component of strength `B^q` contributes
//! `B^q x² / 2` and keeps `B^q` in pT/µm².

use itertools::Itertools;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg;

/// Unit-strength spatial profile of a field component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum FieldShape {
    /// `x^k / k!`
    Polynomial { order: u32 },
    /// One sample per sensor position.
    Tabulated { samples: Vec<f64> },
}

/// A scalar field component: a spatial shape scaled by a strength.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldComponent {
    pub shape: FieldShape,
    pub strength: f64,
}

impl FieldComponent {
    pub fn polynomial(order: u32, strength: f64) -> Self {
        Self {
            shape: FieldShape::Polynomial { order },
            strength,
        }
    }

    /// Unit-strength Taylor component of the given order.
    pub fn taylor(order: u32) -> Self {
        Self::polynomial(order, 1.0)
    }

    pub fn constant() -> Self {
        Self::taylor(0)
    }

    pub fn linear() -> Self {
        Self::taylor(1)
    }

    pub fn quadratic() -> Self {
        Self::taylor(2)
    }

    pub fn tabulated(samples: Vec<f64>, strength: f64) -> Self {
        Self {
            shape: FieldShape::Tabulated { samples },
            strength,
        }
    }

    /// Same shape with unit strength.
    pub fn unit(&self) -> Self {
        Self {
            shape: self.shape.clone(),
            strength: 1.0,
        }
    }

    /// Unit-strength shape values over the layout.
    pub fn shape_vector(&self, layout: &SensorLayout) -> Result<Vec<f64>> {
        match &self.shape {
            FieldShape::Polynomial { order } => Ok(layout
                .positions()
                .iter()
                .map(|&x| taylor_term(x, *order))
                .collect()),
            FieldShape::Tabulated { samples } => {
                if samples.len() != layout.len() {
                    return Err(Error::DimensionMismatch {
                        expected: layout.len(),
                        found: samples.len(),
                    });
                }
                Ok(samples.clone())
            }
        }
    }
}

fn taylor_term(x: f64, order: u32) -> f64 {
    let factorial: f64 = (1..=order).map(f64::from).product();
    x.powi(order as i32) / factorial
}

/// Sensor positions along one axis, strictly increasing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct SensorLayout {
    positions: Vec<f64>,
}

impl SensorLayout {
    pub fn new(positions: Vec<f64>) -> Result<Self> {
        if positions.is_empty() {
            return Err(Error::Empty("sensor positions"));
        }
        if positions.iter().any(|x| !x.is_finite()) {
            return Err(invalid("positions", "positions must be finite"));
        }
        if positions.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("positions", "positions must be strictly increasing"));
        }
        Ok(Self { positions })
    }

    /// `count` sensors spaced by `spacing`, centered on the origin.
    pub fn equidistant(count: usize, spacing: f64) -> Result<Self> {
        if spacing <= 0.0 {
            return Err(invalid("spacing", "must be positive"));
        }
        let center = (count as f64 - 1.0) / 2.0;
        Self::new((0..count).map(|i| (i as f64 - center) * spacing).collect())
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Common neighbor distance, if the layout is equidistant.
    pub fn spacing(&self) -> Option<f64> {
        let mut gaps = self.positions.windows(2).map(|w| w[1] - w[0]);
        let first = gaps.next()?;
        gaps.all(|g| (g - first).abs() <= 1e-12 * first.abs().max(1.0))
            .then_some(first)
    }
}

impl TryFrom<Vec<f64>> for SensorLayout {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<SensorLayout> for Vec<f64> {
    fn from(l: SensorLayout) -> Self {
        l.positions
    }
}

/// Field strength of `component` at every sensor: `strength * f(x_i)`.
pub fn field_vector(component: &FieldComponent, layout: &SensorLayout) -> Result<Vec<f64>> {
    Ok(component
        .shape_vector(layout)?
        .into_iter()
        .map(|v| v * component.strength)
        .collect())
}

/// Rows are unit-strength noise profiles evaluated at the sensors.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseMatrix {
    entries: DMatrix<f64>,
}

impl NoiseMatrix {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map(Vec::len).ok_or(Error::Empty("noise rows"))?;
        if let Some(bad) = rows.iter().find(|r| r.len() != cols) {
            return Err(Error::DimensionMismatch {
                expected: cols,
                found: bad.len(),
            });
        }
        Ok(Self {
            entries: DMatrix::from_fn(rows.len(), cols, |r, c| rows[r][c]),
        })
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn noise_count(&self) -> usize {
        self.entries.nrows()
    }

    pub fn sensor_count(&self) -> usize {
        self.entries.ncols()
    }

    pub fn row(&self, j: usize) -> Vec<f64> {
        self.entries.row(j).iter().copied().collect()
    }

    pub fn rank(&self) -> usize {
        linalg::rank(&self.entries)
    }

    fn select_columns(&self, cols: &[usize]) -> Self {
        Self {
            entries: self.entries.select_columns(cols),
        }
    }
}

/// Stacks the unit-strength field vectors of the noise components.
pub fn noise_matrix(noise: &[FieldComponent], layout: &SensorLayout) -> Result<NoiseMatrix> {
    if noise.is_empty() {
        return Err(Error::Empty("noise components"));
    }
    let rows = noise
        .iter()
        .map(|c| c.shape_vector(layout))
        .collect::<Result<Vec<_>>>()?;
    NoiseMatrix::from_rows(&rows)
}

/// A protected subspace exists iff `rank(Q)` is below the number of sensors.
pub fn dfs_exists(q: &NoiseMatrix) -> bool {
    q.rank() < q.sensor_count()
}

/// The single kernel direction of `Q`, scaled to a maximal absolute component
/// of one with the first nonzero component positive.
pub fn kernel_direction(q: &NoiseMatrix) -> Result<Vec<f64>> {
    let kernel = linalg::null_space(q.entries());
    if kernel.ncols() != 1 {
        return Err(Error::KernelDimension(kernel.ncols()));
    }
    let v: Vec<f64> = kernel.column(0).iter().copied().collect();
    let max = v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    let mut r: Vec<f64> = v.iter().map(|x| x / max).collect();
    // snap float dust so the max component is exactly one and zeros stay zero
    for x in r.iter_mut() {
        if (x.abs() - 1.0).abs() < 1e-12 {
            *x = x.signum();
        } else if x.abs() < 1e-14 {
            *x = 0.0;
        }
    }
    let sign = r
        .iter()
        .find(|x| **x != 0.0)
        .map(|x| x.signum())
        .unwrap_or(1.0);
    Ok(r.into_iter().map(|x| x * sign).collect())
}

/// Smallest number of sensors, drawn from `candidate_positions`, for which a
/// protected subspace exists.
pub fn minimal_sensor_count(noise: &[FieldComponent], candidate_positions: &[f64]) -> Result<usize> {
    let mut sorted = candidate_positions.to_vec();
    sorted.sort_by(f64::total_cmp);
    let layout = SensorLayout::new(sorted)?;
    let full = noise_matrix(noise, &layout)?;
    // Tabulated samples are given in the caller's position order.
    let order: Vec<usize> = {
        let mut idx: Vec<usize> = (0..candidate_positions.len()).collect();
        idx.sort_by(|&a, &b| candidate_positions[a].total_cmp(&candidate_positions[b]));
        idx
    };
    let full = if noise
        .iter()
        .any(|c| matches!(c.shape, FieldShape::Tabulated { .. }))
    {
        let rows: Vec<Vec<f64>> = noise
            .iter()
            .map(|c| match &c.shape {
                FieldShape::Tabulated { samples } => order.iter().map(|&i| samples[i]).collect(),
                FieldShape::Polynomial { order: k } => layout
                    .positions()
                    .iter()
                    .map(|&x| taylor_term(x, *k))
                    .collect(),
            })
            .collect();
        NoiseMatrix::from_rows(&rows)?
    } else {
        full
    };
    for size in 1..=layout.len() {
        if (0..layout.len())
            .combinations(size)
            .any(|cols| dfs_exists(&full.select_columns(&cols)))
        {
            return Ok(size);
        }
    }
    Err(Error::NoDfs)
}
