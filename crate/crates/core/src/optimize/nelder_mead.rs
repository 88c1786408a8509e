//! Nelder-Mead simplex minimization with dimension-adaptive coefficients.

use serde::{Deserialize, Serialize};

/// Stopping rules and the initial simplex size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimplexConfig {
    /// Edge length of the initial axis-aligned simplex.
    pub initial_step: f64,
    /// Converged once all vertex values lie within this of the best.
    pub f_tolerance: f64,
    /// Converged once all vertices lie within this (max-norm) of the best.
    pub x_tolerance: f64,
    pub max_evaluations: usize,
}

impl Default for SimplexConfig {
    fn default() -> Self {
        Self {
            initial_step: 0.25,
            f_tolerance: 1e-8,
            x_tolerance: 1e-7,
            max_evaluations: 50_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimplexResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
    pub converged: bool,
}

/// Minimizes `f` from `x0`. Non-finite values are treated as `+∞`.
pub fn minimize<F: FnMut(&[f64]) -> f64>(mut f: F, x0: &[f64], config: &SimplexConfig) -> SimplexResult {
    let n = x0.len();
    let mut evals = 0usize;
    let mut eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        let v = f(x);
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    };
    if n == 0 {
        let value = eval(x0, &mut evals);
        return SimplexResult {
            x: Vec::new(),
            value,
            evaluations: evals,
            converged: true,
        };
    }
    let nf = n as f64;
    // Gao & Han coefficients
    let alpha = 1.0;
    let beta = 1.0 + 2.0 / nf;
    let gamma = 0.75 - 0.5 / nf;
    let delta = 1.0 - 1.0 / nf;

    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    simplex.push(x0.to_vec());
    for i in 0..n {
        let mut v = x0.to_vec();
        v[i] += config.initial_step;
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| eval(v, &mut evals)).collect();
    let mut order: Vec<usize> = (0..=n).collect();
    let mut centroid = vec![0.0; n];
    let mut trial = vec![0.0; n];
    let mut trial2 = vec![0.0; n];
    let mut converged = false;

    while evals < config.max_evaluations {
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        let best = order[0];
        let worst = order[n];
        let second = order[n - 1];

        let f_spread = values[worst] - values[best];
        let x_spread = simplex
            .iter()
            .flat_map(|v| v.iter().zip(&simplex[best]).map(|(a, b)| (a - b).abs()))
            .fold(0.0_f64, f64::max);
        if f_spread.abs() <= config.f_tolerance && x_spread <= config.x_tolerance
            || (f_spread == 0.0 && values[best].is_finite())
        {
            converged = true;
            break;
        }

        centroid.iter_mut().for_each(|c| *c = 0.0);
        for &i in &order[..n] {
            for (c, x) in centroid.iter_mut().zip(&simplex[i]) {
                *c += x;
            }
        }
        centroid.iter_mut().for_each(|c| *c /= nf);

        let along = |t: &mut Vec<f64>, coef: f64, simplex: &Vec<Vec<f64>>| {
            for ((ti, ci), wi) in t.iter_mut().zip(&centroid).zip(&simplex[worst]) {
                *ti = ci + coef * (ci - wi);
            }
        };

        along(&mut trial, alpha, &simplex);
        let fr = eval(&trial, &mut evals);
        if fr < values[best] {
            along(&mut trial2, alpha * beta, &simplex);
            let fe = eval(&trial2, &mut evals);
            if fe < fr {
                simplex[worst].copy_from_slice(&trial2);
                values[worst] = fe;
            } else {
                simplex[worst].copy_from_slice(&trial);
                values[worst] = fr;
            }
            continue;
        }
        if fr < values[second] {
            simplex[worst].copy_from_slice(&trial);
            values[worst] = fr;
            continue;
        }
        let outside = fr < values[worst];
        let coef = if outside { alpha * gamma } else { -gamma };
        along(&mut trial2, coef, &simplex);
        let fc = eval(&trial2, &mut evals);
        let accept = if outside { fc <= fr } else { fc < values[worst] };
        if accept {
            simplex[worst].copy_from_slice(&trial2);
            values[worst] = fc;
            continue;
        }
        // shrink toward the best vertex
        let anchor = simplex[best].clone();
        for &i in &order[1..] {
            for (x, a) in simplex[i].iter_mut().zip(&anchor) {
                *x = a + delta * (*x - a);
            }
            values[i] = eval(&simplex[i], &mut evals);
        }
    }
    let best = (0..=n).min_by(|&a, &b| values[a].total_cmp(&values[b])).unwrap_or(0);
    SimplexResult {
        x: simplex[best].clone(),
        value: values[best],
        evaluations: evals,
        converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_bowl() {
        let r = minimize(
            |x| (x[0] - 1.0).powi(2) + 10.0 * (x[1] + 2.0).powi(2) + x[2] * x[2],
            &[0.0, 0.0, 0.0],
            &SimplexConfig::default(),
        );
        assert!(r.converged);
        assert!((r.x[0] - 1.0).abs() < 1e-4 && (r.x[1] + 2.0).abs() < 1e-4 && r.x[2].abs() < 1e-4);
    }

    #[test]
    fn rosenbrock() {
        let cfg = SimplexConfig {
            f_tolerance: 1e-14,
            x_tolerance: 1e-10,
            ..SimplexConfig::default()
        };
        let r = minimize(|x| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2), &[-1.2, 1.0], &cfg);
        assert!((r.x[0] - 1.0).abs() < 1e-5 && (r.x[1] - 1.0).abs() < 1e-5, "{:?}", r);
    }

    #[test]
    fn non_finite_values_are_avoided() {
        let r = minimize(
            |x| if x[0] < 0.0 { f64::NAN } else { (x[0] - 0.5).powi(2) },
            &[1.0],
            &SimplexConfig::default(),
        );
        assert!((r.x[0] - 0.5).abs() < 1e-4);
    }

    #[test]
    fn evaluation_cap() {
        let cfg = SimplexConfig {
            max_evaluations: 50,
            ..SimplexConfig::default()
        };
        let r = minimize(|x| x.iter().map(|v| v.sin()).sum(), &[0.3; 10], &cfg);
        assert!(r.evaluations <= 50 + 11);
    }
}
