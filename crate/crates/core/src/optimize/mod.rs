//! Maximization of the classical Fisher information over separable states
//! and separable projective measurements.
//!
//! Search: Nelder-Mead from uniform random starts in `[-box, box]^P`,
//! followed by polishing rounds that rebuild the simplex around the best
//! vertex until a round gains less than the tolerance. Restarts are
//! independent tasks seeded from one master seed.

pub mod nelder_mead;
pub mod separable;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constants::{INTERROGATION_TIME, ION_SPACING, KAPPA};
use crate::dfs::enumerate_dfs;
use crate::error::{invalid, Result};
use crate::estimation::derive_seed;
use crate::fields::{FieldComponent, SensorLayout};
use crate::statespace::{build_signal_generator, DiagonalGenerator, SensorLevels};

pub use nelder_mead::{minimize, SimplexConfig, SimplexResult};
pub use separable::{measurement_basis, ObservableParams, OutcomeDistribution, SeparableProblem, SeparableStateParams};

/// Which sensor levels the separable protocol may use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Restriction {
    /// All six Zeeman levels per sensor (141 parameters).
    FullSixLevel,
    /// The two levels `{±1}`, `{±2}`, `{±1}` of the experiment (21 parameters).
    BoldTwoLevel,
}

impl Restriction {
    pub fn levels(self) -> SensorLevels {
        match self {
            Self::FullSixLevel => SensorLevels::full_d52(3).expect("valid preset"),
            Self::BoldTwoLevel => SensorLevels::bold(),
        }
    }
}

/// Constant and gradient noise, quadratic signal, three ions at the experiment spacing.
pub fn experiment_problem(restriction: Restriction) -> Result<(SeparableProblem, DiagonalGenerator)> {
    let levels = restriction.levels();
    let layout = SensorLayout::equidistant(3, ION_SPACING)?;
    let census = enumerate_dfs(&levels, &layout, &[FieldComponent::constant(), FieldComponent::linear()])?;
    let g = build_signal_generator(&layout, &FieldComponent::quadratic(), KAPPA, INTERROGATION_TIME, &levels)?;
    Ok((SeparableProblem::new(&levels, &census, &g)?, g))
}

/// Settings of the restarted search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub restarts: usize,
    /// Half-width of the uniform box for random starts.
    pub start_box: f64,
    pub simplex: SimplexConfig,
    /// Cap on simplex rebuilds around the incumbent per restart.
    pub polish_rounds: usize,
    /// Minimal relative gain of a polishing round to continue.
    pub polish_tolerance: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            restarts: 10,
            start_box: 1.0,
            simplex: SimplexConfig::default(),
            polish_rounds: 4,
            polish_tolerance: 1e-8,
        }
    }
}

/// Outcome of one restart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestartRecord {
    pub restart: usize,
    pub seed: u64,
    pub initial: f64,
    pub best: f64,
    pub evaluations: usize,
    pub rounds: usize,
    pub converged: bool,
}

/// Best parameters over all restarts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationResult {
    pub parameters: Vec<f64>,
    pub best: f64,
    pub restarts: Vec<RestartRecord>,
}

/// Local search from `x0`: Nelder-Mead, then rebuilt simplices around the
/// incumbent until a round gains less than the tolerance.
pub fn local_search(problem: &SeparableProblem, x0: &[f64], eps: f64, config: &OptimizerConfig) -> (Vec<f64>, f64, usize, usize, bool) {
    let objective = |x: &[f64]| -problem.objective_lenient(x, eps);
    let mut evaluations = 0;
    let mut run = minimize(objective, x0, &config.simplex);
    evaluations += run.evaluations;
    let mut rounds = 1;
    let mut step = config.simplex.initial_step;
    let mut converged = run.converged;
    while rounds < config.polish_rounds.max(1) {
        step = (step * 0.5).max(1e-3);
        let cfg = SimplexConfig {
            initial_step: step,
            ..config.simplex
        };
        let next = minimize(objective, &run.x, &cfg);
        evaluations += next.evaluations;
        rounds += 1;
        let gain = run.value - next.value;
        let improved = next.value < run.value;
        if improved {
            run = SimplexResult { evaluations: 0, ..next };
        }
        converged = run.converged;
        if gain <= config.polish_tolerance * run.value.abs().max(1e-300) {
            break;
        }
    }
    (run.x, -run.value, evaluations, rounds, converged)
}

/// Restarted maximization of the objective (noise-free when `eps = 0`).
pub fn optimize_problem(problem: &SeparableProblem, config: &OptimizerConfig, seed: u64, eps: f64) -> Result<OptimizationResult> {
    if config.restarts == 0 {
        return Err(invalid("restarts", "need at least one restart"));
    }
    if !(config.start_box > 0.0) {
        return Err(invalid("start_box", "must be positive"));
    }
    if !(0.0..=1.0).contains(&eps) {
        return Err(invalid("epsilon", "must lie in [0, 1]"));
    }
    let dim = problem.parameter_count();
    let runs: Vec<(Vec<f64>, RestartRecord)> = (0..config.restarts)
        .into_par_iter()
        .map(|r| {
            let s = derive_seed(seed, r as u64);
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            let x0: Vec<f64> = (0..dim).map(|_| rng.random_range(-config.start_box..config.start_box)).collect();
            let initial = problem.objective_lenient(&x0, eps);
            let (x, best, evaluations, rounds, converged) = local_search(problem, &x0, eps, config);
            log::info!("restart {r}: F = {best:.6e} after {evaluations} evaluations");
            (
                x,
                RestartRecord {
                    restart: r,
                    seed: s,
                    initial,
                    best,
                    evaluations,
                    rounds,
                    converged,
                },
            )
        })
        .collect();
    let (parameters, best) = runs
        .iter()
        .fold((Vec::new(), f64::NEG_INFINITY), |(bx, bf), (x, rec)| {
            if rec.best > bf {
                (x.clone(), rec.best)
            } else {
                (bx, bf)
            }
        });
    Ok(OptimizationResult {
        parameters,
        best,
        restarts: runs.into_iter().map(|(_, r)| r).collect(),
    })
}

/// [`optimize_problem`] on the experiment's noise and signal.
pub fn optimize_cfi(restriction: Restriction, config: &OptimizerConfig, seed: u64) -> Result<OptimizationResult> {
    let (problem, _) = experiment_problem(restriction)?;
    optimize_problem(&problem, config, seed, 0.0)
}

/// CFI at `params` with outcome probabilities mixed as `(1−ε)p + ε/D`.
pub fn robustness_check(problem: &SeparableProblem, params: &[f64], eps: f64) -> Result<f64> {
    let (s, o) = problem.split(params)?;
    problem.distribution(&s, &o)?.depolarized_cfi(eps)
}

/// Re-optimization under outcome depolarization, started from a noise-free optimum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessRun {
    pub epsilon: f64,
    /// Depolarized CFI at the noise-free optimum.
    pub at_noise_free_optimum: f64,
    /// Depolarized CFI after re-optimization.
    pub reoptimized: f64,
    /// Noise-free CFI at the re-optimized parameters.
    pub noise_free_at_reoptimized: f64,
}

impl RobustnessRun {
    /// The re-optimized point keeps at least `fraction` of the noise-free optimum.
    pub fn keeps_optimum(&self, noise_free_best: f64, fraction: f64) -> bool {
        self.noise_free_at_reoptimized >= fraction * noise_free_best
    }
}

pub fn reoptimize_depolarized(problem: &SeparableProblem, optimum: &[f64], eps: f64, config: &OptimizerConfig) -> Result<RobustnessRun> {
    let at = robustness_check(problem, optimum, eps)?;
    let (x, f, _, _, _) = local_search(problem, optimum, eps, config);
    let (reoptimized, x) = if f >= at { (f, x) } else { (at, optimum.to_vec()) };
    Ok(RobustnessRun {
        epsilon: eps,
        at_noise_free_optimum: at,
        reoptimized,
        noise_free_at_reoptimized: problem.objective_lenient(&x, 0.0),
    })
}
