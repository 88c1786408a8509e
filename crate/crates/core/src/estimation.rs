//! Parity shot sampling, the analytic phase MLE, normalized RMSE and
//! Monte Carlo estimation campaigns.
//!
//! Randomness: every `(signal, repeat)` task draws from its own ChaCha8
//! stream, `ChaCha8Rng::seed_from_u64(master)` with stream
//! `(signal_index << 32) | repeat`, so results do not depend on scheduling.

use std::f64::consts::PI;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::metrology::ParityModel;

/// Outcome counts of `N` parity shots.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShotRecord {
    pub shots: u64,
    pub plus: u64,
}

impl ShotRecord {
    pub fn new(shots: u64, plus: u64) -> Result<Self> {
        if shots == 0 {
            return Err(invalid("shots", "N must be ≥ 1"));
        }
        if plus > shots {
            return Err(invalid("plus", "more plus outcomes than shots"));
        }
        Ok(Self { shots, plus })
    }

    pub fn minus(&self) -> u64 {
        self.shots - self.plus
    }

    /// `(N₊ − N₋)/N`
    pub fn parity(&self) -> f64 {
        (self.plus as f64 - self.minus() as f64) / self.shots as f64
    }
}

/// Random stream for one `(signal, repeat)` task.
pub fn task_rng(master: u64, signal_index: u32, repeat: u32) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream((u64::from(signal_index) << 32) | u64::from(repeat));
    rng
}

/// Independent child seed for a labeled sub-run.
pub fn derive_seed(master: u64, tag: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(tag.wrapping_add(1) << 48);
    rng.next_u64()
}

/// Draws `N₊ ~ Binomial(N, p₊)` from the given generator.
pub fn sample_shots_with<R: Rng + ?Sized>(model: &ParityModel, b: f64, phi_r: f64, shots: u64, rng: &mut R) -> Result<ShotRecord> {
    if shots == 0 {
        return Err(invalid("shots", "N must be ≥ 1"));
    }
    let p = model.probabilities(b, phi_r)[0].clamp(0.0, 1.0);
    let dist = Binomial::new(shots, p).map_err(|e| invalid("p", e.to_string()))?;
    ShotRecord::new(shots, dist.sample(rng))
}

/// [`sample_shots_with`] from a fresh generator seeded by `seed`.
pub fn sample_shots(model: &ParityModel, b: f64, phi_r: f64, shots: u64, seed: u64) -> Result<ShotRecord> {
    sample_shots_with(model, b, phi_r, shots, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// Half-period `µ = ⌊Φ/π⌋` holding the total phase.
pub fn fringe_index(model: &ParityModel, b: f64, phi_r: f64) -> i64 {
    (model.total_phase(b, phi_r) / PI).floor() as i64
}

/// Inverts the parity fringe inside half-period `µ`:
/// `Φ̂ = 2π⌊(µ+1)/2⌋ + (−1)^µ arccos(P/A)` with `P/A` clamped to `[−1, 1]`,
/// then `B̂ = (Φ̂ − l φ_r − φ₀)/ω`.
pub fn mle(parity: f64, model: &ParityModel, phi_r: f64, mu: i64) -> Result<f64> {
    if model.amplitude == 0.0 {
        return Err(invalid("amplitude", "A = 0 carries no phase information"));
    }
    let theta = (parity / model.amplitude).clamp(-1.0, 1.0).acos();
    let sign = if mu.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    let phase = 2.0 * PI * (mu + 1).div_euclid(2) as f64 + sign * theta;
    Ok((phase - f64::from(model.sensors) * phi_r - model.offset) / model.omega)
}

/// [`mle`] applied to a shot record.
pub fn mle_record(record: &ShotRecord, model: &ParityModel, phi_r: f64, mu: i64) -> Result<f64> {
    mle(record.parity(), model, phi_r, mu)
}

/// `√(N/M · Σ (B_cal − B̂_i)²)`
pub fn normalized_rmse(estimates: &[f64], truth: f64, shots: u64) -> Result<f64> {
    if estimates.is_empty() {
        return Err(Error::Empty("estimates"));
    }
    let ms: f64 = estimates.iter().map(|e| (e - truth).powi(2)).sum::<f64>() / estimates.len() as f64;
    Ok((shots as f64 * ms).sqrt())
}

/// Whether `mod_π(Φ)` lies in `π/2 ± half_width`.
pub fn in_window(phase: f64, half_width: f64) -> bool {
    (phase.rem_euclid(PI) - PI / 2.0).abs() <= half_width
}

/// Analysis phases whose total phase at `b` falls inside the window.
pub fn select_phases(model: &ParityModel, b: f64, grid: &[f64], half_width: f64) -> Vec<f64> {
    grid.iter()
        .copied()
        .filter(|&phi| in_window(model.total_phase(b, phi), half_width))
        .collect()
}

/// Equal-width histogram.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn centers(&self) -> Vec<f64> {
        self.edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// Histogram of `values` with `bins` equal bins over their range.
pub fn histogram(values: &[f64], bins: usize) -> Result<Histogram> {
    if values.is_empty() {
        return Err(Error::Empty("histogram values"));
    }
    if bins == 0 {
        return Err(invalid("bins", "need at least one bin"));
    }
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if hi <= lo {
        hi = lo + 1.0;
    }
    let width = (hi - lo) / bins as f64;
    let edges = (0..=bins).map(|k| lo + k as f64 * width).collect();
    let mut counts = vec![0; bins];
    for &v in values {
        let k = (((v - lo) / width) as usize).min(bins - 1);
        counts[k] += 1;
    }
    Ok(Histogram { edges, counts })
}

/// Settings of a Monte Carlo estimation campaign.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignConfig {
    pub signals: Vec<f64>,
    pub phase_grid: Vec<f64>,
    pub shots: u64,
    pub repeats: usize,
    pub window: f64,
    pub seed: u64,
    pub bins: usize,
}

impl CampaignConfig {
    pub fn validate(&self) -> Result<()> {
        if self.signals.is_empty() {
            return Err(Error::Empty("signals"));
        }
        if self.phase_grid.is_empty() {
            return Err(Error::Empty("phase grid"));
        }
        if self.shots == 0 {
            return Err(invalid("shots", "N must be ≥ 1"));
        }
        if self.repeats == 0 {
            return Err(invalid("repeats", "M must be ≥ 1"));
        }
        if !(self.window > 0.0 && self.window <= PI / 2.0) {
            return Err(invalid("window", "half-width must lie in (0, π/2]"));
        }
        if self.bins == 0 {
            return Err(invalid("bins", "need at least one bin"));
        }
        Ok(())
    }
}

/// Estimates and statistics for one calibrated signal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalResult {
    pub signal: f64,
    pub phases: Vec<f64>,
    pub estimates: Vec<f64>,
    pub mean: f64,
    pub std: f64,
    pub standard_error: f64,
    pub rmse: f64,
    /// Monte Carlo standard error of `rmse` (delta method).
    pub rmse_error: f64,
    pub histogram: Histogram,
}

impl SignalResult {
    pub fn bias(&self) -> f64 {
        self.mean - self.signal
    }
}

/// Per-signal results and the average normalized RMSE.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignResult {
    pub model: ParityModel,
    pub shots: u64,
    pub signals: Vec<SignalResult>,
    /// Mean of the per-signal RMSEs weighted by estimate count.
    pub average_rmse: f64,
    pub average_rmse_error: f64,
}

/// Runs `M` estimates of `N` shots for every signal. Repeat `j` uses the
/// `j mod K`-th of the `K` selected analysis phases.
pub fn run_campaign(model: &ParityModel, config: &CampaignConfig) -> Result<CampaignResult> {
    model.validate()?;
    config.validate()?;
    let shots = config.shots;
    let signals = config
        .signals
        .iter()
        .enumerate()
        .map(|(k, &b)| {
            let phases = select_phases(model, b, &config.phase_grid, config.window);
            if phases.is_empty() {
                return Err(Error::EmptyWindow { signal: b });
            }
            let estimates = (0..config.repeats)
                .into_par_iter()
                .map(|j| {
                    let phi = phases[j % phases.len()];
                    let mut rng = task_rng(config.seed, k as u32, j as u32);
                    let record = sample_shots_with(model, b, phi, shots, &mut rng)?;
                    mle_record(&record, model, phi, fringe_index(model, b, phi))
                })
                .collect::<Result<Vec<f64>>>()?;
            summarize(b, phases, estimates, shots, config.bins)
        })
        .collect::<Result<Vec<_>>>()?;
    let weight: usize = signals.iter().map(|s| s.estimates.len()).sum();
    let average_rmse = signals
        .iter()
        .map(|s| s.rmse * s.estimates.len() as f64)
        .sum::<f64>()
        / weight as f64;
    let average_rmse_error = signals
        .iter()
        .map(|s| (s.rmse_error * s.estimates.len() as f64).powi(2))
        .sum::<f64>()
        .sqrt()
        / weight as f64;
    Ok(CampaignResult {
        model: *model,
        shots,
        signals,
        average_rmse,
        average_rmse_error,
    })
}

fn summarize(signal: f64, phases: Vec<f64>, estimates: Vec<f64>, shots: u64, bins: usize) -> Result<SignalResult> {
    let m = estimates.len() as f64;
    let mean = estimates.iter().sum::<f64>() / m;
    let var = if estimates.len() > 1 {
        estimates.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (m - 1.0)
    } else {
        0.0
    };
    let rmse = normalized_rmse(&estimates, signal, shots)?;
    let sq: Vec<f64> = estimates.iter().map(|e| shots as f64 * (e - signal).powi(2)).collect();
    let sq_mean = sq.iter().sum::<f64>() / m;
    let sq_var = sq.iter().map(|x| (x - sq_mean).powi(2)).sum::<f64>() / (m - 1.0).max(1.0);
    let rmse_error = if rmse > 0.0 {
        (sq_var / m).sqrt() / (2.0 * rmse)
    } else {
        0.0
    };
    Ok(SignalResult {
        signal,
        phases,
        histogram: histogram(&estimates, bins)?,
        mean,
        std: var.sqrt(),
        standard_error: (var / m).sqrt(),
        rmse,
        rmse_error,
        estimates,
    })
}

/// Cramér-Rao line of a campaign: per signal `√(mean 1/F)` over the
/// selected phases, averaged across signals. Normalized like the RMSE.
pub fn cfi_line(model: &ParityModel, signals: &[f64], grid: &[f64], window: f64) -> Result<f64> {
    if signals.is_empty() {
        return Err(Error::Empty("signals"));
    }
    let mut acc = 0.0;
    for &b in signals {
        let phases = select_phases(model, b, grid, window);
        if phases.is_empty() {
            return Err(Error::EmptyWindow { signal: b });
        }
        let inv: f64 = phases.iter().map(|&phi| 1.0 / model.cfi(b, phi)).sum::<f64>() / phases.len() as f64;
        acc += inv.sqrt();
    }
    Ok(acc / signals.len() as f64)
}

/// RMSE of a phase guessed uniformly on `±π/2`, in field units: `(π/√12)/ω`.
pub fn random_guess_rmse(omega: f64) -> f64 {
    PI / 12f64.sqrt() / omega.abs()
}

/// Least-squares parity fit over an analysis-phase scan at fixed signal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParityFit {
    pub amplitude: f64,
    pub offset: f64,
    pub residual: f64,
}

/// Fits `P = A cos(ωB + l φ_r + φ₀)` for `A ≥ 0` and `φ₀ ∈ (−π, π]`.
pub fn fit_parity(phases: &[f64], parities: &[f64], omega: f64, b: f64, sensors: u32) -> Result<ParityFit> {
    if phases.len() != parities.len() {
        return Err(Error::DimensionMismatch {
            expected: phases.len(),
            found: parities.len(),
        });
    }
    if phases.len() < 2 {
        return Err(Error::Empty("parity scan needs two points"));
    }
    // P = c cos θ − s sin θ with c = A cos φ₀, s = A sin φ₀
    let (mut cc, mut ss, mut cs, mut pc, mut ps) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (&phi, &p) in phases.iter().zip(parities) {
        let theta = omega * b + f64::from(sensors) * phi;
        let (sn, cn) = theta.sin_cos();
        cc += cn * cn;
        ss += sn * sn;
        cs += cn * sn;
        pc += p * cn;
        ps += p * sn;
    }
    let det = cc * ss - cs * cs;
    if det.abs() < 1e-12 {
        return Err(invalid("phases", "scan does not resolve the fringe"));
    }
    let c = (pc * ss - ps * cs) / det;
    let s = -(ps * cc - pc * cs) / det;
    let amplitude = c.hypot(s);
    let offset = s.atan2(c);
    let residual = phases
        .iter()
        .zip(parities)
        .map(|(&phi, &p)| (p - amplitude * (omega * b + f64::from(sensors) * phi + offset).cos()).powi(2))
        .sum();
    Ok(ParityFit {
        amplitude,
        offset,
        residual,
    })
}

/// Simulated parity scans at each signal, fitted individually; the
/// amplitude is the average of the fitted amplitudes.
pub fn fit_campaign_amplitude(model: &ParityModel, signals: &[f64], grid: &[f64], shots: u64, seed: u64) -> Result<(f64, Vec<ParityFit>)> {
    let fits = signals
        .iter()
        .enumerate()
        .map(|(k, &b)| {
            let parities = grid
                .iter()
                .enumerate()
                .map(|(j, &phi)| {
                    let mut rng = task_rng(seed, k as u32, j as u32);
                    Ok(sample_shots_with(model, b, phi, shots, &mut rng)?.parity())
                })
                .collect::<Result<Vec<_>>>()?;
            fit_parity(grid, &parities, model.omega, b, model.sensors)
        })
        .collect::<Result<Vec<_>>>()?;
    let mean = fits.iter().map(|f| f.amplitude).sum::<f64>() / fits.len().max(1) as f64;
    Ok((mean, fits))
}

/// One row of the shot-scaling study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub shots: u64,
    /// Unnormalized average RMSE per model.
    pub rmse: Vec<f64>,
    pub rmse_error: Vec<f64>,
    /// Cramér-Rao line `cfi_line/√N` per model.
    pub bound: Vec<f64>,
    /// `10 log₁₀(rmse[1]/rmse[0])` when two models are compared.
    pub improvement_db: Option<f64>,
    pub improvement_db_error: Option<f64>,
}

/// Shot-scaling study: for every `N`, the campaign of every model.
pub fn shots_scaling(models: &[ParityModel], shot_grid: &[u64], base: &CampaignConfig) -> Result<Vec<ScalingRow>> {
    if models.is_empty() {
        return Err(Error::Empty("models"));
    }
    shot_grid
        .iter()
        .enumerate()
        .map(|(k, &n)| {
            let mut rmse = Vec::new();
            let mut rmse_error = Vec::new();
            let mut bound = Vec::new();
            for (q, model) in models.iter().enumerate() {
                let config = CampaignConfig {
                    shots: n,
                    seed: derive_seed(base.seed, (k as u64) << 8 | q as u64),
                    ..base.clone()
                };
                let r = run_campaign(model, &config)?;
                let root = (n as f64).sqrt();
                rmse.push(r.average_rmse / root);
                rmse_error.push(r.average_rmse_error / root);
                bound.push(cfi_line(model, &base.signals, &base.phase_grid, base.window)? / root);
            }
            let (improvement_db, improvement_db_error) = if rmse.len() >= 2 {
                let db = 10.0 * (rmse[1] / rmse[0]).log10();
                let rel = ((rmse_error[0] / rmse[0]).powi(2) + (rmse_error[1] / rmse[1]).powi(2)).sqrt();
                (Some(db), Some(10.0 / std::f64::consts::LN_10 * rel))
            } else {
                (None, None)
            };
            Ok(ScalingRow {
                shots: n,
                rmse,
                rmse_error,
                bound,
                improvement_db,
                improvement_db_error,
            })
        })
        .collect()
}
