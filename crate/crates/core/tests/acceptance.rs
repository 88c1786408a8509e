//! End-to-end acceptance checks, one line per criterion.
//!
//! Tolerances are fixed below. Criteria listed in `EXPECTED_FAILURES` are
//! known not to hold for this model; they still print FAIL with the measured
//! numbers. The target fails if any other criterion fails, or if an expected
//! failure starts passing.

use std::f64::consts::PI;
use std::time::Instant;

use nalgebra::DMatrix;
use num_complex::Complex64;

use dfs_sensing::calib::{ac_stark_quadratic, StarkSetup};
use dfs_sensing::channels::{
    combined_error, damping_probability, decay_ghz_fidelity, depolarize_independent, overwhelming_dephasing,
};
use dfs_sensing::constants::*;
use dfs_sensing::dfs::{best_dfs, enumerate_dfs, optimal_state};
use dfs_sensing::estimation::{
    cfi_line, derive_seed, fringe_index, mle, mle_record, random_guess_rmse, run_campaign, sample_shots, shots_scaling,
    CampaignConfig,
};
use dfs_sensing::metrology::{improvement_db, parity_cfi, product_state_qfi, rmse_bound, ParityModel};
use dfs_sensing::optimize::{experiment_problem, optimize_problem, reoptimize_depolarized, OptimizerConfig, Restriction};
use dfs_sensing::scenario::{preset, protocol_models, sweep_row};
use dfs_sensing::statespace::{build_signal_generator, DensityMatrix, PureState, SensorLevels};
use dfs_sensing::tomography::{bootstrap_errorbars, ghz_fidelity, reconstruct_mle, register_ghz_pair, simulate_all_bases, MleConfig};
use dfs_sensing::{FieldComponent, SensorLayout};

const EXPECTED_FAILURES: &[u32] = &[6, 9, 10];

const BOUND_REL_TOL: f64 = 0.01;
const EXACT_TOL: f64 = 1e-12;
const SWEEP_TOL: f64 = 1e-9;
const DB_TARGET: f64 = 4.9;
const DB_TOL: f64 = 0.1;
const MC_REPEATS: usize = 500;
const RATIO_SEP: (f64, f64) = (2.6, 0.3);
const RATIO_IDEAL: (f64, f64) = (1.48, 0.12);
const BOLD_REL_TOL: f64 = 0.005;
const SIX_LEVEL_MIN: f64 = 3.2;
const ROBUSTNESS_EPS: [f64; 3] = [0.01, 0.05, 0.1];
/// The re-optimized point keeps this fraction of the noise-free optimum.
const ROBUSTNESS_KEEP: f64 = 0.98;
const GHZ_DROP: (f64, f64) = (0.09, 0.02);
const SEP_DROP: (f64, f64) = (0.06, 0.01);
const DAMPING: (f64, f64) = (0.07371, 1e-4);
const ORACLE_TOL: f64 = 1e-12;
const ROUND_TRIP_TOL: f64 = 1e-9;
const CONSISTENCY_SHOTS: u64 = 10_000;
const CONSISTENCY_REPEATS: usize = 2000;
const CONSISTENCY_REL_TOL: f64 = 0.05;
/// Bias and CRB comparisons allow this many Monte Carlo standard errors.
const MC_SIGMAS: f64 = 2.0;
const SCALING_REPEATS: usize = 2000;
const SCALING_GRID: [u64; 9] = [4, 8, 12, 16, 20, 24, 32, 48, 72];
const SWD_LINE_TOL: f64 = 0.10;
const GUESS_TOL: f64 = 0.15;
const TOMO_SHOTS: u64 = 480;
const TOMO_SEEDS: u64 = 100;
const TOMO_FIDELITY: f64 = 0.98;
const TOMO_FRACTION: f64 = 0.95;
const BOOTSTRAP_REPEATS: usize = 300;
const STARK_REL_TOL: f64 = 0.03;

type Criterion = (u32, &'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

/// Collects sub-checks of one criterion.
#[derive(Default)]
struct Checks {
    pass: bool,
    parts: Vec<String>,
    started: bool,
}

impl Checks {
    fn new() -> Self {
        Self {
            pass: true,
            ..Self::default()
        }
    }

    fn check(&mut self, ok: bool, text: String) {
        self.started = true;
        self.pass &= ok;
        self.parts.push(format!("{}{}", if ok { "" } else { "[x] " }, text));
    }

    fn done(self) -> Outcome {
        Outcome {
            pass: self.pass && self.started,
            detail: self.parts.join("; "),
        }
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a / b - 1.0).abs()
}

fn physical() -> SensorLayout {
    SensorLayout::equidistant(3, ION_SPACING).unwrap()
}

fn cl() -> Vec<FieldComponent> {
    vec![FieldComponent::constant(), FieldComponent::linear()]
}

fn criterion_1() -> Outcome {
    let w = experiment_omega();
    let mut c = Checks::new();
    for (label, fisher, want) in [("F=w^2", w * w, 2.462), ("w^2/16", w * w / 16.0, 9.847), ("3.3w^2/16", 3.3 * w * w / 16.0, 5.42)] {
        let got = rmse_bound(fisher).unwrap();
        c.check(rel(got, want) <= BOUND_REL_TOL, format!("{label}: {got:.4} vs {want}"));
    }
    c.done()
}

fn sorted_members(levels: &SensorLevels, members: &[usize]) -> Vec<Vec<f64>> {
    let mut v: Vec<Vec<f64>> = members.iter().map(|&i| levels.label(i).labels().to_vec()).collect();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v
}

fn census_lists(levels: &SensorLevels, noise: &[FieldComponent]) -> Vec<Vec<Vec<f64>>> {
    let unit = SensorLayout::new(vec![-1.0, 0.0, 1.0]).unwrap();
    let census = enumerate_dfs(levels, &unit, noise).unwrap();
    let mut lists: Vec<_> = census.subspaces.iter().map(|d| sorted_members(levels, d.members())).collect();
    lists.sort_by(|a, b| a.partial_cmp(b).unwrap());
    lists
}

fn expected_lists(lists: &[&[[f64; 3]]]) -> Vec<Vec<Vec<f64>>> {
    let mut out: Vec<Vec<Vec<f64>>> = lists
        .iter()
        .map(|l| {
            let mut v: Vec<Vec<f64>> = l.iter().map(|s| s.to_vec()).collect();
            v.sort_by(|a, b| a.partial_cmp(b).unwrap());
            v
        })
        .collect();
    out.sort_by(|a, b| a.partial_cmp(b).unwrap());
    out
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let mut c = Checks::new();
    let full = SensorLevels::full_d52(3).unwrap();
    let census = enumerate_dfs(&full, &physical(), &cl()).unwrap();
    let g = build_signal_generator(&physical(), &FieldComponent::quadratic(), KAPPA, INTERROGATION_TIME, &full).unwrap();
    let w = experiment_omega();
    let maximal = census.count_with_range(&g, w, 1e-9 * w);
    c.check(census.len() == 68 && maximal == 32, format!("full manifold: {} DFSs, {maximal} maximal", census.len()));

    let bold = SensorLevels::bold();
    let constant = expected_lists(&[
        &[[1.0, -2.0, 1.0], [-1.0, 2.0, -1.0]],
        &[[1.0, 2.0, -1.0], [-1.0, 2.0, 1.0]],
        &[[-1.0, -2.0, 1.0], [1.0, -2.0, -1.0]],
    ]);
    let gradient = expected_lists(&[
        &[[1.0, -2.0, 1.0], [1.0, 2.0, 1.0], [-1.0, -2.0, -1.0], [-1.0, 2.0, -1.0]],
        &[[1.0, 2.0, -1.0], [1.0, -2.0, -1.0]],
        &[[-1.0, 2.0, 1.0], [-1.0, -2.0, 1.0]],
    ]);
    let both = expected_lists(&[&[[1.0, -2.0, 1.0], [-1.0, 2.0, -1.0]]]);
    c.check(census_lists(&bold, &[FieldComponent::constant()]) == constant, "bold constant: 3 DFSs as listed".into());
    c.check(census_lists(&bold, &[FieldComponent::linear()]) == gradient, "bold gradient: 3 DFSs as listed".into());
    c.check(census_lists(&bold, &cl()) == both, "bold both: {|1,-2,1>, |-1,2,-1>}".into());
    let secs = start.elapsed().as_secs_f64();
    c.check(secs < 1.0, format!("{secs:.3} s"));
    c.done()
}

fn criterion_3() -> Outcome {
    let mut c = Checks::new();
    let levels = SensorLevels::bold();
    let census = enumerate_dfs(&levels, &physical(), &cl()).unwrap();
    let hi = levels.index_of(&[1.0, -2.0, 1.0]).unwrap();
    let lo = levels.index_of(&[-1.0, 2.0, -1.0]).unwrap();
    let sep = PureState::separable_pm(&levels, &[1.0, -2.0, 1.0]).unwrap();
    let out = overwhelming_dephasing(&DensityMatrix::from_pure(&sep), &census).unwrap();
    let a = 2.0 * out.element(hi, lo).norm();
    c.check((a - 0.25).abs() <= EXACT_TOL, format!("separable A = {a:.15}"));
    let g = build_signal_generator(&physical(), &FieldComponent::quadratic(), KAPPA, INTERROGATION_TIME, &levels).unwrap();
    let swd = optimal_state(best_dfs(&census.subspaces, &g).unwrap(), &g).unwrap();
    let rho = DensityMatrix::from_pure(&swd);
    let diff = (overwhelming_dephasing(&rho, &census).unwrap().matrix() - rho.matrix()).camax();
    c.check(diff <= EXACT_TOL, format!("SWD fixed point, max |diff| = {diff:.1e}"));
    c.done()
}

fn criterion_4() -> Outcome {
    let mut c = Checks::new();
    for m in 2..=7 {
        let row = sweep_row(m, ION_SPACING, KAPPA, INTERROGATION_TIME).unwrap();
        let closed = 2f64.powi(1 - m as i32) * row.delta * row.delta;
        // balanced per-sensor superposition in closed form: p(±s) = 2^-m each
        let per_pair = product_state_qfi(0.5f64.powi(m as i32), 0.5f64.powi(m as i32), row.delta);
        let ok = rel(row.separable_qfi, closed) <= SWEEP_TOL && rel(per_pair, closed) <= SWEEP_TOL;
        c.check(ok, format!("m={m}: sld/closed-1 = {:.1e}", row.separable_qfi / closed - 1.0));
    }
    c.done()
}

fn criterion_5() -> Outcome {
    let w = experiment_omega();
    let swd = rmse_bound(parity_cfi(AMPLITUDE_SWD, w, 1.5)).unwrap();
    let sep = rmse_bound(parity_cfi(AMPLITUDE_SEPARABLE, w, 1.5)).unwrap();
    let db = improvement_db(sep, swd).unwrap();
    let mut c = Checks::new();
    c.check((db - DB_TARGET).abs() <= DB_TOL, format!("{db:.3} dB"));
    c.done()
}

fn criterion_6() -> Outcome {
    let start = Instant::now();
    let mut c = Checks::new();
    let config = dfs_sensing::scenario::ScenarioConfig {
        repeats: MC_REPEATS,
        ..preset("paper-experiment").unwrap()
    };
    let models = protocol_models(&config, experiment_omega()).unwrap();
    let runs: Vec<_> = models
        .iter()
        .enumerate()
        .map(|(q, (_, m))| run_campaign(m, &dfs_sensing::scenario::campaign_config(&config, derive_seed(config.seed, q as u64))).unwrap())
        .collect();
    let (swd, sep, ideal) = (&runs[0], &runs[1], &runs[2]);
    let r_sep = sep.average_rmse / swd.average_rmse;
    let r_ideal = ideal.average_rmse / swd.average_rmse;
    c.check((r_sep - RATIO_SEP.0).abs() <= RATIO_SEP.1, format!("separable/SWD = {r_sep:.3}"));
    c.check(
        (r_ideal - RATIO_IDEAL.0).abs() <= RATIO_IDEAL.1,
        format!(
            "ideal-separable/SWD = {r_ideal:.3} (infinite-shot 1/(w/4) over SWD: {:.3})",
            rmse_bound(experiment_omega().powi(2) / 16.0).unwrap() / swd.average_rmse
        ),
    );
    let mut outside = Vec::new();
    for (name, r) in [("swd", swd), ("sep", sep), ("ideal", ideal)] {
        for s in &r.signals {
            if s.bias().abs() > s.standard_error {
                outside.push(format!("{name}@{}: {:+.2} SE", s.signal, s.bias() / s.standard_error));
            }
        }
    }
    c.check(outside.is_empty(), format!("means within 1 SE, outside: [{}]", outside.join(", ")));
    let secs = start.elapsed().as_secs_f64();
    c.check(secs < 60.0, format!("{secs:.2} s"));
    c.done()
}

fn criterion_7() -> Outcome {
    let start = Instant::now();
    let mut c = Checks::new();
    let w = experiment_omega();
    let unit = w * w / 16.0;
    let config = OptimizerConfig::default();
    let (bold, _) = experiment_problem(Restriction::BoldTwoLevel).unwrap();
    let r = optimize_problem(&bold, &config, 2024, 0.0).unwrap();
    c.check(rel(r.best, unit) <= BOLD_REL_TOL, format!("two-level F = {:.5} w^2/16", r.best / unit));

    let (six, _) = experiment_problem(Restriction::FullSixLevel).unwrap();
    let r = optimize_problem(&six, &config, 2024, 0.0).unwrap();
    c.check(
        r.best / unit >= SIX_LEVEL_MIN,
        format!("six-level F = {:.4} w^2/16 in {} restarts ({} params)", r.best / unit, config.restarts, six.parameter_count()),
    );
    for eps in ROBUSTNESS_EPS {
        let run = reoptimize_depolarized(&six, &r.parameters, eps, &config).unwrap();
        c.check(
            run.keeps_optimum(r.best, ROBUSTNESS_KEEP),
            format!("eps={eps}: noise-free F at re-optimum {:.4} w^2/16", run.noise_free_at_reoptimized / unit),
        );
    }
    let secs = start.elapsed().as_secs_f64();
    c.check(secs < 600.0, format!("{secs:.0} s"));
    c.done()
}

/// Independent oracle: full 27×27 Kraus products over all 3³ combinations.
fn kraus_oracle_fidelity(rho8: &DMatrix<Complex64>, p: f64) -> f64 {
    // qutrit order (g, e1, e2); qubit 0 -> e1, 1 -> e2
    let (g, e1, e2) = (0usize, 1usize, 2usize);
    let single = {
        let mut k0 = DMatrix::<Complex64>::zeros(3, 3);
        k0[(g, g)] = 1.0.into();
        k0[(e1, e1)] = (1.0 - p).sqrt().into();
        k0[(e2, e2)] = (1.0 - p).sqrt().into();
        let mut k1 = DMatrix::<Complex64>::zeros(3, 3);
        k1[(e1, e2)] = p.sqrt().into();
        let mut k2 = DMatrix::<Complex64>::zeros(3, 3);
        k2[(g, e1)] = p.sqrt().into();
        [k0, k1, k2]
    };
    let mut embed = DMatrix::<Complex64>::zeros(27, 8);
    for q in 0..8 {
        let idx = (0..3).fold(0, |acc, site| acc * 3 + if (q >> (2 - site)) & 1 == 0 { e1 } else { e2 });
        embed[(idx, q)] = 1.0.into();
    }
    let rho = &embed * rho8 * embed.adjoint();
    let mut out = DMatrix::<Complex64>::zeros(27, 27);
    for a in 0..3 {
        for b in 0..3 {
            for d in 0..3 {
                let k = single[a].kronecker(&single[b]).kronecker(&single[d]);
                out += &k * &rho * k.adjoint();
            }
        }
    }
    let mut x = DMatrix::<Complex64>::zeros(3, 3);
    x[(g, e1)] = 1.0.into();
    x[(e1, g)] = 1.0.into();
    x[(e2, e2)] = 1.0.into();
    let xxx = x.kronecker(&x).kronecker(&x);
    let out = &xxx * out * xxx.adjoint();
    let (i, j) = (0, 26);
    (out[(i, i)].re + out[(j, j)].re) / 2.0 + out[(i, j)].norm()
}

fn criterion_8() -> Outcome {
    let mut c = Checks::new();
    let p: Vec<f64> = ADDRESSING_ERROR.iter().map(|&a| combined_error(PI_PULSE_ERROR, a)).collect();
    let q = SensorLevels::qubits(3, 1.0).unwrap();
    let ghz = PureState::ghz(&q, &[-1.0; 3], &[1.0; 3], 0.0).unwrap();
    let rho = DensityMatrix::from_pure(&ghz);
    let drop = 1.0 - depolarize_independent(&rho, &p).unwrap().fidelity_pure(&ghz);
    c.check((drop - GHZ_DROP.0).abs() <= GHZ_DROP.1, format!("GHZ drop {drop:.4}"));
    let sep = PureState::separable_pm(&q, &[1.0; 3]).unwrap();
    let drop = 1.0 - depolarize_independent(&DensityMatrix::from_pure(&sep), &p).unwrap().fidelity_pure(&sep);
    c.check((drop - SEP_DROP.0).abs() <= SEP_DROP.1, format!("separable drop {drop:.4}"));
    let pd = damping_probability(INTERROGATION_TIME, D52_LIFETIME).unwrap();
    c.check((pd - DAMPING.0).abs() <= DAMPING.1, format!("p = {pd:.6}"));
    let mut worst: f64 = 0.0;
    let noisy = depolarize_independent(&rho, &p).unwrap();
    for state in [&rho, &noisy] {
        let lib = decay_ghz_fidelity(state, INTERROGATION_TIME, D52_LIFETIME).unwrap();
        worst = worst.max((lib - kraus_oracle_fidelity(state.matrix(), pd)).abs());
    }
    let lib_drop = 1.0 - decay_ghz_fidelity(&rho, INTERROGATION_TIME, D52_LIFETIME).unwrap();
    c.check(worst <= ORACLE_TOL, format!("decay drop {lib_drop:.5}, oracle diff {worst:.1e}"));
    c.done()
}

fn criterion_9() -> Outcome {
    let mut c = Checks::new();
    let w = experiment_omega();
    // (a) noiseless round trip inside every half-period
    let mut worst: f64 = 0.0;
    for (a, off) in [(AMPLITUDE_SWD, PHASE_OFFSET_SWD), (AMPLITUDE_SEPARABLE, PHASE_OFFSET_SEPARABLE), (1.0, 0.3)] {
        let model = ParityModel::new(a, w, off).unwrap().with_sensors(3);
        for k in 0..400 {
            let b = -20.0 + 0.1 * k as f64;
            for phi_r in [0.0, 0.4, 1.3, 2.9] {
                let phase = model.total_phase(b, phi_r).rem_euclid(PI);
                if !(0.05..=PI - 0.05).contains(&phase) {
                    continue;
                }
                let mu = fringe_index(&model, b, phi_r);
                let est = mle(model.parity(b, phi_r), &model, phi_r, mu).unwrap();
                worst = worst.max((est - b).abs());
            }
        }
    }
    c.check(worst <= ROUND_TRIP_TOL, format!("round trip max error {worst:.1e}"));

    // (b) consistency at N = 10^4 inside the window
    for (a, off) in [(AMPLITUDE_SWD, PHASE_OFFSET_SWD), (AMPLITUDE_SEPARABLE, PHASE_OFFSET_SEPARABLE)] {
        let model = ParityModel::new(a, w, off).unwrap().with_sensors(3);
        for target in [PI / 2.0 - 0.6, PI / 2.0, PI / 2.0 + 0.6] {
            let b = 7.6;
            let phi_r = (target - w * b - off) / 3.0;
            let mu = fringe_index(&model, b, phi_r);
            let est: Vec<f64> = (0..CONSISTENCY_REPEATS)
                .map(|r| {
                    let rec = sample_shots(&model, b, phi_r, CONSISTENCY_SHOTS, derive_seed(77, r as u64)).unwrap();
                    mle_record(&rec, &model, phi_r, mu).unwrap()
                })
                .collect();
            let m = est.len() as f64;
            let mean = est.iter().sum::<f64>() / m;
            let var = est.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (m - 1.0);
            let se = (var / m).sqrt();
            let nrmse = (CONSISTENCY_SHOTS as f64 * est.iter().map(|e| (e - b).powi(2)).sum::<f64>() / m).sqrt();
            let line = 1.0 / model.cfi(b, phi_r).sqrt();
            let ok = (mean - b).abs() <= MC_SIGMAS * se && rel(nrmse, line) <= CONSISTENCY_REL_TOL;
            c.check(ok, format!("A={a} Phi={target:.2}: bias {:+.1} SE, sqrtN*RMSE/line {:.3}", (mean - b) / se, nrmse / line));
        }
    }

    // (c) no configuration beats its Cramér-Rao line beyond Monte Carlo error
    let config = preset("paper-experiment").unwrap();
    let models = protocol_models(&config, w).unwrap();
    let grid = config.phase_grid();
    let mut beaten = Vec::new();
    for (q, (name, model)) in models.iter().enumerate() {
        let r = run_campaign(model, &dfs_sensing::scenario::campaign_config(&config, derive_seed(config.seed, q as u64))).unwrap();
        let line = cfi_line(model, &config.signals, &grid, config.window).unwrap();
        if r.average_rmse < line - MC_SIGMAS * r.average_rmse_error {
            beaten.push(format!("{name}@N=72: {:.3} < line {:.3}", r.average_rmse, line));
        }
    }
    let base = CampaignConfig {
        repeats: SCALING_REPEATS,
        ..dfs_sensing::scenario::campaign_config(&config, 5)
    };
    let rows = shots_scaling(&[models[0].1, models[1].1], &SCALING_GRID, &base).unwrap();
    for row in &rows {
        for (q, name) in ["swd", "sep"].iter().enumerate() {
            if row.rmse[q] < row.bound[q] - MC_SIGMAS * row.rmse_error[q] {
                beaten.push(format!("{name}@N={}: {:.3} < {:.3}", row.shots, row.rmse[q], row.bound[q]));
            }
        }
    }
    c.check(beaten.is_empty(), format!("CRB respected; violations: [{}]", beaten.join(", ")));
    c.done()
}

fn criterion_10() -> Outcome {
    let mut c = Checks::new();
    let w = experiment_omega();
    let config = preset("paper-experiment").unwrap();
    let models = protocol_models(&config, w).unwrap();
    let base = CampaignConfig {
        repeats: SCALING_REPEATS,
        ..dfs_sensing::scenario::campaign_config(&config, 6)
    };
    let rows = shots_scaling(&[models[0].1, models[1].1], &SCALING_GRID, &base).unwrap();
    let off: Vec<String> = rows
        .iter()
        .filter(|r| r.shots >= 16)
        .map(|r| format!("{}:{:+.1}%", r.shots, 100.0 * (r.rmse[0] / r.bound[0] - 1.0)))
        .collect();
    let ok = rows.iter().filter(|r| r.shots >= 16).all(|r| rel(r.rmse[0], r.bound[0]) <= SWD_LINE_TOL);
    c.check(ok, format!("SWD vs CFI line (N>=16) [{}]", off.join(" ")));
    let guess = random_guess_rmse(w);
    let off: Vec<String> = rows
        .iter()
        .filter(|r| r.shots <= 20)
        .map(|r| format!("{}:{:+.1}%", r.shots, 100.0 * (r.rmse[1] / guess - 1.0)))
        .collect();
    let ok = rows.iter().filter(|r| r.shots <= 20).all(|r| rel(r.rmse[1], guess) <= GUESS_TOL);
    c.check(ok, format!("separable vs random guess (N<=20) [{}]", off.join(" ")));
    let db: Vec<(f64, f64)> = rows.iter().map(|r| (r.improvement_db.unwrap(), r.improvement_db_error.unwrap())).collect();
    let monotone = db.windows(2).all(|p| p[1].0 >= p[0].0 - MC_SIGMAS * p[0].1.hypot(p[1].1));
    let grid = config.phase_grid();
    let limit = improvement_db(
        cfi_line(&models[1].1, &config.signals, &grid, config.window).unwrap(),
        cfi_line(&models[0].1, &config.signals, &grid, config.window).unwrap(),
    )
    .unwrap();
    let last = db.last().unwrap().0;
    let list: Vec<String> = db.iter().map(|d| format!("{:.2}", d.0)).collect();
    c.check(monotone && last < limit, format!("improvement dB [{}] toward limit {limit:.2}", list.join(" ")));
    c.done()
}

fn criterion_11() -> Outcome {
    let mut c = Checks::new();
    let mut rho = DMatrix::<Complex64>::zeros(8, 8);
    for (i, j) in [(0, 0), (0, 7), (7, 0), (7, 7)] {
        rho[(i, j)] = 0.5.into();
    }
    let ghz = DensityMatrix::new(rho).unwrap();
    let pair = register_ghz_pair(3);
    let mle_config = MleConfig::default();
    let fidelities: Vec<f64> = (0..TOMO_SEEDS)
        .map(|s| {
            let counts = simulate_all_bases(&ghz, TOMO_SHOTS, s).unwrap();
            ghz_fidelity(&reconstruct_mle(&counts, &mle_config).unwrap().rho, pair)
        })
        .collect();
    let good = fidelities.iter().filter(|&&f| f >= TOMO_FIDELITY).count();
    let min = fidelities.iter().cloned().fold(f64::INFINITY, f64::min);
    c.check(
        good as f64 >= TOMO_FRACTION * TOMO_SEEDS as f64,
        format!("{good}/{TOMO_SEEDS} seeds with F >= {TOMO_FIDELITY} (min {min:.4})"),
    );
    let counts = simulate_all_bases(&ghz, TOMO_SHOTS, 11).unwrap();
    let run = |seed| bootstrap_errorbars(&counts, |r| ghz_fidelity(r, pair), BOOTSTRAP_REPEATS, seed, &mle_config).unwrap();
    let (a, b, other) = (run(3), run(3), run(4));
    c.check(a == b && a != other, format!("bootstrap F = {:.4} ± {:.4}, deterministic per seed", a.value, a.std));
    c.done()
}

fn criterion_12() -> Outcome {
    let mut c = Checks::new();
    for (&rabi, &want) in STARK_RABI_FREQUENCIES.iter().zip(&STARK_CALIBRATED_FIELDS) {
        let got = ac_stark_quadratic(&StarkSetup::experiment(rabi)).unwrap().quadratic_field.abs();
        let ok = if want == 0.0 { got == 0.0 } else { rel(got, want) <= STARK_REL_TOL };
        c.check(ok, format!("{got:.2}/{want}"));
    }
    c.done()
}

fn main() {
    let filter: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let criteria: [Criterion; 12] = [
        (1, "RMSE limits", criterion_1),
        (2, "DFS census", criterion_2),
        (3, "post-noise amplitudes", criterion_3),
        (4, "product-state penalty", criterion_4),
        (5, "infinite-shot improvement", criterion_5),
        (6, "experiment-scale Monte Carlo", criterion_6),
        (7, "separable optimizer", criterion_7),
        (8, "error models", criterion_8),
        (9, "estimator statistics", criterion_9),
        (10, "shot scaling", criterion_10),
        (11, "tomography round trip", criterion_11),
        (12, "AC-Stark calibration", criterion_12),
    ];
    let mut surprises = Vec::new();
    for (id, name, f) in criteria {
        if !filter.is_empty() && !filter.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let o = f();
        let expected_fail = EXPECTED_FAILURES.contains(&id);
        let tag = match (o.pass, expected_fail) {
            (true, false) => "PASS",
            (false, true) => "FAIL (expected)",
            (false, false) => "FAIL",
            (true, true) => "PASS (unexpected)",
        };
        if o.pass == expected_fail {
            surprises.push(id);
        }
        println!("criterion {id:>2} {name}: {tag} [{:.1} s] {}", start.elapsed().as_secs_f64(), o.detail);
    }
    if !surprises.is_empty() {
        eprintln!("acceptance: outcome differs from the recorded expectation for criteria {surprises:?}");
        std::process::exit(1);
    }
}
