//! Cross-module invariants.

use dfs_sensing::channels::{depolarize_independent, overwhelming_dephasing};
use dfs_sensing::constants::*;
use dfs_sensing::dfs::{best_dfs, enumerate_dfs, spectral_range};
use dfs_sensing::estimation::{fringe_index, mle, run_campaign, CampaignConfig};
use dfs_sensing::metrology::{commutator_derivative, rmse_bound, sld_and_qfi, ParityModel};
use dfs_sensing::statespace::{build_signal_generator, AmplitudeRecord, PureState};
use dfs_sensing::tomography::{expected_counts, ghz_fidelity, reconstruct_mle, MleConfig};
use dfs_sensing::{DensityMatrix, FieldComponent, SensorLayout, SensorLevels};
use proptest::prelude::*;

fn setup() -> (SensorLevels, SensorLayout, Vec<FieldComponent>) {
    (
        SensorLevels::bold(),
        SensorLayout::equidistant(3, ION_SPACING).unwrap(),
        vec![FieldComponent::constant(), FieldComponent::linear()],
    )
}

fn random_state(levels: &SensorLevels, re: &[f64], im: &[f64]) -> PureState {
    let records: Vec<AmplitudeRecord> = levels
        .basis()
        .iter()
        .zip(re.iter().zip(im))
        .map(|(b, (&re, &im))| AmplitudeRecord {
            labels: b.labels().to_vec(),
            re,
            im,
        })
        .collect();
    let norm: f64 = re.iter().zip(im).map(|(a, b)| a * a + b * b).sum::<f64>().sqrt();
    let scaled: Vec<AmplitudeRecord> = records
        .into_iter()
        .map(|mut r| {
            r.re /= norm;
            r.im /= norm;
            r
        })
        .collect();
    PureState::from_records(levels, &scaled).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// No state of the protected subspace carries more than Δ² after the noise.
    #[test]
    fn dephased_qfi_below_range_squared(re in prop::collection::vec(-1.0f64..1.0, 8), im in prop::collection::vec(-1.0f64..1.0, 8)) {
        prop_assume!(re.iter().chain(&im).map(|x| x * x).sum::<f64>() > 1e-3);
        let (levels, layout, noise) = setup();
        let census = enumerate_dfs(&levels, &layout, &noise).unwrap();
        let g = build_signal_generator(&layout, &FieldComponent::quadratic(), KAPPA, INTERROGATION_TIME, &levels).unwrap();
        let delta = spectral_range(best_dfs(&census.subspaces, &g).unwrap(), &g).delta;
        let rho = overwhelming_dephasing(&DensityMatrix::from_pure(&random_state(&levels, &re, &im)), &census).unwrap();
        let (_, f) = sld_and_qfi(&rho, &commutator_derivative(&g, &rho).unwrap()).unwrap();
        prop_assert!(f <= delta * delta * (1.0 + 1e-9));
        prop_assert!((rho.trace() - 1.0).abs() < 1e-12);
    }

    /// The noise channel commutes with the signal and is idempotent.
    #[test]
    fn dephasing_is_a_projection(re in prop::collection::vec(-1.0f64..1.0, 8), im in prop::collection::vec(-1.0f64..1.0, 8)) {
        prop_assume!(re.iter().chain(&im).map(|x| x * x).sum::<f64>() > 1e-3);
        let (levels, layout, noise) = setup();
        let census = enumerate_dfs(&levels, &layout, &noise).unwrap();
        let rho = DensityMatrix::from_pure(&random_state(&levels, &re, &im));
        let once = overwhelming_dephasing(&rho, &census).unwrap();
        let twice = overwhelming_dephasing(&once, &census).unwrap();
        prop_assert!((once.matrix() - twice.matrix()).norm() < 1e-12);
    }

    /// Depolarizing never raises the GHZ fidelity and keeps the trace.
    #[test]
    fn depolarizing_is_monotone(p in prop::collection::vec(0.0f64..1.0, 3), scale in 0.0f64..1.0) {
        let q = SensorLevels::qubits(3, 1.0).unwrap();
        let ghz = PureState::ghz(&q, &[-1.0; 3], &[1.0; 3], 0.0).unwrap();
        let rho = DensityMatrix::from_pure(&ghz);
        let weak: Vec<f64> = p.iter().map(|x| x * scale).collect();
        let f_weak = depolarize_independent(&rho, &weak).unwrap().fidelity_pure(&ghz);
        let strong = depolarize_independent(&rho, &p).unwrap();
        prop_assert!(strong.fidelity_pure(&ghz) <= f_weak + 1e-12);
        prop_assert!((strong.trace() - 1.0).abs() < 1e-12);
    }

    /// The estimator inverts the noiseless fringe in every half-period.
    #[test]
    fn estimator_round_trip(a in 0.05f64..1.0, off in -3.0f64..3.0, b in -30.0f64..30.0, phi in 0.0f64..5.0) {
        let model = ParityModel::new(a, experiment_omega(), off).unwrap().with_sensors(3);
        let phase = model.total_phase(b, phi).rem_euclid(std::f64::consts::PI);
        prop_assume!(phase > 0.01 && phase < std::f64::consts::PI - 0.01);
        let est = mle(model.parity(b, phi), &model, phi, fringe_index(&model, b, phi)).unwrap();
        prop_assert!((est - b).abs() < 1e-9);
    }
}

#[test]
fn exact_counts_reconstruct_dephased_state() {
    let (levels, layout, noise) = setup();
    let census = enumerate_dfs(&levels, &layout, &noise).unwrap();
    let sep = PureState::separable_pm(&levels, &[1.0, -2.0, 1.0]).unwrap();
    let rho = overwhelming_dephasing(&DensityMatrix::from_pure(&sep), &census).unwrap();
    let rec = reconstruct_mle(&expected_counts(&rho, 1_000_000).unwrap(), &MleConfig::default()).unwrap();
    assert!(rec.rho.trace_distance(&rho) < 5e-3);
    let pair = (levels.index_of(&[1.0, -2.0, 1.0]).unwrap(), levels.index_of(&[-1.0, 2.0, -1.0]).unwrap());
    assert!((ghz_fidelity(&rec.rho, pair) - 0.25).abs() < 5e-3);
}

#[test]
fn campaigns_ignore_thread_count() {
    let model = ParityModel::new(AMPLITUDE_SWD, experiment_omega(), PHASE_OFFSET_SWD).unwrap().with_sensors(3);
    let config = CampaignConfig {
        signals: EXPERIMENT_SIGNALS.to_vec(),
        phase_grid: phase_grid(PHASE_GRID_POINTS, PHASE_GRID_END),
        shots: 72,
        repeats: 50,
        window: PHASE_WINDOW,
        seed: 5,
        bins: 10,
    };
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let three = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
    let a = one.install(|| run_campaign(&model, &config).unwrap());
    let b = three.install(|| run_campaign(&model, &config).unwrap());
    assert_eq!(a, b);
}

#[test]
fn perfect_amplitude_approaches_heisenberg_line() {
    let w = experiment_omega();
    let model = ParityModel::new(1.0, w, 0.0).unwrap().with_sensors(3);
    let config = CampaignConfig {
        signals: vec![0.0, 7.6],
        phase_grid: phase_grid(PHASE_GRID_POINTS, PHASE_GRID_END),
        shots: 2000,
        repeats: 400,
        window: 0.3,
        seed: 1,
        bins: 10,
    };
    let r = run_campaign(&model, &config).unwrap();
    let line = rmse_bound(w * w).unwrap();
    assert!(r.average_rmse >= line * 0.95 && r.average_rmse < line * 1.15, "{} vs {line}", r.average_rmse);
}
