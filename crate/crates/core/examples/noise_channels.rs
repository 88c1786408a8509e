//! Effect of correlated dephasing, spontaneous decay and mapping-pulse
//! errors on the entangled and separable states.
//!
//! Usage: `cargo run --release --example noise_channels`

use dfs_sensing::channels::{
    combined_error, damping_probability, decay_ghz_fidelity, depolarize_independent, finite_dephasing,
    overwhelming_dephasing, IntegratedNoiseModel, NoiseDistribution,
};
use dfs_sensing::constants::*;
use dfs_sensing::dfs::enumerate_dfs;
use dfs_sensing::{DensityMatrix, FieldComponent, PureState, SensorLayout, SensorLevels};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let levels = SensorLevels::bold();
    let layout = SensorLayout::equidistant(3, ION_SPACING)?;
    let noise = [FieldComponent::constant(), FieldComponent::linear()];
    let census = enumerate_dfs(&levels, &layout, &noise)?;
    let hi = levels.index_of(&[1.0, -2.0, 1.0]).ok_or("missing level")?;
    let lo = levels.index_of(&[-1.0, 2.0, -1.0]).ok_or("missing level")?;
    let sep = DensityMatrix::from_pure(&PureState::separable_pm(&levels, &[1.0, -2.0, 1.0])?);
    let swd = DensityMatrix::from_pure(&PureState::ghz(&levels, &[1.0, -2.0, 1.0], &[-1.0, 2.0, -1.0], 0.0)?);

    println!("protected amplitude 2|rho(s,-s)| and purity after Gaussian noise of growing width (pT):");
    for sigma in [0.0, 5.0, 20.0, 100.0] {
        let model = IntegratedNoiseModel::new(vec![NoiseDistribution::Gaussian { sigma }, NoiseDistribution::Gaussian { sigma: sigma / ION_SPACING }])?;
        let out = |rho: &DensityMatrix| finite_dephasing(rho, &levels, &layout, &noise, &model, KAPPA);
        let (s, e) = (out(&sep)?, out(&swd)?);
        println!(
            "  sigma = {sigma:5.1}: separable A {:.4} purity {:.4}, SWD A {:.4} purity {:.4}",
            2.0 * s.element(hi, lo).norm(),
            s.purity(),
            2.0 * e.element(hi, lo).norm(),
            e.purity()
        );
    }
    let limit = overwhelming_dephasing(&sep, &census)?;
    println!("  overwhelming: separable A {:.4} purity {:.4}", 2.0 * limit.element(hi, lo).norm(), limit.purity());

    let p = damping_probability(INTERROGATION_TIME, D52_LIFETIME)?;
    let q = SensorLevels::qubits(3, 1.0)?;
    let ghz = PureState::ghz(&q, &[-1.0; 3], &[1.0; 3], 0.0)?;
    let rho = DensityMatrix::from_pure(&ghz);
    println!("\ndecay probability in {INTERROGATION_TIME} s: {p:.5}");
    println!("GHZ fidelity after decay: {:.4}", decay_ghz_fidelity(&rho, INTERROGATION_TIME, D52_LIFETIME)?);
    let errors: Vec<f64> = ADDRESSING_ERROR.iter().map(|&a| combined_error(PI_PULSE_ERROR, a)).collect();
    let out = depolarize_independent(&rho, &errors)?;
    println!("mapping errors {errors:.4?}: GHZ fidelity drop {:.4}", 1.0 - out.fidelity_pure(&ghz));
    Ok(())
}
