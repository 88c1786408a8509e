//! Enumerates the decoherence-free subspaces of three sensors under constant
//! and gradient noise, on the two-level and the six-level manifolds.
//!
//! Usage: `cargo run --release --example dfs_census`

use dfs_sensing::constants::{INTERROGATION_TIME, ION_SPACING, KAPPA};
use dfs_sensing::dfs::{best_dfs, enumerate_dfs, optimal_state, spectral_range};
use dfs_sensing::statespace::build_signal_generator;
use dfs_sensing::{FieldComponent, SensorLayout, SensorLevels};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let layout = SensorLayout::equidistant(3, ION_SPACING)?;
    let noise = [FieldComponent::constant(), FieldComponent::linear()];
    for (name, levels) in [("two-level", SensorLevels::bold()), ("six-level", SensorLevels::full_d52(3)?)] {
        let census = enumerate_dfs(&levels, &layout, &noise)?;
        let g = build_signal_generator(&layout, &FieldComponent::quadratic(), KAPPA, INTERROGATION_TIME, &levels)?;
        let best = best_dfs(&census.subspaces, &g)?;
        let omega = spectral_range(best, &g).delta;
        let maximal = census.count_with_range(&g, omega, 1e-9 * omega);
        println!("{name}: {} DFSs, {maximal} with the maximal range {omega:.6}", census.len());
        for d in census.subspaces.iter().filter(|d| d.dimension() > 2).take(5) {
            let members: Vec<String> = d.member_labels(&levels).map(|b| b.to_string()).collect();
            let eta: Vec<String> = d.eta().iter().map(|x| format!("{x:.1}")).collect();
            println!("  eta = ({}), dim {}: {}", eta.join(", "), d.dimension(), members.join(" "));
        }
        let psi = optimal_state(best, &g)?;
        let support: Vec<String> = psi
            .probabilities()
            .iter()
            .enumerate()
            .filter(|(_, p)| **p > 1e-12)
            .map(|(i, p)| format!("{p:.2} {}", levels.label(i)))
            .collect();
        println!("  optimal state populations: {}", support.join(", "));
    }
    Ok(())
}
