//! Monte Carlo estimation campaigns of the entangled and separable
//! protocols at the experiment's parameters, with per-signal histograms.
//!
//! Usage: `cargo run --release --example estimation_campaign [repeats] [seed]`

use dfs_sensing::constants::experiment_omega;
use dfs_sensing::estimation::{cfi_line, run_campaign};
use dfs_sensing::scenario::{campaign_config, protocol_models, ScenarioConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let repeats: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(500);
    let seed: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(2024);
    let config = ScenarioConfig {
        repeats,
        seed,
        ..ScenarioConfig::default()
    };
    let mut averages = Vec::new();
    for (q, (name, model)) in protocol_models(&config, experiment_omega())?.iter().enumerate() {
        let r = run_campaign(model, &campaign_config(&config, seed + q as u64))?;
        let line = cfi_line(model, &config.signals, &config.phase_grid(), config.window)?;
        println!("{name} (A = {}): average RMSE {:.2} ± {:.2}, CFI line {line:.2}", model.amplitude, r.average_rmse, r.average_rmse_error);
        for s in &r.signals {
            let peak = s.histogram.counts.iter().copied().max().unwrap_or(1).max(1);
            let bars: String = s.histogram.counts.iter().map(|&c| [' ', '.', ':', '|'][(3 * c / peak) as usize]).collect();
            println!("  B = {:5.1}: mean {:6.2} ± {:.2}, RMSE {:5.2}  [{bars}]", s.signal, s.mean, s.standard_error, s.rmse);
        }
        averages.push(r.average_rmse);
    }
    println!("separable / SWD = {:.2}, ideal separable / SWD = {:.2}", averages[1] / averages[0], averages[2] / averages[0]);
    Ok(())
}
