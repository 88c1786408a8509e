//! RMSE against the number of shots per estimate, compared with the
//! Cramér-Rao line and the random-guess level.
//!
//! Usage: `cargo run --release --example shot_scaling [repeats]`

use dfs_sensing::constants::experiment_omega;
use dfs_sensing::estimation::{random_guess_rmse, shots_scaling};
use dfs_sensing::scenario::{campaign_config, protocol_models, ScenarioConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let repeats: usize = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(1000);
    let config = ScenarioConfig::default();
    let w = experiment_omega();
    let models = protocol_models(&config, w)?;
    let base = dfs_sensing::estimation::CampaignConfig {
        repeats,
        ..campaign_config(&config, config.seed)
    };
    let grid = [2, 4, 8, 16, 32, 64, 128, 256, 512];
    let rows = shots_scaling(&[models[0].1, models[1].1], &grid, &base)?;
    println!("random guess: {:.3} pT/um^2", random_guess_rmse(w));
    println!("   N   SWD (line)        separable (line)   gain");
    for r in rows {
        println!(
            "{:4}   {:.3} ({:.3})    {:.3} ({:.3})    {:.2} ± {:.2} dB",
            r.shots,
            r.rmse[0],
            r.bound[0],
            r.rmse[1],
            r.bound[1],
            r.improvement_db.unwrap_or(f64::NAN),
            r.improvement_db_error.unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
