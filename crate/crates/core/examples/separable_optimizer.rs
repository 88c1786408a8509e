//! Maximizes the classical Fisher information of separable protocols on
//! the two-level and six-level sensor manifolds.
//!
//! Usage: `cargo run --release --example separable_optimizer [restarts] [seed]`

use std::time::Instant;

use dfs_sensing::constants::experiment_omega;
use dfs_sensing::optimize::{experiment_problem, optimize_problem, OptimizerConfig, Restriction};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let restarts: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(10);
    let seed: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(2024);
    let w = experiment_omega();
    let unit = w * w / 16.0;
    for restriction in [Restriction::BoldTwoLevel, Restriction::FullSixLevel] {
        let (problem, _) = experiment_problem(restriction)?;
        let config = OptimizerConfig {
            restarts,
            ..OptimizerConfig::default()
        };
        let start = Instant::now();
        let result = optimize_problem(&problem, &config, seed, 0.0)?;
        println!(
            "{restriction:?}: {} parameters, F = {:.4} x w^2/16 ({:.1} s)",
            problem.parameter_count(),
            result.best / unit,
            start.elapsed().as_secs_f64()
        );
        for r in &result.restarts {
            println!("  restart {:2}: {:.4} ({} evaluations, {} rounds)", r.restart, r.best / unit, r.evaluations, r.rounds);
        }
    }
    Ok(())
}
