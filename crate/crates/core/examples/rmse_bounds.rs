//! Cramér-Rao limits of the entangled and separable protocols, and the
//! infinite-shot improvement for the measured fringe amplitudes.
//!
//! Usage: `cargo run --release --example rmse_bounds`

use dfs_sensing::constants::{experiment_omega, AMPLITUDE_SEPARABLE, AMPLITUDE_SWD};
use dfs_sensing::metrology::{improvement_db, parity_cfi, rmse_bound};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let w = experiment_omega();
    let entangled = rmse_bound(w * w)?;
    let two_level = rmse_bound(w * w / 16.0)?;
    let six_level = rmse_bound(3.3 * w * w / 16.0)?;
    println!("omega = {w:.6} rad per pT/um^2");
    println!("entangled           {entangled:.3} pT/um^2");
    println!("two-level separable {two_level:.3} pT/um^2 ({:.2} dB worse)", improvement_db(two_level, entangled)?);
    println!("six-level separable {six_level:.3} pT/um^2 ({:.2} dB worse)", improvement_db(six_level, entangled)?);
    println!("\nphase  SWD bound  separable bound  gain");
    for k in 0..=8 {
        let phase = 0.35 + 0.15 * k as f64;
        let swd = rmse_bound(parity_cfi(AMPLITUDE_SWD, w, phase))?;
        let sep = rmse_bound(parity_cfi(AMPLITUDE_SEPARABLE, w, phase))?;
        println!("{phase:5.2}  {swd:9.3}  {sep:15.3}  {:.2} dB", improvement_db(sep, swd)?);
    }
    Ok(())
}
