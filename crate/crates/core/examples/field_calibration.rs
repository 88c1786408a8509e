//! Laser-induced quadratic field, spin-echo schedules and dressed-state
//! sensitivities.
//!
//! Usage: `cargo run --release --example field_calibration`

use dfs_sensing::calib::{ac_stark_quadratic, dressed_sensitivity, echo_schedule, StarkSetup};
use dfs_sensing::constants::{INTERROGATION_TIME, STARK_RABI_FREQUENCIES};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    println!("Rabi (kHz)  shift (Hz)  B^q (pT/um^2)");
    for &rabi in &STARK_RABI_FREQUENCIES {
        let c = ac_stark_quadratic(&StarkSetup::experiment(rabi))?;
        println!("{:10.2}  {:10.3}  {:13.2}", rabi / (2.0 * std::f64::consts::PI * 1e3), c.corrected_shift_hz, c.quadratic_field);
    }
    for (f, k) in [(0.5, 1), (0.25, 4), (1.0, 2)] {
        let e = echo_schedule(f, INTERROGATION_TIME, k)?;
        let times: Vec<String> = e.echo_times.iter().map(|t| format!("{:.1}", t * 1e3)).collect();
        println!("F = {f}, {k} segments: flips at [{}] ms, ratio {:.3}", times.join(", "), e.effective_ratio());
    }
    for omega in [0.0, 0.5, 1.0, 2.0, 5.0] {
        println!("Rabi/detuning = {omega}: dressed sensitivity {:.4}", dressed_sensitivity(1.0, omega)?);
    }
    Ok(())
}
