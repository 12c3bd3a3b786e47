// From cantilever numbers to model parameters and a suggested schedule.
//
//     cargo run --example lab_estimates

use herald_sim::error::Result;
use herald_sim::phys::{spec_from_lab, LabSetup};

pub fn run() -> Result<f64> {
    let lab = LabSetup::reference();
    let b = spec_from_lab(&lab)?;
    println!("g = {:.1} Hz ({:.1} rad/s)", b.coupling.g_hz, b.coupling.g_rad);
    println!("n = {:.1}, Gamma = {:.1} 1/s", b.oscillator.n_thermal, b.oscillator.gamma);
    println!(
        "suggested n_c = {}, lambda = {:.3e}, block time {:.3e} s, T2 = {} s",
        b.schedule.n_c, b.lambda, b.block_time, lab.t2_s
    );
    for w in &b.warnings {
        println!("warning: {w}");
    }
    Ok(b.coupling.g_hz)
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run() {
        eprintln!("{e}");
        std::process::exit(e.exit_code());
    }
}
