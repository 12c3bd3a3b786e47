// Thermal state of a truncated oscillator and a displaced vacuum.
//
//     cargo run --example thermal_state

use herald_sim::error::Result;
use herald_sim::fock::{build_thermal, displacement_op, minimal_thermal_dim, observables_of, DensityMatrix, OscillatorSpec, TruncationPolicy};
use herald_sim::linalg::{cmul, cmul_adjoint, C64};

pub fn run() -> Result<f64> {
    let n = 3.0;
    let dim = minimal_thermal_dim(n);
    let rho = build_thermal(&OscillatorSpec::new(1.0, n, dim), TruncationPolicy::Strict)?;
    let obs = observables_of(&rho);
    println!("thermal n = {n}, dim = {dim}");
    for (k, p) in rho.populations().iter().take(6).enumerate() {
        println!("  p({k}) = {p:.6}   geometric: {:.6}", (n / (n + 1.0)).powi(k as i32) / (n + 1.0));
    }
    println!("  <n> = {:.6}, var_x = {:.6}, purity = {:.6} (1/(2n+1) = {:.6})", obs.occupancy, obs.var_x, obs.purity, 1.0 / (2.0 * n + 1.0));

    // D(beta)|0><0|D(beta)^dag is a coherent state with <n> = |beta|^2
    let beta = C64::new(0.0, 0.25);
    let d = displacement_op(beta, 64);
    let vac = DensityMatrix::vacuum(64);
    let coh = DensityMatrix::from_entries(cmul_adjoint(&cmul(&d, vac.entries()), &d))?;
    println!("coherent beta = {beta}: <n> = {:.10}", observables_of(&coh).occupancy);
    Ok(obs.occupancy)
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run() {
        eprintln!("{e}");
        std::process::exit(e.exit_code());
    }
}
