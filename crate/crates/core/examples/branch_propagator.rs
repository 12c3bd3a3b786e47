// Composing the spin-conditioned oscillator propagator of one CPMG block as
// phase, displacement and rotation, and the kick operators built from it.
//
//     cargo run --example branch_propagator

use herald_sim::error::Result;
use herald_sim::fock::{DensityMatrix, OscillatorSpec};
use herald_sim::herald::{build_conditional_ops, completeness_matrix, success_probability, SpinSpec};
use herald_sim::linalg::{interior_limit, max_abs_block, CMatrix};
use herald_sim::pulse::{compose_branch, g_for_lambda, lambda_eff, PulseSchedule};

pub fn run() -> Result<f64> {
    let spec = OscillatorSpec::new(1.0, 0.0, 64);
    let n_c = 10;
    for eps in [0.0, 0.025] {
        let s = PulseSchedule::new(n_c, g_for_lambda(0.25, n_c, 1.0), eps, 1);
        let plus = compose_branch(&s, &spec, 1);
        let minus = compose_branch(&s, &spec, -1);
        println!(
            "eps = {eps}: beta+ = {:.5}, beta- = {:.5}, phase = {:.3e}, rotation = {:.5}",
            plus.displacement, minus.displacement, plus.phase, plus.rotation
        );
        println!("  |beta| = {:.5}, lambda = {:.5}", plus.displacement.norm(), lambda_eff(s.g, n_c, 1.0));
    }
    let s = PulseSchedule::new(n_c, g_for_lambda(0.25, n_c, 1.0), 0.0, 1);
    let kick = build_conditional_ops(&s, &SpinSpec::default(), &spec)?;
    let dev = completeness_matrix(&kick) - CMatrix::identity(64, 64);
    let p = success_probability(&kick, &DensityMatrix::vacuum(64));
    println!("completeness error {:.1e}, vacuum p = {p:.6}", max_abs_block(&dev, interior_limit(64, kick.strength())));
    Ok(p)
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run() {
        eprintln!("{e}");
        std::process::exit(e.exit_code());
    }
}
