// Closed-form cooling: the per-round recurrence, the logarithmic round count
// and how many rounds still beat the bath.
//
//     cargo run --example cooling_model

use herald_sim::cooling::{cooling_rate, cooling_recurrence, one_shot_cooling, speed_limit_rounds, useful_rounds};
use herald_sim::error::Result;

pub fn run() -> Result<Vec<f64>> {
    let (n0, lambda) = (10.0, 0.1);
    let (g, omega) = (0.005, 1.0);
    let state = cooling_recurrence(n0, lambda, 8, Some((g, omega)))?;
    let rates = state.rates.clone().unwrap_or_default();
    for (m, (n, r)) in state.occupancies.iter().zip(&rates).enumerate() {
        println!("M = {m}: n = {n:.4}, cooling rate {r:.3e}");
    }
    println!("one-shot first-order value {:.3}", one_shot_cooling(n0, lambda));
    for n in [4.0, 16.0, 64.0, 1e4] {
        println!("n0 = {n}: speed limit {} rounds", speed_limit_rounds(n));
    }
    let gamma = cooling_rate(g, omega, 2.0);
    println!("Gamma = {gamma:.2e}: {} useful rounds", useful_rounds(g, omega, gamma, n0, lambda, 100)?);
    Ok(state.occupancies)
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run() {
        eprintln!("{e}");
        std::process::exit(e.exit_code());
    }
}
