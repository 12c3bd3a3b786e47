// Resonant pulses project onto position: var_x falls below the vacuum 1/2
// while var_p grows.
//
//     cargo run --release --example resonant_squeezing

use herald_sim::error::Result;
use herald_sim::herald::{run_protocol, ProtocolOptions, SpinSpec};
use herald_sim::recipes::{oscillator, squeezing_recipe, DEFAULT_N0};

pub fn run() -> Result<f64> {
    let spec = oscillator(DEFAULT_N0);
    let rec = run_protocol(&spec, &squeezing_recipe(60), &SpinSpec::default(), &ProtocolOptions::default(), 0)?;
    for r in rec.rounds.iter().filter(|r| r.round % 10 == 0 || r.round == 1) {
        println!("round {:2}: var_x = {:.4}, var_p = {:8.3}, p = {:.4}", r.round, r.var_x, r.var_p, r.p_success);
    }
    let f = rec.final_observables;
    println!("squeezing {:.2} dB below vacuum", 10.0 * (0.5 / f.var_x).log10());
    Ok(f.var_x)
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run() {
        eprintln!("{e}");
        std::process::exit(e.exit_code());
    }
}
