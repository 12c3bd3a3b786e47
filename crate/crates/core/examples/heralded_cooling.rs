// Conditioned cooling with off-resonant pulses: every round heralds success.
//
//     cargo run --release --example heralded_cooling

use herald_sim::error::Result;
use herald_sim::herald::{run_protocol, ProtocolOptions, SpinSpec};
use herald_sim::recipes::{cooling_recipe, oscillator, DEFAULT_N0};

pub fn run() -> Result<f64> {
    let spec = oscillator(DEFAULT_N0);
    let rec = run_protocol(&spec, &cooling_recipe(10), &SpinSpec::default(), &ProtocolOptions::default(), 0)?;
    println!("round  p_success  occupancy  var_x    var_p");
    for r in &rec.rounds {
        println!("{:5}  {:9.4}  {:9.4}  {:7.4}  {:7.4}", r.round, r.p_success, r.occupancy, r.var_x, r.var_p);
    }
    println!("event rate {:.4}", rec.event_rate);
    Ok(rec.final_observables.occupancy)
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run() {
        eprintln!("{e}");
        std::process::exit(e.exit_code());
    }
}
