// Retuning the coupling every round (lambda^2 n fixed) reaches n < 1 in
// about 2 log2(n0) successful rounds.
//
//     cargo run --release --example adaptive_cooling

use herald_sim::error::Result;
use herald_sim::herald::{adaptive_cooling_run, AdaptivePlan, SpinSpec};
use herald_sim::recipes::oscillator;

pub fn run() -> Result<Vec<Option<u32>>> {
    let plan = AdaptivePlan::default();
    let mut hits = Vec::new();
    for n0 in [4.0f64, 16.0] {
        let r = adaptive_cooling_run(&oscillator(n0), &SpinSpec::default(), &plan)?;
        let path: Vec<String> = r.rounds.iter().map(|x| format!("{:.2}", x.occupancy)).collect();
        println!("n0 = {n0}: {:?} rounds (2 log2 n0 = {}), n: {}", r.rounds_to_target, 2.0 * n0.log2(), path.join(" "));
        hits.push(r.rounds_to_target);
    }
    Ok(hits)
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run() {
        eprintln!("{e}");
        std::process::exit(e.exit_code());
    }
}
