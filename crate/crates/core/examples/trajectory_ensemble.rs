// Sampled heralding outcomes. A failed round restarts from the thermal
// state, so the all-success fraction is the experiment's event rate.
//
//     cargo run --release --example trajectory_ensemble

use herald_sim::error::Result;
use herald_sim::herald::{ensemble_means, run_ensemble, Outcome, ProtocolOptions, SpinSpec};
use herald_sim::recipes::{cooling_recipe, oscillator};

pub fn run() -> Result<f64> {
    let spec = oscillator(4.0);
    let sched = cooling_recipe(6);
    let records = run_ensemble(&spec, &sched, &SpinSpec::default(), &ProtocolOptions::trajectory(), 2024, 48)?;
    for m in ensemble_means(&records) {
        println!("round {}: success fraction {:.3}, mean occupancy {:.3}", m.round, m.success_fraction, m.occupancy);
    }
    let all = records.iter().filter(|t| t.rounds.iter().all(|r| r.outcome == Outcome::Success)).count();
    let fraction = all as f64 / records.len() as f64;
    println!("all-success fraction {fraction:.3} over {} trajectories", records.len());
    Ok(fraction)
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run() {
        eprintln!("{e}");
        std::process::exit(e.exit_code());
    }
}
