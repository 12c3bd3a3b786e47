// With oscillator damping the heralded cooling settles on a plateau set by
// g/Gamma; spin dephasing raises it.
//
//     cargo run --release --example damping_plateau

use herald_sim::error::Result;
use herald_sim::herald::{run_protocol, ProtocolOptions, SpinSpec};
use herald_sim::recipes::{cooling_recipe, oscillator, DEFAULT_N0};

pub fn run() -> Result<Vec<f64>> {
    let sched = cooling_recipe(50);
    let t = sched.block_time(1.0, 1);
    let mut finals = Vec::new();
    for gt in [0.005, 0.01, 0.02] {
        let spec = oscillator(DEFAULT_N0).with_damping(gt / t);
        let g_over_gamma = sched.g / spec.gamma;
        for (label, t2) in [("eta 1.0", f64::INFINITY), ("eta 0.5", t / 2f64.ln())] {
            let spin = SpinSpec { t2, readout_fidelity: 1.0 };
            let rec = run_protocol(&spec, &sched, &spin, &ProtocolOptions::default(), 0)?;
            let n: Vec<f64> = rec.rounds.iter().map(|r| r.occupancy).collect();
            println!(
                "g/Gamma = {g_over_gamma:5.1}, {label}: n after 10/30/50 rounds = {:.3} / {:.3} / {:.3}",
                n[9], n[29], n[49]
            );
            if t2.is_infinite() {
                finals.push(n[49]);
            }
        }
    }
    Ok(finals)
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run() {
        eprintln!("{e}");
        std::process::exit(e.exit_code());
    }
}
