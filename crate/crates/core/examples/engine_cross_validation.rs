// Fock engine against the phase-space engine, with and without damping.
//
//     cargo run --release --example engine_cross_validation

use herald_sim::error::Result;
use herald_sim::herald::{run_protocol, ProtocolOptions, SpinSpec};
use herald_sim::pfunction::{pfunction_trace, GridConfig};
use herald_sim::recipes::{cross_check_schedule, oscillator, DEFAULT_N0};

pub fn run() -> Result<f64> {
    let g = cross_check_schedule(true, 1).g;
    let mut worst: f64 = 0.0;
    for gamma in [0.0, 0.4 * g * g] {
        for resonant in [true, false] {
            let spec = oscillator(DEFAULT_N0).with_damping(gamma);
            let sched = cross_check_schedule(resonant, 10);
            let fock = run_protocol(&spec, &sched, &SpinSpec::default(), &ProtocolOptions::default(), 0)?;
            let p = pfunction_trace(&spec, &sched, &SpinSpec::default(), &GridConfig::default())?;
            let dev = fock
                .rounds
                .iter()
                .zip(&p.rounds)
                .map(|(f, q)| {
                    let dn = (q.observables.occupancy / f.occupancy - 1.0).abs();
                    let dx = (q.observables.var_x / f.var_x - 1.0).abs();
                    dn.max(dx)
                })
                .fold(0.0f64, f64::max);
            let (f, q) = (fock.final_observables, p.rounds[9].observables);
            println!(
                "Gamma = {gamma:.1e}, {}: final n {:.3} vs {:.3}, var_x {:.3} vs {:.3}, max deviation {:.2}%",
                if resonant { "resonant    " } else { "off-resonant" },
                f.occupancy,
                q.occupancy,
                f.var_x,
                q.var_x,
                dev * 100.0
            );
            worst = worst.max(dev);
        }
    }
    Ok(worst)
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run() {
        eprintln!("{e}");
        std::process::exit(e.exit_code());
    }
}
