// Lindblad damping of a cold and a hot start towards the bath occupancy,
// compared with n(t) = n_th + (n0 - n_th) exp(-Gamma t).
//
//     cargo run --example lindblad_thermalization

use herald_sim::error::Result;
use herald_sim::fock::{build_thermal, observables_of, DampingChannel, OscillatorSpec, TruncationPolicy};

pub fn run() -> Result<f64> {
    let (gamma, n_th, dim) = (0.02, 2.0, 96);
    let bath = OscillatorSpec::new(1.0, n_th, dim).with_damping(gamma);
    let mut worst: f64 = 0.0;
    for n0 in [0.0, 6.0] {
        let mut rho = build_thermal(&OscillatorSpec::new(1.0, n0, dim), TruncationPolicy::Strict)?;
        let start = observables_of(&rho).occupancy;
        let dt = 0.5 / gamma;
        let step = DampingChannel::calibrate(&bath, dt, &rho)?;
        println!("n0 = {n0}: {} RK4 steps per interval", step.steps());
        println!("  Gamma t     n(t)        exact");
        for k in 1..=10 {
            rho = step.apply(&rho)?;
            let gt = k as f64 * gamma * dt;
            let exact = n_th + (start - n_th) * (-gt).exp();
            let n = observables_of(&rho).occupancy;
            worst = worst.max((n - exact).abs() / exact);
            println!("  {gt:7.2}  {n:10.6}  {exact:10.6}");
        }
    }
    println!("max relative deviation {worst:.2e}");
    Ok(worst)
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run() {
        eprintln!("{e}");
        std::process::exit(e.exit_code());
    }
}
