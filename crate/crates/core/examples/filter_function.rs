// The CPMG filter around the pulse-matched frequency, its lobe weight, and
// how much of the spin's response a spectator mode picks up.
//
//     cargo run --example filter_function

use std::f64::consts::PI;

use herald_sim::error::Result;
use herald_sim::pulse::{filter_function, filter_lobe_weight, multimode_filter_report, Mode, PulseSchedule};

pub fn run() -> Result<f64> {
    let tau = 1.0;
    let n_c = 20;
    let t = n_c as f64 * tau;
    println!("F(omega) for n_c = {n_c}, tau = {tau}");
    // the tan factor has a pole at (n_c + 1) pi / t, one step past the last sample
    for k in -4..4 {
        let w = PI / tau + k as f64 * 0.25 * PI / t;
        println!("  omega = {w:.4}  F = {:.4}", filter_function(n_c, t, w)?);
    }
    let w50 = filter_lobe_weight(50, tau)?;
    let w100 = filter_lobe_weight(100, tau)?;
    println!("lobe weight n_c=50: {w50:.4}, n_c=100: {w100:.4}, ratio {:.3}", w100 / w50);

    let schedule = PulseSchedule::new(100, 1e-3, 0.0, 1);
    let modes = [Mode { omega: 1.0, g: 1e-3 }, Mode { omega: 6.27, g: 1e-3 }];
    for row in multimode_filter_report(&modes, &schedule)? {
        println!("  mode omega = {:.2}: F = {:.3e}, share {:.2e}", row.omega, row.filter_value, row.weight_fraction);
    }
    Ok(w100 / w50)
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run() {
        eprintln!("{e}");
        std::process::exit(e.exit_code());
    }
}
