//! Named parameter sets in units where the mode frequency is 1.
//!
//! `caption_*` follow the published figure parameters literally. They do not
//! cool below one phonon from the default start, so the `*_recipe` sets use
//! a stronger per-round kick (`n_c = 10`) to show the same behaviour in a
//! handful of rounds.

use crate::config::auto_dim;
use crate::fock::OscillatorSpec;
use crate::pulse::{g_for_lambda, NcSchedule, PulseSchedule};

/// Starting occupancy used when none is given.
pub const DEFAULT_N0: f64 = 10.0;

/// Thermal oscillator at `omega = 1` with the automatic truncation.
pub fn oscillator(n0: f64) -> OscillatorSpec {
    OscillatorSpec::new(1.0, n0, auto_dim(n0))
}

/// Off-resonant cooling: `lambda = 0.25`, `n_c = 10`, `epsilon = 0.1 lambda omega`.
pub fn cooling_recipe(rounds: u32) -> PulseSchedule {
    let lambda = 0.25;
    PulseSchedule::new(10, g_for_lambda(lambda, 10, 1.0), 0.1 * lambda, rounds)
}

/// Resonant squeezing: `lambda = 0.1`, `n_c = 10`, `epsilon = 0`.
pub fn squeezing_recipe(rounds: u32) -> PulseSchedule {
    PulseSchedule::new(10, g_for_lambda(0.1, 10, 1.0), 0.0, rounds)
}

/// Coupling of the published figures, `g / omega = 2.5e-4`.
pub const CAPTION_G: f64 = 2.5e-4;

/// `n_c(M) = 100 M^0.25` with `epsilon = 20 g`, or `epsilon = 0` when `resonant`.
pub fn caption_schedule(resonant: bool, rounds: u32) -> PulseSchedule {
    let eps = if resonant { 0.0 } else { 20.0 * CAPTION_G };
    let mut s = PulseSchedule::new(100, CAPTION_G, eps, rounds);
    s.nc_schedule = Some(NcSchedule::PowerLaw {
        prefactor: 100.0,
        exponent: 0.25,
    });
    s
}

/// Caption coupling at a fixed `n_c = 500`, so `lambda = 0.25`, with
/// `epsilon = 0.1 lambda omega` off resonance.
pub fn cross_check_schedule(resonant: bool, rounds: u32) -> PulseSchedule {
    let lambda = 2.0 * CAPTION_G * 500.0;
    let eps = if resonant { 0.0 } else { 0.1 * lambda };
    PulseSchedule::new(500, CAPTION_G, eps, rounds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pulse::lambda_eff;

    #[test]
    fn recipe_strengths() {
        assert!((lambda_eff(cooling_recipe(1).g, 10, 1.0) - 0.25).abs() < 1e-15);
        assert!((lambda_eff(squeezing_recipe(1).g, 10, 1.0) - 0.1).abs() < 1e-15);
        let c = cross_check_schedule(false, 1);
        assert!((lambda_eff(c.g, c.n_c, 1.0) - 0.25).abs() < 1e-15);
        assert!((c.epsilon - 0.025).abs() < 1e-15);
        let cap = caption_schedule(false, 10);
        assert_eq!(cap.n_c_at(1), 100);
        assert_eq!(cap.n_c_at(16), 200);
        assert!((cap.epsilon - 5e-3).abs() < 1e-15);
    }
}
