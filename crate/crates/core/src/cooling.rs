//! Closed-form cooling model: per-round recurrence, cooling rate and the
//! logarithmic round count needed to reach the ground state.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoolingModelState {
    /// `n_0, n_1, ..., n_M`.
    pub occupancies: Vec<f64>,
    pub lambda: f64,
    /// `gamma_M = (4 g^2 / omega) n_M`, present when `g` and `omega` were given.
    pub rates: Option<Vec<f64>>,
}

/// Iterates `n -> n exp(-2 lambda^2 n)` for `rounds` steps.
pub fn cooling_recurrence(n0: f64, lambda: f64, rounds: u32, coupling: Option<(f64, f64)>) -> Result<CoolingModelState> {
    if !(n0.is_finite() && n0 >= 0.0) {
        return Err(Error::validation("n0", "must be finite and >= 0"));
    }
    let value = lambda * lambda * n0;
    if value >= 1.0 {
        return Err(Error::Regime { value });
    }
    let mut occ = Vec::with_capacity(rounds as usize + 1);
    let mut n = n0;
    occ.push(n);
    for _ in 0..rounds {
        n *= (-2.0 * lambda * lambda * n).exp();
        occ.push(n);
    }
    let rates = coupling.map(|(g, omega)| occ.iter().map(|&n| cooling_rate(g, omega, n)).collect());
    Ok(CoolingModelState {
        occupancies: occ,
        lambda,
        rates,
    })
}

/// `(4 g^2 / omega) n`.
pub fn cooling_rate(g: f64, omega: f64, n: f64) -> f64 {
    4.0 * g * g / omega * n
}

/// First-order single-round result `n0 (1 - lambda^2 (2 n0 + 1))`.
pub fn one_shot_cooling(n0: f64, lambda: f64) -> f64 {
    n0 * (1.0 - lambda * lambda * (2.0 * n0 + 1.0))
}

/// Success probability of the first resonant round on a thermal state:
/// `(1 + exp(-2 lambda^2 (2 n + 1))) / 2`.
pub fn thermal_success_probability(n: f64, lambda: f64) -> f64 {
    0.5 * (1.0 + (-2.0 * lambda * lambda * (2.0 * n + 1.0)).exp())
}

/// `ceil(2 log2 n0)`, zero for `n0 <= 1`.
pub fn speed_limit_rounds(n0: f64) -> u32 {
    if n0 <= 1.0 {
        return 0;
    }
    (2.0 * n0.log2() - 1e-12).ceil() as u32
}

/// Number of leading rounds whose starting occupancy still gives a cooling
/// rate above the damping rate, following the recurrence at `lambda`.
pub fn useful_rounds(g: f64, omega: f64, gamma: f64, n0: f64, lambda: f64, max_rounds: u32) -> Result<u32> {
    if !(gamma >= 0.0) {
        return Err(Error::validation("gamma", "must be >= 0"));
    }
    if g == 0.0 {
        return Ok(0);
    }
    let state = cooling_recurrence(n0, lambda, max_rounds, None)?;
    let mut m = 0;
    for &n in state.occupancies.iter().take(max_rounds as usize) {
        if cooling_rate(g, omega, n) > gamma {
            m += 1;
        } else {
            break;
        }
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn one_step_value() {
        let s = cooling_recurrence(10.0, 0.1, 1, None).unwrap();
        assert!((s.occupancies[1] - 10.0 * (-0.2f64).exp()).abs() < 1e-12);
        assert!((s.occupancies[1] - 8.187).abs() < 1e-3);
    }

    #[test]
    fn three_step_values() {
        let s = cooling_recurrence(10.0, 0.1, 3, None).unwrap();
        let mut n = 10.0f64;
        for got in &s.occupancies[1..] {
            n *= (-0.02 * n).exp();
            assert!((got - n).abs() < 1e-12);
        }
        // 8.1873, 6.9506, 6.0480 when iterated by hand
        for (got, want) in s.occupancies[1..].iter().zip([8.187, 6.951, 6.048]) {
            assert!((got - want).abs() < 1e-3, "{got} vs {want}");
        }
    }

    #[test]
    fn no_coupling_is_constant() {
        let s = cooling_recurrence(7.0, 0.0, 5, Some((0.0, 1.0))).unwrap();
        assert!(s.occupancies.iter().all(|&n| n == 7.0));
        assert!(s.rates.unwrap().iter().all(|&r| r == 0.0));
    }

    #[test]
    fn regime_violation() {
        assert!(matches!(cooling_recurrence(20.0, 0.25, 3, None), Err(Error::Regime { .. })));
    }

    #[test]
    fn speed_limit_values() {
        assert_eq!(speed_limit_rounds(1.0), 0);
        assert_eq!(speed_limit_rounds(16.0), 8);
        assert_eq!(speed_limit_rounds(4.0), 4);
        assert_eq!(speed_limit_rounds(64.0), 12);
    }

    #[test]
    fn useful_round_limits() {
        assert_eq!(useful_rounds(1e-3, 1.0, 0.0, 10.0, 0.2, 50).unwrap(), 50);
        assert_eq!(useful_rounds(0.0, 1.0, 1e-3, 10.0, 0.2, 50).unwrap(), 0);
        // rate starts at twice the damping, so only a handful of rounds help
        let (g, n0) = (1e-3, 10.0);
        let gamma = cooling_rate(g, 1.0, n0) / 2.0;
        let m = useful_rounds(g, 1.0, gamma, n0, 0.2, 50).unwrap();
        assert!(m >= 1 && m < 10, "{m}");
    }

    #[test]
    fn thermal_probability_at_vacuum() {
        let p = thermal_success_probability(0.0, 0.25);
        assert!((p - 0.941248).abs() < 1e-6);
    }

    proptest! {
        #[test]
        fn recurrence_decreases(n0 in 0.01f64..50.0, lam in 0.001f64..0.5, m in 1u32..30) {
            prop_assume!(lam * lam * n0 < 1.0);
            let s = cooling_recurrence(n0, lam, m, None).unwrap();
            prop_assert!(s.occupancies.windows(2).all(|w| w[1] < w[0] && w[1] >= 0.0));
        }
    }
}
