//! Laboratory numbers to model parameters.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{minimal_thermal_dim, OscillatorSpec};
use crate::herald::SpinSpec;
use crate::pulse::{epsilon_for_rotation, lambda_eff, PulseSchedule};

pub const PLANCK: f64 = 6.626_070_15e-34;
pub const BOLTZMANN: f64 = 1.380_649e-23;
/// NV electron spin, Hz per tesla.
pub const ELECTRON_GYROMAGNETIC_HZ_PER_T: f64 = 2.8e10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabSetup {
    pub mode_frequency_hz: f64,
    pub zero_point_motion_m: f64,
    pub field_gradient_t_per_m: f64,
    #[serde(default = "default_gyro")]
    pub gyromagnetic_hz_per_t: f64,
    pub temperature_k: f64,
    pub quality_factor: f64,
    pub t2_s: f64,
}

fn default_gyro() -> f64 {
    ELECTRON_GYROMAGNETIC_HZ_PER_T
}

impl LabSetup {
    /// Cantilever numbers: 10 MHz mode, 1e-14 m zero-point motion, 2 G/nm
    /// gradient, 4 K, Q = 1e5, T2 = 10 ms.
    pub fn reference() -> Self {
        LabSetup {
            mode_frequency_hz: 1e7,
            zero_point_motion_m: 1e-14,
            field_gradient_t_per_m: 2e5,
            gyromagnetic_hz_per_t: ELECTRON_GYROMAGNETIC_HZ_PER_T,
            temperature_k: 4.0,
            quality_factor: 1e5,
            t2_s: 1e-2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let checks = [
            ("lab.mode_frequency_hz", self.mode_frequency_hz, false),
            ("lab.zero_point_motion_m", self.zero_point_motion_m, false),
            ("lab.field_gradient_t_per_m", self.field_gradient_t_per_m, true),
            ("lab.gyromagnetic_hz_per_t", self.gyromagnetic_hz_per_t, false),
            ("lab.temperature_k", self.temperature_k, true),
            ("lab.t2_s", self.t2_s, false),
        ];
        for (field, v, zero_ok) in checks {
            let ok = v.is_finite() && (v > 0.0 || (zero_ok && v == 0.0));
            if !ok {
                return Err(Error::validation(field, "must be positive and finite"));
            }
        }
        // infinite Q is allowed and means no damping
        if !(self.quality_factor > 0.0) {
            return Err(Error::validation("lab.quality_factor", "must be positive"));
        }
        Ok(())
    }

    pub fn omega(&self) -> f64 {
        TAU * self.mode_frequency_hz
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coupling {
    /// `gamma_e * gradient * x_zp` in Hz.
    pub g_hz: f64,
    /// `2 pi g_hz` in rad/s; this is the value the model uses.
    pub g_rad: f64,
}

pub fn coupling_from_gradient(setup: &LabSetup) -> Coupling {
    let g_hz = setup.gyromagnetic_hz_per_t * setup.field_gradient_t_per_m * setup.zero_point_motion_m;
    Coupling { g_hz, g_rad: TAU * g_hz }
}

/// Bose occupancy `1/(e^{hf/kT} - 1)`.
pub fn nbar_from_temperature(setup: &LabSetup) -> f64 {
    if setup.temperature_k <= 0.0 {
        return 0.0;
    }
    let x = PLANCK * setup.mode_frequency_hz / (BOLTZMANN * setup.temperature_k);
    1.0 / x.exp_m1()
}

/// `Gamma = omega / Q`.
pub fn gamma_from_q(setup: &LabSetup) -> f64 {
    setup.omega() / setup.quality_factor
}

/// Suggested `lambda = sqrt(0.5/n)`, capped at 1.
pub fn suggested_lambda(n: f64) -> f64 {
    if n <= 0.5 {
        1.0
    } else {
        (0.5 / n).sqrt().min(1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LabBundle {
    pub oscillator: OscillatorSpec,
    pub spin: SpinSpec,
    pub schedule: PulseSchedule,
    pub coupling: Coupling,
    pub lambda: f64,
    pub block_time: f64,
    pub warnings: Vec<String>,
}

/// Residual rotation per block used for suggested schedules.
pub const SUGGESTED_ROTATION: f64 = 0.8;

/// Warning text when a block outlasts the spin coherence.
pub fn coherence_warning(block_time: f64, t2: f64) -> Option<String> {
    (block_time > t2).then(|| format!("block time {block_time:e} s exceeds T2 = {t2:e} s; the regime is infeasible"))
}

/// Bundles the conversions and suggests a schedule with `lambda^2 n <= 1/2`.
/// Problems are returned in `warnings` rather than logged.
pub fn spec_from_lab(setup: &LabSetup) -> Result<LabBundle> {
    setup.validate()?;
    let omega = setup.omega();
    let coupling = coupling_from_gradient(setup);
    let n = nbar_from_temperature(setup);
    let gamma = gamma_from_q(setup);
    let mut warnings = Vec::new();

    let target = suggested_lambda(n);
    let g = coupling.g_rad;
    let mut n_c = if g > 0.0 {
        (target * omega / (2.0 * g)).round().max(1.0) as u32
    } else {
        warnings.push("zero coupling: no pulse count gives a finite lambda".to_string());
        1
    };
    while n_c > 1 && lambda_eff(g, n_c, omega).powi(2) * n > 0.5 + 1e-12 {
        n_c -= 1;
    }
    let lambda = lambda_eff(g, n_c, omega);
    if lambda * lambda * n > 0.5 + 1e-12 {
        warnings.push(format!("even one pulse gives lambda^2 n = {:.3} > 0.5", lambda * lambda * n));
    }
    let schedule = PulseSchedule::new(n_c, g, epsilon_for_rotation(SUGGESTED_ROTATION, n_c, omega), 1);
    let block_time = schedule.block_time(omega, 1);
    if let Some(w) = coherence_warning(block_time, setup.t2_s) {
        warnings.push(w);
    }
    let dim = minimal_thermal_dim(n).max((10.0 * (n + 1.0)).ceil() as usize);
    if dim > 2048 {
        warnings.push(format!("n = {n:.1} needs dim {dim}; use the phase-space engine"));
    }
    Ok(LabBundle {
        oscillator: OscillatorSpec {
            omega,
            gamma,
            gamma_h: 0.0,
            n_thermal: n,
            dim,
        },
        spin: SpinSpec {
            t2: setup.t2_s,
            readout_fidelity: 1.0,
        },
        schedule,
        coupling,
        lambda,
        block_time,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn reference_coupling() {
        let c = coupling_from_gradient(&LabSetup::reference());
        assert!((c.g_hz - 56.0).abs() < 1e-9, "{}", c.g_hz);
        assert!((c.g_rad / c.g_hz - TAU).abs() < 1e-12);
        let mut s = LabSetup::reference();
        s.field_gradient_t_per_m = 0.0;
        assert_eq!(coupling_from_gradient(&s).g_hz, 0.0);
        s.field_gradient_t_per_m = 4e5;
        assert!((coupling_from_gradient(&s).g_hz - 112.0).abs() < 1e-9);
    }

    #[test]
    fn occupancy_values() {
        let s = LabSetup::reference();
        let n = nbar_from_temperature(&s);
        // kT/hf - 1/2 to second order
        let x = PLANCK * 1e7 / (BOLTZMANN * 4.0);
        let approx = 1.0 / x - 0.5 + x / 12.0;
        assert!((n - approx).abs() < 1e-6 * n);
        assert!((n - 8.33e3).abs() < 0.01 * 8.33e3, "{n}");
        let mut cold = s;
        cold.temperature_k = 0.0;
        assert_eq!(nbar_from_temperature(&cold), 0.0);
        let mut ln2 = s;
        ln2.temperature_k = PLANCK * s.mode_frequency_hz / (BOLTZMANN * 2f64.ln());
        assert!((nbar_from_temperature(&ln2) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn damping_values() {
        let s = LabSetup::reference();
        let g = gamma_from_q(&s);
        assert!((g - 628.0).abs() < 0.001 * 628.0);
        assert!((g * s.quality_factor - s.omega()).abs() < 1e-12 * s.omega());
        let mut inf = s;
        inf.quality_factor = f64::INFINITY;
        assert_eq!(gamma_from_q(&inf), 0.0);
    }

    #[test]
    fn reference_bundle() {
        let b = spec_from_lab(&LabSetup::reference()).unwrap();
        assert!((suggested_lambda(8333.0) - 7.7e-3).abs() < 0.05e-3);
        assert!((b.lambda - suggested_lambda(b.oscillator.n_thermal)).abs() < 0.01 * b.lambda);
        assert!(b.block_time < 1e-2);
        assert!(b.warnings.iter().all(|w| !w.contains("T2")));
        assert_eq!(suggested_lambda(0.3), 1.0);
    }

    #[test]
    fn long_block_triggers_warning() {
        assert!(coherence_warning(0.05, 0.01).is_some());
        assert!(coherence_warning(0.005, 0.01).is_none());
        // 1 kHz mode: tau = 0.5 ms, so ~100 pulses give a 50 ms block
        let mut s = LabSetup::reference();
        s.mode_frequency_hz = 1e3;
        s.temperature_k = 1e-6;
        let n = nbar_from_temperature(&s);
        let lam = suggested_lambda(n);
        s.field_gradient_t_per_m = lam * s.omega() / (2.0 * 100.0) / TAU / (s.gyromagnetic_hz_per_t * s.zero_point_motion_m);
        let b = spec_from_lab(&s).unwrap();
        assert!((b.block_time - 0.05).abs() < 0.002, "{}", b.block_time);
        assert!(b.warnings.iter().any(|w| w.contains("T2")));
    }

    proptest! {
        #[test]
        fn suggested_schedule_stays_weak(
            f in 1e5f64..1e8, grad in 1e3f64..1e7, temp in 1e-3f64..10.0,
        ) {
            let mut s = LabSetup::reference();
            s.mode_frequency_hz = f;
            s.field_gradient_t_per_m = grad;
            s.temperature_k = temp;
            let b = spec_from_lab(&s).unwrap();
            let n = b.oscillator.n_thermal;
            if b.schedule.n_c > 1 {
                prop_assert!(b.lambda * b.lambda * n <= 0.5 + 1e-12);
            }
            prop_assert!((b.oscillator.omega / TAU - f).abs() <= 1e-12 * f);
        }
    }
}
