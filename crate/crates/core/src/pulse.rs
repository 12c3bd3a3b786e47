//! Stroboscopic pi-pulse control: schedules, the CPMG filter function and the
//! exact spin-branch propagators of `H_s = w a^†a + s g (a + a^†)`.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{displacement_op, rotation_op, OscillatorSpec};
use crate::linalg::{CMatrix, C64};

/// Which side of the mode frequency the pulse spacing is detuned to:
/// `tau = pi / (omega - epsilon)` or `tau = pi / (omega + epsilon)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetuningSign {
    #[default]
    Minus,
    Plus,
}

/// Per-round pulse counts. Both forms are rounded to the nearest integer
/// and clamped to at least one pulse.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NcSchedule {
    /// `n_c(M) = prefactor * M^exponent`.
    PowerLaw { prefactor: f64, exponent: f64 },
    /// Explicit counts for rounds 1, 2, ...; the last entry repeats.
    Table { values: Vec<u32> },
}

impl NcSchedule {
    pub fn n_c(&self, round: u32) -> u32 {
        let m = round.max(1);
        match self {
            NcSchedule::PowerLaw { prefactor, exponent } => {
                (prefactor * (m as f64).powf(*exponent)).round().max(1.0) as u32
            }
            NcSchedule::Table { values } => {
                let idx = (m as usize - 1).min(values.len().saturating_sub(1));
                values.get(idx).copied().unwrap_or(1).max(1)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseSchedule {
    pub n_c: u32,
    /// Detuning of the pulse spacing from the mode (rad/s).
    #[serde(default)]
    pub epsilon: f64,
    #[serde(default)]
    pub detuning_sign: DetuningSign,
    /// Spin-phonon coupling (rad/s).
    pub g: f64,
    #[serde(default = "default_rounds", alias = "rounds_M")]
    pub rounds: u32,
    #[serde(default)]
    pub nc_schedule: Option<NcSchedule>,
}

fn default_rounds() -> u32 {
    1
}

impl PulseSchedule {
    pub fn new(n_c: u32, g: f64, epsilon: f64, rounds: u32) -> Self {
        PulseSchedule {
            n_c,
            epsilon,
            detuning_sign: DetuningSign::Minus,
            g,
            rounds,
            nc_schedule: None,
        }
    }

    pub fn validate(&self, omega: f64) -> Result<()> {
        if self.n_c < 1 {
            return Err(Error::validation("schedule.n_c", "must be at least 1"));
        }
        if !(self.g.is_finite() && self.g >= 0.0) {
            return Err(Error::validation("schedule.g", "must be >= 0"));
        }
        if !self.epsilon.is_finite() {
            return Err(Error::validation("schedule.epsilon", "must be finite"));
        }
        if let Some(NcSchedule::Table { values }) = &self.nc_schedule {
            if values.is_empty() {
                return Err(Error::validation("schedule.nc_schedule.values", "must not be empty"));
            }
        }
        if let Some(NcSchedule::PowerLaw { prefactor, exponent }) = &self.nc_schedule {
            if !(prefactor.is_finite() && *prefactor > 0.0 && exponent.is_finite()) {
                return Err(Error::validation("schedule.nc_schedule", "prefactor must be positive"));
            }
        }
        let tau = self.tau(omega);
        if !(tau.is_finite() && tau > 0.0) {
            return Err(Error::validation(
                "schedule.epsilon",
                format!("pulse spacing pi/(omega -/+ epsilon) = {tau} is not positive"),
            ));
        }
        Ok(())
    }

    /// Pulse count in round `round` (1-based).
    pub fn n_c_at(&self, round: u32) -> u32 {
        match &self.nc_schedule {
            Some(s) => s.n_c(round),
            None => self.n_c,
        }
    }

    pub fn tau(&self, omega: f64) -> f64 {
        match self.detuning_sign {
            DetuningSign::Minus => PI / (omega - self.epsilon),
            DetuningSign::Plus => PI / (omega + self.epsilon),
        }
    }

    /// `t = n_c tau` for round `round`.
    pub fn block_time(&self, omega: f64, round: u32) -> f64 {
        self.n_c_at(round) as f64 * self.tau(omega)
    }

    /// Detuning as seen by the oscillator: the rotation left over per block is
    /// `n_c pi + epsilon_eff t`.
    pub fn effective_epsilon(&self) -> f64 {
        match self.detuning_sign {
            DetuningSign::Minus => self.epsilon,
            DetuningSign::Plus => -self.epsilon,
        }
    }
}

/// `F = 4 tan^2(w t / (2 n_c + 2)) cos^2(w t / 2)`.
pub fn filter_function(n_c: u32, t: f64, omega: f64) -> Result<f64> {
    let x = omega * t / (2.0 * n_c as f64 + 2.0);
    if x.cos().abs() < 1e-12 {
        return Err(Error::FilterPole { argument: x });
    }
    let c = (omega * t / 2.0).cos();
    Ok(4.0 * x.tan().powi(2) * c * c)
}

/// `lambda = 2 g n_c / omega`.
pub fn lambda_eff(g: f64, n_c: u32, omega: f64) -> f64 {
    2.0 * g * n_c as f64 / omega
}

/// Coupling that gives a target `lambda` at fixed pulse count.
pub fn g_for_lambda(lambda: f64, n_c: u32, omega: f64) -> f64 {
    lambda * omega / (2.0 * n_c as f64)
}

/// Detuning for which the residual rotation per block is `phi`:
/// `epsilon t = phi` with `t = n_c pi / (omega - epsilon)`.
pub fn epsilon_for_rotation(phi: f64, n_c: u32, omega: f64) -> f64 {
    phi * omega / (n_c as f64 * PI + phi)
}

/// `e^{i phase} D(displacement) R(rotation)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BranchPropagator {
    pub phase: f64,
    pub displacement: C64,
    pub rotation: f64,
}

impl BranchPropagator {
    pub fn identity() -> Self {
        BranchPropagator {
            phase: 0.0,
            displacement: C64::new(0.0, 0.0),
            rotation: 0.0,
        }
    }

    /// Operator product `self * rhs`, using `R(theta) D(beta) = D(beta e^{-i theta}) R(theta)`
    /// and `D(b1) D(b2) = e^{i Im(b1 b2*)} D(b1 + b2)`.
    pub fn compose(&self, rhs: &BranchPropagator) -> BranchPropagator {
        let moved = rhs.displacement * C64::from_polar(1.0, -self.rotation);
        BranchPropagator {
            phase: self.phase + rhs.phase + (self.displacement * moved.conj()).im,
            displacement: self.displacement + moved,
            rotation: (self.rotation + rhs.rotation).rem_euclid(TAU),
        }
    }

    /// `exp(-i H_s dt)` for `H_s = omega a^†a + s g (a + a^†)`, written as
    /// `e^{i g^2 dt/omega} D(-s g/omega) R(omega dt) D(s g/omega)`.
    pub fn segment(sign: f64, g: f64, omega: f64, dt: f64) -> BranchPropagator {
        let alpha = C64::new(sign * g / omega, 0.0);
        let outer = BranchPropagator {
            phase: g * g * dt / omega,
            displacement: -alpha,
            rotation: 0.0,
        };
        let free = BranchPropagator {
            phase: 0.0,
            displacement: C64::new(0.0, 0.0),
            rotation: (omega * dt).rem_euclid(TAU),
        };
        let inner = BranchPropagator {
            phase: 0.0,
            displacement: alpha,
            rotation: 0.0,
        };
        outer.compose(&free).compose(&inner)
    }

    pub fn to_matrix(&self, dim: usize) -> CMatrix {
        let d = displacement_op(self.displacement, dim);
        let r = rotation_op(self.rotation, dim);
        let mut m = d * r;
        m *= C64::from_polar(1.0, self.phase);
        m
    }
}

/// Segment durations of the symmetric CPMG layout: `tau/2, tau, ..., tau, tau/2`.
pub fn segment_durations(n_c: u32, tau: f64) -> Vec<f64> {
    let mut v = Vec::with_capacity(n_c as usize + 1);
    v.push(0.5 * tau);
    v.extend(std::iter::repeat_n(tau, n_c as usize - 1));
    v.push(0.5 * tau);
    v
}

/// Exact block propagator for an explicit pulse count.
pub fn compose_branch_nc(n_c: u32, schedule: &PulseSchedule, spec: &OscillatorSpec, initial_sign: i8) -> BranchPropagator {
    let tau = schedule.tau(spec.omega);
    let mut sign = if initial_sign >= 0 { 1.0 } else { -1.0 };
    let mut total = BranchPropagator::identity();
    for dt in segment_durations(n_c, tau) {
        let seg = BranchPropagator::segment(sign, schedule.g, spec.omega, dt);
        // later segments act on the left
        total = seg.compose(&total);
        sign = -sign;
    }
    total
}

/// Exact block propagator for the schedule's base pulse count.
pub fn compose_branch(schedule: &PulseSchedule, spec: &OscillatorSpec, initial_sign: i8) -> BranchPropagator {
    compose_branch_nc(schedule.n_c, schedule, spec, initial_sign)
}

/// Block propagator for round `round` (1-based), honouring `nc_schedule`.
pub fn compose_branch_round(schedule: &PulseSchedule, spec: &OscillatorSpec, initial_sign: i8, round: u32) -> BranchPropagator {
    compose_branch_nc(schedule.n_c_at(round), schedule, spec, initial_sign)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    pub omega: f64,
    pub g: f64,
}

/// Mechanical modes; the first entry is the one the pulse train is tuned to.
pub type ModeList = Vec<Mode>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModeFilterRow {
    pub omega: f64,
    pub g: f64,
    pub filter_value: f64,
    /// `g^2 F`, the spectral weight that mode contributes to the spin phase.
    pub weight: f64,
    pub weight_fraction: f64,
}

/// Filter value and share of total `g^2 F` weight for each mode, for a pulse
/// train timed on the first mode.
pub fn multimode_filter_report(modes: &[Mode], schedule: &PulseSchedule) -> Result<Vec<ModeFilterRow>> {
    let first = modes
        .first()
        .ok_or_else(|| Error::validation("modes", "mode list is empty"))?;
    if let Some(bad) = modes.iter().find(|m| !(m.omega > 0.0)) {
        return Err(Error::validation("modes", format!("non-positive mode frequency {}", bad.omega)));
    }
    let t = schedule.block_time(first.omega, 1);
    let mut rows = Vec::with_capacity(modes.len());
    for m in modes {
        let f = filter_function(schedule.n_c, t, m.omega)?;
        rows.push(ModeFilterRow {
            omega: m.omega,
            g: m.g,
            filter_value: f,
            weight: m.g * m.g * f,
            weight_fraction: 0.0,
        });
    }
    let total: f64 = rows.iter().map(|r| r.weight).sum();
    for r in &mut rows {
        r.weight_fraction = if total > 0.0 { r.weight / total } else { 0.0 };
    }
    Ok(rows)
}

/// Area under the filter's main lobe around `pi/tau`, in units of `omega`.
///
/// The peak height grows like `n_c^2` while the lobe narrows like `1/n_c`,
/// so this area is the quantity that grows linearly with the pulse count.
/// Only defined for even `n_c`; odd counts put a tan pole on the lobe edge.
pub fn filter_lobe_weight(n_c: u32, tau: f64) -> Result<f64> {
    if n_c % 2 == 1 {
        return Err(Error::validation("n_c", "lobe weight needs an even pulse count"));
    }
    let t = n_c as f64 * tau;
    let lo = (n_c as f64 - 1.0) * PI / t;
    let hi = (n_c as f64 + 1.0) * PI / t;
    let steps = 20_000;
    let h = (hi - lo) / steps as f64;
    let mut acc = 0.0;
    for k in 0..steps {
        acc += filter_function(n_c, t, lo + (k as f64 + 0.5) * h)?;
    }
    Ok(acc * h)
}
