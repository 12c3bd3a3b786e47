//! Phase-space engine: the thermal P-function reshaped by the spin filter,
//! sampled on a complex-plane grid.
//!
//! Round `k` of a kick sequence multiplies the P-function by
//! `Re[exp(z_k - conj z_k)]^2 = cos^2(2 Im z_k)` with
//! `z_k = kappa alpha e^{i a_k eps t}`, where `a_k` is the number of blocks
//! that have elapsed since the kick and `kappa = lambda (e^{i eps t} - 1)/(eps t)`.
//! At `eps -> 0` this is `cos^2(2 lambda Re alpha)`, the weight that the
//! position-diagonal kick `cos[lambda (a + a^†)]` puts on a coherent state.
//! Damping enters through a complex detuning `eps + i Gamma/2`.

use std::f64::consts::{PI, SQRT_2};
use std::io::Write;

use log::warn;
use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{Observables, OscillatorSpec};
use crate::herald::SpinSpec;
use crate::linalg::C64;
use crate::pulse::{lambda_eff, PulseSchedule};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterParams {
    pub lambda: f64,
    /// Complex detuning; the imaginary part is the amplitude damping rate `Gamma/2`.
    pub epsilon: C64,
    pub block_time: f64,
    pub rounds: u32,
}

impl FilterParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.block_time > 0.0 && self.block_time.is_finite()) {
            return Err(Error::validation("block_time", "must be positive"));
        }
        if !(self.lambda.is_finite() && self.epsilon.re.is_finite() && self.epsilon.im >= 0.0) {
            return Err(Error::validation("epsilon", "needs finite values and non-negative damping"));
        }
        Ok(())
    }

    fn kicks(&self) -> Vec<Kick> {
        vec![
            Kick {
                lambda: self.lambda,
                epsilon: self.epsilon,
                block_time: self.block_time,
                contrast: 1.0,
            };
            self.rounds as usize
        ]
    }
}

/// One round of the filter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Kick {
    pub lambda: f64,
    pub epsilon: C64,
    pub block_time: f64,
    /// `(2f - 1) eta`: how much of the ideal fringe survives dephasing and
    /// readout error. The per-kick factor is `(1 + contrast cos(4 Im z)) / 2`.
    #[serde(default = "unit_contrast")]
    pub contrast: f64,
}

fn unit_contrast() -> f64 {
    1.0
}

impl Kick {
    /// `lambda (e^{i x} - 1) / x` with `x = eps t`, by series for tiny `|x|`.
    pub fn kappa(&self) -> C64 {
        let x = self.epsilon * self.block_time;
        let i = C64::new(0.0, 1.0);
        if x.norm() < 1e-6 {
            // i + i^2 x/2 + i^3 x^2/6
            self.lambda * (i - x * 0.5 - i * x * x / 6.0)
        } else {
            self.lambda * ((i * x).exp() - 1.0) / x
        }
    }
}

/// Per-round kicks for a schedule, honouring `nc_schedule` and damping.
pub fn kicks_from_schedule(schedule: &PulseSchedule, spec: &OscillatorSpec, rounds: u32) -> Vec<Kick> {
    kicks_with_spin(schedule, spec, &SpinSpec::default(), rounds)
}

/// As [`kicks_from_schedule`], with the spin's dephasing and readout folded in.
pub fn kicks_with_spin(schedule: &PulseSchedule, spec: &OscillatorSpec, spin: &SpinSpec, rounds: u32) -> Vec<Kick> {
    let eps = C64::new(schedule.effective_epsilon(), 0.5 * spec.gamma);
    (1..=rounds)
        .map(|m| {
            let n_c = schedule.n_c_at(m);
            let block_time = schedule.block_time(spec.omega, m);
            Kick {
                lambda: lambda_eff(schedule.g, n_c, spec.omega),
                epsilon: eps,
                block_time,
                contrast: (2.0 * spin.readout_fidelity - 1.0) * spin.eta(block_time),
            }
        })
        .collect()
}

/// `exp(-|alpha|^2/n) / (pi n)`.
pub fn p0_eval(alpha: C64, n_thermal: f64) -> Result<f64> {
    if n_thermal <= 1e-9 {
        return Err(Error::DegenerateBath(n_thermal));
    }
    Ok((-alpha.norm_sqr() / n_thermal).exp() / (PI * n_thermal))
}

/// Log of the filter for an ordered kick sequence (first kick first).
pub fn log_filter(alpha: C64, kicks: &[Kick]) -> f64 {
    let m = kicks.len();
    let mut acc = 0.0;
    // age phase accumulates from the most recent kick backwards
    let mut age = C64::new(1.0, 0.0);
    for k in (0..m).rev() {
        let kick = &kicks[k];
        let z = kick.kappa() * alpha * age;
        if kick.contrast == 1.0 {
            acc += 2.0 * (2.0 * z.im).cos().abs().ln();
        } else {
            acc += (0.5 * (1.0 + kick.contrast * (4.0 * z.im).cos())).ln();
        }
        age *= (C64::new(0.0, 1.0) * kick.epsilon * kick.block_time).exp();
    }
    acc
}

/// Un-normalized filter `G_M(alpha)`, accumulated in log form.
pub fn g_filter(alpha: C64, params: &FilterParams) -> f64 {
    log_filter(alpha, &params.kicks()).exp()
}

/// `g_filter` with an added amplitude damping rate `Gamma/2` on the detuning.
pub fn damped_filter(alpha: C64, params: &FilterParams, gamma: f64) -> Result<f64> {
    if !(gamma >= 0.0) {
        return Err(Error::validation("gamma", "must be >= 0"));
    }
    let mut p = *params;
    p.epsilon += C64::new(0.0, 0.5 * gamma);
    Ok(g_filter(alpha, &p))
}

/// `cos^2(2 lambda Re alpha)^M`, the zero-detuning filter.
pub fn resonant_filter(alpha: C64, lambda: f64, rounds: u32) -> f64 {
    (2.0 * lambda * alpha.re).cos().powi(2).powi(rounds as i32)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    /// Half-width of the square grid; defaults to `5 sqrt(n)`.
    #[serde(default)]
    pub extent: Option<f64>,
    #[serde(default = "default_resolution")]
    pub resolution: usize,
}

fn default_resolution() -> usize {
    128
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            extent: None,
            resolution: default_resolution(),
        }
    }
}

/// Midpoint samples of a normalized P-function on `[-R, R]^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct PGrid {
    pub extent: f64,
    pub resolution: usize,
    /// Row-major, `values[iy * resolution + ix]`, with `x = Re alpha`.
    pub values: Vec<f64>,
    /// Factor that normalized `P_0 G`.
    pub c_m: f64,
    /// Fraction of the mass in the outermost ring of cells.
    pub boundary_mass: f64,
}

impl PGrid {
    pub fn spacing(&self) -> f64 {
        2.0 * self.extent / self.resolution as f64
    }

    pub fn coordinate(&self, i: usize) -> f64 {
        -self.extent + (i as f64 + 0.5) * self.spacing()
    }

    pub fn alpha(&self, ix: usize, iy: usize) -> C64 {
        C64::new(self.coordinate(ix), self.coordinate(iy))
    }

    pub fn value(&self, ix: usize, iy: usize) -> f64 {
        self.values[iy * self.resolution + ix]
    }

    /// `sum P dA`.
    pub fn total(&self) -> f64 {
        let da = self.spacing().powi(2);
        self.values.iter().sum::<f64>() * da
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().cloned().fold(f64::MIN, f64::max)
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().cloned().fold(f64::MAX, f64::min)
    }

    /// Writes `re_alpha,im_alpha,p_value` rows.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "re_alpha,im_alpha,p_value")?;
        for iy in 0..self.resolution {
            for ix in 0..self.resolution {
                let a = self.alpha(ix, iy);
                writeln!(w, "{:.16e},{:.16e},{:.16e}", a.re, a.im, self.value(ix, iy))?;
            }
        }
        Ok(())
    }
}

/// Samples `P_0 G` for a uniform kick sequence.
pub fn evolve_p(n_thermal: f64, params: &FilterParams, grid: &GridConfig) -> Result<PGrid> {
    params.validate()?;
    evolve_p_kicks(n_thermal, &params.kicks(), grid)
}

/// Samples `P_0 G` for an arbitrary kick sequence and normalizes it.
pub fn evolve_p_kicks(n_thermal: f64, kicks: &[Kick], grid: &GridConfig) -> Result<PGrid> {
    if n_thermal <= 1e-9 {
        return Err(Error::DegenerateBath(n_thermal));
    }
    if grid.resolution < 64 {
        return Err(Error::validation("grid.resolution", "must be at least 64"));
    }
    let nominal = 5.0 * n_thermal.sqrt();
    let extent = grid.extent.unwrap_or(nominal);
    if !(extent > 0.0) {
        return Err(Error::validation("grid.extent", "must be positive"));
    }
    if extent < nominal {
        warn!("grid extent {extent} is below 5 sqrt(n) = {nominal}");
    }
    let res = grid.resolution;
    let h = 2.0 * extent / res as f64;
    let coord = |i: usize| -extent + (i as f64 + 0.5) * h;
    let logs: Vec<f64> = (0..res * res)
        .into_par_iter()
        .map(|idx| {
            let a = C64::new(coord(idx % res), coord(idx / res));
            -a.norm_sqr() / n_thermal - (PI * n_thermal).ln() + log_filter(a, kicks)
        })
        .collect();
    let peak = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !peak.is_finite() {
        return Err(Error::Numeric("filtered P-function vanishes on the whole grid".into()));
    }
    let mut values: Vec<f64> = logs.iter().map(|l| (l - peak).exp()).collect();
    let da = h * h;
    let scaled_total: f64 = values.iter().sum::<f64>() * da;
    // values = P0 G e^{-peak}; C_M multiplies the raw product
    let c_m = 1.0 / (scaled_total * peak.exp());
    for v in &mut values {
        *v /= scaled_total;
    }
    let mut edge = 0.0;
    for iy in 0..res {
        for ix in 0..res {
            if ix == 0 || iy == 0 || ix + 1 == res || iy + 1 == res {
                edge += values[iy * res + ix];
            }
        }
    }
    let boundary_mass = edge * da;
    if boundary_mass > 1e-4 {
        warn!("P-function boundary mass {boundary_mass:e} exceeds 1e-4; enlarge the grid extent");
    }
    Ok(PGrid {
        extent,
        resolution: res,
        values,
        c_m,
        boundary_mass,
    })
}

/// Normal-ordered moments. Purity uses `Tr rho^2 = iint P(a) P(b) e^{-|a-b|^2}`.
pub fn moments_from_p(grid: &PGrid) -> Observables {
    let res = grid.resolution;
    let da = grid.spacing().powi(2);
    let (mut m0, mut mx, mut my, mut mxx, mut myy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for iy in 0..res {
        let y = grid.coordinate(iy);
        for ix in 0..res {
            let x = grid.coordinate(ix);
            let p = grid.value(ix, iy) * da;
            m0 += p;
            mx += p * x;
            my += p * y;
            mxx += p * x * x;
            myy += p * y * y;
        }
    }
    let (mx, my, mxx, myy) = (mx / m0, my / m0, mxx / m0, myy / m0);
    let mean_x = SQRT_2 * mx;
    let mean_p = SQRT_2 * my;
    let kernel = DMatrix::from_fn(res, res, |i, j| {
        let d = grid.coordinate(i) - grid.coordinate(j);
        (-d * d).exp()
    });
    // P as a matrix with rows = y index, cols = x index
    let p = DMatrix::from_fn(res, res, |iy, ix| grid.value(ix, iy));
    let smoothed = &kernel * &p * &kernel;
    let purity = p.component_mul(&smoothed).sum() * da * da / (m0 * m0);
    Observables {
        occupancy: mxx + myy,
        mean_x,
        var_x: 2.0 * mxx - mean_x * mean_x + 0.5,
        var_p: 2.0 * myy - mean_p * mean_p + 0.5,
        purity,
    }
}

/// Per-round observables of the phase-space engine for a schedule.
pub fn pfunction_rounds(spec: &OscillatorSpec, schedule: &PulseSchedule, grid: &GridConfig) -> Result<Vec<Observables>> {
    Ok(pfunction_trace(spec, schedule, &SpinSpec::default(), grid)?
        .rounds
        .into_iter()
        .map(|r| r.observables)
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PRound {
    pub round: u32,
    /// `C_{m-1} / C_m`, the heralding probability of this round given the earlier successes.
    pub p_success: f64,
    pub c_m: f64,
    pub observables: Observables,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PTrace {
    pub initial: Observables,
    pub rounds: Vec<PRound>,
    /// Grid after the last round.
    pub grid: PGrid,
}

/// Evolves the P-function round by round, keeping every round's moments.
pub fn pfunction_trace(spec: &OscillatorSpec, schedule: &PulseSchedule, spin: &SpinSpec, grid: &GridConfig) -> Result<PTrace> {
    let kicks = kicks_with_spin(schedule, spec, spin, schedule.rounds);
    let first = evolve_p_kicks(spec.n_thermal, &[], grid)?;
    let initial = moments_from_p(&first);
    let mut prev_c = first.c_m;
    let mut last = first;
    let mut rounds = Vec::with_capacity(kicks.len());
    for m in 1..=kicks.len() {
        let g = evolve_p_kicks(spec.n_thermal, &kicks[..m], grid)?;
        rounds.push(PRound {
            round: m as u32,
            p_success: prev_c / g.c_m,
            c_m: g.c_m,
            observables: moments_from_p(&g),
        });
        prev_c = g.c_m;
        last = g;
    }
    Ok(PTrace {
        initial,
        rounds,
        grid: last,
    })
}
