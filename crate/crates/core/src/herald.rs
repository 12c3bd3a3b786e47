//! Conditional spin-measurement kicks and the repeated heralding protocol.

use std::collections::HashMap;
use std::f64::consts::FRAC_PI_2;
use std::sync::Arc;

use log::warn;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::fock::{build_thermal, observables_of, DampingChannel, DensityMatrix, Observables, OscillatorSpec, TruncationPolicy};
use crate::linalg::{join, quadrature_basis, split, CMatrix, QuadratureBasis, C64};
use crate::pulse::{compose_branch_nc, epsilon_for_rotation, g_for_lambda, BranchPropagator, PulseSchedule};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpinSpec {
    /// Coherence time in seconds; `null` or absent means no dephasing.
    #[serde(default = "infinite", serialize_with = "ser_t2", deserialize_with = "de_t2")]
    pub t2: f64,
    #[serde(default = "unit")]
    pub readout_fidelity: f64,
}

fn infinite() -> f64 {
    f64::INFINITY
}

fn unit() -> f64 {
    1.0
}

fn ser_t2<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_infinite() {
        s.serialize_none()
    } else {
        s.serialize_some(v)
    }
}

fn de_t2<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
}

impl Default for SpinSpec {
    fn default() -> Self {
        SpinSpec {
            t2: f64::INFINITY,
            readout_fidelity: 1.0,
        }
    }
}

impl SpinSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.t2 > 0.0) {
            return Err(Error::validation("spin.t2", "must be positive (null for infinite)"));
        }
        if !(0.5..=1.0).contains(&self.readout_fidelity) {
            return Err(Error::validation("spin.readout_fidelity", "must lie in [0.5, 1]"));
        }
        Ok(())
    }

    /// Spin contrast left after a block of length `t`.
    pub fn eta(&self, t: f64) -> f64 {
        if self.t2.is_infinite() {
            1.0
        } else {
            (-t / self.t2).exp()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Success,
    Fail,
}

/// Success and failure operators `V = (D+ + D-) R / 2`, `W = (D+ - D-) R / 2`.
///
/// Because the branch displacements are exact negatives of each other, both
/// operators are diagonal in the eigenbasis of the rotated quadrature:
/// `V = e^{i phi} R(psi)^† U cos(|beta| x) U^T R(psi) R(theta)` and the same
/// with `i sin` for `W`. The kick keeps that factored form and only builds
/// dense matrices on request.
#[derive(Debug, Clone)]
pub struct ConditionalKick {
    basis: Arc<QuadratureBasis>,
    plus: BranchPropagator,
    minus: BranchPropagator,
    psi: f64,
    cos: DVector<f64>,
    sin: DVector<f64>,
    pub eta: f64,
    pub readout_fidelity: f64,
    pub block_time: f64,
    pub n_c: u32,
}

/// A state expressed in the kick's quadrature basis, shared by both outcomes.
pub struct PreparedState<'a> {
    kick: &'a ConditionalKick,
    tilde: CMatrix,
    p_v: f64,
    p_w: f64,
}

impl ConditionalKick {
    pub fn new(plus: BranchPropagator, minus: BranchPropagator, eta: f64, readout_fidelity: f64, block_time: f64, n_c: u32, dim: usize) -> Self {
        debug_assert!((plus.displacement + minus.displacement).norm() < 1e-12);
        let basis = quadrature_basis(dim);
        let r = plus.displacement.norm();
        let psi = if r > 0.0 { plus.displacement.arg() - FRAC_PI_2 } else { 0.0 };
        let cos = basis.nodes.map(|x| (r * x).cos());
        let sin = basis.nodes.map(|x| (r * x).sin());
        ConditionalKick {
            basis,
            plus,
            minus,
            psi,
            cos,
            sin,
            eta,
            readout_fidelity,
            block_time,
            n_c,
        }
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    /// Kick strength `|beta|`, equal to `lambda` on resonance.
    pub fn strength(&self) -> f64 {
        self.plus.displacement.norm()
    }

    pub fn branches(&self) -> (BranchPropagator, BranchPropagator) {
        (self.plus, self.minus)
    }

    pub fn v_op(&self) -> CMatrix {
        let dim = self.dim();
        let half = C64::new(0.5, 0.0);
        (self.plus.to_matrix(dim) + self.minus.to_matrix(dim)) * half
    }

    pub fn w_op(&self) -> CMatrix {
        let dim = self.dim();
        let half = C64::new(0.5, 0.0);
        (self.plus.to_matrix(dim) - self.minus.to_matrix(dim)) * half
    }

    /// Weights of `V rho V^†` and `W rho W^†` in the observed outcome.
    fn mixing(&self, outcome: Outcome) -> (f64, f64) {
        let (eta, f) = (self.eta, self.readout_fidelity);
        let succ = (0.5 * (1.0 + eta), 0.5 * (1.0 - eta));
        let fail = (succ.1, succ.0);
        let (hit, miss) = match outcome {
            Outcome::Success => (succ, fail),
            Outcome::Fail => (fail, succ),
        };
        (f * hit.0 + (1.0 - f) * miss.0, f * hit.1 + (1.0 - f) * miss.1)
    }

    /// Rotates `rho` into the quadrature basis: `U^T R(psi + theta) rho R^† U`.
    pub fn prepare<'a>(&'a self, rho: &DensityMatrix) -> PreparedState<'a> {
        let n = self.dim();
        assert_eq!(rho.dim(), n, "state and kick truncations differ");
        let angle = self.psi + self.plus.rotation;
        let phases: Vec<C64> = (0..n).map(|k| C64::from_polar(1.0, -angle * k as f64)).collect();
        let m = rho.entries();
        let sigma = CMatrix::from_fn(n, n, |i, j| m[(i, j)] * phases[i] * phases[j].conj());
        let u = &self.basis.vectors;
        let ut = u.transpose();
        let (re, im) = split(&sigma);
        let tilde = join(&(&ut * (re * u)), &(&ut * (im * u)));
        let mut p_v = 0.0;
        let mut p_w = 0.0;
        for k in 0..n {
            let d = tilde[(k, k)].re;
            p_v += self.cos[k] * self.cos[k] * d;
            p_w += self.sin[k] * self.sin[k] * d;
        }
        PreparedState {
            kick: self,
            tilde,
            p_v,
            p_w,
        }
    }
}

impl PreparedState<'_> {
    /// `Tr[V rho V^†]` and `Tr[W rho W^†]`.
    pub fn branch_weights(&self) -> (f64, f64) {
        (self.p_v, self.p_w)
    }

    pub fn probability(&self, outcome: Outcome) -> f64 {
        let (a, b) = self.kick.mixing(outcome);
        (a * self.p_v + b * self.p_w).clamp(0.0, 1.0)
    }

    pub fn post_state(&self, outcome: Outcome) -> Result<DensityMatrix> {
        let p = self.probability(outcome);
        if !(p > 1e-12) {
            return Err(Error::ZeroProbability { probability: p });
        }
        let kick = self.kick;
        let (a, b) = kick.mixing(outcome);
        let n = kick.dim();
        let (c, s) = (&kick.cos, &kick.sin);
        let weighted = CMatrix::from_fn(n, n, |i, j| self.tilde[(i, j)] * (a * c[i] * c[j] + b * s[i] * s[j]));
        let u = &kick.basis.vectors;
        let ut = u.transpose();
        let (re, im) = split(&weighted);
        let back = join(&(u * (re * &ut)), &(u * (im * &ut)));
        let phases: Vec<C64> = (0..n).map(|k| C64::from_polar(1.0, kick.psi * k as f64)).collect();
        let mut out = CMatrix::from_fn(n, n, |i, j| back[(i, j)] * phases[i] * phases[j].conj() / p);
        // restore exact Hermiticity lost to rounding in the two GEMM passes
        let adj = out.adjoint();
        out = (out + adj) * C64::new(0.5, 0.0);
        Ok(DensityMatrix::from_entries_unchecked(out))
    }
}

/// Kick for the schedule's first round.
pub fn build_conditional_ops(schedule: &PulseSchedule, spin: &SpinSpec, spec: &OscillatorSpec) -> Result<ConditionalKick> {
    build_conditional_ops_round(schedule, spin, spec, 1)
}

/// Kick for round `round` (1-based), honouring `nc_schedule`.
pub fn build_conditional_ops_round(schedule: &PulseSchedule, spin: &SpinSpec, spec: &OscillatorSpec, round: u32) -> Result<ConditionalKick> {
    spec.validate()?;
    spin.validate()?;
    schedule.validate(spec.omega)?;
    let n_c = schedule.n_c_at(round);
    let plus = compose_branch_nc(n_c, schedule, spec, 1);
    let minus = compose_branch_nc(n_c, schedule, spec, -1);
    let beta2 = plus.displacement.norm_sqr();
    if beta2 * (spec.n_thermal + 1.0) > 0.5 * spec.dim as f64 {
        warn!(
            "kick |beta|^2 (n+1) = {:.3} is close to the truncation dim={}",
            beta2 * (spec.n_thermal + 1.0),
            spec.dim
        );
    }
    let t = schedule.block_time(spec.omega, round);
    Ok(ConditionalKick::new(plus, minus, spin.eta(t), spin.readout_fidelity, t, n_c, spec.dim))
}

/// Observed success probability, including dephasing and readout error.
pub fn success_probability(kick: &ConditionalKick, rho: &DensityMatrix) -> f64 {
    kick.prepare(rho).probability(Outcome::Success)
}

/// Normalized post-measurement state for the observed outcome.
pub fn project(kick: &ConditionalKick, rho: &DensityMatrix, outcome: Outcome) -> Result<DensityMatrix> {
    kick.prepare(rho).post_state(outcome)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProtocolMode {
    /// Follow the heralded branch only.
    #[default]
    Conditioned,
    /// Sample outcomes with a seeded generator.
    Trajectory,
}

/// What a trajectory does after a failed heralding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailPolicy {
    /// Start over from the thermal state.
    #[default]
    Restart,
    /// Keep the failure-conditioned state (exploration only; not the heralded protocol).
    Continue,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProtocolOptions {
    pub mode: ProtocolMode,
    pub on_fail: FailPolicy,
    pub truncation: TruncationPolicy,
    /// Run the (costly) eigenvalue positivity check on every post-round state.
    pub check_positivity: bool,
}

impl Default for ProtocolOptions {
    fn default() -> Self {
        ProtocolOptions {
            mode: ProtocolMode::Conditioned,
            on_fail: FailPolicy::Restart,
            truncation: TruncationPolicy::Strict,
            check_positivity: false,
        }
    }
}

impl ProtocolOptions {
    pub fn trajectory() -> Self {
        ProtocolOptions {
            mode: ProtocolMode::Trajectory,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: u32,
    pub n_c: u32,
    pub outcome: Outcome,
    pub p_success: f64,
    pub occupancy: f64,
    pub var_x: f64,
    pub var_p: f64,
    pub eta: f64,
    pub restarted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub rounds: Vec<RoundRecord>,
    /// Product of the per-round observed success probabilities.
    pub event_rate: f64,
    /// Successful heraldings since the last restart.
    pub rounds_completed: u32,
    pub initial: Observables,
    #[serde(rename = "final")]
    pub final_observables: Observables,
}

/// Product of per-round observed success probabilities.
pub fn event_rate(record: &TrajectoryRecord) -> f64 {
    record.rounds.iter().map(|r| r.p_success).product()
}

/// Caches kicks and damping channels for a fixed spec, keyed by pulse count.
struct RoundKit<'a> {
    spec: &'a OscillatorSpec,
    schedule: &'a PulseSchedule,
    spin: &'a SpinSpec,
    kicks: HashMap<u32, Arc<ConditionalKick>>,
    channels: HashMap<u32, Arc<DampingChannel>>,
    probe: DensityMatrix,
}

impl<'a> RoundKit<'a> {
    fn kick(&mut self, round: u32) -> Result<Arc<ConditionalKick>> {
        let n_c = self.schedule.n_c_at(round);
        if let Some(k) = self.kicks.get(&n_c) {
            return Ok(Arc::clone(k));
        }
        let k = Arc::new(build_conditional_ops_round(self.schedule, self.spin, self.spec, round)?);
        self.kicks.insert(n_c, Arc::clone(&k));
        Ok(k)
    }

    fn channel(&mut self, n_c: u32, duration: f64) -> Result<Arc<DampingChannel>> {
        if let Some(c) = self.channels.get(&n_c) {
            return Ok(Arc::clone(c));
        }
        let c = Arc::new(DampingChannel::calibrate(self.spec, duration, &self.probe)?);
        self.channels.insert(n_c, Arc::clone(&c));
        Ok(c)
    }
}

/// One run of the heralded protocol with a generator on stream 0 of `seed`.
pub fn run_protocol(spec: &OscillatorSpec, schedule: &PulseSchedule, spin: &SpinSpec, options: &ProtocolOptions, seed: u64) -> Result<TrajectoryRecord> {
    run_protocol_stream(spec, schedule, spin, options, seed, 0)
}

/// Generator for trajectory `index` under master seed `seed`. Streams are
/// independent, so trajectories can be computed in any order or in parallel.
pub fn trajectory_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

pub fn run_protocol_stream(spec: &OscillatorSpec, schedule: &PulseSchedule, spin: &SpinSpec, options: &ProtocolOptions, seed: u64, stream: u64) -> Result<TrajectoryRecord> {
    spec.validate()?;
    spin.validate()?;
    schedule.validate(spec.omega)?;
    let thermal = build_thermal(spec, options.truncation)?;
    let mut rng = trajectory_rng(seed, stream);
    let mut kit = RoundKit {
        spec,
        schedule,
        spin,
        kicks: HashMap::new(),
        channels: HashMap::new(),
        probe: thermal.clone(),
    };
    let initial = observables_of(&thermal);
    let mut rho = thermal.clone();
    let mut rounds = Vec::with_capacity(schedule.rounds as usize);
    let mut streak = 0u32;
    for round in 1..=schedule.rounds {
        let kick = kit.kick(round)?;
        if spec.gamma > 0.0 || spec.gamma_h > 0.0 {
            let channel = kit.channel(kick.n_c, kick.block_time)?;
            rho = channel.apply(&rho)?;
        }
        let prepared = kick.prepare(&rho);
        let p = prepared.probability(Outcome::Success);
        let outcome = match options.mode {
            ProtocolMode::Conditioned => Outcome::Success,
            ProtocolMode::Trajectory => {
                let u: f64 = rng.random();
                if u < p {
                    Outcome::Success
                } else {
                    Outcome::Fail
                }
            }
        };
        let mut restarted = false;
        rho = match (outcome, options.on_fail) {
            (Outcome::Success, _) => {
                streak += 1;
                prepared.post_state(Outcome::Success)?
            }
            (Outcome::Fail, FailPolicy::Restart) => {
                streak = 0;
                restarted = true;
                thermal.clone()
            }
            (Outcome::Fail, FailPolicy::Continue) => {
                streak = 0;
                prepared.post_state(Outcome::Fail)?
            }
        };
        if options.check_positivity {
            rho.positivity_diagnostic();
        }
        let obs = observables_of(&rho);
        rounds.push(RoundRecord {
            round,
            n_c: kick.n_c,
            outcome,
            p_success: p,
            occupancy: obs.occupancy,
            var_x: obs.var_x,
            var_p: obs.var_p,
            eta: kick.eta,
            restarted,
        });
    }
    let final_observables = observables_of(&rho);
    let mut record = TrajectoryRecord {
        rounds,
        event_rate: 0.0,
        rounds_completed: streak,
        initial,
        final_observables,
    };
    record.event_rate = event_rate(&record);
    Ok(record)
}

/// Runs `n` sampled trajectories; results are in trajectory-index order
/// regardless of how rayon schedules them.
pub fn run_ensemble(spec: &OscillatorSpec, schedule: &PulseSchedule, spin: &SpinSpec, options: &ProtocolOptions, seed: u64, n: u64) -> Result<Vec<TrajectoryRecord>> {
    let opts = ProtocolOptions {
        mode: ProtocolMode::Trajectory,
        ..*options
    };
    (0..n)
        .into_par_iter()
        .map(|i| run_protocol_stream(spec, schedule, spin, &opts, seed, i))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleRound {
    pub round: u32,
    pub p_success: f64,
    pub occupancy: f64,
    pub var_x: f64,
    pub var_p: f64,
    pub eta: f64,
    pub success_fraction: f64,
}

/// Per-round means over an ensemble.
pub fn ensemble_means(records: &[TrajectoryRecord]) -> Vec<EnsembleRound> {
    let Some(first) = records.first() else {
        return Vec::new();
    };
    let n = records.len() as f64;
    (0..first.rounds.len())
        .map(|k| {
            let mean = |f: &dyn Fn(&RoundRecord) -> f64| records.iter().map(|r| f(&r.rounds[k])).sum::<f64>() / n;
            EnsembleRound {
                round: first.rounds[k].round,
                p_success: mean(&|r| r.p_success),
                occupancy: mean(&|r| r.occupancy),
                var_x: mean(&|r| r.var_x),
                var_p: mean(&|r| r.var_p),
                eta: mean(&|r| r.eta),
                success_fraction: mean(&|r| if r.outcome == Outcome::Success { 1.0 } else { 0.0 }),
            }
        })
        .collect()
}

/// Conditioned cooling where each round's coupling is retuned to
/// `lambda^2 = lambda_sq_n / n_current` at fixed pulse count and fixed
/// residual rotation `epsilon t = rotation`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdaptivePlan {
    pub n_c: u32,
    pub rotation: f64,
    pub lambda_sq_n: f64,
    pub lambda_max: f64,
    pub target: f64,
    pub max_rounds: u32,
}

impl Default for AdaptivePlan {
    fn default() -> Self {
        AdaptivePlan {
            n_c: 10,
            rotation: 0.8,
            lambda_sq_n: 0.2,
            lambda_max: 1.0,
            target: 1.0,
            max_rounds: 40,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveRun {
    pub lambdas: Vec<f64>,
    pub rounds: Vec<RoundRecord>,
    /// First round after which the occupancy is below the target.
    pub rounds_to_target: Option<u32>,
}

pub fn adaptive_cooling_run(spec: &OscillatorSpec, spin: &SpinSpec, plan: &AdaptivePlan) -> Result<AdaptiveRun> {
    spec.validate()?;
    spin.validate()?;
    let mut rho = build_thermal(spec, TruncationPolicy::Strict)?;
    let eps = epsilon_for_rotation(plan.rotation, plan.n_c, spec.omega);
    let mut lambdas = Vec::new();
    let mut rounds = Vec::new();
    let mut hit = None;
    let mut channel: Option<DampingChannel> = None;
    for round in 1..=plan.max_rounds {
        let n = observables_of(&rho).occupancy.max(1e-12);
        let lambda = (plan.lambda_sq_n / n).sqrt().min(plan.lambda_max);
        let mut schedule = PulseSchedule::new(plan.n_c, g_for_lambda(lambda, plan.n_c, spec.omega), eps, 1);
        schedule.rounds = 1;
        let kick = build_conditional_ops(&schedule, spin, spec)?;
        if spec.gamma > 0.0 || spec.gamma_h > 0.0 {
            if channel.is_none() {
                channel = Some(DampingChannel::calibrate(spec, kick.block_time, &rho)?);
            }
            rho = channel.as_ref().expect("calibrated above").apply(&rho)?;
        }
        let prepared = kick.prepare(&rho);
        let p = prepared.probability(Outcome::Success);
        rho = prepared.post_state(Outcome::Success)?;
        let obs = observables_of(&rho);
        lambdas.push(kick.strength());
        rounds.push(RoundRecord {
            round,
            n_c: plan.n_c,
            outcome: Outcome::Success,
            p_success: p,
            occupancy: obs.occupancy,
            var_x: obs.var_x,
            var_p: obs.var_p,
            eta: kick.eta,
            restarted: false,
        });
        if obs.occupancy < plan.target {
            hit = Some(round);
            break;
        }
    }
    Ok(AdaptiveRun {
        lambdas,
        rounds,
        rounds_to_target: hit,
    })
}

/// Dense `V^†V + W^†W` for diagnostics.
pub fn completeness_matrix(kick: &ConditionalKick) -> CMatrix {
    let v = kick.v_op();
    let w = kick.w_op();
    let (vr, vi) = split(&v);
    let (wr, wi) = split(&w);
    let gram = |r: &DMatrix<f64>, i: &DMatrix<f64>| {
        let re = r.transpose() * r + i.transpose() * i;
        let im = r.transpose() * i - i.transpose() * r;
        (re, im)
    };
    let (a, b) = gram(&vr, &vi);
    let (c, d) = gram(&wr, &wi);
    join(&(a + c), &(b + d))
}
