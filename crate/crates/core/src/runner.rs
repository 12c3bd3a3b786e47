//! Runs a config through the selected engine(s) and writes the result files.
//!
//! Every run directory gets `summary.json` and `rounds.csv`. The phase-space
//! engine adds `pgrid.csv`, `engine = "both"` adds `compare.csv`, and
//! ensembles (`n_trajectories > 0`) add `trajectories.csv` while
//! `rounds.csv` holds the ensemble means.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use log::{info, warn};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Engine, ResolvedRun, RunConfig};
use crate::cooling::{cooling_recurrence, thermal_success_probability};
use crate::error::{Error, Result};
use crate::fock::{Observables, OscillatorSpec, TruncationPolicy};
use crate::herald::{ensemble_means, run_ensemble, run_protocol, Outcome, ProtocolOptions, TrajectoryRecord};
use crate::pfunction::{pfunction_trace, PGrid};
use crate::pulse::lambda_eff;

/// The success rate quoted for the published cooling run. Reported next to
/// ours for orientation only; the published starting occupancy is unknown.
pub const REFERENCE_EVENT_RATE: f64 = 0.125;

/// Environment variable that caps the worker thread count.
pub const THREADS_ENV: &str = "HERALD_SIM_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RoundRow {
    pub round: u32,
    pub p_success: f64,
    pub occupancy: f64,
    pub var_x: f64,
    pub var_p: f64,
    pub eta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EngineResult {
    pub engine: Engine,
    pub initial: Observables,
    #[serde(rename = "final")]
    pub final_observables: Observables,
    /// Product of the per-round success probabilities; for ensembles, the
    /// fraction of trajectories in which every round succeeded.
    pub event_rate: f64,
    pub rounds: Vec<RoundRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EventRateDiagnostic {
    pub reference: f64,
    pub ratio: f64,
    pub note: &'static str,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub engine: Engine,
    pub seed: Option<u64>,
    pub n_trajectories: u64,
    pub oscillator: OscillatorSpec,
    pub spin: crate::herald::SpinSpec,
    pub schedule: crate::pulse::PulseSchedule,
    pub initial: Observables,
    #[serde(rename = "final")]
    pub final_observables: Observables,
    pub event_rate: f64,
    pub event_rate_reference: EventRateDiagnostic,
    pub rounds: Vec<RoundRow>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
    /// The phase-space result when both engines ran.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub secondary: Option<EngineResult>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CompareRow {
    pub round: u32,
    pub occupancy_fock: f64,
    pub occupancy_pfunction: f64,
    pub var_x_fock: f64,
    pub var_x_pfunction: f64,
    pub var_p_fock: f64,
    pub var_p_pfunction: f64,
    pub p_success_fock: f64,
    pub p_success_pfunction: f64,
}

/// `(other - reference) / |reference|`.
pub fn relative_deviation(reference: f64, other: f64) -> f64 {
    (other - reference) / reference.abs()
}

/// Everything a run produced, before it is written out.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub summary: Summary,
    pub pgrid: Option<PGrid>,
    pub trajectories: Option<Vec<TrajectoryRecord>>,
    pub compare: Option<Vec<CompareRow>>,
    pub output_dir: PathBuf,
}

fn options_of(config: &RunConfig) -> ProtocolOptions {
    ProtocolOptions {
        mode: config.mode,
        on_fail: config.on_fail,
        truncation: config.truncation,
        check_positivity: false,
    }
}

fn fock_result(config: &RunConfig, r: &ResolvedRun) -> Result<(EngineResult, Option<Vec<TrajectoryRecord>>)> {
    let opts = options_of(config);
    if config.n_trajectories > 0 {
        let seed = config.seed.ok_or_else(|| Error::validation("seed", "required when n_trajectories > 0"))?;
        let records = run_ensemble(&r.oscillator, &r.schedule, &r.spin, &opts, seed, config.n_trajectories)?;
        let means = ensemble_means(&records);
        let rows = means
            .iter()
            .map(|m| RoundRow {
                round: m.round,
                p_success: m.p_success,
                occupancy: m.occupancy,
                var_x: m.var_x,
                var_p: m.var_p,
                eta: m.eta,
            })
            .collect();
        let n = records.len() as f64;
        let all_ok = records
            .iter()
            .filter(|t| t.rounds.iter().all(|x| x.outcome == Outcome::Success))
            .count() as f64;
        let mean_obs = |f: &dyn Fn(&TrajectoryRecord) -> &Observables| {
            let s = records.iter().fold([0.0; 5], |mut acc, t| {
                let o = f(t);
                for (a, v) in acc.iter_mut().zip([o.occupancy, o.mean_x, o.var_x, o.var_p, o.purity]) {
                    *a += v;
                }
                acc
            });
            Observables {
                occupancy: s[0] / n,
                mean_x: s[1] / n,
                var_x: s[2] / n,
                var_p: s[3] / n,
                purity: s[4] / n,
            }
        };
        let result = EngineResult {
            engine: Engine::Fock,
            initial: mean_obs(&|t| &t.initial),
            final_observables: mean_obs(&|t| &t.final_observables),
            event_rate: all_ok / n,
            rounds: rows,
        };
        Ok((result, Some(records)))
    } else {
        let record = run_protocol(&r.oscillator, &r.schedule, &r.spin, &opts, config.seed.unwrap_or(0))?;
        let rows = record
            .rounds
            .iter()
            .map(|x| RoundRow {
                round: x.round,
                p_success: x.p_success,
                occupancy: x.occupancy,
                var_x: x.var_x,
                var_p: x.var_p,
                eta: x.eta,
            })
            .collect();
        Ok((
            EngineResult {
                engine: Engine::Fock,
                initial: record.initial,
                final_observables: record.final_observables,
                event_rate: record.event_rate,
                rounds: rows,
            },
            None,
        ))
    }
}

fn pfunction_result(config: &RunConfig, r: &ResolvedRun) -> Result<(EngineResult, PGrid)> {
    let trace = pfunction_trace(&r.oscillator, &r.schedule, &r.spin, &config.grid)?;
    let rows: Vec<RoundRow> = trace
        .rounds
        .iter()
        .map(|x| RoundRow {
            round: x.round,
            p_success: x.p_success,
            occupancy: x.observables.occupancy,
            var_x: x.observables.var_x,
            var_p: x.observables.var_p,
            eta: r.spin.eta(r.schedule.block_time(r.oscillator.omega, x.round)),
        })
        .collect();
    let final_observables = trace.rounds.last().map_or(trace.initial, |x| x.observables);
    Ok((
        EngineResult {
            engine: Engine::Pfunction,
            initial: trace.initial,
            final_observables,
            event_rate: rows.iter().map(|x| x.p_success).product(),
            rounds: rows,
        },
        trace.grid,
    ))
}

fn thermal_observables(n: f64) -> Observables {
    Observables {
        occupancy: n,
        mean_x: 0.0,
        var_x: n + 0.5,
        var_p: n + 0.5,
        purity: 1.0 / (2.0 * n + 1.0),
    }
}

/// Closed-form recurrence, one round at a time so a per-round pulse count
/// and bath relaxation between rounds are honoured.
pub fn cooling_model_result(r: &ResolvedRun) -> Result<EngineResult> {
    let spec = &r.oscillator;
    let sched = &r.schedule;
    let mut n = spec.n_thermal;
    let mut rows = Vec::with_capacity(sched.rounds as usize);
    for m in 1..=sched.rounds {
        let t = sched.block_time(spec.omega, m);
        if spec.gamma > 0.0 {
            n = spec.n_thermal + (n - spec.n_thermal) * (-spec.gamma * t).exp();
        }
        let lambda = lambda_eff(sched.g, sched.n_c_at(m), spec.omega);
        let p = thermal_success_probability(n, lambda);
        n = cooling_recurrence(n, lambda, 1, None)?.occupancies[1];
        rows.push(RoundRow {
            round: m,
            p_success: p,
            occupancy: n,
            var_x: n + 0.5,
            var_p: n + 0.5,
            eta: r.spin.eta(t),
        });
    }
    Ok(EngineResult {
        engine: Engine::CoolingModel,
        initial: thermal_observables(spec.n_thermal),
        final_observables: thermal_observables(n),
        event_rate: rows.iter().map(|x| x.p_success).product(),
        rounds: rows,
    })
}

fn compare_rows(fock: &EngineResult, p: &EngineResult) -> Vec<CompareRow> {
    fock.rounds
        .iter()
        .zip(&p.rounds)
        .map(|(a, b)| CompareRow {
            round: a.round,
            occupancy_fock: a.occupancy,
            occupancy_pfunction: b.occupancy,
            var_x_fock: a.var_x,
            var_x_pfunction: b.var_x,
            var_p_fock: a.var_p,
            var_p_pfunction: b.var_p,
            p_success_fock: a.p_success,
            p_success_pfunction: b.p_success,
        })
        .collect()
}

/// Runs the engines without touching the filesystem.
pub fn execute(config: &RunConfig) -> Result<RunReport> {
    config.validate()?;
    let r = config.resolve()?;
    for w in &r.warnings {
        warn!("{w}");
    }
    if config.truncation == TruncationPolicy::Lax {
        info!("lax truncation: thermal tails above 1e-6 only warn");
    }
    let mut pgrid = None;
    let mut trajectories = None;
    let mut compare = None;
    let (primary, secondary) = match config.engine {
        Engine::Fock => {
            let (res, traj) = fock_result(config, &r)?;
            trajectories = traj;
            (res, None)
        }
        Engine::Pfunction => {
            let (res, grid) = pfunction_result(config, &r)?;
            pgrid = Some(grid);
            (res, None)
        }
        Engine::CoolingModel => (cooling_model_result(&r)?, None),
        Engine::Both => {
            let (f, traj) = fock_result(config, &r)?;
            let (p, grid) = pfunction_result(config, &r)?;
            trajectories = traj;
            pgrid = Some(grid);
            compare = Some(compare_rows(&f, &p));
            (f, Some(p))
        }
    };
    let summary = Summary {
        engine: config.engine,
        seed: config.seed,
        n_trajectories: config.n_trajectories,
        oscillator: r.oscillator,
        spin: r.spin,
        schedule: r.schedule.clone(),
        initial: primary.initial,
        final_observables: primary.final_observables,
        event_rate: primary.event_rate,
        event_rate_reference: EventRateDiagnostic {
            reference: REFERENCE_EVENT_RATE,
            ratio: primary.event_rate / REFERENCE_EVENT_RATE,
            note: "diagnostic only; the published starting occupancy is unknown",
        },
        rounds: primary.rounds,
        warnings: r.warnings.clone(),
        secondary,
    };
    Ok(RunReport {
        summary,
        pgrid,
        trajectories,
        compare,
        output_dir: config.output_dir.clone(),
    })
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.display().to_string(),
        source,
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(io_err(path))
}

/// `rounds.csv` contents.
pub fn rounds_csv(rows: &[RoundRow]) -> String {
    let mut s = String::from("round,p_success,occupancy,var_x,var_p,eta\n");
    for r in rows {
        let _ = writeln!(s, "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}", r.round, r.p_success, r.occupancy, r.var_x, r.var_p, r.eta);
    }
    s
}

/// `compare.csv` contents; each `*_rel_dev` is the phase-space value relative to Fock.
pub fn compare_csv(rows: &[CompareRow]) -> String {
    let mut s = String::from(
        "round,occupancy_fock,occupancy_pfunction,occupancy_rel_dev,var_x_fock,var_x_pfunction,var_x_rel_dev,var_p_fock,var_p_pfunction,var_p_rel_dev,p_success_fock,p_success_pfunction,p_success_rel_dev\n",
    );
    for r in rows {
        let _ = write!(s, "{}", r.round);
        for (a, b) in [
            (r.occupancy_fock, r.occupancy_pfunction),
            (r.var_x_fock, r.var_x_pfunction),
            (r.var_p_fock, r.var_p_pfunction),
            (r.p_success_fock, r.p_success_pfunction),
        ] {
            let _ = write!(s, ",{:.16e},{:.16e},{:.16e}", a, b, relative_deviation(a, b));
        }
        s.push('\n');
    }
    s
}

/// `trajectories.csv` contents, one row per trajectory and round.
pub fn trajectories_csv(records: &[TrajectoryRecord]) -> String {
    let mut s = String::from("trajectory,round,n_c,outcome,p_success,occupancy,var_x,var_p,eta,restarted\n");
    for (i, t) in records.iter().enumerate() {
        for r in &t.rounds {
            let outcome = match r.outcome {
                Outcome::Success => "success",
                Outcome::Fail => "fail",
            };
            let _ = writeln!(
                s,
                "{},{},{},{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{}",
                i, r.round, r.n_c, outcome, r.p_success, r.occupancy, r.var_x, r.var_p, r.eta, r.restarted
            );
        }
    }
    s
}

/// Writes a report into `dir`, creating it if needed.
pub fn write_report(report: &RunReport, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let json = serde_json::to_string_pretty(&report.summary).map_err(|e| Error::Numeric(e.to_string()))?;
    write_file(&dir.join("summary.json"), &(json + "\n"))?;
    write_file(&dir.join("rounds.csv"), &rounds_csv(&report.summary.rounds))?;
    if let Some(grid) = &report.pgrid {
        let path = dir.join("pgrid.csv");
        let mut buf = Vec::new();
        grid.write_csv(&mut buf).map_err(io_err(&path))?;
        fs::write(&path, buf).map_err(io_err(&path))?;
    }
    if let Some(rows) = &report.compare {
        write_file(&dir.join("compare.csv"), &compare_csv(rows))?;
    }
    if let Some(records) = &report.trajectories {
        write_file(&dir.join("trajectories.csv"), &trajectories_csv(records))?;
    }
    Ok(())
}

/// Runs one config and writes into its `output_dir`.
pub fn run(config: &RunConfig) -> Result<RunReport> {
    let report = execute(config)?;
    write_report(&report, &report.output_dir)?;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct SweepPoint {
    index: usize,
    output_dir: PathBuf,
    config: serde_json::Value,
    #[serde(rename = "final")]
    final_observables: Observables,
    event_rate: f64,
}

/// Runs every sweep point (in parallel), each into its own `point_NNN`
/// directory, then writes `sweep_summary.json` once all points are done.
pub fn run_sweep(config: &RunConfig) -> Result<Vec<RunReport>> {
    let children = config.expand_sweep()?;
    let reports: Vec<RunReport> = children.par_iter().map(run).collect::<Result<_>>()?;
    let points: Vec<SweepPoint> = children
        .iter()
        .zip(&reports)
        .enumerate()
        .map(|(index, (c, r))| SweepPoint {
            index,
            output_dir: r.output_dir.clone(),
            config: serde_json::to_value(c).unwrap_or(serde_json::Value::Null),
            final_observables: r.summary.final_observables,
            event_rate: r.summary.event_rate,
        })
        .collect();
    fs::create_dir_all(&config.output_dir).map_err(io_err(&config.output_dir))?;
    let json = serde_json::to_string_pretty(&points).map_err(|e| Error::Numeric(e.to_string()))?;
    write_file(&config.output_dir.join("sweep_summary.json"), &(json + "\n"))?;
    Ok(reports)
}

/// Runs `f` on a pool capped by `HERALD_SIM_THREADS`, or on the global pool
/// when the variable is unset.
pub fn with_thread_cap<T: Send>(f: impl FnOnce() -> T + Send) -> Result<T> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => {
            let n: usize = v
                .trim()
                .parse()
                .ok()
                .filter(|&n| n > 0)
                .ok_or_else(|| Error::validation(THREADS_ENV, format!("`{v}` is not a positive integer")))?;
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Numeric(e.to_string()))?;
            Ok(pool.install(f))
        }
        Err(_) => Ok(f()),
    }
}
