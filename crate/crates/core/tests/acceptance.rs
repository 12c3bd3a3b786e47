//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.
//!
//! Run with `cargo test --release --test acceptance`.

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use herald_sim::cooling::cooling_recurrence;
use herald_sim::fock::{
    annihilation_op, build_thermal, observables_of, DampingChannel, DensityMatrix, OscillatorSpec, TruncationPolicy,
};
use herald_sim::herald::{
    adaptive_cooling_run, build_conditional_ops, completeness_matrix, run_protocol, success_probability, AdaptivePlan,
    ProtocolOptions, RoundRecord, SpinSpec,
};
use herald_sim::linalg::{interior_limit, max_abs_block, op_norm_block, CMatrix, C64};
use herald_sim::pfunction::{pfunction_trace, GridConfig};
use herald_sim::phys::{coupling_from_gradient, gamma_from_q, nbar_from_temperature, LabSetup};
use herald_sim::pulse::{compose_branch, g_for_lambda, segment_durations, DetuningSign, PulseSchedule};
use herald_sim::recipes::{cooling_recipe, cross_check_schedule, oscillator, squeezing_recipe, DEFAULT_N0};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn conditioned(spec: &OscillatorSpec, sched: &PulseSchedule, spin: &SpinSpec) -> Vec<RoundRecord> {
    run_protocol(spec, sched, spin, &ProtocolOptions::default(), 0)
        .expect("conditioned run")
        .rounds
}

fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

fn fmt_list(v: &[f64], digits: usize) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.digits$}")).collect();
    format!("[{}]", parts.join(", "))
}

fn c1_completeness() -> Verdict {
    let dim = 128;
    let spec = OscillatorSpec::new(1.0, 1.0, dim);
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let n_c = rng.random_range(1..=100u32);
        let lambda = rng.random_range(0.01..1.0);
        let mut s = PulseSchedule::new(n_c, g_for_lambda(lambda, n_c, 1.0), rng.random_range(-0.1..0.1), 1);
        if rng.random::<bool>() {
            s.detuning_sign = DetuningSign::Plus;
        }
        let spin = SpinSpec {
            t2: rng.random_range(1.0..1e4),
            readout_fidelity: 1.0,
        };
        let kick = build_conditional_ops(&s, &spin, &spec).expect("kick");
        let dev = completeness_matrix(&kick) - CMatrix::identity(dim, dim);
        worst = worst.max(max_abs_block(&dev, interior_limit(dim, kick.strength())));
    }
    verdict(worst <= 1e-10, format!("max |V'V + W'W - I| on interior block = {worst:.2e} (<= 1e-10)"))
}

/// Ordered product of exact segment exponentials on a space padded by 60 levels.
fn brute_force(s: &PulseSchedule, sign0: f64, dim: usize) -> CMatrix {
    let big = dim + 60;
    let a = annihilation_op(big);
    let x = &a + a.adjoint();
    let num = a.adjoint() * &a;
    let mut u = CMatrix::identity(big, big);
    let mut sign = sign0;
    for dt in segment_durations(s.n_c, s.tau(1.0)) {
        let h = &num + &x * C64::from(sign * s.g);
        u = (h * C64::new(0.0, -dt)).exp() * u;
        sign = -sign;
    }
    u.view((0, 0), (dim, dim)).into_owned()
}

fn c2_propagator_oracle() -> Verdict {
    let dim = 32;
    let spec = OscillatorSpec::new(1.0, 1.0, dim);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let n_c = rng.random_range(1..=8u32);
        let s = PulseSchedule::new(n_c, rng.random_range(0.0..0.05), rng.random_range(-0.2..0.2), 1);
        for sign in [1i8, -1] {
            let b = compose_branch(&s, &spec, sign);
            let lim = interior_limit(dim, b.displacement.norm() + 2.0 * s.g);
            let diff = b.to_matrix(dim) - brute_force(&s, sign as f64, dim);
            worst = worst.max(op_norm_block(&diff, lim));
        }
    }
    verdict(worst <= 1e-6, format!("max operator-norm deviation = {worst:.2e} (<= 1e-6)"))
}

fn c3_vacuum_probability() -> Verdict {
    let lambda: f64 = 0.25;
    let dim = 64;
    let spec = OscillatorSpec::new(1.0, 0.0, dim);
    let kick = build_conditional_ops(&PulseSchedule::new(10, g_for_lambda(lambda, 10, 1.0), 0.0, 1), &SpinSpec::default(), &spec)
        .expect("kick");
    let p = success_probability(&kick, &DensityMatrix::vacuum(dim));
    let oracle = 0.5 * (1.0 + (-2.0 * lambda * lambda).exp());
    let err = (p - oracle).abs();
    verdict(err <= 1e-6 && (oracle - 0.941248).abs() < 1e-6, format!("p = {p:.8}, oracle {oracle:.8}, |diff| = {err:.1e}"))
}

fn c4_one_shot() -> Verdict {
    let (n0, lambda) = (10.0, 0.1);
    let sched = PulseSchedule::new(10, g_for_lambda(lambda, 10, 1.0), 0.0, 1);
    let n1 = conditioned(&oscillator(n0), &sched, &SpinSpec::default())[0].occupancy;
    let closed = n0 * (1.0 - lambda * lambda * (2.0 * n0 + 1.0));
    let rel = (n1 - 7.9).abs() / 7.9;
    verdict(rel <= 0.05, format!("n1 = {n1:.4} vs 7.9 (rel {:.1}%, closed form {closed:.3})", rel * 100.0))
}

fn c5_recurrence() -> Verdict {
    let (n0, lambda) = (DEFAULT_N0, 0.25);
    let rec = cooling_recurrence(n0, lambda, 5, None).expect("regime").occupancies;
    let spec = oscillator(n0);
    let off: Vec<f64> = conditioned(&spec, &cooling_recipe(5), &SpinSpec::default()).iter().map(|r| r.occupancy).collect();
    let mut res_sched = cooling_recipe(5);
    res_sched.epsilon = 0.0;
    let res: Vec<f64> = conditioned(&spec, &res_sched, &SpinSpec::default()).iter().map(|r| r.occupancy).collect();
    let err = |exact: &[f64]| {
        exact
            .iter()
            .zip(&rec[1..])
            .map(|(e, r)| ((r - e) / e).abs())
            .fold(0.0f64, f64::max)
    };
    let (e_off, e_res) = (err(&off), err(&res));
    verdict(
        e_off <= 0.15,
        format!(
            "max rel error {:.0}% off-resonant (resonant {:.0}%), limit 15%; recurrence {} exact {}",
            e_off * 100.0,
            e_res * 100.0,
            fmt_list(&rec[1..], 3),
            fmt_list(&off, 3)
        ),
    )
}

fn c6_per_round_reduction() -> Verdict {
    let n0 = DEFAULT_N0;
    let lambda = (0.5 / n0).sqrt();
    let sched = PulseSchedule::new(10, g_for_lambda(lambda, 10, 1.0), 0.1 * lambda, 3);
    let spec = oscillator(n0);
    let occ: Vec<f64> = std::iter::once(n0)
        .chain(conditioned(&spec, &sched, &SpinSpec::default()).iter().map(|r| r.occupancy))
        .collect();
    let cuts: Vec<f64> = occ.windows(2).map(|w| 1.0 - w[1] / w[0]).collect();
    let mean = cuts.iter().sum::<f64>() / cuts.len() as f64;
    verdict(
        (mean - 0.70).abs() <= 0.15,
        format!("mean reduction {:.1}% per round (70% +/- 15), per round {}", mean * 100.0, fmt_list(&cuts, 3)),
    )
}

fn c7_speed_limit() -> Verdict {
    let plan = AdaptivePlan::default();
    let mut ok = true;
    let mut parts = Vec::new();
    for n0 in [4.0f64, 16.0, 64.0] {
        let spec = oscillator(n0);
        assert!(spec.dim <= 1024);
        let run = adaptive_cooling_run(&spec, &SpinSpec::default(), &plan).expect("adaptive run");
        let target = 2.0 * n0.log2();
        let hit = run.rounds_to_target;
        ok &= hit.is_some_and(|m| (m as f64 - target).abs() <= 3.0);
        parts.push(format!("n0={n0}: {hit:?} vs {target}"));
    }
    verdict(ok, format!("rounds to n < 1 with lambda^2 n = {}: {}", plan.lambda_sq_n, parts.join(", ")))
}

fn c8_phenomenology() -> Verdict {
    let spec = oscillator(DEFAULT_N0);
    let ideal = SpinSpec::default();
    let cool = conditioned(&spec, &cooling_recipe(10), &ideal);
    let occ: Vec<f64> = cool.iter().map(|r| r.occupancy).collect();
    let a = strictly_decreasing(&occ) && occ[9] < 1.0;

    let sq = conditioned(&spec, &squeezing_recipe(60), &ideal);
    let vx: Vec<f64> = sq.iter().map(|r| r.var_x).collect();
    let b = strictly_decreasing(&vx) && vx[59] < 0.5;

    let p: Vec<f64> = sq.iter().map(|r| r.p_success).collect();
    let p_cool: Vec<f64> = cool.iter().map(|r| r.p_success).collect();
    let nondecreasing = |v: &[f64]| v.windows(2).all(|w| w[1] >= w[0]);
    let c = nondecreasing(&p) && nondecreasing(&p_cool) && p[59] > 0.99;

    let dead = SpinSpec {
        t2: 1e-9,
        readout_fidelity: 1.0,
    };
    let worst = [cooling_recipe(10), squeezing_recipe(10)]
        .iter()
        .flat_map(|s| conditioned(&spec, s, &dead))
        .map(|r| (r.p_success - 0.5).abs())
        .fold(0.0f64, f64::max);
    let d = worst <= 1e-3;
    verdict(
        a && b && c && d,
        format!(
            "(a) {} final n {:.3}; (b) {} final var_x {:.4}; (c) {} final p {:.4} (cooling p {:.3}); (d) {} max |p - 0.5| {:.1e}",
            pass_word(a),
            occ[9],
            pass_word(b),
            vx[59],
            pass_word(c),
            p[59],
            p_cool[9],
            pass_word(d),
            worst
        ),
    )
}

fn pass_word(ok: bool) -> &'static str {
    if ok {
        "ok"
    } else {
        "FAIL"
    }
}

fn c9_cross_validation() -> Verdict {
    let g = cross_check_schedule(true, 1).g;
    let mut worst: f64 = 0.0;
    for gamma in [0.0, 0.1 * 4.0 * g * g] {
        let spec = oscillator(DEFAULT_N0).with_damping(gamma);
        for resonant in [true, false] {
            let sched = cross_check_schedule(resonant, 10);
            let fock = conditioned(&spec, &sched, &SpinSpec::default());
            let p = pfunction_trace(&spec, &sched, &SpinSpec::default(), &GridConfig::default()).expect("P engine");
            for (f, q) in fock.iter().zip(&p.rounds) {
                worst = worst.max(((q.observables.occupancy - f.occupancy) / f.occupancy).abs());
                worst = worst.max(((q.observables.var_x - f.var_x) / f.var_x).abs());
            }
        }
    }
    verdict(worst <= 0.10, format!("max relative deviation in occupancy/var_x = {:.2}% (<= 10%)", worst * 100.0))
}

fn c10_thermalization() -> Verdict {
    let gamma = 0.01;
    let n_th = 2.0;
    let spec = OscillatorSpec::new(1.0, n_th, 96).with_damping(gamma);
    let mut worst: f64 = 0.0;
    for n0 in [0.0, 6.0] {
        let mut rho = build_thermal(&OscillatorSpec::new(1.0, n0, 96), TruncationPolicy::Strict).expect("thermal");
        let start = observables_of(&rho).occupancy;
        let step = 0.25 / gamma;
        let channel = DampingChannel::calibrate(&spec, step, &rho).expect("channel");
        for k in 1..=20 {
            rho = channel.apply(&rho).expect("step");
            let gt = k as f64 * gamma * step;
            let exact = n_th + (start - n_th) * (-gt).exp();
            worst = worst.max((observables_of(&rho).occupancy - exact).abs() / exact);
        }
    }
    verdict(worst <= 0.01, format!("max relative deviation from the exponential law over Gamma t in [0, 5] = {worst:.1e} (<= 1%)"))
}

fn c11_fig3() -> Verdict {
    let n_th = DEFAULT_N0;
    let sched = cooling_recipe(50);
    let t = sched.block_time(1.0, 1);
    let ideal = SpinSpec::default();
    let half = SpinSpec {
        t2: t / 2f64.ln(),
        readout_fidelity: 1.0,
    };
    let mut plateau_ok = true;
    let mut finals = Vec::new();
    let mut changes = Vec::new();
    // Gamma t per round of 0.005, 0.01, 0.02: g/Gamma of about 80, 40, 20
    for gt in [0.005, 0.01, 0.02] {
        let spec = oscillator(n_th).with_damping(gt / t);
        let occ: Vec<f64> = conditioned(&spec, &sched, &ideal).iter().map(|r| r.occupancy).collect();
        let tail = &occ[40..];
        let range = tail.iter().cloned().fold(f64::MIN, f64::max) - tail.iter().cloned().fold(f64::MAX, f64::min);
        plateau_ok &= range < 1e-3 * n_th;
        let dephased = conditioned(&spec, &sched, &half).last().expect("rounds").occupancy;
        finals.push(occ[49]);
        changes.push((dephased - occ[49]).abs() / occ[49]);
    }
    // finals ordered by decreasing g/Gamma must increase
    let monotone = finals.windows(2).all(|w| w[1] > w[0]);
    let eta_ok = changes.iter().all(|&c| c < 0.30);
    verdict(
        plateau_ok && monotone && eta_ok,
        format!(
            "plateau {}; plateau vs g/Gamma {} {}; eta 1 -> 0.5 change {} {}",
            pass_word(plateau_ok),
            pass_word(monotone),
            fmt_list(&finals, 3),
            pass_word(eta_ok),
            fmt_list(&changes.iter().map(|c| c * 100.0).collect::<Vec<_>>(), 0) + "% (< 30%)"
        ),
    )
}

fn c12_estimates() -> Verdict {
    let lab = LabSetup::reference();
    let g = coupling_from_gradient(&lab).g_hz;
    let n = nbar_from_temperature(&lab);
    let gamma = gamma_from_q(&lab);
    let ok = (g - 56.0).abs() < 1e-9 && (n - 8.33e3).abs() <= 0.01 * 8.33e3 && (gamma - 628.0).abs() <= 0.001 * 628.0;
    verdict(ok, format!("g = {g:.3} Hz, n = {n:.1}, Gamma = {gamma:.2} 1/s"))
}

fn c13_determinism() -> Verdict {
    let dir = tempfile::tempdir().expect("tempdir");
    let cfg = dir.path().join("ensemble.json");
    let text = r#"{"engine": "fock", "oscillator": {"omega": 1.0, "n_thermal": 4.0, "dim": 80},
        "schedule": {"n_c": 10, "g": 0.0125, "epsilon": 0.025, "rounds": 6},
        "n_trajectories": 24, "seed": 99}"#;
    std::fs::write(&cfg, text).expect("write config");
    let run = |threads: &str, tag: &str| -> Option<(Vec<u8>, Vec<u8>)> {
        let out = dir.path().join(tag);
        let status = Command::new(env!("CARGO_BIN_EXE_herald-sim"))
            .args(["run", "--quiet", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(&out)
            .env("HERALD_SIM_THREADS", threads)
            .status()
            .ok()?;
        if !status.success() {
            return None;
        }
        Some((std::fs::read(out.join("rounds.csv")).ok()?, std::fs::read(out.join("trajectories.csv")).ok()?))
    };
    let (a, b, c) = (run("1", "a"), run("1", "b"), run("8", "c"));
    match (a, b, c) {
        (Some(a), Some(b), Some(c)) => verdict(
            a == b && a == c,
            format!("rounds.csv and trajectories.csv identical across repeat and 1 vs 8 threads: {}", a == b && a == c),
        ),
        _ => verdict(false, "herald-sim run failed"),
    }
}

fn main() -> ExitCode {
    type Check = fn() -> Verdict;
    let criteria: [(u32, &str, Check, Option<Duration>); 13] = [
        (1, "completeness identity", c1_completeness, Some(Duration::from_secs(10))),
        (2, "propagator oracle", c2_propagator_oracle, Some(Duration::from_secs(30))),
        (3, "vacuum success probability", c3_vacuum_probability, None),
        (4, "one-shot cooling", c4_one_shot, None),
        (5, "recurrence fidelity", c5_recurrence, None),
        (6, "per-round reduction", c6_per_round_reduction, None),
        (7, "speed limit", c7_speed_limit, Some(Duration::from_secs(300))),
        (8, "cooling/squeezing phenomenology", c8_phenomenology, None),
        (9, "engine cross-validation", c9_cross_validation, None),
        (10, "damped thermalization", c10_thermalization, None),
        (11, "damped plateau properties", c11_fig3, None),
        (12, "physical estimates", c12_estimates, None),
        (13, "determinism", c13_determinism, None),
    ];
    let only: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (id, name, check, budget) in criteria {
        if !only.is_empty() && !only.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let mut v = check();
        let elapsed = start.elapsed();
        if let Some(b) = budget {
            if elapsed > b {
                v.pass = false;
                v.detail += &format!("; runtime {:.1}s exceeds {}s", elapsed.as_secs_f64(), b.as_secs());
            }
        }
        if !v.pass {
            failed += 1;
        }
        println!(
            "[{}] {:>2} {}: {} ({:.1}s)",
            if v.pass { "PASS" } else { "FAIL" },
            id,
            name,
            v.detail,
            elapsed.as_secs_f64()
        );
    }
    if failed == 0 {
        println!("acceptance: all criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failed} criteria failed");
        ExitCode::FAILURE
    }
}
