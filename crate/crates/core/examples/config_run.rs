// Driving the library from a JSON config, as the command-line tool does.
//
//     cargo run --example config_run

use herald_sim::config::parse_config;
use herald_sim::error::Result;
use herald_sim::runner::{execute, rounds_csv, write_report};

const CONFIG: &str = r#"{
    "engine": "both",
    "oscillator": {"omega": 1.0, "n_thermal": 10.0},
    "schedule": {"n_c": 10, "g": 0.0125, "epsilon": 0.025, "rounds": 4},
    "output_dir": "herald_config_run"
}"#;

pub fn run() -> Result<usize> {
    let config = parse_config(CONFIG)?;
    let report = execute(&config)?;
    print!("{}", rounds_csv(&report.summary.rounds));
    for row in report.compare.as_deref().unwrap_or_default() {
        println!("round {}: occupancy Fock {:.3}, P {:.3}", row.round, row.occupancy_fock, row.occupancy_pfunction);
    }
    let dir = std::env::temp_dir().join(&config.output_dir);
    write_report(&report, &dir)?;
    println!("files in {}", dir.display());
    Ok(report.summary.rounds.len())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run() {
        eprintln!("{e}");
        std::process::exit(e.exit_code());
    }
}
