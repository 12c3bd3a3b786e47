// Phase-space engine: the filtered P-function after ten rounds, its moments,
// and the grid written as CSV.
//
//     cargo run --release --example p_function_grid

use herald_sim::error::{Error, Result};
use herald_sim::herald::SpinSpec;
use herald_sim::pfunction::{pfunction_trace, GridConfig};
use herald_sim::recipes::{cross_check_schedule, oscillator, DEFAULT_N0};

pub fn run() -> Result<[f64; 2]> {
    let spec = oscillator(DEFAULT_N0);
    let grid = GridConfig::default();
    let mut out = [0.0; 2];
    for (i, resonant) in [true, false].into_iter().enumerate() {
        let trace = pfunction_trace(&spec, &cross_check_schedule(resonant, 10), &SpinSpec::default(), &grid)?;
        let last = trace.rounds.last().expect("ten rounds");
        let o = last.observables;
        println!(
            "{}: n = {:.3}, var_x = {:.3}, var_p = {:.3}, purity = {:.3}, p_10 = {:.4}, edge mass {:.1e}",
            if resonant { "resonant" } else { "off-resonant" },
            o.occupancy,
            o.var_x,
            o.var_p,
            o.purity,
            last.p_success,
            trace.grid.boundary_mass
        );
        let path = std::env::temp_dir().join(format!("pgrid_{}.csv", if resonant { "resonant" } else { "cooling" }));
        let file = std::fs::File::create(&path).map_err(|source| Error::Io { path: path.display().to_string(), source })?;
        trace.grid.write_csv(std::io::BufWriter::new(file)).map_err(|source| Error::Io { path: path.display().to_string(), source })?;
        println!("  grid written to {}", path.display());
        out[i] = if resonant { o.var_x } else { o.occupancy };
    }
    Ok(out)
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run() {
        eprintln!("{e}");
        std::process::exit(e.exit_code());
    }
}
