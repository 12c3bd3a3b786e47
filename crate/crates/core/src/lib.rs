//! Heralded cooling and squeezing of a mechanical mode by a spin that is
//! repeatedly driven with a CPMG pulse train and measured.
//!
//! Each round the spin picks up a phase conditioned on the oscillator's
//! position; accepting only one measurement outcome applies a conditional
//! kick `V` (or `W` on failure) to the oscillator. Two engines compute the
//! result:
//!
//! * [`herald`]: exact truncated-Fock evolution of the density matrix, with
//!   Lindblad damping between rounds and spin dephasing folded into each
//!   measurement.
//! * [`pfunction`]: the Glauber P-function multiplied by a per-round filter
//!   on a phase-space grid; cheap at large occupancy.
//!
//! [`cooling`] holds the closed-form recurrence, [`phys`] converts lab
//! numbers to model parameters, and [`config`] / [`runner`] drive everything
//! from JSON the way the `herald-sim` binary does.
//!
//! ```
//! use herald_sim::herald::{run_protocol, ProtocolOptions, SpinSpec};
//! use herald_sim::recipes::{cooling_recipe, oscillator};
//!
//! let rec = run_protocol(&oscillator(4.0), &cooling_recipe(3), &SpinSpec::default(), &ProtocolOptions::default(), 0)?;
//! assert!(rec.final_observables.occupancy < 4.0);
//! # Ok::<(), herald_sim::error::Error>(())
//! ```

pub mod config;
pub mod cooling;
pub mod error;
pub mod fock;
pub mod herald;
pub mod linalg;
pub mod pfunction;
pub mod phys;
pub mod pulse;
pub mod recipes;
pub mod runner;
