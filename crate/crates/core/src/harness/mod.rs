//! Config files, the experiment commands and the acceptance suite behind the
//! `vtloop` binary.

pub mod acceptance;
pub mod commands;
pub mod config;
pub mod io;

pub use acceptance::{run_acceptance, run_acceptance_with, AcceptanceReport, CriterionResult, CRITERIA};
pub use commands::{cmd_accept, cmd_curves, cmd_identify, cmd_simulate, cmd_synth, Outcome};
pub use config::{FingerSpec, Overrides, ScenarioConfig};
pub use io::{write_atomic, write_atomic_str};
