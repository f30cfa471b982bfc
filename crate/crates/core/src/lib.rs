//! Simulation and identification toolkit for a vibrotactile plate driven
//! in closed loop at a single frequency.
//!
//! The crate is organized bottom-up:
//!
//! - [`dsp`]: biquads and the lock-in amplitude/phase estimator
//! - [`control`]: loop-shaping synthesis, order reduction, Tustin
//!   discretization and the runtime amplitude/phase control law
//! - [`finger`]: lumped fingertip impedance models and match statistics
//! - [`plant`]: the plate simulator, sensors and the closed-loop runner
//! - [`estimation`]: recovering load, position, finger force and impedance
//!   from a recorded trace, and regressing drifting suspension parameters
//! - [`harness`]: config files, the experiment commands and acceptance checks

pub mod control;
pub mod dsp;
pub mod error;
pub mod estimation;
pub mod finger;
pub mod harness;
pub mod plant;

pub use error::{Error, Result};

/// Drive frequencies of the test protocol, Hz.
pub const PROTOCOL_FREQUENCIES_HZ: [f64; 8] = [20.0, 31.0, 47.0, 72.0, 111.0, 170.0, 261.0, 400.0];
