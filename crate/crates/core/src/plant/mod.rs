//! Plate-on-two-mounts simulator with finger contact, sensing and the
//! closed-loop driver.

pub mod closed_loop;
pub mod dynamics;
pub mod fm;
pub mod params;
pub mod profile;
pub mod response;
pub mod scenario;
pub mod sensor;
pub mod trace;

pub use closed_loop::{run_closed_loop, Drive, DriveFrequency, Experiment, LoopConfig};
pub use dynamics::{step_plate, ContactInput, FingerState, Plant, PlateState};
pub use fm::fm_waveform;
pub use params::{Drift, PlateParams, Suspension};
pub use profile::Profile;
pub use scenario::TouchScenario;
pub use sensor::{hall_sense, HallSensor};
pub use trace::{SimTrace, TraceRow, TRACE_HEADER};
