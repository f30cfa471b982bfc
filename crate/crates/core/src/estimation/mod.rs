//! Recovering load, contact position, finger force and impedance from a
//! recorded trace, and regressing the drifting suspension.

pub mod filters;
pub mod forces;
pub mod impedance;
pub mod kinematics;
pub mod pipeline;
pub mod segment;
pub mod suspension;

pub use filters::{bandpass_record, central_difference, SplitFilter};
pub use forces::{device_forces, finger_force, MountMotion};
pub use impedance::{lockin_impedance, velocity_noise_floor, ImpedanceSample};
pub use kinematics::{estimate_normal_load, estimate_position, LoadKinematics};
pub use pipeline::{identify, write_analysis, Analysis, AnalysisRow, FitReport, FitSource, PipelineConfig, ANALYSIS_HEADER};
pub use segment::{segment_contacts, Segment};
pub use suspension::{fit_suspension, LinearDrift, SuspensionFit};
