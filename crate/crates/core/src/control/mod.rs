//! Controller synthesis and the runtime control law.

pub mod channel;
pub mod feedforward;
pub mod synthesis;
pub mod tf;
pub mod tustin;

pub use channel::{control_step, ControlChannelState, DriveCommand, DualChannelController, GainSchedule};
pub use feedforward::{plant_feedforward, FrequencyResponseTable, ResponsePoint};
pub use synthesis::{
    filter_dynamics, realized_sensitivity, reduce_order, reduce_order_report, sensitivity_target,
    solve_controller, synthesize, ControllerDesign, FitErrors, Reduction, SynthesisConfig,
};
pub use tf::ContinuousTF;
pub use tustin::discretize_tustin;
