//! Lumped fingertip models and the quantities derived from them.

pub mod analysis;
pub mod curves;
pub mod model;
pub mod oracle;

pub use analysis::{
    beta, coefficient_of_variation, mid_band_admittance, read_matches, split_by_load, velocity_per_shear_force,
    write_matches, MatchRecord, SyntheticMatches, LOAD_SPLIT_N,
};
pub use curves::{model_curves, write_curves, CurveRow};
pub use model::{
    impedance_2nd, impedance_4th, phalanx_velocity_tf, skin_admittance, tissue_velocity_tf, FingerModel, LoadScaling,
    Order2, Order4, Preset,
};
