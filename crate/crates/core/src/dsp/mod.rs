//! Sampled-signal primitives: biquad filters and the lock-in estimator.

pub mod iir;
pub mod lockin;

pub use iir::{design_lowpass_iir, Biquad, BiquadCoeffs, Cascade};
pub use lockin::{
    amplitude, demodulate, estimate, phase_shifted, phase_standard, stdft_boxcar, AmplitudePhase,
    ComplexEstimate, LockIn, Nco, PhaseBranch, SampledSignal,
};
