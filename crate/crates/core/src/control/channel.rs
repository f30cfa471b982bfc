//! Runtime control law: one amplitude channel, one phase channel.

use serde::{Deserialize, Serialize};

use super::feedforward::FrequencyResponseTable;
use crate::dsp::{AmplitudePhase, Biquad, BiquadCoeffs};
use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct ControlChannelState {
    pub reference: f64,
    controller: Biquad,
    output: f64,
    lower_bound: Option<f64>,
    saturated: bool,
}

impl ControlChannelState {
    pub fn new(reference: f64, controller: BiquadCoeffs, lower_bound: Option<f64>) -> Self {
        ControlChannelState {
            reference,
            controller: Biquad::new(controller),
            output: lower_bound.unwrap_or(0.0).max(0.0),
            lower_bound,
            saturated: false,
        }
    }

    pub fn output(&self) -> f64 {
        self.output
    }

    pub fn saturated(&self) -> bool {
        self.saturated
    }

    /// One controller tick. When the raw output would cross the lower bound
    /// the output is clamped and the biquad state is left untouched.
    pub fn step(&mut self, measurement: f64) -> f64 {
        let e = self.reference - measurement;
        let y = self.controller.peek(e);
        match self.lower_bound {
            Some(lb) if y < lb => {
                self.output = lb;
                self.saturated = true;
            }
            _ => {
                self.controller.commit(e, y);
                self.output = y;
                self.saturated = false;
            }
        }
        self.output
    }
}

/// Signed real gain versus frequency, interpolated linearly in log-frequency.
#[derive(Clone, Debug, PartialEq)]
pub struct GainSchedule {
    freqs: Vec<f64>,
    values: Vec<f64>,
}

impl GainSchedule {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::param("schedule", "needs at least two points"));
        }
        if points.windows(2).any(|w| !(w[1].0 > w[0].0)) || points.iter().any(|p| !(p.0 > 0.0 && p.1.is_finite())) {
            return Err(Error::param("schedule", "frequencies must be positive and increasing, values finite"));
        }
        Ok(GainSchedule {
            freqs: points.iter().map(|p| p.0).collect(),
            values: points.iter().map(|p| p.1).collect(),
        })
    }

    pub fn constant(value: f64) -> Self {
        GainSchedule {
            freqs: vec![f64::MIN_POSITIVE, f64::MAX],
            values: vec![value, value],
        }
    }

    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.freqs.iter().copied().zip(self.values.iter().copied())
    }

    pub fn lookup(&self, f_hz: f64) -> Result<f64> {
        let (lo, hi) = (self.freqs[0], *self.freqs.last().expect("nonempty"));
        if !(f_hz >= lo && f_hz <= hi) {
            return Err(Error::OutOfRange { f_hz, lo, hi });
        }
        let i = match self.freqs.binary_search_by(|f| f.total_cmp(&f_hz)) {
            Ok(i) => return Ok(self.values[i]),
            Err(i) => i - 1,
        };
        let t = (f_hz.ln() - self.freqs[i].ln()) / (self.freqs[i + 1].ln() - self.freqs[i].ln());
        Ok(self.values[i] + t * (self.values[i + 1] - self.values[i]))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DriveCommand {
    /// Drive current amplitude, amperes.
    pub current_amplitude: f64,
    /// Phase offset applied to transducer 2, degrees.
    pub phase_offset_deg: f64,
    /// Amplitude channel output, meters.
    pub amplitude_cmd: f64,
    pub saturated: bool,
}

/// Amplitude channel normalized by the plant gain table, phase channel
/// normalized by a signed phase-sensitivity schedule.
#[derive(Clone, Debug)]
pub struct DualChannelController {
    pub amplitude: ControlChannelState,
    pub phase: ControlChannelState,
    plant: FrequencyResponseTable,
    phase_gain: GainSchedule,
    min_phase_gain: f64,
}

impl DualChannelController {
    pub fn new(
        amplitude: ControlChannelState,
        phase: ControlChannelState,
        plant: FrequencyResponseTable,
        phase_gain: GainSchedule,
        min_phase_gain: f64,
    ) -> Self {
        DualChannelController {
            amplitude,
            phase,
            plant,
            phase_gain,
            min_phase_gain,
        }
    }

    fn phase_gain_at(&self, f_hz: f64) -> Result<f64> {
        let g = self.phase_gain.lookup(f_hz)?;
        Ok(if g.abs() < self.min_phase_gain {
            self.min_phase_gain.copysign(g)
        } else {
            g
        })
    }

    /// Advance both channels. `phase_deg` is `None` when the per-transducer
    /// phase is undefined; the phase channel then holds its last output.
    pub fn step(&mut self, amplitude: f64, phase_deg: Option<f64>, f_hz: f64) -> Result<DriveCommand> {
        let a_cmd = self.amplitude.step(amplitude);
        let gain = self.plant.lookup(f_hz)?.norm();
        let u_phase = match phase_deg {
            Some(p) => self.phase.step(p),
            None => self.phase.output(),
        };
        Ok(DriveCommand {
            current_amplitude: a_cmd / gain,
            phase_offset_deg: u_phase / self.phase_gain_at(f_hz)?,
            amplitude_cmd: a_cmd,
            saturated: self.amplitude.saturated(),
        })
    }
}

/// Single control tick with the estimate already reduced to a center
/// amplitude and a transducer phase difference.
pub fn control_step(
    amp_channel: &mut ControlChannelState,
    phase_channel: &mut ControlChannelState,
    estimate: AmplitudePhase,
    table: &FrequencyResponseTable,
    f_hz: f64,
) -> Result<DriveCommand> {
    let a_cmd = amp_channel.step(estimate.amplitude);
    let u = phase_channel.step(estimate.phase_deg);
    Ok(DriveCommand {
        current_amplitude: a_cmd / table.lookup(f_hz)?.norm(),
        phase_offset_deg: u,
        amplitude_cmd: a_cmd,
        saturated: amp_channel.saturated(),
    })
}
