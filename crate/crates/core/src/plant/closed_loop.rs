//! End-to-end run: plant stepped at the simulation rate, sensing, lock-in
//! estimation and control at the control rate, drive currents rebuilt from
//! the commands between control ticks.

use std::collections::VecDeque;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::dynamics::{ContactInput, Plant};
use super::params::PlateParams;
use super::profile::Profile;
use super::response::{control_grid, phase_sensitivity_schedule, unloaded_table};
use super::scenario::TouchScenario;
use super::sensor::HallSensor;
use super::trace::{flags, SimTrace, TraceRow};
use crate::control::{synthesize, ControlChannelState, DriveCommand, DualChannelController, SynthesisConfig};
use crate::dsp::{amplitude, ComplexEstimate, LockIn, Nco, PhaseBranch};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LoopConfig {
    pub sim_rate_hz: f64,
    pub control_rate_hz: f64,
    /// Lock-in averager cutoff.
    pub filter_cutoff_hz: f64,
    /// Closed-loop target bandwidth of the amplitude channel.
    pub bandwidth_hz: f64,
    pub phase_bandwidth_hz: f64,
    /// Control ticks between a sensor sample and its use.
    pub latency_ticks: usize,
    pub noise_sigma_m: f64,
    pub phase_control: bool,
    pub phase_branch: PhaseBranch,
    /// Per-transducer amplitude below which the phase channel holds.
    pub phase_floor_m: f64,
    /// Smallest magnitude of the phase-sensitivity divisor.
    pub min_phase_gain: f64,
    pub instability_limit_m: f64,
    pub fit_band_hz: (f64, f64),
}

impl Default for LoopConfig {
    fn default() -> Self {
        LoopConfig {
            sim_rate_hz: 30_000.0,
            control_rate_hz: 5_000.0,
            filter_cutoff_hz: 10.0,
            bandwidth_hz: 5.0,
            phase_bandwidth_hz: 5.0,
            latency_ticks: 1,
            noise_sigma_m: 1e-6,
            phase_control: true,
            phase_branch: PhaseBranch::Shifted,
            phase_floor_m: 2.5e-7,
            min_phase_gain: 0.2,
            instability_limit_m: 2e-3,
            fit_band_hz: (0.1, 20.0),
        }
    }
}

impl LoopConfig {
    pub fn substeps(&self) -> Result<usize> {
        let r = self.sim_rate_hz / self.control_rate_hz;
        if !(r >= 1.0 && (r - r.round()).abs() < 1e-9) {
            return Err(Error::param(
                "control_rate_hz",
                format!("simulation rate must be an integer multiple of the control rate, ratio {r}"),
            ));
        }
        Ok(r.round() as usize)
    }

    fn synthesis(&self, bandwidth_hz: f64) -> SynthesisConfig {
        SynthesisConfig {
            bandwidth_hz,
            filter_cutoff_hz: self.filter_cutoff_hz,
            control_rate_hz: self.control_rate_hz,
            fit_band_hz: self.fit_band_hz,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DriveFrequency {
    Fixed { f_hz: f64 },
    /// Linear ramp from `f_start_hz` at `t_start_s` to `f_end_hz` at `t_end_s`.
    Sweep {
        f_start_hz: f64,
        f_end_hz: f64,
        t_start_s: f64,
        t_end_s: f64,
    },
}

impl DriveFrequency {
    pub fn at(&self, t: f64) -> f64 {
        match *self {
            DriveFrequency::Fixed { f_hz } => f_hz,
            DriveFrequency::Sweep { f_start_hz, f_end_hz, t_start_s, t_end_s } => {
                let u = ((t - t_start_s) / (t_end_s - t_start_s)).clamp(0.0, 1.0);
                f_start_hz + u * (f_end_hz - f_start_hz)
            }
        }
    }

    fn range(&self) -> (f64, f64) {
        match *self {
            DriveFrequency::Fixed { f_hz } => (f_hz, f_hz),
            DriveFrequency::Sweep { f_start_hz, f_end_hz, .. } => (f_start_hz.min(f_end_hz), f_start_hz.max(f_end_hz)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Drive {
    /// Amplitude reference in meters.
    Closed { reference: Profile },
    /// Fixed current amplitude (A) on both coils, coil 2 offset in phase.
    Open {
        current: Profile,
        #[serde(default)]
        phase_offset_deg: f64,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Experiment {
    pub plate: PlateParams,
    pub scenario: TouchScenario,
    pub control: LoopConfig,
    pub frequency: DriveFrequency,
    pub drive: Drive,
    pub duration_s: f64,
    pub seed: u64,
}

impl Experiment {
    /// Closed loop at a fixed frequency and reference, untouched plate.
    pub fn tracking(f_hz: f64, a_ref_m: f64, duration_s: f64) -> Self {
        Experiment {
            plate: PlateParams::default(),
            scenario: TouchScenario::untouched(),
            control: LoopConfig::default(),
            frequency: DriveFrequency::Fixed { f_hz },
            drive: Drive::Closed {
                reference: Profile::constant(a_ref_m),
            },
            duration_s,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.plate.validate()?;
        if !(self.duration_s.is_finite() && self.duration_s >= 0.0) {
            return Err(Error::param("duration_s", format!("must be >= 0, got {}", self.duration_s)));
        }
        self.scenario.validate(&self.plate, self.duration_s)?;
        self.control.substeps()?;
        let (lo, hi) = self.frequency.range();
        if !(lo > 0.0 && hi < self.control.control_rate_hz / 2.0) {
            return Err(Error::param("f_hz", format!("drive frequency range [{lo}, {hi}] Hz is invalid")));
        }
        match &self.drive {
            Drive::Closed { reference } => {
                reference.validate()?;
                if reference.bounds(self.duration_s).0 < 0.0 {
                    return Err(Error::param("reference", "amplitude reference must be >= 0"));
                }
            }
            Drive::Open { current, .. } => current.validate()?,
        }
        Ok(())
    }
}

fn contact_at(scenario: &TouchScenario, t: f64) -> Option<ContactInput> {
    if !scenario.in_contact(t) {
        return None;
    }
    Some(ContactInput {
        model: scenario.model_at(t)?,
        load: scenario.load.value(t),
        load_rate: scenario.load.rate(t),
        position: scenario.position.value(t),
        position_rate: scenario.position.rate(t),
    })
}

/// Shared state of a run, kept in one place so the tick logic stays linear.
struct Loop {
    controller: Option<DualChannelController>,
    lockins: [LockIn; 2],
    delay: VecDeque<[f64; 2]>,
    latency: usize,
    branch: PhaseBranch,
    phase_control: bool,
    phase_floor: f64,
}

impl Loop {
    fn tick(&mut self, hall: [f64; 2], angle: f64, f_hz: f64, reference: f64) -> Result<(DriveCommand, bool)> {
        self.delay.push_back(hall);
        let sample = if self.delay.len() > self.latency {
            self.delay.pop_front().expect("nonempty")
        } else {
            [0.0, 0.0]
        };
        let x1 = self.lockins[0].update_with_angle(sample[0], angle);
        let x2 = self.lockins[1].update_with_angle(sample[1], angle);
        let ctrl = self.controller.as_mut().expect("closed loop has a controller");
        ctrl.amplitude.reference = reference;
        let center = amplitude(ComplexEstimate::new(0.5 * (x1.re + x2.re), 0.5 * (x1.im + x2.im)));
        let phase = if self.phase_control && amplitude(x1) > self.phase_floor && amplitude(x2) > self.phase_floor {
            Some(self.branch.phase(x2)? - self.branch.phase(x1)?)
        } else {
            None
        };
        let cmd = ctrl.step(center, phase, f_hz)?;
        Ok((cmd, phase.is_none()))
    }
}

pub fn run_closed_loop(exp: &Experiment) -> Result<SimTrace> {
    exp.validate()?;
    let cfg = &exp.control;
    let substeps = cfg.substeps()?;
    let dt = 1.0 / cfg.sim_rate_hz;
    let n_steps = (exp.duration_s * cfg.sim_rate_hz).round() as usize;
    let f0 = exp.frequency.at(0.0);

    let mut lp = Loop {
        controller: None,
        lockins: [
            LockIn::new(f0, cfg.control_rate_hz, cfg.filter_cutoff_hz)?,
            LockIn::new(f0, cfg.control_rate_hz, cfg.filter_cutoff_hz)?,
        ],
        delay: VecDeque::with_capacity(cfg.latency_ticks + 1),
        latency: cfg.latency_ticks,
        branch: cfg.phase_branch,
        phase_control: cfg.phase_control,
        phase_floor: cfg.phase_floor_m,
    };
    if let Drive::Closed { .. } = exp.drive {
        let amp = synthesize(&cfg.synthesis(cfg.bandwidth_hz))?;
        let phase = if cfg.phase_bandwidth_hz == cfg.bandwidth_hz {
            amp.clone()
        } else {
            synthesize(&cfg.synthesis(cfg.phase_bandwidth_hz))?
        };
        let grid = control_grid();
        let table = unloaded_table(&exp.plate, &grid)?;
        let (lo, hi) = table.range();
        let (flo, fhi) = exp.frequency.range();
        if flo < lo || fhi > hi {
            return Err(Error::OutOfRange {
                f_hz: if flo < lo { flo } else { fhi },
                lo,
                hi,
            });
        }
        lp.controller = Some(DualChannelController::new(
            ControlChannelState::new(0.0, amp.discrete, Some(0.0)),
            ControlChannelState::new(0.0, phase.discrete, None),
            table,
            phase_sensitivity_schedule(&exp.plate, &grid)?,
            cfg.min_phase_gain,
        ));
    }

    let mut sensors = [
        HallSensor::new(cfg.noise_sigma_m, exp.seed, 1)?,
        HallSensor::new(cfg.noise_sigma_m, exp.seed, 2)?,
    ];
    let mut nco = Nco::new(f0, cfg.sim_rate_hz);
    let mut plant = Plant::new(exp.plate);
    let mut trace = SimTrace::with_capacity(cfg.sim_rate_hz, n_steps);
    let mut cmd = DriveCommand::default();
    let mut held = false;

    for j in 0..n_steps {
        let t = j as f64 * dt;
        let f = exp.frequency.at(t);
        nco.retune(f);
        let theta = nco.angle();
        let s = plant.state();
        let hall = [sensors[0].sense(s.x1), sensors[1].sense(s.x2)];

        let peak = s.x1.abs().max(s.x2.abs());
        if !peak.is_finite() || peak > cfg.instability_limit_m {
            return Err(Error::Instability {
                t,
                amplitude: peak,
                trace: Box::new(trace),
            });
        }

        if j % substeps == 0 {
            match &exp.drive {
                Drive::Closed { reference } => {
                    (cmd, held) = lp.tick(hall, theta, f, reference.value(t))?;
                }
                Drive::Open { current, phase_offset_deg } => {
                    cmd = DriveCommand {
                        current_amplitude: current.value(t),
                        phase_offset_deg: *phase_offset_deg,
                        amplitude_cmd: 0.0,
                        saturated: false,
                    };
                }
            }
        }

        let amp = cmd.current_amplitude;
        let offset = cmd.phase_offset_deg.to_radians();
        let w = 2.0 * PI * f;
        let currents = move |tau: f64| {
            let ph = theta + w * (tau - t);
            [amp * ph.cos(), amp * (ph + offset).cos()]
        };
        let contact = contact_at(&exp.scenario, t);
        let i = currents(t);
        let mut bits = 0;
        if cmd.saturated {
            bits |= flags::SATURATED;
        }
        if held {
            bits |= flags::PHASE_HELD;
        }
        if contact.is_some() {
            bits |= flags::CONTACT;
        }
        trace.push(
            TraceRow {
                t,
                x1: s.x1,
                x2: s.x2,
                hall1: hall[0],
                hall2: hall[1],
                i1: i[0],
                i2: i[1],
                a_cmd: cmd.amplitude_cmd,
                ph_cmd: cmd.phase_offset_deg,
                f_finger: plant.contact_force(i, contact.as_ref()),
                w_true: if contact.is_some() { exp.scenario.load.value(t) } else { 0.0 },
                p_true: if exp.scenario.finger.is_some() { exp.scenario.position.value(t) } else { 0.0 },
            },
            bits,
        );

        plant.step(dt, currents, |tau| contact_at(&exp.scenario, tau))?;
        nco.advance();
    }
    Ok(trace)
}
