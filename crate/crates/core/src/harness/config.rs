//! Scenario files: one TOML document drives every command.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::control::SynthesisConfig;
use crate::error::{Error, Result};
use crate::estimation::PipelineConfig;
use crate::finger::{FingerModel, LoadScaling, Preset};
use crate::plant::{Drive, DriveFrequency, Experiment, LoopConfig, PlateParams, Profile, TouchScenario};
use crate::PROTOCOL_FREQUENCIES_HZ;

/// Actuator limits for a reference.
pub const MAX_VELOCITY_M_S: f64 = 0.06;
pub const MAX_DISPLACEMENT_M: f64 = 1e-3;

/// A preset by name and order, or explicit parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FingerSpec {
    Preset { preset: String, order: usize },
    Model(FingerModel),
}

impl FingerSpec {
    pub fn resolve(&self) -> Result<FingerModel> {
        let m = match self {
            FingerSpec::Preset { preset, order } => Preset::from_name(preset)?.model(*order)?,
            FingerSpec::Model(m) => *m,
        };
        m.validate()?;
        Ok(m)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TouchConfig {
    pub finger: Option<FingerSpec>,
    pub scaling: Option<LoadScaling>,
    pub load: Profile,
    pub position: Profile,
    pub contact: Vec<[f64; 2]>,
    pub scan_velocity: Option<Profile>,
}

impl Default for TouchConfig {
    fn default() -> Self {
        let u = TouchScenario::untouched();
        TouchConfig {
            finger: None,
            scaling: None,
            load: u.load,
            position: u.position,
            contact: u.contact,
            scan_velocity: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthCommand {
    pub frequencies_hz: Vec<f64>,
}

impl Default for SynthCommand {
    fn default() -> Self {
        SynthCommand {
            frequencies_hz: PROTOCOL_FREQUENCIES_HZ.to_vec(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CurvesCommand {
    pub model: FingerSpec,
    /// Explicit grid; when empty, `points` log-spaced values over `range_hz`.
    pub frequencies_hz: Vec<f64>,
    pub range_hz: (f64, f64),
    pub points: usize,
}

impl Default for CurvesCommand {
    fn default() -> Self {
        CurvesCommand {
            model: FingerSpec::Preset {
                preset: Preset::LightTouch.name().to_string(),
                order: 4,
            },
            frequencies_hz: Vec::new(),
            range_hz: (10.0, 1000.0),
            points: 100,
        }
    }
}

impl CurvesCommand {
    pub fn grid(&self) -> Result<Vec<f64>> {
        if !self.frequencies_hz.is_empty() {
            return Ok(self.frequencies_hz.clone());
        }
        let (lo, hi) = self.range_hz;
        if !(lo > 0.0 && hi > lo && self.points >= 2) {
            return Err(Error::param("curves", "need 0 < lo < hi and at least two points"));
        }
        Ok(crate::control::synthesis::log_grid(lo, hi, self.points))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub duration_s: f64,
    pub freq_hz: f64,
    /// Amplitude reference, m; replaced by `reference` when that is set.
    pub a_ref_m: f64,
    pub reference: Option<Profile>,
    pub plate: PlateParams,
    pub control: LoopConfig,
    pub touch: TouchConfig,
    pub synth: SynthCommand,
    pub identify: PipelineConfig,
    pub curves: CurvesCommand,
    pub out_dir: PathBuf,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            seed: 0,
            duration_s: 2.0,
            freq_hz: 111.0,
            a_ref_m: 1e-5,
            reference: None,
            plate: PlateParams::default(),
            control: LoopConfig::default(),
            touch: TouchConfig::default(),
            synth: SynthCommand::default(),
            identify: PipelineConfig::default(),
            curves: CurvesCommand::default(),
            out_dir: PathBuf::from("out"),
        }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub freq_hz: Option<f64>,
    pub a_ref_m: Option<f64>,
    pub out_dir: Option<PathBuf>,
}

pub fn check_protocol_frequency(f_hz: f64) -> Result<()> {
    if PROTOCOL_FREQUENCIES_HZ.contains(&f_hz) {
        Ok(())
    } else {
        Err(Error::param(
            "freq_hz",
            format!("{f_hz} Hz is not one of the protocol frequencies {PROTOCOL_FREQUENCIES_HZ:?}"),
        ))
    }
}

/// Displacement and velocity limits on a reference amplitude at `f_hz`.
pub fn check_actuator_range(a_m: f64, f_hz: f64) -> Result<()> {
    if !(a_m.is_finite() && a_m >= 0.0) {
        return Err(Error::param("a_ref_m", format!("must be >= 0, got {a_m}")));
    }
    if a_m > MAX_DISPLACEMENT_M {
        return Err(Error::param("a_ref_m", format!("{a_m} m exceeds the {MAX_DISPLACEMENT_M} m stroke")));
    }
    let v = 2.0 * PI * f_hz * a_m;
    if v > MAX_VELOCITY_M_S {
        return Err(Error::param(
            "a_ref_m",
            format!("velocity amplitude {v:.4} m/s at {f_hz} Hz exceeds {MAX_VELOCITY_M_S} m/s"),
        ));
    }
    Ok(())
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig = toml::from_str(text)?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(f) = o.freq_hz {
            self.freq_hz = f;
        }
        if let Some(a) = o.a_ref_m {
            self.a_ref_m = a;
            self.reference = None;
        }
        if let Some(d) = &o.out_dir {
            self.out_dir = d.clone();
        }
    }

    pub fn reference(&self) -> Profile {
        self.reference.clone().unwrap_or(Profile::constant(self.a_ref_m))
    }

    pub fn validate(&self) -> Result<()> {
        check_protocol_frequency(self.freq_hz)?;
        self.plate.validate()?;
        let r = self.reference();
        r.validate()?;
        let (lo, hi) = r.bounds(self.duration_s);
        if lo < 0.0 {
            return Err(Error::param("reference", "amplitude reference must be >= 0"));
        }
        check_actuator_range(hi, self.freq_hz)?;
        if let Some(f) = &self.touch.finger {
            f.resolve()?;
        }
        for &f in &self.synth.frequencies_hz {
            check_protocol_frequency(f)?;
        }
        Ok(())
    }

    pub fn scenario(&self) -> Result<TouchScenario> {
        let t = &self.touch;
        Ok(TouchScenario {
            finger: t.finger.as_ref().map(FingerSpec::resolve).transpose()?,
            scaling: t.scaling,
            load: t.load.clone(),
            position: t.position.clone(),
            contact: t.contact.clone(),
            scan_velocity: t.scan_velocity.clone(),
        })
    }

    pub fn experiment(&self) -> Result<Experiment> {
        self.validate()?;
        let e = Experiment {
            plate: self.plate,
            scenario: self.scenario()?,
            control: self.control.clone(),
            frequency: DriveFrequency::Fixed { f_hz: self.freq_hz },
            drive: Drive::Closed {
                reference: self.reference(),
            },
            duration_s: self.duration_s,
            seed: self.seed,
        };
        e.validate()?;
        Ok(e)
    }

    pub fn synthesis(&self) -> SynthesisConfig {
        SynthesisConfig {
            bandwidth_hz: self.control.bandwidth_hz,
            filter_cutoff_hz: self.control.filter_cutoff_hz,
            control_rate_hz: self.control.control_rate_hz,
            fit_band_hz: self.control.fit_band_hz,
        }
    }
}
