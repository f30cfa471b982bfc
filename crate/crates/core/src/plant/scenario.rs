use serde::{Deserialize, Serialize};

use super::params::PlateParams;
use super::profile::Profile;
use crate::error::{Error, Result};
use crate::finger::{FingerModel, LoadScaling};

/// What the finger does over time. Loads in N, positions in m measured from
/// mount 2 toward mount 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TouchScenario {
    pub finger: Option<FingerModel>,
    pub scaling: Option<LoadScaling>,
    pub load: Profile,
    pub position: Profile,
    /// Half-open `[start, end)` contact windows, s.
    pub contact: Vec<[f64; 2]>,
    /// Swipe speed, m/s; carried for bookkeeping only.
    pub scan_velocity: Option<Profile>,
}

impl Default for TouchScenario {
    fn default() -> Self {
        TouchScenario::untouched()
    }
}

impl TouchScenario {
    pub fn untouched() -> Self {
        TouchScenario {
            finger: None,
            scaling: None,
            load: Profile::constant(0.0),
            position: Profile::constant(0.0275),
            contact: Vec::new(),
            scan_velocity: None,
        }
    }

    /// Constant load at a fixed position over the given windows.
    pub fn steady(model: FingerModel, load_n: f64, position_m: f64, contact: Vec<[f64; 2]>) -> Self {
        TouchScenario {
            finger: Some(model),
            scaling: None,
            load: Profile::constant(load_n),
            position: Profile::constant(position_m),
            contact,
            scan_velocity: None,
        }
    }

    pub fn in_contact(&self, t: f64) -> bool {
        self.finger.is_some() && self.contact.iter().any(|w| t >= w[0] && t < w[1])
    }

    /// Model in force at time `t`, with load scaling applied.
    pub fn model_at(&self, t: f64) -> Option<FingerModel> {
        let m = self.finger?;
        Some(match &self.scaling {
            Some(s) => s.apply(&m, self.load.value(t)),
            None => m,
        })
    }

    pub fn validate(&self, plate: &PlateParams, duration: f64) -> Result<()> {
        self.load.validate()?;
        self.position.validate()?;
        if let Some(v) = &self.scan_velocity {
            v.validate()?;
        }
        if let Some(m) = &self.finger {
            m.validate()?;
        }
        if let Some(s) = &self.scaling {
            s.validate()?;
        }
        for w in &self.contact {
            if !(w[0].is_finite() && w[1].is_finite() && w[1] > w[0]) {
                return Err(Error::param("contact", format!("invalid window {w:?}")));
            }
        }
        if self.contact.is_empty() || self.finger.is_none() {
            return Ok(());
        }
        let (wmin, _) = self.load.bounds(duration);
        if wmin < 0.0 {
            return Err(Error::param("load", format!("normal load must be >= 0, reaches {wmin}")));
        }
        let (pmin, pmax) = self.position.bounds(duration);
        if pmin < 0.0 || pmax > plate.spacing {
            return Err(Error::param(
                "position",
                format!("position range [{pmin}, {pmax}] m leaves the plate span [0, {}] m", plate.spacing),
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::finger::Preset;

    #[test]
    fn contact_windows_are_half_open() {
        let s = TouchScenario::steady(Preset::FirmTouch.model(2).unwrap(), 0.5, 0.02, vec![[1.0, 2.0]]);
        assert!(!s.in_contact(0.99));
        assert!(s.in_contact(1.0));
        assert!(!s.in_contact(2.0));
    }

    #[test]
    fn rejects_off_plate_position_and_negative_load() {
        let plate = PlateParams::default();
        let s = TouchScenario::steady(Preset::FirmTouch.model(2).unwrap(), 0.5, 0.07, vec![[0.0, 1.0]]);
        assert!(s.validate(&plate, 1.0).is_err());
        let s = TouchScenario::steady(Preset::FirmTouch.model(2).unwrap(), -0.1, 0.02, vec![[0.0, 1.0]]);
        assert!(s.validate(&plate, 1.0).is_err());
        assert!(TouchScenario::untouched().validate(&plate, 1.0).is_ok());
    }
}
