//! Lumped fingertip models. Parameters are kept in the units the fits were
//! published in: grams, N·s/m and N/mm.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn jw(f_hz: f64) -> Complex64 {
    Complex64::new(0.0, 2.0 * PI * f_hz)
}

fn check_positive(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::param(name, format!("must be positive and finite, got {v}")))
    }
}

/// Single mass-spring-damper.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Order2 {
    pub m_f: f64,
    pub b_f: f64,
    pub k_f: f64,
}

/// Skin node (mass `m_s`) coupled through `b_s`, `k_s` to a phalanx node
/// (mass `m_p`) grounded through `b_p`, `k_p`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Order4 {
    pub m_p: f64,
    pub b_p: f64,
    pub k_p: f64,
    pub m_s: f64,
    pub b_s: f64,
    pub k_s: f64,
}

/// SI view: kg, N·s/m, N/m.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Order2Si {
    pub m: f64,
    pub b: f64,
    pub k: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Order4Si {
    pub m_p: f64,
    pub b_p: f64,
    pub k_p: f64,
    pub m_s: f64,
    pub b_s: f64,
    pub k_s: f64,
}

impl Order2 {
    pub fn validate(&self) -> Result<()> {
        check_positive("m_f", self.m_f)?;
        check_positive("b_f", self.b_f)?;
        check_positive("k_f", self.k_f)
    }

    pub fn si(&self) -> Order2Si {
        Order2Si {
            m: self.m_f * 1e-3,
            b: self.b_f,
            k: self.k_f * 1e3,
        }
    }

    pub fn from_si(m: f64, b: f64, k: f64) -> Self {
        Order2 {
            m_f: m * 1e3,
            b_f: b,
            k_f: k * 1e-3,
        }
    }

    pub fn resonance_hz(&self) -> f64 {
        let p = self.si();
        (p.k / p.m).sqrt() / (2.0 * PI)
    }
}

impl Order4 {
    pub fn validate(&self) -> Result<()> {
        check_positive("m_p", self.m_p)?;
        check_positive("b_p", self.b_p)?;
        check_positive("k_p", self.k_p)?;
        check_positive("m_s", self.m_s)?;
        check_positive("b_s", self.b_s)?;
        check_positive("k_s", self.k_s)
    }

    pub fn si(&self) -> Order4Si {
        Order4Si {
            m_p: self.m_p * 1e-3,
            b_p: self.b_p,
            k_p: self.k_p * 1e3,
            m_s: self.m_s * 1e-3,
            b_s: self.b_s,
            k_s: self.k_s * 1e3,
        }
    }

    /// Series combination of skin and phalanx springs, N/m.
    pub fn effective_stiffness(&self) -> f64 {
        let p = self.si();
        p.k_s * p.k_p / (p.k_s + p.k_p)
    }

    fn quartic(&self, s: Complex64) -> Complex64 {
        let Order4Si { m_p, b_p, k_p, m_s, b_s, k_s } = self.si();
        let s2 = s * s;
        (m_s * m_p) * s2 * s2
            + (m_s * (b_p + b_s) + m_p * b_s) * s2 * s
            + (m_s * (k_s + k_p) + m_p * k_s + b_s * b_p) * s2
            + (b_s * k_p + b_p * k_s) * s
            + k_s * k_p
    }

    fn skin_mobility_num(&self, s: Complex64) -> Complex64 {
        let p = self.si();
        p.m_p * s * s * s + (p.b_p + p.b_s) * s * s + (p.k_p + p.k_s) * s
    }
}

pub fn impedance_2nd(model: &Order2, f_hz: f64) -> Complex64 {
    let p = model.si();
    let s = jw(f_hz);
    (p.m * s * s + p.b * s + p.k) / s
}

pub fn impedance_4th(model: &Order4, f_hz: f64) -> Complex64 {
    let s = jw(f_hz);
    model.quartic(s) / model.skin_mobility_num(s)
}

pub fn skin_admittance(model: &Order4, f_hz: f64) -> Complex64 {
    let s = jw(f_hz);
    model.skin_mobility_num(s) / model.quartic(s)
}

pub fn phalanx_velocity_tf(model: &Order4, f_hz: f64) -> Complex64 {
    let p = model.si();
    let s = jw(f_hz);
    (p.b_s * s * s + p.k_s * s) / model.quartic(s)
}

pub fn tissue_velocity_tf(model: &Order4, f_hz: f64) -> Complex64 {
    let p = model.si();
    let s = jw(f_hz);
    (p.m_p * s * s * s + p.b_p * s * s + p.k_p * s) / model.quartic(s)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FingerModel {
    Order2(Order2),
    Order4(Order4),
}

impl FingerModel {
    pub fn validate(&self) -> Result<()> {
        match self {
            FingerModel::Order2(m) => m.validate(),
            FingerModel::Order4(m) => m.validate(),
        }
    }

    pub fn impedance(&self, f_hz: f64) -> Complex64 {
        match self {
            FingerModel::Order2(m) => impedance_2nd(m, f_hz),
            FingerModel::Order4(m) => impedance_4th(m, f_hz),
        }
    }

    pub fn order(&self) -> usize {
        match self {
            FingerModel::Order2(_) => 2,
            FingerModel::Order4(_) => 4,
        }
    }
}

/// The two published parameter sets, split at 0.5 N of normal load.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Preset {
    #[serde(rename = "w_lt_0.5")]
    LightTouch,
    #[serde(rename = "w_gt_0.5")]
    FirmTouch,
}

impl Preset {
    pub const ALL: [Preset; 2] = [Preset::LightTouch, Preset::FirmTouch];

    pub fn name(self) -> &'static str {
        match self {
            Preset::LightTouch => "w_lt_0.5",
            Preset::FirmTouch => "w_gt_0.5",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "w_lt_0.5" => Ok(Preset::LightTouch),
            "w_gt_0.5" => Ok(Preset::FirmTouch),
            other => Err(Error::param(
                "preset",
                format!("unknown preset `{other}` (expected w_lt_0.5 or w_gt_0.5)"),
            )),
        }
    }

    /// Whole-finger fit.
    pub fn order2(self) -> Order2 {
        match self {
            Preset::LightTouch => Order2 { m_f: 4.0, b_f: 1.0, k_f: 0.2 },
            Preset::FirmTouch => Order2 { m_f: 4.0, b_f: 1.5, k_f: 0.3 },
        }
    }

    /// Skin/phalanx fit; the phalanx row reuses the whole-finger values.
    pub fn order4(self) -> Order4 {
        let p = self.order2();
        let (b_s, k_s) = match self {
            Preset::LightTouch => (1.5, 1.0),
            Preset::FirmTouch => (8.0, 8.0),
        };
        Order4 {
            m_p: p.m_f,
            b_p: p.b_f,
            k_p: p.k_f,
            m_s: 0.2,
            b_s,
            k_s,
        }
    }

    pub fn model(self, order: usize) -> Result<FingerModel> {
        match order {
            2 => Ok(FingerModel::Order2(self.order2())),
            4 => Ok(FingerModel::Order4(self.order4())),
            o => Err(Error::param("order", format!("must be 2 or 4, got {o}"))),
        }
    }
}

/// How finger parameters follow the instantaneous normal load.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LoadScaling {
    /// Skin damping and stiffness (the whole finger for a second-order
    /// model) multiplied by factors that move linearly from 1 at `w_low`
    /// to the given end factors at `w_high`, clamped outside.
    Linear {
        w_low: f64,
        w_high: f64,
        damping_factor: f64,
        stiffness_factor: f64,
    },
    /// Every parameter multiplied by `(W / w_ref)^exponent`, so the
    /// impedance magnitude follows the same power of `W` at all frequencies.
    PowerLaw { w_ref: f64, exponent: f64 },
}

impl LoadScaling {
    /// Moves the light-touch skin values onto the firm-touch ones between
    /// 0.25 N and 1 N.
    pub fn table_endpoints() -> Self {
        let lo = Preset::LightTouch.order4();
        let hi = Preset::FirmTouch.order4();
        LoadScaling::Linear {
            w_low: 0.25,
            w_high: 1.0,
            damping_factor: hi.b_s / lo.b_s,
            stiffness_factor: hi.k_s / lo.k_s,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            LoadScaling::Linear { w_low, w_high, damping_factor, stiffness_factor } => {
                if !(w_low >= 0.0 && w_high > w_low) {
                    return Err(Error::param("scaling", "need 0 <= w_low < w_high"));
                }
                check_positive("damping_factor", damping_factor)?;
                check_positive("stiffness_factor", stiffness_factor)
            }
            LoadScaling::PowerLaw { w_ref, exponent } => {
                check_positive("w_ref", w_ref)?;
                if !exponent.is_finite() {
                    return Err(Error::param("exponent", "must be finite"));
                }
                Ok(())
            }
        }
    }

    /// Model in force at load `w` (N).
    pub fn apply(&self, model: &FingerModel, w: f64) -> FingerModel {
        match *self {
            LoadScaling::Linear { w_low, w_high, damping_factor, stiffness_factor } => {
                let t = ((w - w_low) / (w_high - w_low)).clamp(0.0, 1.0);
                let fb = 1.0 + t * (damping_factor - 1.0);
                let fk = 1.0 + t * (stiffness_factor - 1.0);
                match *model {
                    FingerModel::Order2(m) => FingerModel::Order2(Order2 { b_f: m.b_f * fb, k_f: m.k_f * fk, ..m }),
                    FingerModel::Order4(m) => FingerModel::Order4(Order4 { b_s: m.b_s * fb, k_s: m.k_s * fk, ..m }),
                }
            }
            LoadScaling::PowerLaw { w_ref, exponent } => {
                let g = (w.max(1e-3 * w_ref) / w_ref).powf(exponent);
                match *model {
                    FingerModel::Order2(m) => FingerModel::Order2(Order2 {
                        m_f: m.m_f * g,
                        b_f: m.b_f * g,
                        k_f: m.k_f * g,
                    }),
                    FingerModel::Order4(m) => FingerModel::Order4(Order4 {
                        m_p: m.m_p * g,
                        b_p: m.b_p * g,
                        k_p: m.k_p * g,
                        m_s: m.m_s * g,
                        b_s: m.b_s * g,
                        k_s: m.k_s * g,
                    }),
                }
            }
        }
    }
}
