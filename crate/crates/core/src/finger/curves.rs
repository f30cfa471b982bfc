use std::io::Write;

use serde::Serialize;

use super::model::{phalanx_velocity_tf, skin_admittance, tissue_velocity_tf, FingerModel};
use crate::error::{Error, Result};

pub const CURVE_HEADER: &str = "f_hz,Zmag,Zphase,Ys,Yp,Yt";

/// One row of a model-curve export. Phase in degrees; admittances are
/// magnitudes in m/(N·s).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CurveRow {
    pub f_hz: f64,
    #[serde(rename = "Zmag")]
    pub zmag: f64,
    #[serde(rename = "Zphase")]
    pub zphase: f64,
    #[serde(rename = "Ys")]
    pub ys: f64,
    #[serde(rename = "Yp")]
    pub yp: f64,
    #[serde(rename = "Yt")]
    pub yt: f64,
}

/// For a second-order model the finger moves as one body, so the phalanx
/// admittance equals the skin admittance and the relative tissue term is 0.
pub fn model_curves(model: &FingerModel, freqs: &[f64]) -> Result<Vec<CurveRow>> {
    model.validate()?;
    freqs
        .iter()
        .map(|&f| {
            if !(f.is_finite() && f > 0.0) {
                return Err(Error::param("f_hz", format!("must be positive, got {f}")));
            }
            let z = model.impedance(f);
            let (ys, yp, yt) = match model {
                FingerModel::Order2(_) => {
                    let y = 1.0 / z.norm();
                    (y, y, 0.0)
                }
                FingerModel::Order4(m) => (
                    skin_admittance(m, f).norm(),
                    phalanx_velocity_tf(m, f).norm(),
                    tissue_velocity_tf(m, f).norm(),
                ),
            };
            Ok(CurveRow {
                f_hz: f,
                zmag: z.norm(),
                zphase: z.arg().to_degrees(),
                ys,
                yp,
                yt,
            })
        })
        .collect()
}

pub fn write_curves<W: Write>(writer: W, rows: &[CurveRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    if rows.is_empty() {
        w.write_record(CURVE_HEADER.split(','))?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
