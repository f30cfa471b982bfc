//! Frequency-domain lookup of the plant gain.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct FrequencyResponseTable {
    freqs: Vec<f64>,
    gains: Vec<Complex64>,
    log_mag: Vec<f64>,
    phase: Vec<f64>,
}

/// On-disk form of one table row.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResponsePoint {
    pub f_hz: f64,
    pub re: f64,
    pub im: f64,
}

impl FrequencyResponseTable {
    pub fn new(points: Vec<(f64, Complex64)>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::param("table", "needs at least two points"));
        }
        for w in points.windows(2) {
            if !(w[1].0 > w[0].0) {
                return Err(Error::param("table", "frequencies must be strictly increasing"));
            }
        }
        for &(f, g) in &points {
            if !(f > 0.0 && f.is_finite()) {
                return Err(Error::param("table", format!("invalid frequency {f}")));
            }
            if !(g.re.is_finite() && g.im.is_finite()) || g.norm() == 0.0 {
                return Err(Error::param("table", format!("gain at {f} Hz must be finite and nonzero")));
            }
        }
        let freqs: Vec<f64> = points.iter().map(|p| p.0).collect();
        let gains: Vec<Complex64> = points.iter().map(|p| p.1).collect();
        let log_mag = gains.iter().map(|g| g.norm().ln()).collect();
        let mut phase: Vec<f64> = Vec::with_capacity(gains.len());
        for g in &gains {
            let raw = g.arg();
            let p = match phase.last() {
                None => raw,
                Some(&prev) => raw + 2.0 * PI * ((prev - raw) / (2.0 * PI)).round(),
            };
            phase.push(p);
        }
        Ok(FrequencyResponseTable {
            freqs,
            gains,
            log_mag,
            phase,
        })
    }

    pub fn from_fn(freqs: &[f64], g: impl Fn(f64) -> Complex64) -> Result<Self> {
        Self::new(freqs.iter().map(|&f| (f, g(f))).collect())
    }

    pub fn range(&self) -> (f64, f64) {
        (self.freqs[0], *self.freqs.last().expect("nonempty"))
    }

    pub fn points(&self) -> impl Iterator<Item = (f64, Complex64)> + '_ {
        self.freqs.iter().copied().zip(self.gains.iter().copied())
    }

    pub fn to_points(&self) -> Vec<ResponsePoint> {
        self.points()
            .map(|(f_hz, g)| ResponsePoint { f_hz, re: g.re, im: g.im })
            .collect()
    }

    /// Unwrapped phase in radians at the table nodes.
    pub fn unwrapped_phase(&self) -> &[f64] {
        &self.phase
    }

    /// Node with the largest magnitude.
    pub fn peak(&self) -> (f64, Complex64) {
        let i = (0..self.gains.len())
            .max_by(|&a, &b| self.log_mag[a].total_cmp(&self.log_mag[b]))
            .expect("nonempty");
        (self.freqs[i], self.gains[i])
    }

    /// Log-frequency interpolation of log-magnitude and unwrapped phase.
    pub fn lookup(&self, f_hz: f64) -> Result<Complex64> {
        let (lo, hi) = self.range();
        if !(f_hz >= lo && f_hz <= hi) {
            return Err(Error::OutOfRange { f_hz, lo, hi });
        }
        let i = match self.freqs.binary_search_by(|f| f.total_cmp(&f_hz)) {
            Ok(i) => return Ok(self.gains[i]),
            Err(i) => i - 1,
        };
        let t = (f_hz.ln() - self.freqs[i].ln()) / (self.freqs[i + 1].ln() - self.freqs[i].ln());
        let mag = (self.log_mag[i] + t * (self.log_mag[i + 1] - self.log_mag[i])).exp();
        let ph = self.phase[i] + t * (self.phase[i + 1] - self.phase[i]);
        Ok(Complex64::from_polar(mag, ph))
    }
}

pub fn plant_feedforward(table: &FrequencyResponseTable, f_hz: f64) -> Result<Complex64> {
    table.lookup(f_hz)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn table() -> FrequencyResponseTable {
        FrequencyResponseTable::new(vec![
            (20.0, Complex64::from_polar(1.0, 0.1)),
            (80.0, Complex64::from_polar(4.0, 3.0)),
            (320.0, Complex64::from_polar(2.0, -2.8)),
        ])
        .unwrap()
    }

    #[test]
    fn node_lookup_is_exact() {
        let t = table();
        assert_eq!(t.lookup(80.0).unwrap(), Complex64::from_polar(4.0, 3.0));
    }

    #[test]
    fn geometric_midpoint_interpolates_in_log_space() {
        let t = table();
        let g = t.lookup(40.0).unwrap();
        assert_relative_eq!(g.norm(), 2.0, epsilon = 1e-12);
        assert_relative_eq!(g.arg(), 1.55, epsilon = 1e-12);
        // the second segment crosses the branch cut; unwrapped phase goes
        // from 3.0 to 2π - 2.8
        let g = t.lookup(160.0).unwrap();
        let mid = 0.5 * (3.0 + 2.0 * PI - 2.8);
        assert_relative_eq!(g.norm(), 8.0f64.sqrt(), epsilon = 1e-12);
        assert_relative_eq!(Complex64::from_polar(1.0, mid).arg(), g.arg(), epsilon = 1e-12);
    }

    #[test]
    fn out_of_range_is_an_error() {
        let t = table();
        assert!(matches!(t.lookup(19.9), Err(Error::OutOfRange { .. })));
        assert!(matches!(t.lookup(400.0), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn construction_checks() {
        assert!(FrequencyResponseTable::new(vec![(20.0, Complex64::new(1.0, 0.0))]).is_err());
        assert!(FrequencyResponseTable::new(vec![
            (20.0, Complex64::new(1.0, 0.0)),
            (20.0, Complex64::new(1.0, 0.0))
        ])
        .is_err());
        assert!(FrequencyResponseTable::new(vec![
            (20.0, Complex64::new(1.0, 0.0)),
            (30.0, Complex64::new(0.0, 0.0))
        ])
        .is_err());
    }
}
