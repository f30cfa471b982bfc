//! Time-resolved finger impedance from force and velocity phasors.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::filters::{bandpass_record, bandpass_settle_samples};
use crate::dsp::LockIn;
use crate::error::{Error, Result};

pub const IMPEDANCE_CUTOFF_HZ: f64 = 10.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImpedanceSample {
    pub t: f64,
    /// N·s/m; `None` where the velocity phasor is below the floor or the
    /// filters are still settling.
    pub zmag: Option<f64>,
    pub f_hz: f64,
    /// Concurrent normal load, N.
    pub load: f64,
}

impl ImpedanceSample {
    pub fn valid(&self) -> bool {
        self.zmag.is_some()
    }
}

/// Three times the velocity-amplitude noise the lock-in sees when the
/// displacement sensor has white noise `sigma_m` at `rate_hz`.
pub fn velocity_noise_floor(f_hz: f64, sigma_m: f64, rate_hz: f64) -> f64 {
    // noise-equivalent bandwidth of the order-2 Butterworth averager
    let enbw = PI / (2.0 * std::f64::consts::SQRT_2) * IMPEDANCE_CUTOFF_HZ;
    3.0 * 2.0 * PI * f_hz * sigma_m * (4.0 * enbw / rate_hz).sqrt()
}

/// Samples before the band-pass and averager have settled.
pub fn impedance_settle_samples(f_hz: f64, rate_hz: f64) -> usize {
    // the averager reaches 1% of a step within 0.1 s at 10 Hz
    bandpass_settle_samples(f_hz, rate_hz) + (0.1 * rate_hz).ceil() as usize
}

/// Band-pass both records at `f_hz`, demodulate, average and divide.
pub fn lockin_impedance(
    force: &[f64],
    velocity: &[f64],
    times: &[f64],
    loads: &[f64],
    f_hz: f64,
    rate_hz: f64,
    v_floor: f64,
) -> Result<Vec<ImpedanceSample>> {
    let n = force.len();
    if velocity.len() != n || times.len() != n || loads.len() != n {
        return Err(Error::param("lockin_impedance", "inputs must have equal length"));
    }
    if !(v_floor >= 0.0) {
        return Err(Error::param("v_floor", format!("must be non-negative, got {v_floor}")));
    }
    let fb = bandpass_record(force, f_hz, rate_hz)?;
    let vb = bandpass_record(velocity, f_hz, rate_hz)?;
    let mut lf = LockIn::new(f_hz, rate_hz, IMPEDANCE_CUTOFF_HZ)?;
    let mut lv = LockIn::new(f_hz, rate_hz, IMPEDANCE_CUTOFF_HZ)?;
    let settle = impedance_settle_samples(f_hz, rate_hz);
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let xf: Complex64 = lf.update(fb[k]).into();
        let xv: Complex64 = lv.update(vb[k]).into();
        let ok = k >= settle && 2.0 * xv.norm() > v_floor && xv.norm() > 0.0;
        out.push(ImpedanceSample {
            t: times[k],
            zmag: ok.then(|| (xf / xv).norm()),
            f_hz,
            load: loads[k],
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn tone(n: usize, f: f64, rate: f64, amp: f64, ph: f64) -> Vec<f64> {
        (0..n).map(|k| amp * (2.0 * PI * f * k as f64 / rate + ph).cos()).collect()
    }

    #[test]
    fn exact_proportionality_recovers_the_gain() {
        let rate = 30_000.0;
        let f = 111.0;
        let n = 30_000;
        let v = tone(n, f, rate, 7e-3, 0.3);
        // Z = 2.8 at +40°
        let z = Complex64::from_polar(2.8, 40f64.to_radians());
        let force = tone(n, f, rate, 7e-3 * z.norm(), 0.3 + z.arg());
        let t: Vec<f64> = (0..n).map(|k| k as f64 / rate).collect();
        let s = lockin_impedance(&force, &v, &t, &vec![0.5; n], f, rate, 1e-5).unwrap();
        let settle = impedance_settle_samples(f, rate);
        assert!(s[..settle].iter().all(|x| !x.valid()));
        for x in &s[settle..] {
            assert_relative_eq!(x.zmag.unwrap(), 2.8, max_relative = 1e-2);
        }
    }

    #[test]
    fn quiet_velocity_is_flagged() {
        let rate = 30_000.0;
        let n = 12_000;
        let t: Vec<f64> = (0..n).map(|k| k as f64 / rate).collect();
        let s = lockin_impedance(&vec![1.0; n], &vec![0.0; n], &t, &vec![0.0; n], 47.0, rate, 1e-5).unwrap();
        assert!(s.iter().all(|x| x.zmag.is_none()));
    }

    #[test]
    fn length_mismatch_is_rejected() {
        assert!(lockin_impedance(&[0.0; 3], &[0.0; 2], &[0.0; 3], &[0.0; 3], 47.0, 30_000.0, 0.0).is_err());
    }

    #[test]
    fn floor_scales_with_frequency() {
        let a = velocity_noise_floor(20.0, 1e-6, 30_000.0);
        let b = velocity_noise_floor(400.0, 1e-6, 30_000.0);
        assert_relative_eq!(b / a, 20.0, epsilon = 1e-12);
    }
}
