//! Record-level filters shared by the identification steps.

use std::f64::consts::PI;

use crate::dsp::iir::{bandpass, butterworth_lowpass, notch, BiquadCoeffs, Cascade};
use crate::error::{Error, Result};

pub const SPLIT_CUTOFF_HZ: f64 = 10.0;
pub const SPLIT_ORDER: usize = 4;
pub const DRIVE_NOTCH_Q: f64 = 2.0;
pub const BANDPASS_Q: f64 = 10.0;
/// Identical resonator sections in cascade. One section falls off only as
/// 1/f, which leaves the second difference of white sensor noise growing
/// toward Nyquist; two make it fall.
pub const BANDPASS_SECTIONS: usize = 2;

/// Slow/fast split: a 4th-order Butterworth low-pass with a notch at the
/// drive frequency, and its exact complement `x - low`.
#[derive(Clone, Debug)]
pub struct SplitFilter {
    sections: Vec<BiquadCoeffs>,
    rate_hz: f64,
}

impl SplitFilter {
    pub fn new(drive_hz: f64, rate_hz: f64) -> Result<Self> {
        let mut sections = butterworth_lowpass(SPLIT_ORDER, SPLIT_CUTOFF_HZ, rate_hz)?;
        sections.push(notch(drive_hz, DRIVE_NOTCH_Q, rate_hz)?);
        Ok(SplitFilter { sections, rate_hz })
    }

    pub fn sections(&self) -> &[BiquadCoeffs] {
        &self.sections
    }

    pub fn low(&self, xs: &[f64]) -> Vec<f64> {
        Cascade::new(&self.sections).filter(xs)
    }

    /// `(low, high)` with `low + high == x` sample by sample.
    pub fn split(&self, xs: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let low = self.low(xs);
        let high = xs.iter().zip(&low).map(|(x, l)| x - l).collect();
        (low, high)
    }

    /// Group delay of the low-pass path at DC, s.
    pub fn dc_delay_s(&self) -> f64 {
        let df = 1e-3;
        let c = Cascade::new(&self.sections);
        let ph = c.response(df, self.rate_hz).arg();
        -ph / (2.0 * PI * df)
    }
}

/// Resonant band-pass with unity gain and zero phase at `center_hz`.
pub fn bandpass_record(xs: &[f64], center_hz: f64, rate_hz: f64) -> Result<Vec<f64>> {
    let c = bandpass(center_hz, BANDPASS_Q, rate_hz)?;
    Ok(Cascade::new(&[c; BANDPASS_SECTIONS]).filter(xs))
}

/// Samples spent by the band-pass settling to well under 1% of a step.
pub fn bandpass_settle_samples(center_hz: f64, rate_hz: f64) -> usize {
    // envelope time constant Q/(π f); five of them per section
    (5.0 * BANDPASS_SECTIONS as f64 * BANDPASS_Q / (PI * center_hz) * rate_hz).ceil() as usize
}

/// Symmetric first difference. Reads one sample ahead; endpoints fall back to
/// one-sided differences so the output stays aligned with the input.
pub fn central_difference(xs: &[f64], rate_hz: f64) -> Result<Vec<f64>> {
    if xs.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            available: xs.len(),
        });
    }
    let n = xs.len();
    let mut d = Vec::with_capacity(n);
    d.push((xs[1] - xs[0]) * rate_hz);
    for k in 1..n - 1 {
        d.push((xs[k + 1] - xs[k - 1]) * 0.5 * rate_hz);
    }
    d.push((xs[n - 1] - xs[n - 2]) * rate_hz);
    Ok(d)
}

/// Three-point second difference, with the end values repeated.
pub fn second_difference(xs: &[f64], rate_hz: f64) -> Result<Vec<f64>> {
    if xs.len() < 3 {
        return Err(Error::InsufficientData {
            needed: 3,
            available: xs.len(),
        });
    }
    let n = xs.len();
    let r2 = rate_hz * rate_hz;
    let mut d = Vec::with_capacity(n);
    d.push(0.0);
    for k in 1..n - 1 {
        d.push((xs[k + 1] - 2.0 * xs[k] + xs[k - 1]) * r2);
    }
    d[0] = d[1];
    d.push(d[n - 2]);
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn split_channels_sum_to_input(
            f in prop::sample::select(crate::PROTOCOL_FREQUENCIES_HZ.to_vec()),
            xs in prop::collection::vec(-1e-3f64..1e-3, 10..400),
        ) {
            let s = SplitFilter::new(f, 30_000.0).unwrap();
            let (lo, hi) = s.split(&xs);
            for ((x, l), h) in xs.iter().zip(&lo).zip(&hi) {
                prop_assert!((l + h - x).abs() <= 1e-3 * x.abs().max(1e-9));
            }
        }
    }

    #[test]
    fn low_path_rejects_the_drive_and_keeps_dc() {
        let rate = 30_000.0;
        for &f in &crate::PROTOCOL_FREQUENCIES_HZ {
            let s = SplitFilter::new(f, rate).unwrap();
            let c = Cascade::new(s.sections());
            assert!(c.response(f, rate).norm() < 1e-6, "{f}");
            assert_relative_eq!(c.response(1e-6, rate).norm(), 1.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn dc_delay_matches_butterworth_prototype() {
        // 4th-order Butterworth: sum of 1/sin of the pole angles over ωc,
        // plus a small notch contribution
        let s = SplitFilter::new(400.0, 30_000.0).unwrap();
        let proto = 2.6131259 / (2.0 * PI * SPLIT_CUTOFF_HZ);
        assert!((s.dc_delay_s() - proto).abs() < 1e-3, "{}", s.dc_delay_s());
    }

    #[test]
    fn central_difference_of_a_ramp_is_exact() {
        let xs: Vec<f64> = (0..10).map(|k| 3.0 * k as f64 / 100.0).collect();
        let d = central_difference(&xs, 100.0).unwrap();
        for v in d {
            assert_relative_eq!(v, 3.0, epsilon = 1e-12);
        }
        assert!(central_difference(&[1.0], 1.0).is_err());
    }

    #[test]
    fn second_difference_of_a_parabola_is_exact() {
        let xs: Vec<f64> = (0..10).map(|k| 1.5 * (k as f64 / 100.0).powi(2)).collect();
        let d = second_difference(&xs, 100.0).unwrap();
        for v in d {
            assert_relative_eq!(v, 3.0, epsilon = 1e-9);
        }
        assert!(second_difference(&[1.0, 2.0], 1.0).is_err());
    }

    #[test]
    fn bandpass_passes_center_unchanged_after_settling() {
        let rate = 30_000.0;
        let f = 111.0;
        let xs: Vec<f64> = (0..60_000).map(|k| (2.0 * PI * f * k as f64 / rate).sin()).collect();
        let y = bandpass_record(&xs, f, rate).unwrap();
        let n0 = bandpass_settle_samples(f, rate);
        let err = xs[n0..].iter().zip(&y[n0..]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-2, "{err}");
    }
}
