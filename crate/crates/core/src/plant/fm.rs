use std::f64::consts::PI;

/// Peak of the friction-modulation envelope, mA.
pub const FM_PEAK_MA: f64 = 6.0;

/// Envelope of the friction-modulation current for a grating at `f_hz`, mA.
/// The square root undoes the square-law dependence of friction on current.
pub fn fm_waveform(f_hz: f64, t: f64) -> f64 {
    let u = 0.5 * ((2.0 * PI * f_hz * t).sin() + 1.0);
    FM_PEAK_MA * u.max(0.0).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn envelope_extremes() {
        let f = 47.0;
        assert_relative_eq!(fm_waveform(f, 0.25 / f), 6.0, epsilon = 1e-12);
        assert!(fm_waveform(f, 0.75 / f) < 1e-6);
        assert_relative_eq!(fm_waveform(f, 0.0), 6.0 * 0.5f64.sqrt(), epsilon = 1e-12);
        assert_relative_eq!(fm_waveform(f, 0.0), 4.243, epsilon = 1e-3);
    }

    #[test]
    fn squared_envelope_is_a_raised_sinusoid() {
        for k in 0..50 {
            let t = k as f64 * 1.3e-3;
            let m = fm_waveform(20.0, t);
            assert_relative_eq!(m * m, 18.0 * ((2.0 * PI * 20.0 * t).sin() + 1.0), epsilon = 1e-9);
        }
    }
}
