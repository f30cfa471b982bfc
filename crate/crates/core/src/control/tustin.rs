use super::tf::ContinuousTF;
use crate::dsp::BiquadCoeffs;
use crate::error::{Error, Result};

/// Bilinear map `s -> (2/Ts)(z-1)/(z+1)` without prewarping.
pub fn discretize_tustin(c: &ContinuousTF, rate_hz: f64) -> Result<BiquadCoeffs> {
    if !(rate_hz.is_finite() && rate_hz > 0.0) {
        return Err(Error::param("rate_hz", format!("must be positive, got {rate_hz}")));
    }
    if !c.is_proper() {
        return Err(Error::Synthesis("cannot discretize an improper transfer function".into()));
    }
    if c.order() > 2 {
        return Err(Error::Synthesis(format!(
            "biquad realization needs order <= 2, got {}",
            c.order()
        )));
    }
    let pad = |p: &[f64]| -> [f64; 3] {
        let mut out = [0.0; 3];
        out[3 - p.len()..].copy_from_slice(p);
        out
    };
    let k = 2.0 * rate_hz;
    // p2 s^2 + p1 s + p0 -> coefficients of z^2, z, 1 after clearing (z+1)^2
    let map = |[p2, p1, p0]: [f64; 3]| {
        let q = p2 * k * k;
        [q + p1 * k + p0, 2.0 * (p0 - q), q - p1 * k + p0]
    };
    let n = map(pad(&c.num));
    let d = map(pad(&c.den));
    if d[0] == 0.0 {
        return Err(Error::Synthesis("bilinear map produced a degenerate denominator".into()));
    }
    Ok(BiquadCoeffs {
        b0: n[0] / d[0],
        b1: n[1] / d[0],
        b2: n[2] / d[0],
        a1: d[1] / d[0],
        a2: d[2] / d[0],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::synthesis::{log_grid, synthesize, SynthesisConfig};
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn constant_maps_to_flat_response() {
        let b = discretize_tustin(&ContinuousTF::constant(3.5), 5000.0).unwrap();
        for f in [0.0, 10.0, 1000.0, 2400.0] {
            assert_relative_eq!(b.response(f, 5000.0).re, 3.5, epsilon = 1e-12);
            assert!(b.response(f, 5000.0).im.abs() < 1e-12);
        }
    }

    #[test]
    fn first_order_pole_maps_by_bilinear_formula() {
        let a = 40.0;
        let rate = 5000.0;
        let c = ContinuousTF::new(vec![a], vec![1.0, a]).unwrap();
        let b = discretize_tustin(&c, rate).unwrap();
        let expected = (2.0 * rate - a) / (2.0 * rate + a);
        let poles = b.poles();
        assert!(poles.iter().any(|p| (p.re - expected).abs() < 1e-12 && p.im.abs() < 1e-12));
        assert_relative_eq!(b.dc_gain(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn discretized_controller_tracks_continuous_below_50hz() {
        let d = synthesize(&SynthesisConfig::default()).unwrap();
        for f in log_grid(0.1, 50.0, 60) {
            let cont = d.reduced.response(f).norm();
            let disc = d.discrete.response(f, 5000.0).norm();
            assert!((disc / cont - 1.0).abs() < 0.01, "f={f}");
        }
        // the integrator lands on z = 1
        assert!(d.discrete.poles().iter().any(|p| (p.re - 1.0).abs() < 1e-12));
    }

    #[test]
    fn rejects_improper_and_high_order() {
        let improper = ContinuousTF::new(vec![1.0, 0.0], vec![1.0]).unwrap();
        assert!(discretize_tustin(&improper, 5000.0).is_err());
        let third = ContinuousTF::new(vec![1.0], vec![1.0, 1.0, 1.0, 1.0]).unwrap();
        assert!(discretize_tustin(&third, 5000.0).is_err());
    }

    #[test]
    fn dc_gain_preserved_for_proper_biquad() {
        let w = 2.0 * PI * 7.0;
        let c = ContinuousTF::new(vec![0.2, 3.0, 2.0 * w * w], vec![1.0, 1.1 * w, w * w]).unwrap();
        let b = discretize_tustin(&c, 5000.0).unwrap();
        assert_relative_eq!(b.dc_gain(), 2.0, epsilon = 1e-9);
    }
}
