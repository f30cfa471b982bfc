//! Second-order IIR sections and the small set of designs used by the loop
//! and the offline estimators.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Normalized biquad `H(z) = (b0 + b1 z^-1 + b2 z^-2) / (1 + a1 z^-1 + a2 z^-2)`.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct BiquadCoeffs {
    pub b0: f64,
    pub b1: f64,
    pub b2: f64,
    pub a1: f64,
    pub a2: f64,
}

impl BiquadCoeffs {
    pub const IDENTITY: BiquadCoeffs = BiquadCoeffs {
        b0: 1.0,
        b1: 0.0,
        b2: 0.0,
        a1: 0.0,
        a2: 0.0,
    };

    pub fn poles(&self) -> [Complex64; 2] {
        // z^2 + a1 z + a2 = 0
        let disc = Complex64::new(self.a1 * self.a1 - 4.0 * self.a2, 0.0).sqrt();
        let a1 = Complex64::new(self.a1, 0.0);
        [(-a1 + disc) * 0.5, (-a1 - disc) * 0.5]
    }

    pub fn max_pole_magnitude(&self) -> f64 {
        let [p, q] = self.poles();
        p.norm().max(q.norm())
    }

    /// All poles strictly inside the unit circle.
    pub fn is_stable(&self) -> bool {
        self.max_pole_magnitude() < 1.0 - 1e-12
    }

    /// Poles inside or on the unit circle (an integrator is allowed).
    pub fn is_marginally_stable(&self) -> bool {
        self.max_pole_magnitude() <= 1.0 + 1e-9
    }

    pub fn response(&self, f_hz: f64, rate_hz: f64) -> Complex64 {
        let zi = Complex64::from_polar(1.0, -2.0 * PI * f_hz / rate_hz);
        let zi2 = zi * zi;
        (self.b0 + self.b1 * zi + self.b2 * zi2) / (1.0 + self.a1 * zi + self.a2 * zi2)
    }

    pub fn dc_gain(&self) -> f64 {
        (self.b0 + self.b1 + self.b2) / (1.0 + self.a1 + self.a2)
    }
}

fn check_corner(f_hz: f64, rate_hz: f64, name: &'static str) -> Result<()> {
    if !(rate_hz.is_finite() && rate_hz > 0.0) {
        return Err(Error::param("rate_hz", format!("must be positive, got {rate_hz}")));
    }
    if !(f_hz.is_finite() && f_hz > 0.0 && f_hz < rate_hz / 2.0) {
        return Err(Error::param(
            name,
            format!("{f_hz} Hz must lie in (0, {}) Hz", rate_hz / 2.0),
        ));
    }
    Ok(())
}

/// Second-order low-pass with quality factor `q`, bilinear with prewarping at
/// the corner.
pub fn lowpass_q(cutoff_hz: f64, q: f64, rate_hz: f64) -> Result<BiquadCoeffs> {
    check_corner(cutoff_hz, rate_hz, "cutoff_hz")?;
    if !(q.is_finite() && q > 0.0) {
        return Err(Error::param("q", format!("must be positive, got {q}")));
    }
    let k = (PI * cutoff_hz / rate_hz).tan();
    let k2 = k * k;
    let norm = 1.0 + k / q + k2;
    let b0 = k2 / norm;
    Ok(BiquadCoeffs {
        b0,
        b1: 2.0 * b0,
        b2: b0,
        a1: 2.0 * (k2 - 1.0) / norm,
        a2: (1.0 - k / q + k2) / norm,
    })
}

/// Order-2 Butterworth low-pass used by the lock-in.
pub fn design_lowpass_iir(cutoff_hz: f64, rate_hz: f64) -> Result<BiquadCoeffs> {
    let c = lowpass_q(cutoff_hz, FRAC_1_SQRT_2, rate_hz)?;
    if !c.is_stable() {
        return Err(Error::UnstableFilter {
            pole_magnitude: c.max_pole_magnitude(),
        });
    }
    Ok(c)
}

/// Even-order Butterworth low-pass as a cascade of biquads.
pub fn butterworth_lowpass(order: usize, cutoff_hz: f64, rate_hz: f64) -> Result<Vec<BiquadCoeffs>> {
    if order == 0 || order % 2 != 0 {
        return Err(Error::param("order", format!("must be even and positive, got {order}")));
    }
    (0..order / 2)
        .map(|k| {
            let theta = PI * (2 * k + 1) as f64 / (2 * order) as f64;
            lowpass_q(cutoff_hz, 1.0 / (2.0 * theta.sin()), rate_hz)
        })
        .collect()
}

/// Constant-peak band-pass (unity gain at the center).
pub fn bandpass(center_hz: f64, q: f64, rate_hz: f64) -> Result<BiquadCoeffs> {
    check_corner(center_hz, rate_hz, "center_hz")?;
    let w0 = 2.0 * PI * center_hz / rate_hz;
    let alpha = w0.sin() / (2.0 * q);
    let norm = 1.0 + alpha;
    Ok(BiquadCoeffs {
        b0: alpha / norm,
        b1: 0.0,
        b2: -alpha / norm,
        a1: -2.0 * w0.cos() / norm,
        a2: (1.0 - alpha) / norm,
    })
}

pub fn notch(center_hz: f64, q: f64, rate_hz: f64) -> Result<BiquadCoeffs> {
    check_corner(center_hz, rate_hz, "center_hz")?;
    let w0 = 2.0 * PI * center_hz / rate_hz;
    let alpha = w0.sin() / (2.0 * q);
    let norm = 1.0 + alpha;
    Ok(BiquadCoeffs {
        b0: 1.0 / norm,
        b1: -2.0 * w0.cos() / norm,
        b2: 1.0 / norm,
        a1: -2.0 * w0.cos() / norm,
        a2: (1.0 - alpha) / norm,
    })
}

/// Direct-form-I biquad state. Starts at rest.
#[derive(Clone, Debug)]
pub struct Biquad {
    coeffs: BiquadCoeffs,
    x1: f64,
    x2: f64,
    y1: f64,
    y2: f64,
}

impl Biquad {
    pub fn new(coeffs: BiquadCoeffs) -> Self {
        Biquad {
            coeffs,
            x1: 0.0,
            x2: 0.0,
            y1: 0.0,
            y2: 0.0,
        }
    }

    pub fn coeffs(&self) -> &BiquadCoeffs {
        &self.coeffs
    }

    /// Output for input `x` without advancing the state.
    pub fn peek(&self, x: f64) -> f64 {
        let c = &self.coeffs;
        c.b0 * x + c.b1 * self.x1 + c.b2 * self.x2 - c.a1 * self.y1 - c.a2 * self.y2
    }

    /// Advance the state with a given input/output pair.
    pub fn commit(&mut self, x: f64, y: f64) {
        self.x2 = self.x1;
        self.x1 = x;
        self.y2 = self.y1;
        self.y1 = y;
    }

    pub fn process(&mut self, x: f64) -> f64 {
        let y = self.peek(x);
        self.commit(x, y);
        y
    }

    pub fn reset(&mut self) {
        self.x1 = 0.0;
        self.x2 = 0.0;
        self.y1 = 0.0;
        self.y2 = 0.0;
    }
}

#[derive(Clone, Debug)]
pub struct Cascade {
    stages: Vec<Biquad>,
}

impl Cascade {
    pub fn new(coeffs: &[BiquadCoeffs]) -> Self {
        Cascade {
            stages: coeffs.iter().copied().map(Biquad::new).collect(),
        }
    }

    pub fn process(&mut self, x: f64) -> f64 {
        self.stages.iter_mut().fold(x, |acc, s| s.process(acc))
    }

    pub fn filter(&mut self, xs: &[f64]) -> Vec<f64> {
        xs.iter().map(|&x| self.process(x)).collect()
    }

    pub fn response(&self, f_hz: f64, rate_hz: f64) -> Complex64 {
        self.stages
            .iter()
            .map(|s| s.coeffs.response(f_hz, rate_hz))
            .product()
    }
}

/// Filter a whole record through fresh copies of the given sections.
pub fn filter_record(coeffs: &[BiquadCoeffs], xs: &[f64]) -> Vec<f64> {
    Cascade::new(coeffs).filter(xs)
}
