//! Loop-shaping synthesis: pick a closed-loop target `T`, invert the loop
//! identity `T = C / (1 + L C)` for `C`, then reduce to second order.

use std::f64::consts::{PI, SQRT_2};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::tf::{poly_mul, poly_sub, trim, ContinuousTF};
use super::tustin::discretize_tustin;
use crate::dsp::BiquadCoeffs;
use crate::error::{Error, Result};

/// Magnitude tolerance of the order reduction, dB.
pub const REDUCTION_TOL_DB: f64 = 1.0;
/// Phase tolerance of the order reduction, degrees.
pub const REDUCTION_TOL_DEG: f64 = 10.0;

/// Second-order Butterworth low-pass `w^2 / (s^2 + sqrt(2) w s + w^2)`.
pub fn butterworth2(cutoff_hz: f64) -> Result<ContinuousTF> {
    if !(cutoff_hz.is_finite() && cutoff_hz > 0.0) {
        return Err(Error::param("bandwidth_hz", format!("must be positive, got {cutoff_hz}")));
    }
    let w = 2.0 * PI * cutoff_hz;
    ContinuousTF::new(vec![w * w], vec![1.0, SQRT_2 * w, w * w])
}

pub fn sensitivity_target(bandwidth_hz: f64) -> Result<ContinuousTF> {
    butterworth2(bandwidth_hz)
}

/// Continuous stand-in for the lock-in averager.
pub fn filter_dynamics(cutoff_hz: f64) -> Result<ContinuousTF> {
    butterworth2(cutoff_hz)
}

/// `C = T / (1 - L T)` kept as the uncancelled product
/// `N_T D_L D_T / (D_T (D_L D_T - N_L N_T))`.
pub fn solve_controller(t: &ContinuousTF, l: &ContinuousTF) -> Result<ContinuousTF> {
    let mut inner = poly_sub(&poly_mul(&l.den, &t.den), &poly_mul(&l.num, &t.num));
    let scale = inner.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    if scale == 0.0 {
        return Err(Error::Synthesis("1 - L T is identically zero".into()));
    }
    for c in inner.iter_mut() {
        if c.abs() <= 1e-12 * scale {
            *c = 0.0;
        }
    }
    let inner = trim(&inner);
    let num = poly_mul(&poly_mul(&t.num, &l.den), &t.den);
    let den = poly_mul(&t.den, &inner);
    let c = ContinuousTF::new(num, den)?;
    if !c.is_proper() {
        return Err(Error::Synthesis(format!(
            "controller is improper (numerator degree {} > denominator degree {})",
            c.num.len() - 1,
            c.order()
        )));
    }
    let pole_scale = c.poles().iter().fold(1.0f64, |m, p| m.max(p.norm()));
    if let Some(p) = c.poles().iter().find(|p| p.re > 1e-9 * pole_scale) {
        return Err(Error::Synthesis(format!(
            "controller has a right-half-plane pole at {:.4}{:+.4}j",
            p.re, p.im
        )));
    }
    Ok(c)
}

/// Realized closed loop `C / (1 + L C)`.
pub fn realized_sensitivity(c: &ContinuousTF, l: &ContinuousTF, f_hz: f64) -> Complex64 {
    let cv = c.response(f_hz);
    cv / (1.0 + l.response(f_hz) * cv)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitErrors {
    pub mag_db: f64,
    pub phase_deg: f64,
}

impl FitErrors {
    pub fn within(&self, mag_db: f64, phase_deg: f64) -> bool {
        self.mag_db <= mag_db && self.phase_deg <= phase_deg
    }
}

pub fn log_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..points)
        .map(|k| (a + (b - a) * k as f64 / (points - 1) as f64).exp())
        .collect()
}

/// Worst magnitude/phase mismatch of `a / b` across a log grid.
pub fn response_mismatch(
    a: impl Fn(f64) -> Complex64,
    b: impl Fn(f64) -> Complex64,
    band_hz: (f64, f64),
    points: usize,
) -> FitErrors {
    log_grid(band_hz.0, band_hz.1, points)
        .into_iter()
        .map(|f| {
            let r = a(f) / b(f);
            FitErrors {
                mag_db: (20.0 * r.norm().log10()).abs(),
                phase_deg: r.arg().to_degrees().abs(),
            }
        })
        .fold(FitErrors { mag_db: 0.0, phase_deg: 0.0 }, |m, e| FitErrors {
            mag_db: m.mag_db.max(e.mag_db),
            phase_deg: m.phase_deg.max(e.phase_deg),
        })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Reduction {
    pub tf: ContinuousTF,
    pub errors: FitErrors,
}

const GRID_POINTS: usize = 240;
// 1 dB in natural-log units, and 10 degrees in radians: residuals are scaled
// so both tolerances weigh the same.
const MAG_SCALE: f64 = 0.115_129_254_649_702_28;
const PHASE_SCALE: f64 = PI / 18.0;

#[derive(Clone, Copy)]
enum Shape {
    /// `(b2 s^2 + b1 s + g a) / (s (s + a))`, params `[ln a, b1, b2]`.
    Integrating { gain: f64 },
    /// `(b2 s^2 + b1 s + g a0) / (s^2 + a1 s + a0)`, params `[ln a0, ln a1, b1, b2]`.
    Proper { gain: f64 },
}

impl Shape {
    fn tf(self, p: &[f64]) -> ContinuousTF {
        match self {
            Shape::Integrating { gain } => {
                let a = p[0].exp();
                ContinuousTF {
                    num: vec![p[2], p[1], gain * a],
                    den: vec![1.0, a, 0.0],
                }
            }
            Shape::Proper { gain } => {
                let (a0, a1) = (p[0].exp(), p[1].exp());
                ContinuousTF {
                    num: vec![p[3], p[2], gain * a0],
                    den: vec![1.0, a1, a0],
                }
            }
        }
    }
}

struct Fit<'a> {
    shape: Shape,
    s: &'a [Complex64],
    target: &'a [Complex64],
}

impl Fit<'_> {
    fn residuals(&self, p: &[f64]) -> DVector<f64> {
        let tf = self.shape.tf(p);
        let n = self.s.len();
        let mut r = DVector::zeros(2 * n);
        for (k, (&s, &c)) in self.s.iter().zip(self.target).enumerate() {
            let e = (tf.eval(s) / c).ln();
            r[k] = e.re / MAG_SCALE;
            r[n + k] = e.im / PHASE_SCALE;
        }
        r
    }

    fn cost(&self, p: &[f64]) -> f64 {
        let r = self.residuals(p);
        if r.iter().all(|v| v.is_finite()) {
            r.norm_squared()
        } else {
            f64::INFINITY
        }
    }

    fn jacobian(&self, p: &[f64]) -> DMatrix<f64> {
        let m = 2 * self.s.len();
        let mut j = DMatrix::zeros(m, p.len());
        for i in 0..p.len() {
            let h = 1e-6 * p[i].abs().max(1e-3);
            let mut hi = p.to_vec();
            let mut lo = p.to_vec();
            hi[i] += h;
            lo[i] -= h;
            let d = (self.residuals(&hi) - self.residuals(&lo)) / (2.0 * h);
            j.set_column(i, &d);
        }
        j
    }

    /// Levenberg-Marquardt on the scaled log-ratio residuals.
    fn refine(&self, mut p: Vec<f64>) -> Vec<f64> {
        let mut cost = self.cost(&p);
        let mut mu = 1e-3;
        for _ in 0..300 {
            let r = self.residuals(&p);
            let j = self.jacobian(&p);
            let jtj = j.transpose() * &j;
            let g = j.transpose() * r;
            let mut improved = false;
            for _ in 0..20 {
                let mut a = jtj.clone();
                for i in 0..a.nrows() {
                    a[(i, i)] += mu * jtj[(i, i)].max(1e-12);
                }
                let Some(step) = a.lu().solve(&(-&g)) else {
                    mu *= 10.0;
                    continue;
                };
                let trial: Vec<f64> = p.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
                let c = self.cost(&trial);
                if c < cost {
                    let rel = (cost - c) / cost.max(1e-300);
                    p = trial;
                    cost = c;
                    mu = (mu * 0.3).max(1e-12);
                    improved = rel > 1e-12;
                    break;
                }
                mu *= 10.0;
            }
            if !improved {
                break;
            }
        }
        p
    }
}

/// Least squares for the numerator coefficients `(b1, b2)` with the
/// denominator fixed, minimizing the relative complex error.
fn numerator_for(shape: Shape, den_params: &[f64], s: &[Complex64], target: &[Complex64]) -> Option<(f64, f64)> {
    let mut p = den_params.to_vec();
    p.extend([0.0, 0.0]);
    let base = shape.tf(&p);
    let n = s.len();
    let mut a = DMatrix::zeros(2 * n, 2);
    let mut y = DVector::zeros(2 * n);
    for (k, (&s, &c)) in s.iter().zip(target).enumerate() {
        let d = super::tf::poly_eval(&base.den, s) * c;
        let c1 = s / d;
        let c2 = s * s / d;
        let c0 = base.num[2] / d;
        let rhs = Complex64::new(1.0, 0.0) - c0;
        a[(k, 0)] = c1.re;
        a[(k, 1)] = c2.re;
        a[(n + k, 0)] = c1.im;
        a[(n + k, 1)] = c2.im;
        y[k] = rhs.re;
        y[n + k] = rhs.im;
    }
    let sol = a.svd(true, true).solve(&y, 1e-14).ok()?;
    Some((sol[0], sol[1]))
}

/// Second-order approximation fitted on `fit_band_hz`, with the
/// low-frequency gain (DC value or integrator residue) held exactly.
pub fn reduce_order_report(c6: &ContinuousTF, fit_band_hz: (f64, f64)) -> Result<Reduction> {
    let (lo, hi) = fit_band_hz;
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::param("fit_band", format!("invalid band ({lo}, {hi})")));
    }
    let check = |tf: &ContinuousTF| response_mismatch(|f| tf.response(f), |f| c6.response(f), fit_band_hz, GRID_POINTS);
    if c6.order() <= 2 {
        let tf = c6.normalized();
        let errors = check(&tf);
        return Ok(Reduction { tf, errors });
    }
    let integrators = c6.integrators();
    if integrators > 1 {
        return Err(Error::Synthesis(format!("{integrators} poles at the origin")));
    }
    let scale = c6.poles().iter().fold(1.0f64, |m, p| m.max(p.norm()));
    if c6.poles().iter().any(|p| p.re > 1e-9 * scale) {
        return Err(Error::Synthesis("cannot reduce an unstable controller".into()));
    }
    let gain = c6.dc_gain();
    let shape = if integrators == 1 {
        Shape::Integrating { gain }
    } else {
        Shape::Proper { gain }
    };
    let freqs = log_grid(lo, hi, GRID_POINTS);
    let s: Vec<Complex64> = freqs.iter().map(|f| Complex64::new(0.0, 2.0 * PI * f)).collect();
    let target: Vec<Complex64> = s.iter().map(|&s| c6.eval(s)).collect();
    let fit = Fit { shape, s: &s, target: &target };

    // coarse search over denominator corners, numerator by linear LS
    let corners = log_grid(2.0 * PI * lo, 2.0 * PI * hi * 50.0, 36);
    let mut starts: Vec<Vec<f64>> = Vec::new();
    match shape {
        Shape::Integrating { .. } => {
            for &a in &corners {
                starts.push(vec![a.ln()]);
            }
        }
        Shape::Proper { .. } => {
            for &w in &corners {
                for zeta in [0.3, 0.7, 1.5, 4.0] {
                    starts.push(vec![(w * w).ln(), (2.0 * zeta * w).ln()]);
                }
            }
        }
    }
    let mut best: Option<(f64, Vec<f64>)> = None;
    for den in starts {
        let Some((b1, b2)) = numerator_for(shape, &den, &s, &target) else {
            continue;
        };
        let mut p = den;
        p.extend([b1, b2]);
        let c = fit.cost(&p);
        if c.is_finite() && best.as_ref().is_none_or(|(bc, _)| c < *bc) {
            best = Some((c, p));
        }
    }
    let (_, p0) = best.ok_or_else(|| Error::Synthesis("no finite starting point for reduction".into()))?;
    let p = fit.refine(p0);
    let tf = shape.tf(&p);
    let errors = check(&tf);
    if !errors.within(REDUCTION_TOL_DB, REDUCTION_TOL_DEG) {
        return Err(Error::ReductionTolerance {
            mag_db: errors.mag_db,
            phase_deg: errors.phase_deg,
            best: Box::new(tf),
        });
    }
    Ok(Reduction { tf, errors })
}

pub fn reduce_order(c6: &ContinuousTF, fit_band_hz: (f64, f64)) -> Result<ContinuousTF> {
    reduce_order_report(c6, fit_band_hz).map(|r| r.tf)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthesisConfig {
    pub bandwidth_hz: f64,
    pub filter_cutoff_hz: f64,
    pub control_rate_hz: f64,
    pub fit_band_hz: (f64, f64),
}

impl Default for SynthesisConfig {
    fn default() -> Self {
        SynthesisConfig {
            bandwidth_hz: 5.0,
            filter_cutoff_hz: 10.0,
            control_rate_hz: 5000.0,
            fit_band_hz: (0.1, 20.0),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ControllerDesign {
    pub config: SynthesisConfig,
    pub target: ContinuousTF,
    pub filter: ContinuousTF,
    pub full: ContinuousTF,
    pub reduced: ContinuousTF,
    pub discrete: BiquadCoeffs,
    /// Reduced vs full controller.
    pub reduction_error: FitErrors,
    /// Realized `C2 / (1 + L C2)` vs the target.
    pub loop_error: FitErrors,
    /// -3 dB point of the realized closed loop.
    pub closed_loop_bandwidth_hz: f64,
}

/// First frequency where `|H|` falls to `1/sqrt(2)` of its low-frequency value.
pub fn minus_3db_frequency(h: impl Fn(f64) -> Complex64, lo: f64, hi: f64) -> Option<f64> {
    let ref_mag = h(lo).norm();
    let level = ref_mag / SQRT_2;
    let grid = log_grid(lo, hi, 2000);
    let mut prev = grid[0];
    for &f in &grid[1..] {
        if h(f).norm() < level {
            let (mut a, mut b) = (prev, f);
            for _ in 0..60 {
                let m = (a * b).sqrt();
                if h(m).norm() < level {
                    b = m;
                } else {
                    a = m;
                }
            }
            return Some((a * b).sqrt());
        }
        prev = f;
    }
    None
}

pub fn synthesize(config: &SynthesisConfig) -> Result<ControllerDesign> {
    let target = sensitivity_target(config.bandwidth_hz)?;
    let filter = filter_dynamics(config.filter_cutoff_hz)?;
    let full = solve_controller(&target, &filter)?;
    let reduction = reduce_order_report(&full, config.fit_band_hz)?;
    let reduced = reduction.tf;
    let discrete = discretize_tustin(&reduced, config.control_rate_hz)?;
    let loop_error = response_mismatch(
        |f| realized_sensitivity(&reduced, &filter, f),
        |f| target.response(f),
        config.fit_band_hz,
        GRID_POINTS,
    );
    let closed_loop_bandwidth_hz = minus_3db_frequency(
        |f| realized_sensitivity(&reduced, &filter, f),
        0.01,
        config.control_rate_hz / 4.0,
    )
    .ok_or_else(|| Error::Synthesis("closed loop has no -3 dB point".into()))?;
    Ok(ControllerDesign {
        config: config.clone(),
        target,
        filter,
        full,
        reduced,
        discrete,
        reduction_error: reduction.errors,
        loop_error,
        closed_loop_bandwidth_hz,
    })
}
