//! Linear frequency response of the unloaded plate.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::params::PlateParams;
use crate::control::{FrequencyResponseTable, GainSchedule};
use crate::error::Result;

/// `H[r][c]`: displacement of mount `r` per ampere in coil `c`.
pub fn mount_response(params: &PlateParams, f_hz: f64) -> [[Complex64; 2]; 2] {
    let w = 2.0 * PI * f_hz;
    let m = params.mass_matrix();
    let k = [params.k1, params.k2];
    let b = [params.b1, params.b2];
    let mut a = [[Complex64::new(0.0, 0.0); 2]; 2];
    for r in 0..2 {
        for c in 0..2 {
            a[r][c] = Complex64::new(-w * w * m[r][c], 0.0);
        }
        a[r][r] += Complex64::new(k[r], w * b[r]);
    }
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    let kf = params.force_constant;
    [
        [a[1][1] * kf / det, -a[0][1] * kf / det],
        [-a[1][0] * kf / det, a[0][0] * kf / det],
    ]
}

/// Mean end displacement per ampere when both coils carry the same current.
pub fn symmetric_gain(params: &PlateParams, f_hz: f64) -> Complex64 {
    let h = mount_response(params, f_hz);
    0.5 * (h[0][0] + h[0][1] + h[1][0] + h[1][1])
}

/// Change of the mount-2 minus mount-1 displacement phase per unit phase
/// advance of coil 2, for a symmetric drive.
pub fn phase_sensitivity(params: &PlateParams, f_hz: f64) -> f64 {
    let h = mount_response(params, f_hz);
    let x1 = h[0][0] + h[0][1];
    let x2 = h[1][0] + h[1][1];
    (h[1][1] / x2).re - (h[0][1] / x1).re
}

/// The control frequency grid: every integer hertz from 20 to 400.
pub fn control_grid() -> Vec<f64> {
    (20..=400).map(f64::from).collect()
}

pub fn unloaded_table(params: &PlateParams, freqs: &[f64]) -> Result<FrequencyResponseTable> {
    FrequencyResponseTable::from_fn(freqs, |f| symmetric_gain(params, f))
}

pub fn phase_sensitivity_schedule(params: &PlateParams, freqs: &[f64]) -> Result<GainSchedule> {
    GainSchedule::new(freqs.iter().map(|&f| (f, phase_sensitivity(params, f))).collect())
}
