//! Modeled mount forces and the finger reaction that balances them.

use super::filters::{central_difference, second_difference};
use crate::error::{Error, Result};
use crate::plant::{PlateParams, Suspension};

/// Mount displacements with their first and second derivatives.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MountMotion {
    pub x1: Vec<f64>,
    pub x2: Vec<f64>,
    pub v1: Vec<f64>,
    pub v2: Vec<f64>,
    pub a1: Vec<f64>,
    pub a2: Vec<f64>,
}

impl MountMotion {
    /// Symmetric first and second differences.
    pub fn from_displacements(x1: Vec<f64>, x2: Vec<f64>, rate_hz: f64) -> Result<Self> {
        if x1.len() != x2.len() {
            return Err(Error::param("x2", "length differs from x1"));
        }
        let v1 = central_difference(&x1, rate_hz)?;
        let v2 = central_difference(&x2, rate_hz)?;
        let a1 = second_difference(&x1, rate_hz)?;
        let a2 = second_difference(&x2, rate_hz)?;
        Ok(MountMotion { x1, x2, v1, v2, a1, a2 })
    }

    /// Undo the gain of the symmetric differences for content at `f_hz`:
    /// they scale a tone by `sin(ωΔ)/(ωΔ)` and `(sin(ωΔ/2)/(ωΔ/2))²` with
    /// no phase error. Only valid after band-passing at `f_hz`.
    pub fn compensate(&mut self, f_hz: f64, rate_hz: f64) {
        let wd = 2.0 * std::f64::consts::PI * f_hz / rate_hz;
        let gv = wd / wd.sin();
        let ga = (0.5 * wd / (0.5 * wd).sin()).powi(2);
        for v in self.v1.iter_mut().chain(self.v2.iter_mut()) {
            *v *= gv;
        }
        for a in self.a1.iter_mut().chain(self.a2.iter_mut()) {
            *a *= ga;
        }
    }

    pub fn len(&self) -> usize {
        self.x1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x1.is_empty()
    }

    /// Rigid-body velocity at distance `p` from mount 2.
    pub fn velocity_at(&self, k: usize, p: f64, spacing: f64) -> f64 {
        let lam = p / spacing;
        lam * self.v1[k] + (1.0 - lam) * self.v2[k]
    }
}

/// Inertial share of each mount: `(m/2) z̈ ∓ (I/d) θ̈` with `z` the midpoint
/// and `θ = (x2 - x1)/d`.
pub fn inertial_shares(a1: f64, a2: f64, plate: &PlateParams) -> (f64, f64) {
    let d = plate.spacing;
    let z_acc = 0.5 * (a1 + a2);
    let th_acc = (a2 - a1) / d;
    let half = 0.5 * plate.mass * z_acc;
    let rot = plate.inertia / d * th_acc;
    (half - rot, half + rot)
}

/// Per-mount force the coil must supply to move the plate as observed:
/// suspension plus inertial share.
pub fn device_forces(
    motion: &MountMotion,
    times: &[f64],
    plate: &PlateParams,
    suspension: impl Fn(f64) -> Suspension,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if times.len() != motion.len() {
        return Err(Error::param("times", "length differs from motion"));
    }
    let mut f1 = Vec::with_capacity(times.len());
    let mut f2 = Vec::with_capacity(times.len());
    for (k, &t) in times.iter().enumerate() {
        let s = suspension(t);
        let (m1, m2) = inertial_shares(motion.a1[k], motion.a2[k], plate);
        f1.push(s.k1 * motion.x1[k] + s.b1 * motion.v1[k] + m1);
        f2.push(s.k2 * motion.x2[k] + s.b2 * motion.v2[k] + m2);
    }
    Ok((f1, f2))
}

/// Force of the plate on the finger: coil drive minus what the plate itself
/// absorbs.
pub fn finger_force(i1: &[f64], i2: &[f64], f1: &[f64], f2: &[f64], force_constant: f64) -> Result<Vec<f64>> {
    let n = i1.len();
    if i2.len() != n || f1.len() != n || f2.len() != n {
        return Err(Error::param("finger_force", "inputs must have equal length"));
    }
    Ok((0..n)
        .map(|k| force_constant * (i1[k] + i2[k]) - f1[k] - f2[k])
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use num_complex::Complex64;
    use std::f64::consts::PI;

    #[test]
    fn zero_motion_gives_zero_force() {
        let p = PlateParams::default();
        let m = MountMotion::from_displacements(vec![0.0; 8], vec![0.0; 8], 1000.0).unwrap();
        let t: Vec<f64> = (0..8).map(|k| k as f64 / 1000.0).collect();
        let (f1, f2) = device_forces(&m, &t, &p, |t| p.suspension_at(t)).unwrap();
        assert!(f1.iter().chain(&f2).all(|&f| f == 0.0));
    }

    #[test]
    fn in_phase_motion_matches_phasor_form() {
        // x1 = x2 = X sin ωt: F1 = k1 x + b1 v - (m/2) ω² x, no rotation
        let p = PlateParams::default();
        let rate = 30_000.0;
        let (f, x0) = (111.0, 1e-5);
        let w = 2.0 * PI * f;
        let t: Vec<f64> = (0..3000).map(|k| k as f64 / rate).collect();
        let x: Vec<f64> = t.iter().map(|&t| x0 * (w * t).sin()).collect();
        let m = MountMotion::from_displacements(x.clone(), x.clone(), rate).unwrap();
        let (f1, f2) = device_forces(&m, &t, &p, |t| p.suspension_at(t)).unwrap();
        let phasor = Complex64::new(p.k1 - 0.5 * p.mass * w * w, p.b1 * w) * x0;
        // uncompensated differences shrink the derivatives slightly
        let tol = 2e-3 * phasor.norm();
        for k in 2..t.len() - 2 {
            let want = (phasor * Complex64::new(0.0, -1.0) * Complex64::from_polar(1.0, w * t[k])).re;
            assert!((f1[k] - want).abs() < tol, "k {k}: {} vs {want}", f1[k]);
        }
        let g = Complex64::new(p.k2 - 0.5 * p.mass * w * w, p.b2 * w) * x0;
        assert_relative_eq!(f2[2..f2.len() - 2].iter().map(|v| v.abs()).fold(0.0, f64::max), g.norm(), max_relative = 3e-3);
    }

    #[test]
    fn compensation_restores_tone_derivatives() {
        let rate = 30_000.0;
        let (f, x0) = (400.0, 1e-5);
        let w = 2.0 * PI * f;
        let x: Vec<f64> = (0..600).map(|k| x0 * (w * k as f64 / rate).sin()).collect();
        let mut m = MountMotion::from_displacements(x.clone(), x, rate).unwrap();
        m.compensate(f, rate);
        for k in 4..596 {
            let t = k as f64 / rate;
            assert!((m.v1[k] - x0 * w * (w * t).cos()).abs() < 1e-9 * x0 * w);
            assert!((m.a1[k] + x0 * w * w * (w * t).sin()).abs() < 1e-9 * x0 * w * w);
        }
    }

    #[test]
    fn tilt_moves_force_between_mounts() {
        let p = PlateParams::default();
        let (m1, m2) = inertial_shares(1.0, -1.0, &p);
        assert_relative_eq!(m1, p.inertia / p.spacing * 2.0 / p.spacing, epsilon = 1e-12);
        assert_relative_eq!(m1 + m2, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn finger_force_balances_drive() {
        let f = finger_force(&[1.0], &[0.5], &[2.0], &[3.0], 7.4).unwrap();
        assert_relative_eq!(f[0], 7.4 * 1.5 - 5.0);
        assert!(finger_force(&[1.0], &[], &[], &[], 7.4).is_err());
    }
}
