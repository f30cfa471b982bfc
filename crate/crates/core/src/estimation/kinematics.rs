//! Normal load and contact position from the slow part of the mount
//! deflections.

use crate::error::{Error, Result};
use crate::plant::Suspension;

/// Load and position at one sample. `position` is `None` where it is
/// indeterminate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LoadKinematics {
    pub load: f64,
    pub position: Option<f64>,
}

pub fn estimate_normal_load(x1_l: f64, x2_l: f64, s: &Suspension) -> f64 {
    -(s.k1 * x1_l + s.k2 * x2_l)
}

/// Contact position measured from mount 2. Defined only when both mounts are
/// pushed down and the mount-1 force exceeds `floor_n`.
pub fn estimate_position(x1_l: f64, x2_l: f64, s: &Suspension, spacing: f64, floor_n: f64) -> Result<f64> {
    let f1 = -s.k1 * x1_l;
    let f2 = -s.k2 * x2_l;
    if !(f1 > floor_n && f2 > 0.0) {
        return Err(Error::IndeterminatePosition);
    }
    Ok(spacing / (f2 / f1 + 1.0))
}

/// Floor on the mount force below which position is refused: three standard
/// deviations of the low-passed deflection noise, times the stiffness.
pub fn position_floor(k: f64, sigma_m: f64, rate_hz: f64, cutoff_hz: f64) -> f64 {
    // noise-equivalent bandwidth of a 4th-order Butterworth is about 1.026 fc
    let bw = 1.026 * cutoff_hz;
    3.0 * k * sigma_m * (2.0 * bw / rate_hz).sqrt()
}

pub fn kinematics(x1_l: f64, x2_l: f64, s: &Suspension, spacing: f64, floor_n: f64) -> LoadKinematics {
    LoadKinematics {
        load: estimate_normal_load(x1_l, x2_l, s),
        position: estimate_position(x1_l, x2_l, s, spacing, floor_n).ok(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plant::PlateParams;
    use approx::assert_relative_eq;

    fn susp() -> Suspension {
        PlateParams::default().suspension_at(0.0)
    }

    #[test]
    fn load_formula() {
        assert_eq!(estimate_normal_load(0.0, 0.0, &susp()), 0.0);
        assert_relative_eq!(estimate_normal_load(-5e-6, -5e-6, &susp()), 0.2265, epsilon = 1e-12);
    }

    #[test]
    fn symmetric_load_sits_midway() {
        let s = susp();
        let p = estimate_position(-1e-5 / s.k1 * 1e4, -1e-5 / s.k2 * 1e4, &s, 0.055, 1e-3).unwrap();
        assert_relative_eq!(p, 0.0275, epsilon = 1e-12);
    }

    #[test]
    fn load_on_one_mount_goes_to_the_end() {
        let s = susp();
        let p = estimate_position(-2e-5, -1e-15, &s, 0.055, 1e-3).unwrap();
        assert!((p - 0.055).abs() < 1e-9);
    }

    #[test]
    fn light_or_lifting_touch_is_indeterminate() {
        let s = susp();
        assert!(matches!(
            estimate_position(0.0, 0.0, &s, 0.055, 1e-3),
            Err(Error::IndeterminatePosition)
        ));
        assert!(estimate_position(1e-5, -1e-5, &s, 0.055, 1e-3).is_err());
        assert!(estimate_position(-1e-9, -1e-5, &s, 0.055, 1e-3).is_err());
    }

    #[test]
    fn static_split_round_trips() {
        let s = susp();
        let (w, p, d) = (0.8, 0.02, 0.055);
        let lam = p / d;
        let (x1, x2) = (-lam * w / s.k1, -(1.0 - lam) * w / s.k2);
        let k = kinematics(x1, x2, &s, d, 1e-3);
        assert_relative_eq!(k.load, w, epsilon = 1e-12);
        assert_relative_eq!(k.position.unwrap(), p, epsilon = 1e-12);
    }
}
