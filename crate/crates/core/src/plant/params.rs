use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Linear-in-time drift of the suspension, per second.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Drift {
    pub k1: f64,
    pub k2: f64,
    pub b1: f64,
    pub b2: f64,
}

/// Rigid plate on two voice-coil mounts a distance `spacing` apart; mount 1
/// at position `spacing`, mount 2 at the origin.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlateParams {
    /// kg
    pub mass: f64,
    /// kg·m² about the center of mass
    pub inertia: f64,
    /// N/A per voice coil
    pub force_constant: f64,
    /// N/m
    pub k1: f64,
    pub k2: f64,
    /// N·s/m
    pub b1: f64,
    pub b2: f64,
    /// m
    pub spacing: f64,
    pub drift: Drift,
}

impl Default for PlateParams {
    fn default() -> Self {
        PlateParams {
            mass: 0.032,
            inertia: 4e-5,
            force_constant: 7.4,
            k1: 22_400.0,
            k2: 22_900.0,
            b1: 0.85,
            b2: 0.85,
            spacing: 0.055,
            drift: Drift::default(),
        }
    }
}

/// Suspension values at one instant.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Suspension {
    pub k1: f64,
    pub k2: f64,
    pub b1: f64,
    pub b2: f64,
}

impl PlateParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("mass", self.mass),
            ("inertia", self.inertia),
            ("force_constant", self.force_constant),
            ("k1", self.k1),
            ("k2", self.k2),
            ("b1", self.b1),
            ("b2", self.b2),
            ("spacing", self.spacing),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::param(name, format!("must be positive and finite, got {v}")));
            }
        }
        let d = self.drift;
        if ![d.k1, d.k2, d.b1, d.b2].iter().all(|v| v.is_finite()) {
            return Err(Error::param("drift", "must be finite"));
        }
        Ok(())
    }

    pub fn suspension_at(&self, t: f64) -> Suspension {
        Suspension {
            k1: self.k1 + self.drift.k1 * t,
            k2: self.k2 + self.drift.k2 * t,
            b1: self.b1 + self.drift.b1 * t,
            b2: self.b2 + self.drift.b2 * t,
        }
    }

    /// Bounce resonance from total stiffness and mass, Hz.
    pub fn bounce_resonance_hz(&self) -> f64 {
        ((self.k1 + self.k2) / self.mass).sqrt() / (2.0 * PI)
    }

    /// Lever ratio of mount 1 for a contact at `p` (distance from mount 2).
    pub fn lever(&self, p: f64) -> f64 {
        p / self.spacing
    }

    /// Generalized mass matrix in end coordinates `(x1, x2)`.
    pub fn mass_matrix(&self) -> [[f64; 2]; 2] {
        let a = self.mass / 4.0;
        let r = self.inertia / (self.spacing * self.spacing);
        [[a + r, a - r], [a - r, a + r]]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn bounce_resonance_from_defaults() {
        // sqrt(45300 / 0.032) / 2π
        assert_relative_eq!(PlateParams::default().bounce_resonance_hz(), 189.36, epsilon = 0.01);
    }

    #[test]
    fn drift_is_exactly_linear() {
        let mut p = PlateParams::default();
        p.drift.k1 = 5.0;
        p.drift.b2 = -0.001;
        let s = p.suspension_at(3.0);
        assert_eq!(s.k1, 22_400.0 + 15.0);
        assert_eq!(s.b2, 0.85 - 0.003);
        assert_eq!(s.k2, 22_900.0);
    }

    #[test]
    fn mass_matrix_reproduces_translation_and_rotation() {
        let p = PlateParams::default();
        let m = p.mass_matrix();
        // pure bounce (1, 1): kinetic energy m v^2 / 2
        let bounce = m[0][0] + m[0][1] + m[1][0] + m[1][1];
        assert_relative_eq!(bounce, p.mass, epsilon = 1e-15);
        // pure rocking (1, -1): θ' = -2 / d
        let rock = m[0][0] - m[0][1] - m[1][0] + m[1][1];
        assert_relative_eq!(rock, p.inertia * 4.0 / (p.spacing * p.spacing), epsilon = 1e-12);
    }

    #[test]
    fn rejects_nonpositive() {
        let p = PlateParams { k1: 0.0, ..Default::default() };
        assert!(p.validate().is_err());
    }
}
