//! Frequency responses obtained by solving the finger's equations of motion
//! directly, independent of the closed-form rational expressions.

use std::f64::consts::PI;

use nalgebra::{Matrix2, Vector2};
use num_complex::Complex64;

use super::model::{Order2, Order4};

/// Skin, phalanx and tissue (skin relative to phalanx) velocities per unit
/// force applied at the skin.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mobilities {
    pub skin: Complex64,
    pub phalanx: Complex64,
    pub tissue: Complex64,
}

pub fn order4_mobilities(model: &Order4, f_hz: f64) -> Mobilities {
    let p = model.si();
    let w = 2.0 * PI * f_hz;
    let c = |x: f64| Complex64::new(x, 0.0);
    let jw = Complex64::new(0.0, w);
    let mass = Matrix2::new(c(p.m_s), c(0.0), c(0.0), c(p.m_p));
    let damp = Matrix2::new(c(p.b_s), c(-p.b_s), c(-p.b_s), c(p.b_s + p.b_p));
    let stiff = Matrix2::new(c(p.k_s), c(-p.k_s), c(-p.k_s), c(p.k_s + p.k_p));
    let dyn_stiffness = mass * c(-w * w) + damp * jw + stiff;
    let x = dyn_stiffness
        .lu()
        .solve(&Vector2::new(c(1.0), c(0.0)))
        .expect("dynamic stiffness of a damped finger is nonsingular for f > 0");
    let v = x * jw;
    Mobilities {
        skin: v[0],
        phalanx: v[1],
        tissue: v[0] - v[1],
    }
}

pub fn order2_mobility(model: &Order2, f_hz: f64) -> Complex64 {
    let p = model.si();
    let w = 2.0 * PI * f_hz;
    let jw = Complex64::new(0.0, w);
    jw / Complex64::new(p.k - p.m * w * w, p.b * w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::synthesis::log_grid;
    use crate::finger::model::*;

    fn rel(a: Complex64, b: Complex64) -> f64 {
        (a - b).norm() / b.norm()
    }

    #[test]
    fn closed_forms_agree_with_matrix_solve() {
        for preset in Preset::ALL {
            let m4 = preset.order4();
            let m2 = preset.order2();
            for f in log_grid(1.0, 1000.0, 100) {
                let o = order4_mobilities(&m4, f);
                assert!(rel(skin_admittance(&m4, f), o.skin) < 1e-9);
                assert!(rel(phalanx_velocity_tf(&m4, f), o.phalanx) < 1e-9);
                assert!(rel(tissue_velocity_tf(&m4, f), o.tissue) < 1e-9);
                assert!(rel(1.0 / impedance_2nd(&m2, f), order2_mobility(&m2, f)) < 1e-9);
            }
        }
    }
}
