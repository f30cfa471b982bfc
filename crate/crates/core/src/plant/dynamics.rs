//! Forward dynamics of the plate with an optional finger in contact,
//! integrated with classic fourth-order Runge-Kutta.
//!
//! The finger is written in deviation coordinates about its static
//! equilibrium so that a constant load presses the suspension by exactly
//! `W` and the dynamic part of the contact force is the finger's impedance
//! acting on the plate motion at the contact point.

use super::params::PlateParams;
use crate::error::{Error, Result};
use crate::finger::FingerModel;

/// Tilt beyond which the small-angle model is no longer trusted, rad.
pub const TILT_LIMIT: f64 = 0.05;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PlateState {
    pub x1: f64,
    pub x2: f64,
    pub v1: f64,
    pub v2: f64,
    pub t: f64,
}

impl PlateState {
    pub fn tilt(&self, params: &PlateParams) -> f64 {
        (self.x2 - self.x1) / params.spacing
    }

    /// Kinetic plus suspension energy, J.
    pub fn energy(&self, params: &PlateParams) -> f64 {
        let m = params.mass_matrix();
        let s = params.suspension_at(self.t);
        let (v1, v2) = (self.v1, self.v2);
        0.5 * (m[0][0] * v1 * v1 + 2.0 * m[0][1] * v1 * v2 + m[1][1] * v2 * v2)
            + 0.5 * (s.k1 * self.x1 * self.x1 + s.k2 * self.x2 * self.x2)
    }
}

/// Phalanx node deviation for a fourth-order finger.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct FingerState {
    pub y: f64,
    pub v: f64,
}

/// Finger conditions at one instant.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ContactInput {
    pub model: FingerModel,
    pub load: f64,
    pub load_rate: f64,
    /// Distance from mount 2, m.
    pub position: f64,
    pub position_rate: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct Rates {
    d: [f64; 6],
    contact_force: f64,
}

/// State layout: `[x1, x2, v1, v2, y_p, v_p]`.
fn rates(params: &PlateParams, t: f64, y: &[f64; 6], i: [f64; 2], contact: Option<&ContactInput>) -> Rates {
    let s = params.suspension_at(t);
    let kf = params.force_constant;
    let [x1, x2, v1, v2, yp, vp] = *y;
    let mut q = [kf * i[0] - s.k1 * x1 - s.b1 * v1, kf * i[1] - s.k2 * x2 - s.b2 * v2];
    let mut m = params.mass_matrix();
    let Some(c) = contact else {
        let a = solve2(m, q);
        return Rates {
            d: [v1, v2, a[0], a[1], 0.0, 0.0],
            contact_force: 0.0,
        };
    };

    let lam = c.position / params.spacing;
    let lam_rate = c.position_rate / params.spacing;
    let j = [lam, 1.0 - lam];
    let xp = j[0] * x1 + j[1] * x2;
    let vpl = j[0] * v1 + j[1] * v2;
    // static compliance seen at the contact and its rate of change
    let cp = lam * lam / s.k1 + (1.0 - lam) * (1.0 - lam) / s.k2;
    let cp_rate = 2.0 * lam * lam_rate / s.k1 - 2.0 * (1.0 - lam) * lam_rate / s.k2
        - lam * lam * params.drift.k1 / (s.k1 * s.k1)
        - (1.0 - lam) * (1.0 - lam) * params.drift.k2 / (s.k2 * s.k2);
    let x_eq = -c.load * cp;
    let v_eq = -(c.load_rate * cp + c.load * cp_rate);
    let delta = xp - x_eq;
    let delta_rate = vpl - v_eq;

    let (skin_mass, rest, phalanx_acc) = match c.model {
        FingerModel::Order2(f) => {
            let p = f.si();
            (p.m, c.load + p.b * delta_rate + p.k * delta, 0.0)
        }
        FingerModel::Order4(f) => {
            let p = f.si();
            let skin = p.b_s * (delta_rate - vp) + p.k_s * (delta - yp);
            let acc = (skin - p.b_p * vp - p.k_p * yp) / p.m_p;
            (p.m_s, c.load + skin, acc)
        }
    };
    for r in 0..2 {
        for k in 0..2 {
            m[r][k] += skin_mass * j[r] * j[k];
        }
        q[r] -= j[r] * rest;
    }
    let a = solve2(m, q);
    let contact_force = skin_mass * (j[0] * a[0] + j[1] * a[1]) + rest;
    Rates {
        d: [v1, v2, a[0], a[1], vp, phalanx_acc],
        contact_force,
    }
}

fn solve2(m: [[f64; 2]; 2], q: [f64; 2]) -> [f64; 2] {
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    [
        (m[1][1] * q[0] - m[0][1] * q[1]) / det,
        (m[0][0] * q[1] - m[1][0] * q[0]) / det,
    ]
}

/// Plate plus finger internal state.
#[derive(Clone, Debug)]
pub struct Plant {
    params: PlateParams,
    state: PlateState,
    finger: FingerState,
}

impl Plant {
    pub fn new(params: PlateParams) -> Self {
        Plant {
            params,
            state: PlateState::default(),
            finger: FingerState::default(),
        }
    }

    pub fn with_state(params: PlateParams, state: PlateState) -> Self {
        Plant {
            params,
            state,
            finger: FingerState::default(),
        }
    }

    pub fn params(&self) -> &PlateParams {
        &self.params
    }

    pub fn state(&self) -> PlateState {
        self.state
    }

    pub fn finger_state(&self) -> FingerState {
        self.finger
    }

    fn vector(&self) -> [f64; 6] {
        let s = self.state;
        [s.x1, s.x2, s.v1, s.v2, self.finger.y, self.finger.v]
    }

    /// Force the plate exerts on the finger at the current state (zero out
    /// of contact).
    pub fn contact_force(&self, currents: [f64; 2], contact: Option<&ContactInput>) -> f64 {
        rates(&self.params, self.state.t, &self.vector(), currents, contact).contact_force
    }

    /// Plate end accelerations at the current state.
    pub fn accelerations(&self, currents: [f64; 2], contact: Option<&ContactInput>) -> [f64; 2] {
        let r = rates(&self.params, self.state.t, &self.vector(), currents, contact);
        [r.d[2], r.d[3]]
    }

    /// Advance by `dt`. Currents and contact are sampled at the stage times.
    pub fn step(
        &mut self,
        dt: f64,
        currents: impl Fn(f64) -> [f64; 2],
        contact: impl Fn(f64) -> Option<ContactInput>,
    ) -> Result<()> {
        let t0 = self.state.t;
        let y0 = self.vector();
        let eval = |t: f64, y: &[f64; 6]| {
            let c = contact(t);
            rates(&self.params, t, y, currents(t), c.as_ref()).d
        };
        let add = |y: &[f64; 6], k: &[f64; 6], h: f64| {
            let mut out = *y;
            for (o, d) in out.iter_mut().zip(k) {
                *o += h * d;
            }
            out
        };
        let k1 = eval(t0, &y0);
        let k2 = eval(t0 + 0.5 * dt, &add(&y0, &k1, 0.5 * dt));
        let k3 = eval(t0 + 0.5 * dt, &add(&y0, &k2, 0.5 * dt));
        let k4 = eval(t0 + dt, &add(&y0, &k3, dt));
        let mut y = y0;
        for n in 0..6 {
            y[n] += dt / 6.0 * (k1[n] + 2.0 * k2[n] + 2.0 * k3[n] + k4[n]);
        }
        let t1 = t0 + dt;
        self.state = PlateState {
            x1: y[0],
            x2: y[1],
            v1: y[2],
            v2: y[3],
            t: t1,
        };
        self.finger = if contact(t1).is_some() {
            FingerState { y: y[4], v: y[5] }
        } else {
            FingerState::default()
        };
        let tilt = self.state.tilt(&self.params);
        if !tilt.is_finite() || tilt.abs() >= TILT_LIMIT {
            return Err(Error::TiltViolation { t: t1, tilt });
        }
        Ok(())
    }
}

/// One step of the bare plate with constant currents.
pub fn step_plate(params: &PlateParams, state: PlateState, currents: [f64; 2], dt: f64) -> Result<PlateState> {
    let mut p = Plant::with_state(*params, state);
    p.step(dt, |_| currents, |_| None)?;
    Ok(p.state())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::finger::{impedance_2nd, Preset};
    use approx::assert_relative_eq;
    use num_complex::Complex64;
    use std::f64::consts::PI;

    const DT: f64 = 1.0 / 30_000.0;

    #[test]
    fn rest_stays_at_rest() {
        let p = PlateParams::default();
        let mut s = PlateState::default();
        for _ in 0..1000 {
            s = step_plate(&p, s, [0.0, 0.0], DT).unwrap();
        }
        assert_eq!((s.x1, s.x2, s.v1, s.v2), (0.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn unloaded_energy_never_increases() {
        let p = PlateParams::default();
        let mut s = PlateState { x1: 1e-4, x2: -3e-5, v1: 0.01, v2: 0.0, t: 0.0 };
        let mut e = s.energy(&p);
        for _ in 0..30_000 {
            s = step_plate(&p, s, [0.0, 0.0], DT).unwrap();
            let e1 = s.energy(&p);
            assert!(e1 <= e * (1.0 + 1e-12), "energy rose {e} -> {e1}");
            e = e1;
        }
        assert!(e < 1e-3 * 0.5 * 22_400.0 * 1e-8);
    }

    #[test]
    fn force_balance_holds_on_trajectory() {
        // m z'' = K(i1 + i2) - sum(k x + b v), re-evaluated from the states
        let p = PlateParams::default();
        let mut plant = Plant::new(p);
        let cur = |t: f64| [0.01 * (2.0 * PI * 111.0 * t).sin(), 0.012 * (2.0 * PI * 111.0 * t).cos()];
        for _ in 0..3000 {
            plant.step(DT, cur, |_| None).unwrap();
            let s = plant.state();
            let i = cur(s.t);
            let a = plant.accelerations(i, None);
            let z_acc = 0.5 * (a[0] + a[1]);
            let th_acc = (a[1] - a[0]) / p.spacing;
            let f1 = p.k1 * s.x1 + p.b1 * s.v1 + 0.5 * p.mass * z_acc - p.inertia / p.spacing * th_acc;
            let f2 = p.k2 * s.x2 + p.b2 * s.v2 + 0.5 * p.mass * z_acc + p.inertia / p.spacing * th_acc;
            let resid1 = p.force_constant * i[0] - f1;
            let resid2 = p.force_constant * i[1] - f2;
            assert!(resid1.abs() < 1e-9 && resid2.abs() < 1e-9);
        }
    }

    #[test]
    fn static_load_compresses_suspension_by_w() {
        let p = PlateParams::default();
        let model = Preset::FirmTouch.model(2).unwrap();
        let contact = ContactInput { model, load: 0.5, load_rate: 0.0, position: 0.02, position_rate: 0.0 };
        let mut plant = Plant::new(p);
        for _ in 0..60_000 {
            plant.step(DT, |_| [0.0, 0.0], |_| Some(contact)).unwrap();
        }
        let s = plant.state();
        let w = -(p.k1 * s.x1 + p.k2 * s.x2);
        assert_relative_eq!(w, 0.5, epsilon = 1e-6);
        let lam = 0.02 / p.spacing;
        assert_relative_eq!(-p.k1 * s.x1, lam * 0.5, epsilon = 1e-6);
        assert_relative_eq!(plant.contact_force([0.0, 0.0], Some(&contact)), 0.5, epsilon = 1e-6);
    }

    #[test]
    fn zero_motion_gives_exactly_w() {
        let p = PlateParams::default();
        let model = Preset::LightTouch.model(4).unwrap();
        let lam: f64 = 0.3;
        let w = 0.7;
        let cp = lam * lam / p.k1 + (1.0 - lam).powi(2) / p.k2;
        // place the plate at the static deflection, where it has no reason to move
        let state = PlateState { x1: -lam * w / p.k1, x2: -(1.0 - lam) * w / p.k2, ..Default::default() };
        let plant = Plant::with_state(p, state);
        let c = ContactInput { model, load: w, load_rate: 0.0, position: lam * p.spacing, position_rate: 0.0 };
        assert_relative_eq!(plant.contact_force([0.0, 0.0], Some(&c)), w, epsilon = 1e-12);
        let xp = lam * state.x1 + (1.0 - lam) * state.x2;
        assert_relative_eq!(xp, -w * cp, epsilon = 1e-18);
        let a = plant.accelerations([0.0, 0.0], Some(&c));
        assert!(a[0].abs() < 1e-9 && a[1].abs() < 1e-9);
    }

    #[test]
    fn detach_drops_force_within_one_step() {
        let p = PlateParams::default();
        let model = Preset::FirmTouch.model(2).unwrap();
        let c = ContactInput { model, load: 0.5, load_rate: 0.0, position: 0.02, position_rate: 0.0 };
        let mut plant = Plant::new(p);
        for _ in 0..100 {
            plant.step(DT, |_| [0.0, 0.0], |_| Some(c)).unwrap();
        }
        assert!(plant.contact_force([0.0, 0.0], Some(&c)) > 0.1);
        plant.step(DT, |_| [0.0, 0.0], |_| None).unwrap();
        assert_eq!(plant.contact_force([0.0, 0.0], None), 0.0);
        assert_eq!(plant.finger_state(), FingerState::default());
    }

    fn fit_phasor(xs: &[f64], ts: &[f64], f: f64) -> Complex64 {
        // least squares on whole periods reduces to a correlation
        let n = xs.len() as f64;
        let (mut c, mut s) = (0.0, 0.0);
        for (&x, &t) in xs.iter().zip(ts) {
            c += x * (2.0 * PI * f * t).cos();
            s += x * (2.0 * PI * f * t).sin();
        }
        Complex64::new(2.0 * c / n, -2.0 * s / n)
    }

    #[test]
    fn contact_force_phasor_matches_second_order_impedance() {
        let p = PlateParams::default();
        let model = Preset::FirmTouch.model(2).unwrap();
        let f = 111.0;
        let c = ContactInput { model, load: 0.0, load_rate: 0.0, position: 0.03, position_rate: 0.0 };
        let mut plant = Plant::new(p);
        let cur = |t: f64| {
            let v = 0.02 * (2.0 * PI * f * t).cos();
            [v, v]
        };
        let settle = 30_000;
        let window = 30_000; // 1 s holds 111 whole periods
        let (mut fs, mut vs, mut ts) = (Vec::new(), Vec::new(), Vec::new());
        for k in 0..settle + window {
            if k >= settle {
                let s = plant.state();
                let lam = c.position / p.spacing;
                fs.push(plant.contact_force(cur(s.t), Some(&c)));
                vs.push(lam * s.v1 + (1.0 - lam) * s.v2);
                ts.push(s.t);
            }
            plant.step(DT, cur, |_| Some(c)).unwrap();
        }
        let z = fit_phasor(&fs, &ts, f) / fit_phasor(&vs, &ts, f);
        let want = impedance_2nd(&Preset::FirmTouch.order2(), f);
        assert!((z - want).norm() / want.norm() < 0.01, "z={z} want={want}");
    }

    #[test]
    fn tilt_violation_aborts() {
        let p = PlateParams::default();
        let s = PlateState { x1: 0.0, x2: 0.003, ..Default::default() };
        assert!(matches!(step_plate(&p, s, [0.0, 0.0], DT), Err(Error::TiltViolation { .. })));
    }
}
