//! Pipeline invariants checked end to end against simulated records.

use std::f64::consts::PI;

use vtloop::estimation::{identify, PipelineConfig};
use vtloop::finger::{FingerModel, LoadScaling, Preset};
use vtloop::plant::{run_closed_loop, Experiment, PlateParams, TouchScenario};

fn rms(xs: &[f64]) -> f64 {
    (xs.iter().map(|x| x * x).sum::<f64>() / xs.len() as f64).sqrt()
}

#[test]
fn unloaded_finger_force_is_small_against_drive_force() {
    let kf = PlateParams::default().force_constant;
    for f in [20.0, 111.0, 400.0] {
        let mut e = Experiment::tracking(f, 0.02 / (2.0 * PI * f), 3.0);
        e.seed = 21;
        let tr = run_closed_loop(&e).unwrap();
        let a = identify(&tr, f, &PipelineConfig::default()).unwrap();
        let k0 = (1.5 * tr.rate_hz) as usize;
        let k1 = tr.len() - 10;
        let drive: Vec<f64> = tr.rows[k0..k1].iter().map(|r| kf * (r.i1 + r.i2)).collect();
        let ratio = rms(&a.finger_force[k0..k1]) / rms(&drive);
        assert!(ratio < 0.02, "{f} Hz: finger force is {:.2}% of drive", 100.0 * ratio);
    }
}

/// Slope of `ln |Z|` against `ln W`.
fn fitted_exponent(f: f64, loads: &[f64], exponent: f64) -> f64 {
    let scaling = LoadScaling::PowerLaw { w_ref: 0.5, exponent };
    let base = FingerModel::Order4(Preset::LightTouch.order4());
    let pts: Vec<(f64, f64)> = loads
        .iter()
        .map(|&w| {
            let mut e = Experiment::tracking(f, 0.02 / (2.0 * PI * f), 4.5);
            e.seed = 9;
            e.scenario = TouchScenario {
                scaling: Some(scaling),
                ..TouchScenario::steady(base, w, 0.02, vec![[1.5, 4.5]])
            };
            let tr = run_closed_loop(&e).unwrap();
            let z = identify(&tr, f, &PipelineConfig::default())
                .unwrap()
                .median_zmag(3.0, 4.5)
                .unwrap();
            (w.ln(), z.ln())
        })
        .collect();
    let n = pts.len() as f64;
    let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / n, pts.iter().map(|p| p.1).sum::<f64>() / n);
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

#[test]
fn configured_load_power_law_is_recovered() {
    for f in [111.0, 261.0, 400.0] {
        let k = fitted_exponent(f, &[0.3, 0.6, 1.2], 1.0 / 3.0);
        assert!((k - 1.0 / 3.0).abs() <= 0.1, "{f} Hz: exponent {k:.3}");
    }
}
