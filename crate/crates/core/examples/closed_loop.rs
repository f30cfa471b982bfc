//! Track 10 um at 261 Hz while a finger presses and slides across the plate.

use vtloop::finger::Preset;
use vtloop::harness::acceptance::tone_fit;
use vtloop::plant::{run_closed_loop, Experiment, Profile, TouchScenario};

fn main() -> vtloop::Result<()> {
    let mut e = Experiment::tracking(261.0, 1e-5, 4.0);
    e.seed = 2;
    e.scenario = TouchScenario {
        finger: Some(Preset::FirmTouch.model(4)?),
        load: Profile::constant(0.5),
        position: Profile::Triangle {
            min: 0.0125,
            max: 0.0425,
            period_s: 2.0,
        },
        contact: vec![[1.0, 4.0]],
        ..TouchScenario::untouched()
    };
    let trace = run_closed_loop(&e)?;
    // the press also deflects the plate statically, so fit the drive tone
    // rather than reading peaks
    for t0 in [0.5, 1.5, 2.5, 3.5] {
        let w = trace.window(t0, t0 + 0.5);
        let center: Vec<f64> = w.rows.iter().map(|r| 0.5 * (r.x1 + r.x2)).collect();
        let offset: f64 = center.iter().sum::<f64>() / center.len() as f64;
        let a = tone_fit(&center, w.rows[0].t, w.rate_hz, &[261.0])?[0].norm();
        println!(
            "t {t0:.1}-{:.1} s: tone {:.3} um, static offset {:+.2} um",
            t0 + 0.5,
            a * 1e6,
            offset * 1e6
        );
    }
    Ok(())
}
