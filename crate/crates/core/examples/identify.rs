//! Simulate a steady press, then recover load, position and finger impedance
//! from the sensor record alone.

use std::f64::consts::PI;

use vtloop::estimation::{identify, PipelineConfig};
use vtloop::finger::Preset;
use vtloop::plant::{run_closed_loop, Experiment, TouchScenario};

fn main() -> vtloop::Result<()> {
    let f = 72.0;
    let model = Preset::LightTouch.model(4)?;
    let mut e = Experiment::tracking(f, 0.02 / (2.0 * PI * f), 4.5);
    e.scenario = TouchScenario::steady(model, 0.3, 0.02, vec![[1.5, 4.5]]);
    let trace = run_closed_loop(&e)?;
    let a = identify(&trace, f, &PipelineConfig::default())?;
    let tail: Vec<_> = a.rows.iter().filter(|r| r.t >= 3.0 && r.valid == 1).collect();
    let w = tail.iter().map(|r| r.w).sum::<f64>() / tail.len() as f64;
    let p = tail.iter().filter_map(|r| r.p).sum::<f64>() / tail.len() as f64;
    println!("suspension from {:?}: k1 {:.0} N/m, k2 {:.0} N/m", a.fit_source, a.fit.k1.c, a.fit.k2.c);
    println!("load {w:.3} N (true 0.3), position {:.1} mm (true 20)", p * 1e3);
    println!(
        "|Z| {:.3} N s/m, model {:.3}",
        a.median_zmag(3.0, 4.5).unwrap_or(f64::NAN),
        model.impedance(f).norm()
    );
    Ok(())
}
