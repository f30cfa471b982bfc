//! Regress a stiffness that drifts during an unloaded run.

use vtloop::estimation::{identify, PipelineConfig};
use vtloop::plant::{run_closed_loop, Experiment};

fn main() -> vtloop::Result<()> {
    let mut e = Experiment::tracking(20.0, 4e-4, 10.0);
    e.plate.drift.k1 = 5.0;
    let trace = run_closed_loop(&e)?;
    let cfg = PipelineConfig {
        plate: e.plate,
        ..Default::default()
    };
    let fit = identify(&trace, 20.0, &cfg)?.fit;
    println!("k1 = {:.1} + {:.3} t N/m (true 22400 + 5 t)", fit.k1.c, fit.k1.a);
    println!("k2 = {:.1} + {:.3} t N/m (true 22900)", fit.k2.c, fit.k2.a);
    println!("b1 = {:.3}, b2 = {:.3} N s/m", fit.b1.c, fit.b2.c);
    println!("residual {:.2e} N over {:.1} s", fit.residual_rms_n, fit.duration_s);
    Ok(())
}
