//! Loop-shaping design of the amplitude controller: full-order solution,
//! reduced second-order fit and its discrete coefficients.

use vtloop::control::{synthesize, SynthesisConfig};

fn main() -> vtloop::Result<()> {
    let d = synthesize(&SynthesisConfig::default())?;
    println!("full controller order {}", d.full.order());
    println!("reduced num {:?}", d.reduced.num);
    println!("reduced den {:?}", d.reduced.den);
    let c = d.discrete;
    println!("tustin b = [{:.6e}, {:.6e}, {:.6e}], a = [1, {:.6}, {:.6}]", c.b0, c.b1, c.b2, c.a1, c.a2);
    println!(
        "reduction error {:.3} dB / {:.2} deg, loop error {:.3} dB / {:.2} deg",
        d.reduction_error.mag_db, d.reduction_error.phase_deg, d.loop_error.mag_db, d.loop_error.phase_deg
    );
    println!("closed-loop -3 dB at {:.2} Hz", d.closed_loop_bandwidth_hz);
    Ok(())
}
