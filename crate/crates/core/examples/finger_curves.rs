//! Impedance and admittance curves of both presets, printed as CSV.

use std::io;

use vtloop::control::synthesis::log_grid;
use vtloop::finger::{mid_band_admittance, model_curves, write_curves, Preset};

fn main() -> vtloop::Result<()> {
    let grid = log_grid(10.0, 1000.0, 12);
    for preset in Preset::ALL {
        let m = preset.order4();
        eprintln!(
            "{}: mid-band admittance {:.3} m/(N s), effective stiffness {:.1} N/m",
            preset.name(),
            mid_band_admittance(&m),
            m.effective_stiffness()
        );
        write_curves(io::stdout().lock(), &model_curves(&preset.model(4)?, &grid)?)?;
    }
    Ok(())
}
