//! Amplitude and phase of a noisy tone with the streaming lock-in.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use vtloop::dsp::{amplitude, phase_shifted, phase_standard, LockIn};

fn main() -> vtloop::Result<()> {
    let (f, rate) = (47.0, 5000.0);
    let (a, phi) = (1e-5, -200f64.to_radians());
    let noise = Normal::new(0.0, 1e-6).expect("valid sigma");
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut li = LockIn::new(f, rate, 10.0)?;
    for n in 0..(3.0 * rate) as usize {
        let t = n as f64 / rate;
        let x = a * (2.0 * PI * f * t + phi).cos() + noise.sample(&mut rng);
        li.update(x);
    }
    let x = li.last();
    println!("amplitude {:.3} um (true 10)", amplitude(x) * 1e6);
    println!("phase, standard branch {:.1} deg", phase_standard(x)?);
    println!("phase, shifted branch  {:.1} deg (true -200)", phase_shifted(x)?);
    Ok(())
}
