use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

/// Unit-gain displacement sensor with additive white Gaussian noise.
#[derive(Clone, Debug)]
pub struct HallSensor {
    noise: Option<Normal<f64>>,
    rng: ChaCha8Rng,
}

impl HallSensor {
    /// Each `stream` of a given seed is an independent noise sequence.
    pub fn new(sigma_m: f64, seed: u64, stream: u64) -> Result<Self> {
        if !(sigma_m.is_finite() && sigma_m >= 0.0) {
            return Err(Error::param("noise_sigma_m", format!("must be >= 0, got {sigma_m}")));
        }
        let noise = if sigma_m > 0.0 {
            Some(Normal::new(0.0, sigma_m).map_err(|e| Error::param("noise_sigma_m", e.to_string()))?)
        } else {
            None
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Ok(HallSensor { noise, rng })
    }

    pub fn sense(&mut self, x: f64) -> f64 {
        match &self.noise {
            Some(n) => x + n.sample(&mut self.rng),
            None => x,
        }
    }
}

pub fn hall_sense(sensor: &mut HallSensor, x: f64) -> f64 {
    sensor.sense(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;
    use rustfft::FftPlanner;

    #[test]
    fn zero_sigma_is_identity() {
        let mut s = HallSensor::new(0.0, 1, 0).unwrap();
        assert_eq!(s.sense(1.234e-5), 1.234e-5);
    }

    #[test]
    fn sample_sigma_matches() {
        let mut s = HallSensor::new(1e-6, 42, 0).unwrap();
        let n = 1_000_000;
        let xs: Vec<f64> = (0..n).map(|_| s.sense(5e-6)).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let sd = (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
        assert!((sd / 1e-6 - 1.0).abs() < 0.02, "sd {sd}");
    }

    #[test]
    fn noise_is_white() {
        // average periodogram over segments, then compare band powers
        let mut s = HallSensor::new(1.0, 7, 3).unwrap();
        let seg = 1024;
        let segs = 400;
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(seg);
        let mut psd = vec![0.0; seg / 2];
        for _ in 0..segs {
            let mut buf: Vec<Complex64> = (0..seg).map(|_| Complex64::new(s.sense(0.0), 0.0)).collect();
            fft.process(&mut buf);
            for (p, b) in psd.iter_mut().zip(&buf) {
                *p += b.norm_sqr();
            }
        }
        let bands = 8;
        let width = psd.len() / bands;
        let powers: Vec<f64> = (0..bands)
            .map(|b| psd[b * width + 1..(b + 1) * width].iter().sum::<f64>() / (width - 1) as f64)
            .collect();
        let mean = powers.iter().sum::<f64>() / bands as f64;
        for p in powers {
            assert!((10.0 * (p / mean).log10()).abs() < 1.0);
        }
    }

    #[test]
    fn streams_are_independent_and_reproducible() {
        let mut a = HallSensor::new(1.0, 5, 1).unwrap();
        let mut b = HallSensor::new(1.0, 5, 2).unwrap();
        let mut a2 = HallSensor::new(1.0, 5, 1).unwrap();
        let xa: Vec<f64> = (0..10).map(|_| a.sense(0.0)).collect();
        let xb: Vec<f64> = (0..10).map(|_| b.sense(0.0)).collect();
        let xa2: Vec<f64> = (0..10).map(|_| a2.sense(0.0)).collect();
        assert_ne!(xa, xb);
        assert_eq!(xa, xa2);
    }
}
