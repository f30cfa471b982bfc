use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Scalar function of time used for loads, positions and references.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Profile {
    Constant {
        value: f64,
    },
    /// Linear interpolation between `[t, value]` knots, held flat outside.
    Piecewise {
        points: Vec<[f64; 2]>,
    },
    Sine {
        mean: f64,
        amplitude: f64,
        freq_hz: f64,
        #[serde(default)]
        phase_deg: f64,
    },
    /// Symmetric triangle starting at `min`, reaching `max` at half period.
    Triangle {
        min: f64,
        max: f64,
        period_s: f64,
    },
    /// `low` and `high` alternating, high for the first `duty` of each period.
    Square {
        low: f64,
        high: f64,
        period_s: f64,
        #[serde(default = "half")]
        duty: f64,
    },
}

fn half() -> f64 {
    0.5
}

impl Profile {
    pub fn constant(value: f64) -> Self {
        Profile::Constant { value }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = |v: f64| v.is_finite();
        let ok = match self {
            Profile::Constant { value } => finite(*value),
            Profile::Piecewise { points } => {
                !points.is_empty()
                    && points.iter().all(|p| finite(p[0]) && finite(p[1]))
                    && points.windows(2).all(|w| w[1][0] > w[0][0])
            }
            Profile::Sine { mean, amplitude, freq_hz, phase_deg } => {
                finite(*mean) && finite(*amplitude) && *freq_hz >= 0.0 && finite(*freq_hz) && finite(*phase_deg)
            }
            Profile::Triangle { min, max, period_s } => finite(*min) && finite(*max) && *period_s > 0.0,
            Profile::Square { low, high, period_s, duty } => {
                finite(*low) && finite(*high) && *period_s > 0.0 && (0.0..=1.0).contains(duty)
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::param("profile", format!("malformed profile {self:?}")))
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        match self {
            Profile::Constant { value } => *value,
            Profile::Piecewise { points } => {
                let first = points[0];
                let last = points[points.len() - 1];
                if t <= first[0] {
                    return first[1];
                }
                if t >= last[0] {
                    return last[1];
                }
                let i = points.partition_point(|p| p[0] <= t) - 1;
                let (a, b) = (points[i], points[i + 1]);
                a[1] + (b[1] - a[1]) * (t - a[0]) / (b[0] - a[0])
            }
            Profile::Sine { mean, amplitude, freq_hz, phase_deg } => {
                mean + amplitude * (2.0 * PI * freq_hz * t + phase_deg.to_radians()).sin()
            }
            Profile::Triangle { min, max, period_s } => {
                let u = (t / period_s).rem_euclid(1.0);
                let tri = if u < 0.5 { 2.0 * u } else { 2.0 - 2.0 * u };
                min + (max - min) * tri
            }
            Profile::Square { low, high, period_s, duty } => {
                if (t / period_s).rem_euclid(1.0) < *duty {
                    *high
                } else {
                    *low
                }
            }
        }
    }

    /// Time derivative; analytic where the profile is smooth, zero across
    /// the jumps of a square wave.
    pub fn rate(&self, t: f64) -> f64 {
        match self {
            Profile::Constant { .. } | Profile::Square { .. } => 0.0,
            Profile::Piecewise { points } => {
                if t <= points[0][0] || t >= points[points.len() - 1][0] {
                    return 0.0;
                }
                let i = points.partition_point(|p| p[0] <= t) - 1;
                let (a, b) = (points[i], points[i + 1]);
                (b[1] - a[1]) / (b[0] - a[0])
            }
            Profile::Sine { amplitude, freq_hz, phase_deg, .. } => {
                let w = 2.0 * PI * freq_hz;
                amplitude * w * (w * t + phase_deg.to_radians()).cos()
            }
            Profile::Triangle { min, max, period_s } => {
                let u = (t / period_s).rem_euclid(1.0);
                let slope = 2.0 * (max - min) / period_s;
                if u < 0.5 {
                    slope
                } else {
                    -slope
                }
            }
        }
    }

    /// Smallest and largest value over `[0, duration]`, by dense sampling
    /// plus the knots.
    pub fn bounds(&self, duration: f64) -> (f64, f64) {
        let n = 2000;
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let mut visit = |v: f64| {
            lo = lo.min(v);
            hi = hi.max(v);
        };
        for k in 0..=n {
            visit(self.value(duration * k as f64 / n as f64));
        }
        match self {
            Profile::Piecewise { points } => points.iter().filter(|p| p[0] <= duration).for_each(|p| visit(p[1])),
            Profile::Sine { mean, amplitude, .. } if duration > 0.0 => {
                visit(mean + amplitude.abs());
                visit(mean - amplitude.abs());
            }
            Profile::Triangle { min, max, period_s } if duration >= 0.5 * period_s => {
                visit(*min);
                visit(*max);
            }
            Profile::Square { low, high, period_s, .. } if duration >= *period_s => {
                visit(*low);
                visit(*high);
            }
            _ => {}
        }
        (lo, hi)
    }
}
