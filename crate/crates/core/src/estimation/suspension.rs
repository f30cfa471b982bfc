//! Linear-in-time regression of the mount stiffness and damping from
//! unloaded stretches of a record.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::filters::{bandpass_record, bandpass_settle_samples};
use super::forces::{inertial_shares, MountMotion};
use crate::error::{Error, Result};
use crate::plant::{PlateParams, SimTrace, Suspension};

/// `value(t) = c + a·t`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearDrift {
    pub a: f64,
    pub c: f64,
}

impl LinearDrift {
    pub fn at(&self, t: f64) -> f64 {
        self.c + self.a * t
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuspensionFit {
    pub k1: LinearDrift,
    pub k2: LinearDrift,
    pub b1: LinearDrift,
    pub b2: LinearDrift,
    /// RMS of the force-balance residual over both mounts, N.
    pub residual_rms_n: f64,
    /// Span of the samples used, s.
    pub duration_s: f64,
    pub samples: usize,
}

impl SuspensionFit {
    /// The plate's own parameters, presented as a fit.
    pub fn nominal(plate: &PlateParams) -> Self {
        let d = plate.drift;
        SuspensionFit {
            k1: LinearDrift { a: d.k1, c: plate.k1 },
            k2: LinearDrift { a: d.k2, c: plate.k2 },
            b1: LinearDrift { a: d.b1, c: plate.b1 },
            b2: LinearDrift { a: d.b2, c: plate.b2 },
            residual_rms_n: 0.0,
            duration_s: 0.0,
            samples: 0,
        }
    }

    pub fn at(&self, t: f64) -> Suspension {
        Suspension {
            k1: self.k1.at(t),
            k2: self.k2.at(t),
            b1: self.b1.at(t),
            b2: self.b2.at(t),
        }
    }

    /// Offsets must be positive for a physical suspension.
    pub fn is_physical(&self) -> bool {
        [self.k1.c, self.k2.c, self.b1.c, self.b2.c].iter().all(|&c| c > 0.0)
    }
}

/// Smallest normalized singular value accepted before the regression is
/// declared rank deficient.
const RANK_TOL: f64 = 1e-9;

struct Normal {
    gram: DMatrix<f64>,
    rhs: DVector<f64>,
}

impl Normal {
    fn new(p: usize) -> Self {
        Normal {
            gram: DMatrix::zeros(p, p),
            rhs: DVector::zeros(p),
        }
    }

    fn add(&mut self, row: &[f64], y: f64) {
        let p = row.len();
        for i in 0..p {
            self.rhs[i] += row[i] * y;
            for j in 0..p {
                self.gram[(i, j)] += row[i] * row[j];
            }
        }
    }

    /// Column-scaled solve.
    fn solve(&self) -> Result<DVector<f64>> {
        let p = self.rhs.len();
        let scale = DVector::from_fn(p, |i, _| {
            let g = self.gram[(i, i)];
            if g > 0.0 {
                1.0 / g.sqrt()
            } else {
                0.0
            }
        });
        if scale.iter().any(|&s| s == 0.0) {
            return Err(Error::RankDeficient);
        }
        let d = DMatrix::from_diagonal(&scale);
        let g = &d * &self.gram * &d;
        let svd = g.svd(true, true);
        let smax = svd.singular_values.max();
        if svd.singular_values.min() < RANK_TOL * smax {
            return Err(Error::RankDeficient);
        }
        let z = svd.solve(&(&d * &self.rhs), 0.0).map_err(|_| Error::RankDeficient)?;
        Ok(d * z)
    }
}

/// Band-passed regressors for the whole record.
pub struct BandMotion {
    pub motion: MountMotion,
    pub i1: Vec<f64>,
    pub i2: Vec<f64>,
}

/// Band-pass displacements and currents at `f_hz`, differentiate and
/// compensate the difference gain.
pub fn band_motion(trace: &SimTrace, f_hz: f64) -> Result<BandMotion> {
    let rate = trace.rate_hz;
    let x1 = bandpass_record(&trace.column(|r| r.hall1), f_hz, rate)?;
    let x2 = bandpass_record(&trace.column(|r| r.hall2), f_hz, rate)?;
    let i1 = bandpass_record(&trace.column(|r| r.i1), f_hz, rate)?;
    let i2 = bandpass_record(&trace.column(|r| r.i2), f_hz, rate)?;
    let mut motion = MountMotion::from_displacements(x1, x2, rate)?;
    motion.compensate(f_hz, rate);
    Ok(BandMotion { motion, i1, i2 })
}

/// Per mount, regress `K·i - inertial share = (c_k + a_k t)·x + (c_b + a_b t)·v`
/// over the sample ranges `segments` (half-open index pairs). Samples within
/// the band-pass settling time of a segment start are skipped. With
/// `with_drift` false the slopes are pinned at zero.
pub fn fit_suspension(
    trace: &SimTrace,
    segments: &[(usize, usize)],
    plate: &PlateParams,
    f_hz: f64,
    with_drift: bool,
) -> Result<SuspensionFit> {
    let rate = trace.rate_hz;
    let settle = bandpass_settle_samples(f_hz, rate);
    // the differences are one-sided in the last sample
    let last = trace.len().saturating_sub(1);
    let used: Vec<(usize, usize)> = segments
        .iter()
        .map(|&(s, e)| (s + settle, e.min(last)))
        .filter(|&(s, e)| e > s + 1)
        .collect();
    let n_used: usize = used.iter().map(|(s, e)| e - s).sum();
    if n_used < 8 {
        return Err(Error::InsufficientData {
            needed: settle + 8,
            available: segments.iter().map(|(s, e)| e.saturating_sub(*s)).max().unwrap_or(0),
        });
    }
    let bm = band_motion(trace, f_hz)?;
    let m = &bm.motion;

    let t_of = |k: usize| trace.rows[k].t;
    let (mut t_sum, mut t_min, mut t_max) = (0.0, f64::INFINITY, f64::NEG_INFINITY);
    for &(s, e) in &used {
        for k in s..e {
            t_sum += t_of(k);
        }
        t_min = t_min.min(t_of(s));
        t_max = t_max.max(t_of(e - 1));
    }
    let t_bar = t_sum / n_used as f64;

    let kf = plate.force_constant;
    let row = |k: usize, j: usize| {
        let tc = t_of(k) - t_bar;
        let (s1, s2) = inertial_shares(m.a1[k], m.a2[k], plate);
        let (x, v, y) = if j == 0 {
            (m.x1[k], m.v1[k], kf * bm.i1[k] - s1)
        } else {
            (m.x2[k], m.v2[k], kf * bm.i2[k] - s2)
        };
        if with_drift {
            ([x, v, tc * x, tc * v], 4, y)
        } else {
            ([x, v, 0.0, 0.0], 2, y)
        }
    };
    let p = if with_drift { 4 } else { 2 };
    let mut eq = [Normal::new(p), Normal::new(p)];
    for &(s, e) in &used {
        for k in s..e {
            for (j, n) in eq.iter_mut().enumerate() {
                let (r, p, y) = row(k, j);
                n.add(&r[..p], y);
            }
        }
    }
    let b1 = eq[0].solve()?;
    let b2 = eq[1].solve()?;
    let mut rss = 0.0;
    for &(s, e) in &used {
        for k in s..e {
            for (j, beta) in [&b1, &b2].into_iter().enumerate() {
                let (r, p, y) = row(k, j);
                let fit: f64 = r[..p].iter().zip(beta.iter()).map(|(a, b)| a * b).sum();
                rss += (y - fit).powi(2);
            }
        }
    }
    let slope = |b: &DVector<f64>, i: usize| if with_drift { b[i] } else { 0.0 };
    // centered offsets back to the record's time origin
    let drift = |c: f64, a: f64| LinearDrift { a, c: c - a * t_bar };
    Ok(SuspensionFit {
        k1: drift(b1[0], slope(&b1, 2)),
        b1: drift(b1[1], slope(&b1, 3)),
        k2: drift(b2[0], slope(&b2, 2)),
        b2: drift(b2[1], slope(&b2, 3)),
        residual_rms_n: (rss / (2 * n_used) as f64).sqrt(),
        duration_s: t_max - t_min,
        samples: n_used,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plant::{run_closed_loop, Drift, Experiment};

    fn unloaded(drift: Drift, sigma: f64, dur: f64) -> (SimTrace, PlateParams) {
        let mut e = Experiment::tracking(20.0, 4e-4, dur);
        e.plate.drift = drift;
        e.control.noise_sigma_m = sigma;
        e.seed = 11;
        (run_closed_loop(&e).unwrap(), e.plate)
    }

    #[test]
    fn noise_free_zero_drift_fits_exactly() {
        let (tr, plate) = unloaded(Drift::default(), 0.0, 3.0);
        // past the loop's start-up transient
        let fit = fit_suspension(&tr, &[(30_000, tr.len())], &plate, 20.0, true).unwrap();
        assert!(fit.residual_rms_n < 1e-6, "{}", fit.residual_rms_n);
        for (got, want) in [(fit.k1, plate.k1), (fit.k2, plate.k2), (fit.b1, plate.b1), (fit.b2, plate.b2)] {
            assert!((got.c - want).abs() < 0.01 * want, "{got:?} vs {want}");
            assert!(got.a.abs() * fit.duration_s < 0.01 * got.c, "{got:?}");
        }
        assert!(fit.is_physical());
    }

    #[test]
    fn drifting_stiffness_is_recovered_through_sensor_noise() {
        let drift = Drift { k1: 5.0, ..Drift::default() };
        let (tr, plate) = unloaded(drift, 1e-6, 10.0);
        let fit = fit_suspension(&tr, &[(0, tr.len())], &plate, 20.0, true).unwrap();
        assert!((fit.k1.a - 5.0).abs() < 0.5, "{:?}", fit.k1);
        assert!((fit.k1.c - plate.k1).abs() < 0.01 * plate.k1);
        for p in [fit.k2, fit.b1, fit.b2] {
            assert!(p.a.abs() * fit.duration_s < 0.01 * p.c, "{p:?}");
        }
    }

    #[test]
    fn silent_record_is_rank_deficient() {
        let mut e = Experiment::tracking(47.0, 0.0, 1.5);
        e.control.noise_sigma_m = 0.0;
        let tr = run_closed_loop(&e).unwrap();
        assert!(matches!(
            fit_suspension(&tr, &[(0, tr.len())], &e.plate, 47.0, true),
            Err(Error::RankDeficient)
        ));
    }

    #[test]
    fn short_segments_are_rejected() {
        let (tr, plate) = unloaded(Drift::default(), 0.0, 0.1);
        assert!(matches!(
            fit_suspension(&tr, &[(0, 100)], &plate, 20.0, false),
            Err(Error::InsufficientData { .. })
        ));
    }

    #[test]
    fn nominal_fit_reproduces_plate_drift() {
        let mut p = PlateParams::default();
        p.drift.k1 = 5.0;
        let f = SuspensionFit::nominal(&p);
        assert_eq!(f.at(2.0), p.suspension_at(2.0));
    }
}
