//! Trace in, load/position/impedance record and suspension fit out.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::filters::{bandpass_settle_samples, SplitFilter};
use super::forces::{device_forces, finger_force};
use super::impedance::{lockin_impedance, velocity_noise_floor};
use super::kinematics::{estimate_normal_load, estimate_position, position_floor};
use super::segment::{advance_boundaries, segment_contacts, Segment, CONTACT_HYSTERESIS_N, CONTACT_THRESHOLD_N};
use super::suspension::{band_motion, fit_suspension, LinearDrift, SuspensionFit};
use crate::error::{Error, Result};
use crate::plant::{PlateParams, SimTrace};

pub const ANALYSIS_HEADER: [&str; 6] = ["t", "W", "P", "Zmag", "f_hz", "valid"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Taken from the scenario's plate section, not from this table.
    #[serde(skip)]
    pub plate: PlateParams,
    /// Displacement sensor noise assumed when setting floors, m.
    pub noise_sigma_m: f64,
    pub contact_threshold_n: f64,
    pub contact_hysteresis_n: f64,
    pub output_rate_hz: f64,
    /// Unloaded time needed before the suspension is regressed rather than
    /// taken from `plate`, s.
    pub min_unloaded_s: f64,
    /// Unloaded span needed before drift slopes are regressed too; a slope
    /// from a short stretch extrapolates badly, s.
    pub min_drift_span_s: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            plate: PlateParams::default(),
            noise_sigma_m: 1e-6,
            contact_threshold_n: CONTACT_THRESHOLD_N,
            contact_hysteresis_n: CONTACT_HYSTERESIS_N,
            output_rate_hz: 1000.0,
            min_unloaded_s: 1.0,
            min_drift_span_s: 5.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalysisRow {
    pub t: f64,
    #[serde(rename = "W")]
    pub w: f64,
    #[serde(rename = "P")]
    pub p: Option<f64>,
    #[serde(rename = "Zmag")]
    pub zmag: Option<f64>,
    pub f_hz: f64,
    pub valid: u8,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitSource {
    Regression,
    /// Not enough unloaded excitation; plate parameters used as given.
    Nominal,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Analysis {
    pub f_hz: f64,
    /// Full-rate load and position.
    pub load: Vec<f64>,
    pub position: Vec<Option<f64>>,
    /// Full-rate finger force estimate, band-limited around the drive.
    pub finger_force: Vec<f64>,
    pub zmag: Vec<Option<f64>>,
    pub segments: Vec<Segment>,
    pub fit: SuspensionFit,
    pub fit_source: FitSource,
    /// Decimated output record.
    pub rows: Vec<AnalysisRow>,
}

impl Analysis {
    /// Median of the valid impedance samples in `[t0, t1)` of the output record.
    pub fn median_zmag(&self, t0: f64, t1: f64) -> Option<f64> {
        let mut z: Vec<f64> = self
            .rows
            .iter()
            .filter(|r| r.valid == 1 && r.t >= t0 && r.t < t1)
            .filter_map(|r| r.zmag)
            .collect();
        if z.is_empty() {
            return None;
        }
        z.sort_by(f64::total_cmp);
        let m = z.len() / 2;
        Some(if z.len() % 2 == 1 { z[m] } else { 0.5 * (z[m - 1] + z[m]) })
    }
}

pub fn identify(trace: &SimTrace, f_hz: f64, cfg: &PipelineConfig) -> Result<Analysis> {
    cfg.plate.validate()?;
    if trace.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            available: trace.len(),
        });
    }
    if !(cfg.output_rate_hz > 0.0 && cfg.output_rate_hz <= trace.rate_hz) {
        return Err(Error::param("output_rate_hz", format!("must lie in (0, {}]", trace.rate_hz)));
    }
    let rate = trace.rate_hz;
    let plate = &cfg.plate;
    let times = trace.column(|r| r.t);

    let split = SplitFilter::new(f_hz, rate)?;
    let x1_l = split.low(&trace.column(|r| r.hall1));
    let x2_l = split.low(&trace.column(|r| r.hall2));

    // first pass with the plate's own suspension, to find unloaded stretches
    let nominal = SuspensionFit::nominal(plate);
    let load0: Vec<f64> = (0..trace.len())
        .map(|k| estimate_normal_load(x1_l[k], x2_l[k], &nominal.at(times[k])))
        .collect();
    let delay = (split.dc_delay_s() * rate).round() as usize;
    let segments = advance_boundaries(
        &segment_contacts(&load0, cfg.contact_threshold_n, cfg.contact_hysteresis_n),
        delay,
    );

    let min_len = (cfg.min_unloaded_s * rate) as usize + bandpass_settle_samples(f_hz, rate);
    let unloaded: Vec<(usize, usize)> = segments
        .iter()
        .filter(|s| !s.loaded)
        .map(|s| {
            // keep clear of the next touch-down
            let end = if s.end < trace.len() { s.end.saturating_sub(delay) } else { s.end };
            (s.start, end)
        })
        .filter(|&(s, e)| e > s && e - s >= min_len)
        .collect();
    let (fit, fit_source) = if unloaded.is_empty() {
        (nominal, FitSource::Nominal)
    } else {
        let span = (unloaded.last().map_or(0, |u| u.1) - unloaded[0].0) as f64 / rate;
        match fit_suspension(trace, &unloaded, plate, f_hz, span >= cfg.min_drift_span_s) {
            Ok(f) if f.is_physical() => (f, FitSource::Regression),
            Ok(_) | Err(Error::RankDeficient) | Err(Error::InsufficientData { .. }) => (nominal, FitSource::Nominal),
            Err(e) => return Err(e),
        }
    };

    let floor1 = position_floor(plate.k1, cfg.noise_sigma_m, rate, super::filters::SPLIT_CUTOFF_HZ);
    let mut load = Vec::with_capacity(trace.len());
    let mut position = Vec::with_capacity(trace.len());
    for k in 0..trace.len() {
        let s = fit.at(times[k]);
        load.push(estimate_normal_load(x1_l[k], x2_l[k], &s));
        position.push(estimate_position(x1_l[k], x2_l[k], &s, plate.spacing, floor1).ok());
    }

    let bm = band_motion(trace, f_hz)?;
    let (f1, f2) = device_forces(&bm.motion, &times, plate, |t| fit.at(t))?;
    let ff = finger_force(&bm.i1, &bm.i2, &f1, &f2, plate.force_constant)?;
    let mid = 0.5 * plate.spacing;
    let v_contact: Vec<f64> = (0..trace.len())
        .map(|k| bm.motion.velocity_at(k, position[k].unwrap_or(mid), plate.spacing))
        .collect();
    let floor_v = velocity_noise_floor(f_hz, cfg.noise_sigma_m, rate);
    let imp = lockin_impedance(&ff, &v_contact, &times, &load, f_hz, rate, floor_v)?;

    let mut loaded = vec![false; trace.len()];
    for s in segments.iter().filter(|s| s.loaded) {
        loaded[s.start..s.end].iter_mut().for_each(|l| *l = true);
    }
    let zmag: Vec<Option<f64>> = imp
        .iter()
        .enumerate()
        .map(|(k, s)| s.zmag.filter(|_| loaded[k] && position[k].is_some()))
        .collect();

    let step = ((rate / cfg.output_rate_hz).round() as usize).max(1);
    let rows = (0..trace.len())
        .step_by(step)
        .map(|k| AnalysisRow {
            t: times[k],
            w: load[k],
            p: position[k],
            zmag: zmag[k],
            f_hz,
            valid: u8::from(zmag[k].is_some()),
        })
        .collect();

    Ok(Analysis {
        f_hz,
        load,
        position,
        finger_force: ff,
        zmag,
        segments,
        fit,
        fit_source,
        rows,
    })
}

pub fn write_analysis<W: Write>(rows: &[AnalysisRow], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    if rows.is_empty() {
        w.write_record(ANALYSIS_HEADER)?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Structured suspension report written next to the analysis record.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub source: FitSource,
    pub f_hz: f64,
    pub samples: usize,
    pub duration_s: f64,
    pub residual_rms_n: f64,
    pub loaded_segments: usize,
    pub k1: LinearDrift,
    pub k2: LinearDrift,
    pub b1: LinearDrift,
    pub b2: LinearDrift,
}

impl FitReport {
    pub fn new(a: &Analysis) -> Self {
        FitReport {
            source: a.fit_source,
            f_hz: a.f_hz,
            samples: a.fit.samples,
            duration_s: a.fit.duration_s,
            residual_rms_n: a.fit.residual_rms_n,
            loaded_segments: a.segments.iter().filter(|s| s.loaded).count(),
            k1: a.fit.k1,
            k2: a.fit.k2,
            b1: a.fit.b1,
            b2: a.fit.b2,
        }
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }
}
