//! Intensity-match quantities: velocity per shear force, the normal/shear
//! force ratio, and spread statistics.

use std::io::{Read, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal};
use serde::{Deserialize, Serialize};

use super::model::{skin_admittance, FingerModel, LoadScaling, Order4, Preset};
use crate::error::{Error, Result};
use crate::PROTOCOL_FREQUENCIES_HZ;

/// Load that separates light from firm touch, N.
pub const LOAD_SPLIT_N: f64 = 0.5;

pub const MATCH_HEADER: [&str; 6] = ["f_hz", "v", "F_a", "F_r", "W", "subject_id"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatchRecord {
    pub f_hz: f64,
    /// Intensity-matched plate velocity amplitude, m/s.
    pub v: f64,
    /// Shear force amplitude of the reference stimulus, N.
    #[serde(rename = "F_a")]
    pub f_a: f64,
    /// Normal reaction force amplitude at the match, N.
    #[serde(rename = "F_r")]
    pub f_r: f64,
    #[serde(rename = "W")]
    pub w: f64,
    pub subject_id: String,
}

impl MatchRecord {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("f_hz", self.f_hz), ("v", self.v), ("F_a", self.f_a), ("F_r", self.f_r), ("W", self.w)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Schema(format!("{name} must be finite and non-negative, got {v}")));
            }
        }
        Ok(())
    }
}

pub fn beta(record: &MatchRecord) -> Result<f64> {
    if record.f_a == 0.0 {
        return Err(Error::Undefined("beta with zero shear force"));
    }
    Ok(record.f_r / record.f_a)
}

/// Population standard deviation over mean.
pub fn coefficient_of_variation(samples: &[f64]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::InsufficientData { needed: 1, available: 0 });
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    if mean == 0.0 {
        return Err(Error::Undefined("coefficient of variation with zero mean"));
    }
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    Ok(var.sqrt() / mean)
}

/// Matched velocity per unit shear force.
pub fn velocity_per_shear_force(record: &MatchRecord) -> Result<f64> {
    if record.f_a == 0.0 {
        return Err(Error::Undefined("v/F_a with zero shear force"));
    }
    Ok(record.v / record.f_a)
}

/// Records with load below / at-or-above the split.
pub fn split_by_load(records: &[MatchRecord], split_n: f64) -> (Vec<MatchRecord>, Vec<MatchRecord>) {
    records.iter().cloned().partition(|r| r.w < split_n)
}

/// Per-frequency mean of a per-record statistic, in ascending frequency.
pub fn per_frequency_mean(
    records: &[MatchRecord],
    stat: impl Fn(&MatchRecord) -> Result<f64>,
) -> Result<Vec<(f64, f64)>> {
    let mut freqs: Vec<f64> = records.iter().map(|r| r.f_hz).collect();
    freqs.sort_by(f64::total_cmp);
    freqs.dedup();
    freqs
        .into_iter()
        .map(|f| {
            let vals = records
                .iter()
                .filter(|r| r.f_hz == f)
                .map(&stat)
                .collect::<Result<Vec<_>>>()?;
            Ok((f, vals.iter().sum::<f64>() / vals.len() as f64))
        })
        .collect()
}

/// Geometric mean of `|V_s / F|` over the protocol frequencies; the
/// single-number "mid-band" admittance of a fourth-order model.
pub fn mid_band_admittance(model: &Order4) -> f64 {
    let n = PROTOCOL_FREQUENCIES_HZ.len() as f64;
    (PROTOCOL_FREQUENCIES_HZ
        .iter()
        .map(|&f| skin_admittance(model, f).norm().ln())
        .sum::<f64>()
        / n)
        .exp()
}

pub fn read_matches<R: Read>(reader: R) -> Result<Vec<MatchRecord>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let header = rdr.headers()?.clone();
    if header.iter().ne(MATCH_HEADER.iter().copied()) {
        return Err(Error::Schema(format!(
            "match header must be `{}`, got `{}`",
            MATCH_HEADER.join(","),
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut out = Vec::new();
    for row in rdr.deserialize() {
        let r: MatchRecord = row?;
        r.validate()?;
        out.push(r);
    }
    Ok(out)
}

pub fn write_matches<W: Write>(writer: W, records: &[MatchRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Parameters for a synthetic matching experiment: each subject matches
/// the shear stimulus by skin velocity through the shear model, with a
/// per-subject lognormal gain; the normal reaction follows the normal model
/// at the subject's load.
#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticMatches {
    pub subjects: usize,
    pub shear_force_n: f64,
    pub shear_model: Order4,
    pub normal_model: FingerModel,
    pub scaling: Option<LoadScaling>,
    pub loads_n: Vec<f64>,
    pub spread_cv: f64,
    pub seed: u64,
}

impl Default for SyntheticMatches {
    fn default() -> Self {
        SyntheticMatches {
            subjects: 10,
            shear_force_n: 0.05,
            shear_model: Preset::LightTouch.order4(),
            normal_model: FingerModel::Order4(Preset::LightTouch.order4()),
            scaling: Some(LoadScaling::table_endpoints()),
            loads_n: vec![0.3, 0.8],
            spread_cv: 0.2,
            seed: 1,
        }
    }
}

impl SyntheticMatches {
    pub fn generate(&self) -> Result<Vec<MatchRecord>> {
        if self.subjects == 0 || self.loads_n.is_empty() {
            return Err(Error::param("subjects", "need at least one subject and one load"));
        }
        if !(self.spread_cv >= 0.0) {
            return Err(Error::param("spread_cv", "must be non-negative"));
        }
        // lognormal with unit mean and the requested coefficient of variation
        let sigma = (1.0 + self.spread_cv * self.spread_cv).ln().sqrt();
        let gain = LogNormal::new(-0.5 * sigma * sigma, sigma).map_err(|e| Error::param("spread_cv", e.to_string()))?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut out = Vec::new();
        for s in 0..self.subjects {
            let w = self.loads_n[s % self.loads_n.len()];
            let g = gain.sample(&mut rng);
            let normal = match &self.scaling {
                Some(sc) => sc.apply(&self.normal_model, w),
                None => self.normal_model,
            };
            for &f in &PROTOCOL_FREQUENCIES_HZ {
                let v = g * skin_admittance(&self.shear_model, f).norm() * self.shear_force_n;
                out.push(MatchRecord {
                    f_hz: f,
                    v,
                    f_a: self.shear_force_n,
                    f_r: normal.impedance(f).norm() * v,
                    w,
                    subject_id: format!("s{s:03}"),
                });
            }
        }
        Ok(out)
    }
}
