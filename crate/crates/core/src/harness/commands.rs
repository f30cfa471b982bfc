//! The experiment commands. Each takes a validated scenario, computes
//! everything in memory and only then writes its outputs atomically.

use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use super::acceptance::{run_acceptance, AcceptanceReport};
use super::config::{check_protocol_frequency, ScenarioConfig};
use super::io::{write_atomic, write_atomic_str};
use crate::control::synthesize;
use crate::error::{Error, Result};
use crate::estimation::{identify, write_analysis, FitReport};
use crate::finger::{model_curves, write_curves};
use crate::plant::response::{phase_sensitivity, symmetric_gain};
use crate::plant::{run_closed_loop, SimTrace};

pub const CONTROLLERS_FILE: &str = "controllers.toml";
pub const TRACE_FILE: &str = "trace.csv";
pub const ANALYSIS_FILE: &str = "analysis.csv";
pub const FIT_REPORT_FILE: &str = "fit_report.toml";
pub const CURVES_FILE: &str = "curves.csv";
pub const ACCEPTANCE_FILE: &str = "acceptance.txt";

/// What a command wrote, plus a one-line summary for the terminal.
#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub summary: String,
}

/// One exported controller. The loop-shaping design does not depend on the
/// drive frequency; the plant gain and phase sensitivity used by the runtime
/// law do.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ControllerRecord {
    pub f_hz: f64,
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub design: Option<ControllerFields>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ControllerFields {
    pub sample_rate_hz: f64,
    pub bandwidth_hz: f64,
    pub filter_cutoff_hz: f64,
    pub fit_band_hz: (f64, f64),
    /// Reduced continuous controller, descending powers of s.
    pub num: Vec<f64>,
    pub den: Vec<f64>,
    pub full_order: usize,
    /// Tustin coefficients, `a0 = 1`.
    pub b0: f64,
    pub b1: f64,
    pub b2: f64,
    pub a1: f64,
    pub a2: f64,
    pub reduction_mag_db: f64,
    pub reduction_phase_deg: f64,
    pub loop_mag_db: f64,
    pub loop_phase_deg: f64,
    pub closed_loop_bandwidth_hz: f64,
    /// Unloaded symmetric plant gain, m/A.
    pub plant_gain_m_per_a: f64,
    pub plant_phase_deg: f64,
    pub phase_sensitivity: f64,
}

#[derive(Serialize)]
struct ControllerExport<'a> {
    controller: &'a [ControllerRecord],
}

pub fn controller_record(cfg: &ScenarioConfig, f_hz: f64) -> ControllerRecord {
    let fields = check_protocol_frequency(f_hz).and_then(|_| {
        let d = synthesize(&cfg.synthesis())?;
        let g = symmetric_gain(&cfg.plate, f_hz);
        Ok(ControllerFields {
            sample_rate_hz: d.config.control_rate_hz,
            bandwidth_hz: d.config.bandwidth_hz,
            filter_cutoff_hz: d.config.filter_cutoff_hz,
            fit_band_hz: d.config.fit_band_hz,
            num: d.reduced.num.clone(),
            den: d.reduced.den.clone(),
            full_order: d.full.order(),
            b0: d.discrete.b0,
            b1: d.discrete.b1,
            b2: d.discrete.b2,
            a1: d.discrete.a1,
            a2: d.discrete.a2,
            reduction_mag_db: d.reduction_error.mag_db,
            reduction_phase_deg: d.reduction_error.phase_deg,
            loop_mag_db: d.loop_error.mag_db,
            loop_phase_deg: d.loop_error.phase_deg,
            closed_loop_bandwidth_hz: d.closed_loop_bandwidth_hz,
            plant_gain_m_per_a: g.norm(),
            plant_phase_deg: g.arg().to_degrees(),
            phase_sensitivity: phase_sensitivity(&cfg.plate, f_hz),
        })
    });
    match fields {
        Ok(d) => ControllerRecord {
            f_hz,
            status: "ok".into(),
            design: Some(d),
        },
        Err(e) => ControllerRecord {
            f_hz,
            status: format!("error[{}]: {e}", e.kind()),
            design: None,
        },
    }
}

/// Frequencies to synthesize: `--freq` narrows the list to one.
fn synth_frequencies(cfg: &ScenarioConfig, only: Option<f64>) -> Vec<f64> {
    match only {
        Some(f) => vec![f],
        None => cfg.synth.frequencies_hz.clone(),
    }
}

pub fn synth_records(cfg: &ScenarioConfig, only: Option<f64>) -> Vec<ControllerRecord> {
    synth_frequencies(cfg, only)
        .par_iter()
        .map(|&f| controller_record(cfg, f))
        .collect()
}

pub fn render_controllers(records: &[ControllerRecord]) -> Result<String> {
    Ok(toml::to_string(&ControllerExport { controller: records })?)
}

/// Fails only when no record succeeded; individual failures are kept in the
/// export with their error.
pub fn cmd_synth(cfg: &ScenarioConfig, only: Option<f64>) -> Result<Outcome> {
    cfg.plate.validate()?;
    let records = synth_records(cfg, only);
    let ok = records.iter().filter(|r| r.design.is_some()).count();
    if ok == 0 {
        let first = records.first().map(|r| r.status.clone()).unwrap_or_else(|| "no frequencies".into());
        return Err(Error::Synthesis(first));
    }
    let path = cfg.out_dir.join(CONTROLLERS_FILE);
    write_atomic_str(&path, &render_controllers(&records)?)?;
    Ok(Outcome {
        files: vec![path],
        summary: format!("{ok}/{} controllers synthesized", records.len()),
    })
}

pub fn cmd_simulate(cfg: &ScenarioConfig) -> Result<Outcome> {
    let trace = run_closed_loop(&cfg.experiment()?)?;
    let path = cfg.out_dir.join(TRACE_FILE);
    write_atomic(&path, |w| trace.write_csv(w))?;
    Ok(Outcome {
        files: vec![path],
        summary: format!("{} samples at {} Hz", trace.len(), trace.rate_hz),
    })
}

pub fn read_trace(path: &Path) -> Result<SimTrace> {
    SimTrace::read_csv(BufReader::new(File::open(path)?))
}

/// A trace too short to analyze yields a header-only analysis and no fit
/// report.
pub fn cmd_identify(cfg: &ScenarioConfig, trace_path: &Path) -> Result<Outcome> {
    check_protocol_frequency(cfg.freq_hz)?;
    let trace = read_trace(trace_path)?;
    let analysis_path = cfg.out_dir.join(ANALYSIS_FILE);
    if trace.len() < 2 {
        write_atomic(&analysis_path, |w| write_analysis(&[], w))?;
        return Ok(Outcome {
            files: vec![analysis_path],
            summary: "trace is empty; wrote header only".into(),
        });
    }
    let mut pcfg = cfg.identify.clone();
    pcfg.plate = cfg.plate;
    let a = identify(&trace, cfg.freq_hz, &pcfg)?;
    let report = FitReport::new(&a).to_toml()?;
    let report_path = cfg.out_dir.join(FIT_REPORT_FILE);
    write_atomic(&analysis_path, |w| write_analysis(&a.rows, w))?;
    write_atomic_str(&report_path, &report)?;
    let valid = a.rows.iter().filter(|r| r.valid == 1).count();
    Ok(Outcome {
        files: vec![analysis_path, report_path],
        summary: format!("{} rows, {valid} with impedance, fit {:?}", a.rows.len(), a.fit_source),
    })
}

pub fn cmd_curves(cfg: &ScenarioConfig) -> Result<Outcome> {
    let model = cfg.curves.model.resolve()?;
    let rows = model_curves(&model, &cfg.curves.grid()?)?;
    let path = cfg.out_dir.join(CURVES_FILE);
    write_atomic(&path, |w| write_curves(w, &rows))?;
    Ok(Outcome {
        files: vec![path],
        summary: format!("{} frequencies, order {}", rows.len(), model.order()),
    })
}

/// Runs the suite, writes the report and hands it back; the caller decides
/// the exit status from `report.all_passed()`.
pub fn cmd_accept(cfg: &ScenarioConfig, only: &[u32]) -> Result<(Outcome, AcceptanceReport)> {
    let report = run_acceptance(only);
    let path = cfg.out_dir.join(ACCEPTANCE_FILE);
    write_atomic(&path, |w| {
        for r in &report.results {
            writeln!(w, "{}", r.line())?;
        }
        Ok(())
    })?;
    let passed = report.results.iter().filter(|r| r.passed).count();
    Ok((
        Outcome {
            files: vec![path],
            summary: format!("{passed}/{} criteria passed", report.results.len()),
        },
        report,
    ))
}
