//! The acceptance suite. Each criterion runs end to end through the library
//! and reports one line; the plate can be swapped out to check that a
//! corrupted parameter set is caught.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::control::synthesis::log_grid;
use crate::control::{synthesize, ControlChannelState, SynthesisConfig};
use crate::dsp::{amplitude, BiquadCoeffs, LockIn, Nco, PhaseBranch};
use crate::error::{Error, Result};
use crate::estimation::{identify, write_analysis, PipelineConfig};
use crate::finger::oracle::{order2_mobility, order4_mobilities};
use crate::finger::{
    mid_band_admittance, phalanx_velocity_tf, skin_admittance, tissue_velocity_tf, FingerModel, Order2, Preset,
};
use crate::plant::{run_closed_loop, Drive, DriveFrequency, Experiment, PlateParams, Profile, SimTrace, TouchScenario};
use crate::PROTOCOL_FREQUENCIES_HZ;

pub const CRITERIA: [u32; 11] = [1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11];

#[derive(Clone, Debug, PartialEq)]
pub struct CriterionResult {
    pub id: u32,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
    pub limit: Duration,
}

impl CriterionResult {
    /// `C<id> PASS|FAIL <name> elapsed=<s> limit=<s> | <detail>`
    pub fn line(&self) -> String {
        format!(
            "C{} {} {} elapsed={:.1}s limit={}s | {}",
            self.id,
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.elapsed.as_secs_f64(),
            self.limit.as_secs(),
            self.detail
        )
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct AcceptanceReport {
    pub results: Vec<CriterionResult>,
}

impl AcceptanceReport {
    pub fn all_passed(&self) -> bool {
        !self.results.is_empty() && self.results.iter().all(|r| r.passed)
    }
}

/// What a criterion measured, before timing is attached.
struct Verdict {
    passed: bool,
    detail: String,
}

fn verdict(passed: bool, detail: String) -> Result<Verdict> {
    Ok(Verdict { passed, detail })
}

fn meta(id: u32) -> (&'static str, u64) {
    match id {
        1 => ("resonance", 30),
        2 => ("tracking", 300),
        3 => ("harmonic-leakage", 60),
        4 => ("load-robustness", 300),
        5 => ("impedance-round-trip", 600),
        6 => ("suspension-regression", 120),
        7 => ("transfer-identities", 5),
        8 => ("model-plateau", 5),
        9 => ("synthesis-identity", 5),
        10 => ("phase-branch-cut", 120),
        11 => ("determinism", 60),
        _ => ("unknown", 0),
    }
}

/// Runs one criterion against `plate`. Errors inside a criterion become a
/// failed line, never a panic.
pub fn run_criterion(id: u32, plate: &PlateParams) -> CriterionResult {
    let (name, limit_s) = meta(id);
    let start = Instant::now();
    let v = match id {
        1 => resonance(plate),
        2 => tracking(plate),
        3 => harmonic_leakage(),
        4 => load_robustness(plate),
        5 => impedance_round_trip(plate),
        6 => suspension_regression(plate),
        7 => transfer_identities(),
        8 => model_plateau(),
        9 => synthesis_identity(),
        10 => phase_branch_cut(plate),
        11 => determinism(plate),
        _ => Err(Error::param("criterion", format!("no criterion {id}"))),
    };
    let elapsed = start.elapsed();
    let limit = Duration::from_secs(limit_s);
    let (mut passed, mut detail) = match v {
        Ok(v) => (v.passed, v.detail),
        Err(e) => (false, format!("error[{}]: {e}", e.kind())),
    };
    if elapsed > limit {
        passed = false;
        detail.push_str("; over time limit");
    }
    CriterionResult {
        id,
        name,
        passed,
        detail,
        elapsed,
        limit,
    }
}

/// All criteria, or those listed in `only`, on the default plate.
pub fn run_acceptance(only: &[u32]) -> AcceptanceReport {
    run_acceptance_with(&PlateParams::default(), only)
}

pub fn run_acceptance_with(plate: &PlateParams, only: &[u32]) -> AcceptanceReport {
    let ids: Vec<u32> = if only.is_empty() { CRITERIA.to_vec() } else { only.to_vec() };
    AcceptanceReport {
        results: ids.into_iter().map(|id| run_criterion(id, plate)).collect(),
    }
}

// ---------------------------------------------------------------------------
// shared measurement helpers

/// Least-squares fit of a constant plus tones at `freqs` to `xs` sampled at
/// `rate` starting at time `t0`. Returns the complex amplitude of each tone,
/// `x ≈ Re(A e^{jωt})`.
pub fn tone_fit(xs: &[f64], t0: f64, rate: f64, freqs: &[f64]) -> Result<Vec<Complex64>> {
    let p = 1 + 2 * freqs.len();
    if xs.len() < 2 * p {
        return Err(Error::InsufficientData {
            needed: 2 * p,
            available: xs.len(),
        });
    }
    let mut gram = DMatrix::<f64>::zeros(p, p);
    let mut rhs = DVector::<f64>::zeros(p);
    let mut row = vec![0.0; p];
    for (k, &x) in xs.iter().enumerate() {
        let t = t0 + k as f64 / rate;
        row[0] = 1.0;
        for (j, &f) in freqs.iter().enumerate() {
            let (s, c) = (2.0 * PI * f * t).sin_cos();
            row[1 + 2 * j] = c;
            row[2 + 2 * j] = s;
        }
        for a in 0..p {
            rhs[a] += row[a] * x;
            for b in a..p {
                gram[(a, b)] += row[a] * row[b];
            }
        }
    }
    for a in 0..p {
        for b in 0..a {
            gram[(a, b)] = gram[(b, a)];
        }
    }
    let sol = gram.cholesky().ok_or(Error::RankDeficient)?.solve(&rhs);
    Ok((0..freqs.len())
        .map(|j| Complex64::new(sol[1 + 2 * j], -sol[2 + 2 * j]))
        .collect())
}

fn center(trace: &SimTrace) -> Vec<f64> {
    trace.column(|r| 0.5 * (r.x1 + r.x2))
}

fn tone_at(trace: &SimTrace, t0: f64, t1: f64, f: f64) -> Result<Complex64> {
    let w = trace.window(t0, t1);
    let t_start = w.rows.first().map_or(t0, |r| r.t);
    Ok(tone_fit(&center(&w), t_start, trace.rate_hz, &[f])?[0])
}

/// Vertex of the parabola through three equally spaced samples, as an
/// offset in steps from the middle one.
fn parabolic_offset(a: f64, b: f64, c: f64) -> f64 {
    let den = a - 2.0 * b + c;
    if den == 0.0 {
        0.0
    } else {
        0.5 * (a - c) / den
    }
}

fn open_loop(plate: &PlateParams, frequency: DriveFrequency, current: f64, duration_s: f64) -> Experiment {
    let mut e = Experiment::tracking(frequency.at(0.0), 0.0, duration_s);
    e.plate = *plate;
    e.frequency = frequency;
    e.drive = Drive::Open {
        current: Profile::constant(current),
        phase_offset_deg: 0.0,
    };
    e
}

fn rel_err(got: f64, want: f64) -> f64 {
    (got - want) / want
}

// ---------------------------------------------------------------------------
// 1: resonance of the unloaded plate, two independent routes

const RESONANCE_HZ: f64 = 189.4;

/// Stepped sine: steady-state tone fits on a coarse then a 1 Hz grid, peak
/// refined by a parabola through log magnitudes.
pub fn resonance_stepped(plate: &PlateParams) -> Result<f64> {
    let gain = |f: f64| -> Result<f64> {
        let tr = run_closed_loop(&open_loop(plate, DriveFrequency::Fixed { f_hz: f }, 0.01, 0.6))?;
        Ok(tone_at(&tr, 0.25, 0.6, f)?.norm())
    };
    let coarse: Vec<f64> = (0..=16).map(|k| 150.0 + 5.0 * k as f64).collect();
    let mut best = (coarse[0], 0.0);
    for &f in &coarse {
        let g = gain(f)?;
        if g > best.1 {
            best = (f, g);
        }
    }
    let fine: Vec<f64> = (-4..=4).map(|k| best.0 + k as f64).collect();
    let mags = fine.iter().map(|&f| gain(f).map(f64::ln)).collect::<Result<Vec<_>>>()?;
    let k = (1..mags.len() - 1)
        .max_by(|&a, &b| mags[a].total_cmp(&mags[b]))
        .expect("nine points");
    Ok(fine[k] + parabolic_offset(mags[k - 1], mags[k], mags[k + 1]))
}

/// Slow chirp, transfer function from the FFT of displacement over the FFT of
/// current.
pub fn resonance_chirp(plate: &PlateParams) -> Result<f64> {
    let sweep = DriveFrequency::Sweep {
        f_start_hz: 140.0,
        f_end_hz: 240.0,
        t_start_s: 0.2,
        t_end_s: 8.2,
    };
    let tr = run_closed_loop(&open_loop(plate, sweep, 0.01, 8.5))?;
    let n = tr.len();
    let mut x: Vec<Complex64> = center(&tr).into_iter().map(|v| Complex64::new(v, 0.0)).collect();
    let mut i: Vec<Complex64> = tr.column(|r| r.i1).into_iter().map(|v| Complex64::new(v, 0.0)).collect();
    let fft = FftPlanner::new().plan_fft_forward(n);
    fft.process(&mut x);
    fft.process(&mut i);
    let df = tr.rate_hz / n as f64;
    let lo = (150.0 / df).ceil() as usize;
    let hi = (230.0 / df).floor() as usize;
    let h: Vec<f64> = (lo..=hi).map(|k| (x[k] / i[k]).norm().ln()).collect();
    let k = (1..h.len() - 1)
        .max_by(|&a, &b| h[a].total_cmp(&h[b]))
        .ok_or(Error::InsufficientData { needed: 3, available: h.len() })?;
    Ok((lo + k) as f64 * df + parabolic_offset(h[k - 1], h[k], h[k + 1]) * df)
}

fn resonance(plate: &PlateParams) -> Result<Verdict> {
    let a = resonance_stepped(plate)?;
    let b = resonance_chirp(plate)?;
    let ok = (a - RESONANCE_HZ).abs() <= 2.0 && (b - RESONANCE_HZ).abs() <= 2.0;
    verdict(ok, format!("stepped {a:.2} Hz, chirp {b:.2} Hz, target {RESONANCE_HZ} ± 2"))
}

// ---------------------------------------------------------------------------
// 2: amplitude tracking under a swiping finger

pub const TRACKING_AMPLITUDES_M: [f64; 3] = [1e-6, 1e-5, 1e-4];

/// Closed loop at 261 Hz with a firm finger sliding back and forth at 0.5 N.
pub fn tracking_experiment(plate: &PlateParams, a_ref: f64) -> Experiment {
    let mut e = Experiment::tracking(261.0, a_ref, 10.0);
    e.plate = *plate;
    e.seed = 11;
    e.scenario = TouchScenario {
        finger: Some(Preset::FirmTouch.model(2).expect("order 2")),
        scaling: None,
        load: Profile::constant(0.5),
        position: Profile::Triangle {
            min: 0.0125,
            max: 0.0425,
            period_s: 4.0,
        },
        contact: vec![[0.0, 10.0]],
        scan_velocity: Some(Profile::constant(0.015)),
    };
    e
}

/// `(smallest, largest)` tone amplitude over 1 s windows of the second half
/// of the run, and the tone amplitude over the whole second half.
pub fn tracking_errors(trace: &SimTrace, f: f64) -> Result<(f64, f64, f64)> {
    let mut amps = Vec::new();
    for k in 0..5 {
        let t0 = 5.0 + k as f64;
        amps.push(tone_at(trace, t0, t0 + 1.0, f)?.norm());
    }
    let spectral = tone_at(trace, 5.0, 10.0, f)?.norm();
    let lo = amps.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = amps.iter().cloned().fold(0.0, f64::max);
    Ok((lo, hi, spectral))
}

fn tracking(plate: &PlateParams) -> Result<Verdict> {
    let mut ok = true;
    let mut detail = String::new();
    for &a in &TRACKING_AMPLITUDES_M {
        let tr = run_closed_loop(&tracking_experiment(plate, a))?;
        let (lo, hi, spec) = tracking_errors(&tr, 261.0)?;
        let worst = rel_err(lo, a).abs().max(rel_err(hi, a).abs());
        let mut pass = worst <= 0.05;
        if a <= 1e-6 {
            pass &= (spec - a).abs() <= 0.02e-6;
        }
        ok &= pass;
        let _ = write!(
            detail,
            "{:.0} um: 1 s windows {:+.2}%..{:+.2}%, spectral err {:.4} um; ",
            a * 1e6,
            100.0 * rel_err(lo, a),
            100.0 * rel_err(hi, a),
            (spec - a) * 1e6
        );
    }
    verdict(ok, detail.trim_end_matches("; ").to_string())
}

// ---------------------------------------------------------------------------
// 3: leakage of sensing error into the control signal

/// Sensing error added to an ideal plant's output in the signal-level loop.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SensingError {
    pub harmonic: u32,
    /// Relative to the commanded fundamental.
    pub harmonic_amplitude: f64,
    pub harmonic_phase: f64,
    pub offset: f64,
}

/// Largest harmonic and offset drawn by the randomized check: fifty times
/// the plate's own distortion, and a 2% sensor offset.
pub const MAX_INJECTED_HARMONIC: f64 = 0.1;
pub const MAX_INJECTED_OFFSET: f64 = 0.02;

/// Signal-level loop at 20 Hz: lock-in at the control rate with one tick of
/// latency, the synthesized amplitude controller, and a unity plant whose
/// output carries `err`. Returns the peak deviation of the control signal
/// from its mean over the last 2 s, relative to that mean.
pub fn control_ripple(coeffs: BiquadCoeffs, err: SensingError) -> Result<f64> {
    let rate = 5000.0;
    let f = 20.0;
    let mut li = LockIn::new(f, rate, 10.0)?;
    let mut ch = ControlChannelState::new(1.0, coeffs, Some(0.0));
    let mut delayed = 0.0;
    let n = (6.0 * rate) as usize;
    let keep = (2.0 * rate) as usize;
    let mut us = Vec::with_capacity(keep);
    for k in 0..n {
        let t = k as f64 / rate;
        let u = ch.output();
        let w = 2.0 * PI * f * t;
        let y = u * w.cos()
            + err.harmonic_amplitude * (err.harmonic as f64 * w + err.harmonic_phase).cos()
            + err.offset;
        let x = li.update(delayed);
        delayed = y;
        ch.step(amplitude(x));
        if k >= n - keep {
            us.push(u);
        }
    }
    let mean = us.iter().sum::<f64>() / us.len() as f64;
    Ok(us.iter().map(|u| (u - mean).abs()).fold(0.0, f64::max) / mean)
}

fn harmonic_leakage() -> Result<Verdict> {
    let d = synthesize(&SynthesisConfig::default())?;
    let clean = control_ripple(
        d.discrete,
        SensingError {
            harmonic: 2,
            harmonic_amplitude: 0.0,
            harmonic_phase: 0.0,
            offset: 0.0,
        },
    )?;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    let cases = 48;
    for _ in 0..cases {
        let e = SensingError {
            harmonic: rng.random_range(2..=5),
            harmonic_amplitude: rng.random_range(0.0..=MAX_INJECTED_HARMONIC),
            harmonic_phase: rng.random_range(0.0..2.0 * PI),
            offset: rng.random_range(-MAX_INJECTED_OFFSET..=MAX_INJECTED_OFFSET),
        };
        worst = worst.max(control_ripple(d.discrete, e)?);
    }
    let full = control_ripple(
        d.discrete,
        SensingError {
            harmonic: 2,
            harmonic_amplitude: 1.0,
            harmonic_phase: 0.0,
            offset: 0.0,
        },
    )?;
    verdict(
        worst < 0.005,
        format!(
            "control ripple: estimator alone {:.3}%, worst of {cases} injected {:.3}% (limit 0.5%); \
             same-amplitude 2nd harmonic {:.2}% for reference",
            100.0 * clean,
            100.0 * worst,
            100.0 * full
        ),
    )
}

// ---------------------------------------------------------------------------
// 4: closed-loop bandwidth with and without an impedance-matched finger

pub const BANDWIDTH_DRIVE_HZ: f64 = 111.0;

/// Unloaded mechanical impedance magnitude of the plate at `f`, N·s/m.
pub fn plate_impedance(plate: &PlateParams, f: f64) -> f64 {
    let w = 2.0 * PI * f;
    let b = plate.b1 + plate.b2;
    let reactance = plate.mass * w - (plate.k1 + plate.k2) / w;
    b.hypot(reactance)
}

/// Finger resonant at the drive frequency, so its impedance there is its
/// damping, set equal to the plate's impedance magnitude.
pub fn matched_finger(plate: &PlateParams, f: f64) -> Order2 {
    let m = 0.005;
    let k = m * (2.0 * PI * f).powi(2);
    Order2::from_si(m, plate_impedance(plate, f), k)
}

/// Modulation transfer `|T(f_m)|` of the amplitude loop: the reference is
/// modulated by `depth` at `f_m` and the sidebands of the center
/// displacement are fitted.
pub fn modulation_gain(plate: &PlateParams, finger: Option<Order2>, f_m: f64) -> Result<f64> {
    let f = BANDWIDTH_DRIVE_HZ;
    let (a0, depth) = (1e-5, 0.1);
    let settle = 1.5;
    let span = (2.0f64).max(2.0 / f_m);
    let mut e = Experiment::tracking(f, a0, settle + span);
    e.plate = *plate;
    e.drive = Drive::Closed {
        reference: Profile::Sine {
            mean: a0,
            amplitude: depth * a0,
            freq_hz: f_m,
            phase_deg: 0.0,
        },
    };
    if let Some(m) = finger {
        e.scenario = TouchScenario::steady(FingerModel::Order2(m), 0.5, plate.spacing / 2.0, vec![[0.0, settle + span]]);
    }
    let tr = run_closed_loop(&e)?.window(settle, settle + span);
    let t0 = tr.rows.first().map_or(settle, |r| r.t);
    let z = tone_fit(&center(&tr), t0, tr.rate_hz, &[f, f - f_m, f + f_m])?;
    Ok((z[1].norm() + z[2].norm()) / z[0].norm() / depth)
}

/// -3 dB frequency of a sampled magnitude response, interpolated in
/// log-frequency; the first sample is the low-frequency reference.
pub fn bandwidth_from(freqs: &[f64], gains: &[f64]) -> Option<f64> {
    let level = gains[0] / 2f64.sqrt();
    for k in 1..gains.len() {
        if gains[k] < level {
            let (g0, g1) = (gains[k - 1], gains[k]);
            let u = (g0 - level) / (g0 - g1);
            return Some((freqs[k - 1].ln() + u * (freqs[k].ln() - freqs[k - 1].ln())).exp());
        }
    }
    None
}

pub fn loop_bandwidth(plate: &PlateParams, finger: Option<Order2>) -> Result<f64> {
    let grid = log_grid(0.5, 15.0, 12);
    let gains = grid
        .iter()
        .map(|&fm| modulation_gain(plate, finger, fm))
        .collect::<Result<Vec<_>>>()?;
    bandwidth_from(&grid, &gains).ok_or(Error::Undefined("no -3 dB point below 15 Hz"))
}

fn load_robustness(plate: &PlateParams) -> Result<Verdict> {
    let f = BANDWIDTH_DRIVE_HZ;
    let finger = matched_finger(plate, f);
    let zf = FingerModel::Order2(finger).impedance(f).norm();
    let unloaded = loop_bandwidth(plate, None)?;
    let loaded = loop_bandwidth(plate, Some(finger))?;
    let drop = 1.0 - loaded / unloaded;
    verdict(
        (drop - 0.5).abs() <= 0.15,
        format!(
            "|Zf| {zf:.2} vs |Zp| {:.2} N s/m; bandwidth {unloaded:.2} -> {loaded:.2} Hz, drop {:.1}% (50 ± 15)",
            plate_impedance(plate, f),
            100.0 * drop
        ),
    )
}

// ---------------------------------------------------------------------------
// 5: impedance identification round trip

/// Recovered and analytic `|Z_f|` for one model at one frequency.
pub fn impedance_case(plate: &PlateParams, preset: Preset, order: usize, f: f64) -> Result<(f64, f64)> {
    let model = preset.model(order)?;
    let w = match preset {
        Preset::LightTouch => 0.3,
        Preset::FirmTouch => 0.8,
    };
    let mut e = Experiment::tracking(f, 0.02 / (2.0 * PI * f), 4.5);
    e.plate = *plate;
    e.seed = 7;
    e.scenario = TouchScenario::steady(model, w, 0.02, vec![[1.5, 4.5]]);
    let tr = run_closed_loop(&e)?;
    let cfg = PipelineConfig {
        plate: *plate,
        ..Default::default()
    };
    let a = identify(&tr, f, &cfg)?;
    let z = a.median_zmag(3.0, 4.5).ok_or(Error::Undefined("no valid impedance samples"))?;
    Ok((z, model.impedance(f).norm()))
}

pub fn impedance_tolerance(f: f64) -> f64 {
    if f <= 31.0 {
        0.15
    } else {
        0.10
    }
}

fn impedance_round_trip(plate: &PlateParams) -> Result<Verdict> {
    let cases: Vec<(Preset, usize, f64)> = Preset::ALL
        .iter()
        .flat_map(|&p| [2, 4].into_iter().flat_map(move |o| PROTOCOL_FREQUENCIES_HZ.map(|f| (p, o, f))))
        .collect();
    // independent scenarios, one per worker; results come back in case order
    let results = cases
        .par_iter()
        .map(|&(p, o, f)| impedance_case(plate, p, o, f))
        .collect::<Result<Vec<_>>>()?;
    let mut worst = (0.0f64, String::new());
    let mut failures = Vec::new();
    for (&(preset, order, f), &(z, want)) in cases.iter().zip(&results) {
        let e = rel_err(z, want);
        let tol = impedance_tolerance(f);
        let tag = format!("{} o{order} {f} Hz {:+.1}%", preset.name(), 100.0 * e);
        if e.abs() > tol {
            failures.push(tag.clone());
        }
        if e.abs() / tol > worst.0 {
            worst = (e.abs() / tol, tag);
        }
    }
    let n = cases.len();
    let detail = if failures.is_empty() {
        format!("{n} cases within tolerance; closest to limit: {}", worst.1)
    } else {
        format!("{} of {n} outside tolerance: {}", failures.len(), failures.join(", "))
    };
    verdict(failures.is_empty(), detail)
}

// ---------------------------------------------------------------------------
// 6: drifting suspension

pub const DRIFT_K1: f64 = 5.0;

/// Unloaded run at 20 Hz, 400 µm, with `k1` drifting at `slope` N/m/s.
pub fn drift_fit(plate: &PlateParams, slope: f64) -> Result<(f64, f64, f64)> {
    let mut e = Experiment::tracking(20.0, 4e-4, 10.0);
    e.plate = *plate;
    e.plate.drift.k1 = slope;
    e.seed = 5;
    let tr = run_closed_loop(&e)?;
    let cfg = PipelineConfig {
        plate: e.plate,
        ..Default::default()
    };
    let a = identify(&tr, 20.0, &cfg)?;
    Ok((a.fit.k1.a, a.fit.k1.c, a.fit.duration_s))
}

fn suspension_regression(plate: &PlateParams) -> Result<Verdict> {
    let (a, c, _) = drift_fit(plate, DRIFT_K1)?;
    let (a0, c0, t0) = drift_fit(plate, 0.0)?;
    let drift_ok = rel_err(a, DRIFT_K1).abs() <= 0.1;
    let flat_ok = (a0 * t0).abs() < 0.01 * c0;
    verdict(
        drift_ok && flat_ok,
        format!(
            "drift: a {a:.3} N/m/s ({:+.1}%), c {c:.0} N/m; no drift: |a|T {:.2} N/m vs 1% of c {:.0}",
            100.0 * rel_err(a, DRIFT_K1),
            (a0 * t0).abs(),
            0.01 * c0
        ),
    )
}

// ---------------------------------------------------------------------------
// 7, 8, 9: model and synthesis identities

fn rel_c(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / b.norm()
}

fn transfer_identities() -> Result<Verdict> {
    let mut sum_err: f64 = 0.0;
    let mut oracle_err: f64 = 0.0;
    for preset in Preset::ALL {
        let m4 = preset.order4();
        let m2 = preset.order2();
        for f in log_grid(1.0, 1000.0, 100) {
            let vs = skin_admittance(&m4, f);
            let vp = phalanx_velocity_tf(&m4, f);
            let vt = tissue_velocity_tf(&m4, f);
            sum_err = sum_err.max(rel_c(vp + vt, vs));
            let o = order4_mobilities(&m4, f);
            oracle_err = oracle_err
                .max(rel_c(vs, o.skin))
                .max(rel_c(vp, o.phalanx))
                .max(rel_c(vt, o.tissue));
            let y2 = 1.0 / FingerModel::Order2(m2).impedance(f);
            oracle_err = oracle_err.max(rel_c(y2, order2_mobility(&m2, f)));
        }
    }
    verdict(
        sum_err <= 1e-9 && oracle_err <= 1e-9,
        format!("Vs = Vp + Vt to {sum_err:.1e}; closed form vs state-space oracle to {oracle_err:.1e}"),
    )
}

fn model_plateau() -> Result<Verdict> {
    let m = Preset::LightTouch.order4();
    let y = mid_band_admittance(&m);
    let k = m.effective_stiffness();
    let ok = rel_err(y, 0.67).abs() <= 0.1 && (100.0..=250.0).contains(&k);
    verdict(
        ok,
        format!("mid-band admittance {y:.4} m/(N s) (0.67 ± 10%), effective stiffness {k:.1} N/m (100..250)"),
    )
}

fn synthesis_identity() -> Result<Verdict> {
    let d = synthesize(&SynthesisConfig::default())?;
    verdict(
        d.loop_error.within(1.0, 10.0),
        format!(
            "realized vs target {:.3} dB / {:.2} deg over 0.1-20 Hz; reduction {:.3} dB / {:.2} deg",
            d.loop_error.mag_db, d.loop_error.phase_deg, d.reduction_error.mag_db, d.reduction_error.phase_deg
        ),
    )
}

// ---------------------------------------------------------------------------
// 10: sweeping through the -180 degree crossing

pub struct BranchSweep {
    /// Largest tick-to-tick change of either transducer's phase, deg.
    pub max_jump_deg: f64,
    /// Same with the standard (-180, 180] branch, for comparison.
    pub max_jump_standard_deg: f64,
    pub phase_start_deg: f64,
    pub phase_end_deg: f64,
    /// Largest deviation of the amplitude command from the reference.
    pub max_command_dev: f64,
}

pub const SWEEP_REFERENCE_M: f64 = 1e-5;

/// Replays the controller's estimator on the recorded sensor samples: the
/// same oscillator, decimation and one-tick latency as the loop.
pub fn branch_sweep(plate: &PlateParams) -> Result<BranchSweep> {
    let (t_start, t_end) = (1.5, 9.5);
    let mut e = Experiment::tracking(200.0, SWEEP_REFERENCE_M, t_end);
    e.plate = *plate;
    e.seed = 13;
    e.frequency = DriveFrequency::Sweep {
        f_start_hz: 200.0,
        f_end_hz: 240.0,
        t_start_s: t_start,
        t_end_s: t_end,
    };
    let tr = run_closed_loop(&e)?;
    let cfg = &e.control;
    let sub = cfg.substeps()?;
    let mut nco = Nco::new(e.frequency.at(0.0), cfg.sim_rate_hz);
    let mut li = [
        LockIn::new(200.0, cfg.control_rate_hz, cfg.filter_cutoff_hz)?,
        LockIn::new(200.0, cfg.control_rate_hz, cfg.filter_cutoff_hz)?,
    ];
    let mut pending: Option<[f64; 2]> = None;
    let mut prev: Option<[f64; 4]> = None;
    let mut out = BranchSweep {
        max_jump_deg: 0.0,
        max_jump_standard_deg: 0.0,
        phase_start_deg: f64::NAN,
        phase_end_deg: f64::NAN,
        max_command_dev: 0.0,
    };
    for (j, r) in tr.rows.iter().enumerate() {
        nco.retune(e.frequency.at(r.t));
        let theta = nco.angle();
        if j % sub == 0 {
            let sample = pending.replace([r.hall1, r.hall2]).unwrap_or([0.0, 0.0]);
            let x = [li[0].update_with_angle(sample[0], theta), li[1].update_with_angle(sample[1], theta)];
            if r.t >= t_start {
                let ph = [
                    PhaseBranch::Shifted.phase(x[0])?,
                    PhaseBranch::Shifted.phase(x[1])?,
                    PhaseBranch::Standard.phase(x[0])?,
                    PhaseBranch::Standard.phase(x[1])?,
                ];
                if let Some(p) = prev {
                    for c in 0..2 {
                        out.max_jump_deg = out.max_jump_deg.max((ph[c] - p[c]).abs());
                        out.max_jump_standard_deg = out.max_jump_standard_deg.max((ph[c + 2] - p[c + 2]).abs());
                    }
                } else {
                    out.phase_start_deg = ph[0];
                }
                out.phase_end_deg = ph[0];
                prev = Some(ph);
                out.max_command_dev = out.max_command_dev.max((r.a_cmd - SWEEP_REFERENCE_M).abs() / SWEEP_REFERENCE_M);
            }
        }
        nco.advance();
    }
    Ok(out)
}

fn phase_branch_cut(plate: &PlateParams) -> Result<Verdict> {
    let s = branch_sweep(plate)?;
    let crossed = s.phase_start_deg > -180.0 && s.phase_end_deg < -180.0;
    verdict(
        crossed && s.max_jump_deg <= 5.0 && s.max_command_dev <= 0.1,
        format!(
            "phase {:.1} -> {:.1} deg, max step {:.3} deg (standard branch {:.1}); command within {:.2}% of steady",
            s.phase_start_deg,
            s.phase_end_deg,
            s.max_jump_deg,
            s.max_jump_standard_deg,
            100.0 * s.max_command_dev
        ),
    )
}

// ---------------------------------------------------------------------------
// 11: byte-identical reruns

pub fn determinism_bytes(plate: &PlateParams, seed: u64) -> Result<(Vec<u8>, Vec<u8>)> {
    let mut e = tracking_experiment(plate, 1e-5);
    e.duration_s = 1.5;
    e.scenario.contact = vec![[0.5, 1.5]];
    e.seed = seed;
    let tr = run_closed_loop(&e)?;
    let mut trace = Vec::new();
    tr.write_csv(&mut trace)?;
    let cfg = PipelineConfig {
        plate: *plate,
        ..Default::default()
    };
    let mut analysis = Vec::new();
    write_analysis(&identify(&tr, 261.0, &cfg)?.rows, &mut analysis)?;
    Ok((trace, analysis))
}

fn determinism(plate: &PlateParams) -> Result<Verdict> {
    let a = determinism_bytes(plate, 42)?;
    let b = determinism_bytes(plate, 42)?;
    let c = determinism_bytes(plate, 43)?;
    verdict(
        a == b && a.0 != c.0,
        format!(
            "trace {} bytes identical: {}, analysis identical: {}, other seed differs: {}",
            a.0.len(),
            a.0 == b.0,
            a.1 == b.1,
            a.0 != c.0
        ),
    )
}
