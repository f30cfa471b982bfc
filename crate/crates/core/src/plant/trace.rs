use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const TRACE_HEADER: [&str; 12] = [
    "t", "x1", "x2", "hall1", "hall2", "i1", "i2", "a_cmd", "ph_cmd", "f_finger", "W_true", "P_true",
];

/// One sample of the simulation record, SI units.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub t: f64,
    pub x1: f64,
    pub x2: f64,
    pub hall1: f64,
    pub hall2: f64,
    pub i1: f64,
    pub i2: f64,
    /// Amplitude channel output, m.
    pub a_cmd: f64,
    /// Phase offset on coil 2, degrees.
    pub ph_cmd: f64,
    /// Force of the plate on the finger, N.
    pub f_finger: f64,
    #[serde(rename = "W_true")]
    pub w_true: f64,
    #[serde(rename = "P_true")]
    pub p_true: f64,
}

/// Per-row status bits kept alongside the record.
pub mod flags {
    pub const SATURATED: u8 = 1;
    pub const PHASE_HELD: u8 = 2;
    pub const CONTACT: u8 = 4;
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SimTrace {
    pub rate_hz: f64,
    pub rows: Vec<TraceRow>,
    /// Status bits per row; not part of the CSV.
    pub flags: Vec<u8>,
}

impl SimTrace {
    pub fn new(rate_hz: f64) -> Self {
        SimTrace {
            rate_hz,
            rows: Vec::new(),
            flags: Vec::new(),
        }
    }

    pub fn with_capacity(rate_hz: f64, n: usize) -> Self {
        SimTrace {
            rate_hz,
            rows: Vec::with_capacity(n),
            flags: Vec::with_capacity(n),
        }
    }

    pub fn push(&mut self, row: TraceRow, flags: u8) {
        self.rows.push(row);
        self.flags.push(flags);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column(&self, f: impl Fn(&TraceRow) -> f64) -> Vec<f64> {
        self.rows.iter().map(f).collect()
    }

    /// Rows with `t` in `[t0, t1)`, as a new trace.
    pub fn window(&self, t0: f64, t1: f64) -> SimTrace {
        let (rows, flags) = self
            .rows
            .iter()
            .zip(&self.flags)
            .filter(|(r, _)| r.t >= t0 && r.t < t1)
            .map(|(r, f)| (*r, *f))
            .unzip();
        SimTrace {
            rate_hz: self.rate_hz,
            rows,
            flags,
        }
    }

    pub fn any_flag(&self, bit: u8) -> bool {
        self.flags.iter().any(|f| f & bit != 0)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        if self.rows.is_empty() {
            w.write_record(TRACE_HEADER)?;
        }
        for r in &self.rows {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Parse and check a CSV record: exact header, finite values, constant
    /// spacing and increasing time.
    pub fn read_csv<R: Read>(reader: R) -> Result<SimTrace> {
        let mut rdr = csv::Reader::from_reader(reader);
        let header = rdr.headers()?.clone();
        if header.iter().ne(TRACE_HEADER.iter().copied()) {
            return Err(Error::Schema(format!(
                "trace header must be `{}`, got `{}`",
                TRACE_HEADER.join(","),
                header.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut rows = Vec::new();
        for (k, rec) in rdr.deserialize().enumerate() {
            let row: TraceRow = rec.map_err(|e| Error::Schema(format!("row {}: {e}", k + 1)))?;
            let vals = [
                row.t, row.x1, row.x2, row.hall1, row.hall2, row.i1, row.i2, row.a_cmd, row.ph_cmd, row.f_finger,
                row.w_true, row.p_true,
            ];
            if vals.iter().any(|v| !v.is_finite()) {
                return Err(Error::Schema(format!("row {}: non-finite value", k + 1)));
            }
            rows.push(row);
        }
        let rate_hz = if rows.len() >= 2 {
            let dt = (rows[rows.len() - 1].t - rows[0].t) / (rows.len() - 1) as f64;
            if !(dt > 0.0) {
                return Err(Error::Schema("time must increase".into()));
            }
            for (k, w) in rows.windows(2).enumerate() {
                let step = w[1].t - w[0].t;
                if (step - dt).abs() > 1e-6 * dt + 1e-12 {
                    return Err(Error::Schema(format!("uneven sample spacing at row {}", k + 2)));
                }
            }
            1.0 / dt
        } else {
            0.0
        };
        let n = rows.len();
        Ok(SimTrace {
            rate_hz,
            rows,
            flags: vec![0; n],
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> SimTrace {
        let mut t = SimTrace::new(30_000.0);
        for k in 0..5 {
            t.push(
                TraceRow {
                    t: k as f64 / 30_000.0,
                    x1: 1e-6 * k as f64,
                    ..Default::default()
                },
                0,
            );
        }
        t
    }

    #[test]
    fn header_is_exact() {
        let mut buf = Vec::new();
        sample().write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next().unwrap(), TRACE_HEADER.join(","));
    }

    #[test]
    fn empty_trace_writes_header_only() {
        let mut buf = Vec::new();
        SimTrace::new(30_000.0).write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), format!("{}\n", TRACE_HEADER.join(",")));
    }

    #[test]
    fn round_trip() {
        let t = sample();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let back = SimTrace::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back.rows, t.rows);
        assert!((back.rate_hz - 30_000.0).abs() < 1e-6);
    }

    #[test]
    fn malformed_inputs_rejected() {
        let bad_header = "t,x1\n0,0\n";
        assert!(matches!(SimTrace::read_csv(bad_header.as_bytes()), Err(Error::Schema(_))));
        let h = TRACE_HEADER.join(",");
        let short = format!("{h}\n0,1,2\n");
        assert!(matches!(SimTrace::read_csv(short.as_bytes()), Err(Error::Schema(_))));
        let uneven = format!("{h}\n0,0,0,0,0,0,0,0,0,0,0,0\n1,0,0,0,0,0,0,0,0,0,0,0\n3,0,0,0,0,0,0,0,0,0,0,0\n");
        assert!(matches!(SimTrace::read_csv(uneven.as_bytes()), Err(Error::Schema(_))));
        let nan = format!("{h}\n0,NaN,0,0,0,0,0,0,0,0,0,0\n");
        assert!(matches!(SimTrace::read_csv(nan.as_bytes()), Err(Error::Schema(_))));
    }
}
