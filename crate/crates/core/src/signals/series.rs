use std::fmt::Write as _;
use std::path::Path;

use crate::error::{ensure, Error, Result};

/// Uniformly sampled scalar signal. Sample `k` sits at `t0 + k * dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    pub t0: f64,
    pub dt: f64,
    pub values: Vec<f64>,
}

impl TimeSeries {
    pub fn new(t0: f64, dt: f64, values: Vec<f64>) -> Result<Self> {
        ensure(dt > 0.0 && dt.is_finite(), || format!("time step must be > 0, got {dt}"))?;
        ensure(!values.is_empty(), || "time series needs at least one sample".into())?;
        Ok(Self { t0, dt, values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(|k| self.time(k))
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Same grid, new values.
    pub fn with_values(&self, values: Vec<f64>) -> Self {
        Self {
            t0: self.t0,
            dt: self.dt,
            values,
        }
    }

    /// First `n` samples.
    pub fn truncated(&self, n: usize) -> Self {
        self.with_values(self.values[..n.min(self.len())].to_vec())
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,value\n");
        for (k, v) in self.values.iter().enumerate() {
            let _ = writeln!(out, "{},{}", fmt_sig(self.time(k)), fmt_sig(*v));
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }

    /// Parses a two-column `t,value` file. The step is taken from the first
    /// two timestamps.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::Parse("empty csv".into()))?;
        if header.trim() != "t,value" {
            return Err(Error::Parse(format!("unexpected header `{header}`")));
        }
        let mut ts = Vec::new();
        let mut vs = Vec::new();
        for (i, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let mut it = line.split(',');
            let mut next = || -> Result<f64> {
                it.next()
                    .and_then(|s| s.trim().parse().ok())
                    .ok_or_else(|| Error::Parse(format!("bad row {}: `{line}`", i + 2)))
            };
            ts.push(next()?);
            vs.push(next()?);
        }
        ensure(!vs.is_empty(), || "csv has no samples".into())?;
        let dt = if ts.len() > 1 { ts[1] - ts[0] } else { 1.0 };
        Self::new(ts[0], dt, vs)
    }
}

/// Formats a value with 15 significant digits, trimming trailing zeros.
pub fn fmt_sig(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return format!("{v}");
    }
    let exp = v.abs().log10().floor() as i32;
    if (-5..15).contains(&exp) {
        let decimals = (14 - exp).max(0) as usize;
        let s = format!("{v:.decimals$}");
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        let s = format!("{v:.14e}");
        let (mant, e) = s.split_once('e').unwrap_or((&s, "0"));
        let mant = if mant.contains('.') {
            mant.trim_end_matches('0').trim_end_matches('.')
        } else {
            mant
        };
        format!("{mant}e{e}")
    }
}
