use std::fmt::Write as _;
use std::path::Path;

use crate::error::{ensure, Error, Result};
use crate::signals::{fmt_sig, TimeSeries};

/// Ordered `key = value` record describing how a dataset was produced.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Provenance {
    entries: Vec<(String, String)>,
}

impl Provenance {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, key: impl Into<String>, value: impl ToString) {
        let key = key.into();
        let value = value.to_string();
        match self.entries.iter_mut().find(|(k, _)| *k == key) {
            Some(entry) => entry.1 = value,
            None => self.entries.push((key, value)),
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    pub fn extend_from(&mut self, prefix: &str, other: &Provenance) {
        for (k, v) in &other.entries {
            self.set(format!("{prefix}{k}"), v);
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut p = Provenance::new();
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')) {
            let (k, v) = line
                .split_once(" = ")
                .ok_or_else(|| Error::Parse(format!("provenance line without ` = `: `{line}`")))?;
            p.set(k.trim(), v.trim());
        }
        Ok(p)
    }
}

/// Input and measured/true state channels on a shared sample grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub u: TimeSeries,
    pub x: TimeSeries,
    pub xdot: TimeSeries,
    pub z: TimeSeries,
    pub i: TimeSeries,
    pub provenance: Provenance,
}

pub const DATASET_HEADER: &str = "t,u,x,xdot,z,i";

impl Dataset {
    pub fn new(
        u: TimeSeries,
        x: TimeSeries,
        xdot: TimeSeries,
        z: TimeSeries,
        i: TimeSeries,
        provenance: Provenance,
    ) -> Result<Self> {
        let ds = Self { u, x, xdot, z, i, provenance };
        ds.check_aligned()?;
        Ok(ds)
    }

    pub fn check_aligned(&self) -> Result<()> {
        let all = [&self.u, &self.x, &self.xdot, &self.z, &self.i];
        for s in &all[1..] {
            ensure(
                s.len() == self.u.len()
                    && (s.dt - self.u.dt).abs() <= 1e-12 * self.u.dt
                    && (s.t0 - self.u.t0).abs() <= 1e-12 * self.u.dt.max(1.0),
                || {
                    format!(
                        "dataset channels misaligned (len {} vs {}, dt {} vs {})",
                        s.len(),
                        self.u.len(),
                        s.dt,
                        self.u.dt
                    )
                },
            )?;
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    pub fn dt(&self) -> f64 {
        self.u.dt
    }

    /// First `n` samples of every channel.
    pub fn truncated(&self, n: usize) -> Dataset {
        Dataset {
            u: self.u.truncated(n),
            x: self.x.truncated(n),
            xdot: self.xdot.truncated(n),
            z: self.z.truncated(n),
            i: self.i.truncated(n),
            provenance: self.provenance.clone(),
        }
    }

    /// Copy with the deformation channel replaced (e.g. by an extracted estimate).
    pub fn with_z(&self, z: TimeSeries) -> Result<Dataset> {
        let n = z.len().min(self.len());
        let mut ds = self.truncated(n);
        ds.z = z.truncated(n);
        ds.check_aligned()?;
        Ok(ds)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.len() * 96);
        out.push_str(DATASET_HEADER);
        out.push('\n');
        for k in 0..self.len() {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                fmt_sig(self.u.time(k)),
                fmt_sig(self.u.values[k]),
                fmt_sig(self.x.values[k]),
                fmt_sig(self.xdot.values[k]),
                fmt_sig(self.z.values[k]),
                fmt_sig(self.i.values[k]),
            );
        }
        out
    }

    pub fn from_csv(text: &str, provenance: Provenance) -> Result<Dataset> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::Parse("empty dataset csv".into()))?;
        if header.trim() != DATASET_HEADER {
            return Err(Error::Parse(format!("expected header `{DATASET_HEADER}`, got `{header}`")));
        }
        let mut cols: [Vec<f64>; 6] = Default::default();
        for (row, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let mut fields = line.split(',');
            for col in cols.iter_mut() {
                let v = fields
                    .next()
                    .and_then(|f| f.trim().parse::<f64>().ok())
                    .ok_or_else(|| Error::Parse(format!("bad dataset row {}: `{line}`", row + 2)))?;
                col.push(v);
            }
        }
        ensure(cols[0].len() >= 2, || "dataset needs at least two rows".into())?;
        let t0 = cols[0][0];
        let dt = cols[0][1] - cols[0][0];
        let [_, u, x, xdot, z, i] = cols;
        let mk = |v: Vec<f64>| TimeSeries::new(t0, dt, v);
        Dataset::new(mk(u)?, mk(x)?, mk(xdot)?, mk(z)?, mk(i)?, provenance)
    }

    /// Writes `<path>` (CSV) and `<path>.provenance` (sidecar).
    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        std::fs::write(sidecar_path(path), self.provenance.to_text())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Dataset> {
        let text = std::fs::read_to_string(path)?;
        let side = sidecar_path(path);
        let prov = if side.exists() {
            Provenance::parse(&std::fs::read_to_string(side)?)?
        } else {
            Provenance::new()
        };
        Dataset::from_csv(&text, prov)
    }
}

pub fn sidecar_path(path: &Path) -> std::path::PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".provenance");
    s.into()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(v: Vec<f64>) -> TimeSeries {
        TimeSeries::new(0.0, 0.012, v).unwrap()
    }

    #[test]
    fn misaligned_channels_rejected() {
        let a = series(vec![0.0; 4]);
        let b = series(vec![0.0; 3]);
        let r = Dataset::new(a.clone(), a.clone(), b, a.clone(), a, Provenance::new());
        assert!(r.is_err());
    }

    #[test]
    fn csv_and_provenance_round_trip() {
        let a = series(vec![0.1, -0.2, 0.3]);
        let mut p = Provenance::new();
        p.set("seed", 7);
        p.set("friction", "lugre");
        let ds = Dataset::new(a.clone(), a.clone(), a.clone(), a.clone(), a, p).unwrap();
        let text = ds.to_csv();
        assert!(text.starts_with("t,u,x,xdot,z,i\n0,0.1,0.1,0.1,0.1,0.1\n"));
        let prov = Provenance::parse(&ds.provenance.to_text()).unwrap();
        let back = Dataset::from_csv(&text, prov).unwrap();
        assert_eq!(back.u.values, ds.u.values);
        assert_eq!(back.provenance.get("seed"), Some("7"));
    }
}
