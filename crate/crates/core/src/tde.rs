//! Time-delay embedding of a measured signal and extraction of its
//! low-energy delay coordinates.

use std::fmt::Write as _;
use std::ops::Range;

use nalgebra::{DMatrix, DVector};

use crate::error::{ensure, Error, Result};
use crate::plot::{Plot, Scale};
use crate::signals::{fmt_sig, TimeSeries};

/// `m` delayed copies of a series stacked as rows: row `i` holds samples
/// `i .. i + n`.
#[derive(Debug, Clone, PartialEq)]
pub struct HankelMatrix {
    pub m: usize,
    pub n: usize,
    pub data: DMatrix<f64>,
    pub source_dt: f64,
    pub source_t0: f64,
}

pub fn build_hankel(s: &TimeSeries, m: usize) -> Result<HankelMatrix> {
    ensure(m >= 2, || format!("embedding dimension must be >= 2, got {m}"))?;
    ensure(s.len() >= m + 1, || {
        format!("series of length {} too short for m = {m}; need at least {}", s.len(), m + 1)
    })?;
    let n = s.len() - m + 1;
    let data = DMatrix::from_fn(m, n, |i, j| s.values[i + j]);
    Ok(HankelMatrix {
        m,
        n,
        data,
        source_dt: s.dt,
        source_t0: s.t0,
    })
}

/// Economy SVD `H = U diag(S) Vᵀ` with `S` descending.
#[derive(Debug, Clone)]
pub struct SvdFactors {
    pub u: DMatrix<f64>,
    pub s: DVector<f64>,
    pub v: DMatrix<f64>,
}

impl SvdFactors {
    pub fn rank(&self) -> usize {
        self.s.len()
    }

    pub fn reconstruct(&self) -> DMatrix<f64> {
        low_energy_reconstruct(self, 0..self.rank())
    }
}

pub fn decompose(h: &HankelMatrix) -> Result<SvdFactors> {
    let svd = h
        .data
        .clone()
        .try_svd(true, true, f64::EPSILON, 0)
        .ok_or_else(|| Error::Numerical(format!("svd of {}x{} hankel matrix did not converge", h.m, h.n)))?;
    let u = svd.u.ok_or_else(|| Error::Numerical("svd returned no left vectors".into()))?;
    let v_t = svd.v_t.ok_or_else(|| Error::Numerical("svd returned no right vectors".into()))?;
    let s = svd.singular_values;
    if s.iter().any(|v| !v.is_finite()) {
        let cond = s.max() / s.min();
        return Err(Error::Numerical(format!("non-finite singular values (condition {cond:e})")));
    }
    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by(|&a, &b| s[b].total_cmp(&s[a]));
    let r = s.len();
    let s_sorted = DVector::from_fn(r, |k, _| s[order[k]]);
    let u_sorted = DMatrix::from_fn(u.nrows(), r, |i, k| u[(i, order[k])]);
    let v_sorted = DMatrix::from_fn(v_t.ncols(), r, |j, k| v_t[(order[k], j)]);
    Ok(SvdFactors {
        u: u_sorted,
        s: s_sorted,
        v: v_sorted,
    })
}

/// Share of each singular value in their sum.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergySpectrum {
    pub energies: Vec<f64>,
}

pub fn energy_spectrum(f: &SvdFactors) -> Result<EnergySpectrum> {
    let total: f64 = f.s.iter().sum();
    if !(total > 0.0) {
        return Err(Error::Degenerate("all singular values are zero".into()));
    }
    Ok(EnergySpectrum {
        energies: f.s.iter().map(|s| s / total).collect(),
    })
}

/// From the first component whose energy is at or below `threshold` to the
/// last one. Empty when none qualifies.
pub fn select_low_energy(e: &EnergySpectrum, threshold: f64) -> Range<usize> {
    let len = e.energies.len();
    match e.energies.iter().position(|&x| x <= threshold) {
        Some(first) => first..len,
        None => len..len,
    }
}

/// `U diag(S') Vᵀ` where `S'` keeps only the singular values in `range`.
pub fn low_energy_reconstruct(f: &SvdFactors, range: Range<usize>) -> DMatrix<f64> {
    let (m, n) = (f.u.nrows(), f.v.nrows());
    let mut out = DMatrix::zeros(m, n);
    for k in range.start.min(f.rank())..range.end.min(f.rank()) {
        let uk = f.u.column(k) * f.s[k];
        out.ger(1.0, &uk, &f.v.column(k), 1.0);
    }
    out
}

/// First row of the low-energy reconstruction of `y` (length `n = len - m + 1`).
fn first_row_low_energy(f: &SvdFactors, range: Range<usize>) -> Vec<f64> {
    let n = f.v.nrows();
    let mut row = vec![0.0; n];
    for k in range.start.min(f.rank())..range.end.min(f.rank()) {
        let c = f.u[(0, k)] * f.s[k];
        for (r, v) in row.iter_mut().zip(f.v.column(k).iter()) {
            *r += c * v;
        }
    }
    row
}

#[derive(Debug, Clone)]
pub struct Extraction {
    /// unit max-abs estimate of the hidden state
    pub z_hat: TimeSeries,
    /// max-abs of the raw reconstruction that was divided out
    pub scale: f64,
    pub range: Range<usize>,
    pub spectrum: EnergySpectrum,
    pub singular_values: Vec<f64>,
    pub m: usize,
    pub threshold: f64,
}

impl Extraction {
    /// 1-based component numbers of the selection, e.g. "k = 31..60".
    pub fn describe_range(&self) -> String {
        format!("k = {}..{}", self.range.start + 1, self.range.end)
    }

    pub fn spectrum_csv(&self) -> String {
        let mut out = String::from("k,sigma,energy\n");
        for (k, (s, e)) in self.singular_values.iter().zip(&self.spectrum.energies).enumerate() {
            let _ = writeln!(out, "{},{},{}", k + 1, fmt_sig(*s), fmt_sig(*e));
        }
        out
    }

    pub fn z_hat_csv(&self) -> String {
        let mut out = String::from("t,z_hat\n");
        for (k, v) in self.z_hat.values.iter().enumerate() {
            let _ = writeln!(out, "{},{}", fmt_sig(self.z_hat.time(k)), fmt_sig(*v));
        }
        out
    }

    /// Log-scale stem plot of the energies with the selected range shaded.
    pub fn spectrum_svg(&self) -> String {
        let ks: Vec<f64> = (1..=self.spectrum.energies.len()).map(|k| k as f64).collect();
        let floor = 1e-300;
        let es: Vec<f64> = self.spectrum.energies.iter().map(|e| e.max(floor)).collect();
        let mut plot = Plot::new("Singular value energy", "k", "E_k").y_scale(Scale::Log);
        if !self.range.is_empty() {
            plot = plot.shade_x(self.range.start as f64 + 0.5, self.range.end as f64 + 0.5, "selected");
        }
        plot.stems("E_k", &ks, &es).hline(self.threshold, "threshold").to_svg()
    }
}

/// Hankel embedding, SVD, low-energy selection, and the first row of the
/// low-energy reconstruction normalised to unit max-abs.
pub fn extract_internal_state(velocity: &TimeSeries, m: usize, threshold: f64) -> Result<Extraction> {
    ensure(threshold > 0.0 && threshold < 1.0, || format!("threshold must be in (0, 1), got {threshold}"))?;
    let h = build_hankel(velocity, m)?;
    let f = decompose(&h)?;
    let spectrum = energy_spectrum(&f)?;
    let range = select_low_energy(&spectrum, threshold);
    if range.is_empty() {
        return Err(Error::ExtractionDegenerate(format!(
            "no singular value has energy <= {threshold} with m = {m}; increase m or the threshold"
        )));
    }
    let row = first_row_low_energy(&f, range.clone());
    let scale = row.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(Error::ExtractionDegenerate("low-energy reconstruction is identically zero".into()));
    }
    let z_hat = TimeSeries::new(velocity.t0, velocity.dt, row.iter().map(|v| v / scale).collect())?;
    Ok(Extraction {
        z_hat,
        scale,
        range,
        spectrum,
        singular_values: f.s.iter().copied().collect(),
        m,
        threshold,
    })
}
