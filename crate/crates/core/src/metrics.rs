use crate::error::{ensure, Error, Result};
use crate::signals::TimeSeries;

pub use crate::models::{evaluate_model, fit_grid_csv, fit_table_csv};

/// Normalised-error fit, in percent: `100 (1 - |y - y_hat| / |y - mean(y)|)`.
/// Can be negative; `-inf` is never returned for finite inputs.
pub fn fit_percentage(y: &TimeSeries, y_hat: &TimeSeries) -> Result<f64> {
    fit_percentage_slices(&y.values, &y_hat.values)
}

pub fn fit_percentage_slices(y: &[f64], y_hat: &[f64]) -> Result<f64> {
    ensure(y.len() == y_hat.len(), || format!("length mismatch: {} vs {}", y.len(), y_hat.len()))?;
    ensure(y.len() >= 2, || "fit needs at least 2 samples".into())?;
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let den = y.iter().map(|v| (v - mean).powi(2)).sum::<f64>().sqrt();
    if !(den > 0.0) {
        return Err(Error::Degenerate("reference signal is constant".into()));
    }
    let num = y.iter().zip(y_hat).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    if !num.is_finite() {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(100.0 * (1.0 - num / den))
}

pub fn rmse(y: &[f64], y_hat: &[f64]) -> f64 {
    let n = y.len().min(y_hat.len()).max(1);
    (y.iter().zip(y_hat).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / n as f64).sqrt()
}

/// Pearson correlation, optionally restricted to the samples where `mask`
/// holds (the predicate gets the sample index).
pub fn pearson(a: &TimeSeries, b: &TimeSeries, mask: Option<&dyn Fn(usize) -> bool>) -> Result<f64> {
    ensure(a.len() == b.len(), || format!("length mismatch: {} vs {}", a.len(), b.len()))?;
    let idx: Vec<usize> = (0..a.len()).filter(|&k| mask.map_or(true, |m| m(k))).collect();
    ensure(idx.len() >= 3, || format!("pearson needs at least 3 samples, got {}", idx.len()))?;
    let n = idx.len() as f64;
    let ma = idx.iter().map(|&k| a.values[k]).sum::<f64>() / n;
    let mb = idx.iter().map(|&k| b.values[k]).sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for &k in &idx {
        let (da, db) = (a.values[k] - ma, b.values[k] - mb);
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    if !(saa > 0.0 && sbb > 0.0) {
        return Err(Error::Degenerate("constant series under the mask".into()));
    }
    Ok((sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0))
}

/// Per-state fit and RMSE for one model on one dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    pub model: String,
    pub dataset: String,
    /// x, xdot, z, I; `None` where the state is not comparable (e.g. a
    /// model without a deformation state)
    pub fit: [Option<f64>; 4],
    pub rmse: [Option<f64>; 4],
    pub diverged_at: Option<f64>,
}

pub const STATE_LABELS: [&str; 4] = ["x", "xdot", "z", "I"];

impl FitReport {
    pub fn fit_x(&self) -> f64 {
        self.fit[0].unwrap_or(f64::NEG_INFINITY)
    }

    pub fn fit_v(&self) -> f64 {
        self.fit[1].unwrap_or(f64::NEG_INFINITY)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ts(v: Vec<f64>) -> TimeSeries {
        TimeSeries::new(0.0, 0.1, v).unwrap()
    }

    #[test]
    fn worked_examples() {
        let y = ts(vec![0.0, 1.0, 3.0, -2.0]);
        assert!((fit_percentage(&y, &y).unwrap() - 100.0).abs() < 1e-10);
        let mean = ts(vec![0.5; 4]);
        assert!(fit_percentage(&y, &mean).unwrap().abs() < 1e-10);
        let y2 = ts(vec![0.0, 1.0]);
        let m2 = ts(vec![0.5, 0.5]);
        assert!(fit_percentage(&y2, &m2).unwrap().abs() < 1e-10);
        let f = fit_percentage(&y2, &ts(vec![0.0, 0.0])).unwrap();
        assert!((f - 100.0 * (1.0 - 1.0 / 0.5f64.sqrt())).abs() < 1e-10);
        assert!((f + 41.42).abs() < 5e-3);
    }

    #[test]
    fn constant_reference_rejected() {
        let y = ts(vec![2.0; 5]);
        assert!(matches!(fit_percentage(&y, &y), Err(Error::Degenerate(_))));
    }

    #[test]
    fn pearson_examples() {
        let a = ts(vec![1.0, 2.0, 3.0]);
        let b = ts(vec![1.0, 2.0, 4.0]);
        assert!((pearson(&a, &a, None).unwrap() - 1.0).abs() < 1e-15);
        let neg = ts(vec![-1.0, -2.0, -3.0]);
        assert!((pearson(&a, &neg, None).unwrap() + 1.0).abs() < 1e-15);
        assert!((pearson(&a, &b, None).unwrap() - 0.98198).abs() < 1e-5);
    }

    #[test]
    fn pearson_mask_and_degeneracy() {
        let a = ts(vec![1.0, 2.0, 3.0, 100.0, 4.0]);
        let b = ts(vec![2.0, 4.0, 6.0, -50.0, 8.0]);
        let r = pearson(&a, &b, Some(&|k| k != 3)).unwrap();
        assert!((r - 1.0).abs() < 1e-12);
        assert!(pearson(&a, &ts(vec![1.0; 5]), None).is_err());
        assert!(pearson(&a, &b, Some(&|k| k < 2)).is_err());
    }

    proptest! {
        #[test]
        fn fit_is_affine_invariant(
            y in prop::collection::vec(-10.0f64..10.0, 5..40),
            noise in prop::collection::vec(-1.0f64..1.0, 40),
            c in 0.01f64..100.0, d in -50.0f64..50.0,
        ) {
            let y_hat: Vec<f64> = y.iter().zip(&noise).map(|(a, e)| a + e).collect();
            let mean = y.iter().sum::<f64>() / y.len() as f64;
            prop_assume!(y.iter().any(|v| (v - mean).abs() > 1e-3));
            let f0 = fit_percentage_slices(&y, &y_hat).unwrap();
            let ys: Vec<f64> = y.iter().map(|v| c * v + d).collect();
            let hs: Vec<f64> = y_hat.iter().map(|v| c * v + d).collect();
            let f1 = fit_percentage_slices(&ys, &hs).unwrap();
            prop_assert!((f0 - f1).abs() < 1e-8 * f0.abs().max(1.0));
        }

        #[test]
        fn pearson_is_positive_affine_invariant(
            a in prop::collection::vec(-10.0f64..10.0, 4..30),
            c in 0.1f64..10.0, d in -5.0f64..5.0,
        ) {
            let b: Vec<f64> = a.iter().enumerate().map(|(k, v)| v + (k as f64 * 0.7).sin()).collect();
            let ta = ts(a.clone());
            let tb = ts(b.clone());
            let r0 = match pearson(&ta, &tb, None) { Ok(r) => r, Err(_) => return Ok(()) };
            let tb2 = ts(b.iter().map(|v| c * v + d).collect());
            let r1 = pearson(&ta, &tb2, None).unwrap();
            prop_assert!((r0 - r1).abs() < 1e-9);
            prop_assert!((-1.0..=1.0).contains(&r0));
        }

        #[test]
        fn fit_never_exceeds_hundred(
            y in prop::collection::vec(-10.0f64..10.0, 3..20),
            h in prop::collection::vec(-10.0f64..10.0, 20),
        ) {
            let n = y.len();
            if let Ok(f) = fit_percentage_slices(&y, &h[..n]) {
                prop_assert!(f <= 100.0);
            }
        }
    }
}
