use super::TimeSeries;
use crate::error::{ensure, Result};

/// Causal moving average. Sample `k` is the mean of samples
/// `max(0, k - window + 1) ..= k`, so the first `window - 1` outputs average
/// the available prefix.
pub fn moving_average(s: &TimeSeries, window: usize) -> Result<TimeSeries> {
    ensure(window >= 1, || "moving-average window must be >= 1".into())?;
    ensure(window <= s.len(), || {
        format!("moving-average window {window} exceeds series length {}", s.len())
    })?;
    if window == 1 {
        return Ok(s.clone());
    }
    let mut out = Vec::with_capacity(s.len());
    let mut acc = 0.0;
    for k in 0..s.len() {
        acc += s.values[k];
        if k >= window {
            acc -= s.values[k - window];
        }
        // Recompute exactly every so often so drift cannot accumulate.
        if k % 4096 == 4095 {
            let lo = (k + 1).saturating_sub(window);
            acc = s.values[lo..=k].iter().sum();
        }
        let count = (k + 1).min(window);
        out.push(acc / count as f64);
    }
    Ok(s.with_values(out))
}

/// Central differences inside, second-order one-sided differences at the ends.
pub fn differentiate(x: &TimeSeries) -> Result<TimeSeries> {
    let n = x.len();
    ensure(n >= 3, || format!("differentiation needs >= 3 samples, got {n}"))?;
    let v = &x.values;
    let h = x.dt;
    let mut out = vec![0.0; n];
    out[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * h);
    for k in 1..n - 1 {
        out[k] = (v[k + 1] - v[k - 1]) / (2.0 * h);
    }
    out[n - 1] = (3.0 * v[n - 1] - 4.0 * v[n - 2] + v[n - 3]) / (2.0 * h);
    Ok(x.with_values(out))
}

/// Rounds each sample to the nearest multiple of `resolution`, halves away
/// from zero.
pub fn quantize(s: &TimeSeries, resolution: f64) -> Result<TimeSeries> {
    ensure(resolution > 0.0 && resolution.is_finite(), || {
        format!("quantisation resolution must be > 0, got {resolution}")
    })?;
    Ok(s.with_values(s.values.iter().map(|v| quantize_value(*v, resolution)).collect()))
}

pub(crate) fn quantize_value(v: f64, resolution: f64) -> f64 {
    let q = resolution * (v / resolution).round();
    // keep the fixed point exact: q(q(v)) == q(v)
    let qq = resolution * (q / resolution).round();
    if qq == q {
        q
    } else {
        qq
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ts(values: Vec<f64>, dt: f64) -> TimeSeries {
        TimeSeries::new(0.0, dt, values).unwrap()
    }

    #[test]
    fn moving_average_examples() {
        let c = ts(vec![3.0; 7], 0.1);
        assert_eq!(moving_average(&c, 3).unwrap(), c);
        let s = ts(vec![1.0, -2.0, 4.0], 0.1);
        assert_eq!(moving_average(&s, 1).unwrap(), s);
        let s = ts(vec![0.0, 10.0, 0.0, 0.0], 1.0);
        assert_eq!(moving_average(&s, 2).unwrap().values, vec![0.0, 5.0, 5.0, 0.0]);
    }

    #[test]
    fn moving_average_rejects_bad_window() {
        let s = ts(vec![1.0, 2.0], 0.1);
        assert!(moving_average(&s, 0).is_err());
        assert!(moving_average(&s, 3).is_err());
    }

    #[test]
    fn differentiate_examples() {
        let c = ts(vec![2.0; 5], 0.1);
        assert!(differentiate(&c).unwrap().values.iter().all(|&d| d == 0.0));
        let r = ts(vec![0.0, 1.0, 2.0, 3.0], 1.0);
        assert_eq!(differentiate(&r).unwrap().values, vec![1.0, 1.0, 1.0, 1.0]);
        let h = 0.01;
        let q = ts((0..201).map(|k| (k as f64 * h).powi(2)).collect(), h);
        let d = differentiate(&q).unwrap();
        assert!((d.values[100] - 2.0).abs() < 1e-12);
        assert!(differentiate(&ts(vec![1.0, 2.0], 0.1)).is_err());
    }

    #[test]
    fn quantize_examples() {
        let s = ts(vec![0.14, 0.0, -0.20], 1.0);
        let q = quantize(&s, 0.095).unwrap().values;
        assert!((q[0] - 0.095).abs() < 1e-15);
        assert_eq!(q[1], 0.0);
        assert!((q[2] + 0.19).abs() < 1e-15);
        assert!(quantize(&s, 0.0).is_err());
        assert!(quantize(&s, -1.0).is_err());
    }

    proptest! {
        #[test]
        fn moving_average_never_increases_max_abs(
            values in prop::collection::vec(-100.0f64..100.0, 1..200),
            window in 1usize..20,
        ) {
            let s = ts(values, 0.01);
            let w = window.min(s.len());
            let m = moving_average(&s, w).unwrap();
            prop_assert!(m.max_abs() <= s.max_abs() * (1.0 + 1e-12));
            prop_assert_eq!(moving_average(&m, 1).unwrap(), m);
        }

        #[test]
        fn quantize_is_idempotent(
            values in prop::collection::vec(-50.0f64..50.0, 1..100),
            res in 0.001f64..2.0,
        ) {
            let s = ts(values, 0.01);
            let q = quantize(&s, res).unwrap();
            prop_assert_eq!(quantize(&q, res).unwrap(), q);
        }

        #[test]
        fn derivative_of_quantized_ramp_is_bounded(
            slope in -20.0f64..20.0,
            res in 1e-4f64..0.05,
            dt in 0.001f64..0.05,
        ) {
            let s = ts((0..50).map(|k| slope * k as f64 * dt + 0.3).collect(), dt);
            let d = differentiate(&quantize(&s, res).unwrap()).unwrap();
            for v in &d.values {
                // one-sided stencils weigh the rounding error by up to 2
                prop_assert!((v - slope).abs() <= 2.0 * res / dt + 1e-9);
            }
            for v in &d.values[1..d.len() - 1] {
                prop_assert!((v - slope).abs() <= res / dt + 1e-9);
            }
        }
    }
}
