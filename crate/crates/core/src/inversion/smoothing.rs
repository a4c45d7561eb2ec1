//! Savitzky-Golay smoothing with polynomial extrapolation at the edges.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Weights `w` such that `sum w_k y_k` is the least-squares polynomial of degree
/// `order` through `(positions_k, y_k)` evaluated at `at`.
fn fit_weights(positions: &[f64], order: usize, at: f64) -> Vec<f64> {
    let a = DMatrix::from_fn(positions.len(), order + 1, |r, c| positions[r].powi(c as i32));
    let e = DVector::from_fn(order + 1, |c, _| at.powi(c as i32));
    // w = A (A'A)^-1 e
    let ata = a.transpose() * &a;
    let z = ata
        .cholesky()
        .expect("distinct positions give a full-rank fit")
        .solve(&e);
    (a * z).iter().copied().collect()
}

/// Local polynomial smoothing without clamping.
///
/// Interior points use the centred window; the first and last `window / 2` points
/// evaluate the fit of the first or last full window at their own position.
pub fn savgol_filter(series: &[f64], window_points: usize, polyorder: usize) -> Result<Vec<f64>> {
    if window_points.is_multiple_of(2) || window_points <= polyorder {
        return Err(Error::InvalidConfig(format!(
            "smoothing window must be odd and larger than the order, got {window_points}/{polyorder}"
        )));
    }
    let n = series.len();
    if n < window_points {
        return Ok(series.to_vec());
    }
    let half = window_points / 2;
    let positions: Vec<f64> = (0..window_points).map(|k| k as f64 - half as f64).collect();
    let centre = fit_weights(&positions, polyorder, 0.0);
    let apply = |w: &[f64], start: usize| -> f64 {
        w.iter()
            .zip(&series[start..start + window_points])
            .map(|(a, b)| a * b)
            .sum()
    };

    let mut out = vec![0.0; n];
    for (i, o) in out.iter_mut().enumerate().take(n - half).skip(half) {
        *o = apply(&centre, i - half);
    }
    for i in 0..half {
        let w = fit_weights(&positions, polyorder, i as f64 - half as f64);
        out[i] = apply(&w, 0);
        let w = fit_weights(&positions, polyorder, half as f64 - i as f64);
        out[n - 1 - i] = apply(&w, n - window_points);
    }
    Ok(out)
}

/// [`savgol_filter`] followed by clamping into `[0, 1]`.
pub fn savgol_smooth(series: &[f64], window_points: usize, polyorder: usize) -> Result<Vec<f64>> {
    Ok(savgol_filter(series, window_points, polyorder)?
        .into_iter()
        .map(|v| v.clamp(0.0, 1.0))
        .collect())
}
