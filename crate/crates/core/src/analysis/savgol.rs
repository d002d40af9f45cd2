use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_WINDOW: usize = 11;
pub const DEFAULT_POLYORDER: usize = 3;

/// How the first and last `window / 2` samples are smoothed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeMode {
    /// Fit the polynomial to the first (last) full window and evaluate it at
    /// the edge positions. Reproduces polynomials of degree ≤ polyorder exactly.
    #[default]
    Interp,
    /// Pad by reflecting about the end samples (`y2 y1 | y0 y1 y2 …`).
    Mirror,
}

/// Savitzky–Golay smoothing with [`EdgeMode::Interp`] edges.
pub fn savgol_smooth(ys: &[f64], window: usize, polyorder: usize) -> Result<Vec<f64>> {
    savgol_smooth_with(ys, window, polyorder, EdgeMode::Interp)
}

/// Replaces each sample by the centre value of the least-squares polynomial
/// of order `polyorder` fitted over its `window` neighbours.
pub fn savgol_smooth_with(ys: &[f64], window: usize, polyorder: usize, edges: EdgeMode) -> Result<Vec<f64>> {
    if window.is_multiple_of(2) {
        return Err(Error::BadWindow(format!("window must be odd, got {window}")));
    }
    if window <= polyorder {
        return Err(Error::BadWindow(format!("window {window} must exceed polyorder {polyorder}")));
    }
    if ys.len() < window {
        return Err(Error::BadWindow(format!("series of {} points is shorter than window {window}", ys.len())));
    }
    let half = window / 2;
    // Rows of the pseudo-inverse map a window to polynomial coefficients in
    // offsets centred on the window middle.
    let vander = DMatrix::from_fn(window, polyorder + 1, |r, c| (r as f64 - half as f64).powi(c as i32));
    let pinv = vander
        .svd(true, true)
        .pseudo_inverse(1e-12)
        .map_err(|e| Error::BadWindow(e.to_string()))?;
    let centre: Vec<f64> = pinv.row(0).iter().copied().collect();
    let n = ys.len();

    let sample = |i: isize| -> f64 {
        match edges {
            EdgeMode::Mirror => {
                let last = n as isize - 1;
                let j = if i < 0 {
                    -i
                } else if i > last {
                    2 * last - i
                } else {
                    i
                };
                ys[j.clamp(0, last) as usize]
            }
            EdgeMode::Interp => ys[i as usize],
        }
    };

    let mut out = vec![0.0; n];
    for (i, o) in out.iter_mut().enumerate() {
        let inside = i >= half && i + half < n;
        if inside || edges == EdgeMode::Mirror {
            *o = centre
                .iter()
                .enumerate()
                .map(|(k, c)| c * sample(i as isize + k as isize - half as isize))
                .sum();
        }
    }
    if edges == EdgeMode::Interp {
        let edge_fit = |start: usize, positions: std::ops::Range<usize>, out: &mut [f64]| {
            let coeffs: Vec<f64> = (0..=polyorder)
                .map(|c| (0..window).map(|k| pinv[(c, k)] * ys[start + k]).sum())
                .collect();
            for i in positions {
                let t = i as f64 - (start + half) as f64;
                out[i] = coeffs.iter().rev().fold(0.0, |acc, c| acc * t + c);
            }
        };
        edge_fit(0, 0..half, &mut out);
        edge_fit(n - window, n - half..n, &mut out);
    }
    Ok(out)
}
