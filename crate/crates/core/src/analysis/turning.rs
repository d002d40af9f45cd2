use serde::{Deserialize, Serialize};

use super::savgol::{savgol_smooth, DEFAULT_POLYORDER, DEFAULT_WINDOW};
use super::sigmoid::fit_sigmoid;
use crate::error::{Error, Result};

/// Slope threshold as a fraction of the plateau height, per unit of x.
pub const DEFAULT_EPSILON_FRACTION: f64 = 0.005;

/// First x at which the curve starts falling.
///
/// Uses central differences at interior points and returns the smallest x
/// whose derivative is below `−epsilon` and stays below at the next point.
/// A trigger at the last interior point counts on its own. Returns the last
/// x when the curve never falls.
pub fn turning_point(xs: &[f64], ys: &[f64], epsilon: f64) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::InvalidParams(format!("{} xs but {} ys", xs.len(), ys.len())));
    }
    if xs.len() < 3 {
        return Err(Error::TooFewPoints { needed: 3, got: xs.len() });
    }
    let d: Vec<f64> = (1..xs.len() - 1)
        .map(|i| (ys[i + 1] - ys[i - 1]) / (xs[i + 1] - xs[i - 1]))
        .collect();
    for (i, &di) in d.iter().enumerate() {
        if di < -epsilon && d.get(i + 1).is_none_or(|&next| next < -epsilon) {
            return Ok(xs[i + 1]);
        }
    }
    Ok(xs[xs.len() - 1])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StableDistanceMethod {
    #[default]
    TurningPoint,
    /// Where a fitted sigmoid has dropped to 95% of its plateau.
    PlateauEnd,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StableDistanceOptions {
    pub window: usize,
    pub polyorder: usize,
    pub epsilon_fraction: f64,
    pub method: StableDistanceMethod,
}

impl Default for StableDistanceOptions {
    fn default() -> Self {
        StableDistanceOptions {
            window: DEFAULT_WINDOW,
            polyorder: DEFAULT_POLYORDER,
            epsilon_fraction: DEFAULT_EPSILON_FRACTION,
            method: StableDistanceMethod::TurningPoint,
        }
    }
}

/// Stable transmission distance of a key-rate curve.
///
/// Smooths the series, then either takes the turning point with
/// `epsilon = epsilon_fraction · max(smoothed)` or the plateau end of a
/// sigmoid fit. The window shrinks to the largest odd size that fits short
/// series.
pub fn stable_distance(xs: &[f64], ys: &[f64], opts: &StableDistanceOptions) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::InvalidParams(format!("{} xs but {} ys", xs.len(), ys.len())));
    }
    match opts.method {
        StableDistanceMethod::TurningPoint => {
            let smoothed = smooth_fitting(ys, opts.window, opts.polyorder)?;
            let plateau = smoothed.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            turning_point(xs, &smoothed, opts.epsilon_fraction * plateau.max(0.0))
        }
        StableDistanceMethod::PlateauEnd => {
            let fit = match fit_sigmoid(xs, ys) {
                Ok(f) => f,
                Err(Error::NonConvergence { best, .. }) => *best,
                Err(e) => return Err(e),
            };
            Ok(fit.plateau_end(0.95))
        }
    }
}

fn smooth_fitting(ys: &[f64], window: usize, polyorder: usize) -> Result<Vec<f64>> {
    let mut w = window.min(ys.len());
    if w.is_multiple_of(2) {
        w = w.saturating_sub(1);
    }
    if w <= polyorder {
        // too short to smooth
        return Ok(ys.to_vec());
    }
    savgol_smooth(ys, w, polyorder)
}
