//! Numerical pipeline for key-rate curves: Savitzky–Golay smoothing, sigmoid
//! and polynomial least squares, turning points and fit diagnostics.
//!
//! The decaying sigmoid used throughout is `y = R / (1 + e^{k(x − x0)})`:
//! `R` is the plateau key rate, `k` the decay rate per km and `x0` the
//! distance at which the rate has dropped to `R/2`.

mod diagnostics;
mod poly;
mod report;
mod savgol;
mod sigmoid;
mod turning;

pub use diagnostics::{adjusted_r_squared, fit_diagnostics, FitDiagnostics};
pub use poly::{eval_poly, fit_log_cubic, fit_polynomial, LogBase, LogCubicFit, PolyFit};
pub use report::{read_xy_csv, read_xy_csv_path, FitReport, ParamEstimate};
pub use savgol::{savgol_smooth, savgol_smooth_with, EdgeMode, DEFAULT_POLYORDER, DEFAULT_WINDOW};
pub use sigmoid::{fit_sigmoid, sigmoid, SigmoidFit};
pub use turning::{stable_distance, turning_point, StableDistanceMethod, StableDistanceOptions, DEFAULT_EPSILON_FRACTION};
