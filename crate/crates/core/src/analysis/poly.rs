use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::diagnostics::{fit_diagnostics, FitDiagnostics};
use crate::error::{Error, Result};

/// Condition threshold on the scaled normal matrix below which the design is
/// treated as rank deficient.
const RCOND_MIN: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolyFit {
    /// Highest power first.
    pub coefficients: Vec<f64>,
    pub diagnostics: FitDiagnostics,
}

impl PolyFit {
    pub fn degree(&self) -> usize {
        self.coefficients.len() - 1
    }

    pub fn eval(&self, x: f64) -> f64 {
        eval_poly(&self.coefficients, x)
    }
}

/// Horner evaluation, highest power first.
pub fn eval_poly(coefficients: &[f64], x: f64) -> f64 {
    coefficients.iter().fold(0.0, |acc, c| acc * x + c)
}

/// Ordinary least squares through the normal equations, with every design
/// column scaled to unit norm before factoring.
pub fn fit_polynomial(xs: &[f64], ys: &[f64], degree: usize) -> Result<PolyFit> {
    if xs.len() != ys.len() {
        return Err(Error::InvalidParams("xs and ys differ in length".into()));
    }
    let n = xs.len();
    let p = degree + 1;
    if n < p {
        return Err(Error::RankDeficient);
    }
    if n == p {
        return Err(Error::TooFewPoints { needed: p + 1, got: n });
    }
    // columns: x^degree, ..., x, 1
    let design = DMatrix::from_fn(n, p, |r, c| xs[r].powi((degree - c) as i32));
    let scale: Vec<f64> = (0..p).map(|c| design.column(c).norm()).collect();
    if scale.iter().any(|&s| s == 0.0 || !s.is_finite()) {
        return Err(Error::RankDeficient);
    }
    let scaled = DMatrix::from_fn(n, p, |r, c| design[(r, c)] / scale[c]);
    let y = DVector::from_column_slice(ys);
    let normal = scaled.transpose() * &scaled;
    let rhs = scaled.transpose() * &y;

    let eig = normal.clone().symmetric_eigenvalues();
    let (lo, hi) = eig.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &e| (lo.min(e), hi.max(e.abs())));
    if !(lo > RCOND_MIN * hi) {
        return Err(Error::RankDeficient);
    }
    let chol = normal.clone().cholesky().ok_or(Error::RankDeficient)?;
    let mut beta = chol.solve(&rhs);
    // one step of iterative refinement
    let correction = chol.solve(&(&rhs - &normal * &beta));
    beta += correction;

    let coefficients: Vec<f64> = (0..p).map(|c| beta[c] / scale[c]).collect();
    let model: Vec<f64> = xs.iter().map(|&x| eval_poly(&coefficients, x)).collect();
    let diagnostics = fit_diagnostics(ys, &model, p, Some(&design))?;
    Ok(PolyFit { coefficients, diagnostics })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LogBase {
    #[default]
    Ten,
    E,
}

impl LogBase {
    pub fn apply(self, v: f64) -> f64 {
        match self {
            LogBase::Ten => v.log10(),
            LogBase::E => v.ln(),
        }
    }
}

/// Cubic in `log(burst)`: `D_s = −φ·x³ + β·x² + γ·x + δ` with `x = log b`.
///
/// The leading coefficient is stored signed (it is `−φ`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogCubicFit {
    pub base: LogBase,
    pub fit: PolyFit,
}

impl LogCubicFit {
    pub fn eval_burst(&self, burst: f64) -> f64 {
        self.fit.eval(self.base.apply(burst))
    }

    /// `(−φ, β, γ, δ)`.
    pub fn coefficients(&self) -> [f64; 4] {
        let c = &self.fit.coefficients;
        [c[0], c[1], c[2], c[3]]
    }
}

pub fn fit_log_cubic(burst_sizes: &[f64], stable_distances: &[f64], base: LogBase) -> Result<LogCubicFit> {
    if let Some(b) = burst_sizes.iter().find(|&&b| !(b >= 1.0)) {
        return Err(Error::InvalidParams(format!("burst sizes must be at least 1, got {b}")));
    }
    let xs: Vec<f64> = burst_sizes.iter().map(|&b| base.apply(b)).collect();
    Ok(LogCubicFit { base, fit: fit_polynomial(&xs, stable_distances, 3)? })
}
