use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitDiagnostics {
    pub r_squared: f64,
    pub adjusted_r_squared: f64,
    /// 95% confidence half-widths, one per parameter, in parameter order.
    /// Empty when no Jacobian was supplied.
    pub ci95_halfwidths: Vec<f64>,
    pub residuals: Vec<f64>,
    pub n: usize,
    pub n_params: usize,
}

/// `1 − (1 − R²)(n − 1)/(n − p − 1)`.
pub fn adjusted_r_squared(r_squared: f64, n: usize, n_params: usize) -> f64 {
    1.0 - (1.0 - r_squared) * (n as f64 - 1.0) / (n as f64 - n_params as f64 - 1.0)
}

/// Goodness of fit of `model` against `ys`.
///
/// With a Jacobian (rows = points, columns = parameters) the confidence
/// half-widths come from the linearized covariance `s²(JᵀJ)⁻¹` and a
/// Student-t quantile with `n − p` degrees of freedom.
pub fn fit_diagnostics(
    ys: &[f64],
    model: &[f64],
    n_params: usize,
    jacobian: Option<&DMatrix<f64>>,
) -> Result<FitDiagnostics> {
    if ys.len() != model.len() {
        return Err(Error::InvalidParams(format!(
            "{} observations but {} model values",
            ys.len(),
            model.len()
        )));
    }
    let n = ys.len();
    if n <= n_params + 1 {
        return Err(Error::TooFewPoints { needed: n_params + 2, got: n });
    }
    let mean = ys.iter().sum::<f64>() / n as f64;
    let ss_tot: f64 = ys.iter().map(|y| (y - mean).powi(2)).sum();
    if ss_tot == 0.0 {
        return Err(Error::DegenerateVariance);
    }
    let residuals: Vec<f64> = ys.iter().zip(model).map(|(y, m)| y - m).collect();
    let ss_res: f64 = residuals.iter().map(|r| r * r).sum();
    let r_squared = 1.0 - ss_res / ss_tot;

    let ci95_halfwidths = match jacobian {
        None => Vec::new(),
        Some(j) => {
            if j.nrows() != n || j.ncols() != n_params {
                return Err(Error::InvalidParams("jacobian shape does not match the data".into()));
            }
            let dof = (n - n_params) as f64;
            let s2 = ss_res / dof;
            let t = StudentsT::new(0.0, 1.0, dof)
                .map_err(|e| Error::InvalidParams(e.to_string()))?
                .inverse_cdf(0.975);
            match (j.transpose() * j).try_inverse() {
                Some(inv) => (0..n_params).map(|i| t * (s2 * inv[(i, i)]).max(0.0).sqrt()).collect(),
                None => vec![f64::NAN; n_params],
            }
        }
    };

    Ok(FitDiagnostics {
        r_squared,
        adjusted_r_squared: adjusted_r_squared(r_squared, n, n_params),
        ci95_halfwidths,
        residuals,
        n,
        n_params,
    })
}
