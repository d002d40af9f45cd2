use std::fmt::Write as _;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::diagnostics::FitDiagnostics;
use super::poly::{LogCubicFit, PolyFit};
use super::sigmoid::SigmoidFit;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamEstimate {
    pub name: String,
    pub value: f64,
    /// 95% confidence half-width; NaN when the covariance is singular.
    pub ci95: f64,
}

/// Structured summary of one fit plus its per-point residual table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub model: String,
    pub params: Vec<ParamEstimate>,
    pub r_squared: f64,
    pub adjusted_r_squared: f64,
    pub n: usize,
    /// `(x, y, y_model, residual)`.
    pub rows: Vec<(f64, f64, f64, f64)>,
}

impl FitReport {
    fn build(model: &str, names: &[&str], values: &[f64], diag: &FitDiagnostics, xs: &[f64], ys: &[f64]) -> Self {
        let params = names
            .iter()
            .zip(values)
            .enumerate()
            .map(|(i, (name, &value))| ParamEstimate {
                name: (*name).to_string(),
                value,
                ci95: diag.ci95_halfwidths.get(i).copied().unwrap_or(f64::NAN),
            })
            .collect();
        let rows = xs
            .iter()
            .zip(ys)
            .zip(&diag.residuals)
            .map(|((&x, &y), &res)| (x, y, y - res, res))
            .collect();
        FitReport {
            model: model.to_string(),
            params,
            r_squared: diag.r_squared,
            adjusted_r_squared: diag.adjusted_r_squared,
            n: diag.n,
            rows,
        }
    }

    pub fn sigmoid(fit: &SigmoidFit, xs: &[f64], ys: &[f64]) -> Self {
        Self::build("sigmoid", &["R", "k", "x0"], &fit.params(), &fit.diagnostics, xs, ys)
    }

    pub fn polynomial(fit: &PolyFit, xs: &[f64], ys: &[f64]) -> Self {
        let names: Vec<String> = (0..=fit.degree()).rev().map(|p| format!("c{p}")).collect();
        let names: Vec<&str> = names.iter().map(String::as_str).collect();
        Self::build(&format!("poly{}", fit.degree()), &names, &fit.coefficients, &fit.diagnostics, xs, ys)
    }

    /// `xs` are the raw burst sizes; the residual table reports them unlogged.
    pub fn log_cubic(fit: &LogCubicFit, bursts: &[f64], ys: &[f64]) -> Self {
        Self::build("logcubic", &["-phi", "beta", "gamma", "delta"], &fit.coefficients(), &fit.fit.diagnostics, bursts, ys)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        writeln!(s, "model: {}", self.model).unwrap();
        for p in &self.params {
            writeln!(s, "{:<6} = {:.9e} ± {:.3e}", p.name, p.value, p.ci95).unwrap();
        }
        writeln!(s, "r2: {:.9}", self.r_squared).unwrap();
        writeln!(s, "adj_r2: {:.9}", self.adjusted_r_squared).unwrap();
        writeln!(s, "n: {}", self.n).unwrap();
        s
    }

    pub fn write_residual_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["x", "y", "y_model", "residual"])?;
        for (x, y, m, r) in &self.rows {
            w.serialize((x, y, m, r))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Reads `(x, y)` pairs from a CSV with a header row.
///
/// Sweep output is recognised by its `key_rate` column; any other file uses
/// its first two columns.
pub fn read_xy_csv<R: Read>(input: R) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).comment(Some(b'#')).from_reader(input);
    let headers = rdr.headers()?.clone();
    let find = |name: &str| headers.iter().position(|h| h == name);
    let (xi, yi) = match (find("x"), find("key_rate")) {
        (Some(x), Some(y)) => (x, y),
        _ if headers.len() >= 2 => (0, 1),
        _ => return Err(Error::Parse("expected at least two columns".into())),
    };
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let parse = |i: usize| -> Result<f64> {
            let field = rec.get(i).unwrap_or("");
            field
                .parse()
                .map_err(|_| Error::Parse(format!("row {}: cannot read {field:?} as a number", line + 2)))
        };
        xs.push(parse(xi)?);
        ys.push(parse(yi)?);
    }
    if xs.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok((xs, ys))
}

pub fn read_xy_csv_path(path: &Path) -> Result<(Vec<f64>, Vec<f64>)> {
    read_xy_csv(std::fs::File::open(path)?)
}
