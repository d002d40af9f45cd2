use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::diagnostics::{fit_diagnostics, FitDiagnostics};
use crate::error::{Error, Result};

const MAX_ITERATIONS: usize = 200;
const STEP_TOLERANCE: f64 = 1e-8;
const MAX_HALVINGS: usize = 40;

/// `R / (1 + e^(k(x − x0)))`. Decays from `R` to 0 for `k > 0`.
pub fn sigmoid(x: f64, r: f64, k: f64, x0: f64) -> f64 {
    r * logistic_tail(k * (x - x0))
}

/// `1 / (1 + e^z)` without overflow for large `|z|`.
fn logistic_tail(z: f64) -> f64 {
    if z > 0.0 {
        let t = (-z).exp();
        t / (1.0 + t)
    } else {
        1.0 / (1.0 + z.exp())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigmoidFit {
    /// Plateau key rate.
    pub r: f64,
    /// Decay rate per km.
    pub k: f64,
    /// Half-rate distance, km.
    pub x0: f64,
    pub diagnostics: FitDiagnostics,
    pub iterations: usize,
}

impl SigmoidFit {
    pub fn eval(&self, x: f64) -> f64 {
        sigmoid(x, self.r, self.k, self.x0)
    }

    /// Distance at which the curve has dropped to `level · R`, e.g. 0.95
    /// for the end of the plateau.
    pub fn plateau_end(&self, level: f64) -> f64 {
        self.x0 + (1.0 / level - 1.0).ln() / self.k
    }

    pub fn params(&self) -> [f64; 3] {
        [self.r, self.k, self.x0]
    }
}

fn residuals(xs: &[f64], ys: &[f64], p: &[f64; 3]) -> DVector<f64> {
    DVector::from_iterator(xs.len(), xs.iter().zip(ys).map(|(&x, &y)| y - sigmoid(x, p[0], p[1], p[2])))
}

fn jacobian(xs: &[f64], p: &[f64; 3]) -> DMatrix<f64> {
    let [r, k, x0] = *p;
    DMatrix::from_fn(xs.len(), 3, |i, c| {
        let u = xs[i] - x0;
        let s = logistic_tail(k * u);
        // d/dz of 1/(1+e^z) is −s(1−s)
        let ds = -s * (1.0 - s);
        match c {
            0 => s,
            1 => r * ds * u,
            _ => -r * ds * k,
        }
    })
}

fn initial_guess(xs: &[f64], ys: &[f64]) -> [f64; 3] {
    let r0 = ys.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let half = r0 / 2.0;
    let span = xs[xs.len() - 1] - xs[0];
    // bracket nearest the half-height, preferring the first one found
    let bracket = (0..xs.len() - 1)
        .filter(|&j| (ys[j] - half) * (ys[j + 1] - half) <= 0.0 && ys[j] != ys[j + 1])
        .min_by(|&a, &b| {
            let da = (ys[a] - half).abs().min((ys[a + 1] - half).abs());
            let db = (ys[b] - half).abs().min((ys[b + 1] - half).abs());
            da.total_cmp(&db)
        });
    let (x0, slope) = match bracket {
        Some(j) => {
            let t = (half - ys[j]) / (ys[j + 1] - ys[j]);
            let slope = (ys[j + 1] - ys[j]) / (xs[j + 1] - xs[j]);
            (xs[j] + t * (xs[j + 1] - xs[j]), slope)
        }
        None => {
            let slope = (ys[ys.len() - 1] - ys[0]) / span;
            (xs[xs.len() / 2], slope)
        }
    };
    let mut k0 = -4.0 * slope / r0;
    if !k0.is_finite() || k0.abs() < 1e-12 {
        k0 = 4.0 / span;
    }
    [r0, k0, x0]
}

/// Least-squares fit of [`sigmoid`] by damped Gauss–Newton.
///
/// Each step solves the linearized problem and is halved until the residual
/// sum of squares decreases. Stops when the relative step falls below 1e-8.
pub fn fit_sigmoid(xs: &[f64], ys: &[f64]) -> Result<SigmoidFit> {
    if xs.len() != ys.len() {
        return Err(Error::InvalidParams(format!("{} xs but {} ys", xs.len(), ys.len())));
    }
    if xs.len() < 4 {
        return Err(Error::TooFewPoints { needed: 4, got: xs.len() });
    }
    if xs.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidParams("xs must be strictly increasing".into()));
    }
    if ys.iter().any(|y| !y.is_finite()) {
        return Err(Error::InvalidParams("ys must be finite".into()));
    }
    if ys.iter().all(|&y| y == ys[0]) {
        return Err(Error::DegenerateData("flat series has no sigmoid shape".into()));
    }

    let mut p = initial_guess(xs, ys);
    let mut res = residuals(xs, ys, &p);
    let mut ssr = res.norm_squared();
    let mut converged = false;
    let mut iterations = 0;

    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let j = jacobian(xs, &p);
        let Ok(step) = j.clone().svd(true, true).solve(&res, 1e-14) else {
            break;
        };
        let mut lambda = 1.0;
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let trial = [p[0] + lambda * step[0], p[1] + lambda * step[1], p[2] + lambda * step[2]];
            let trial_res = residuals(xs, ys, &trial);
            let trial_ssr = trial_res.norm_squared();
            if trial_ssr.is_finite() && trial_ssr <= ssr {
                accepted = Some((trial, trial_res, trial_ssr));
                break;
            }
            lambda *= 0.5;
        }
        let Some((trial, trial_res, trial_ssr)) = accepted else {
            // no descent direction left at working precision
            converged = true;
            break;
        };
        let rel_step = (0..3)
            .map(|i| ((trial[i] - p[i]) / p[i].abs().max(1e-12)).abs())
            .fold(0.0, f64::max);
        p = trial;
        res = trial_res;
        ssr = trial_ssr;
        if rel_step < STEP_TOLERANCE {
            converged = true;
            break;
        }
    }

    let model: Vec<f64> = xs.iter().map(|&x| sigmoid(x, p[0], p[1], p[2])).collect();
    let diagnostics = fit_diagnostics(ys, &model, 3, Some(&jacobian(xs, &p)))?;
    let fit = SigmoidFit { r: p[0], k: p[1], x0: p[2], diagnostics, iterations };
    if converged {
        Ok(fit)
    } else {
        Err(Error::NonConvergence { iterations, best: Box::new(fit) })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    const TRUE: [f64; 3] = [0.655, 0.139, 25.303];

    fn grid() -> Vec<f64> {
        (1..=60).map(f64::from).collect()
    }

    fn samples(xs: &[f64]) -> Vec<f64> {
        xs.iter().map(|&x| sigmoid(x, TRUE[0], TRUE[1], TRUE[2])).collect()
    }

    fn rel_err(fit: &SigmoidFit) -> f64 {
        fit.params().iter().zip(TRUE).map(|(a, b)| ((a - b) / b).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn recovers_noiseless_parameters() {
        let xs = grid();
        let fit = fit_sigmoid(&xs, &samples(&xs)).unwrap();
        assert!(rel_err(&fit) < 1e-3, "{:?}", fit.params());
        assert!(fit.diagnostics.r_squared > 1.0 - 1e-12);
    }

    #[test]
    fn recovers_noisy_parameters_every_trial() {
        let xs = grid();
        let clean = samples(&xs);
        let noise = Normal::new(0.0, 0.01).unwrap();
        for trial in 0..20 {
            let mut rng = ChaCha8Rng::seed_from_u64(1000 + trial);
            let ys: Vec<f64> = clean.iter().map(|y| y + noise.sample(&mut rng)).collect();
            let fit = fit_sigmoid(&xs, &ys).unwrap();
            assert!(rel_err(&fit) < 0.05, "trial {trial}: {:?}", fit.params());
            assert_eq!(fit.diagnostics.ci95_halfwidths.len(), 3);
        }
    }

    #[test]
    fn half_height_at_x0() {
        let xs = grid();
        let fit = fit_sigmoid(&xs, &samples(&xs)).unwrap();
        assert_eq!(fit.eval(fit.x0), fit.r / 2.0);
        assert!((fit.eval(fit.plateau_end(0.95)) - 0.95 * fit.r).abs() < 1e-12);
    }

    #[test]
    fn never_worse_than_initialization() {
        let xs = grid();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let noise = Normal::new(0.0, 0.05).unwrap();
        let ys: Vec<f64> = samples(&xs).iter().map(|y| y + noise.sample(&mut rng)).collect();
        let init = residuals(&xs, &ys, &initial_guess(&xs, &ys)).norm();
        let fit = fit_sigmoid(&xs, &ys).unwrap();
        let end: f64 = fit.diagnostics.residuals.iter().map(|r| r * r).sum::<f64>().sqrt();
        assert!(end <= init);
    }

    #[test]
    fn rising_curves_fit_with_negative_k() {
        let xs = grid();
        let ys: Vec<f64> = xs.iter().map(|&x| sigmoid(x, 2.0, -0.2, 30.0)).collect();
        let fit = fit_sigmoid(&xs, &ys).unwrap();
        assert!((fit.k + 0.2).abs() < 1e-6 && (fit.x0 - 30.0).abs() < 1e-5);
    }

    #[test]
    fn input_errors() {
        let xs = grid();
        assert!(matches!(fit_sigmoid(&xs, &vec![0.3; 60]), Err(Error::DegenerateData(_))));
        assert!(matches!(fit_sigmoid(&xs[..3], &[1.0, 0.5, 0.1]), Err(Error::TooFewPoints { .. })));
        assert!(fit_sigmoid(&[1.0, 1.0, 2.0, 3.0], &[1.0, 0.9, 0.5, 0.1]).is_err());
    }

    #[test]
    fn extreme_arguments_do_not_overflow() {
        assert_eq!(sigmoid(1e6, 1.0, 1.0, 0.0), 0.0);
        assert_eq!(sigmoid(-1e6, 1.0, 1.0, 0.0), 1.0);
    }
}
