//! Photon-number statistics of weak coherent pulses and the leakage of a
//! beamsplitting eavesdropper.
//!
//! Two closed forms here are kept exactly as they are commonly quoted even
//! though they disagree with a direct expansion of the Poisson law:
//!
//! - [`multi_photon_prob`] returns `μ/2 + μ²/4`, while the Taylor expansion
//!   of `P(n ≥ 2)` is `μ²/2 + O(μ³)`. [`multi_photon_prob_exact`] gives the
//!   exact tail for comparison.
//! - [`pns_mutual_information`] uses `μ/2` as the two-photon weight, whereas
//!   the second-order expansion gives `P(2) ≈ μ²/2`.

use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// `μⁿ e^(−μ) / n!`, evaluated in log space.
pub fn poisson_pmf(n: u32, mu: f64) -> f64 {
    debug_assert!(mu >= 0.0);
    if mu == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    let n_f = n as f64;
    (n_f * mu.ln() - mu - ln_gamma(n_f + 1.0)).exp()
}

/// Second-order expansion of `P(0)`, `P(1)`, `P(2)`.
pub fn poisson_second_order(n: u32, mu: f64) -> Result<f64> {
    match n {
        0 => Ok(1.0 - mu + mu * mu / 2.0),
        1 => Ok(mu - mu * mu),
        2 => Ok(mu * mu / 2.0),
        _ => Err(Error::OutOfRange(format!("second-order expansion covers n ≤ 2, got {n}"))),
    }
}

/// Multi-photon probability in the simplified form `μ/2 + μ²/4`.
pub fn multi_photon_prob(mu: f64) -> f64 {
    mu / 2.0 + mu * mu / 4.0
}

/// Exact `P(n ≥ 2) = 1 − e^(−μ)(1 + μ)`.
pub fn multi_photon_prob_exact(mu: f64) -> f64 {
    // -expm1 keeps precision for small mu
    -(-mu).exp_m1() - mu * (-mu).exp()
}

/// Alice–Eve mutual information `(μ/2)·2λ(1−λ)·(1/2)` for a beamsplitter tapping fraction `λ`.
pub fn pns_mutual_information(mu: f64, lambda: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::OutOfRange(format!("split fraction must lie in [0, 1], got {lambda}")));
    }
    // λ(1−λ) written as ¼ − (λ−½)² so that λ and 1−λ give identical bits.
    let d = lambda - 0.5;
    Ok((mu / 2.0) * (2.0 * (0.25 - d * d)) * 0.5)
}
