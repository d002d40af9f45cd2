//! Physical-layer success models.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::topology::{RoutePath, ALPHA_FIBER};

/// Where the `r` parallel Bell attempts of a repeater chain are spent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BellRedundancy {
    /// `r` parallel pair distributions per segment; swaps succeed with raw `B`.
    #[default]
    Pairs,
    /// One pair attempt per segment; swaps succeed with `1 − (1 − B)^r`.
    Swaps,
    /// Redundancy on both pair distribution and swaps.
    PairsAndSwaps,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    /// Attenuation of plain fiber, dB/km. Links carry their own alpha; this
    /// value is used when building topologies and synthetic paths.
    pub alpha: f64,
    /// Probability that a delivered bit is flipped by decoherence.
    pub decoherence: f64,
    /// Bell-state measurement success probability at a repeater.
    pub bsm_success: f64,
    /// Parallel Bell attempts.
    pub redundancy: u32,
    pub bell_redundancy: BellRedundancy,
}

impl Default for ChannelParams {
    fn default() -> Self {
        ChannelParams {
            alpha: ALPHA_FIBER,
            decoherence: 0.02,
            bsm_success: 0.85,
            redundancy: 5,
            bell_redundancy: BellRedundancy::Pairs,
        }
    }
}

impl ChannelParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::InvalidParams(format!("alpha must be positive, got {}", self.alpha)));
        }
        check_probability(self.decoherence, "decoherence")?;
        check_probability(self.bsm_success, "bsm success")?;
        if self.redundancy == 0 {
            return Err(Error::InvalidParams("redundancy must be at least 1".into()));
        }
        Ok(())
    }

    /// Probability that one segment's Bell pair is established.
    pub fn pair_success(&self, segment_transmission: f64) -> f64 {
        match self.bell_redundancy {
            BellRedundancy::Pairs | BellRedundancy::PairsAndSwaps => {
                redundant_success(segment_transmission, self.redundancy)
            }
            BellRedundancy::Swaps => segment_transmission,
        }
    }

    /// Probability that one interior swap succeeds.
    pub fn swap_success(&self) -> f64 {
        match self.bell_redundancy {
            BellRedundancy::Pairs => self.bsm_success,
            BellRedundancy::Swaps | BellRedundancy::PairsAndSwaps => {
                redundant_success(self.bsm_success, self.redundancy)
            }
        }
    }
}

pub(crate) fn check_probability(p: f64, what: &str) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::OutOfRange(format!("{what} must lie in [0, 1], got {p}")))
    }
}

/// Fiber survival probability `10^(−α·L/10)`.
pub fn transmission_probability(length_km: f64, alpha: f64) -> Result<f64> {
    if length_km < 0.0 {
        return Err(Error::NegativeLength(length_km));
    }
    if !(alpha > 0.0) {
        return Err(Error::InvalidParams(format!("alpha must be positive, got {alpha}")));
    }
    Ok(10f64.powf(-alpha * length_km / 10.0))
}

/// Survival over every hop of `path`, `traversals` times over.
///
/// Three traversals model the 3-stage protocol's round trip and a half.
pub fn path_transmission(path: &RoutePath, traversals: u32) -> Result<f64> {
    if path.hops.is_empty() {
        return Err(Error::EmptyPath);
    }
    if traversals == 0 {
        return Err(Error::InvalidParams("traversals must be at least 1".into()));
    }
    let mut p = 1.0;
    for h in &path.hops {
        p *= transmission_probability(h.length_km, h.alpha)?;
    }
    Ok(p.powi(traversals as i32))
}

/// `1 − (1 − p)^r`: at least one of `r` independent attempts succeeds.
pub fn redundant_success(p: f64, r: u32) -> f64 {
    1.0 - (1.0 - p).powi(r as i32)
}

/// Success probability of `r` parallel Bell-state measurements.
pub fn redundant_bsm_success(bsm: f64, r: u32) -> Result<f64> {
    check_probability(bsm, "bsm success")?;
    if r == 0 {
        return Err(Error::InvalidParams("redundancy must be at least 1".into()));
    }
    Ok(redundant_success(bsm, r))
}

/// True with probability `p`. Always consumes exactly one draw from `rng`.
pub fn sample_bernoulli<R: Rng + ?Sized>(rng: &mut R, p: f64) -> bool {
    rng.random::<f64>() < p
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::NodeKind;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn transmission_examples() {
        assert_eq!(transmission_probability(0.0, 0.15).unwrap(), 1.0);
        assert!((transmission_probability(10.0, 0.15).unwrap() - 0.70795).abs() < 1e-5);
        assert!((transmission_probability(10.0, 0.4).unwrap() - 0.39811).abs() < 1e-5);
        assert!(matches!(transmission_probability(-1.0, 0.15), Err(Error::NegativeLength(_))));
    }

    #[test]
    fn three_traversals_of_10km() {
        let p = RoutePath::fiber(&[10.0], 0.15, NodeKind::Trusted).unwrap();
        let t = path_transmission(&p, 3).unwrap();
        assert!((t - 0.35481).abs() < 1e-5);
        assert!((t - transmission_probability(30.0, 0.15).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn zero_length_path_always_transmits() {
        let p = RoutePath::fiber(&[0.0, 0.0, 0.0], 0.15, NodeKind::Trusted).unwrap();
        assert_eq!(path_transmission(&p, 1).unwrap(), 1.0);
    }

    #[test]
    fn split_hops_match_single_hop() {
        let two = RoutePath::fiber(&[5.0, 5.0], 0.15, NodeKind::Trusted).unwrap();
        let one = RoutePath::fiber(&[10.0], 0.15, NodeKind::Trusted).unwrap();
        let (a, b) = (path_transmission(&two, 1).unwrap(), path_transmission(&one, 1).unwrap());
        assert!((a - b).abs() < 1e-15);
    }

    #[test]
    fn bsm_redundancy() {
        assert!((redundant_bsm_success(0.85, 5).unwrap() - 0.9999241).abs() < 1e-7);
        assert_eq!(redundant_bsm_success(0.37, 1).unwrap(), 0.37);
        assert_eq!(redundant_bsm_success(1.0, 7).unwrap(), 1.0);
        assert!(redundant_bsm_success(1.1, 1).is_err());
        assert!(redundant_bsm_success(0.5, 0).is_err());
    }

    #[test]
    fn bernoulli_edges_and_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!((0..1000).all(|_| !sample_bernoulli(&mut rng, 0.0)));
        assert!((0..1000).all(|_| sample_bernoulli(&mut rng, 1.0)));
        let p = 0.70795;
        let n = 100_000;
        let hits = (0..n).filter(|_| sample_bernoulli(&mut rng, p)).count();
        let mean = hits as f64 / n as f64;
        assert!((mean - p).abs() < 3.0 * (p * (1.0 - p) / n as f64).sqrt());
    }

    #[test]
    fn bernoulli_consumes_one_draw() {
        let mut a = ChaCha8Rng::seed_from_u64(9);
        let mut b = a.clone();
        sample_bernoulli(&mut a, 0.3);
        let _: f64 = b.random();
        assert_eq!(a.random::<u64>(), b.random::<u64>());
    }

    #[test]
    fn redundancy_placement() {
        let mut ch = ChannelParams::default();
        assert_eq!(ch.swap_success(), 0.85);
        assert!((ch.pair_success(0.5) - (1.0 - 0.5f64.powi(5))).abs() < 1e-15);
        ch.bell_redundancy = BellRedundancy::Swaps;
        assert_eq!(ch.pair_success(0.5), 0.5);
        assert!((ch.swap_success() - 0.9999241).abs() < 1e-7);
    }

    proptest! {
        #[test]
        fn transmission_decreases(l in 0.0f64..200.0, dl in 0.01f64..50.0, a in 0.01f64..1.0, da in 0.01f64..1.0) {
            let p = transmission_probability(l, a).unwrap();
            prop_assert!(p > 0.0 && p <= 1.0);
            prop_assert!(transmission_probability(l + dl, a).unwrap() < p);
            prop_assert!(transmission_probability(l + 1.0, a + da).unwrap() < transmission_probability(l + 1.0, a).unwrap());
        }

        #[test]
        fn concatenation_multiplies(lengths in prop::collection::vec(0.0f64..30.0, 2..8), cut in 1usize..7, t in 1u32..4) {
            let cut = cut.min(lengths.len() - 1);
            let whole = RoutePath::fiber(&lengths, 0.15, NodeKind::Trusted).unwrap();
            let left = RoutePath::fiber(&lengths[..cut], 0.15, NodeKind::Trusted).unwrap();
            let right = RoutePath::fiber(&lengths[cut..], 0.15, NodeKind::Trusted).unwrap();
            let lhs = path_transmission(&whole, t).unwrap();
            let rhs = path_transmission(&left, t).unwrap() * path_transmission(&right, t).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * lhs.max(1e-300));
            let uniform = transmission_probability(t as f64 * whole.total_length_km(), 0.15).unwrap();
            prop_assert!((lhs - uniform).abs() <= 1e-12);
        }

        #[test]
        fn bsm_monotone(b in 0.0f64..1.0, db in 0.0f64..0.5, r in 1u32..10) {
            let base = redundant_bsm_success(b, r).unwrap();
            prop_assert!(redundant_bsm_success((b + db).min(1.0), r).unwrap() >= base);
            prop_assert!(redundant_bsm_success(b, r + 1).unwrap() >= base);
        }
    }
}
