//! Raw key pools, QBER estimation, the error-correction penalty and the
//! trusted-node XOR relay.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::topology::NodeId;

/// Fraction of a pool sacrificed for QBER estimation unless configured otherwise.
pub const DEFAULT_QBER_SAMPLE: f64 = 0.1;

/// Sifted bits shared by the two ends of one link, `(RK)_{i,j}`.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct KeyPool {
    pub pair: (NodeId, NodeId),
    pub bits_a: Vec<bool>,
    pub bits_b: Vec<bool>,
    pub rounds_attempted: u64,
}

impl KeyPool {
    pub fn new(pair: (NodeId, NodeId)) -> Self {
        KeyPool { pair, ..KeyPool::default() }
    }

    pub fn push(&mut self, a: bool, b: bool) {
        self.bits_a.push(a);
        self.bits_b.push(b);
    }

    pub fn len(&self) -> usize {
        self.bits_a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits_a.is_empty()
    }

    /// Appends `other` after `self`. Pools of the same pair merge associatively.
    pub fn merge(&mut self, other: KeyPool) {
        self.bits_a.extend(other.bits_a);
        self.bits_b.extend(other.bits_b);
        self.rounds_attempted += other.rounds_attempted;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QberEstimate {
    pub q: f64,
    pub sample_size: usize,
    /// The raw mismatch fraction exceeded 0.5 and was clamped.
    pub clamped: bool,
}

/// Mismatch fraction over the first `⌈fraction·n⌉` bits, which are removed from the pool.
pub fn estimate_qber(pool: &mut KeyPool, sample_fraction: f64) -> Result<QberEstimate> {
    if !(sample_fraction > 0.0 && sample_fraction <= 1.0) {
        return Err(Error::InvalidParams(format!(
            "sample fraction must lie in (0, 1], got {sample_fraction}"
        )));
    }
    if pool.is_empty() {
        return Err(Error::EmptyPool);
    }
    let n = pool.len();
    let k = ((sample_fraction * n as f64).ceil() as usize).clamp(1, n);
    let mismatches = pool
        .bits_a
        .drain(..k)
        .zip(pool.bits_b.drain(..k))
        .filter(|(a, b)| a != b)
        .count();
    let raw = mismatches as f64 / k as f64;
    Ok(QberEstimate {
        q: raw.min(0.5),
        sample_size: k,
        clamped: raw > 0.5,
    })
}

/// `h(Q) = −Q log₂Q − (1−Q) log₂(1−Q)`, with `h(0) = h(1) = 0`.
pub fn binary_entropy(q: f64) -> f64 {
    if q <= 0.0 || q >= 1.0 {
        return 0.0;
    }
    -q * q.log2() - (1.0 - q) * (1.0 - q).log2()
}

/// `max(0, R·(1 − 2h(Q)))`.
pub fn corrected_key_rate(raw_rate: f64, q: f64) -> f64 {
    (raw_rate * (1.0 - 2.0 * binary_entropy(q))).max(0.0)
}

/// XOR of two equal-length bit strings.
pub fn xor_bits(a: &[bool], b: &[bool]) -> Vec<bool> {
    a.iter().zip(b).map(|(x, y)| x ^ y).collect()
}

/// Announcements published by the intermediate trusted nodes of a chain:
/// node `i` publishes `K_{i−1,i} ⊕ K_{i,i+1}`.
pub fn relay_announcements(segment_keys: &[Vec<bool>]) -> Result<Vec<Vec<bool>>> {
    let keys = truncated(segment_keys)?;
    Ok(keys.windows(2).map(|w| xor_bits(&w[0], &w[1])).collect())
}

/// Relays Alice's first-segment key to Bob across a chain of trusted nodes.
///
/// Bob holds only the last segment key and unwinds the public announcements
/// from his end: `K₁ = A₁ ⊕ A₂ ⊕ … ⊕ A_{n−1} ⊕ K_n`. All keys are first
/// truncated to the shortest one.
pub fn xor_relay(segment_keys: &[Vec<bool>]) -> Result<Vec<bool>> {
    let keys = truncated(segment_keys)?;
    let announcements = relay_announcements(&keys)?;
    let mut key = keys.last().expect("non-empty").clone();
    for a in announcements.iter().rev() {
        key = xor_bits(a, &key);
    }
    Ok(key)
}

fn truncated(segment_keys: &[Vec<bool>]) -> Result<Vec<Vec<bool>>> {
    let shortest = segment_keys.iter().map(Vec::len).min().ok_or(Error::EmptyInput)?;
    Ok(segment_keys.iter().map(|k| k[..shortest].to_vec()).collect())
}

/// Final pool size divided by rounds, in key bits per round.
pub fn key_rate(final_pool_bits: u64, rounds: u64) -> Result<f64> {
    if rounds == 0 {
        return Err(Error::ZeroRounds);
    }
    Ok(final_pool_bits as f64 / rounds as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn pool(a: Vec<bool>, b: Vec<bool>) -> KeyPool {
        let rounds = a.len() as u64;
        KeyPool { pair: (NodeId(0), NodeId(1)), bits_a: a, bits_b: b, rounds_attempted: rounds }
    }

    #[test]
    fn identical_pools_have_zero_qber() {
        let bits: Vec<bool> = (0..100).map(|i| i % 3 == 0).collect();
        let mut p = pool(bits.clone(), bits);
        let q = estimate_qber(&mut p, 0.1).unwrap();
        assert_eq!(q.q, 0.0);
        assert_eq!(q.sample_size, 10);
        assert_eq!(p.len(), 90);
    }

    #[test]
    fn complementary_pools_clamp() {
        let a: Vec<bool> = (0..50).map(|i| i % 2 == 0).collect();
        let b: Vec<bool> = a.iter().map(|x| !x).collect();
        let mut p = pool(a, b);
        let q = estimate_qber(&mut p, 1.0).unwrap();
        assert_eq!(q.q, 0.5);
        assert!(q.clamped);
        assert!(p.is_empty());
    }

    #[test]
    fn qber_errors() {
        let mut empty = pool(vec![], vec![]);
        assert!(matches!(estimate_qber(&mut empty, 0.1), Err(Error::EmptyPool)));
        let mut p = pool(vec![true], vec![true]);
        assert!(estimate_qber(&mut p, 0.0).is_err());
    }

    #[test]
    fn qber_tracks_flip_probability() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let n = 100_000;
        let a: Vec<bool> = (0..n).map(|_| rng.random()).collect();
        let b: Vec<bool> = a.iter().map(|&x| x ^ (rng.random::<f64>() < 0.02)).collect();
        let mut p = pool(a, b);
        let q = estimate_qber(&mut p, 1.0).unwrap();
        assert!((q.q - 0.02).abs() < 3.0 * (0.02f64 * 0.98 / n as f64).sqrt());
    }

    #[test]
    fn entropy_values() {
        assert_eq!(binary_entropy(0.0), 0.0);
        assert_eq!(binary_entropy(1.0), 0.0);
        assert_eq!(binary_entropy(0.5), 1.0);
        assert!((binary_entropy(0.02) - 0.14144).abs() < 1e-5);
    }

    #[test]
    fn corrected_rate_examples() {
        assert_eq!(corrected_key_rate(0.8, 0.0), 0.8);
        assert_eq!(corrected_key_rate(0.8, 0.5), 0.0);
        assert!((corrected_key_rate(1.0, 0.02) - 0.71712).abs() < 1e-5);
    }

    #[test]
    fn relay_examples() {
        let k1 = vec![true, false, true, true];
        assert_eq!(xor_relay(std::slice::from_ref(&k1)).unwrap(), k1);
        let k2 = vec![false, false, true, false];
        assert_eq!(xor_relay(&[k1.clone(), k2.clone()]).unwrap(), k1);
        // (K₁⊕K₂)⊕K₂
        assert_eq!(xor_bits(&xor_bits(&k1, &k2), &k2), k1);
        assert!(matches!(xor_relay(&[]), Err(Error::EmptyInput)));
    }

    #[test]
    fn relay_truncates_to_shortest() {
        let k1 = vec![true; 8];
        let k2 = vec![false; 5];
        assert_eq!(xor_relay(&[k1, k2]).unwrap(), vec![true; 5]);
    }

    #[test]
    fn key_rate_examples() {
        assert_eq!(key_rate(0, 10).unwrap(), 0.0);
        assert_eq!(key_rate(10, 10).unwrap(), 1.0);
        assert_eq!(key_rate(71_712, 100_000).unwrap(), 0.71712);
        assert!(matches!(key_rate(1, 0), Err(Error::ZeroRounds)));
    }

    #[test]
    fn multi_path_key_rate_is_additive() {
        let parts = [1200u64, 830, 7];
        let sum: f64 = parts.iter().map(|&b| key_rate(b, 5000).unwrap()).sum();
        assert!((key_rate(parts.iter().sum(), 5000).unwrap() - sum).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn relay_recovers_first_key(seed in any::<u64>(), hops in 1usize..12, len in 1usize..300) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let keys: Vec<Vec<bool>> = (0..hops).map(|_| (0..len).map(|_| rng.random()).collect()).collect();
            prop_assert_eq!(xor_relay(&keys).unwrap(), keys[0].clone());
            // Undoing the announcements from Alice's side yields Bob's key.
            let ann = relay_announcements(&keys).unwrap();
            let mut k = keys[0].clone();
            for a in &ann {
                k = xor_bits(a, &k);
            }
            prop_assert_eq!(&k, keys.last().unwrap());
        }

        #[test]
        fn corrected_rate_monotone_and_linear(r in 0.0f64..10.0, q in 0.0f64..0.5, dq in 0.0f64..0.1, s in 0.0f64..5.0) {
            let q2 = (q + dq).min(0.5);
            prop_assert!(corrected_key_rate(r, q2) <= corrected_key_rate(r, q) + 1e-15);
            let lhs = corrected_key_rate(s * r, q);
            prop_assert!((lhs - s * corrected_key_rate(r, q)).abs() <= 1e-12 * (1.0 + lhs));
        }
    }
}
