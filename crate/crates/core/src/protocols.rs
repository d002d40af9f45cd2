//! Per-round stochastic engines for Decoy-state BB84, the 3-stage protocol and E91.
//!
//! A round is simulated at the success/failure level: photons either survive
//! the fiber or not, Bell pairs and swaps either succeed or not, and a
//! delivered bit is flipped with the decoherence probability `D`.
//!
//! [`RoundEngine`] precomputes the per-path probabilities once; the
//! `run_*_round` functions are one-shot conveniences over it.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{path_transmission, ChannelParams};
use crate::error::{Error, Result};
use crate::photonstats::poisson_pmf;
use crate::topology::{NodeKind, RoutePath};

/// Photon counts above this are treated as unreachable by inverse sampling.
const POISSON_CUTOFF: u32 = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Protocol {
    Decoy,
    ThreeStage,
    E91,
}

impl Protocol {
    pub fn as_str(self) -> &'static str {
        match self {
            Protocol::Decoy => "decoy",
            Protocol::ThreeStage => "three-stage",
            Protocol::E91 => "e91",
        }
    }

    /// Role taken by interior non-switch nodes when this protocol runs.
    pub fn interior_role(self) -> NodeKind {
        match self {
            Protocol::E91 => NodeKind::Repeater,
            Protocol::Decoy | Protocol::ThreeStage => NodeKind::Trusted,
        }
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Protocol {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "decoy" | "decoy-state" => Ok(Protocol::Decoy),
            "three-stage" | "three_stage" | "3-stage" | "3stage" => Ok(Protocol::ThreeStage),
            "e91" => Ok(Protocol::E91),
            other => Err(Error::Parse(format!("unknown protocol `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IntensityClass {
    Vacuum,
    Decoy,
    Signal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Intensity {
    pub mu: f64,
    pub weight: f64,
    pub class: IntensityClass,
}

/// How a Decoy-state sender picks the mean photon number of each pulse.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IntensitySet {
    /// Weighted discrete set; only `Signal` pulses contribute key material.
    Discrete(Vec<Intensity>),
    /// `μ ~ Uniform[0, max]`, every pulse a signal pulse.
    Uniform { max: f64 },
}

impl Default for IntensitySet {
    /// Vacuum + weak decoy + signal: `{0, 0.1, 0.65}` weighted `{0.10, 0.20, 0.70}`.
    fn default() -> Self {
        IntensitySet::Discrete(vec![
            Intensity { mu: 0.0, weight: 0.10, class: IntensityClass::Vacuum },
            Intensity { mu: 0.1, weight: 0.20, class: IntensityClass::Decoy },
            Intensity { mu: 0.65, weight: 0.70, class: IntensityClass::Signal },
        ])
    }
}

impl IntensitySet {
    pub fn single_signal(mu: f64) -> Self {
        IntensitySet::Discrete(vec![Intensity { mu, weight: 1.0, class: IntensityClass::Signal }])
    }

    fn validate(&self) -> Result<()> {
        match self {
            IntensitySet::Discrete(set) => {
                if set.is_empty() {
                    return Err(Error::InvalidParams("intensity set is empty".into()));
                }
                if let Some(i) = set.iter().find(|i| !(0.0..=2.0).contains(&i.mu) || i.weight < 0.0) {
                    return Err(Error::InvalidParams(format!(
                        "intensity {} with weight {} outside [0, 2]",
                        i.mu, i.weight
                    )));
                }
                let total: f64 = set.iter().map(|i| i.weight).sum();
                if (total - 1.0).abs() > 1e-9 {
                    return Err(Error::InvalidParams(format!("intensity weights sum to {total}")));
                }
                Ok(())
            }
            IntensitySet::Uniform { max } if (0.0..=2.0).contains(max) => Ok(()),
            IntensitySet::Uniform { max } => {
                Err(Error::InvalidParams(format!("uniform intensity bound {max} outside [0, 2]")))
            }
        }
    }

    /// Maps one uniform draw to an intensity.
    fn pick(&self, u: f64) -> (f64, IntensityClass) {
        match self {
            IntensitySet::Uniform { max } => (u * max, IntensityClass::Signal),
            IntensitySet::Discrete(set) => {
                let mut acc = 0.0;
                for i in set {
                    acc += i.weight;
                    if u < acc {
                        return (i.mu, i.class);
                    }
                }
                let last = set.last().expect("validated non-empty");
                (last.mu, last.class)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolSpec {
    pub protocol: Protocol,
    /// Photons per classical bit (3-stage).
    pub burst_size: u64,
    /// Pulse intensities (Decoy-state).
    pub intensities: IntensitySet,
    /// Fraction of rounds surviving basis reconciliation (Decoy-state, E91).
    pub sifting_fraction: f64,
}

impl ProtocolSpec {
    pub fn decoy() -> Self {
        ProtocolSpec {
            protocol: Protocol::Decoy,
            burst_size: 1,
            intensities: IntensitySet::default(),
            sifting_fraction: 0.5,
        }
    }

    pub fn three_stage(burst_size: u64) -> Self {
        ProtocolSpec {
            protocol: Protocol::ThreeStage,
            burst_size,
            intensities: IntensitySet::default(),
            sifting_fraction: 1.0,
        }
    }

    pub fn e91() -> Self {
        ProtocolSpec {
            protocol: Protocol::E91,
            burst_size: 1,
            intensities: IntensitySet::default(),
            sifting_fraction: 0.5,
        }
    }

    pub fn for_protocol(protocol: Protocol) -> Self {
        match protocol {
            Protocol::Decoy => Self::decoy(),
            Protocol::ThreeStage => Self::three_stage(10),
            Protocol::E91 => Self::e91(),
        }
    }

    pub fn with_sifting(mut self, fraction: f64) -> Self {
        self.sifting_fraction = fraction;
        self
    }

    pub fn with_intensities(mut self, set: IntensitySet) -> Self {
        self.intensities = set;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.burst_size == 0 {
            return Err(Error::InvalidParams("burst size must be at least 1".into()));
        }
        if !(self.sifting_fraction > 0.0 && self.sifting_fraction <= 1.0) {
            return Err(Error::InvalidParams(format!(
                "sifting fraction must lie in (0, 1], got {}",
                self.sifting_fraction
            )));
        }
        self.intensities.validate()
    }
}

/// What happened in one round over one path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct RoundOutcome {
    pub delivered: bool,
    pub alice_bit: Option<bool>,
    pub bob_bit: Option<bool>,
    pub path_index: usize,
    pub rng_draws_used: u32,
    /// Decoy-state only: the intensity class of the pulse.
    pub intensity: Option<IntensityClass>,
    /// Decoy-state only: at least one photon reached Bob.
    pub detected: bool,
}

struct Draws<'a, R: ?Sized> {
    rng: &'a mut R,
    used: u32,
}

impl<'a, R: Rng + ?Sized> Draws<'a, R> {
    fn new(rng: &'a mut R) -> Self {
        Draws { rng, used: 0 }
    }

    fn uniform(&mut self) -> f64 {
        self.used += 1;
        self.rng.random::<f64>()
    }

    fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform() < p
    }

    fn bit(&mut self) -> bool {
        self.uniform() < 0.5
    }
}

/// Probabilities for one (path, protocol, channel) triple, ready to run rounds.
#[derive(Debug, Clone)]
pub struct RoundEngine {
    spec: ProtocolSpec,
    decoherence: f64,
    path_index: usize,
    kind: EngineKind,
}

#[derive(Debug, Clone)]
enum EngineKind {
    Decoy { survival: f64 },
    ThreeStage { delivery: f64 },
    E91 { pair_success: Vec<f64>, swap_success: f64, swaps: usize },
}

impl RoundEngine {
    pub fn new(path: &RoutePath, spec: &ProtocolSpec, ch: &ChannelParams) -> Result<Self> {
        spec.validate()?;
        ch.validate()?;
        if path.hops.is_empty() {
            return Err(match spec.protocol {
                Protocol::E91 => Error::PathTooShort(0),
                _ => Error::EmptyPath,
            });
        }
        let kind = match spec.protocol {
            Protocol::Decoy => EngineKind::Decoy {
                survival: path_transmission(path, 1)?,
            },
            Protocol::ThreeStage => EngineKind::ThreeStage {
                delivery: burst_delivery(path_transmission(path, 3)?, spec.burst_size),
            },
            Protocol::E91 => {
                let segments = path.split_at(NodeKind::is_relay);
                let pair_success = segments
                    .iter()
                    .map(|s| path_transmission(s, 1).map(|p| ch.pair_success(p)))
                    .collect::<Result<Vec<_>>>()?;
                EngineKind::E91 {
                    swaps: segments.len() - 1,
                    pair_success,
                    swap_success: ch.swap_success(),
                }
            }
        };
        Ok(RoundEngine {
            spec: spec.clone(),
            decoherence: ch.decoherence,
            path_index: 0,
            kind,
        })
    }

    pub fn with_path_index(mut self, index: usize) -> Self {
        self.path_index = index;
        self
    }

    /// Closed-form probability that a round delivers a key bit.
    pub fn delivery_probability(&self) -> f64 {
        let sift = self.spec.sifting_fraction;
        match &self.kind {
            EngineKind::Decoy { survival } => {
                let p = *survival;
                let single = |mu: f64| mu * p * (-mu * p).exp();
                let signal = match &self.spec.intensities {
                    IntensitySet::Discrete(set) => set
                        .iter()
                        .filter(|i| i.class == IntensityClass::Signal)
                        .map(|i| i.weight * single(i.mu))
                        .sum(),
                    IntensitySet::Uniform { max } => {
                        let m = max * p;
                        if m == 0.0 {
                            0.0
                        } else {
                            // (1/max) ∫₀^max μp e^(−μp) dμ
                            (1.0 - (-m).exp() * (1.0 + m)) / m
                        }
                    }
                };
                signal * sift
            }
            EngineKind::ThreeStage { delivery } => *delivery,
            EngineKind::E91 { pair_success, swap_success, swaps } => {
                pair_success.iter().product::<f64>() * swap_success.powi(*swaps as i32) * sift
            }
        }
    }

    pub fn run<R: Rng + ?Sized>(&self, rng: &mut R) -> RoundOutcome {
        let mut d = Draws::new(rng);
        let mut out = RoundOutcome {
            path_index: self.path_index,
            ..RoundOutcome::default()
        };
        match &self.kind {
            EngineKind::Decoy { survival } => {
                let (mu, class) = self.spec.intensities.pick(d.uniform());
                let emitted = sample_poisson(d.uniform(), mu);
                let arrived = (0..emitted).filter(|_| d.bernoulli(*survival)).count();
                let sifted = d.bernoulli(self.spec.sifting_fraction);
                let bit = d.bit();
                out.alice_bit = Some(bit);
                out.intensity = Some(class);
                out.detected = arrived > 0;
                out.delivered = arrived == 1 && sifted && class == IntensityClass::Signal;
            }
            EngineKind::ThreeStage { delivery } => {
                out.delivered = d.bernoulli(*delivery);
                out.alice_bit = Some(d.bit());
            }
            EngineKind::E91 { pair_success, swap_success, swaps } => {
                let linked = pair_success.iter().all(|&p| d.bernoulli(p))
                    && (0..*swaps).all(|_| d.bernoulli(*swap_success))
                    && d.bernoulli(self.spec.sifting_fraction);
                if linked {
                    out.delivered = true;
                    out.alice_bit = Some(d.bit());
                }
            }
        }
        if out.delivered {
            let flip = d.bernoulli(self.decoherence);
            out.bob_bit = out.alice_bit.map(|b| b ^ flip);
        }
        out.rng_draws_used = d.used;
        out
    }
}

/// Probability that at least one of `b` photons survives: `1 − (1 − p)^b`.
///
/// Exact for any burst size; evaluated as `−expm1(b·ln(1 − p))`.
pub fn burst_delivery(per_photon: f64, burst_size: u64) -> f64 {
    if per_photon >= 1.0 {
        return 1.0;
    }
    -((burst_size as f64) * (-per_photon).ln_1p()).exp_m1()
}

/// Inverse-CDF Poisson sample from one uniform draw.
fn sample_poisson(u: f64, mu: f64) -> u32 {
    let mut acc = 0.0;
    for n in 0..POISSON_CUTOFF {
        acc += poisson_pmf(n, mu);
        if u < acc {
            return n;
        }
    }
    POISSON_CUTOFF
}

fn expect_protocol(spec: &ProtocolSpec, want: Protocol) -> Result<()> {
    if spec.protocol == want {
        Ok(())
    } else {
        Err(Error::InvalidParams(format!(
            "engine for {want} called with a {} spec",
            spec.protocol
        )))
    }
}

pub fn run_decoy_round<R: Rng + ?Sized>(
    rng: &mut R,
    path: &RoutePath,
    spec: &ProtocolSpec,
    ch: &ChannelParams,
) -> Result<RoundOutcome> {
    expect_protocol(spec, Protocol::Decoy)?;
    Ok(RoundEngine::new(path, spec, ch)?.run(rng))
}

pub fn run_three_stage_round<R: Rng + ?Sized>(
    rng: &mut R,
    path: &RoutePath,
    spec: &ProtocolSpec,
    ch: &ChannelParams,
) -> Result<RoundOutcome> {
    expect_protocol(spec, Protocol::ThreeStage)?;
    Ok(RoundEngine::new(path, spec, ch)?.run(rng))
}

pub fn run_e91_round<R: Rng + ?Sized>(
    rng: &mut R,
    path: &RoutePath,
    spec: &ProtocolSpec,
    ch: &ChannelParams,
) -> Result<RoundOutcome> {
    expect_protocol(spec, Protocol::E91)?;
    Ok(RoundEngine::new(path, spec, ch)?.run(rng))
}

/// Dispatches on `spec.protocol`.
pub fn run_round<R: Rng + ?Sized>(
    rng: &mut R,
    path: &RoutePath,
    spec: &ProtocolSpec,
    ch: &ChannelParams,
) -> Result<RoundOutcome> {
    match spec.protocol {
        Protocol::Decoy => run_decoy_round(rng, path, spec, ch),
        Protocol::ThreeStage => run_three_stage_round(rng, path, spec, ch),
        Protocol::E91 => run_e91_round(rng, path, spec, ch),
    }
}

/// Decoy-state yields per intensity class, the input to statistical intrusion detection.
///
/// Never feeds back into delivery.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DecoyYields {
    pub sent: [u64; 3],
    pub detected: [u64; 3],
}

impl DecoyYields {
    fn slot(class: IntensityClass) -> usize {
        match class {
            IntensityClass::Vacuum => 0,
            IntensityClass::Decoy => 1,
            IntensityClass::Signal => 2,
        }
    }

    pub fn record(&mut self, out: &RoundOutcome) {
        if let Some(c) = out.intensity {
            let s = Self::slot(c);
            self.sent[s] += 1;
            self.detected[s] += out.detected as u64;
        }
    }

    pub fn merge(&mut self, other: &DecoyYields) {
        for i in 0..3 {
            self.sent[i] += other.sent[i];
            self.detected[i] += other.detected[i];
        }
    }

    /// Detection rate for a class, `None` if none were sent.
    pub fn yield_of(&self, class: IntensityClass) -> Option<f64> {
        let s = Self::slot(class);
        (self.sent[s] > 0).then(|| self.detected[s] as f64 / self.sent[s] as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::transmission_probability;
    use crate::topology::Hop;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const N: usize = 100_000;

    fn empirical(engine: &RoundEngine, seed: u64) -> (f64, Vec<RoundOutcome>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let outs: Vec<_> = (0..N).map(|_| engine.run(&mut rng)).collect();
        let rate = outs.iter().filter(|o| o.delivered).count() as f64 / N as f64;
        (rate, outs)
    }

    fn within_3_sigma(observed: f64, p: f64, n: usize) -> bool {
        let sigma = (p * (1.0 - p) / n as f64).sqrt();
        (observed - p).abs() <= 3.0 * sigma + 1e-12
    }

    fn no_noise() -> ChannelParams {
        ChannelParams { decoherence: 0.0, ..ChannelParams::default() }
    }

    #[test]
    fn decoy_vacuum_only_never_delivers() {
        let path = RoutePath::fiber(&[0.0], 0.15, NodeKind::Trusted).unwrap();
        let spec = ProtocolSpec::decoy().with_intensities(IntensitySet::Discrete(vec![Intensity {
            mu: 0.0,
            weight: 1.0,
            class: IntensityClass::Signal,
        }]));
        let e = RoundEngine::new(&path, &spec, &no_noise()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert!((0..10_000).all(|_| !e.run(&mut rng).delivered));
    }

    #[test]
    fn decoy_single_photon_rate_at_zero_loss() {
        let path = RoutePath::fiber(&[0.0], 0.15, NodeKind::Trusted).unwrap();
        let spec = ProtocolSpec::decoy()
            .with_intensities(IntensitySet::single_signal(0.65))
            .with_sifting(1.0);
        let e = RoundEngine::new(&path, &spec, &no_noise()).unwrap();
        let oracle = 0.65 * (-0.65f64).exp();
        assert!((oracle - 0.3394).abs() < 1e-4);
        let (rate, _) = empirical(&e, 11);
        assert!(within_3_sigma(rate, oracle, N), "{rate} vs {oracle}");
    }

    #[test]
    fn decoy_maximal_decoherence_scrambles_bits() {
        let path = RoutePath::fiber(&[0.0], 0.15, NodeKind::Trusted).unwrap();
        let spec = ProtocolSpec::decoy().with_intensities(IntensitySet::single_signal(1.0)).with_sifting(1.0);
        let ch = ChannelParams { decoherence: 0.5, ..ChannelParams::default() };
        let e = RoundEngine::new(&path, &spec, &ch).unwrap();
        let (_, outs) = empirical(&e, 5);
        let delivered: Vec<_> = outs.iter().filter(|o| o.delivered).collect();
        let flips = delivered.iter().filter(|o| o.alice_bit != o.bob_bit).count();
        assert!(within_3_sigma(flips as f64 / delivered.len() as f64, 0.5, delivered.len()));
    }

    #[test]
    fn decoy_uniform_mode_matches_closed_form() {
        let path = RoutePath::fiber(&[8.0], 0.15, NodeKind::Trusted).unwrap();
        let spec = ProtocolSpec::decoy().with_intensities(IntensitySet::Uniform { max: 2.0 });
        let e = RoundEngine::new(&path, &spec, &no_noise()).unwrap();
        // midpoint-rule oracle for the uniform-intensity integral
        let p = transmission_probability(8.0, 0.15).unwrap();
        let steps = 20_000;
        let oracle: f64 = (0..steps)
            .map(|i| {
                let mu = (i as f64 + 0.5) * 2.0 / steps as f64;
                mu * p * (-mu * p).exp() / steps as f64
            })
            .sum::<f64>()
            * 0.5;
        assert!((e.delivery_probability() - oracle).abs() < 1e-8);
        let (rate, _) = empirical(&e, 17);
        assert!(within_3_sigma(rate, oracle, N));
    }

    #[test]
    fn three_stage_burst_of_ten_over_10km() {
        let path = RoutePath::fiber(&[10.0], 0.15, NodeKind::Trusted).unwrap();
        let e = RoundEngine::new(&path, &ProtocolSpec::three_stage(10), &no_noise()).unwrap();
        let p3 = transmission_probability(30.0, 0.15).unwrap();
        let oracle = 1.0 - (1.0 - p3).powi(10);
        assert!((oracle - 0.98750).abs() < 1e-5);
        assert!((e.delivery_probability() - oracle).abs() < 1e-12);
        let (rate, _) = empirical(&e, 23);
        assert!(within_3_sigma(rate, oracle, N));
    }

    #[test]
    fn three_stage_trivial_and_saturated_bursts() {
        let zero = RoutePath::fiber(&[0.0], 0.15, NodeKind::Trusted).unwrap();
        let e = RoundEngine::new(&zero, &ProtocolSpec::three_stage(1), &no_noise()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!((0..10_000).all(|_| e.run(&mut rng).delivered));

        let ten = RoutePath::fiber(&[10.0], 0.15, NodeKind::Trusted).unwrap();
        let e = RoundEngine::new(&ten, &ProtocolSpec::three_stage(1_000_000), &no_noise()).unwrap();
        let (rate, _) = empirical(&e, 2);
        assert_eq!(rate, 1.0);
    }

    #[test]
    fn burst_delivery_is_stable_for_huge_bursts() {
        assert_eq!(burst_delivery(1.0, 3), 1.0);
        assert_eq!(burst_delivery(0.0, 1_000_000), 0.0);
        let p = 1e-9;
        let v = burst_delivery(p, 1_000_000);
        assert!((v - (1.0 - (-1e-3f64).exp())).abs() < 1e-12);
    }

    #[test]
    fn e91_single_hop_redundancy() {
        let path = RoutePath::fiber(&[10.0], 0.15, NodeKind::Repeater).unwrap();
        let spec = ProtocolSpec::e91().with_sifting(1.0);
        let e = RoundEngine::new(&path, &spec, &no_noise()).unwrap();
        let oracle = 1.0 - (1.0 - transmission_probability(10.0, 0.15).unwrap()).powi(5);
        assert!((oracle - 0.99787).abs() < 1e-5);
        let (rate, _) = empirical(&e, 31);
        assert!(within_3_sigma(rate, oracle, N));
    }

    #[test]
    fn e91_swap_is_the_only_failure_at_zero_length() {
        let path = RoutePath::fiber(&[0.0, 0.0], 0.15, NodeKind::Repeater).unwrap();
        let spec = ProtocolSpec::e91().with_sifting(1.0);
        let e = RoundEngine::new(&path, &spec, &no_noise()).unwrap();
        let (rate, _) = empirical(&e, 37);
        assert!(within_3_sigma(rate, 0.85, N));
    }

    #[test]
    fn e91_never_delivers_without_bsm() {
        let path = RoutePath::fiber(&[1.0, 1.0, 1.0], 0.15, NodeKind::Repeater).unwrap();
        let ch = ChannelParams { bsm_success: 0.0, ..ChannelParams::default() };
        let e = RoundEngine::new(&path, &ProtocolSpec::e91(), &ch).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        assert!((0..10_000).all(|_| !e.run(&mut rng).delivered));
    }

    #[test]
    fn e91_treats_switches_as_transparent() {
        let hops = [Hop { length_km: 5.0, alpha: 0.4 }; 2];
        let path = RoutePath::chain(&hops, NodeKind::Switch).unwrap();
        let e = RoundEngine::new(&path, &ProtocolSpec::e91().with_sifting(1.0), &no_noise()).unwrap();
        let oracle = 1.0 - (1.0 - transmission_probability(10.0, 0.4).unwrap()).powi(5);
        assert!((e.delivery_probability() - oracle).abs() < 1e-12);
    }

    #[test]
    fn b1_three_stage_and_single_hop_e91_reduce_to_bernoulli() {
        let path = RoutePath::fiber(&[7.0], 0.15, NodeKind::Trusted).unwrap();
        let three = RoundEngine::new(&path, &ProtocolSpec::three_stage(1), &no_noise()).unwrap();
        assert!((three.delivery_probability() - path_transmission(&path, 3).unwrap()).abs() < 1e-15);
        let ch = ChannelParams { redundancy: 1, ..no_noise() };
        let e91 = RoundEngine::new(&path, &ProtocolSpec::e91().with_sifting(1.0), &ch).unwrap();
        assert!((e91.delivery_probability() - path_transmission(&path, 1).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn decoherence_rate_is_protocol_agnostic() {
        let path = RoutePath::fiber(&[2.0], 0.15, NodeKind::Trusted).unwrap();
        let ch = ChannelParams { decoherence: 0.1, ..ChannelParams::default() };
        for spec in [
            ProtocolSpec::decoy().with_intensities(IntensitySet::single_signal(1.0)),
            ProtocolSpec::three_stage(10),
            ProtocolSpec::e91(),
        ] {
            let e = RoundEngine::new(&path, &spec, &ch).unwrap();
            let (_, outs) = empirical(&e, 41);
            let d: Vec<_> = outs.iter().filter(|o| o.delivered).collect();
            let err = d.iter().filter(|o| o.alice_bit != o.bob_bit).count() as f64 / d.len() as f64;
            assert!(within_3_sigma(err, 0.1, d.len()), "{:?}: {err}", spec.protocol);
        }
    }

    #[test]
    fn bob_bit_iff_delivered() {
        let path = RoutePath::fiber(&[20.0, 20.0], 0.15, NodeKind::Trusted).unwrap();
        for p in [Protocol::Decoy, Protocol::ThreeStage, Protocol::E91] {
            let e = RoundEngine::new(&path, &ProtocolSpec::for_protocol(p), &ChannelParams::default()).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(8);
            for _ in 0..5_000 {
                let o = e.run(&mut rng);
                assert_eq!(o.bob_bit.is_some(), o.delivered);
                if o.delivered {
                    assert!(o.alice_bit.is_some());
                }
                assert!(o.rng_draws_used >= 1);
            }
        }
    }

    #[test]
    fn delivery_is_monotone_in_hop_length() {
        for p in [Protocol::Decoy, Protocol::ThreeStage, Protocol::E91] {
            let spec = ProtocolSpec::for_protocol(p);
            let mut prev = f64::INFINITY;
            for l in 0..40 {
                let path = RoutePath::fiber(&[5.0, l as f64], 0.15, NodeKind::Trusted).unwrap();
                let v = RoundEngine::new(&path, &spec, &ChannelParams::default())
                    .unwrap()
                    .delivery_probability();
                assert!(v <= prev, "{p}: {v} > {prev} at {l} km");
                prev = v;
            }
        }
    }

    #[test]
    fn dispatch_and_mismatch() {
        let path = RoutePath::fiber(&[1.0], 0.15, NodeKind::Trusted).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let ch = ChannelParams::default();
        for p in [Protocol::Decoy, Protocol::ThreeStage, Protocol::E91] {
            assert!(run_round(&mut rng, &path, &ProtocolSpec::for_protocol(p), &ch).is_ok());
        }
        assert!(run_e91_round(&mut rng, &path, &ProtocolSpec::decoy(), &ch).is_err());
        assert!(run_decoy_round(&mut rng, &path, &ProtocolSpec::three_stage(3), &ch).is_err());
    }

    #[test]
    fn spec_validation() {
        assert!(ProtocolSpec::three_stage(0).validate().is_err());
        assert!(ProtocolSpec::e91().with_sifting(0.0).validate().is_err());
        let bad = IntensitySet::Discrete(vec![Intensity { mu: 2.5, weight: 1.0, class: IntensityClass::Signal }]);
        assert!(ProtocolSpec::decoy().with_intensities(bad).validate().is_err());
        let unnormalized = IntensitySet::Discrete(vec![Intensity { mu: 0.5, weight: 0.4, class: IntensityClass::Signal }]);
        assert!(ProtocolSpec::decoy().with_intensities(unnormalized).validate().is_err());
        assert_eq!("3-stage".parse::<Protocol>().unwrap(), Protocol::ThreeStage);
    }

    #[test]
    fn decoy_yields_track_intensity_classes() {
        let path = RoutePath::fiber(&[0.0], 0.15, NodeKind::Trusted).unwrap();
        let e = RoundEngine::new(&path, &ProtocolSpec::decoy(), &no_noise()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mut y = DecoyYields::default();
        for _ in 0..50_000 {
            y.record(&e.run(&mut rng));
        }
        assert_eq!(y.yield_of(IntensityClass::Vacuum), Some(0.0));
        let signal = y.yield_of(IntensityClass::Signal).unwrap();
        assert!((signal - (1.0 - (-0.65f64).exp())).abs() < 0.01);
        assert!(y.yield_of(IntensityClass::Decoy).unwrap() < signal);
    }
}
