//! Deterministic parallel Monte Carlo sweeps.
//!
//! Every round draws from its own ChaCha8 stream keyed by
//! `(master seed, point, path, segment)` with the round index as the ChaCha
//! stream id. Results therefore do not depend on scheduling or thread count,
//! and sweeps that share a seed use common random numbers point by point:
//! a burst sweep compares burst sizes on identical per-round draws.
//!
//! Per point the engine builds the topology, routes up to `max_paths`
//! node-disjoint paths, and runs `rounds` rounds on every trusted segment of
//! every path (E91 treats the whole path as one repeater chain). Each segment
//! pool yields a QBER estimate and an error-corrected size
//! `R·(1 − 2h(Q))`; the XOR relay delivers the shortest segment key end to
//! end, and paths add up.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::ChannelParams;
use crate::error::{Error, Result};
use crate::keymgmt::{corrected_key_rate, estimate_qber, key_rate, KeyPool, DEFAULT_QBER_SAMPLE};
use crate::protocols::{DecoyYields, Protocol, ProtocolSpec, RoundEngine, RoundOutcome};
use crate::topology::{build_topology, disjoint_paths, NodeKind, RoutePath, ShapeParams, TopologyKind};

pub const DEFAULT_ROUNDS: u64 = 100_000;
pub const MIN_ROUNDS: u64 = 1_000;
pub const DEFAULT_MAX_PATHS: usize = 4;

/// 1–60 km in 1 km steps.
pub fn default_distance_grid() -> Vec<f64> {
    (1..=60).map(f64::from).collect()
}

/// Burst sizes up to 1200 plus decades to a million photons.
pub fn default_burst_grid() -> Vec<u64> {
    vec![10, 50, 100, 200, 400, 800, 1200, 10_000, 100_000, 1_000_000]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub topology: TopologyKind,
    pub shape: ShapeParams,
    pub protocol: ProtocolSpec,
    pub channel: ChannelParams,
    pub distances_km: Vec<f64>,
    /// Burst sizes (3-stage) or parallel Bell attempts (E91) for burst sweeps.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub bursts: Vec<u64>,
    pub rounds: u64,
    pub seed: u64,
    pub max_paths: usize,
    pub qber_sample: f64,
}

impl SweepConfig {
    pub fn distances(topology: TopologyKind, shape: ShapeParams, protocol: ProtocolSpec, distances_km: Vec<f64>) -> Self {
        SweepConfig {
            topology,
            shape,
            protocol,
            channel: ChannelParams::default(),
            distances_km,
            bursts: Vec::new(),
            rounds: DEFAULT_ROUNDS,
            seed: 0,
            max_paths: DEFAULT_MAX_PATHS,
            qber_sample: DEFAULT_QBER_SAMPLE,
        }
    }

    pub fn with_rounds(mut self, rounds: u64) -> Self {
        self.rounds = rounds;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_channel(mut self, channel: ChannelParams) -> Self {
        self.channel = channel;
        self
    }

    pub fn with_bursts(mut self, bursts: Vec<u64>) -> Self {
        self.bursts = bursts;
        self
    }

    pub fn with_max_paths(mut self, max_paths: usize) -> Self {
        self.max_paths = max_paths;
        self
    }

    pub fn validate(&self) -> Result<()> {
        strictly_increasing(&self.distances_km, "distance grid")?;
        if self.distances_km.iter().any(|&d| !(d > 0.0 && d.is_finite())) {
            return Err(Error::InvalidParams("distances must be positive".into()));
        }
        if self.rounds < MIN_ROUNDS {
            return Err(Error::InvalidParams(format!(
                "need at least {MIN_ROUNDS} rounds per point, got {}",
                self.rounds
            )));
        }
        if self.max_paths == 0 {
            return Err(Error::InvalidParams("max_paths must be at least 1".into()));
        }
        if !(self.qber_sample > 0.0 && self.qber_sample <= 1.0) {
            return Err(Error::InvalidParams(format!("qber sample fraction {} outside (0, 1]", self.qber_sample)));
        }
        self.protocol.validate()?;
        self.channel.validate()
    }
}

fn strictly_increasing<T: PartialOrd + Copy>(grid: &[T], what: &str) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidParams(format!("{what} is empty")));
    }
    if grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidParams(format!("{what} must be strictly increasing")));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    /// Alice–Bob distance in km.
    pub x: f64,
    /// Error-corrected key bits per round, summed over paths.
    pub key_rate: f64,
    /// End-to-end raw bits: per path the smallest segment pool, summed over paths.
    pub delivered: u64,
    /// Mean segment QBER weighted by sample size.
    pub qber: f64,
    pub rounds: u64,
    pub paths: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decoy_yields: Option<DecoyYields>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub config: SweepConfig,
    pub seed: u64,
    pub points: Vec<SweepPoint>,
}

impl SweepResult {
    pub fn xs(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.x).collect()
    }

    pub fn key_rates(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.key_rate).collect()
    }

    /// `x,key_rate,delivered,qber,rounds,seed`
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["x", "key_rate", "delivered", "qber", "rounds", "seed"])?;
        for p in &self.points {
            wr.write_record([
                p.x.to_string(),
                p.key_rate.to_string(),
                p.delivered.to_string(),
                p.qber.to_string(),
                p.rounds.to_string(),
                self.seed.to_string(),
            ])?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Whitespace-delimited columns under a `#` header.
    pub fn to_plotdata(&self) -> String {
        let mut s = String::from("# x key_rate delivered qber\n");
        for p in &self.points {
            s.push_str(&format!("{} {} {} {}\n", p.x, p.key_rate, p.delivered, p.qber));
        }
        s
    }
}

/// One curve of a burst sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BurstCurve {
    /// Burst size (3-stage) or Bell redundancy (E91).
    pub burst: u64,
    pub result: SweepResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BurstSweepResult {
    pub curves: Vec<BurstCurve>,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Stream key for one (point, path, segment) lane.
fn lane_seed(master: u64, point: u64, path: u64, segment: u64) -> [u8; 32] {
    let mut state = splitmix64(master);
    for (tag, coord) in [(1u64, point), (2, path), (3, segment)] {
        state = splitmix64(state ^ splitmix64(coord.wrapping_mul(0x100).wrapping_add(tag)));
    }
    let mut seed = [0u8; 32];
    for chunk in seed.chunks_exact_mut(8) {
        state = splitmix64(state);
        chunk.copy_from_slice(&state.to_le_bytes());
    }
    seed
}

/// Random stream for segment `segment` of `path` at sweep point `point`, round `round`.
pub fn segment_stream(master: u64, point: u64, path: u64, segment: u64, round: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::from_seed(lane_seed(master, point, path, segment));
    rng.set_stream(round);
    rng
}

/// Random stream for one round, independent of evaluation order.
pub fn derive_stream(master: u64, point: u64, path: u64, round: u64) -> ChaCha8Rng {
    segment_stream(master, point, path, 0, round)
}

struct SegmentRun {
    raw_bits: u64,
    corrected_bits: u64,
    q: f64,
    sample: usize,
    yields: DecoyYields,
}

fn run_segment(
    cfg: &SweepConfig,
    segment: &RoutePath,
    point: u64,
    path: u64,
    seg: u64,
) -> Result<SegmentRun> {
    let engine = RoundEngine::new(segment, &cfg.protocol, &cfg.channel)?.with_path_index(path as usize);
    let rounds = usize::try_from(cfg.rounds).map_err(|_| Error::InvalidParams("too many rounds".into()))?;
    let outcomes: Vec<RoundOutcome> = (0..rounds)
        .into_par_iter()
        .with_min_len(4096)
        .map(|r| engine.run(&mut segment_stream(cfg.seed, point, path, seg, r as u64)))
        .collect();

    let mut pool = KeyPool::new((segment.source(), segment.target()));
    pool.rounds_attempted = cfg.rounds;
    let mut yields = DecoyYields::default();
    for o in &outcomes {
        yields.record(o);
        if let (Some(a), Some(b)) = (o.alice_bit, o.bob_bit) {
            pool.push(a, b);
        }
    }
    let raw_bits = pool.len() as u64;
    if raw_bits == 0 {
        return Ok(SegmentRun { raw_bits, corrected_bits: 0, q: 0.0, sample: 0, yields });
    }
    let est = estimate_qber(&mut pool, cfg.qber_sample)?;
    // Error correction scales the raw pool size; the sample only informs Q.
    let corrected_bits = corrected_key_rate(raw_bits as f64, est.q).floor() as u64;
    Ok(SegmentRun { raw_bits, corrected_bits, q: est.q, sample: est.sample_size, yields })
}

fn run_point(cfg: &SweepConfig, index: usize, distance_km: f64) -> Result<SweepPoint> {
    let topo = build_topology(cfg.topology, distance_km, &cfg.shape)?
        .with_interior_role(cfg.protocol.protocol.interior_role());
    let paths = disjoint_paths(&topo, topo.alice(), topo.bob(), cfg.max_paths)?;

    let mut key_bits = 0u64;
    let mut delivered = 0u64;
    let (mut q_weighted, mut q_weight) = (0.0, 0usize);
    let mut yields = DecoyYields::default();
    for (j, path) in paths.iter().enumerate() {
        let segments = match cfg.protocol.protocol {
            Protocol::E91 => vec![path.clone()],
            Protocol::Decoy | Protocol::ThreeStage => path.split_at(NodeKind::is_relay),
        };
        let mut path_key = u64::MAX;
        let mut path_raw = u64::MAX;
        for (s, segment) in segments.iter().enumerate() {
            let run = run_segment(cfg, segment, index as u64, j as u64, s as u64)?;
            path_key = path_key.min(run.corrected_bits);
            path_raw = path_raw.min(run.raw_bits);
            q_weighted += run.q * run.sample as f64;
            q_weight += run.sample;
            yields.merge(&run.yields);
        }
        // The XOR relay hands Bob the first segment key truncated to the shortest one.
        key_bits += path_key;
        delivered += path_raw;
    }
    Ok(SweepPoint {
        x: distance_km,
        key_rate: key_rate(key_bits, cfg.rounds)?,
        delivered,
        qber: if q_weight > 0 { q_weighted / q_weight as f64 } else { 0.0 },
        rounds: cfg.rounds,
        paths: paths.len(),
        decoy_yields: (cfg.protocol.protocol == Protocol::Decoy).then_some(yields),
    })
}

/// Key rate at every distance of `cfg.distances_km`.
pub fn run_distance_sweep(cfg: &SweepConfig) -> Result<SweepResult> {
    cfg.validate()?;
    let points = cfg
        .distances_km
        .par_iter()
        .enumerate()
        .map(|(i, &l)| run_point(cfg, i, l).map_err(|e| Error::AtPoint { index: i, source: Box::new(e) }))
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult {
        config: cfg.clone(),
        seed: cfg.seed,
        points,
    })
}

/// One distance sweep per entry of `cfg.bursts`, all on the same random streams.
///
/// For E91 the entries are parallel Bell attempts rather than photons.
pub fn run_burst_sweep(cfg: &SweepConfig) -> Result<BurstSweepResult> {
    strictly_increasing(&cfg.bursts, "burst grid")?;
    if cfg.bursts[0] == 0 {
        return Err(Error::InvalidParams("burst sizes must be positive".into()));
    }
    let curves = cfg
        .bursts
        .iter()
        .map(|&b| {
            let mut c = cfg.clone();
            c.bursts.clear();
            match c.protocol.protocol {
                Protocol::ThreeStage => c.protocol.burst_size = b,
                Protocol::E91 => {
                    c.channel.redundancy = u32::try_from(b)
                        .map_err(|_| Error::InvalidParams(format!("redundancy {b} too large")))?
                }
                Protocol::Decoy => {
                    return Err(Error::InvalidParams("burst sweeps need the 3-stage or E91 protocol".into()))
                }
            }
            Ok(BurstCurve { burst: b, result: run_distance_sweep(&c)? })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BurstSweepResult { curves })
}
