//! Built-in multi-curve experiments.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::analysis::{fit_log_cubic, stable_distance, FitReport, LogBase, StableDistanceOptions};
use crate::channel::{BellRedundancy, ChannelParams};
use crate::error::{Error, Result};
use crate::experiments::{
    default_burst_grid, default_distance_grid, run_burst_sweep, run_distance_sweep, SweepConfig, SweepResult,
    DEFAULT_MAX_PATHS, DEFAULT_ROUNDS,
};
use crate::protocols::{Protocol, ProtocolSpec};
use crate::topology::{ShapeParams, TopologyKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Recipe {
    /// Decoy, 3-stage and E91 with and without a repeater, Alice to Bob directly.
    FigDirect,
    /// 3-stage over every topology family.
    FigTopologies3Stage,
    /// All three protocols on a 3×3 torus.
    FigTorus,
    /// 3-stage on a line for burst sizes 10 to 1200.
    FigBurstLine,
    /// Stable distance against burst size and its log-cubic fit.
    FigLogcubic,
}

impl Recipe {
    pub const ALL: [Recipe; 5] = [
        Recipe::FigDirect,
        Recipe::FigTopologies3Stage,
        Recipe::FigTorus,
        Recipe::FigBurstLine,
        Recipe::FigLogcubic,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Recipe::FigDirect => "fig-direct",
            Recipe::FigTopologies3Stage => "fig-topologies-3stage",
            Recipe::FigTorus => "fig-torus",
            Recipe::FigBurstLine => "fig-burst-line",
            Recipe::FigLogcubic => "fig-logcubic",
        }
    }
}

impl fmt::Display for Recipe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Recipe {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Recipe::ALL
            .into_iter()
            .find(|r| r.as_str() == s)
            .ok_or_else(|| Error::Parse(format!("unknown recipe {s:?}")))
    }
}

/// Settings a user may override on any recipe.
#[derive(Debug, Clone, PartialEq)]
pub struct RecipeSettings {
    pub rounds: u64,
    pub seed: u64,
    pub channel: ChannelParams,
    pub distances_km: Option<Vec<f64>>,
    pub bursts: Option<Vec<u64>>,
    pub max_paths: usize,
}

impl Default for RecipeSettings {
    fn default() -> Self {
        RecipeSettings {
            rounds: DEFAULT_ROUNDS,
            seed: 0,
            channel: ChannelParams::default(),
            distances_km: None,
            bursts: None,
            max_paths: DEFAULT_MAX_PATHS,
        }
    }
}

pub struct Curve {
    pub name: String,
    pub result: SweepResult,
}

/// Curves plus any derived text files, as `(file name, contents)`.
pub struct RecipeOutput {
    pub curves: Vec<Curve>,
    pub extras: Vec<(String, String)>,
}

/// Distance grid of the log-cubic recipe; wide enough for the largest bursts.
pub fn logcubic_distance_grid() -> Vec<f64> {
    (1..=80).map(|i| 5.0 * i as f64).collect()
}

fn base(s: &RecipeSettings, kind: TopologyKind, shape: ShapeParams, spec: ProtocolSpec, grid: Vec<f64>) -> SweepConfig {
    SweepConfig::distances(kind, shape, spec, s.distances_km.clone().unwrap_or(grid))
        .with_rounds(s.rounds)
        .with_seed(s.seed)
        .with_channel(s.channel)
        .with_max_paths(s.max_paths)
}

/// Named distance sweeps making up `recipe`. Burst recipes return one
/// configuration carrying the burst grid.
pub fn recipe_configs(recipe: Recipe, s: &RecipeSettings) -> Vec<(String, SweepConfig)> {
    let shape = ShapeParams::default();
    let grid = default_distance_grid;
    let e91_both = |mut cfg: SweepConfig| {
        cfg.channel.bell_redundancy = BellRedundancy::PairsAndSwaps;
        cfg
    };
    match recipe {
        Recipe::FigDirect => vec![
            ("decoy".into(), base(s, TopologyKind::Direct, shape, ProtocolSpec::decoy(), grid())),
            ("three-stage".into(), base(s, TopologyKind::Direct, shape, ProtocolSpec::three_stage(10), grid())),
            ("e91".into(), e91_both(base(s, TopologyKind::Direct, shape, ProtocolSpec::e91(), grid()))),
            (
                "e91-repeater".into(),
                e91_both(base(s, TopologyKind::Line, ShapeParams { n_trusted: 1, ..shape }, ProtocolSpec::e91(), grid())),
            ),
        ],
        Recipe::FigTopologies3Stage => TopologyKind::ALL
            .into_iter()
            .map(|k| (k.to_string(), base(s, k, shape, ProtocolSpec::three_stage(10), grid())))
            .collect(),
        Recipe::FigTorus => [Protocol::Decoy, Protocol::ThreeStage, Protocol::E91]
            .into_iter()
            .map(|p| {
                let spec = ProtocolSpec::for_protocol(p);
                (p.as_str().to_string(), base(s, TopologyKind::Torus, shape, spec, grid()))
            })
            .collect(),
        Recipe::FigBurstLine => {
            let bursts = s.bursts.clone().unwrap_or_else(|| vec![10, 50, 100, 200, 400, 800, 1200]);
            vec![(
                "line".into(),
                base(s, TopologyKind::Line, shape, ProtocolSpec::three_stage(10), grid()).with_bursts(bursts),
            )]
        }
        Recipe::FigLogcubic => {
            let bursts = s.bursts.clone().unwrap_or_else(default_burst_grid);
            vec![(
                "line".into(),
                base(s, TopologyKind::Line, shape, ProtocolSpec::three_stage(10), logcubic_distance_grid())
                    .with_bursts(bursts),
            )]
        }
    }
}

pub fn run_recipe(recipe: Recipe, s: &RecipeSettings) -> Result<RecipeOutput> {
    let mut curves = Vec::new();
    for (name, cfg) in recipe_configs(recipe, s) {
        if cfg.bursts.is_empty() {
            curves.push(Curve { name, result: run_distance_sweep(&cfg)? });
        } else {
            for c in run_burst_sweep(&cfg)?.curves {
                curves.push(Curve { name: format!("{name}-b{}", c.burst), result: c.result });
            }
        }
    }
    let mut extras = Vec::new();
    if recipe == Recipe::FigLogcubic {
        let opts = StableDistanceOptions::default();
        let mut table = String::from("burst,stable_distance\n");
        let mut bursts = Vec::new();
        let mut ds = Vec::new();
        for c in &curves {
            let d = stable_distance(&c.result.xs(), &c.result.key_rates(), &opts)?;
            let b = c.result.config.protocol.burst_size as f64;
            table.push_str(&format!("{b},{d}\n"));
            bursts.push(b);
            ds.push(d);
        }
        extras.push(("stable_distance.csv".into(), table));
        match fit_log_cubic(&bursts, &ds, LogBase::Ten) {
            Ok(fit) => extras.push(("logcubic_fit.txt".into(), FitReport::log_cubic(&fit, &bursts, &ds).to_text())),
            Err(e) => extras.push(("logcubic_fit.txt".into(), format!("fit failed: {e}\n"))),
        }
    }
    Ok(RecipeOutput { curves, extras })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for r in Recipe::ALL {
            assert_eq!(r.as_str().parse::<Recipe>().unwrap(), r);
        }
        assert!("fig-nothing".parse::<Recipe>().is_err());
    }

    #[test]
    fn fig_direct_has_four_curves() {
        let cfgs = recipe_configs(Recipe::FigDirect, &RecipeSettings::default());
        let names: Vec<&str> = cfgs.iter().map(|(n, _)| n.as_str()).collect();
        assert_eq!(names, ["decoy", "three-stage", "e91", "e91-repeater"]);
        assert!(cfgs.iter().all(|(_, c)| c.validate().is_ok()));
    }

    #[test]
    fn overrides_reach_every_curve() {
        let s = RecipeSettings { rounds: 2000, seed: 9, distances_km: Some(vec![1.0, 2.0]), ..Default::default() };
        for r in Recipe::ALL {
            for (_, c) in recipe_configs(r, &s) {
                assert_eq!((c.rounds, c.seed, c.distances_km.len()), (2000, 9, 2));
            }
        }
    }
}
