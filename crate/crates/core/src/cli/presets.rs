//! Ready-made scenarios: a 20-node noisy-exchange network under ATC or CTA,
//! and a 20-node network tracking a rotating target at two noise levels.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::format::NetworkFile;
use crate::linalg::{c, CVec};
use crate::network::{random_network, ProfileRanges, RegressorShape, TrajectoryMode, VarianceRange, WeightTrajectory};

use super::config::{NetworkRef, OutputsConfig, RulesConfig, ScenarioConfig, DEFAULT_NU};

pub const PRESET_NODES: usize = 20;
pub const PRESET_M: usize = 2;
pub const PRESET_MU: f64 = 0.01;
/// Link radius of the random geometric graph in the unit square.
pub const PRESET_RADIUS: f64 = 0.35;

pub const NOISY_W0: [[f64; 2]; 2] = [[0.3750, 2.0834], [0.7174, 1.4123]];
pub const NOISY_RUNS: usize = 50;
pub const NOISY_ITERATIONS: usize = 2000;

pub const TRACK_OMEGA: f64 = 2.0 * std::f64::consts::PI / 6000.0;
pub const TRACK_W0: [[f64; 2]; 2] = [[1.0, 1.0], [-1.0, -1.0]];
pub const TRACK_RUNS: usize = 20;
pub const TRACK_ITERATIONS: usize = 3000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    NoisyExchangeAtc,
    NoisyExchangeCta,
    TrackingLowNoise,
    TrackingHighNoise,
}

impl Preset {
    pub const ALL: [Preset; 4] =
        [Self::NoisyExchangeAtc, Self::NoisyExchangeCta, Self::TrackingLowNoise, Self::TrackingHighNoise];
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|p| p.to_string() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Self::ALL.iter().map(ToString::to_string).collect();
                Error::Config(format!("unknown preset '{s}' (expected one of {})", names.join(", ")))
            })
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::NoisyExchangeAtc => "noisy_exchange_atc",
            Self::NoisyExchangeCta => "noisy_exchange_cta",
            Self::TrackingLowNoise => "tracking_low_noise",
            Self::TrackingHighNoise => "tracking_high_noise",
        })
    }
}

fn w0(pairs: [[f64; 2]; 2]) -> CVec {
    CVec::from_iterator(2, pairs.iter().map(|[re, im]| c(*re, *im)))
}

/// Profile ranges of the noisy-exchange presets.
pub fn noisy_exchange_ranges() -> ProfileRanges {
    ProfileRanges { mu: PRESET_MU, ..ProfileRanges::default() }
}

/// Generates the scenario and its network. `network_file` is the name the
/// scenario uses to refer to the network.
pub fn generate(preset: Preset, seed: u64, network_file: &str) -> Result<(ScenarioConfig, NetworkFile)> {
    let (network, rules, runs, iterations, outputs) = match preset {
        Preset::NoisyExchangeAtc | Preset::NoisyExchangeCta => {
            let mut net = random_network(seed, PRESET_NODES, PRESET_M, PRESET_RADIUS, &noisy_exchange_ranges())?;
            net.trajectory = WeightTrajectory::Constant { w0: w0(NOISY_W0) };
            let rules = if preset == Preset::NoisyExchangeAtc {
                RulesConfig { a1: "identity".into(), c: "identity".into(), a2: "relative_variance".into() }
            } else {
                RulesConfig { a1: "relative_variance".into(), c: "identity".into(), a2: "identity".into() }
            };
            let outputs = OutputsConfig {
                curve: Some("curve.csv".into()),
                theory: Some("theory.json".into()),
                compare: Some("compare.csv".into()),
                trajectory: None,
            };
            (net, rules, NOISY_RUNS, NOISY_ITERATIONS, outputs)
        }
        Preset::TrackingLowNoise | Preset::TrackingHighNoise => {
            let mean_db = if preset == Preset::TrackingLowNoise { -5.0 } else { 25.0 };
            let target = 10f64.powf(mean_db / 10.0);
            let ranges = ProfileRanges {
                mu: PRESET_MU,
                regressor: RegressorShape::UnitTrace,
                sigma_v2: VarianceRange::log(target / 10f64.sqrt(), target * 10f64.sqrt()),
                ..ProfileRanges::default().noise_free_links()
            };
            let mut net = random_network(seed, PRESET_NODES, PRESET_M, PRESET_RADIUS, &ranges)?;
            // pin the network-average noise power to the target level
            let mean = net.nodes.iter().map(|p| p.sigma_v2).sum::<f64>() / PRESET_NODES as f64;
            for p in &mut net.nodes {
                p.sigma_v2 *= target / mean;
            }
            net.links.clear();
            net.trajectory = WeightTrajectory::Rotation { w0: w0(TRACK_W0), omega: TRACK_OMEGA };
            let rules = RulesConfig { a1: "identity".into(), c: "identity".into(), a2: "uniform".into() };
            let outputs = OutputsConfig {
                curve: Some("curve.csv".into()),
                trajectory: Some("trajectory.csv".into()),
                theory: Some("theory.json".into()),
                compare: None,
            };
            (net, rules, TRACK_RUNS, TRACK_ITERATIONS, outputs)
        }
    };
    let mode = network.trajectory.mode();
    let config = ScenarioConfig {
        network: NetworkRef::File { file: network_file.into() },
        rules,
        nu: matches!(mode, TrajectoryMode::Stationary).then_some(DEFAULT_NU),
        mode: Some(mode),
        runs,
        iterations,
        seed,
        outputs,
    };
    Ok((config, NetworkFile::from_model(&network)))
}
