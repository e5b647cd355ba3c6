//! Scenario files: a network (inline or by path), combination rules per slot
//! and run parameters. Relative paths resolve against the file's directory.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::format::{read_json, NetworkFile};
use crate::network::{validate, CombinationMatrices, NetworkModel, Slot, TrajectoryMode};
use crate::rules::RuleSpec;
use crate::sim::SimOptions;

pub const DEFAULT_NU: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NetworkRef {
    File { file: PathBuf },
    Inline(Box<NetworkFile>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RulesConfig {
    #[serde(default = "identity_rule")]
    pub a1: String,
    #[serde(default = "identity_rule")]
    pub c: String,
    #[serde(default = "identity_rule")]
    pub a2: String,
}

fn identity_rule() -> String {
    "identity".into()
}

impl RulesConfig {
    pub fn get(&self, slot: Slot) -> &str {
        match slot {
            Slot::A1 => &self.a1,
            Slot::C => &self.c,
            Slot::A2 => &self.a2,
        }
    }

    pub fn set(&mut self, slot: Slot, rule: String) {
        match slot {
            Slot::A1 => self.a1 = rule,
            Slot::C => self.c = rule,
            Slot::A2 => self.a2 = rule,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputsConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub curve: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trajectory: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theory: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub compare: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub network: NetworkRef,
    pub rules: RulesConfig,
    /// Forgetting factor of the adaptive rule.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu: Option<f64>,
    /// Must agree with the network's target model when given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<TrajectoryMode>,
    pub runs: usize,
    pub iterations: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub outputs: OutputsConfig,
}

/// A loaded, validated scenario.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub network: NetworkModel,
    pub base_dir: PathBuf,
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Self> {
        let config: ScenarioConfig = read_json(path)?;
        let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_config(config, &base_dir)
    }

    pub fn from_config(config: ScenarioConfig, base_dir: &Path) -> Result<Self> {
        let network = match &config.network {
            NetworkRef::File { file } => read_json::<NetworkFile>(&base_dir.join(file))?.into_model()?,
            NetworkRef::Inline(f) => f.into_model()?,
        };
        let scenario = Self { config, network, base_dir: base_dir.to_path_buf() };
        scenario.check()?;
        Ok(scenario)
    }

    fn check(&self) -> Result<()> {
        let c = &self.config;
        if c.runs == 0 {
            return Err(Error::Config("runs must be at least 1".into()));
        }
        if c.iterations == 0 {
            return Err(Error::Config("iterations must be at least 1".into()));
        }
        if let Some(nu) = c.nu {
            if !(nu > 0.0 && nu <= 1.0) {
                return Err(Error::Config(format!("nu must lie in (0, 1], got {nu}")));
            }
        }
        if let Some(mode) = c.mode {
            let actual = self.network.trajectory.mode();
            if mode != actual {
                return Err(Error::Config(format!(
                    "mode {mode:?} does not match the network's target model {actual:?}"
                )));
            }
        }
        for slot in [Slot::A1, Slot::C] {
            if self.rule(slot)?.is_adaptive() {
                return Err(Error::Config(format!("the adaptive rule is only available for A2, not {slot}")));
            }
        }
        Ok(())
    }

    pub fn rule(&self, slot: Slot) -> Result<RuleSpec> {
        self.config.rules.get(slot).parse()
    }

    pub fn is_adaptive(&self) -> Result<bool> {
        Ok(self.rule(Slot::A2)?.is_adaptive())
    }

    /// Static matrices; an adaptive `A2` starts from uniform weights.
    pub fn matrices(&self) -> Result<CombinationMatrices> {
        let build = |slot| self.rule(slot)?.build(&self.network, slot, &self.base_dir);
        let mats = CombinationMatrices { a1: build(Slot::A1)?, c: build(Slot::C)?, a2: build(Slot::A2)? };
        validate(&self.network, &mats).into_result()?;
        Ok(mats)
    }

    pub fn sim_options(&self) -> Result<SimOptions> {
        let mut opts = SimOptions::new(self.config.runs, self.config.iterations, self.config.seed);
        if self.is_adaptive()? {
            opts.adaptive_nu = Some(self.config.nu.unwrap_or(DEFAULT_NU));
        }
        opts.threads = threads_from_env()?;
        Ok(opts)
    }
}

/// Thread cap from `DIFFNET_THREADS`, if set.
pub fn threads_from_env() -> Result<Option<usize>> {
    match std::env::var("DIFFNET_THREADS") {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Error::Config(format!("DIFFNET_THREADS must be a positive integer, got '{v}'"))),
        },
        Err(_) => Ok(None),
    }
}
