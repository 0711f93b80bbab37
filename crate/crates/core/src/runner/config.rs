use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::flight::{PidGains, PlantParams};
use crate::gridworld::{GridState, GridWorld};
use crate::qlearn::LearnParams;

/// Everything one training run depends on. Serialized as the JSON config
/// file; omitted fields take the defaults below.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub env: GridWorld,
    #[serde(default)]
    pub learn: LearnParams,
    #[serde(default)]
    pub gains: PidGains,
    #[serde(default)]
    pub plant: PlantParams,
    #[serde(default = "default_start")]
    pub start: GridState,
    pub episodes: u32,
    #[serde(default = "default_max_steps")]
    pub max_steps_per_episode: u32,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_dynamics")]
    pub dynamics_enabled: bool,
}

fn default_start() -> GridState {
    GridState::new(1, 1)
}

fn default_max_steps() -> u32 {
    100
}

fn default_dynamics() -> bool {
    true
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            env: GridWorld::default(),
            learn: LearnParams::default(),
            gains: PidGains::default(),
            plant: PlantParams::default(),
            start: default_start(),
            episodes: 200,
            max_steps_per_episode: default_max_steps(),
            seed: 0,
            dynamics_enabled: default_dynamics(),
        }
    }
}

impl TrainConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: TrainConfig = serde_json::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        TrainConfig::from_json(&text).map_err(|e| match e {
            Error::InvalidConfig(msg) => Error::InvalidConfig(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes") + "\n"
    }

    pub fn validate(&self) -> Result<()> {
        self.learn.validate()?;
        self.gains.validate()?;
        self.plant.validate()?;
        if !self.env.contains(self.start) {
            return Err(Error::InvalidConfig(format!(
                "start {} outside the {}x{} grid",
                self.start,
                self.env.width(),
                self.env.height()
            )));
        }
        if self.episodes == 0 {
            return Err(Error::InvalidConfig("episodes must be at least 1".into()));
        }
        if self.max_steps_per_episode == 0 {
            return Err(Error::InvalidConfig("max_steps_per_episode must be at least 1".into()));
        }
        Ok(())
    }

    /// SHA-256 of the compact JSON encoding, hex encoded.
    pub fn fingerprint(&self) -> String {
        let compact = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&compact))
    }
}
