use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::agent::AgentConfig;
use crate::detect::CfarDetectorConfig;
use crate::env::EnvConfig;
use crate::error::{Error, Result};
use crate::radar::ChirpParams;
use crate::scene::SceneConfig;

/// Scene counts of the three dataset splits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitSizes {
    pub train_rl: usize,
    pub train_det: usize,
    pub test: usize,
}

impl SplitSizes {
    pub const DESK: SplitSizes = SplitSizes {
        train_rl: 24,
        train_det: 24,
        test: 8,
    };
    pub const FULL: SplitSizes = SplitSizes {
        train_rl: 100,
        train_det: 100,
        test: 20,
    };
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSection {
    pub seed: u64,
    pub out_dir: PathBuf,
    pub splits: SplitSizes,
    pub episodes: usize,
    pub checkpoint_every: usize,
    pub anchors_k: usize,
    /// Train on the threshold stub instead of radar scenes.
    pub sanity_env: bool,
    /// mAP over a single merged class instead of the mean over classes.
    pub map_class_agnostic: bool,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        ExperimentSection {
            seed: 0,
            out_dir: PathBuf::from("runs/default"),
            splits: SplitSizes::DESK,
            episodes: 300,
            checkpoint_every: 10,
            anchors_k: 6,
            sanity_env: false,
            map_class_agnostic: false,
        }
    }
}

/// Full experiment description as read from TOML.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub chirp: ChirpParams,
    pub scene: SceneConfig,
    pub cfar: CfarDetectorConfig,
    pub agent: AgentConfig,
    pub env: EnvConfig,
    pub experiment: ExperimentSection,
}

/// Fields that determine the generated dataset.
#[derive(Serialize)]
struct DatasetKey<'a> {
    chirp: &'a ChirpParams,
    scene: &'a SceneConfig,
    splits: &'a SplitSizes,
    seed: u64,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::Config(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(format!("config: {e}")))
    }

    pub fn validate(&self) -> Result<()> {
        self.chirp.validate()?;
        self.scene.validate(&self.chirp)?;
        self.cfar.cfar.validate()?;
        self.agent.validate()?;
        self.env_config().validate()?;
        let e = &self.experiment;
        if e.splits.train_rl == 0 || e.splits.test == 0 {
            return Err(Error::Config("train_rl and test splits need at least one scene".into()));
        }
        if e.checkpoint_every == 0 {
            return Err(Error::Config("checkpoint_every must be positive".into()));
        }
        if e.anchors_k == 0 {
            return Err(Error::Config("anchors_k must be positive".into()));
        }
        if self.scene.num_frames < self.env.episode_length {
            return Err(Error::Config(format!(
                "scenes have {} frames, episodes need {}",
                self.scene.num_frames, self.env.episode_length
            )));
        }
        let net = &self.agent.net;
        if net.input_height != self.env.state_height || net.input_width != self.env.state_width {
            return Err(Error::Config(format!(
                "network input {}x{} differs from state {}x{}",
                net.input_height, net.input_width, self.env.state_height, self.env.state_width
            )));
        }
        Ok(())
    }

    /// Environment settings with the shared detector section applied.
    pub fn env_config(&self) -> EnvConfig {
        EnvConfig {
            detector: self.cfar,
            ..self.env.clone()
        }
    }

    /// Applies command-line overrides.
    pub fn with_overrides(mut self, seed: Option<u64>, paper_scale: bool, out: Option<&Path>) -> Result<Self> {
        if let Some(s) = seed {
            self.experiment.seed = s;
        }
        if paper_scale {
            self.experiment.splits = SplitSizes::FULL;
        }
        if let Some(o) = out {
            self.experiment.out_dir = o.to_path_buf();
        }
        self.validate()?;
        Ok(self)
    }

    /// SHA-256 over the settings that determine the dataset.
    pub fn dataset_hash(&self) -> String {
        let key = DatasetKey {
            chirp: &self.chirp,
            scene: &self.scene,
            splits: &self.experiment.splits,
            seed: self.experiment.seed,
        };
        let text = toml::to_string(&key).expect("plain data serializes");
        let digest = Sha256::digest(text.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}
