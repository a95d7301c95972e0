use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use crate::env::SceneData;
use crate::error::{Error, Result};
use crate::scene::{generate_scene, write_labels_csv, write_scene_csv, SceneConfig};
use crate::seed::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    TrainRl,
    TrainDet,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::TrainRl, Split::TrainDet, Split::Test];

    pub fn name(self) -> &'static str {
        match self {
            Split::TrainRl => "train_rl",
            Split::TrainDet => "train_det",
            Split::Test => "test",
        }
    }

    fn id(self) -> u64 {
        match self {
            Split::TrainRl => 1,
            Split::TrainDet => 2,
            Split::Test => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneEntry {
    pub split: Split,
    pub name: String,
    #[serde(with = "hex_u64")]
    pub seed: u64,
    /// Relative to the dataset directory.
    pub scene_csv: PathBuf,
    pub labels_csv: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config_hash: String,
    #[serde(with = "hex_u64")]
    pub seed: u64,
    pub num_frames: usize,
    pub scenes: Vec<SceneEntry>,
}

/// TOML integers are signed 64-bit, so seeds are stored as hex strings.
mod hex_u64 {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &u64, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format!("{v:016x}"))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<u64, D::Error> {
        let text = String::deserialize(d)?;
        u64::from_str_radix(&text, 16).map_err(serde::de::Error::custom)
    }
}

pub const MANIFEST_FILE: &str = "manifest.toml";

pub fn dataset_dir(out: &Path) -> PathBuf {
    out.join("data")
}

impl Manifest {
    pub fn load(data_dir: &Path) -> Result<Self> {
        let path = data_dir.join(MANIFEST_FILE);
        let text = std::fs::read_to_string(&path)
            .map_err(|e| Error::Data(format!("cannot read {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| Error::Data(format!("manifest: {e}")))
    }

    pub fn split(&self, split: Split) -> impl Iterator<Item = &SceneEntry> {
        self.scenes.iter().filter(move |s| s.split == split)
    }

    /// Loads the manifest and checks that it was generated from `cfg`.
    pub fn load_checked(cfg: &ExperimentConfig, out: &Path) -> Result<Self> {
        let m = Self::load(&dataset_dir(out))?;
        let want = cfg.dataset_hash();
        if m.config_hash != want {
            return Err(Error::Data(format!(
                "dataset was generated from config {}, current config is {}",
                &m.config_hash[..12.min(m.config_hash.len())],
                &want[..12]
            )));
        }
        Ok(m)
    }

    pub fn load_split(&self, out: &Path, split: Split) -> Result<Vec<SceneData>> {
        let dir = dataset_dir(out);
        self.split(split)
            .map(|e| {
                SceneData::load(
                    &e.name,
                    &dir.join(&e.scene_csv),
                    &dir.join(&e.labels_csv),
                    self.num_frames,
                )
            })
            .collect()
    }
}

/// Per-scene seed; splits draw from disjoint derivation paths.
pub fn scene_seed(base: u64, split: Split, index: usize) -> u64 {
    derive_seed(base, &[split.id(), index as u64])
}

fn dir_is_nonempty(dir: &Path) -> Result<bool> {
    Ok(dir.exists() && std::fs::read_dir(dir)?.next().is_some())
}

/// Writes scene and label CSVs for all splits plus a manifest.
pub fn cmd_generate(cfg: &ExperimentConfig, force: bool) -> Result<Manifest> {
    let out = &cfg.experiment.out_dir;
    let dir = dataset_dir(out);
    if dir_is_nonempty(&dir)? {
        if !force {
            return Err(Error::Config(format!(
                "{} is not empty; pass --force to overwrite",
                dir.display()
            )));
        }
        std::fs::remove_dir_all(&dir)?;
    }
    std::fs::create_dir_all(&dir)?;
    let sizes = cfg.experiment.splits;
    let mut scenes = Vec::new();
    let mut seeds = std::collections::BTreeSet::new();
    for split in Split::ALL {
        let count = match split {
            Split::TrainRl => sizes.train_rl,
            Split::TrainDet => sizes.train_det,
            Split::Test => sizes.test,
        };
        std::fs::create_dir_all(dir.join(split.name()))?;
        for i in 0..count {
            let seed = scene_seed(cfg.experiment.seed, split, i);
            if !seeds.insert(seed) {
                return Err(Error::Runtime(format!("scene seed collision at {} {i}", split.name())));
            }
            let name = format!("{}_{i:03}", split.name());
            scenes.push(SceneEntry {
                split,
                scene_csv: PathBuf::from(split.name()).join(format!("{name}_scene.csv")),
                labels_csv: PathBuf::from(split.name()).join(format!("{name}_labels.csv")),
                name,
                seed,
            });
        }
    }
    scenes.par_iter().try_for_each(|entry| -> Result<()> {
        let scene_cfg = SceneConfig {
            rng_seed: entry.seed,
            ..cfg.scene.clone()
        };
        let scene = generate_scene(&scene_cfg, &cfg.chirp)?;
        write_scene_csv(&dir.join(&entry.scene_csv), &scene.frames)?;
        write_labels_csv(&dir.join(&entry.labels_csv), &scene.labels)
    })?;
    let manifest = Manifest {
        config_hash: cfg.dataset_hash(),
        seed: cfg.experiment.seed,
        num_frames: cfg.scene.num_frames,
        scenes,
    };
    let text = toml::to_string(&manifest).map_err(|e| Error::Runtime(format!("manifest: {e}")))?;
    std::fs::write(dir.join(MANIFEST_FILE), text)?;
    Ok(manifest)
}
