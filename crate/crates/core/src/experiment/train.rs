use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::dataset::{Manifest, Split};
use crate::agent::{load_resume, read_train_log, save_resume, DdpgAgent, TrainLogWriter};
use crate::env::{run_training_episode, EnvConfig, Environment, EpisodeSummary, RadarEnv, ThresholdEnv};
use crate::error::{Error, Result};
use crate::seed::derive_seed;

pub const NETS_FILE: &str = "checkpoint.nets";
pub const RESUME_FILE: &str = "checkpoint.resume";
pub const PROGRESS_FILE: &str = "progress.toml";
pub const FINAL_FILE: &str = "final.nets";
pub const LOG_FILE: &str = "train_log.csv";

const AGENT_STREAM: u64 = 11;
const TRAIN_ENV_STREAM: u64 = 12;

pub fn train_dir(out: &Path) -> PathBuf {
    out.join("train")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Progress {
    pub episodes_done: usize,
    pub total_steps: u64,
    pub dataset_hash: String,
    pub finished: bool,
}

#[derive(Debug, Clone, Default)]
pub struct TrainOptions {
    /// Stop after this many episodes in this invocation (simulates an
    /// interruption).
    pub stop_after: Option<usize>,
    /// Discard any previous run instead of resuming.
    pub fresh: bool,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub episodes_done: usize,
    pub total_steps: u64,
    pub finished: bool,
    pub resumed_from: Option<usize>,
    pub summaries: Vec<EpisodeSummary>,
    pub final_checkpoint: Option<PathBuf>,
}

pub fn agent_seed(cfg: &ExperimentConfig) -> u64 {
    derive_seed(cfg.experiment.seed, &[AGENT_STREAM])
}

fn build_env(cfg: &ExperimentConfig, out: &Path) -> Result<(Box<dyn Environment>, String)> {
    let seed = derive_seed(cfg.experiment.seed, &[TRAIN_ENV_STREAM]);
    if cfg.experiment.sanity_env {
        let shape = [1, cfg.agent.net.input_height, cfg.agent.net.input_width];
        let env = ThresholdEnv::new(shape, cfg.env.episode_length, 0.5, seed)?;
        return Ok((Box::new(env), String::from("threshold")));
    }
    let manifest = Manifest::load_checked(cfg, out)?;
    let scenes = manifest.load_split(out, Split::TrainRl)?;
    let env_cfg: EnvConfig = cfg.env_config();
    let env = RadarEnv::new(env_cfg, cfg.chirp, scenes, seed)?;
    Ok((Box::new(env), manifest.config_hash))
}

fn write_progress(dir: &Path, p: &Progress) -> Result<()> {
    let text = toml::to_string(p).map_err(|e| Error::Runtime(format!("progress: {e}")))?;
    std::fs::write(dir.join(PROGRESS_FILE), text)?;
    Ok(())
}

pub fn read_progress(dir: &Path) -> Result<Option<Progress>> {
    let path = dir.join(PROGRESS_FILE);
    if !path.exists() {
        return Ok(None);
    }
    let text = std::fs::read_to_string(&path)?;
    toml::from_str(&text)
        .map(Some)
        .map_err(|e| Error::Data(format!("progress file: {e}")))
}

/// Keeps only log rows up to `steps`, dropping rows written after the last
/// checkpoint of an interrupted run.
fn trim_log(path: &Path, steps: u64) -> Result<()> {
    if !path.exists() {
        return Ok(());
    }
    let rows = read_train_log(path)?;
    let mut w = TrainLogWriter::open(path, false)?;
    for r in rows.iter().filter(|r| r.step <= steps) {
        w.write(r)?;
    }
    w.flush()
}

fn checkpoint(dir: &Path, agent: &DdpgAgent, progress: &Progress) -> Result<()> {
    agent.save_networks(&dir.join(NETS_FILE))?;
    save_resume(agent, &dir.join(RESUME_FILE))?;
    write_progress(dir, progress)
}

/// Runs DDPG training, resuming from the last checkpoint when one exists.
pub fn cmd_train(cfg: &ExperimentConfig, opts: &TrainOptions) -> Result<TrainOutcome> {
    let out = &cfg.experiment.out_dir;
    let dir = train_dir(out);
    let (mut env, hash) = build_env(cfg, out)?;
    if opts.fresh && dir.exists() {
        std::fs::remove_dir_all(&dir)?;
    }
    std::fs::create_dir_all(&dir)?;
    let mut agent = DdpgAgent::new(cfg.agent.clone(), agent_seed(cfg))?;
    let mut resumed_from = None;
    let mut episodes_done = 0;
    if let Some(p) = read_progress(&dir)? {
        if p.dataset_hash != hash {
            return Err(Error::Data(
                "existing training run belongs to a different dataset; use --force".into(),
            ));
        }
        agent.load_networks(&dir.join(NETS_FILE))?;
        load_resume(&mut agent, &dir.join(RESUME_FILE))?;
        env.skip_episodes(p.episodes_done);
        episodes_done = p.episodes_done;
        resumed_from = Some(p.episodes_done);
        trim_log(&dir.join(LOG_FILE), p.total_steps)?;
    } else if dir.join(LOG_FILE).exists() {
        std::fs::remove_file(dir.join(LOG_FILE))?;
    }
    let mut log = TrainLogWriter::open(&dir.join(LOG_FILE), true)?;
    let total = cfg.experiment.episodes;
    let mut summaries = Vec::new();
    let mut ran = 0;
    while episodes_done < total {
        if opts.stop_after.is_some_and(|n| ran >= n) {
            break;
        }
        let s = run_training_episode(&mut agent, env.as_mut(), |row, _| log.write(row))?;
        summaries.push(s);
        episodes_done += 1;
        ran += 1;
        let finished = episodes_done == total;
        if finished || episodes_done % cfg.experiment.checkpoint_every == 0 {
            log.flush()?;
            checkpoint(
                &dir,
                &agent,
                &Progress {
                    episodes_done,
                    total_steps: agent.total_steps,
                    dataset_hash: hash.clone(),
                    finished,
                },
            )?;
        }
    }
    log.flush()?;
    let finished = episodes_done == total;
    let final_checkpoint = if finished {
        let path = dir.join(FINAL_FILE);
        agent.save_networks(&path)?;
        if total == 0 {
            write_progress(
                &dir,
                &Progress {
                    episodes_done,
                    total_steps: agent.total_steps,
                    dataset_hash: hash,
                    finished,
                },
            )?;
        }
        Some(path)
    } else {
        None
    };
    Ok(TrainOutcome {
        episodes_done,
        total_steps: agent.total_steps,
        finished,
        resumed_from,
        summaries,
        final_checkpoint,
    })
}
