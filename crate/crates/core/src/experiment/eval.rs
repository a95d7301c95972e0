use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::dataset::{Manifest, Split};
use super::train::{agent_seed, train_dir, FINAL_FILE};
use crate::agent::DdpgAgent;
use crate::detect::{mean_average_precision, FrameDetections};
use crate::env::{rollout_fixed_power, write_episode_trace, Environment, RadarEnv, TraceRow};
use crate::error::{Error, Result};
use crate::seed::derive_seed;

const EVAL_ENV_STREAM: u64 = 21;
const RANDOM_POLICY_STREAM: u64 = 22;

/// Action source during evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalPolicy {
    /// Greedy actor from a checkpoint.
    Trained,
    /// Uniform actions in `[-1, 1]`, independent of the state.
    Random,
}

#[derive(Debug, Clone, Default)]
pub struct EvalOptions {
    /// Defaults to the final checkpoint of the training run.
    pub checkpoint: Option<PathBuf>,
    pub random_policy: bool,
}

/// One evaluated frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameRecord {
    pub scene: String,
    pub frame: usize,
    pub num_targets: usize,
    /// Power chosen after observing this frame.
    pub power_db: f64,
    pub f1: f64,
    pub num_detections: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneReport {
    pub name: String,
    pub mean_action_norm: f64,
    pub fixed_power_db: f64,
    pub adaptive_mean_f1: f64,
    pub fixed_mean_f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerByTargets {
    pub num_targets: usize,
    pub frames: usize,
    pub mean_power_db: f64,
    pub std_power_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub policy: String,
    pub checkpoint: Option<PathBuf>,
    pub dataset_hash: String,
    pub num_frames: usize,
    pub adaptive_map: f64,
    pub fixed_map: f64,
    pub map_delta: f64,
    pub mean_power_db: f64,
    /// `None` when no evaluated frame is empty.
    pub zero_target_mean_power_db: Option<f64>,
    pub spearman_rho: f64,
    pub scenes: Vec<SceneReport>,
    pub power_vs_targets: Vec<PowerByTargets>,
}

#[derive(Debug, Clone)]
pub struct EvalOutcome {
    pub report: EvalReport,
    pub frames: Vec<FrameRecord>,
    pub out_dir: PathBuf,
}

/// Ranks starting at 1; tied values share the mean of their ranks.
pub fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ranks = vec![0.0; xs.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && xs[idx[j + 1]] == xs[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Pearson correlation of the tie-averaged ranks. Zero when either input
/// is constant or shorter than two.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len(), "spearman inputs differ in length");
    let n = x.len();
    if n < 2 {
        return 0.0;
    }
    let (rx, ry) = (average_ranks(x), average_ranks(y));
    let mean = (n as f64 + 1.0) / 2.0;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        let (da, db) = (a - mean, b - mean);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if sxx == 0.0 || syy == 0.0 {
        0.0
    } else {
        sxy / (sxx * syy).sqrt()
    }
}

pub fn power_vs_targets(frames: &[FrameRecord]) -> Vec<PowerByTargets> {
    let max = frames.iter().map(|f| f.num_targets).max().unwrap_or(0);
    (0..=max)
        .filter_map(|k| {
            let p: Vec<f64> = frames
                .iter()
                .filter(|f| f.num_targets == k)
                .map(|f| f.power_db)
                .collect();
            if p.is_empty() {
                return None;
            }
            let mean = p.iter().sum::<f64>() / p.len() as f64;
            let var = p.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / p.len() as f64;
            Some(PowerByTargets {
                num_targets: k,
                frames: p.len(),
                mean_power_db: mean,
                std_power_db: var.sqrt(),
            })
        })
        .collect()
}

struct SceneRun {
    adaptive: Vec<FrameDetections>,
    fixed: Vec<FrameDetections>,
    records: Vec<FrameRecord>,
    trace: Vec<TraceRow>,
    report: SceneReport,
}

fn run_scene(
    env: &RadarEnv,
    scene: usize,
    mut policy: impl FnMut(&crate::tensor::Tensor) -> Result<f64>,
) -> Result<SceneRun> {
    let mut env = env.clone();
    let name = env.scenes()[scene].name.clone();
    let mut state = env.reset_scene(scene, 0)?;
    let (mut adaptive, mut records, mut trace) = (Vec::new(), Vec::new(), Vec::new());
    let (mut norm_sum, mut f1_sum) = (0.0, 0.0);
    loop {
        let action = policy(&state)?;
        let res = env.step(action)?;
        trace.push(TraceRow::from(&res));
        records.push(FrameRecord {
            scene: name.clone(),
            frame: res.info.frame,
            num_targets: res.info.num_targets,
            power_db: res.info.power_db,
            f1: res.info.f1,
            num_detections: res.info.detections.len(),
        });
        norm_sum += res.info.action_norm;
        f1_sum += res.info.f1;
        state = res.next_state;
        let done = res.done;
        adaptive.push(FrameDetections {
            detections: res.info.detections,
            ground_truth: res.info.ground_truth,
        });
        if done {
            break;
        }
    }
    let steps = records.len() as f64;
    let mean_norm = norm_sum / steps;
    let c = env.config();
    let fixed_power = c.power_min_db + mean_norm * (c.power_max_db - c.power_min_db);
    let fixed = rollout_fixed_power(&env, scene, fixed_power, 0)?;
    let fixed_f1 = fixed.f1.iter().sum::<f64>() / fixed.f1.len() as f64;
    Ok(SceneRun {
        adaptive,
        fixed: fixed.frames,
        records,
        trace,
        report: SceneReport {
            name,
            mean_action_norm: mean_norm,
            fixed_power_db: fixed_power,
            adaptive_mean_f1: f1_sum / steps,
            fixed_mean_f1: fixed_f1,
        },
    })
}

pub fn eval_dir(out: &Path, policy: EvalPolicy) -> PathBuf {
    match policy {
        EvalPolicy::Trained => out.join("eval"),
        EvalPolicy::Random => out.join("eval_random"),
    }
}

fn write_frames_csv(path: &Path, frames: &[FrameRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["scene", "frame", "num_targets", "power_db", "f1", "num_detections"])?;
    for f in frames {
        w.write_record([
            f.scene.clone(),
            f.frame.to_string(),
            f.num_targets.to_string(),
            format!("{:.6}", f.power_db),
            format!("{:.6}", f.f1),
            f.num_detections.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn write_power_csv(path: &Path, rows: &[PowerByTargets]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["num_targets", "frames", "mean_power_db", "std_power_db"])?;
    for r in rows {
        w.write_record([
            r.num_targets.to_string(),
            r.frames.to_string(),
            format!("{:.6}", r.mean_power_db),
            format!("{:.6}", r.std_power_db),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Runs the trained (or random) policy over the test split and compares it
/// with each scene replayed at its mean chosen power.
pub fn cmd_eval(cfg: &ExperimentConfig, opts: &EvalOptions) -> Result<EvalOutcome> {
    let out = &cfg.experiment.out_dir;
    let manifest = Manifest::load_checked(cfg, out)?;
    let scenes = manifest.load_split(out, Split::Test)?;
    if scenes.is_empty() {
        return Err(Error::Data("test split is empty".into()));
    }
    let env = RadarEnv::new(
        cfg.env_config(),
        cfg.chirp,
        scenes,
        derive_seed(cfg.experiment.seed, &[EVAL_ENV_STREAM]),
    )?;
    let shape = env.state_shape();
    let net_shape = [1, cfg.agent.net.input_height, cfg.agent.net.input_width];
    if shape != net_shape {
        return Err(Error::Config(format!("network input {net_shape:?} does not match state {shape:?}")));
    }

    let policy = if opts.random_policy { EvalPolicy::Random } else { EvalPolicy::Trained };
    let (agent, checkpoint) = match policy {
        EvalPolicy::Trained => {
            let path = opts
                .checkpoint
                .clone()
                .unwrap_or_else(|| train_dir(out).join(FINAL_FILE));
            if !path.exists() {
                return Err(Error::Data(format!("checkpoint {} not found", path.display())));
            }
            let mut agent = DdpgAgent::new(cfg.agent.clone(), agent_seed(cfg))?;
            agent.load_networks(&path)?;
            (Some(agent), Some(path))
        }
        EvalPolicy::Random => (None, None),
    };

    let base = cfg.experiment.seed;
    let runs: Vec<SceneRun> = (0..env.scenes().len())
        .into_par_iter()
        .map(|i| match &agent {
            Some(a) => run_scene(&env, i, |s| Ok(a.policy(s)?.clamp(-1.0, 1.0))),
            None => {
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(base, &[RANDOM_POLICY_STREAM, i as u64]));
                run_scene(&env, i, move |_| Ok(rng.random_range(-1.0..=1.0)))
            }
        })
        .collect::<Result<_>>()?;

    let iou = cfg.env.iou_threshold;
    let agnostic = cfg.experiment.map_class_agnostic;
    let adaptive: Vec<FrameDetections> = runs.iter().flat_map(|r| r.adaptive.iter().cloned()).collect();
    let fixed: Vec<FrameDetections> = runs.iter().flat_map(|r| r.fixed.iter().cloned()).collect();
    let adaptive_map = mean_average_precision(&adaptive, iou, agnostic).map;
    let fixed_map = mean_average_precision(&fixed, iou, agnostic).map;
    let frames: Vec<FrameRecord> = runs.iter().flat_map(|r| r.records.iter().cloned()).collect();
    let powers: Vec<f64> = frames.iter().map(|f| f.power_db).collect();
    let targets: Vec<f64> = frames.iter().map(|f| f.num_targets as f64).collect();
    let mean_power = powers.iter().sum::<f64>() / powers.len() as f64;
    let zero: Vec<f64> = frames.iter().filter(|f| f.num_targets == 0).map(|f| f.power_db).collect();
    let zero_mean = (!zero.is_empty()).then(|| zero.iter().sum::<f64>() / zero.len() as f64);
    let table = power_vs_targets(&frames);

    let report = EvalReport {
        policy: match policy {
            EvalPolicy::Trained => "trained".into(),
            EvalPolicy::Random => "random".into(),
        },
        checkpoint,
        dataset_hash: manifest.config_hash.clone(),
        num_frames: frames.len(),
        adaptive_map,
        fixed_map,
        map_delta: adaptive_map - fixed_map,
        mean_power_db: mean_power,
        zero_target_mean_power_db: zero_mean,
        spearman_rho: spearman(&targets, &powers),
        scenes: runs.iter().map(|r| r.report.clone()).collect(),
        power_vs_targets: table.clone(),
    };

    let dir = eval_dir(out, policy);
    let traces = dir.join("traces");
    std::fs::create_dir_all(&traces)?;
    for r in &runs {
        write_episode_trace(&traces.join(format!("{}.csv", r.report.name)), &r.trace)?;
    }
    write_frames_csv(&dir.join("frames.csv"), &frames)?;
    write_power_csv(&dir.join("power_vs_targets.csv"), &table)?;
    let text = toml::to_string(&report).map_err(|e| Error::Runtime(format!("report: {e}")))?;
    std::fs::write(dir.join("report.toml"), text)?;
    Ok(EvalOutcome {
        report,
        frames,
        out_dir: dir,
    })
}
