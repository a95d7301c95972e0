use std::path::Path;

use super::{EnvConfig, Environment, StepInfo, StepResult};
use crate::detect::{f1_score, to_boxes, BBox, CfarDetector, Detector, FrameDetections};
use crate::error::{Error, Result};
use crate::radar::{
    normalize_state_pooled, range_doppler_map_windowed, synth_baseband, ChirpParams,
    PowerSetting, RangeDopplerImage,
};
use crate::scene::{read_labels_csv, read_scene_csv, GroundTruthBox, PointCloudFrame, Scene};
use crate::seed::derive_seed;
use crate::tensor::Tensor;

/// Point clouds and labels of one pre-generated scene.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneData {
    pub name: String,
    pub frames: Vec<PointCloudFrame>,
    pub labels: Vec<Vec<GroundTruthBox>>,
}

impl SceneData {
    pub fn from_scene(name: impl Into<String>, scene: &Scene) -> Self {
        SceneData {
            name: name.into(),
            frames: scene.frames.clone(),
            labels: scene.labels.clone(),
        }
    }

    pub fn load(name: &str, scene_csv: &Path, labels_csv: &Path, num_frames: usize) -> Result<Self> {
        if !scene_csv.exists() || !labels_csv.exists() {
            return Err(Error::Data(format!(
                "scene {name}: missing {} or {}",
                scene_csv.display(),
                labels_csv.display()
            )));
        }
        Ok(SceneData {
            name: name.to_string(),
            frames: read_scene_csv(scene_csv, num_frames)?,
            labels: read_labels_csv(labels_csv, num_frames)?,
        })
    }

    pub fn num_targets(&self, frame: usize) -> usize {
        let mut ids: Vec<u32> = self.labels[frame].iter().map(|l| l.object_id).collect();
        ids.sort_unstable();
        ids.dedup();
        ids.len()
    }
}

/// Renders one point-cloud frame into a range-Doppler image.
pub fn render_frame(
    frame: &PointCloudFrame,
    chirp: &ChirpParams,
    config: &EnvConfig,
    power: PowerSetting,
    noise_seed: u64,
) -> Result<RangeDopplerImage> {
    let raw = synth_baseband(
        &frame.scatterers(),
        chirp,
        power,
        config.noise_power_dbm,
        noise_seed,
    )?;
    Ok(range_doppler_map_windowed(&raw, config.window))
}

fn state_of(image: &RangeDopplerImage, config: &EnvConfig) -> Result<Tensor> {
    normalize_state_pooled(
        image,
        image.noise_floor_db + config.clip_low_above_floor_db,
        image.noise_floor_db + config.clip_high_above_floor_db,
        config.state_height,
        config.state_width,
        config.state_pooling,
    )
}

#[derive(Debug, Clone)]
struct Active {
    scene: usize,
    pass: u64,
    t: usize,
    image: RangeDopplerImage,
    power_db: f64,
    done: bool,
}

/// The power-control MDP: the agent observes the current frame, picks the
/// power for the next one and is scored on detection quality minus power.
#[derive(Debug, Clone)]
pub struct RadarEnv {
    config: EnvConfig,
    chirp: ChirpParams,
    scenes: Vec<SceneData>,
    detector: CfarDetector,
    seed: u64,
    schedule: usize,
    visits: Vec<u64>,
    active: Option<Active>,
}

impl RadarEnv {
    pub fn new(config: EnvConfig, chirp: ChirpParams, scenes: Vec<SceneData>, seed: u64) -> Result<Self> {
        config.validate()?;
        chirp.validate()?;
        if scenes.is_empty() {
            return Err(Error::Data("environment needs at least one scene".into()));
        }
        for s in &scenes {
            if s.frames.len() < config.episode_length || s.labels.len() < config.episode_length {
                return Err(Error::Config(format!(
                    "scene {} has {} frames, episodes need {}",
                    s.name,
                    s.frames.len(),
                    config.episode_length
                )));
            }
        }
        if chirp.samples_per_sweep % config.state_height != 0
            || chirp.num_pulses % config.state_width != 0
        {
            return Err(Error::Config(format!(
                "state {}x{} does not divide image {}x{}",
                config.state_height, config.state_width, chirp.samples_per_sweep, chirp.num_pulses
            )));
        }
        Ok(RadarEnv {
            detector: CfarDetector::new(config.detector),
            visits: vec![0; scenes.len()],
            config,
            chirp,
            scenes,
            seed,
            schedule: 0,
            active: None,
        })
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn chirp(&self) -> &ChirpParams {
        &self.chirp
    }

    pub fn scenes(&self) -> &[SceneData] {
        &self.scenes
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Index of the scene played by the current episode.
    pub fn current_scene(&self) -> Option<usize> {
        self.active.as_ref().map(|a| a.scene)
    }

    /// Number of episodes started through [`Environment::reset`].
    pub fn episodes_started(&self) -> usize {
        self.schedule
    }

    fn noise_seed(&self, scene: usize, pass: u64, render_index: usize) -> u64 {
        derive_seed(self.seed, &[scene as u64, pass, render_index as u64])
    }

    fn render(&self, scene: usize, pass: u64, frame: usize, render_index: usize, power: PowerSetting) -> Result<RangeDopplerImage> {
        render_frame(
            &self.scenes[scene].frames[frame],
            &self.chirp,
            &self.config,
            power,
            self.noise_seed(scene, pass, render_index),
        )
    }

    /// Starts an episode on a given scene. `pass` selects the noise
    /// realisation.
    pub fn reset_scene(&mut self, scene: usize, pass: u64) -> Result<Tensor> {
        if scene >= self.scenes.len() {
            return Err(Error::Data(format!("no scene with index {scene}")));
        }
        let power = self.config.mid_power();
        let image = self.render(scene, pass, 0, 0, power)?;
        let state = state_of(&image, &self.config)?;
        self.active = Some(Active {
            scene,
            pass,
            t: 0,
            image,
            power_db: power.db(),
            done: false,
        });
        Ok(state)
    }

    fn score(&self, scene: usize, frame: usize, image: &RangeDopplerImage) -> Result<(Vec<BBox>, Vec<BBox>, crate::detect::F1Stats)> {
        let dets = self.detector.detect(image)?;
        let gts = to_boxes(&self.scenes[scene].labels[frame]);
        let stats = f1_score(&dets, &gts, self.config.iou_threshold, self.config.class_agnostic_f1);
        Ok((dets, gts, stats))
    }
}

impl Environment for RadarEnv {
    fn state_shape(&self) -> [usize; 3] {
        [1, self.config.state_height, self.config.state_width]
    }

    fn episode_length(&self) -> usize {
        self.config.episode_length
    }

    fn skip_episodes(&mut self, n: usize) {
        for _ in 0..n {
            let i = self.schedule % self.scenes.len();
            self.visits[i] += 1;
            self.schedule += 1;
        }
    }

    fn reset(&mut self) -> Result<Tensor> {
        let scene = self.schedule % self.scenes.len();
        let pass = self.visits[scene];
        self.visits[scene] += 1;
        self.schedule += 1;
        self.reset_scene(scene, pass)
    }

    fn step(&mut self, action: f64) -> Result<StepResult> {
        let active = self
            .active
            .as_ref()
            .ok_or_else(|| Error::Runtime("step before reset".into()))?;
        if active.done {
            return Err(Error::Runtime("step after episode end".into()));
        }
        let (scene, pass, t) = (active.scene, active.pass, active.t);
        let (power, norm) = self.config.action_to_power(action);
        let last = self.config.episode_length - 1;
        let next_frame = (t + 1).min(last);
        let next_image = self.render(scene, pass, next_frame, t + 1, power)?;
        let (scored_frame, scored_image, scored_power) = if self.config.reward_on_next_state {
            (next_frame, &next_image, power.db())
        } else {
            (t, &active.image, active.power_db)
        };
        let (detections, ground_truth, stats) = self.score(scene, scored_frame, scored_image)?;
        let reward = stats.f1 - norm;
        let num_targets = self.scenes[scene].num_targets(scored_frame);
        let next_state = state_of(&next_image, &self.config)?;
        let done = t + 1 == self.config.episode_length;
        self.active = Some(Active {
            scene,
            pass,
            t: t + 1,
            image: next_image,
            power_db: power.db(),
            done,
        });
        Ok(StepResult {
            next_state,
            reward,
            done,
            info: StepInfo {
                frame: scored_frame,
                f1: stats.f1,
                f1_stats: stats,
                action_norm: norm,
                power_db: power.db(),
                scored_power_db: scored_power,
                num_targets,
                detections,
                ground_truth,
            },
        })
    }
}

/// Detections and F1 of a scene played at constant power.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedPowerRollout {
    pub power_db: f64,
    pub frames: Vec<FrameDetections>,
    pub f1: Vec<f64>,
}

/// Plays `scene` end to end at `power_db`, using the same noise realisation
/// as an adaptive episode with the same `pass`.
pub fn rollout_fixed_power(env: &RadarEnv, scene: usize, power_db: f64, pass: u64) -> Result<FixedPowerRollout> {
    let c = &env.config;
    if !(c.power_min_db..=c.power_max_db).contains(&power_db) {
        return Err(Error::Domain(format!(
            "power {power_db} dBm outside [{}, {}]",
            c.power_min_db, c.power_max_db
        )));
    }
    if scene >= env.scenes.len() {
        return Err(Error::Data(format!("no scene with index {scene}")));
    }
    let mut frames = Vec::with_capacity(c.episode_length);
    let mut f1 = Vec::with_capacity(c.episode_length);
    for t in 0..c.episode_length {
        let image = env.render(scene, pass, t, t, PowerSetting(power_db))?;
        let (detections, ground_truth, stats) = env.score(scene, t, &image)?;
        f1.push(stats.f1);
        frames.push(FrameDetections {
            detections,
            ground_truth,
        });
    }
    Ok(FixedPowerRollout {
        power_db,
        frames,
        f1,
    })
}
