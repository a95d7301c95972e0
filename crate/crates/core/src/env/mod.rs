//! Episodic environments: the radar power-control MDP and a threshold stub
//! used to validate the learner.

mod driver;
mod radar_env;
mod sanity;
mod trace;

use serde::{Deserialize, Serialize};

use crate::detect::{BBox, CfarDetectorConfig, F1Stats};
use crate::error::{Error, Result};
use crate::radar::{PowerSetting, StatePooling, Window};
use crate::tensor::Tensor;

pub use driver::{run_greedy_episode, run_training_episode, EpisodeSummary};
pub use radar_env::{render_frame, rollout_fixed_power, FixedPowerRollout, RadarEnv, SceneData};
pub use sanity::ThresholdEnv;
pub use trace::{write_episode_trace, TraceRow, EPISODE_TRACE_HEADER};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvConfig {
    pub power_min_db: f64,
    pub power_max_db: f64,
    pub noise_power_dbm: f64,
    pub episode_length: usize,
    pub window: Window,
    /// Set from the experiment's detector section, never read from `[env]`.
    #[serde(skip)]
    pub detector: CfarDetectorConfig,
    pub state_height: usize,
    pub state_width: usize,
    pub state_pooling: StatePooling,
    /// State clip range relative to the image noise floor.
    pub clip_low_above_floor_db: f64,
    pub clip_high_above_floor_db: f64,
    pub iou_threshold: f64,
    pub class_agnostic_f1: bool,
    /// Score the freshly rendered frame instead of the current one.
    pub reward_on_next_state: bool,
}

impl Default for EnvConfig {
    fn default() -> Self {
        EnvConfig {
            power_min_db: 0.0,
            power_max_db: 30.0,
            noise_power_dbm: -90.0,
            episode_length: 100,
            window: Window::Hann,
            detector: CfarDetectorConfig::default(),
            state_height: 64,
            state_width: 64,
            state_pooling: StatePooling::Mean,
            clip_low_above_floor_db: 3.0,
            clip_high_above_floor_db: 63.0,
            iou_threshold: 0.5,
            class_agnostic_f1: true,
            reward_on_next_state: false,
        }
    }
}

impl EnvConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.power_min_db < self.power_max_db) {
            return Err(Error::Config(format!(
                "power range [{}, {}] is empty",
                self.power_min_db, self.power_max_db
            )));
        }
        if !self.power_min_db.is_finite() || !self.power_max_db.is_finite() {
            return Err(Error::Config("power range must be finite".into()));
        }
        if self.episode_length == 0 {
            return Err(Error::Config("episode_length must be at least 1".into()));
        }
        if self.state_height == 0 || self.state_width == 0 {
            return Err(Error::Config("state size must be positive".into()));
        }
        if !(self.clip_low_above_floor_db < self.clip_high_above_floor_db) {
            return Err(Error::Config("state clip range is empty".into()));
        }
        if !(self.iou_threshold > 0.0 && self.iou_threshold <= 1.0) {
            return Err(Error::Config("iou_threshold must lie in (0, 1]".into()));
        }
        self.detector.cfar.validate()
    }

    pub fn action_to_power(&self, action: f64) -> (PowerSetting, f64) {
        action_to_power(action, self.power_min_db, self.power_max_db)
    }

    pub fn power_to_action(&self, power_db: f64) -> f64 {
        2.0 * (power_db - self.power_min_db) / (self.power_max_db - self.power_min_db) - 1.0
    }

    pub fn mid_power(&self) -> PowerSetting {
        PowerSetting(0.5 * (self.power_min_db + self.power_max_db))
    }
}

/// Maps an actor output onto the power range, linear in dB. Returns the
/// power and the normalised action `a' = (a + 1) / 2`.
pub fn action_to_power(action: f64, min_db: f64, max_db: f64) -> (PowerSetting, f64) {
    let a = if action.is_nan() { -1.0 } else { action.clamp(-1.0, 1.0) };
    let norm = (a + 1.0) / 2.0;
    (PowerSetting(min_db + norm * (max_db - min_db)), norm)
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepInfo {
    /// Index of the scored frame.
    pub frame: usize,
    pub f1: f64,
    pub f1_stats: F1Stats,
    pub action_norm: f64,
    /// Power chosen by this step's action.
    pub power_db: f64,
    /// Power at which the scored frame was rendered.
    pub scored_power_db: f64,
    pub num_targets: usize,
    pub detections: Vec<BBox>,
    pub ground_truth: Vec<BBox>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub next_state: Tensor,
    pub reward: f64,
    pub done: bool,
    pub info: StepInfo,
}

/// Gym-style episodic interface.
pub trait Environment {
    /// `[channels, height, width]` of every state.
    fn state_shape(&self) -> [usize; 3];
    fn episode_length(&self) -> usize;
    /// Starts the next episode of the schedule and returns its first state.
    fn reset(&mut self) -> Result<Tensor>;
    fn step(&mut self, action: f64) -> Result<StepResult>;
    /// Advances the episode schedule as if `n` episodes had been played.
    fn skip_episodes(&mut self, n: usize);
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn action_mapping_endpoints() {
        let c = EnvConfig::default();
        let (p, n) = c.action_to_power(-1.0);
        assert_eq!((p.db(), n), (0.0, 0.0));
        let (p, n) = c.action_to_power(1.0);
        assert_eq!((p.db(), n), (30.0, 1.0));
        let (p, n) = c.action_to_power(0.0);
        assert_eq!((p.db(), n), (15.0, 0.5));
        let (p, n) = c.action_to_power(3.0);
        assert_eq!((p.db(), n), (30.0, 1.0));
        assert_eq!(c.power_to_action(15.0), 0.0);
        assert_eq!(c.mid_power().db(), 15.0);
    }

    #[test]
    fn config_validation() {
        assert!(EnvConfig::default().validate().is_ok());
        let bad = EnvConfig {
            power_min_db: 10.0,
            power_max_db: 10.0,
            ..EnvConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = EnvConfig {
            episode_length: 0,
            ..EnvConfig::default()
        };
        assert!(bad.validate().is_err());
    }
}
