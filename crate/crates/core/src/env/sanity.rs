use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Environment, StepInfo, StepResult};
use crate::detect::F1Stats;
use crate::error::{Error, Result};
use crate::seed::derive_seed;
use crate::tensor::Tensor;

/// Stub MDP in which detection succeeds exactly when the previous normalised
/// action reached a threshold. The state is a constant image holding that
/// previous action, so the best policy sits just above the threshold.
#[derive(Debug, Clone)]
pub struct ThresholdEnv {
    shape: [usize; 3],
    episode_length: usize,
    threshold: f64,
    seed: u64,
    episode: u64,
    prev_norm: f64,
    t: usize,
    started: bool,
}

impl ThresholdEnv {
    pub fn new(shape: [usize; 3], episode_length: usize, threshold: f64, seed: u64) -> Result<Self> {
        if episode_length == 0 || shape.iter().any(|&d| d == 0) {
            return Err(Error::Config("threshold env needs a non-empty state and episode".into()));
        }
        Ok(ThresholdEnv {
            shape,
            episode_length,
            threshold,
            seed,
            episode: 0,
            prev_norm: 0.0,
            t: 0,
            started: false,
        })
    }

    fn state(&self) -> Tensor {
        Tensor::full(&self.shape, self.prev_norm)
    }
}

impl Environment for ThresholdEnv {
    fn state_shape(&self) -> [usize; 3] {
        self.shape
    }

    fn episode_length(&self) -> usize {
        self.episode_length
    }

    fn skip_episodes(&mut self, n: usize) {
        self.episode += n as u64;
    }

    fn reset(&mut self) -> Result<Tensor> {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(self.seed, &[self.episode]));
        self.episode += 1;
        self.prev_norm = rng.random_range(0.0..1.0);
        self.t = 0;
        self.started = true;
        Ok(self.state())
    }

    fn step(&mut self, action: f64) -> Result<StepResult> {
        if !self.started || self.t >= self.episode_length {
            return Err(Error::Runtime("step outside an episode".into()));
        }
        let a = action.clamp(-1.0, 1.0);
        let norm = (a + 1.0) / 2.0;
        let hit = self.prev_norm >= self.threshold;
        let f1 = if hit { 1.0 } else { 0.0 };
        let frame = self.t;
        self.prev_norm = norm;
        self.t += 1;
        Ok(StepResult {
            next_state: self.state(),
            reward: f1 - norm,
            done: self.t == self.episode_length,
            info: StepInfo {
                frame,
                f1,
                f1_stats: F1Stats {
                    true_positives: hit as usize,
                    false_positives: 0,
                    false_negatives: (!hit) as usize,
                    f1,
                },
                action_norm: norm,
                power_db: norm,
                scored_power_db: norm,
                num_targets: 1,
                detections: vec![],
                ground_truth: vec![],
            },
        })
    }
}
