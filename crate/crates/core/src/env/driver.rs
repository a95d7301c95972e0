use super::{Environment, StepResult};
use crate::agent::{state_to_shared, DdpgAgent, TrainLogRow, Transition};
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeSummary {
    pub episode: u64,
    pub steps: usize,
    pub total_reward: f64,
    pub mean_f1: f64,
    pub mean_action_norm: f64,
}

/// Plays one exploring episode, storing transitions and updating the agent
/// as scheduled. `on_step` sees every log row.
pub fn run_training_episode(
    agent: &mut DdpgAgent,
    env: &mut dyn Environment,
    mut on_step: impl FnMut(&TrainLogRow, &StepResult) -> Result<()>,
) -> Result<EpisodeSummary> {
    agent.begin_episode();
    let episode = agent.episodes;
    let mut state = env.reset()?;
    let mut shared = state_to_shared(&state);
    let (mut steps, mut total, mut f1, mut norm) = (0usize, 0.0, 0.0, 0.0);
    loop {
        let action = agent.training_action(&state)?;
        let res = env.step(action)?;
        let next_shared = state_to_shared(&res.next_state);
        let stats = agent.observe(Transition {
            state: shared,
            action,
            reward: res.reward,
            next_state: next_shared.clone(),
            done: res.done,
        })?;
        let row = TrainLogRow {
            step: agent.total_steps,
            episode,
            reward: res.reward,
            f1: res.info.f1,
            action_norm: res.info.action_norm,
            power_db: res.info.power_db,
            critic_loss: stats.map(|s| s.critic_loss),
            actor_objective: stats.map(|s| s.actor_objective),
        };
        on_step(&row, &res)?;
        steps += 1;
        total += res.reward;
        f1 += res.info.f1;
        norm += res.info.action_norm;
        let done = res.done;
        state = res.next_state;
        shared = next_shared;
        if done {
            break;
        }
    }
    agent.end_episode();
    Ok(EpisodeSummary {
        episode,
        steps,
        total_reward: total,
        mean_f1: f1 / steps as f64,
        mean_action_norm: norm / steps as f64,
    })
}

/// Plays one episode with the deterministic policy, without learning.
/// Returns each action with its step result.
pub fn run_greedy_episode(
    agent: &DdpgAgent,
    env: &mut dyn Environment,
    first_state: Option<crate::tensor::Tensor>,
) -> Result<Vec<(f64, StepResult)>> {
    let mut state = match first_state {
        Some(s) => s,
        None => env.reset()?,
    };
    let mut out = Vec::with_capacity(env.episode_length());
    loop {
        let action = agent.policy(&state)?.clamp(-1.0, 1.0);
        let res = env.step(action)?;
        let done = res.done;
        state = res.next_state.clone();
        out.push((action, res));
        if done {
            return Ok(out);
        }
    }
}
