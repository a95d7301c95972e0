use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ou::OuProcess;
use super::replay::{Batch, ReplayMemory, Transition};
use crate::error::{Error, Result};
use crate::nn::{
    load_tensors, save_tensors, soft_update, Adam, ForwardCache, Gradients, Mode, NetConfig,
    Network,
};
use crate::tensor::Tensor;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AgentConfig {
    pub gamma: f64,
    pub tau: f64,
    pub batch_size: usize,
    pub replay_capacity: usize,
    pub warmup_steps: u64,
    /// Multiplier applied to the OU scale at every episode start; 1 disables
    /// decay.
    pub noise_decay: f64,
    pub ou_theta: f64,
    pub ou_sigma: f64,
    pub ou_dt: f64,
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub bn_momentum: f64,
    /// Environment steps per gradient update after warmup.
    pub update_every: u64,
    pub net: NetConfig,
}

impl Default for AgentConfig {
    fn default() -> Self {
        AgentConfig {
            gamma: 0.99,
            tau: 0.005,
            batch_size: 32,
            replay_capacity: 50_000,
            warmup_steps: 1_000,
            noise_decay: 1.0,
            ou_theta: 0.15,
            ou_sigma: 0.2,
            ou_dt: 1.0,
            actor_lr: 1e-4,
            critic_lr: 1e-3,
            bn_momentum: 0.99,
            update_every: 1,
            net: NetConfig::default(),
        }
    }
}

impl AgentConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if !(0.0..1.0).contains(&self.gamma) {
            return bad("gamma must lie in [0, 1)");
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return bad("tau must lie in (0, 1]");
        }
        if self.batch_size == 0 || self.replay_capacity < self.batch_size {
            return bad("replay capacity must be at least the (positive) batch size");
        }
        if !(self.noise_decay > 0.0 && self.noise_decay <= 1.0) {
            return bad("noise_decay must lie in (0, 1]");
        }
        if !(self.ou_theta > 0.0 && self.ou_sigma >= 0.0 && self.ou_dt > 0.0) {
            return bad("OU parameters must be positive");
        }
        if !(self.actor_lr > 0.0 && self.critic_lr > 0.0) {
            return bad("learning rates must be positive");
        }
        if !(0.0..1.0).contains(&self.bn_momentum) {
            return bad("bn_momentum must lie in [0, 1)");
        }
        if self.update_every == 0 {
            return bad("update_every must be positive");
        }
        self.net.validate()
    }
}

/// Action-value function as seen by the updates. Implemented by the critic
/// network and by analytic stubs.
pub trait ActionValue {
    /// Q per item, using running normalisation statistics.
    fn evaluate(&self, states: &Tensor, actions: &Tensor) -> Result<Vec<f64>>;
    /// Q per item and the gradient of their sum with respect to each action,
    /// using running normalisation statistics.
    fn value_and_action_grad(&self, states: &Tensor, actions: &Tensor)
        -> Result<(Vec<f64>, Vec<f64>)>;
}

impl ActionValue for Network {
    fn evaluate(&self, states: &Tensor, actions: &Tensor) -> Result<Vec<f64>> {
        Ok(self.forward(states, Some(actions), Mode::Eval)?.into_vec())
    }

    fn value_and_action_grad(
        &self,
        states: &Tensor,
        actions: &Tensor,
    ) -> Result<(Vec<f64>, Vec<f64>)> {
        let (q, cache) = self.forward_cached(states, Some(actions), Mode::Eval)?;
        let ones = Tensor::full(q.shape(), 1.0);
        let g = self.backward(&cache, &ones)?;
        let da = g
            .action_input
            .ok_or_else(|| Error::shape("critic", "no action input"))?;
        Ok((q.into_vec(), da.into_vec()))
    }
}

/// Bellman targets `r + (1 - done) * gamma * Q'(s', mu'(s'))`.
pub fn bellman_targets(
    batch: &Batch,
    target_actor: &Network,
    target_critic: &dyn ActionValue,
    gamma: f64,
) -> Result<Vec<f64>> {
    let next_a = target_actor.forward(&batch.next_states, None, Mode::Eval)?;
    let q_next = target_critic.evaluate(&batch.next_states, &next_a)?;
    Ok(batch
        .rewards
        .iter()
        .zip(&batch.dones)
        .zip(&q_next)
        .map(|((r, &d), q)| if d { *r } else { r + gamma * q })
        .collect())
}

/// One regression step of the critic towards fixed Bellman targets. Returns
/// the mean squared error measured before the step.
#[allow(clippy::too_many_arguments)]
pub fn critic_update(
    critic: &mut Network,
    opt: &mut Adam,
    target_actor: &Network,
    target_critic: &dyn ActionValue,
    batch: &Batch,
    gamma: f64,
    bn_momentum: f64,
) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::Runtime("empty batch".into()));
    }
    let y = bellman_targets(batch, target_actor, target_critic, gamma)?;
    let (q, cache) = critic.forward_cached(&batch.states, Some(&batch.actions), Mode::Train)?;
    let n = y.len() as f64;
    let diff: Vec<f64> = q.data().iter().zip(&y).map(|(q, y)| q - y).collect();
    let loss = diff.iter().map(|d| d * d).sum::<f64>() / n;
    let grad = Tensor::from_vec(q.shape(), diff.iter().map(|d| 2.0 * d / n).collect())?;
    let g = critic.backward(&cache, &grad)?;
    opt.apply(critic.params_mut(), &g.params)?;
    critic.commit_running_stats(&cache, bn_momentum);
    Ok(loss)
}

/// Objective `mean Q(s, mu(s))` and its gradient with respect to the actor
/// parameters, backpropagated through the critic's action input.
pub fn actor_objective(
    actor: &Network,
    critic: &dyn ActionValue,
    states: &Tensor,
) -> Result<(f64, Gradients, ForwardCache)> {
    let (a, cache) = actor.forward_cached(states, None, Mode::Train)?;
    let (q, dq_da) = critic.value_and_action_grad(states, &a)?;
    let n = q.len() as f64;
    let objective = q.iter().sum::<f64>() / n;
    let grad = Tensor::from_vec(a.shape(), dq_da.iter().map(|g| g / n).collect())?;
    let g = actor.backward(&cache, &grad)?;
    Ok((objective, g, cache))
}

/// One ascent step of the actor on the critic's estimate. The critic is only
/// read.
pub fn actor_update(
    actor: &mut Network,
    opt: &mut Adam,
    critic: &dyn ActionValue,
    states: &Tensor,
    bn_momentum: f64,
) -> Result<f64> {
    let (objective, g, cache) = actor_objective(actor, critic, states)?;
    let descent: Vec<Tensor> = g
        .params
        .into_iter()
        .map(|mut t| {
            t.data_mut().iter_mut().for_each(|v| *v = -*v);
            t
        })
        .collect();
    opt.apply(actor.params_mut(), &descent)?;
    actor.commit_running_stats(&cache, bn_momentum);
    Ok(objective)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpdateStats {
    pub critic_loss: f64,
    pub actor_objective: f64,
}

/// Actor, critic, their targets and optimisers, replay memory and
/// exploration state.
#[derive(Debug, Clone)]
pub struct DdpgAgent {
    pub config: AgentConfig,
    pub actor: Network,
    pub critic: Network,
    pub target_actor: Network,
    pub target_critic: Network,
    pub actor_opt: Adam,
    pub critic_opt: Adam,
    pub replay: ReplayMemory,
    pub ou: OuProcess,
    pub(crate) rng: ChaCha8Rng,
    pub total_steps: u64,
    pub episodes: u64,
    pub updates: u64,
}

impl DdpgAgent {
    pub fn new(config: AgentConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let actor = Network::new(&config.net.actor_spec(), seed ^ 0xA11CE)?;
        let critic = Network::new(&config.net.critic_spec(), seed ^ 0xC817)?;
        let shape = [1, config.net.input_height, config.net.input_width];
        let replay = ReplayMemory::new(config.replay_capacity, shape, seed ^ 0x5EED)?;
        let ou = OuProcess::new(config.ou_theta, 0.0, config.ou_sigma, config.ou_dt);
        Ok(DdpgAgent {
            actor_opt: Adam::new(actor.params(), config.actor_lr),
            critic_opt: Adam::new(critic.params(), config.critic_lr),
            target_actor: actor.clone(),
            target_critic: critic.clone(),
            actor,
            critic,
            replay,
            ou,
            rng: ChaCha8Rng::seed_from_u64(seed ^ 0x0E7A),
            total_steps: 0,
            episodes: 0,
            updates: 0,
            config,
        })
    }

    pub fn state_shape(&self) -> [usize; 3] {
        self.replay.state_shape()
    }

    fn batch_of_one(&self, state: &Tensor) -> Result<Tensor> {
        let [c, h, w] = self.state_shape();
        Tensor::from_vec(&[1, c, h, w], state.data().to_vec())
    }

    /// Deterministic policy output for a single state.
    pub fn policy(&self, state: &Tensor) -> Result<f64> {
        let s = self.batch_of_one(state)?;
        Ok(self.actor.forward(&s, None, Mode::Eval)?.data()[0])
    }

    /// Policy output plus optional OU noise, clipped to [-1, 1].
    pub fn act(&mut self, state: &Tensor, explore: bool) -> Result<f64> {
        let mut a = self.policy(state)?;
        if explore {
            a += self.ou.sample(&mut self.rng);
        }
        Ok(a.clamp(-1.0, 1.0))
    }

    /// Exploring action for training: uniform during warmup, then policy
    /// plus noise.
    pub fn training_action(&mut self, state: &Tensor) -> Result<f64> {
        if self.total_steps < self.config.warmup_steps {
            Ok(self.rng.random_range(-1.0..=1.0))
        } else {
            self.act(state, true)
        }
    }

    pub fn begin_episode(&mut self) {
        self.ou.reset();
        self.ou.sigma = self.config.ou_sigma * self.config.noise_decay.powi(self.episodes as i32);
    }

    pub fn end_episode(&mut self) {
        self.episodes += 1;
    }

    /// Stores a transition and runs one critic and one actor update when due.
    pub fn observe(&mut self, t: Transition) -> Result<Option<UpdateStats>> {
        self.replay.push(t)?;
        self.total_steps += 1;
        let due = self.total_steps >= self.config.warmup_steps
            && self.replay.len() >= self.config.batch_size
            && self.total_steps % self.config.update_every == 0;
        if !due {
            return Ok(None);
        }
        self.update().map(Some)
    }

    pub fn update(&mut self) -> Result<UpdateStats> {
        let batch = self.replay.sample(self.config.batch_size)?;
        let c = &self.config;
        let critic_loss = critic_update(
            &mut self.critic,
            &mut self.critic_opt,
            &self.target_actor,
            &self.target_critic,
            &batch,
            c.gamma,
            c.bn_momentum,
        )?;
        let actor_objective = actor_update(
            &mut self.actor,
            &mut self.actor_opt,
            &self.critic,
            &batch.states,
            c.bn_momentum,
        )?;
        soft_update(self.target_critic.params_mut(), self.critic.params(), c.tau)?;
        soft_update(self.target_actor.params_mut(), self.actor.params(), c.tau)?;
        self.updates += 1;
        Ok(UpdateStats {
            critic_loss,
            actor_objective,
        })
    }

    /// Writes all network parameters and optimiser moments.
    pub fn save_networks(&self, path: &Path) -> Result<()> {
        let mut named = self.actor.params().named("actor.");
        named.extend(self.critic.params().named("critic."));
        named.extend(self.target_actor.params().named("target_actor."));
        named.extend(self.target_critic.params().named("target_critic."));
        named.extend(self.actor_opt.named(self.actor.params(), "actor_opt."));
        named.extend(self.critic_opt.named(self.critic.params(), "critic_opt."));
        save_tensors(path, &named)
    }

    /// Loads parameters written by [`save_networks`](Self::save_networks);
    /// names and shapes must match this agent's architecture.
    pub fn load_networks(&mut self, path: &Path) -> Result<()> {
        let named = load_tensors(path)?;
        let strip = |prefix: &str| -> Vec<(String, Tensor)> {
            named
                .iter()
                .filter_map(|(n, t)| n.strip_prefix(prefix).map(|s| (s.to_string(), t.clone())))
                .collect()
        };
        let mut next = self.clone();
        for (net, prefix) in [
            (&mut next.actor, "actor."),
            (&mut next.critic, "critic."),
            (&mut next.target_actor, "target_actor."),
            (&mut next.target_critic, "target_critic."),
        ] {
            let part = strip(prefix);
            if part.len() != net.params().len() {
                return Err(Error::shape(
                    prefix.trim_end_matches('.'),
                    format!(
                        "checkpoint has {} tensors, architecture needs {}",
                        part.len(),
                        net.params().len()
                    ),
                ));
            }
            net.params_mut().assign_named(&part)?;
        }
        next.actor_opt
            .assign_named(next.actor.params(), "actor_opt.", &named)?;
        next.critic_opt
            .assign_named(next.critic.params(), "critic_opt.", &named)?;
        *self = next;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{LayerSpec, NetSpec};
    use std::sync::Arc;

    struct ConstQ(f64);
    impl ActionValue for ConstQ {
        fn evaluate(&self, _: &Tensor, a: &Tensor) -> Result<Vec<f64>> {
            Ok(vec![self.0; a.batch()])
        }
        fn value_and_action_grad(&self, _: &Tensor, a: &Tensor) -> Result<(Vec<f64>, Vec<f64>)> {
            Ok((vec![self.0; a.batch()], vec![0.0; a.batch()]))
        }
    }

    struct IdentityQ;
    impl ActionValue for IdentityQ {
        fn evaluate(&self, _: &Tensor, a: &Tensor) -> Result<Vec<f64>> {
            Ok(a.data().to_vec())
        }
        fn value_and_action_grad(&self, _: &Tensor, a: &Tensor) -> Result<(Vec<f64>, Vec<f64>)> {
            Ok((a.data().to_vec(), vec![1.0; a.batch()]))
        }
    }

    fn tiny() -> NetConfig {
        NetConfig {
            input_height: 8,
            input_width: 8,
            actor_conv: vec![4, 4],
            actor_dense: 8,
            critic_conv: vec![4, 4],
            critic_branch_dense: 8,
            critic_head_dense: vec![16, 16],
        }
    }

    fn states(batch: usize, seed: u64) -> Tensor {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = (0..batch * 64).map(|_| rng.random_range(0.0..1.0)).collect();
        Tensor::from_vec(&[batch, 1, 8, 8], data).unwrap()
    }

    /// Critic with zero weights whose output is its final bias.
    fn constant_critic(q: f64) -> Network {
        let mut c = Network::new(&tiny().critic_spec(), 0).unwrap();
        let n = c.params().len();
        for i in 0..n {
            if c.params().entries[i].name.ends_with("weight") {
                c.params_mut().value_mut(i).data_mut().fill(0.0);
            }
        }
        c.params_mut().value_mut(n - 1).data_mut()[0] = q;
        c
    }

    fn batch(reward: f64, done: bool, n: usize) -> Batch {
        Batch {
            states: states(n, 1),
            actions: Tensor::full(&[n, 1], 0.1),
            rewards: vec![reward; n],
            next_states: states(n, 2),
            dones: vec![done; n],
        }
    }

    #[test]
    fn hand_batch_loss() {
        let mut critic = constant_critic(0.5);
        let mut opt = Adam::new(critic.params(), 1e-3);
        let actor = Network::new(&tiny().actor_spec(), 1).unwrap();
        let b = batch(0.5, false, 4);
        let y = bellman_targets(&b, &actor, &ConstQ(0.2), 0.99).unwrap();
        assert!(y.iter().all(|v| (v - 0.698).abs() < 1e-12));
        let loss = critic_update(&mut critic, &mut opt, &actor, &ConstQ(0.2), &b, 0.99, 0.99).unwrap();
        assert!((loss - 0.039204).abs() < 1e-12, "{loss}");
    }

    #[test]
    fn gamma_zero_and_terminal_masking() {
        let actor = Network::new(&tiny().actor_spec(), 1).unwrap();
        let mut critic = constant_critic(0.8);
        let mut opt = Adam::new(critic.params(), 1e-3);
        let loss =
            critic_update(&mut critic, &mut opt, &actor, &ConstQ(5.0), &batch(0.3, false, 3), 0.0, 0.99)
                .unwrap();
        assert!((loss - 0.25).abs() < 1e-12);
        let y = bellman_targets(&batch(0.3, true, 3), &actor, &ConstQ(5.0), 0.99).unwrap();
        assert!(y.iter().all(|&v| v == 0.3));
    }

    #[test]
    fn constant_critic_gives_zero_actor_gradient() {
        let actor = Network::new(&tiny().actor_spec(), 3).unwrap();
        let (_, g, _) = actor_objective(&actor, &ConstQ(1.5), &states(5, 3)).unwrap();
        assert!(g.params.iter().all(|t| t.data().iter().all(|&v| v == 0.0)));
        // the real network with zero weights is constant in the action as well
        let critic = constant_critic(1.5);
        let (j, g, _) = actor_objective(&actor, &critic, &states(5, 3)).unwrap();
        assert!((j - 1.5).abs() < 1e-12);
        assert!(g.params.iter().all(|t| t.data().iter().all(|&v| v == 0.0)));
    }

    fn fd_objective(actor: &mut Network, critic: &dyn ActionValue, s: &Tensor) -> f64 {
        actor_objective(actor, critic, s).unwrap().0
    }

    fn check_actor_fd(critic: &dyn ActionValue, seed: u64) {
        let mut actor = Network::new(&tiny().actor_spec(), seed).unwrap();
        let s = states(4, seed);
        let (_, g, _) = actor_objective(&actor, critic, &s).unwrap();
        let h = 1e-4;
        for i in 0..actor.params().len() {
            if !actor.params().entries[i].trainable {
                continue;
            }
            for j in 0..actor.params().value(i).len() {
                let orig = actor.params().value(i).data()[j];
                actor.params_mut().value_mut(i).data_mut()[j] = orig + h;
                let lp = fd_objective(&mut actor, critic, &s);
                actor.params_mut().value_mut(i).data_mut()[j] = orig - h;
                let lm = fd_objective(&mut actor, critic, &s);
                actor.params_mut().value_mut(i).data_mut()[j] = orig;
                let fd = (lp - lm) / (2.0 * h);
                let an = g.params[i].data()[j];
                let rel = (an - fd).abs() / an.abs().max(fd.abs()).max(1e-6);
                assert!(rel < 1e-4, "{}[{j}] {an} vs {fd}", actor.params().entries[i].name);
            }
        }
    }

    #[test]
    fn identity_critic_gradient_matches_finite_differences() {
        check_actor_fd(&IdentityQ, 4);
    }

    #[test]
    fn gradient_through_real_critic_matches_finite_differences() {
        let critic = Network::new(&tiny().critic_spec(), 8).unwrap();
        check_actor_fd(&critic, 5);
    }

    #[test]
    fn identity_critic_step_raises_mean_action() {
        let mut actor = Network::new(&tiny().actor_spec(), 6).unwrap();
        let mut opt = Adam::new(actor.params(), 1e-3);
        let s = states(8, 6);
        let before = actor_objective(&actor, &IdentityQ, &s).unwrap().0;
        actor_update(&mut actor, &mut opt, &IdentityQ, &s, 0.99).unwrap();
        let after = actor_objective(&actor, &IdentityQ, &s).unwrap().0;
        assert!(after > before, "{before} -> {after}");
    }

    #[test]
    fn updates_touch_only_their_own_network() {
        let cfg = AgentConfig {
            net: tiny(),
            warmup_steps: 0,
            batch_size: 4,
            replay_capacity: 16,
            ..AgentConfig::default()
        };
        let mut agent = DdpgAgent::new(cfg, 3).unwrap();
        let b = batch(0.4, false, 4);
        let critic_before = agent.critic.params().clone();
        actor_update(
            &mut agent.actor,
            &mut agent.actor_opt,
            &agent.critic,
            &b.states,
            0.99,
        )
        .unwrap();
        assert_eq!(agent.critic.params(), &critic_before);
        let actor_before = agent.actor.params().clone();
        critic_update(
            &mut agent.critic,
            &mut agent.critic_opt,
            &agent.target_actor,
            &agent.target_critic,
            &b,
            0.99,
            0.99,
        )
        .unwrap();
        assert_eq!(agent.actor.params(), &actor_before);
        assert_ne!(agent.critic.params(), &critic_before);
    }

    #[test]
    fn bellman_fixed_point_with_zero_discount() {
        let spec = NetSpec {
            input_channels: 1,
            input_height: 8,
            input_width: 8,
            action_dim: Some(1),
            state_branch: vec![
                LayerSpec::Conv { out_channels: 4 },
                LayerSpec::BatchNorm,
                LayerSpec::Relu,
                LayerSpec::MaxPool2,
                LayerSpec::Flatten,
                LayerSpec::Dense { units: 8 },
                LayerSpec::BatchNorm,
                LayerSpec::Relu,
            ],
            action_branch: vec![LayerSpec::Dense { units: 8 }, LayerSpec::BatchNorm, LayerSpec::Relu],
            head: vec![LayerSpec::Dense { units: 16 }, LayerSpec::Relu, LayerSpec::Dense { units: 1 }],
        };
        let mut critic = Network::new(&spec, 2).unwrap();
        let mut opt = Adam::new(critic.params(), 1e-3);
        let actor = Network::new(&tiny().actor_spec(), 1).unwrap();
        let mut b = batch(0.37, false, 16);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        b.actions = Tensor::from_vec(&[16, 1], (0..16).map(|_| rng.random_range(-1.0..1.0)).collect())
            .unwrap();
        let mut loss = f64::INFINITY;
        for _ in 0..2000 {
            loss = critic_update(&mut critic, &mut opt, &actor, &ConstQ(9.0), &b, 0.0, 0.99).unwrap();
            if loss < 1e-5 {
                break;
            }
        }
        assert!(loss < 1e-4, "loss {loss}");
        let (q, _) = critic.forward_cached(&b.states, Some(&b.actions), Mode::Train).unwrap();
        assert!(q.data().iter().all(|v| (v - 0.37).abs() < 1e-2));
    }

    #[test]
    fn act_clips_and_is_deterministic() {
        let cfg = AgentConfig {
            net: tiny(),
            ..AgentConfig::default()
        };
        let mut agent = DdpgAgent::new(cfg, 1).unwrap();
        let s = Tensor::full(&[1, 8, 8], 0.3);
        let a1 = agent.act(&s, false).unwrap();
        let a2 = agent.act(&s, false).unwrap();
        assert_eq!(a1, a2);
        agent.ou.sigma = 0.0;
        agent.ou.x = 0.0;
        assert_eq!(agent.act(&s, true).unwrap(), a1);
        agent.ou.x = 5.0;
        assert_eq!(agent.act(&s, true).unwrap(), 1.0);
    }

    #[test]
    fn target_tracks_frozen_online_geometrically() {
        let cfg = tiny();
        let online = Network::new(&cfg.actor_spec(), 1).unwrap();
        let mut target = Network::new(&cfg.actor_spec(), 2).unwrap();
        let gap0: f64 = target.params().entries[0]
            .value
            .data()
            .iter()
            .zip(online.params().entries[0].value.data())
            .map(|(t, o)| (t - o).abs())
            .sum();
        for _ in 0..10 {
            soft_update(target.params_mut(), online.params(), 0.1).unwrap();
        }
        let gap: f64 = target.params().entries[0]
            .value
            .data()
            .iter()
            .zip(online.params().entries[0].value.data())
            .map(|(t, o)| (t - o).abs())
            .sum();
        assert!((gap / gap0 - 0.9f64.powi(10)).abs() < 1e-4);
        let mut t1 = Network::new(&cfg.actor_spec(), 2).unwrap();
        soft_update(t1.params_mut(), online.params(), 1.0).unwrap();
        assert_eq!(t1.params(), online.params());
    }

    #[test]
    fn network_checkpoint_round_trip() {
        let cfg = AgentConfig {
            net: tiny(),
            warmup_steps: 0,
            batch_size: 2,
            replay_capacity: 8,
            ..AgentConfig::default()
        };
        let mut agent = DdpgAgent::new(cfg.clone(), 5).unwrap();
        let s: Arc<[f32]> = Arc::from(vec![0.5f32; 64]);
        for i in 0..4 {
            agent
                .observe(Transition {
                    state: s.clone(),
                    action: 0.1 * i as f64,
                    reward: 0.2,
                    next_state: s.clone(),
                    done: false,
                })
                .unwrap();
        }
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nets.bin");
        agent.save_networks(&path).unwrap();
        let mut fresh = DdpgAgent::new(cfg, 99).unwrap();
        fresh.load_networks(&path).unwrap();
        assert_eq!(fresh.actor.params(), agent.actor.params());
        assert_eq!(fresh.target_critic.params(), agent.target_critic.params());
        assert_eq!(fresh.critic_opt, agent.critic_opt);

        let other = AgentConfig {
            net: NetConfig {
                actor_dense: 9,
                ..tiny()
            },
            ..AgentConfig::default()
        };
        let mut mismatched = DdpgAgent::new(other, 1).unwrap();
        assert!(matches!(
            mismatched.load_networks(&path),
            Err(Error::Shape { .. })
        ));
    }
}
