use ndarray::{s, Array2, ArrayView2};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::env::{project_action, project_with_jacobian, RawAction, State, Transition, STATE_DIM};
use crate::error::{Error, Result};
use crate::latency::Action;
use crate::nn::{soft_update, Activation, AdamState, Mlp};

/// Critic input width: state features followed by the projected action.
pub const CRITIC_INPUT_DIM: usize = STATE_DIM + Action::DIM;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TargetUpdate {
    /// Soft-update both targets after every gradient step.
    #[default]
    PerStep,
    /// Soft-update once at the end of each episode.
    PerEpisode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AgentConfig {
    pub gamma: f64,
    pub tau: f64,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    pub noise_sigma: f64,
    pub noise_decay: f64,
    pub noise_floor: f64,
    pub actor_lr: f64,
    pub critic_lr: f64,
    /// Set from the run block of the experiment config, not the agent block.
    #[serde(skip)]
    pub episodes: usize,
    pub warmup_steps: usize,
    pub actor_hidden: Vec<usize>,
    pub critic_hidden: Vec<usize>,
    /// Scale applied to the actor's last layer at initialisation.
    pub actor_final_scale: f64,
    pub target_update: TargetUpdate,
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self {
            gamma: 0.5,
            tau: 0.005,
            batch_size: 64,
            buffer_capacity: 100_000,
            noise_sigma: 0.2,
            noise_decay: 0.999,
            noise_floor: 0.01,
            actor_lr: 1e-4,
            critic_lr: 1e-3,
            episodes: 1000,
            warmup_steps: 1000,
            actor_hidden: vec![128, 128],
            critic_hidden: vec![128, 128],
            actor_final_scale: 0.1,
            target_update: TargetUpdate::PerStep,
        }
    }
}

impl AgentConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(Error::validation("agent.gamma", "must lie in [0, 1)"));
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return Err(Error::validation("agent.tau", "must lie in (0, 1]"));
        }
        if self.batch_size == 0 || self.batch_size > self.buffer_capacity {
            return Err(Error::validation(
                "agent.batch_size",
                "must satisfy 0 < batch_size <= buffer_capacity",
            ));
        }
        for (name, v) in [
            ("agent.noise_sigma", self.noise_sigma),
            ("agent.noise_floor", self.noise_floor),
            ("agent.actor_lr", self.actor_lr),
            ("agent.critic_lr", self.critic_lr),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::validation(name, "must be finite and >= 0"));
            }
        }
        if !(self.noise_decay > 0.0 && self.noise_decay <= 1.0) {
            return Err(Error::validation("agent.noise_decay", "must lie in (0, 1]"));
        }
        if self.actor_hidden.contains(&0) || self.critic_hidden.contains(&0) {
            return Err(Error::validation("agent.hidden", "layer widths must be positive"));
        }
        if !self.actor_final_scale.is_finite() {
            return Err(Error::validation("agent.actor_final_scale", "must be finite"));
        }
        Ok(())
    }

    fn actor_sizes(&self) -> Vec<usize> {
        let mut v = vec![STATE_DIM];
        v.extend(&self.actor_hidden);
        v.push(RawAction::DIM);
        v
    }

    fn critic_sizes(&self) -> Vec<usize> {
        let mut v = vec![CRITIC_INPUT_DIM];
        v.extend(&self.critic_hidden);
        v.push(1);
        v
    }
}

/// Actor, critic, their target copies and optimisers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DdpgAgent {
    pub config: AgentConfig,
    pub actor: Mlp,
    pub critic: Mlp,
    pub actor_target: Mlp,
    pub critic_target: Mlp,
    pub actor_opt: AdamState,
    pub critic_opt: AdamState,
    pub noise_sigma: f64,
}

/// Minibatch laid out as matrices, one transition per row.
#[derive(Debug, Clone)]
pub struct Batch {
    pub states: Array2<f64>,
    pub actions: Array2<f64>,
    pub rewards: Vec<f64>,
    pub next_states: Array2<f64>,
}

impl Batch {
    pub fn from_transitions(batch: &[Transition]) -> Self {
        let n = batch.len();
        let states = Array2::from_shape_fn((n, STATE_DIM), |(i, j)| batch[i].state.features[j]);
        let next_states = Array2::from_shape_fn((n, STATE_DIM), |(i, j)| batch[i].next_state.features[j]);
        let actions = Array2::from_shape_fn((n, Action::DIM), |(i, j)| batch[i].action.to_array()[j]);
        Self {
            states,
            actions,
            rewards: batch.iter().map(|t| t.reward).collect(),
            next_states,
        }
    }

    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }
}

fn concat_cols(a: ArrayView2<'_, f64>, b: ArrayView2<'_, f64>) -> Array2<f64> {
    let mut out = Array2::zeros((a.nrows(), a.ncols() + b.ncols()));
    out.slice_mut(s![.., ..a.ncols()]).assign(&a);
    out.slice_mut(s![.., a.ncols()..]).assign(&b);
    out
}

/// Projects each raw row; returns the action matrix and per-row Jacobians.
fn project_rows(raw: &Array2<f64>) -> (Array2<f64>, Vec<[[f64; RawAction::DIM]; Action::DIM]>) {
    let n = raw.nrows();
    let mut actions = Array2::zeros((n, Action::DIM));
    let mut jacobians = Vec::with_capacity(n);
    for (i, row) in raw.rows().into_iter().enumerate() {
        let mut x = [0.0; RawAction::DIM];
        for (dst, src) in x.iter_mut().zip(row.iter()) {
            *dst = *src;
        }
        let (a, jac) = project_with_jacobian(&RawAction(x));
        for (j, v) in a.to_array().into_iter().enumerate() {
            actions[[i, j]] = v;
        }
        jacobians.push(jac);
    }
    (actions, jacobians)
}

impl DdpgAgent {
    /// Builds both networks from `rng` and copies them into the targets.
    pub fn new<R: Rng + ?Sized>(config: AgentConfig, rng: &mut R) -> Result<Self> {
        config.validate()?;
        let mut actor = Mlp::new(&config.actor_sizes(), Activation::Tanh, Activation::Identity)?;
        actor.init_uniform(rng, config.actor_final_scale);
        let mut critic = Mlp::new(&config.critic_sizes(), Activation::Relu, Activation::Identity)?;
        critic.init_uniform(rng, 1.0);
        let actor_opt = AdamState::new(actor.param_count(), config.actor_lr);
        let critic_opt = AdamState::new(critic.param_count(), config.critic_lr);
        Ok(Self {
            noise_sigma: config.noise_sigma,
            actor_target: actor.clone(),
            critic_target: critic.clone(),
            actor,
            critic,
            actor_opt,
            critic_opt,
            config,
        })
    }

    /// Deterministic policy output before projection.
    pub fn raw_action(&self, state: &State) -> RawAction {
        let out = self.actor.forward(&state.features).expect("actor input width is STATE_DIM");
        let mut raw = [0.0; RawAction::DIM];
        raw.copy_from_slice(&out);
        RawAction(raw)
    }

    /// Policy action, optionally perturbed by Gaussian noise on the raw
    /// logits before projection.
    pub fn select_action<R: Rng + ?Sized>(&self, state: &State, explore: bool, rng: &mut R) -> (RawAction, Action) {
        let mut raw = self.raw_action(state);
        if explore {
            for x in raw.0.iter_mut() {
                let n: f64 = StandardNormal.sample(rng);
                *x += self.noise_sigma * n;
            }
        }
        (raw, project_action(&raw))
    }

    /// `y_i = r_i + gamma * Q'(s'_i, mu'(s'_i))` for every transition.
    pub fn compute_target(&self, batch: &Batch) -> Vec<f64> {
        let raw_next = self
            .actor_target
            .forward_batch(batch.next_states.view())
            .expect("actor target width");
        let (next_actions, _) = project_rows(&raw_next);
        let input = concat_cols(batch.next_states.view(), next_actions.view());
        let q_next = self.critic_target.forward_batch(input.view()).expect("critic target width");
        batch
            .rewards
            .iter()
            .zip(q_next.column(0))
            .map(|(r, q)| r + self.config.gamma * q)
            .collect()
    }

    /// Mean squared TD error and its gradient with respect to critic parameters.
    pub fn critic_loss_and_grad(&self, batch: &Batch, y: &[f64]) -> Result<(f64, Vec<f64>)> {
        if y.len() != batch.len() {
            return Err(Error::Dimension {
                context: "critic targets",
                expected: batch.len(),
                actual: y.len(),
            });
        }
        let n = batch.len() as f64;
        let input = concat_cols(batch.states.view(), batch.actions.view());
        let cache = self.critic.forward_cached(input.view())?;
        let q = cache.output();
        let mut loss = 0.0;
        let mut dq = Array2::zeros((batch.len(), 1));
        for i in 0..batch.len() {
            let err = y[i] - q[[i, 0]];
            loss += err * err;
            dq[[i, 0]] = -2.0 * err / n;
        }
        let mut grad = vec![0.0; self.critic.param_count()];
        self.critic.backward_batch(&cache, dq.view(), &mut grad, false)?;
        Ok((loss / n, grad))
    }

    /// `-mean Q(s, project(mu(s)))` and its gradient with respect to actor
    /// parameters, chained through the critic and the projection.
    pub fn actor_loss_and_grad(&self, batch: &Batch) -> Result<(f64, Vec<f64>)> {
        let n = batch.len();
        let actor_cache = self.actor.forward_cached(batch.states.view())?;
        let (actions, jacobians) = project_rows(actor_cache.output());
        let input = concat_cols(batch.states.view(), actions.view());
        let critic_cache = self.critic.forward_cached(input.view())?;
        let loss = -critic_cache.output().column(0).sum() / n as f64;

        let dq = Array2::from_elem((n, 1), -1.0 / n as f64);
        let mut critic_scratch = vec![0.0; self.critic.param_count()];
        let d_input = self
            .critic
            .backward_batch(&critic_cache, dq.view(), &mut critic_scratch, true)?
            .expect("requested");

        let mut d_raw = Array2::zeros((n, RawAction::DIM));
        for (i, jac) in jacobians.iter().enumerate() {
            for (a, jac_row) in jac.iter().enumerate() {
                let g = d_input[[i, STATE_DIM + a]];
                if g == 0.0 {
                    continue;
                }
                for (k, &dj) in jac_row.iter().enumerate() {
                    d_raw[[i, k]] += g * dj;
                }
            }
        }
        let mut grad = vec![0.0; self.actor.param_count()];
        self.actor.backward_batch(&actor_cache, d_raw.view(), &mut grad, false)?;
        Ok((loss, grad))
    }

    /// One Adam step on the critic; returns the loss before the step.
    pub fn critic_update(&mut self, batch: &Batch, y: &[f64]) -> Result<f64> {
        let (loss, grad) = self.critic_loss_and_grad(batch, y)?;
        if !loss.is_finite() {
            return Err(Error::NonFinite(format!("critic loss {loss}")));
        }
        self.critic_opt.step(self.critic.params_mut(), &grad)?;
        Ok(loss)
    }

    /// One Adam step on the actor with the critic held fixed.
    pub fn actor_update(&mut self, batch: &Batch) -> Result<f64> {
        let (loss, grad) = self.actor_loss_and_grad(batch)?;
        if !loss.is_finite() {
            return Err(Error::NonFinite(format!("actor loss {loss}")));
        }
        self.actor_opt.step(self.actor.params_mut(), &grad)?;
        Ok(loss)
    }

    pub fn update_targets(&mut self) -> Result<()> {
        soft_update(&mut self.actor_target, &self.actor, self.config.tau)?;
        soft_update(&mut self.critic_target, &self.critic, self.config.tau)
    }

    pub fn decay_noise(&mut self) {
        self.noise_sigma = (self.noise_sigma * self.config.noise_decay).max(self.config.noise_floor);
    }

    /// Closed-form parameter counts `(actor, critic)`.
    pub fn parameter_counts(&self) -> (usize, usize) {
        (self.actor.param_count(), self.critic.param_count())
    }
}

/// Convenience for frozen evaluation: the projected greedy action.
pub fn greedy_action(agent: &DdpgAgent, state: &State) -> Action {
    project_action(&agent.raw_action(state))
}
