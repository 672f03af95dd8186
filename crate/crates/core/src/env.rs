//! The slotted decision process wrapped around the latency model: state
//! construction, projection of unconstrained actor outputs onto the
//! feasible action set, and step/reset semantics.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::latency::{slot_latency, Action, LatencyBreakdown};
use crate::system::{sample_channel, ChannelState, Fading, SystemParams, TaskArrivals, BITS_PER_MBIT};

/// Lower bound kept on every projected ratio.
pub const PROJECTION_EPS: f64 = 1e-3;

/// Number of network-visible state features.
pub const STATE_DIM: usize = 6;

/// How the computing and enhancement users' input volumes are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TaskMode {
    #[default]
    Uniform,
    Poisson,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnvConfig {
    pub task_mode: TaskMode,
    pub fading: Fading,
    /// Slot latency above this (seconds) is clipped before it becomes a reward.
    pub l_cap: f64,
    /// Seconds per unit of reward.
    pub l_scale: f64,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            task_mode: TaskMode::Uniform,
            fading: Fading::None,
            l_cap: 60.0,
            l_scale: 10.0,
        }
    }
}

impl EnvConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.l_cap.is_finite() && self.l_cap > 0.0) {
            return Err(Error::validation("env.l_cap", "must be finite and > 0"));
        }
        if !(self.l_scale.is_finite() && self.l_scale > 0.0) {
            return Err(Error::validation("env.l_scale", "must be finite and > 0"));
        }
        if let Fading::Rician { k } = self.fading {
            if !(k.is_finite() && k >= 0.0) {
                return Err(Error::validation("env.fading.k", "must be finite and >= 0"));
            }
        }
        Ok(())
    }

    /// Clipped, scaled negative latency.
    pub fn reward(&self, slot_total: f64) -> f64 {
        -slot_total.min(self.l_cap) / self.l_scale
    }
}

/// Draws one slot's data volumes as whole numbers of bits.
pub fn sample_tasks<R: Rng + ?Sized>(rng: &mut R, params: &SystemParams, mode: TaskMode) -> TaskArrivals {
    let uniform_bits = |rng: &mut R, range: crate::system::MbitRange| {
        let (lo, hi) = range.bit_bounds();
        rng.gen_range(lo..=hi) as f64
    };
    let (d_comp, d_ve) = match mode {
        TaskMode::Uniform => (
            uniform_bits(rng, params.d_comp_range_mbits),
            uniform_bits(rng, params.d_ve_range_mbits),
        ),
        TaskMode::Poisson => {
            let poisson = Poisson::new(params.d_comp_mean_mbits).expect("validated mean");
            // a zero-Mbit draw is floored at one bit so every user keeps positive work
            let mut draw = || (poisson.sample(rng) * BITS_PER_MBIT).max(1.0);
            (draw(), draw())
        }
    };
    let d_aigc_out = uniform_bits(rng, params.d_gen_range_mbits);
    TaskArrivals::new(d_comp, d_ve, d_aigc_out, params.psi)
}

/// Channel and task realisation of one slot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Slot {
    pub channel: ChannelState,
    pub tasks: TaskArrivals,
}

impl Slot {
    pub fn sample<R: Rng + ?Sized>(rng: &mut R, params: &SystemParams, config: &EnvConfig) -> Self {
        let channel = sample_channel(params, config.fading, rng);
        let tasks = sample_tasks(rng, params, config.task_mode);
        Self { channel, tasks }
    }
}

/// Maps raw slot quantities to network features and back: gains are divided
/// by their fading-free values, input volumes by their range maxima.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    pub gain_scale: [f64; 4],
    pub d_comp_scale: f64,
    pub d_ve_scale: f64,
}

impl Normalizer {
    pub fn new(params: &SystemParams) -> Self {
        Self {
            gain_scale: params.mean_channel().as_array(),
            d_comp_scale: params.d_comp_range_mbits.hi * BITS_PER_MBIT,
            d_ve_scale: params.d_ve_range_mbits.hi * BITS_PER_MBIT,
        }
    }

    pub fn normalize(&self, channel: &ChannelState, d_comp: f64, d_ve: f64) -> [f64; STATE_DIM] {
        let h = channel.as_array();
        [
            h[0] / self.gain_scale[0],
            h[1] / self.gain_scale[1],
            h[2] / self.gain_scale[2],
            h[3] / self.gain_scale[3],
            d_comp / self.d_comp_scale,
            d_ve / self.d_ve_scale,
        ]
    }

    /// Inverse of [`normalize`](Self::normalize): (channel, d_comp, d_ve).
    pub fn denormalize(&self, features: &[f64; STATE_DIM]) -> (ChannelState, f64, f64) {
        let mut h = [0.0; 4];
        for i in 0..4 {
            h[i] = features[i] * self.gain_scale[i];
        }
        (
            ChannelState::from_array(h),
            features[4] * self.d_comp_scale,
            features[5] * self.d_ve_scale,
        )
    }

    pub fn observe(&self, slot: &Slot, t: usize) -> State {
        State {
            features: self.normalize(&slot.channel, slot.tasks.d_comp, slot.tasks.d_ve),
            t,
        }
    }
}

/// Normalised observation. `t` is bookkeeping only and never reaches a network.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub features: [f64; STATE_DIM],
    pub t: usize,
}

/// Unconstrained actor output: offload-pair logit, backhaul-pair logit,
/// power logit, offload-ratio logit and three compute logits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RawAction(pub [f64; RawAction::DIM]);

impl RawAction {
    pub const DIM: usize = 7;
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn softmax3(x: [f64; 3]) -> [f64; 3] {
    let m = x[0].max(x[1]).max(x[2]);
    let e = x.map(|v| (v - m).exp());
    let s = e[0] + e[1] + e[2];
    e.map(|v| v / s)
}

/// Squashes a raw action onto the feasible set. Each scalar ratio is
/// `eps + (1 - 2 eps) * sigmoid(x)`, each pair is completed by `1 - a`, and
/// the compute split is `eps + (1 - 3 eps) * softmax(x)`; every ratio ends
/// up inside `[eps, 1 - eps]` with the sums exact to rounding.
pub fn project_action(raw: &RawAction) -> Action {
    project_with_jacobian(raw).0
}

/// The projected action together with `d action / d raw` (9 x 7, row-major
/// over action coordinates).
pub fn project_with_jacobian(raw: &RawAction) -> (Action, [[f64; RawAction::DIM]; Action::DIM]) {
    let x = raw.0;
    let span = 1.0 - 2.0 * PROJECTION_EPS;
    let mut jac = [[0.0; RawAction::DIM]; Action::DIM];

    let squash = |v: f64| {
        let s = sigmoid(v);
        (PROJECTION_EPS + span * s, span * s * (1.0 - s))
    };
    let (a_off, d_off) = squash(x[0]);
    let (a_back, d_back) = squash(x[1]);
    let (beta, d_beta) = squash(x[2]);
    let (lambda, d_lambda) = squash(x[3]);
    jac[0][0] = d_off;
    jac[1][0] = -d_off;
    jac[2][1] = d_back;
    jac[3][1] = -d_back;
    jac[4][2] = d_beta;
    jac[5][3] = d_lambda;

    let simplex_span = 1.0 - 3.0 * PROJECTION_EPS;
    let s = softmax3([x[4], x[5], x[6]]);
    let omega = s.map(|v| PROJECTION_EPS + simplex_span * v);
    for i in 0..3 {
        for j in 0..3 {
            let delta = if i == j { 1.0 } else { 0.0 };
            jac[6 + i][4 + j] = simplex_span * s[i] * (delta - s[j]);
        }
    }

    (Action::from_free(a_off, a_back, beta, lambda, omega), jac)
}

/// A raw action that projects back onto `action`, defined when every ratio
/// lies strictly inside the projection's range.
pub fn unproject_action(action: &Action) -> Option<RawAction> {
    let span = 1.0 - 2.0 * PROJECTION_EPS;
    let logit = |a: f64| {
        let s = (a - PROJECTION_EPS) / span;
        (s > 0.0 && s < 1.0).then(|| (s / (1.0 - s)).ln())
    };
    let simplex_span = 1.0 - 3.0 * PROJECTION_EPS;
    let mut log_s = [0.0; 3];
    for (out, w) in log_s.iter_mut().zip(action.omega()) {
        let s = (w - PROJECTION_EPS) / simplex_span;
        if s <= 0.0 {
            return None;
        }
        *out = s.ln();
    }
    Some(RawAction([
        logit(action.alpha_comp_off)?,
        logit(action.alpha_aigc_back)?,
        logit(action.beta)?,
        logit(action.lambda)?,
        log_s[0],
        log_s[1],
        log_s[2],
    ]))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub state: State,
    pub action: Action,
    pub reward: f64,
    pub next_state: State,
    pub terminal: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub next: State,
    pub reward: f64,
    pub breakdown: LatencyBreakdown,
    pub done: bool,
}

/// One episode of `t_horizon` slots. Slots are independent draws, so the
/// action never influences the next state.
#[derive(Debug, Clone)]
pub struct MegcEnv {
    params: SystemParams,
    config: EnvConfig,
    normalizer: Normalizer,
    rng: ChaCha8Rng,
    slot: Slot,
    t: usize,
    started: bool,
}

impl MegcEnv {
    pub fn new(params: SystemParams, config: EnvConfig) -> Result<Self> {
        params.validate()?;
        config.validate()?;
        let normalizer = Normalizer::new(&params);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let slot = Slot::sample(&mut rng, &params, &config);
        Ok(Self {
            params,
            config,
            normalizer,
            rng,
            slot,
            t: 1,
            started: false,
        })
    }

    pub fn params(&self) -> &SystemParams {
        &self.params
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn normalizer(&self) -> &Normalizer {
        &self.normalizer
    }

    /// Slot the next `step` will be scored on.
    pub fn current_slot(&self) -> &Slot {
        &self.slot
    }

    pub fn horizon(&self) -> usize {
        self.params.t_horizon
    }

    pub fn reset(&mut self, seed: u64) -> State {
        self.rng = ChaCha8Rng::seed_from_u64(seed);
        self.t = 1;
        self.started = true;
        self.slot = Slot::sample(&mut self.rng, &self.params, &self.config);
        self.normalizer.observe(&self.slot, self.t)
    }

    pub fn step(&mut self, action: &Action) -> Result<StepOutcome> {
        if !self.started {
            return Err(Error::NotReset);
        }
        if self.t > self.params.t_horizon {
            return Err(Error::EpisodeFinished);
        }
        action.validate()?;
        let breakdown = slot_latency(action, &self.slot.channel, &self.slot.tasks, &self.params);
        let reward = self.config.reward(breakdown.slot_total);
        self.t += 1;
        self.slot = Slot::sample(&mut self.rng, &self.params, &self.config);
        Ok(StepOutcome {
            next: self.normalizer.observe(&self.slot, self.t),
            reward,
            breakdown,
            done: self.t > self.params.t_horizon,
        })
    }
}
