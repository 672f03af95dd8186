use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::ddpg::{Batch, DdpgAgent, TargetUpdate};
use super::replay::ReplayBuffer;
use crate::env::{project_action, MegcEnv, RawAction, Transition};
use crate::error::{Error, Result};

/// Independent random streams derived from one run seed.
pub(crate) mod streams {
    pub const AGENT_INIT: u64 = 1;
    pub const EPISODES: u64 = 2;
    pub const EXPLORATION: u64 = 3;
}

pub(crate) fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Per-episode training summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeLog {
    /// 1-based episode number.
    pub episode: usize,
    pub episode_return: f64,
    pub lat_comp: f64,
    pub lat_aigc: f64,
    pub lat_ve: f64,
    pub lat_total: f64,
    /// Mean losses over the episode's gradient steps; NaN when none ran.
    pub critic_loss: f64,
    pub actor_loss: f64,
    pub updates: usize,
    pub noise_sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainingLog {
    pub episodes: Vec<EpisodeLog>,
}

impl TrainingLog {
    pub fn total_updates(&self) -> usize {
        self.episodes.iter().map(|e| e.updates).sum()
    }

    /// Mean return over the 0-based episode range `[from, to)`.
    pub fn mean_return(&self, from: usize, to: usize) -> f64 {
        let slice = &self.episodes[from..to];
        slice.iter().map(|e| e.episode_return).sum::<f64>() / slice.len() as f64
    }
}

/// Runs the actor-critic loop: act with exploration, store the transition,
/// sample a minibatch, update critic then actor, and soft-update the
/// targets, for `agent.config.episodes` episodes of `env.horizon()` slots.
///
/// The first `warmup_steps` environment steps use random raw actions and
/// perform no updates. `on_episode` sees each finished episode and may
/// write checkpoints.
pub fn train<F>(agent: &mut DdpgAgent, env: &mut MegcEnv, seed: u64, mut on_episode: F) -> Result<TrainingLog>
where
    F: FnMut(&EpisodeLog, &DdpgAgent) -> Result<()>,
{
    let config = agent.config.clone();
    let mut episode_seeds = stream(seed, streams::EPISODES);
    let mut rng = stream(seed, streams::EXPLORATION);
    let mut buffer = ReplayBuffer::new(config.buffer_capacity);
    let mut log = TrainingLog::default();
    let mut total_steps = 0usize;

    for episode in 1..=config.episodes {
        let mut state = env.reset(episode_seeds.gen());
        let horizon = env.horizon();
        let (mut ret, mut comp, mut aigc, mut ve, mut total) = (0.0, 0.0, 0.0, 0.0, 0.0);
        let (mut critic_loss, mut actor_loss, mut updates) = (0.0, 0.0, 0usize);

        loop {
            let action = if total_steps < config.warmup_steps {
                let mut raw = [0.0; RawAction::DIM];
                for x in raw.iter_mut() {
                    *x = rng.sample(StandardNormal);
                }
                project_action(&RawAction(raw))
            } else {
                agent.select_action(&state, true, &mut rng).1
            };
            let out = env.step(&action)?;
            total_steps += 1;
            ret += out.reward;
            comp += out.breakdown.comp_total;
            aigc += out.breakdown.aigc_total;
            ve += out.breakdown.ve_total;
            total += out.breakdown.slot_total;
            buffer.push(Transition {
                state,
                action,
                reward: out.reward,
                next_state: out.next,
                terminal: out.done,
            });

            if total_steps >= config.warmup_steps && buffer.len() >= config.batch_size {
                let batch = Batch::from_transitions(&buffer.sample(&mut rng, config.batch_size));
                let y = agent.compute_target(&batch);
                critic_loss += agent.critic_update(&batch, &y)?;
                actor_loss += agent.actor_update(&batch)?;
                if config.target_update == TargetUpdate::PerStep {
                    agent.update_targets()?;
                }
                updates += 1;
            }

            state = out.next;
            if out.done {
                break;
            }
        }
        if config.target_update == TargetUpdate::PerEpisode && updates > 0 {
            agent.update_targets()?;
        }

        let h = horizon as f64;
        let entry = EpisodeLog {
            episode,
            episode_return: ret,
            lat_comp: comp / h,
            lat_aigc: aigc / h,
            lat_ve: ve / h,
            lat_total: total / h,
            critic_loss: if updates > 0 { critic_loss / updates as f64 } else { f64::NAN },
            actor_loss: if updates > 0 { actor_loss / updates as f64 } else { f64::NAN },
            updates,
            noise_sigma: agent.noise_sigma,
        };
        if !entry.episode_return.is_finite() {
            return Err(Error::NonFinite(format!("episode {episode} return")));
        }
        agent.decay_noise();
        on_episode(&entry, agent)?;
        log.episodes.push(entry);
    }
    Ok(log)
}

/// Builds an agent from its config using the run seed's initialisation stream.
pub fn new_agent(config: super::AgentConfig, seed: u64) -> Result<DdpgAgent> {
    DdpgAgent::new(config, &mut stream(seed, streams::AGENT_INIT))
}
