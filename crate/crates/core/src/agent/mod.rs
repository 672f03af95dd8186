//! Actor-critic resource allocator: replay buffer, the two losses, target
//! networks, exploration and the training loop.

mod checkpoint;
mod ddpg;
mod replay;
mod train;

pub use checkpoint::{Checkpoint, CHECKPOINT_FORMAT, CHECKPOINT_VERSION};
pub use ddpg::{greedy_action, AgentConfig, Batch, DdpgAgent, TargetUpdate, CRITIC_INPUT_DIM};
pub use replay::ReplayBuffer;
pub use train::{new_agent, train, EpisodeLog, TrainingLog};
