use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ddpg::DdpgAgent;
use crate::error::{Error, Result};

pub const CHECKPOINT_FORMAT: &str = "megc-ddpg";
pub const CHECKPOINT_VERSION: u32 = 1;

/// On-disk agent snapshot: architecture descriptors, flat parameter vectors
/// and optimiser moments for all four networks. Stored as JSON; floats
/// round-trip exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub episodes_done: usize,
    pub agent: DdpgAgent,
}

impl Checkpoint {
    pub fn new(agent: DdpgAgent, episodes_done: usize) -> Self {
        Self {
            format: CHECKPOINT_FORMAT.to_owned(),
            version: CHECKPOINT_VERSION,
            episodes_done,
            agent,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string(self).map_err(|e| Error::Checkpoint(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let ckpt: Checkpoint = serde_json::from_str(text).map_err(|e| Error::Checkpoint(e.to_string()))?;
        if ckpt.format != CHECKPOINT_FORMAT || ckpt.version != CHECKPOINT_VERSION {
            return Err(Error::Checkpoint(format!(
                "unsupported checkpoint {} v{}",
                ckpt.format, ckpt.version
            )));
        }
        let a = &ckpt.agent;
        if !a.actor.same_architecture(&a.actor_target) || !a.critic.same_architecture(&a.critic_target) {
            return Err(Error::Checkpoint("target and online architectures differ".into()));
        }
        if a.actor_opt.len() != a.actor.param_count() || a.critic_opt.len() != a.critic.param_count() {
            return Err(Error::Checkpoint("optimizer state does not match parameters".into()));
        }
        Ok(ckpt)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::MissingArtifact(path.to_path_buf()));
        }
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}
