//! Experiment configuration: a TOML file with `[system]`, `[env]`,
//! `[agent]`, `[baselines]` and `[run]` sections. Every key is optional and
//! defaults to the evaluation setup; unknown keys are rejected.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::agent::AgentConfig;
use crate::env::EnvConfig;
use crate::error::{Error, Result};
use crate::latency::Action;
use crate::system::{dbm_per_hz_to_watts, MbitRange, SystemParams};

/// The system block as written in a config file. Identical to
/// [`SystemParams`] except that noise density is given in dBm/Hz and the
/// data-volume ranges as `[lo, hi]` megabit pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SystemSection {
    pub b_off: f64,
    pub b_back: f64,
    pub p_comp: f64,
    pub p_ve: f64,
    pub p_es: f64,
    pub n0_dbm_per_hz: f64,
    pub f_comp: f64,
    pub f_es: f64,
    pub chi: f64,
    pub xi: f64,
    pub zeta: f64,
    pub psi: f64,
    pub dist_comp: f64,
    pub dist_aigc: f64,
    pub dist_ve: f64,
    pub ref_gain_db: f64,
    pub pathloss_exp: f64,
    pub d_comp_mean_mbits: f64,
    pub d_comp_range_mbits: [f64; 2],
    pub d_ve_range_mbits: [f64; 2],
    pub d_gen_range_mbits: [f64; 2],
    pub t_horizon: usize,
}

impl Default for SystemSection {
    fn default() -> Self {
        let p = SystemParams::paper_defaults();
        Self {
            b_off: p.b_off,
            b_back: p.b_back,
            p_comp: p.p_comp,
            p_ve: p.p_ve,
            p_es: p.p_es,
            n0_dbm_per_hz: -100.0,
            f_comp: p.f_comp,
            f_es: p.f_es,
            chi: p.chi,
            xi: p.xi,
            zeta: p.zeta,
            psi: p.psi,
            dist_comp: p.dist_comp,
            dist_aigc: p.dist_aigc,
            dist_ve: p.dist_ve,
            ref_gain_db: p.ref_gain_db,
            pathloss_exp: p.pathloss_exp,
            d_comp_mean_mbits: p.d_comp_mean_mbits,
            d_comp_range_mbits: [p.d_comp_range_mbits.lo, p.d_comp_range_mbits.hi],
            d_ve_range_mbits: [p.d_ve_range_mbits.lo, p.d_ve_range_mbits.hi],
            d_gen_range_mbits: [p.d_gen_range_mbits.lo, p.d_gen_range_mbits.hi],
            t_horizon: p.t_horizon,
        }
    }
}

impl SystemSection {
    pub fn to_params(&self) -> SystemParams {
        let range = |r: [f64; 2]| MbitRange::new(r[0], r[1]);
        SystemParams {
            b_off: self.b_off,
            b_back: self.b_back,
            p_comp: self.p_comp,
            p_ve: self.p_ve,
            p_es: self.p_es,
            n0: dbm_per_hz_to_watts(self.n0_dbm_per_hz),
            f_comp: self.f_comp,
            f_es: self.f_es,
            chi: self.chi,
            xi: self.xi,
            zeta: self.zeta,
            psi: self.psi,
            dist_comp: self.dist_comp,
            dist_aigc: self.dist_aigc,
            dist_ve: self.dist_ve,
            ref_gain_db: self.ref_gain_db,
            pathloss_exp: self.pathloss_exp,
            d_comp_mean_mbits: self.d_comp_mean_mbits,
            d_comp_range_mbits: range(self.d_comp_range_mbits),
            d_ve_range_mbits: range(self.d_ve_range_mbits),
            d_gen_range_mbits: range(self.d_gen_range_mbits),
            t_horizon: self.t_horizon,
        }
    }
}

/// The fixed allocation used by the FRA baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FraSection {
    pub alpha_off: f64,
    pub alpha_back: f64,
    pub beta: f64,
    pub lambda: f64,
    pub omega: [f64; 3],
}

impl Default for FraSection {
    fn default() -> Self {
        Self {
            alpha_off: 0.5,
            alpha_back: 0.5,
            beta: 0.5,
            lambda: 0.5,
            omega: [1.0 / 3.0; 3],
        }
    }
}

impl FraSection {
    pub fn action(&self) -> Action {
        Action::from_free(self.alpha_off, self.alpha_back, self.beta, self.lambda, self.omega)
    }

    fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("baselines.fra.alpha_off", self.alpha_off),
            ("baselines.fra.alpha_back", self.alpha_back),
            ("baselines.fra.beta", self.beta),
            ("baselines.fra.lambda", self.lambda),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::validation(name, format!("must lie in [0, 1], got {v}")));
            }
        }
        if self.omega.iter().any(|w| !(0.0..=1.0).contains(w)) {
            return Err(Error::validation("baselines.fra.omega", "entries must lie in [0, 1]"));
        }
        let sum: f64 = self.omega.iter().sum();
        if (sum - 1.0).abs() > crate::latency::SUM_TOLERANCE {
            return Err(Error::validation(
                "baselines.fra.omega",
                format!("compute shares must sum to 1, got {sum}"),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BaselinesSection {
    pub fra: FraSection,
    pub oracle_resolution: f64,
}

impl Default for BaselinesSection {
    fn default() -> Self {
        Self {
            fra: FraSection::default(),
            oracle_resolution: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    pub seeds: Vec<u64>,
    pub episodes: usize,
    pub eval_slots: usize,
    /// Seed of the shared evaluation slot sequence.
    pub eval_seed: u64,
    pub output_dir: PathBuf,
    /// Write a checkpoint every this many episodes; 0 disables.
    pub checkpoint_every: usize,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            seeds: vec![0, 1, 2],
            episodes: 1000,
            eval_slots: 1000,
            eval_seed: 20_240_601,
            output_dir: PathBuf::from("runs/paper_defaults"),
            checkpoint_every: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    /// Informational; only `paper_defaults` is recognised.
    pub preset: Option<String>,
    pub system: SystemSection,
    pub env: EnvConfig,
    pub agent: AgentConfig,
    pub baselines: BaselinesSection,
    pub run: RunSection,
}

impl ExperimentConfig {
    /// The evaluation setup with every default in place.
    pub fn paper_defaults() -> Self {
        let mut c = Self {
            preset: Some("paper_defaults".into()),
            ..Self::default()
        };
        c.agent.episodes = c.run.episodes;
        c
    }

    pub fn system_params(&self) -> SystemParams {
        self.system.to_params()
    }

    /// Agent settings with the run's episode count applied.
    pub fn agent_config(&self) -> AgentConfig {
        AgentConfig {
            episodes: self.run.episodes,
            ..self.agent.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(p) = &self.preset {
            if p != "paper_defaults" {
                return Err(Error::validation("preset", format!("unknown preset `{p}`")));
            }
        }
        self.system_params()
            .validate()
            .map_err(|e| prefix_field(e, "system."))?;
        self.env.validate()?;
        self.agent_config().validate()?;
        self.baselines.fra.validate()?;
        let r = self.baselines.oracle_resolution;
        if !(r > 0.0 && r <= 0.5) {
            return Err(Error::validation("baselines.oracle_resolution", "must lie in (0, 0.5]"));
        }
        if self.run.seeds.is_empty() {
            return Err(Error::validation("run.seeds", "at least one seed is required"));
        }
        if self.run.episodes == 0 {
            return Err(Error::validation("run.episodes", "must be >= 1"));
        }
        if self.run.eval_slots == 0 {
            return Err(Error::validation("run.eval_slots", "must be >= 1"));
        }
        Ok(())
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let mut cfg: ExperimentConfig = toml::from_str(text).map_err(|e| {
            let line = e
                .span()
                .map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1)
                .unwrap_or(0);
            Error::Parse {
                line,
                message: e.message().to_owned(),
            }
        })?;
        cfg.agent.episodes = cfg.run.episodes;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config serialises")
    }
}

fn prefix_field(err: Error, prefix: &str) -> Error {
    match err {
        Error::Validation { field, reason } => Error::Validation {
            field: format!("{prefix}{field}"),
            reason,
        },
        other => other,
    }
}

pub fn parse_config(path: &Path) -> Result<ExperimentConfig> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    ExperimentConfig::from_toml_str(&text)
}
