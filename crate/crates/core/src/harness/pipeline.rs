//! Training and evaluation runs and the artifacts they leave on disk.
//!
//! Layout under `run.output_dir`:
//!
//! ```text
//! seed_<s>/reward_curve.csv        episode,return,lat_comp,lat_aigc,lat_ve
//! seed_<s>/checkpoints/episode_<k>.json
//! seed_<s>/final.json
//! eval_<policy>.csv                one row per evaluation slot
//! eval_lara_seed<s>.csv
//! comparison.csv                   policy,seed,lat_comp,lat_aigc,lat_ve,total
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::eval::{eval_slots, evaluate, LatencyReport, Policy, PolicyKind, SlotRecord};
use crate::agent::{new_agent, train, Checkpoint, TrainingLog};
use crate::env::MegcEnv;
use crate::error::{Error, Result};

pub const REWARD_CURVE: &str = "reward_curve.csv";
pub const COMPARISON: &str = "comparison.csv";
pub const FINAL_CHECKPOINT: &str = "final.json";

pub fn seed_dir(out: &Path, seed: u64) -> PathBuf {
    out.join(format!("seed_{seed}"))
}

/// Fails if `path` exists and overwriting was not requested.
pub fn guard(path: &Path, overwrite: bool) -> Result<()> {
    if path.exists() && !overwrite {
        return Err(Error::WouldOverwrite(path.to_path_buf()));
    }
    Ok(())
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

pub(crate) fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    if let Some(dir) = path.parent() {
        ensure_dir(dir)?;
    }
    let mut w = csv::Writer::from_path(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub(crate) fn read_rows<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    if !path.exists() {
        return Err(Error::MissingArtifact(path.to_path_buf()));
    }
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

/// One row of `reward_curve.csv`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardRow {
    pub episode: usize,
    #[serde(rename = "return")]
    pub episode_return: f64,
    pub lat_comp: f64,
    pub lat_aigc: f64,
    pub lat_ve: f64,
}

/// One row of `comparison.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub policy: String,
    pub seed: Option<u64>,
    pub lat_comp: f64,
    pub lat_aigc: f64,
    pub lat_ve: f64,
    pub total: f64,
}

impl From<&LatencyReport> for ComparisonRow {
    fn from(r: &LatencyReport) -> Self {
        Self {
            policy: r.policy.clone(),
            seed: r.seed,
            lat_comp: r.lat_comp,
            lat_aigc: r.lat_aigc,
            lat_ve: r.lat_ve,
            total: r.total,
        }
    }
}

/// Trains one agent for `seed` without touching the disk.
pub fn train_seed(config: &ExperimentConfig, seed: u64) -> Result<(TrainingLog, crate::agent::DdpgAgent)> {
    let mut env = MegcEnv::new(config.system_params(), config.env.clone())?;
    let mut agent = new_agent(config.agent_config(), seed)?;
    let log = train(&mut agent, &mut env, seed, |_, _| Ok(()))?;
    Ok((log, agent))
}

fn train_to_disk(config: &ExperimentConfig, seed: u64, overwrite: bool) -> Result<TrainingLog> {
    let dir = seed_dir(&config.run.output_dir, seed);
    let curve = dir.join(REWARD_CURVE);
    let final_ckpt = dir.join(FINAL_CHECKPOINT);
    guard(&curve, overwrite)?;
    guard(&final_ckpt, overwrite)?;
    ensure_dir(&dir)?;

    let mut env = MegcEnv::new(config.system_params(), config.env.clone())?;
    let mut agent = new_agent(config.agent_config(), seed)?;
    let every = config.run.checkpoint_every;
    let log = train(&mut agent, &mut env, seed, |entry, agent| {
        if every > 0 && entry.episode % every == 0 {
            let path = dir.join("checkpoints").join(format!("episode_{:05}.json", entry.episode));
            guard(&path, overwrite)?;
            Checkpoint::new(agent.clone(), entry.episode).save(&path)?;
        }
        Ok(())
    })?;

    let rows: Vec<RewardRow> = log
        .episodes
        .iter()
        .map(|e| RewardRow {
            episode: e.episode,
            episode_return: e.episode_return,
            lat_comp: e.lat_comp,
            lat_aigc: e.lat_aigc,
            lat_ve: e.lat_ve,
        })
        .collect();
    write_rows(&curve, &rows)?;
    Checkpoint::new(agent, log.episodes.len()).save(&final_ckpt)?;
    Ok(log)
}

/// Trains one agent per configured seed, in parallel, writing each seed's
/// reward curve and checkpoints. Results are returned in seed order.
pub fn run_training(config: &ExperimentConfig, overwrite: bool) -> Result<Vec<(u64, TrainingLog)>> {
    config.validate()?;
    ensure_dir(&config.run.output_dir)?;
    let results: Vec<Result<TrainingLog>> = std::thread::scope(|scope| {
        let handles: Vec<_> = config
            .run
            .seeds
            .iter()
            .map(|&seed| scope.spawn(move || train_to_disk(config, seed, overwrite)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("training thread panicked"))
            .collect()
    });
    config
        .run
        .seeds
        .iter()
        .zip(results)
        .map(|(&seed, r)| r.map(|log| (seed, log)))
        .collect()
}

fn eval_file_name(kind: PolicyKind, seed: Option<u64>) -> String {
    match (kind, seed) {
        (PolicyKind::Lara, Some(s)) => format!("eval_lara_seed{s}.csv"),
        (PolicyKind::Lara, None) => "eval_lara.csv".into(),
        (PolicyKind::Fra, _) => "eval_fra.csv".into(),
        (PolicyKind::Rra, _) => "eval_rra.csv".into(),
        (PolicyKind::Oracle, _) => "eval_oracle.csv".into(),
    }
}

/// Evaluates one policy on the shared slot sequence and writes its
/// per-slot CSV, then refreshes `comparison.csv` from every evaluation file
/// in the output directory. `checkpoint` is required for `lara`.
pub fn run_eval(
    config: &ExperimentConfig,
    kind: PolicyKind,
    checkpoint: Option<&Path>,
    seed: Option<u64>,
    overwrite: bool,
) -> Result<LatencyReport> {
    config.validate()?;
    let params = config.system_params();
    let policy = match kind {
        PolicyKind::Lara => {
            let path = checkpoint.ok_or_else(|| Error::MissingArtifact(PathBuf::from("<checkpoint>")))?;
            Policy::Lara(Box::new(Checkpoint::load(path)?.agent))
        }
        PolicyKind::Fra => Policy::Fra(config.baselines.fra.action()),
        PolicyKind::Rra => Policy::Rra,
        PolicyKind::Oracle => Policy::Oracle {
            resolution: config.baselines.oracle_resolution,
        },
    };
    let out = &config.run.output_dir;
    let path = out.join(eval_file_name(kind, seed));
    guard(&path, overwrite)?;
    let slots = eval_slots(&params, &config.env, config.run.eval_seed, config.run.eval_slots);
    let report = evaluate(&policy, &slots, &params, config.run.eval_seed, seed)?;
    write_rows(&path, &report.records)?;
    refresh_comparison(out)?;
    Ok(report)
}

/// Evaluates FRA, RRA, the oracle and every seed's final LARA checkpoint on
/// the same slots.
pub fn run_compare(config: &ExperimentConfig, overwrite: bool) -> Result<Vec<LatencyReport>> {
    let mut reports = Vec::new();
    for kind in [PolicyKind::Fra, PolicyKind::Rra, PolicyKind::Oracle] {
        reports.push(run_eval(config, kind, None, None, overwrite)?);
    }
    for &seed in &config.run.seeds {
        let ckpt = seed_dir(&config.run.output_dir, seed).join(FINAL_CHECKPOINT);
        reports.push(run_eval(config, PolicyKind::Lara, Some(&ckpt), Some(seed), overwrite)?);
    }
    Ok(reports)
}

/// Rebuilds `comparison.csv` as the join of all `eval_*.csv` files, in
/// file-name order. The file is a derived index and is always regenerated.
pub fn refresh_comparison(out: &Path) -> Result<Vec<ComparisonRow>> {
    let mut files: Vec<(String, PathBuf)> = fs::read_dir(out)
        .map_err(|e| Error::io(out, e))?
        .filter_map(|entry| entry.ok())
        .filter_map(|entry| {
            let name = entry.file_name().into_string().ok()?;
            (name.starts_with("eval_") && name.ends_with(".csv")).then(|| (name, entry.path()))
        })
        .collect();
    files.sort();
    let mut rows = Vec::with_capacity(files.len());
    for (name, path) in files {
        let stem = &name["eval_".len()..name.len() - ".csv".len()];
        let (policy, seed) = match stem.split_once("_seed") {
            Some((p, s)) => (p, s.parse().ok()),
            None => (stem, None),
        };
        let records: Vec<SlotRecord> = read_rows(&path)?;
        rows.push(ComparisonRow::from(&LatencyReport::from_records(policy, seed, records)));
    }
    write_rows(&out.join(COMPARISON), &rows)?;
    Ok(rows)
}
