//! Figure-ready tables joined across seeds.
//!
//! * `plot_reward.csv`: `episode,return_mean,return_stderr`
//! * `plot_latency.csv`: per-user latency against episode, mean and stderr
//! * `plot_policies.csv`: mean latency of each policy across its rows of
//!   `comparison.csv` (written only when that file exists)
//!
//! The standard error is the sample standard deviation over seeds divided by
//! the square root of the seed count, and zero for a single seed.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::pipeline::{guard, read_rows, write_rows, ComparisonRow, RewardRow, COMPARISON, REWARD_CURVE};
use crate::error::{Error, Result};

pub const PLOT_REWARD: &str = "plot_reward.csv";
pub const PLOT_LATENCY: &str = "plot_latency.csv";
pub const PLOT_POLICIES: &str = "plot_policies.csv";

/// Mean and standard error of `xs`.
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RewardPlotRow {
    pub episode: usize,
    pub return_mean: f64,
    pub return_stderr: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LatencyPlotRow {
    pub episode: usize,
    pub lat_comp_mean: f64,
    pub lat_comp_stderr: f64,
    pub lat_aigc_mean: f64,
    pub lat_aigc_stderr: f64,
    pub lat_ve_mean: f64,
    pub lat_ve_stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolicyPlotRow {
    pub policy: String,
    pub runs: usize,
    pub lat_comp_mean: f64,
    pub lat_comp_stderr: f64,
    pub lat_aigc_mean: f64,
    pub lat_aigc_stderr: f64,
    pub lat_ve_mean: f64,
    pub lat_ve_stderr: f64,
    pub total_mean: f64,
    pub total_stderr: f64,
}

/// What [`emit_plots_csv`] wrote.
#[derive(Debug, Clone, PartialEq)]
pub struct PlotTables {
    pub seeds: Vec<u64>,
    pub reward: Vec<RewardPlotRow>,
    pub latency: Vec<LatencyPlotRow>,
    pub policies: Option<Vec<PolicyPlotRow>>,
}

/// Seed directories (`seed_<s>`) holding a reward curve, in seed order.
pub fn trained_seeds(out: &Path) -> Result<Vec<(u64, PathBuf)>> {
    let mut seeds: Vec<(u64, PathBuf)> = fs::read_dir(out)
        .map_err(|e| Error::io(out, e))?
        .filter_map(|entry| entry.ok())
        .filter_map(|entry| {
            let name = entry.file_name().into_string().ok()?;
            let seed = name.strip_prefix("seed_")?.parse().ok()?;
            let curve = entry.path().join(REWARD_CURVE);
            curve.exists().then_some((seed, curve))
        })
        .collect();
    seeds.sort();
    Ok(seeds)
}

pub fn reward_tables(curves: &[Vec<RewardRow>]) -> Result<(Vec<RewardPlotRow>, Vec<LatencyPlotRow>)> {
    let len = curves.first().map_or(0, Vec::len);
    if let Some(bad) = curves.iter().find(|c| c.len() != len) {
        return Err(Error::Dimension {
            context: "reward curve rows",
            expected: len,
            actual: bad.len(),
        });
    }
    let mut reward = Vec::with_capacity(len);
    let mut latency = Vec::with_capacity(len);
    for i in 0..len {
        let column = |f: fn(&RewardRow) -> f64| mean_stderr(&curves.iter().map(|c| f(&c[i])).collect::<Vec<_>>());
        let episode = curves[0][i].episode;
        let (return_mean, return_stderr) = column(|r| r.episode_return);
        let (lat_comp_mean, lat_comp_stderr) = column(|r| r.lat_comp);
        let (lat_aigc_mean, lat_aigc_stderr) = column(|r| r.lat_aigc);
        let (lat_ve_mean, lat_ve_stderr) = column(|r| r.lat_ve);
        reward.push(RewardPlotRow {
            episode,
            return_mean,
            return_stderr,
        });
        latency.push(LatencyPlotRow {
            episode,
            lat_comp_mean,
            lat_comp_stderr,
            lat_aigc_mean,
            lat_aigc_stderr,
            lat_ve_mean,
            lat_ve_stderr,
        });
    }
    Ok((reward, latency))
}

/// Groups comparison rows by policy, keeping first-appearance order.
pub fn policy_table(rows: &[ComparisonRow]) -> Vec<PolicyPlotRow> {
    let mut order: Vec<&str> = Vec::new();
    for r in rows {
        if !order.contains(&r.policy.as_str()) {
            order.push(&r.policy);
        }
    }
    order
        .into_iter()
        .map(|policy| {
            let group: Vec<&ComparisonRow> = rows.iter().filter(|r| r.policy == policy).collect();
            let column = |f: fn(&ComparisonRow) -> f64| mean_stderr(&group.iter().map(|r| f(r)).collect::<Vec<_>>());
            let (lat_comp_mean, lat_comp_stderr) = column(|r| r.lat_comp);
            let (lat_aigc_mean, lat_aigc_stderr) = column(|r| r.lat_aigc);
            let (lat_ve_mean, lat_ve_stderr) = column(|r| r.lat_ve);
            let (total_mean, total_stderr) = column(|r| r.total);
            PolicyPlotRow {
                policy: policy.to_owned(),
                runs: group.len(),
                lat_comp_mean,
                lat_comp_stderr,
                lat_aigc_mean,
                lat_aigc_stderr,
                lat_ve_mean,
                lat_ve_stderr,
                total_mean,
                total_stderr,
            }
        })
        .collect()
}

/// Reads every seed's reward curve (and `comparison.csv` if present) under
/// `out` and writes the joined tables next to them.
pub fn emit_plots_csv(out: &Path, overwrite: bool) -> Result<PlotTables> {
    if !out.is_dir() {
        return Err(Error::MissingArtifact(out.to_path_buf()));
    }
    let seeds = trained_seeds(out)?;
    if seeds.is_empty() {
        return Err(Error::MissingArtifact(out.join("seed_*").join(REWARD_CURVE)));
    }
    let comparison = out.join(COMPARISON);
    let targets = [PLOT_REWARD, PLOT_LATENCY, PLOT_POLICIES].map(|f| out.join(f));
    for t in &targets {
        guard(t, overwrite)?;
    }

    let curves = seeds
        .iter()
        .map(|(_, path)| read_rows::<RewardRow>(path))
        .collect::<Result<Vec<_>>>()?;
    let (reward, latency) = reward_tables(&curves)?;
    write_rows(&targets[0], &reward)?;
    write_rows(&targets[1], &latency)?;

    let policies = if comparison.exists() {
        let table = policy_table(&read_rows(&comparison)?);
        write_rows(&targets[2], &table)?;
        Some(table)
    } else {
        None
    };
    Ok(PlotTables {
        seeds: seeds.into_iter().map(|(s, _)| s).collect(),
        reward,
        latency,
        policies,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stderr_matches_hand_computation() {
        // values 1, 2, 4: mean 7/3, sample variance 7/3, stderr sqrt(7/9)
        let (m, s) = mean_stderr(&[1.0, 2.0, 4.0]);
        assert!((m - 7.0 / 3.0).abs() < 1e-15);
        assert!((s - (7.0f64 / 9.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn single_seed_has_zero_stderr() {
        assert_eq!(mean_stderr(&[3.5]), (3.5, 0.0));
    }

    fn row(episode: usize, r: f64) -> RewardRow {
        RewardRow {
            episode,
            episode_return: r,
            lat_comp: r,
            lat_aigc: 2.0 * r,
            lat_ve: 3.0 * r,
        }
    }

    #[test]
    fn toy_table_joins_by_episode() {
        let curves = vec![
            vec![row(1, 1.0), row(2, 0.0)],
            vec![row(1, 2.0), row(2, 0.0)],
            vec![row(1, 4.0), row(2, 0.0)],
        ];
        let (reward, latency) = reward_tables(&curves).unwrap();
        assert_eq!(reward.len(), 2);
        assert!((reward[0].return_stderr - (7.0f64 / 9.0).sqrt()).abs() < 1e-15);
        assert_eq!(reward[1].return_stderr, 0.0);
        assert!((latency[0].lat_ve_mean - 7.0).abs() < 1e-15);
    }

    #[test]
    fn ragged_curves_are_rejected() {
        let curves = vec![vec![row(1, 1.0)], vec![row(1, 1.0), row(2, 1.0)]];
        assert!(matches!(reward_tables(&curves), Err(Error::Dimension { .. })));
    }

    #[test]
    fn policy_table_groups_seeds() {
        let mk = |policy: &str, seed, total| ComparisonRow {
            policy: policy.into(),
            seed,
            lat_comp: total / 3.0,
            lat_aigc: total / 3.0,
            lat_ve: total / 3.0,
            total,
        };
        let rows = vec![mk("fra", None, 3.0), mk("lara", Some(0), 2.0), mk("lara", Some(1), 2.2)];
        let t = policy_table(&rows);
        assert_eq!(t.len(), 2);
        assert_eq!((t[0].policy.as_str(), t[0].runs, t[0].total_stderr), ("fra", 1, 0.0));
        assert_eq!(t[1].runs, 2);
        assert!((t[1].total_mean - 2.1).abs() < 1e-12);
    }

    #[test]
    fn missing_run_directory_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let err = emit_plots_csv(&dir.path().join("nope"), false).unwrap_err();
        assert!(matches!(err, Error::MissingArtifact(_)));
        let err = emit_plots_csv(dir.path(), false).unwrap_err();
        assert!(matches!(err, Error::MissingArtifact(_)));
    }
}
