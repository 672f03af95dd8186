//! Experiment orchestration: config files, training and evaluation runs,
//! and the CSV artifacts they produce.

pub mod config;
pub mod eval;
pub mod pipeline;
pub mod plots;

pub use config::{parse_config, ExperimentConfig};
pub use eval::{eval_slots, evaluate, LatencyReport, Policy, PolicyKind, SlotRecord};
pub use pipeline::{run_compare, run_eval, run_training, train_seed, ComparisonRow, RewardRow};
pub use plots::{emit_plots_csv, mean_stderr, PlotTables};
