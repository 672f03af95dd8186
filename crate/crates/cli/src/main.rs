use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use megc::harness::{
    emit_plots_csv, parse_config, run_compare, run_eval, run_training, ExperimentConfig, LatencyReport, PolicyKind,
};

/// Train and evaluate the multi-user edge resource allocator.
#[derive(Debug, Parser)]
#[command(name = "megc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train one agent per seed and write reward curves and checkpoints.
    Train(RunArgs),
    /// Evaluate a single policy on the shared evaluation slots.
    Eval {
        #[command(flatten)]
        run: RunArgs,
        /// One of lara, fra, rra, oracle.
        #[arg(long)]
        policy: String,
        /// Agent checkpoint; defaults to the seed's final checkpoint.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Evaluate every baseline and every seed's trained agent.
    Compare(RunArgs),
    /// Join per-seed artifacts into mean and stderr tables.
    Plots {
        #[command(flatten)]
        run: RunArgs,
    },
}

#[derive(Debug, Args)]
struct RunArgs {
    /// TOML config; the built-in defaults are used when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Seeds to run, replacing the config's list. Repeatable.
    #[arg(long)]
    seed: Vec<u64>,
    #[arg(long)]
    episodes: Option<usize>,
    /// Output directory, replacing `run.output_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Replace existing artifacts instead of refusing.
    #[arg(long)]
    overwrite: bool,
}

impl RunArgs {
    fn load(&self) -> megc::Result<ExperimentConfig> {
        let mut config = match &self.config {
            Some(path) => parse_config(path)?,
            None => ExperimentConfig::paper_defaults(),
        };
        if !self.seed.is_empty() {
            config.run.seeds = self.seed.clone();
        }
        if let Some(n) = self.episodes {
            config.run.episodes = n;
            config.agent.episodes = n;
        }
        if let Some(out) = &self.out {
            config.run.output_dir = out.clone();
        }
        config.validate()?;
        Ok(config)
    }
}

fn print_report(r: &LatencyReport) {
    let seed = r.seed.map(|s| format!(" seed {s}")).unwrap_or_default();
    println!(
        "{}{seed}: comp {:.6} s, aigc {:.6} s, ve {:.6} s, total {:.6} s",
        r.policy, r.lat_comp, r.lat_aigc, r.lat_ve, r.total
    );
}

fn run(command: Command) -> megc::Result<()> {
    match command {
        Command::Train(args) => {
            let config = args.load()?;
            for (seed, log) in run_training(&config, args.overwrite)? {
                let n = log.episodes.len();
                let tail = (n / 10).max(1);
                println!(
                    "seed {seed}: {n} episodes, mean return over last {tail}: {:.4}",
                    log.mean_return(n - tail, n)
                );
            }
            println!("artifacts in {}", config.run.output_dir.display());
        }
        Command::Eval {
            run,
            policy,
            checkpoint,
        } => {
            let kind: PolicyKind = policy.parse()?;
            let config = run.load()?;
            let seed = (kind == PolicyKind::Lara).then(|| config.run.seeds[0]);
            let checkpoint = match (kind, checkpoint) {
                (PolicyKind::Lara, None) => Some(
                    megc::harness::pipeline::seed_dir(&config.run.output_dir, config.run.seeds[0])
                        .join(megc::harness::pipeline::FINAL_CHECKPOINT),
                ),
                (_, c) => c,
            };
            print_report(&run_eval(&config, kind, checkpoint.as_deref(), seed, run.overwrite)?);
        }
        Command::Compare(args) => {
            let config = args.load()?;
            for r in run_compare(&config, args.overwrite)? {
                print_report(&r);
            }
        }
        Command::Plots { run } => {
            let config = run.load()?;
            let tables = emit_plots_csv(&config.run.output_dir, run.overwrite)?;
            println!(
                "joined {} seed(s), {} episodes; policy table {}",
                tables.seeds.len(),
                tables.reward.len(),
                if tables.policies.is_some() { "written" } else { "skipped (no comparison.csv)" }
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
