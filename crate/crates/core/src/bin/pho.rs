use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use pho_core::experiment::{
    emit_plots, emit_plots_from, write_comparison, write_json, Artifact, Experiment, ExperimentConfig, HarnessError,
};
use pho_core::SearchSpace;

/// Predictive hyperparameter optimisation: tune by extrapolating early
/// validation scores, and compare against equal-budget random search.
#[derive(Parser)]
#[command(name = "pho", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Inspect search spaces.
    #[command(subcommand)]
    Space(SpaceCommand),
    /// Train every configuration fully and report the final-metric pool.
    #[command(subcommand)]
    Pool(PoolCommand),
    /// Run a single tuner on one split.
    #[command(subcommand)]
    Tune(TuneCommand),
    /// Repeated PHO-versus-random-search trials with t-tests.
    Compare {
        #[command(flatten)]
        common: Common,
        /// Override the trial count from the config.
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Re-emit the figure CSVs from a JSON artifact written by another command.
    Plots {
        /// tune.json, pool.json or report.json.
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum SpaceCommand {
    /// Print every grid point as one JSON object per line.
    Enumerate { file: PathBuf },
}

#[derive(Subcommand)]
enum PoolCommand {
    Evaluate {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Subcommand)]
enum TuneCommand {
    Pho {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        m: Option<usize>,
        #[arg(long)]
        k: Option<usize>,
    },
    Random {
        #[command(flatten)]
        common: Common,
        /// Training budget in cost units.
        #[arg(long)]
        budget: f64,
    },
}

#[derive(Args)]
struct Common {
    /// Experiment config (JSON); defaults are used when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Base seed for every random stream.
    #[arg(long)]
    seed: Option<u64>,
    /// Trial index whose split is used (single-run commands only).
    #[arg(long, default_value_t = 0)]
    trial: usize,
    /// Output directory; overrides `output_dir` from the config.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn load(&self) -> Result<ExperimentConfig, HarnessError> {
        let mut config = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        if let Some(out) = &self.out {
            config.output_dir = out.clone();
        }
        Ok(config)
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
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
            eprintln!("error: {e:#}");
            let code = e.downcast_ref::<HarnessError>().map_or(3, HarnessError::exit_code);
            ExitCode::from(code as u8)
        }
    }
}

fn run(command: Command) -> anyhow::Result<()> {
    match command {
        Command::Space(SpaceCommand::Enumerate { file }) => {
            let space = SearchSpace::load(&file).map_err(HarnessError::from)?;
            for c in space.enumerate_grid() {
                println!("{}", serde_json::to_string(&c)?);
            }
        }
        Command::Pool(PoolCommand::Evaluate { common }) => {
            let exp = Experiment::new(common.load()?)?;
            let entries = exp.run_pool(common.trial)?;
            let dir = &exp.config.output_dir;
            let path = dir.join("pool.json");
            create_dir(dir)?;
            write_json(&path, &Artifact::Pool { entries: entries.clone() })?;
            emit_plots(dir, None, Some(&entries))?;
            if let (Some(lo), Some(hi)) = (entries.first(), entries.last()) {
                println!(
                    "{} configurations, final metric {:.4} to {:.4}",
                    entries.len(),
                    lo.final_metric,
                    hi.final_metric
                );
            }
            println!("wrote {}", path.display());
        }
        Command::Tune(TuneCommand::Pho { common, n, m, k }) => {
            let mut config = common.load()?;
            config.pho.n = n.unwrap_or(config.pho.n);
            config.pho.m = m.unwrap_or(config.pho.m);
            config.pho.k = k.unwrap_or(config.pho.k);
            let exp = Experiment::new(config)?;
            let (_, result) = exp.run_pho(common.trial)?;
            if let Some(p) = &result.predictor {
                println!(
                    "predictor: final = {:.4} × early + {:.4} (r = {:.3}, {} pilots){}",
                    p.slope,
                    p.intercept,
                    p.pearson_r,
                    p.sample_count,
                    if p.negative_slope { " [negative slope]" } else { "" }
                );
            }
            report_tune(&exp, result)?;
        }
        Command::Tune(TuneCommand::Random { common, budget }) => {
            let exp = Experiment::new(common.load()?)?;
            let (_, result) = exp.run_random(common.trial, budget)?;
            if result.overrun {
                println!("warning: the single affordable run exceeded the budget");
            }
            report_tune(&exp, result)?;
        }
        Command::Compare { common, trials } => {
            let mut config = common.load()?;
            if let Some(t) = trials {
                config.trials = t;
            }
            let exp = Experiment::new(config)?;
            let report = exp.run_comparison()?;
            let written = write_comparison(&exp.config.output_dir, &report)?;
            println!(
                "{} trials: PHO mean {:.4}, random search mean {:.4}, difference {:+.5}",
                report.rows.len(),
                report.pho_summary.mean,
                report.rs_summary.mean,
                report.mean_difference
            );
            for (name, test) in
                [("Welch", report.welch_t_test), ("paired", report.paired_t_test), ("pooled", report.pooled_t_test)]
            {
                if let Some(t) = test {
                    println!(
                        "{name} t-test: t = {:.3}, df = {:.1}, p = {:.4}",
                        t.t_statistic, t.degrees_of_freedom, t.p_value
                    );
                }
            }
            if report.trial_failures > 0 {
                println!("{} trials failed", report.trial_failures);
            }
            for p in written {
                println!("wrote {}", p.display());
            }
        }
        Command::Plots { input, out } => {
            let text =
                fs::read_to_string(&input).map_err(|e| HarnessError::Config(format!("{}: {e}", input.display())))?;
            let artifact = Artifact::from_json(&text)
                .map_err(|e| HarnessError::Config(format!("{}: not a pho artifact: {e}", input.display())))?;
            for p in emit_plots_from(&out, &artifact)? {
                println!("wrote {}", p.display());
            }
        }
    }
    Ok(())
}

fn report_tune(exp: &Experiment, result: pho_core::TuneResult) -> anyhow::Result<()> {
    let dir = &exp.config.output_dir;
    println!(
        "best configuration #{} {}: final metric {:.4}",
        result.best_configuration.index,
        serde_json::to_string(&result.best_configuration.assignments)?,
        result.best_final_metric
    );
    println!(
        "fully trained {}, partially trained {}, cost {} units",
        result.fully_trained.len(),
        result.partially_trained_only.len(),
        result.ledger.total_cost_units
    );
    create_dir(dir)?;
    let path = dir.join("tune.json");
    emit_plots(dir, Some(&result), None)?;
    write_json(&path, &Artifact::Tune { result })?;
    println!("wrote {}", path.display());
    Ok(())
}

fn create_dir(dir: &Path) -> anyhow::Result<()> {
    fs::create_dir_all(dir)
        .map_err(|e| HarnessError::Output { path: dir.display().to_string(), message: e.to_string() })
        .with_context(|| "creating the output directory")
}
