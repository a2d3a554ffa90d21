use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use gtcnn::experiments::{
    run_source_localization, run_spectral_dump, run_stability_sweep, write_dataset, ExperimentConfig, Task,
};

#[derive(Parser)]
#[command(name = "gtcnn", version, about = "Graph-time convolutional network experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the source-localization dataset of every configured seed.
    Gen(Common),
    /// Train every configured model family on every seed.
    Train(Common),
    /// Perturb the spatial graph of a trained checkpoint and check the stability bound.
    Stability(Common),
    /// Dump normalized joint frequency responses of a trained checkpoint.
    Spectral(Common),
}

#[derive(Args)]
struct Common {
    /// Experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory, created if missing.
    #[arg(long)]
    out: PathBuf,
    /// Overrides the config's base seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; only single-threaded execution is supported.
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

impl Common {
    fn load(&self, expected: Option<Task>) -> anyhow::Result<ExperimentConfig> {
        if self.threads != 1 {
            bail!("--threads {} is not supported, run seeds as separate processes instead", self.threads);
        }
        let mut cfg = ExperimentConfig::load(&self.config)
            .with_context(|| format!("loading {}", self.config.display()))?;
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        cfg.validate()?;
        if let Some(task) = expected {
            if cfg.task != task {
                bail!("config task {} does not match this subcommand (expected {task})", cfg.task);
            }
        }
        Ok(cfg)
    }
}

fn gen(args: &Common) -> anyhow::Result<()> {
    let cfg = args.load(None)?;
    for &seed in &cfg.seeds {
        let dir = args.out.join(format!("seed{seed}"));
        let data = write_dataset(&cfg, seed, &dir)?;
        println!("{}: {} samples", dir.display(), data.samples.len());
    }
    Ok(())
}

fn train(args: &Common) -> anyhow::Result<()> {
    let cfg = args.load(Some(Task::SourceLocalization))?;
    write_config(&cfg, &args.out)?;
    let results = run_source_localization(&cfg, &args.out)?;
    for s in &results.summary {
        println!(
            "{:<12} {:.4} ± {:.4} ({} runs, {} failed)",
            s.model, s.mean_accuracy, s.std_accuracy, s.runs, s.failed
        );
    }
    Ok(())
}

fn stability(args: &Common) -> anyhow::Result<()> {
    let cfg = args.load(Some(Task::StabilitySweep))?;
    write_config(&cfg, &args.out)?;
    let results = run_stability_sweep(&cfg, &args.out)?;
    let violations = results.reports.iter().filter(|r| !r.holds()).count();
    println!("{} report rows, {} bound violations", results.reports.len(), violations);
    Ok(())
}

fn spectral(args: &Common) -> anyhow::Result<()> {
    let cfg = args.load(Some(Task::SpectralDump))?;
    let dump = run_spectral_dump(&cfg, &args.out)?;
    println!("{} grid rows, {} degenerate filters", dump.rows.len(), dump.degenerate.len());
    Ok(())
}

fn write_config(cfg: &ExperimentConfig, out: &Path) -> anyhow::Result<()> {
    std::fs::create_dir_all(out)?;
    std::fs::write(out.join("config.json"), cfg.to_json()?)?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Gen(a) => gen(a),
        Command::Train(a) => train(a),
        Command::Stability(a) => stability(a),
        Command::Spectral(a) => spectral(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let line = format!("{e:#}").replace('\n', " ");
            eprintln!("gtcnn: {line}");
            ExitCode::FAILURE
        }
    }
}
