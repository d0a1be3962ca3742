use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fairwipe_bench::experiment::load_source;
use fairwipe_bench::{
    emit_results, load_dataset, run_experiment, run_on_dataset, BenchError, DatasetManifest,
    DatasetStats, ExperimentConfig, Format, RowKind,
};
use fairwipe_core::fairness::alpha_diagnostics;

#[derive(Debug, Parser)]
#[command(name = "fairwipe", version, about = "Certified bias unlearning benchmarks for linear graph models")]
struct Cli {
    /// Output file; stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, default_value = "csv")]
    format: Format,
    /// Worker threads for running seeds; all cores when omitted.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one experiment configuration.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Load a dataset and print its statistics.
    Stats {
        #[arg(long)]
        manifest: PathBuf,
    },
    /// Run a configuration once per value of one parameter.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        param: String,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = e.downcast_ref::<BenchError>().map_or(1, BenchError::exit_code);
            ExitCode::from(code as u8)
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| BenchError::Config(e.to_string()))?;
    }
    match cli.command {
        Command::Run { config } => {
            let config = ExperimentConfig::from_path(&config)?;
            let rows = run_experiment(&config)?;
            emit_results(&rows, cli.format, cli.out.as_deref())?;
        }
        Command::Stats { manifest } => {
            let manifest = DatasetManifest::from_path(&manifest)?;
            let dataset = load_dataset(&manifest)?;
            let alpha = alpha_diagnostics(&dataset).ok();
            let report = serde_json::json!({
                "name": manifest.name,
                "stats": DatasetStats::of(&dataset),
                "alpha1": alpha.map(|a| a.0),
                "alpha2": alpha.map(|a| a.1),
            });
            let text = serde_json::to_string_pretty(&report)?;
            match &cli.out {
                Some(p) => std::fs::write(p, text + "\n").map_err(|e| BenchError::Io { path: p.clone(), source: e })?,
                None => println!("{text}"),
            }
        }
        Command::Sweep { config, param, values } => {
            let base = ExperimentConfig::from_path(&config)?;
            let (name, dataset) = load_source(&base)?;
            let mut rows = Vec::new();
            let mut best: Option<(f64, String)> = None;
            for value in &values {
                let mut cfg = base.clone();
                cfg.set_param(&param, value)?;
                let setting = format!("{param}={value}");
                let batch = run_on_dataset(&cfg, &name, &dataset, &setting)?;
                if let Some(r) = batch.iter().find(|r| r.row == RowKind::Mean && r.arm == "pretrained") {
                    if best.as_ref().is_none_or(|(acc, _)| r.val_accuracy > *acc) {
                        best = Some((r.val_accuracy, setting.clone()));
                    }
                }
                rows.extend(batch);
            }
            if let Some((acc, setting)) = best {
                log::info!("best validation accuracy {acc:.4} at {setting}");
            }
            emit_results(&rows, cli.format, cli.out.as_deref())?;
        }
    }
    Ok(())
}
