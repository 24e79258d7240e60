use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use ftwnb::data::{default_schema, load_schema};
use ftwnb::experiment::{run_named, ExperimentConfig};
use ftwnb::features::{attribute_weights, correlation_matrix, relevance, DEFAULT_WEIGHT_FLOOR};
use ftwnb::{
    confusion, fit_bins, ftwnb_train, generate_samples, load_dataset, summary_metrics,
    ClassLabel, FtWnbConfig, FtWnbModel, ScenarioConfig, WeightMode,
};

/// LoS/NLoS identification with fine-tuned weighted naive Bayes.
#[derive(Parser, Debug)]
#[command(name = "ftwnb", version)]
struct Cli {
    /// Base seed. Alone it selects a single seed; with --seeds it is the first.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Number of consecutive seeds to aggregate over.
    #[arg(long, global = true)]
    seeds: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Experiment config (TOML, JSON, or a previous report.json).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// File listing feature names, one per line, overriding the default schema.
    #[arg(long, global = true)]
    schema: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a labeled synthetic CSV.
    Synth {
        /// Built-in scenario name (studio, room) or a scenario TOML file.
        #[arg(long, default_value = "studio")]
        scenario: String,
        #[arg(long, default_value_t = 1000)]
        n_los: usize,
        #[arg(long, default_value_t = 1000)]
        n_nlos: usize,
        /// Output file name inside --out.
        #[arg(long, default_value = "samples.csv")]
        file: String,
    },
    /// Write the feature correlation matrix and mutual-information table.
    Analyze {
        data: PathBuf,
        #[arg(long, default_value_t = 10)]
        bins: usize,
    },
    /// Train a model on a CSV and save it.
    Train {
        data: PathBuf,
        #[command(flatten)]
        model: ModelArgs,
        /// Model file; defaults to model.json inside --out.
        #[arg(long)]
        model_out: Option<PathBuf>,
    },
    /// Score a CSV with a saved model.
    Predict {
        model: PathBuf,
        data: PathBuf,
        /// Output CSV; defaults to predictions.csv inside --out.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// FT-WNB, WNB, NB and the mRMR baselines on one split per seed.
    Compare,
    /// Accuracy across NLoS:LoS ratios.
    SweepRatio,
    /// FT-WNB accuracy across fine-tuning caps.
    SweepFinetune,
    /// Train on one scenario, test on another.
    CrossScenario,
    /// Accuracy and runtime for feature subsets.
    FeatureTradeoff,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Weights {
    Mi,
    Unit,
}

#[derive(Args, Debug)]
struct ModelArgs {
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    #[arg(long, default_value_t = 0.1)]
    beta: f64,
    #[arg(long, default_value_t = 10)]
    bins: usize,
    #[arg(long, default_value_t = 1.0)]
    laplace: f64,
    #[arg(long, default_value_t = 40)]
    finetune_cap: usize,
    #[arg(long, default_value_t = 50)]
    epochs: usize,
    #[arg(long, value_enum, default_value = "mi")]
    weights: Weights,
}

impl ModelArgs {
    fn config(&self) -> FtWnbConfig {
        FtWnbConfig {
            n_bins: self.bins,
            laplace_alpha: self.laplace,
            alpha: self.alpha,
            beta: self.beta,
            finetune_cap: self.finetune_cap,
            max_epochs: self.epochs,
            weights: match self.weights {
                Weights::Mi => WeightMode::Mi,
                Weights::Unit => WeightMode::Unit,
            },
            ..FtWnbConfig::default()
        }
    }
}

fn schema(cli: &Cli) -> Result<Vec<String>> {
    match &cli.schema {
        Some(p) => Ok(load_schema(p)?),
        None => Ok(default_schema()),
    }
}

fn out_file(cli: &Cli, name: &str) -> Result<PathBuf> {
    fs::create_dir_all(&cli.out)
        .with_context(|| format!("creating output directory {}", cli.out.display()))?;
    Ok(cli.out.join(name))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn experiment_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if cli.schema.is_some() {
        cfg.schema = schema(cli)?;
    }
    match (cli.seed, cli.seeds) {
        (start, Some(n)) => {
            let start = start.unwrap_or(0);
            cfg.seeds = (start..start + n).collect();
        }
        (Some(s), None) => cfg.seeds = vec![s],
        (None, None) => {}
    }
    Ok(cfg)
}

fn run_experiment(cli: &Cli, name: &str) -> Result<()> {
    let cfg = experiment_config(cli)?;
    let output = run_named(name, &cfg).with_context(|| format!("{name} failed"))?;
    write(&out_file(cli, "report.json")?, &output.report.to_json()?)?;
    for (file, body) in &output.tables {
        write(&out_file(cli, file)?, body)?;
    }
    for c in &output.report.conditions {
        println!(
            "{:<20} {:<9} accuracy mean {:.4} median {:.4}  nlos {:.4}",
            c.name,
            c.algorithm.name(),
            c.aggregate.accuracy.mean,
            c.aggregate.accuracy.median,
            c.aggregate.nlos_correct_rate.mean
        );
    }
    println!("wrote {}", cli.out.join("report.json").display());
    Ok(())
}

fn synth(cli: &Cli, scenario: &str, n_los: usize, n_nlos: usize, file: &str) -> Result<()> {
    let mut sc = ScenarioConfig::resolve(scenario)?;
    if cli.schema.is_some() {
        sc.schema = schema(cli)?;
    }
    let data = generate_samples(&sc.build()?, n_los, n_nlos, cli.seed.unwrap_or(0))?;
    let path = out_file(cli, file)?;
    data.save(&path)?;
    println!("wrote {} samples to {}", data.len(), path.display());
    Ok(())
}

fn analyze(cli: &Cli, data: &Path, bins: usize) -> Result<()> {
    let d = load_dataset(data, &schema(cli)?)?;
    let corr = correlation_matrix(&d);
    let mut text = format!("feature,{}\n", corr.names.join(","));
    for (name, row) in corr.names.iter().zip(&corr.values) {
        let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        text.push_str(&format!("{name},{}\n", cells.join(",")));
    }
    write(&out_file(cli, "correlation.csv")?, &text)?;

    let binned = fit_bins(&d, bins)?.transform(&d)?;
    let mi = relevance(&binned)?;
    let weights = attribute_weights(&binned, DEFAULT_WEIGHT_FLOOR)?;
    let mut text = String::from("feature,mutual_information,weight\n");
    for ((name, m), w) in d.schema().iter().zip(&mi).zip(weights.as_slice()) {
        text.push_str(&format!("{name},{m},{w}\n"));
    }
    write(&out_file(cli, "mutual_information.csv")?, &text)?;
    println!("wrote correlation.csv and mutual_information.csv to {}", cli.out.display());
    Ok(())
}

fn train(cli: &Cli, data: &Path, args: &ModelArgs, model_out: Option<&Path>) -> Result<()> {
    let d = load_dataset(data, &schema(cli)?)?;
    let model = ftwnb_train(&d, &args.config())?;
    let path = match model_out {
        Some(p) => p.to_path_buf(),
        None => out_file(cli, "model.json")?,
    };
    model.save(&path)?;
    let pred: Vec<ClassLabel> = model.predict_dataset(&d)?.iter().map(|p| p.label).collect();
    let rates = summary_metrics(&confusion(&d.labels(), &pred)?)?;
    println!(
        "trained on {} samples, {} fine-tuning updates over {} epochs, training accuracy {:.4}",
        d.len(),
        model.finetuned,
        model.epochs_run,
        rates.accuracy
    );
    println!("wrote {}", path.display());
    Ok(())
}

fn predict(cli: &Cli, model: &Path, data: &Path, output: Option<&Path>) -> Result<()> {
    let model = FtWnbModel::load(model)?;
    let d = load_dataset(data, &model.schema)?;
    let preds = model.predict_dataset(&d)?;
    let mut text = String::from("label,score\n");
    for p in &preds {
        text.push_str(&format!("{},{}\n", p.label.index(), p.score));
    }
    let path = match output {
        Some(p) => p.to_path_buf(),
        None => out_file(cli, "predictions.csv")?,
    };
    write(&path, &text)?;
    let truth = d.labels();
    let pred: Vec<ClassLabel> = preds.iter().map(|p| p.label).collect();
    if let Ok(rates) = confusion(&truth, &pred).and_then(|cm| summary_metrics(&cm)) {
        println!("accuracy {:.4} on {} samples", rates.accuracy, d.len());
    }
    println!("wrote {}", path.display());
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    if cli.seeds == Some(0) {
        bail!("--seeds must be at least 1");
    }
    match &cli.command {
        Command::Synth {
            scenario,
            n_los,
            n_nlos,
            file,
        } => synth(cli, scenario, *n_los, *n_nlos, file),
        Command::Analyze { data, bins } => analyze(cli, data, *bins),
        Command::Train {
            data,
            model,
            model_out,
        } => train(cli, data, model, model_out.as_deref()),
        Command::Predict {
            model,
            data,
            output,
        } => predict(cli, model, data, output.as_deref()),
        Command::Compare => run_experiment(cli, "compare"),
        Command::SweepRatio => run_experiment(cli, "sweep-ratio"),
        Command::SweepFinetune => run_experiment(cli, "sweep-finetune"),
        Command::CrossScenario => run_experiment(cli, "cross-scenario"),
        Command::FeatureTradeoff => run_experiment(cli, "feature-tradeoff"),
    }
}

/// Joins the error chain, skipping causes already spelled out by the
/// message wrapping them.
fn diagnostic(e: &anyhow::Error) -> String {
    let mut parts: Vec<String> = Vec::new();
    for cause in e.chain() {
        let msg = cause.to_string();
        if !parts.last().is_some_and(|prev| prev.ends_with(&msg)) {
            parts.push(msg);
        }
    }
    parts.join(": ")
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", diagnostic(&e));
            ExitCode::FAILURE
        }
    }
}
