use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::warn;

use essay_core::model::EnsembleMode;
use essay_core::pipeline::{
    cmd_build_index, cmd_extract, cmd_score, cmd_train, cmd_whitelist, RunConfig, WhitelistCommand,
};
use essay_core::Error;

/// Automated scoring of nonnative English essays.
#[derive(Debug, Parser)]
#[command(name = "essay-score", version)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// TOML run configuration
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Overrides the configured seed
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Skip degenerate essays with a warning instead of failing
    #[arg(long, global = true)]
    lenient: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write one feature row per essay plus a cheat-report sidecar
    Extract {
        /// Corpus file (CSV or JSONL); defaults to paths.corpus
        #[arg(long)]
        corpus: Option<PathBuf>,
        /// Feature CSV to write
        #[arg(long)]
        out: PathBuf,
    },
    /// Split, select features, train an ensemble and report correlations
    Train {
        #[arg(long)]
        features: PathBuf,
        /// Defaults to paths.corpus
        #[arg(long)]
        corpus: Option<PathBuf>,
        /// Model file to write; defaults to paths.model
        #[arg(long)]
        model: Option<PathBuf>,
        /// random_forest, bagging or random_subspace
        #[arg(long)]
        mode: Option<EnsembleMode>,
        /// Features sampled per split (forest) or per tree (subspace)
        #[arg(long)]
        m: Option<usize>,
        #[arg(long)]
        trees: Option<usize>,
        /// Also write the report JSON here
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Score one essay and print a JSON report
    Score {
        /// Defaults to paths.model
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        topic: String,
        /// Essay text file; reads stdin when absent or `-`
        essay: Option<PathBuf>,
    },
    /// Review tokens proposed for the spelling whitelist
    Whitelist {
        /// Defaults to paths.whitelist
        #[arg(long)]
        store: Option<PathBuf>,
        #[command(subcommand)]
        action: WhitelistAction,
    },
    /// Build the semantic index from a corpus
    BuildIndex {
        /// Defaults to paths.corpus
        #[arg(long)]
        corpus: Option<PathBuf>,
        /// Defaults to paths.index
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
enum WhitelistAction {
    ListPending,
    Accept { token: String },
    Reject { token: String },
    Stats,
}

fn required(flag: Option<PathBuf>, fallback: &Option<PathBuf>, name: &str) -> Result<PathBuf, Error> {
    flag.or_else(|| fallback.clone())
        .ok_or_else(|| Error::Config(format!("no {name} given: pass --{name} or set paths.{name}")))
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<(), Error> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn read_essay(path: Option<&Path>) -> Result<String, Error> {
    let mut text = String::new();
    match path {
        Some(p) if p != Path::new("-") => {
            text = std::fs::read_to_string(p).map_err(|e| Error::Io {
                path: p.to_path_buf(),
                source: e,
            })?
        }
        _ => {
            std::io::stdin().read_to_string(&mut text).map_err(|e| Error::Io {
                path: "<stdin>".into(),
                source: e,
            })?;
        }
    }
    Ok(text)
}

fn run(cli: Cli) -> Result<(), Error> {
    let mut cfg = match &cli.common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.common.seed {
        cfg.seed = seed;
    }
    cfg.lenient |= cli.common.lenient;
    match cli.command {
        Command::Extract { corpus, out } => {
            let corpus = required(corpus, &cfg.paths.corpus, "corpus")?;
            let summary = cmd_extract(&cfg, &corpus, &out)?;
            for id in &summary.skipped {
                warn!("skipped `{id}`");
            }
            print_json(&summary)
        }
        Command::Train {
            features,
            corpus,
            model,
            mode,
            m,
            trees,
            report,
        } => {
            if let Some(mode) = mode {
                cfg.ensemble.mode = mode;
            }
            if m.is_some() {
                cfg.ensemble.m = m;
            }
            if let Some(trees) = trees {
                cfg.ensemble.trees = trees;
            }
            cfg.validate()?;
            let corpus = required(corpus, &cfg.paths.corpus, "corpus")?;
            let model = required(model, &cfg.paths.model, "model")?;
            let r = cmd_train(&cfg, &features, &corpus, &model)?;
            if let Some(path) = report {
                let text = serde_json::to_string_pretty(&r)?;
                std::fs::write(&path, text + "\n").map_err(|e| Error::Io { path, source: e })?;
            }
            print_json(&r)
        }
        Command::Score { model, topic, essay } => {
            let model = required(model, &cfg.paths.model, "model")?;
            let text = read_essay(essay.as_deref())?;
            print_json(&cmd_score(&cfg, &model, &text, &topic)?)
        }
        Command::Whitelist { store, action } => {
            let store = required(store, &cfg.paths.whitelist, "whitelist")?;
            let command = match action {
                WhitelistAction::ListPending => WhitelistCommand::ListPending,
                WhitelistAction::Accept { token } => WhitelistCommand::Accept(token),
                WhitelistAction::Reject { token } => WhitelistCommand::Reject(token),
                WhitelistAction::Stats => WhitelistCommand::Stats,
            };
            print!("{}", cmd_whitelist(&store, cfg.whitelist.threshold, &command)?);
            Ok(())
        }
        Command::BuildIndex { corpus, out } => {
            let corpus = required(corpus, &cfg.paths.corpus, "corpus")?;
            let out = required(out, &cfg.paths.index, "index")?;
            print_json(&cmd_build_index(&cfg, &corpus, &out)?)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => {
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("invalid arguments");
            eprintln!("error[E_USAGE]: {}", first.trim_start_matches("error: "));
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.code());
            ExitCode::FAILURE
        }
    }
}
