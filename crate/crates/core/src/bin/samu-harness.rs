//! Learning-curve experiments and corpus conversion.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use samu::harness::{self, ExperimentConfig, ExperimentKind};
use samu::nlp;

#[derive(Parser)]
#[command(name = "samu-harness", version, about = "Samu learning-curve experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// The 7-sentence story read in a loop.
    Exp1(RunArgs),
    /// The 10-sentence introduction, optionally after pretraining.
    Exp2(RunArgs),
    /// A growing prefix of a long corpus.
    Incremental(RunArgs),
    /// Convert CoNLL-U dependency parses into the linkage format.
    Conllu2linkage {
        input: PathBuf,
        output: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Flat key=value config; defaults are used for missing keys.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// CSV destination; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the mental images of the last pass to <out>.imagery.txt
    /// (stderr without --out).
    #[arg(long)]
    dump_imagery: bool,
    /// Write the final LZW tree to <out>.lzw.txt (stderr without --out).
    #[arg(long)]
    dump_lzw: bool,
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::Exp1(args) => experiment(ExperimentKind::Story, args),
        Command::Exp2(args) => experiment(ExperimentKind::Intro, args),
        Command::Incremental(args) => experiment(ExperimentKind::Incremental, args),
        Command::Conllu2linkage { input, output } => {
            let text = fs::read_to_string(&input).with_context(|| format!("reading {}", input.display()))?;
            let records = nlp::conllu_to_records(&text, &input.display().to_string())?;
            nlp::write_linkage_file(&output, &records)?;
            eprintln!("{} sentences written to {}", records.len(), output.display());
            Ok(())
        }
    }
}

fn experiment(kind: ExperimentKind, args: RunArgs) -> Result<()> {
    let mut config = match &args.config {
        Some(path) => ExperimentConfig::load(path, kind)?,
        None => ExperimentConfig::defaults(kind),
    };
    if let Some(seed) = args.seed {
        config = config.with_seed(seed);
    }
    config.validate()?;

    let outcome = harness::run(kind, &config, args.dump_imagery)?;
    match &args.out {
        Some(path) => harness::emit_csv(&outcome.curve, path)?,
        None => std::io::stdout().write_all(harness::curve_csv(&outcome.curve).as_bytes())?,
    }
    if args.dump_imagery {
        let mut text = String::new();
        for (i, frame) in outcome.run.frames().iter().enumerate() {
            text.push_str(&format!("# last pass, step {}\n{frame}\n", i + 1));
        }
        dump(args.out.as_deref(), "imagery.txt", &text)?;
    }
    if args.dump_lzw {
        match outcome.run.learner.lzw_dump() {
            Some(text) => dump(args.out.as_deref(), "lzw.txt", &text)?,
            None => eprintln!("warning: narrowing is off, no LZW tree to dump"),
        }
    }
    if let Some(last) = outcome.curve.last() {
        eprintln!(
            "{} trials, last reward {}, ratio {:.4}, learned {}",
            outcome.curve.len(),
            last.reward,
            last.ratio,
            last.learned
        );
    }
    Ok(())
}

fn dump(out: Option<&Path>, suffix: &str, text: &str) -> Result<()> {
    match out {
        Some(path) => {
            let mut name = path.as_os_str().to_owned();
            name.push(format!(".{suffix}"));
            let target = PathBuf::from(name);
            fs::write(&target, text).with_context(|| format!("writing {}", target.display()))
        }
        None => {
            eprint!("{text}");
            Ok(())
        }
    }
}
