//! The caregiver-facing agent: a three-pane terminal on a TTY, a line-mode
//! REPL otherwise. The soul is saved on `___quit`, end of input and
//! SIGINT/SIGTERM/SIGHUP.

use std::fs;
use std::io::{self, IsTerminal};
use std::path::PathBuf;
use std::sync::atomic::AtomicBool;
use std::sync::Arc;

use anyhow::{Context, Result};
use clap::Parser;
use signal_hook::consts::{SIGHUP, SIGINT, SIGTERM};

use samu::agent::{apply_settings, AgentSession, SessionOptions};
use samu::tui;

#[derive(Parser)]
#[command(name = "samu", version, about = "Talk to Samu")]
struct Cli {
    /// The agent's name, shown in the prompt.
    #[arg(long, default_value = "Samu")]
    name: String,
    /// Soul file; defaults to <data-dir>/samu.soul.txt.
    #[arg(long)]
    soul: Option<PathBuf>,
    /// Directory for the soul and the conversation logs.
    #[arg(long, default_value = ".")]
    data_dir: PathBuf,
    /// Initial caregiver name.
    #[arg(long)]
    caregiver: Option<String>,
    /// Extra linkage files for the sentence lexicon (repeatable).
    #[arg(long)]
    lexicon: Vec<PathBuf>,
    /// key=value engine and imagery settings for a fresh soul.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Plain line-mode REPL even on a terminal.
    #[arg(long)]
    line_mode: bool,
    /// Steps between automatic saves (0 disables).
    #[arg(long)]
    autosave: Option<usize>,
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();

    fs::create_dir_all(&cli.data_dir).with_context(|| format!("creating {}", cli.data_dir.display()))?;
    let mut options = SessionOptions::new(&cli.name, &cli.data_dir);
    if let Some(path) = &cli.config {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        apply_settings(&mut options, &text, &path.display().to_string())?;
    }
    if let Some(soul) = cli.soul {
        options.soul_path = soul;
    }
    if let Some(caregiver) = cli.caregiver {
        options.caregiver = caregiver;
    }
    if let Some(n) = cli.autosave {
        options.autosave_every = n;
    }
    for path in &cli.lexicon {
        options.lexicon.add_file(path)?;
    }

    let terminate = Arc::new(AtomicBool::new(false));
    for sig in [SIGINT, SIGTERM, SIGHUP] {
        signal_hook::flag::register(sig, Arc::clone(&terminate))?;
    }

    let mut session = AgentSession::open(options)?;
    let interactive = io::stdin().is_terminal() && io::stdout().is_terminal();
    if interactive && !cli.line_mode {
        tui::run_tui(&mut session, terminate)?;
    } else {
        let mut out = io::stdout();
        tui::line_mode(&mut session, tui::stdin_inputs(terminate), &mut out, interactive)?;
    }
    Ok(())
}
