//! The caregiver-facing agent: a named learner that reads sentences typed by
//! its caregivers, predicts what comes next, logs every conversation as a
//! training file and keeps its soul on disk.
//!
//! Lines starting with `___` are commands for the agent itself:
//!
//! | command                      | effect                                          |
//! |------------------------------|-------------------------------------------------|
//! | `___next caregiver`          | the next line introduces a new caregiver        |
//! | `___save`                    | write the soul file and flush the log           |
//! | `___sleep <corpus> <passes>` | train on a sentence or linkage file             |
//! | `___stat`                    | engine counters                                 |
//! | `___quit`                    | save and leave                                  |

use std::fmt;
use std::fs::{self, File, OpenOptions};
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use crate::imagery::{ImageryConfig, MentalImage, StatementWindow};
use crate::nlp::{read_linkage_file, sentence_triplets, Lexicon};
use crate::qengine::{Engine, EngineConfig};
use crate::soul::{load_soul, save_soul, Soul};
use crate::triplet::{read_sentence_file, Triplet};
use crate::{Error, Result};

pub const COMMAND_PREFIX: &str = "___";
pub const DEFAULT_AUTOSAVE: usize = 1000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AgentState {
    Listen,
    Sleep,
}

impl fmt::Display for AgentState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AgentState::Listen => "listen",
            AgentState::Sleep => "sleep",
        })
    }
}

#[derive(Clone, Debug)]
pub struct SessionOptions {
    pub name: String,
    pub caregiver: String,
    pub soul_path: PathBuf,
    pub data_dir: PathBuf,
    /// Used only when no soul file exists yet.
    pub engine: EngineConfig,
    pub imagery: ImageryConfig,
    /// Steps between automatic soul saves; 0 disables them.
    pub autosave_every: usize,
    pub lexicon: Lexicon,
}

impl SessionOptions {
    pub fn new(name: &str, data_dir: &Path) -> Self {
        SessionOptions {
            name: name.to_owned(),
            caregiver: "Caregiver".to_owned(),
            soul_path: data_dir.join("samu.soul.txt"),
            data_dir: data_dir.to_owned(),
            engine: EngineConfig::default(),
            imagery: ImageryConfig::default(),
            autosave_every: DEFAULT_AUTOSAVE,
            lexicon: Lexicon::bundled(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum AgentResponse {
    /// Blank input.
    Empty,
    Prediction {
        read: Vec<Triplet>,
        predicted: Triplet,
        relevance: f64,
    },
    /// A sentence without extractable triplets; it was logged only.
    NoParse,
    Info(String),
    Error(String),
    /// `___quit`: the soul was saved.
    Quit(PathBuf),
}

impl AgentResponse {
    pub fn text(&self) -> String {
        match self {
            AgentResponse::Empty => String::new(),
            AgentResponse::Prediction { predicted, .. } => predicted.to_string(),
            AgentResponse::NoParse => "(no triplet found in that sentence)".to_owned(),
            AgentResponse::Info(s) => s.clone(),
            AgentResponse::Error(s) => format!("error: {s}"),
            AgentResponse::Quit(path) => format!("soul saved to {}, bye", path.display()),
        }
    }
}

/// Per-pass numbers from sleep training.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SleepPass {
    pub pass: usize,
    pub reward: f64,
    pub good: usize,
    pub bad: usize,
}

impl SleepPass {
    pub fn ratio(&self) -> f64 {
        crate::harness::good_ratio(self.good, self.bad)
    }
}

/// Progress seen by the sleep observer after every step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SleepProgress {
    pub pass: usize,
    pub passes: usize,
    pub step: usize,
    pub steps: usize,
}

/// Append-only conversation log; a file of sentences that can be fed back
/// with `___sleep`.
#[derive(Debug)]
pub struct ConversationLog {
    path: PathBuf,
    file: Option<File>,
    header_for: Option<String>,
}

fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

impl ConversationLog {
    /// A new log file under `dir` named after the current time.
    pub fn create_in(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let stamp = unix_now();
        let mut path = dir.join(format!("conversation-{stamp}.txt"));
        let mut n = 1;
        while path.exists() {
            path = dir.join(format!("conversation-{stamp}-{n}.txt"));
            n += 1;
        }
        Ok(ConversationLog {
            path,
            file: None,
            header_for: None,
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    fn write(&mut self, text: &str) -> Result<()> {
        if self.file.is_none() {
            let f = OpenOptions::new()
                .create(true)
                .append(true)
                .open(&self.path)
                .map_err(|e| Error::io(&self.path, e))?;
            self.file = Some(f);
        }
        let f = self.file.as_mut().expect("opened above");
        f.write_all(text.as_bytes()).map_err(|e| Error::io(&self.path, e))
    }

    /// Appends one sentence, preceded by a caregiver header when the speaker
    /// changed.
    pub fn append(&mut self, caregiver: &str, sentence: &str) -> Result<()> {
        if self.header_for.as_deref() != Some(caregiver) {
            self.write(&format!("# caregiver {caregiver} {}\n", unix_now()))?;
            self.header_for = Some(caregiver.to_owned());
        }
        self.write(&format!("{sentence}\n"))
    }

    pub fn flush(&mut self) -> Result<()> {
        if let Some(f) = self.file.as_mut() {
            f.flush().map_err(|e| Error::io(&self.path, e))?;
            f.sync_data().map_err(|e| Error::io(&self.path, e))?;
        }
        Ok(())
    }
}

pub struct AgentSession {
    name: String,
    caregiver: String,
    state: AgentState,
    engine: Engine,
    imagery: ImageryConfig,
    window: StatementWindow,
    lexicon: Lexicon,
    log: ConversationLog,
    soul_path: PathBuf,
    autosave_every: usize,
    since_save: usize,
    steps: usize,
    awaiting_caregiver: bool,
    relevance: f64,
    sleep_observer: Option<SleepObserver>,
}

/// Called after every sleep-training step started by `___sleep`; returning
/// `false` stops the training.
pub type SleepObserver = Box<dyn FnMut(&SleepProgress) -> bool + Send>;

impl AgentSession {
    /// Loads the soul at `options.soul_path` when it exists, otherwise starts
    /// a fresh learner.
    pub fn open(options: SessionOptions) -> Result<Self> {
        let log = ConversationLog::create_in(&options.data_dir)?;
        let (engine, window, imagery, relevance) = if options.soul_path.exists() {
            let soul = load_soul(&options.soul_path)?;
            let relevance = soul.extra("relevance").and_then(|v| v.parse().ok()).unwrap_or(0.0);
            let (engine, window) = soul.restore()?;
            (engine, window, soul.imagery, relevance)
        } else {
            let engine = Engine::neural(options.engine.clone(), options.imagery.input_size())?;
            (engine, options.imagery.new_window(), options.imagery.clone(), 0.0)
        };
        Ok(AgentSession {
            name: options.name,
            caregiver: options.caregiver,
            state: AgentState::Listen,
            engine,
            imagery,
            window,
            lexicon: options.lexicon,
            log,
            soul_path: options.soul_path,
            autosave_every: options.autosave_every,
            since_save: 0,
            steps: 0,
            awaiting_caregiver: false,
            relevance,
            sleep_observer: None,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn caregiver(&self) -> &str {
        &self.caregiver
    }

    pub fn state(&self) -> AgentState {
        self.state
    }

    pub fn engine(&self) -> &Engine {
        &self.engine
    }

    pub fn imagery(&self) -> &ImageryConfig {
        &self.imagery
    }

    pub fn soul_path(&self) -> &Path {
        &self.soul_path
    }

    pub fn log_path(&self) -> &Path {
        self.log.path()
    }

    pub fn set_sleep_observer(&mut self, observer: Option<SleepObserver>) {
        self.sleep_observer = observer;
    }

    pub fn lexicon_mut(&mut self) -> &mut Lexicon {
        &mut self.lexicon
    }

    /// The current mental image.
    pub fn image(&self) -> MentalImage {
        self.imagery.render(&self.window)
    }

    /// The current image before any automaton step, i.e. the readable
    /// statement text.
    pub fn statement_image(&self) -> MentalImage {
        ImageryConfig {
            ca_steps: 0,
            ..self.imagery.clone()
        }
        .render(&self.window)
    }

    /// `<name>@<state>.<known triplets>.<relevance x 100>%`
    pub fn prompt(&self) -> String {
        format_prompt(&self.name, self.state, self.engine.known_actions(), self.relevance)
    }

    /// The caregiver's input prompt, `<caregiver>@Caregiver> `.
    pub fn caregiver_prompt(&self) -> String {
        format!("{}@Caregiver> ", self.caregiver)
    }

    fn feed(&mut self, t: &Triplet) -> Result<crate::qengine::StepReport> {
        self.window.push(t.clone());
        let image = self.imagery.render(&self.window);
        let report = self.engine.step(image, t)?;
        self.relevance = report.relevance;
        self.steps += 1;
        self.since_save += 1;
        log::debug!(
            "{} read [{t}] predicts [{}] reward {:?} relevance {:.3}",
            self.name,
            report.action,
            report.reward,
            report.relevance
        );
        Ok(report)
    }

    fn maybe_autosave(&mut self) {
        if self.autosave_every > 0 && self.since_save >= self.autosave_every {
            if let Err(e) = self.save() {
                log::warn!("autosave failed: {e}");
            }
        }
    }

    /// Processes one input line (a trailing newline is removed, nothing
    /// else).
    pub fn handle_line(&mut self, line: &str) -> AgentResponse {
        let line = line.strip_suffix('\n').unwrap_or(line);
        let line = line.strip_suffix('\r').unwrap_or(line);
        if line.trim().is_empty() {
            return AgentResponse::Empty;
        }
        if let Some(command) = line.trim_start().strip_prefix(COMMAND_PREFIX) {
            return self.command(command);
        }
        let mut introduced = false;
        if self.awaiting_caregiver {
            self.awaiting_caregiver = false;
            if let Some(name) = introduced_name(line) {
                self.caregiver = name;
                introduced = true;
            }
        }
        if let Err(e) = self.log.append(&self.caregiver, line) {
            log::warn!("conversation log: {e}");
        }
        let triplets = self.lexicon.triplets_for(line).to_vec();
        if triplets.is_empty() && introduced {
            return AgentResponse::Info(format!("hello, {}", self.caregiver));
        }
        if triplets.is_empty() {
            return AgentResponse::NoParse;
        }
        let mut predicted = None;
        for t in &triplets {
            match self.feed(t) {
                Ok(report) => predicted = Some(report.action),
                Err(e) => return AgentResponse::Error(e.to_string()),
            }
        }
        self.maybe_autosave();
        AgentResponse::Prediction {
            read: triplets,
            predicted: predicted.expect("at least one triplet was fed"),
            relevance: self.relevance,
        }
    }

    fn command(&mut self, command: &str) -> AgentResponse {
        let words: Vec<&str> = command.split_whitespace().collect();
        match words.as_slice() {
            ["next", "caregiver"] => {
                self.awaiting_caregiver = true;
                AgentResponse::Info("listening to the next caregiver".to_owned())
            }
            ["save"] => match self.save() {
                Ok(path) => AgentResponse::Info(format!("soul saved to {}", path.display())),
                Err(e) => AgentResponse::Error(e.to_string()),
            },
            ["sleep", corpus, passes] => {
                let Ok(passes) = passes.parse::<usize>() else {
                    return AgentResponse::Error(format!("bad pass count {passes:?}"));
                };
                let triplets = match self.load_training(Path::new(corpus)) {
                    Ok(t) => t,
                    Err(e) => return AgentResponse::Error(e.to_string()),
                };
                let mut observer = self.sleep_observer.take();
                let result = self.sleep_train(&triplets, passes, |p| observer.as_mut().is_none_or(|f| f(p)));
                self.sleep_observer = observer;
                match result {
                    Ok(metrics) => AgentResponse::Info(summarize_sleep(&metrics, passes)),
                    Err(e) => AgentResponse::Error(e.to_string()),
                }
            }
            ["stat"] => AgentResponse::Info(self.stat()),
            ["quit"] => match self.save() {
                Ok(path) => AgentResponse::Quit(path),
                Err(e) => AgentResponse::Error(e.to_string()),
            },
            _ => AgentResponse::Error(format!("unknown command {:?}", format!("{COMMAND_PREFIX}{command}"))),
        }
    }

    pub fn stat(&self) -> String {
        let states: std::collections::HashSet<u64> = self.engine.counts().iter().map(|c| c.0).collect();
        let lzw = self.engine.lzw().map_or(0, |t| t.len());
        format!(
            "caregiver={} steps={} triplets={} states={} lzw_nodes={} relevance={:.3} log={}",
            self.caregiver,
            self.steps,
            self.engine.known_actions(),
            states.len(),
            lzw,
            self.relevance,
            self.log.path().display()
        )
    }

    /// Triplets of a training file: linkage records for `.linkage` files,
    /// otherwise one sentence per line looked up in the lexicon.
    pub fn load_training(&self, path: &Path) -> Result<Vec<Triplet>> {
        let triplets: Vec<Triplet> = if path.extension().is_some_and(|e| e == "linkage") {
            read_linkage_file(path)?.iter().flat_map(sentence_triplets).collect()
        } else {
            read_sentence_file(path)?
                .iter()
                .flat_map(|s| self.lexicon.triplets_for(s).to_vec())
                .collect()
        };
        Ok(triplets)
    }

    /// Loops `corpus` through the engine `passes` times. `observer` sees
    /// every step and may stop training early by returning `false`.
    pub fn sleep_train(
        &mut self,
        corpus: &[Triplet],
        passes: usize,
        mut observer: impl FnMut(&SleepProgress) -> bool,
    ) -> Result<Vec<SleepPass>> {
        if corpus.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        self.state = AgentState::Sleep;
        let mut metrics = Vec::with_capacity(passes);
        let result = (|| {
            'passes: for pass in 0..passes {
                if let Some(tree) = self.engine.lzw_mut() {
                    tree.reset_cursor();
                }
                let mut m = SleepPass {
                    pass: pass + 1,
                    ..SleepPass::default()
                };
                for (i, t) in corpus.iter().enumerate() {
                    let report = self.feed(t)?;
                    m.reward += report.reward.unwrap_or(0.0);
                    match report.hit {
                        Some(true) => m.good += 1,
                        Some(false) => m.bad += 1,
                        None => {}
                    }
                    self.maybe_autosave();
                    let progress = SleepProgress {
                        pass: pass + 1,
                        passes,
                        step: i + 1,
                        steps: corpus.len(),
                    };
                    if !observer(&progress) {
                        metrics.push(m);
                        break 'passes;
                    }
                }
                metrics.push(m);
            }
            Ok(())
        })();
        self.state = AgentState::Listen;
        result.map(|()| metrics)
    }

    pub fn soul(&self) -> Soul {
        let mut soul = Soul::capture(&self.engine, &self.imagery, &self.window);
        soul.set_extra("name", &self.name);
        soul.set_extra("caregiver", &self.caregiver);
        soul.set_extra("relevance", &format!("{:.16e}", self.relevance));
        soul
    }

    /// Writes the soul atomically and flushes the conversation log.
    pub fn save(&mut self) -> Result<PathBuf> {
        if let Some(dir) = self.soul_path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        save_soul(&self.soul_path, &self.soul())?;
        self.log.flush()?;
        self.since_save = 0;
        Ok(self.soul_path.clone())
    }
}

fn summarize_sleep(metrics: &[SleepPass], passes: usize) -> String {
    match metrics.last() {
        None => "slept 0 passes".to_owned(),
        Some(last) => format!(
            "slept {}/{passes} passes, last pass reward {:.1} ratio {:.3}",
            metrics.len(),
            last.reward,
            last.ratio()
        ),
    }
}

/// The name a caregiver introduces themself with: the last word of the line
/// without trailing punctuation.
fn introduced_name(line: &str) -> Option<String> {
    line.split_whitespace()
        .last()
        .map(|w| w.trim_matches(|c: char| !c.is_alphanumeric()))
        .filter(|w| !w.is_empty())
        .map(str::to_owned)
}

/// Applies `key=value` lines (engine and imagery settings) to `options`.
pub fn apply_settings(options: &mut SessionOptions, text: &str, origin: &str) -> Result<()> {
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |m: String| Error::parse(origin, i + 1, m);
        let (k, v) = line
            .split_once('=')
            .map(|(k, v)| (k.trim(), v.trim()))
            .ok_or_else(|| err(format!("expected key=value, got {line:?}")))?;
        let known = match k {
            "autosave" => {
                options.autosave_every = v.parse().map_err(|_| err(format!("bad autosave {v:?}")))?;
                true
            }
            _ => {
                options.engine.set(k, v).map_err(|e| err(e.to_string()))?
                    || options.imagery.set(k, v).map_err(|e| err(e.to_string()))?
            }
        };
        if !known {
            return Err(err(format!("unknown key {k:?}")));
        }
    }
    options.engine.validate()
}

pub fn format_prompt(name: &str, state: AgentState, known: usize, relevance: f64) -> String {
    let percent = relevance * 100.0;
    let percent = if percent == 0.0 { 0.0 } else { percent };
    format!("{name}@{state}.{known}.{percent:.1}%")
}
