//! Deterministic learning-curve experiments.
//!
//! Three runs are provided:
//!
//! - [`run_experiment1`]: the 7-sentence story read in a loop, partial reward
//! - [`run_experiment2`]: the 10-sentence introduction, strict reward,
//!   optionally after pretraining on a larger corpus
//! - [`run_incremental`]: a growing prefix of a long corpus, extended by one
//!   chunk whenever a pass predicts well enough
//!
//! Every run is a pure function of its [`ExperimentConfig`] (which includes
//! the seed), so re-running a config yields a byte-identical CSV.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::imagery::{ImageryConfig, MentalImage, StatementWindow};
use crate::nlp::{read_linkage_file, sentence_triplets, Lexicon, LinkageRecord};
use crate::qengine::{Engine, EngineConfig, StepReport, TableLearner};
use crate::triplet::{load_corpus, load_raw_corpus, read_triplet_cache, RewardPolicy, Triplet};
use crate::{Error, Result};

pub const CSV_HEADER: &str = "trial,reward,good,bad,ratio,learned";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExperimentKind {
    Story,
    Intro,
    Incremental,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LearnerKind {
    Table,
    Neural,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CorpusFormat {
    /// One sentence per line, triplets looked up in the lexicon.
    Sentences,
    /// Running text split into sentences first.
    Raw,
    /// The `S P O` triplet cache format.
    Triplets,
    /// The linkage interchange format.
    Linkage,
}

#[derive(Clone, Debug, PartialEq)]
pub enum CorpusSource {
    Story,
    Intro,
    /// Synthetic chained genealogy, see [`genealogy_corpus`].
    Genealogy { len: usize, pool: usize },
    File { path: PathBuf, format: CorpusFormat },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub learner: LearnerKind,
    pub engine: EngineConfig,
    pub imagery: ImageryConfig,
    pub corpus: CorpusSource,
    /// Extra linkage files for sentence lookup.
    pub lexicon: Vec<PathBuf>,
    pub triplet_cache: Option<PathBuf>,
    pub pretrain: Option<CorpusSource>,
    pub pretrain_passes: usize,
    pub trials: usize,
    pub chunk: usize,
    pub threshold: f64,
    /// Engine steps available to an incremental run.
    pub step_budget: usize,
}

impl ExperimentConfig {
    pub fn defaults(kind: ExperimentKind) -> Self {
        let base = ExperimentConfig {
            learner: LearnerKind::Table,
            engine: EngineConfig::default(),
            imagery: ImageryConfig::default(),
            corpus: CorpusSource::Story,
            lexicon: Vec::new(),
            triplet_cache: None,
            pretrain: None,
            pretrain_passes: 0,
            trials: 200,
            chunk: 7,
            threshold: 0.95,
            step_budget: 20_000,
        };
        match kind {
            ExperimentKind::Story => base,
            ExperimentKind::Intro => ExperimentConfig {
                learner: LearnerKind::Neural,
                corpus: CorpusSource::Intro,
                engine: EngineConfig {
                    reward: RewardPolicy::Strict,
                    ..EngineConfig::default()
                },
                trials: 1000,
                ..base
            },
            ExperimentKind::Incremental => ExperimentConfig {
                learner: LearnerKind::Neural,
                corpus: CorpusSource::Genealogy { len: 210, pool: 0 },
                engine: EngineConfig {
                    reward: RewardPolicy::Strict,
                    ..EngineConfig::default()
                },
                ..base
            },
        }
    }

    /// Reads a flat `key=value` file over the defaults for `kind`. Relative
    /// paths are resolved against the file's directory.
    pub fn load(path: &Path, kind: ExperimentKind) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, &path.display().to_string(), base, kind)
    }

    pub fn parse(text: &str, origin: &str, base: &Path, kind: ExperimentKind) -> Result<Self> {
        let mut config = Self::defaults(kind);
        let mut genealogy_len = None;
        let mut genealogy_pool = None;
        let mut corpus_format = None;
        let mut pretrain_format = None;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |m: String| Error::parse(origin, i + 1, m);
            let (key, value) = line
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| err(format!("expected key=value, got {line:?}")))?;
            let count = |v: &str| v.parse::<usize>().map_err(|_| err(format!("bad count {v:?} for {key}")));
            let path = |v: &str| base.join(v);
            match key {
                "learner" => {
                    config.learner = match value {
                        "table" => LearnerKind::Table,
                        "nn" => LearnerKind::Neural,
                        _ => return Err(err(format!("unknown learner {value:?} (table or nn)"))),
                    }
                }
                "corpus" => config.corpus = corpus_source(value, &path),
                "corpus_format" => corpus_format = Some(format_of(value).map_err(err)?),
                "pretrain_corpus" => config.pretrain = Some(corpus_source(value, &path)),
                "pretrain_format" => pretrain_format = Some(format_of(value).map_err(err)?),
                "pretrain_passes" => config.pretrain_passes = count(value)?,
                "lexicon" => config.lexicon.push(path(value)),
                "triplet_cache" => config.triplet_cache = Some(path(value)),
                "trials" => config.trials = count(value)?,
                "chunk" => config.chunk = count(value)?,
                "threshold" => {
                    config.threshold = value.parse().map_err(|_| err(format!("bad threshold {value:?}")))?
                }
                "step_budget" => config.step_budget = count(value)?,
                "genealogy_len" => genealogy_len = Some(count(value)?),
                "genealogy_pool" => genealogy_pool = Some(count(value)?),
                _ => {
                    let known = config.engine.set(key, value).map_err(|e| err(e.to_string()))?
                        || config.imagery.set(key, value).map_err(|e| err(e.to_string()))?;
                    if !known {
                        return Err(err(format!("unknown key {key:?}")));
                    }
                }
            }
        }
        for (source, format) in [(Some(&mut config.corpus), corpus_format), (config.pretrain.as_mut(), pretrain_format)] {
            if let (Some(CorpusSource::File { format: f, .. }), Some(format)) = (source, format) {
                *f = format;
            }
        }
        if let CorpusSource::Genealogy { len, pool } = &mut config.corpus {
            *len = genealogy_len.unwrap_or(*len);
            *pool = genealogy_pool.unwrap_or(*pool);
        }
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        self.engine.validate()?;
        if self.trials == 0 {
            return Err(Error::Config("trials must be positive".into()));
        }
        if self.chunk == 0 {
            return Err(Error::Config("chunk must be positive".into()));
        }
        if !(self.threshold > 0.0 && self.threshold <= 1.0) {
            return Err(Error::Config(format!("threshold must be in (0, 1], got {}", self.threshold)));
        }
        if self.imagery.window == 0 {
            return Err(Error::Config("window must be positive".into()));
        }
        if let CorpusSource::Genealogy { len, .. } = self.corpus {
            if len == 0 {
                return Err(Error::Config("genealogy_len must be positive".into()));
            }
        }
        Ok(())
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.engine.seed = seed;
        self
    }
}

fn corpus_source(value: &str, path: &dyn Fn(&str) -> PathBuf) -> CorpusSource {
    match value {
        "story" => CorpusSource::Story,
        "intro" => CorpusSource::Intro,
        "genealogy" => CorpusSource::Genealogy { len: 210, pool: 0 },
        _ => {
            let format = if value.ends_with(".linkage") {
                CorpusFormat::Linkage
            } else {
                CorpusFormat::Sentences
            };
            CorpusSource::File {
                path: path(value),
                format,
            }
        }
    }
}

fn format_of(value: &str) -> std::result::Result<CorpusFormat, String> {
    match value {
        "sentences" => Ok(CorpusFormat::Sentences),
        "raw" => Ok(CorpusFormat::Raw),
        "triplets" => Ok(CorpusFormat::Triplets),
        "linkage" => Ok(CorpusFormat::Linkage),
        _ => Err(format!("unknown corpus format {value:?}")),
    }
}

fn records_triplets(records: &[LinkageRecord]) -> Vec<Triplet> {
    records.iter().flat_map(sentence_triplets).collect()
}

/// Resolves a corpus source to its triplet stream.
pub fn load_triplets(source: &CorpusSource, config: &ExperimentConfig) -> Result<Vec<Triplet>> {
    let triplets = match source {
        CorpusSource::Story => records_triplets(&crate::nlp::bundled_story_records()),
        CorpusSource::Intro => records_triplets(&crate::nlp::bundled_intro_records()),
        CorpusSource::Genealogy { len, pool } => genealogy_corpus(*len, *pool, config.engine.seed),
        CorpusSource::File { path, format } => {
            let mut lexicon = Lexicon::bundled();
            for extra in &config.lexicon {
                lexicon.add_file(extra)?;
            }
            let cache = config.triplet_cache.as_deref();
            match format {
                CorpusFormat::Sentences => load_corpus(path, cache, &lexicon)?.triplets,
                CorpusFormat::Raw => load_raw_corpus(path, cache, &lexicon)?.triplets,
                CorpusFormat::Triplets => read_triplet_cache(path)?,
                CorpusFormat::Linkage => records_triplets(&read_linkage_file(path)?),
            }
        }
    };
    if triplets.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    Ok(triplets)
}

const SYLLABLES: [&str; 16] = [
    "ab", "el", "ra", "mi", "na", "jo", "ze", "ka", "ru", "so", "le", "ha", "di", "te", "ob", "im",
];

/// A distinct pronounceable name for every index.
fn genealogy_name(mut i: usize) -> String {
    let mut name = String::new();
    loop {
        name.push_str(SYLLABLES[i % SYLLABLES.len()]);
        i /= SYLLABLES.len();
        if i == 0 {
            break;
        }
        i -= 1;
    }
    let mut chars = name.chars();
    let first = chars.next().expect("names are nonempty").to_ascii_uppercase();
    std::iter::once(first).chain(chars).collect()
}

/// A chain of `len` triplets `(child, son-of, parent)` where each child is
/// the parent of the next triplet. With `pool == 0` every generation gets a
/// fresh name; otherwise names are drawn from `pool` names with a seeded
/// generator (never the same name twice in a row).
pub fn genealogy_corpus(len: usize, pool: usize, seed: u64) -> Vec<Triplet> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut names: Vec<usize> = Vec::with_capacity(len + 1);
    for g in 0..=len {
        let name = if pool < 2 {
            g
        } else {
            loop {
                let n = rng.gen_range(0..pool);
                if names.last() != Some(&n) {
                    break n;
                }
            }
        };
        names.push(name);
    }
    names
        .windows(2)
        .map(|w| {
            Triplet::new(&genealogy_name(w[1]), "son-of", &genealogy_name(w[0]))
                .expect("generated names are single tokens")
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CurvePoint {
    pub trial: usize,
    pub reward: f64,
    pub good: usize,
    pub bad: usize,
    pub ratio: f64,
    pub learned: usize,
}

impl CurvePoint {
    fn new(trial: usize, stats: PassStats, learned: usize) -> Self {
        CurvePoint {
            trial,
            reward: stats.reward,
            good: stats.good,
            bad: stats.bad,
            ratio: good_ratio(stats.good, stats.bad),
            learned,
        }
    }
}

/// `good / (good + bad)`, zero when nothing was predicted.
pub fn good_ratio(good: usize, bad: usize) -> f64 {
    let total = good + bad;
    if total == 0 {
        0.0
    } else {
        good as f64 / total as f64
    }
}

/// The learner behind a run.
#[derive(Clone, Debug)]
pub enum AnyLearner {
    Table(TableLearner),
    Neural(Engine),
}

impl AnyLearner {
    pub fn new(kind: LearnerKind, engine: &EngineConfig, imagery: &ImageryConfig) -> Result<Self> {
        Ok(match kind {
            LearnerKind::Table => AnyLearner::Table(TableLearner::table(engine.clone())?),
            LearnerKind::Neural => AnyLearner::Neural(Engine::neural(engine.clone(), imagery.input_size())?),
        })
    }

    pub fn step(&mut self, image: MentalImage, t: &Triplet) -> Result<StepReport> {
        match self {
            AnyLearner::Table(l) => l.step(image, t),
            AnyLearner::Neural(l) => l.step(image, t),
        }
    }

    pub fn reset_cursor(&mut self) {
        let tree = match self {
            AnyLearner::Table(l) => l.lzw_mut(),
            AnyLearner::Neural(l) => l.lzw_mut(),
        };
        if let Some(tree) = tree {
            tree.reset_cursor();
        }
    }

    pub fn lzw_dump(&self) -> Option<String> {
        match self {
            AnyLearner::Table(l) => l.lzw().map(|t| t.dump()),
            AnyLearner::Neural(l) => l.lzw().map(|t| t.dump()),
        }
    }

    /// Greedy prediction over all known actions, no exploration.
    pub fn greedy(&self, image: MentalImage, current: &Triplet) -> Option<Triplet> {
        match self {
            AnyLearner::Table(l) => l.greedy(&l.state(image, current), None),
            AnyLearner::Neural(l) => l.greedy(&l.state(image, current), None),
        }
    }

    pub fn known_actions(&self) -> usize {
        match self {
            AnyLearner::Table(l) => l.known_actions(),
            AnyLearner::Neural(l) => l.known_actions(),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PassStats {
    pub reward: f64,
    pub good: usize,
    pub bad: usize,
}

/// A learner together with its statement window.
pub struct Run {
    pub learner: AnyLearner,
    imagery: ImageryConfig,
    window: StatementWindow,
    steps: usize,
    record_frames: bool,
    frames: Vec<String>,
}

impl Run {
    pub fn new(config: &ExperimentConfig) -> Result<Self> {
        Ok(Run {
            learner: AnyLearner::new(config.learner, &config.engine, &config.imagery)?,
            window: config.imagery.new_window(),
            imagery: config.imagery.clone(),
            steps: 0,
            record_frames: false,
            frames: Vec::new(),
        })
    }

    /// Keeps the char dump of every image of the most recent pass.
    pub fn record_frames(&mut self, on: bool) {
        self.record_frames = on;
    }

    pub fn frames(&self) -> &[String] {
        &self.frames
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn feed(&mut self, t: &Triplet) -> Result<StepReport> {
        self.window.push(t.clone());
        let image = self.imagery.render(&self.window);
        if self.record_frames {
            self.frames.push(image.char_grid().join("\n"));
        }
        let report = self.learner.step(image, t)?;
        self.steps += 1;
        log::debug!(
            "step {} read [{}] reward {:?} predict [{}] of {} relevance {:.3}",
            self.steps,
            t,
            report.reward,
            report.action,
            report.candidates,
            report.relevance
        );
        Ok(report)
    }

    /// Reads `triplets` once, starting from the LZW root.
    pub fn pass(&mut self, triplets: &[Triplet]) -> Result<PassStats> {
        self.learner.reset_cursor();
        self.frames.clear();
        let mut stats = PassStats::default();
        for t in triplets {
            let report = self.feed(t)?;
            if let Some(r) = report.reward {
                stats.reward += r;
            }
            match report.hit {
                Some(true) => stats.good += 1,
                Some(false) => stats.bad += 1,
                None => {}
            }
        }
        Ok(stats)
    }

    /// Greedy predictions at each position of `triplets` read in a loop,
    /// with the window in its periodic steady state.
    pub fn steady_state_predictions(&self, triplets: &[Triplet]) -> Vec<Option<Triplet>> {
        let mut window = self.imagery.new_window();
        let warmup = self.imagery.window.div_ceil(triplets.len()) + 1;
        for _ in 0..warmup {
            for t in triplets {
                window.push(t.clone());
            }
        }
        triplets
            .iter()
            .map(|t| {
                window.push(t.clone());
                self.learner.greedy(self.imagery.render(&window), t)
            })
            .collect()
    }
}

/// Result of one experiment.
pub struct Outcome {
    pub curve: Vec<CurvePoint>,
    pub run: Run,
    pub corpus: Vec<Triplet>,
}

fn looped(config: &ExperimentConfig, triplets: Vec<Triplet>, run: Option<Run>) -> Result<Outcome> {
    let mut run = match run {
        Some(run) => run,
        None => Run::new(config)?,
    };
    let mut curve = Vec::with_capacity(config.trials);
    for trial in 1..=config.trials {
        let stats = run.pass(&triplets)?;
        curve.push(CurvePoint::new(trial, stats, 0));
    }
    Ok(Outcome {
        curve,
        run,
        corpus: triplets,
    })
}

/// The story read `trials` times with the configured learner.
pub fn run_experiment1(config: &ExperimentConfig) -> Result<Outcome> {
    run_experiment1_with(config, false)
}

pub fn run_experiment1_with(config: &ExperimentConfig, record_frames: bool) -> Result<Outcome> {
    let triplets = load_triplets(&config.corpus, config)?;
    if triplets.len() != 7 {
        log::warn!("experiment 1 expects a 7-triplet story, corpus has {}", triplets.len());
    }
    let mut run = Run::new(config)?;
    run.record_frames(record_frames);
    looped(config, triplets, Some(run))
}

/// The introduction corpus with an optional pretraining phase.
pub fn run_experiment2(config: &ExperimentConfig) -> Result<Outcome> {
    run_experiment2_with(config, false)
}

pub fn run_experiment2_with(config: &ExperimentConfig, record_frames: bool) -> Result<Outcome> {
    let triplets = load_triplets(&config.corpus, config)?;
    if triplets.len() != 10 {
        log::warn!("experiment 2 expects a 10-triplet introduction, corpus has {}", triplets.len());
    }
    let mut run = Run::new(config)?;
    if let Some(source) = &config.pretrain {
        let pretrain = load_triplets(source, config)?;
        for pass in 0..config.pretrain_passes {
            let stats = run.pass(&pretrain)?;
            log::info!("pretraining pass {} ratio {:.4}", pass + 1, good_ratio(stats.good, stats.bad));
        }
    }
    run.record_frames(record_frames);
    looped(config, triplets, Some(run))
}

/// Trains on the first `k * chunk` triplets, growing `k` whenever a pass
/// has a good-prediction ratio above the threshold, until the step budget
/// runs out. `learned` counts the triplets of the prefixes passed so far.
pub fn run_incremental(config: &ExperimentConfig) -> Result<Outcome> {
    run_incremental_with(config, false)
}

pub fn run_incremental_with(config: &ExperimentConfig, record_frames: bool) -> Result<Outcome> {
    let triplets = load_triplets(&config.corpus, config)?;
    let mut run = Run::new(config)?;
    run.record_frames(record_frames);
    let mut curve = Vec::new();
    let mut prefix = config.chunk.min(triplets.len());
    let mut learned = 0;
    let mut trial = 0;
    while run.steps() + prefix <= config.step_budget {
        trial += 1;
        let stats = run.pass(&triplets[..prefix])?;
        let ratio = good_ratio(stats.good, stats.bad);
        if ratio > config.threshold {
            learned = learned.max(prefix);
            if prefix < triplets.len() {
                prefix = (prefix + config.chunk).min(triplets.len());
                log::info!("pass {trial}: ratio {ratio:.3}, extending to {prefix} triplets");
            }
        }
        curve.push(CurvePoint::new(trial, stats, learned));
    }
    Ok(Outcome {
        curve,
        run,
        corpus: triplets,
    })
}

pub fn run(kind: ExperimentKind, config: &ExperimentConfig, record_frames: bool) -> Result<Outcome> {
    match kind {
        ExperimentKind::Story => run_experiment1_with(config, record_frames),
        ExperimentKind::Intro => run_experiment2_with(config, record_frames),
        ExperimentKind::Incremental => run_incremental_with(config, record_frames),
    }
}

pub fn curve_csv(curve: &[CurvePoint]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for p in curve {
        let _ = writeln!(
            out,
            "{},{},{},{},{:.6},{}",
            p.trial, p.reward, p.good, p.bad, p.ratio, p.learned
        );
    }
    out
}

pub fn emit_csv(curve: &[CurvePoint], path: &Path) -> Result<()> {
    fs::write(path, curve_csv(curve)).map_err(|e| Error::io(path, e))
}
