//! The subject-predicate-object triplet, reward policies and corpora.

use std::cmp::Ordering;
use std::fmt;
use std::fs;
use std::hash::{Hash, Hasher};
use std::path::Path;

use crate::nlp::Lexicon;
use crate::{Error, Result};

/// An (S, P, O) word triple: the unit of perception, action and prediction.
///
/// Tokens keep the spelling they were first written with (so dumps and
/// mental images show `Hezron`, not `hezron`), but equality, hashing and
/// ordering use the lowercase form.
#[derive(Clone, Debug)]
pub struct Triplet {
    surface: [String; 3],
    key: [String; 3],
}

impl Triplet {
    pub fn new(s: &str, p: &str, o: &str) -> Result<Self> {
        let surface = [s.to_owned(), p.to_owned(), o.to_owned()];
        for token in &surface {
            if token.is_empty() {
                return Err(Error::InvalidTriplet(format!("empty member in ({s}, {p}, {o})")));
            }
            if token.chars().any(char::is_whitespace) {
                return Err(Error::InvalidTriplet(format!("member {token:?} contains whitespace")));
            }
        }
        let key = [s.to_lowercase(), p.to_lowercase(), o.to_lowercase()];
        Ok(Triplet { surface, key })
    }

    pub fn s(&self) -> &str {
        &self.surface[0]
    }

    pub fn p(&self) -> &str {
        &self.surface[1]
    }

    pub fn o(&self) -> &str {
        &self.surface[2]
    }

    /// The lowercase tokens used for comparisons.
    pub fn key(&self) -> &[String; 3] {
        &self.key
    }

    /// Number of positionally equal members (0..=3).
    pub fn matching_members(&self, other: &Triplet) -> usize {
        self.key.iter().zip(&other.key).filter(|(a, b)| a == b).count()
    }

    /// Fraction of positionally equal members: one of 0, 1/3, 2/3, 1.
    pub fn similarity(&self, other: &Triplet) -> f64 {
        self.matching_members(other) as f64 / 3.0
    }

    /// The statement form used in mental images: `S.P(O);`.
    pub fn statement(&self) -> String {
        format!("{}.{}({});", self.s(), self.p(), self.o())
    }
}

impl PartialEq for Triplet {
    fn eq(&self, other: &Self) -> bool {
        self.key == other.key
    }
}

impl Eq for Triplet {}

impl Hash for Triplet {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.key.hash(state);
    }
}

impl PartialOrd for Triplet {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Triplet {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key.cmp(&other.key)
    }
}

/// Space-joined `S P O`, the form used by caches, dumps and soul files.
impl fmt::Display for Triplet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.s(), self.p(), self.o())
    }
}

/// How a prediction is scored against the triplet that actually came next.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RewardPolicy {
    /// `3 * similarity - 1.5`: a third of a point per correct member.
    Partial,
    /// `+1` on an exact match, `-2` otherwise.
    Strict,
}

impl RewardPolicy {
    pub fn reward(self, actual: &Triplet, predicted: &Triplet) -> f64 {
        match self {
            RewardPolicy::Partial => reward_partial(actual, predicted),
            RewardPolicy::Strict => reward_strict(actual, predicted),
        }
    }

    pub fn max_reward(self) -> f64 {
        match self {
            RewardPolicy::Partial => 1.5,
            RewardPolicy::Strict => 1.0,
        }
    }

    pub fn min_reward(self) -> f64 {
        match self {
            RewardPolicy::Partial => -1.5,
            RewardPolicy::Strict => -2.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            RewardPolicy::Partial => "partial",
            RewardPolicy::Strict => "strict",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "partial" => Ok(RewardPolicy::Partial),
            "strict" => Ok(RewardPolicy::Strict),
            other => Err(Error::Config(format!("unknown reward policy {other:?}"))),
        }
    }
}

pub fn reward_partial(actual: &Triplet, predicted: &Triplet) -> f64 {
    3.0 * actual.similarity(predicted) - 1.5
}

pub fn reward_strict(actual: &Triplet, predicted: &Triplet) -> f64 {
    if actual == predicted {
        1.0
    } else {
        -2.0
    }
}

/// Splits raw text into sentences: `.`, `:` and `;` become line breaks,
/// decimal digits are deleted, lines are trimmed and empty ones dropped.
pub fn preprocess_raw(text: &str) -> Vec<String> {
    let cleaned: String = text
        .chars()
        .filter(|c| !c.is_ascii_digit())
        .map(|c| if matches!(c, '.' | ':' | ';') { '\n' } else { c })
        .collect();
    cleaned
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(str::to_owned)
        .collect()
}

/// An ordered list of sentences and the triplets extracted from them.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Corpus {
    pub name: String,
    pub sentences: Vec<String>,
    /// Flattened in reading order; a sentence may contribute several.
    pub triplets: Vec<Triplet>,
}

impl Corpus {
    /// Builds a corpus from sentences, extracting triplets with `lexicon`.
    pub fn from_sentences(name: &str, sentences: Vec<String>, lexicon: &Lexicon) -> Self {
        let triplets = sentences
            .iter()
            .flat_map(|s| lexicon.triplets_for(s).iter().cloned())
            .collect();
        Corpus {
            name: name.to_owned(),
            sentences,
            triplets,
        }
    }

    /// A corpus given directly as a triplet stream (no sentence text).
    pub fn from_triplets(name: &str, triplets: Vec<Triplet>) -> Self {
        Corpus {
            name: name.to_owned(),
            sentences: triplets.iter().map(Triplet::to_string).collect(),
            triplets,
        }
    }

    pub fn len(&self) -> usize {
        self.triplets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triplets.is_empty()
    }
}

/// Reads a sentence file: one sentence per line; blank lines and lines
/// starting with `#` are skipped.
pub fn read_sentence_file(path: &Path) -> Result<Vec<String>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_owned)
        .collect())
}

/// Loads a corpus from a sentence file.
///
/// When `triplet_cache` names an existing file the triplets are read from it
/// and extraction is skipped; otherwise they are extracted with `lexicon` and
/// written to the cache path, if one was given.
pub fn load_corpus(sentence_file: &Path, triplet_cache: Option<&Path>, lexicon: &Lexicon) -> Result<Corpus> {
    let sentences = read_sentence_file(sentence_file)?;
    finish_corpus(sentence_file, sentences, triplet_cache, lexicon)
}

/// Like [`load_corpus`], but the file is raw running text that goes through
/// [`preprocess_raw`] first.
pub fn load_raw_corpus(text_file: &Path, triplet_cache: Option<&Path>, lexicon: &Lexicon) -> Result<Corpus> {
    let text = fs::read_to_string(text_file).map_err(|e| Error::io(text_file, e))?;
    finish_corpus(text_file, preprocess_raw(&text), triplet_cache, lexicon)
}

fn finish_corpus(
    source: &Path,
    sentences: Vec<String>,
    triplet_cache: Option<&Path>,
    lexicon: &Lexicon,
) -> Result<Corpus> {
    let name = source
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    if let Some(cache) = triplet_cache.filter(|c| c.exists()) {
        return Ok(Corpus {
            name,
            sentences,
            triplets: read_triplet_cache(cache)?,
        });
    }
    let corpus = Corpus::from_sentences(&name, sentences, lexicon);
    if let Some(cache) = triplet_cache {
        write_triplet_cache(cache, &corpus.triplets)?;
    }
    Ok(corpus)
}

pub fn parse_triplet_cache(text: &str, origin: &str) -> Result<Vec<Triplet>> {
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        let [s, p, o] = tokens[..] else {
            return Err(Error::parse(
                origin,
                idx + 1,
                format!("expected 3 tokens `S P O`, found {}", tokens.len()),
            ));
        };
        out.push(Triplet::new(s, p, o).map_err(|e| Error::parse(origin, idx + 1, e.to_string()))?);
    }
    Ok(out)
}

pub fn read_triplet_cache(path: &Path) -> Result<Vec<Triplet>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_triplet_cache(&text, &path.display().to_string())
}

pub fn write_triplet_cache(path: &Path, triplets: &[Triplet]) -> Result<()> {
    let mut text = String::new();
    for t in triplets {
        text.push_str(&t.to_string());
        text.push('\n');
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}
