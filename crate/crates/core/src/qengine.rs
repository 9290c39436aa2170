//! Q-learning over triplet predictions.
//!
//! A [`Learner`] runs one control loop for two value stores: [`NeuralQ`]
//! keeps one perceptron per action (the chatbot's engine), [`QTable`] is the
//! classical lookup table used as a baseline. Every call to
//! [`Learner::step`] reads the current triplet `t'` and the state `s'`
//! rendered from the statement window that already contains `t'`, scores the
//! previous prediction, updates `Q(s, a)` for the previous state and action,
//! and returns the next prediction.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use crate::imagery::{Fnv64, MentalImage};
use crate::lzw::{LzwTree, DEFAULT_MAX_DEPTH};
use crate::mlp::{MlpConfig, Perceptron};
use crate::triplet::{RewardPolicy, Triplet};
use crate::{Error, Result};

pub type StateKey = u64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum LearningMode {
    /// Off-policy target: `r' + gamma * max_p Q(s', p)`.
    #[default]
    QMax,
    /// On-policy target: `r' + gamma * Q(s', a')` for the selected `a'`.
    Sarsa,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Narrowing {
    #[default]
    Off,
    /// Candidates are the children of the current LZW node.
    Lzw,
}

/// What indexes the frequency table and the lookup table.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum StateKeyMode {
    /// Digest of the mental image.
    #[default]
    Image,
    /// The current triplet stands in for the state.
    Triplet,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AlphaSchedule {
    Constant(f64),
    /// `c1 / (c2 + n)`
    Decaying { c1: f64, c2: f64 },
}

impl AlphaSchedule {
    pub fn alpha(&self, n: u64) -> f64 {
        match *self {
            AlphaSchedule::Constant(a) => a,
            AlphaSchedule::Decaying { c1, c2 } => c1 / (c2 + n as f64),
        }
    }
}

impl fmt::Display for AlphaSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AlphaSchedule::Constant(a) => write!(f, "const:{a}"),
            AlphaSchedule::Decaying { c1, c2 } => write!(f, "decay:{c1}:{c2}"),
        }
    }
}

impl std::str::FromStr for AlphaSchedule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("bad alpha schedule {s:?} (want const:A or decay:C1:C2)"));
        let num = |v: &str| v.parse::<f64>().map_err(|_| bad());
        let parts: Vec<&str> = s.split(':').collect();
        match parts[..] {
            ["const", a] => Ok(AlphaSchedule::Constant(num(a)?)),
            [a] => Ok(AlphaSchedule::Constant(num(a)?)),
            ["decay", c1, c2] => Ok(AlphaSchedule::Decaying {
                c1: num(c1)?,
                c2: num(c2)?,
            }),
            _ => Err(bad()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EngineConfig {
    pub gamma: f64,
    pub alpha: AlphaSchedule,
    /// `N_e`: a state-action pair tried fewer times than this looks optimistic.
    pub tries: u64,
    /// `R_plus`; `None` means `r_max / (1 - gamma)` for the reward policy.
    pub r_plus: Option<f64>,
    pub mode: LearningMode,
    pub narrowing: Narrowing,
    pub state_key: StateKeyMode,
    pub reward: RewardPolicy,
    pub mlp: MlpConfig,
    pub lzw_depth: usize,
    pub seed: u64,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            gamma: 0.9,
            alpha: AlphaSchedule::Constant(0.2),
            tries: 5,
            r_plus: None,
            mode: LearningMode::QMax,
            narrowing: Narrowing::Off,
            state_key: StateKeyMode::Image,
            reward: RewardPolicy::Partial,
            mlp: MlpConfig::default(),
            lzw_depth: DEFAULT_MAX_DEPTH,
            seed: 42,
        }
    }
}

impl EngineConfig {
    pub fn r_plus(&self) -> f64 {
        self.r_plus
            .unwrap_or_else(|| self.reward.max_reward() / (1.0 - self.gamma))
    }

    /// Optimistic exploration: `R_plus` until the pair has `N_e` tries.
    pub fn explore(&self, q_value: f64, n: u64) -> f64 {
        if n < self.tries {
            self.r_plus()
        } else {
            q_value
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(Error::Config(format!("gamma must be in [0, 1), got {}", self.gamma)));
        }
        match self.alpha {
            AlphaSchedule::Constant(a) if !(a > 0.0 && a <= 1.0) => {
                return Err(Error::Config(format!("alpha must be in (0, 1], got {a}")));
            }
            AlphaSchedule::Decaying { c1, c2 } if !(c1 > 0.0 && c2 + 1.0 > 0.0) => {
                return Err(Error::Config(format!("decaying alpha needs c1 > 0 and c2 > -1, got {c1}/{c2}")));
            }
            _ => {}
        }
        if self.mlp.hidden == 0 || self.mlp.learning_rate.is_nan() || self.mlp.learning_rate <= 0.0 {
            return Err(Error::Config("mlp hidden size and learning rate must be positive".into()));
        }
        if self.lzw_depth == 0 {
            return Err(Error::Config("lzw depth must be positive".into()));
        }
        Ok(())
    }

    /// `key=value` pairs, the inverse of [`EngineConfig::set`].
    pub fn to_pairs(&self) -> Vec<(String, String)> {
        let mut pairs = vec![
            ("gamma", self.gamma.to_string()),
            ("alpha", self.alpha.to_string()),
            ("tries", self.tries.to_string()),
            ("learning", match self.mode {
                LearningMode::QMax => "qmax".into(),
                LearningMode::Sarsa => "sarsa".into(),
            }),
            ("narrowing", match self.narrowing {
                Narrowing::Off => "off".into(),
                Narrowing::Lzw => "lzw".into(),
            }),
            ("state_key", match self.state_key {
                StateKeyMode::Image => "image".into(),
                StateKeyMode::Triplet => "triplet".into(),
            }),
            ("reward", self.reward.name().into()),
            ("hidden", self.mlp.hidden.to_string()),
            ("mlp_lr", self.mlp.learning_rate.to_string()),
            ("bias", self.mlp.bias.to_string()),
            ("lzw_depth", self.lzw_depth.to_string()),
            ("seed", self.seed.to_string()),
        ];
        if let Some(r) = self.r_plus {
            pairs.push(("r_plus", r.to_string()));
        }
        pairs.into_iter().map(|(k, v)| (k.to_owned(), v)).collect()
    }

    /// Applies one `key=value` setting. Returns `Ok(false)` for keys that
    /// are not engine settings.
    pub fn set(&mut self, key: &str, value: &str) -> Result<bool> {
        fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
            value
                .parse()
                .map_err(|_| Error::Config(format!("bad value {value:?} for {key}")))
        }
        match key {
            "gamma" => self.gamma = num(key, value)?,
            "alpha" => self.alpha = value.parse()?,
            "tries" | "ne" => self.tries = num(key, value)?,
            "r_plus" => self.r_plus = Some(num(key, value)?),
            "learning" => {
                self.mode = match value {
                    "qmax" | "q_max" => LearningMode::QMax,
                    "sarsa" => LearningMode::Sarsa,
                    _ => return Err(Error::Config(format!("unknown learning mode {value:?}"))),
                }
            }
            "narrowing" => {
                self.narrowing = match value {
                    "off" => Narrowing::Off,
                    "lzw" => Narrowing::Lzw,
                    _ => return Err(Error::Config(format!("unknown narrowing {value:?}"))),
                }
            }
            "state_key" => {
                self.state_key = match value {
                    "image" => StateKeyMode::Image,
                    "triplet" => StateKeyMode::Triplet,
                    _ => return Err(Error::Config(format!("unknown state key {value:?}"))),
                }
            }
            "reward" => self.reward = RewardPolicy::parse(value)?,
            "hidden" => self.mlp.hidden = num(key, value)?,
            "mlp_lr" => self.mlp.learning_rate = num(key, value)?,
            "bias" => self.mlp.bias = num(key, value)?,
            "lzw_depth" => self.lzw_depth = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            _ => return Ok(false),
        }
        Ok(true)
    }
}

/// A mental image with the key it is counted under.
#[derive(Clone, Debug, PartialEq)]
pub struct State {
    pub image: MentalImage,
    pub key: StateKey,
}

pub fn triplet_digest(t: &Triplet) -> u64 {
    let mut h = Fnv64::new();
    for token in t.key() {
        h.write(token.as_bytes());
        h.write(&[0]);
    }
    h.finish()
}

/// Storage for `Q(state, action)`.
pub trait QFunction {
    /// Called the first time an action is seen.
    fn register(&mut self, action: &Triplet) -> Result<()>;
    fn value(&self, state: &State, action: &Triplet) -> f64;
    /// Moves `Q(state, action)` toward `target`; `predicted` is its current value.
    fn update(&mut self, state: &State, action: &Triplet, target: f64, predicted: f64);
}

/// One perceptron per action.
#[derive(Clone, Debug)]
pub struct NeuralQ {
    n_in: usize,
    mlp: MlpConfig,
    seed: u64,
    nets: HashMap<Triplet, Perceptron>,
}

impl NeuralQ {
    pub fn new(n_in: usize, mlp: MlpConfig, seed: u64) -> Self {
        NeuralQ {
            n_in,
            mlp,
            seed,
            nets: HashMap::new(),
        }
    }

    pub fn n_in(&self) -> usize {
        self.n_in
    }

    pub fn perceptron(&self, action: &Triplet) -> Option<&Perceptron> {
        self.nets.get(action)
    }

    pub fn perceptrons(&self) -> impl Iterator<Item = (&Triplet, &Perceptron)> {
        self.nets.iter()
    }

    pub fn insert(&mut self, action: Triplet, net: Perceptron) -> Result<()> {
        if net.n_in() != self.n_in {
            return Err(Error::Dimension {
                expected: self.n_in,
                actual: net.n_in(),
            });
        }
        self.nets.insert(action, net);
        Ok(())
    }

    /// Seed of the perceptron created for `action`; depends only on the
    /// engine seed and the action, not on the order actions appear in.
    fn action_seed(&self, action: &Triplet) -> u64 {
        self.seed ^ triplet_digest(action)
    }
}

impl QFunction for NeuralQ {
    fn register(&mut self, action: &Triplet) -> Result<()> {
        if !self.nets.contains_key(action) {
            let net = Perceptron::init(self.n_in, &self.mlp, self.action_seed(action))?;
            self.nets.insert(action.clone(), net);
        }
        Ok(())
    }

    fn value(&self, state: &State, action: &Triplet) -> f64 {
        self.nets
            .get(action)
            .map(|p| p.forward(state.image.cells()).expect("state size matches the perceptrons"))
            .unwrap_or(0.0)
    }

    fn update(&mut self, state: &State, action: &Triplet, target: f64, predicted: f64) {
        if let Some(p) = self.nets.get_mut(action) {
            p.train_to_target(state.image.cells(), target, predicted)
                .expect("state size matches the perceptrons");
        }
    }
}

/// Lookup table, unseen entries read as zero.
#[derive(Clone, Debug, Default)]
pub struct QTable {
    values: HashMap<(StateKey, Triplet), f64>,
}

impl QTable {
    pub fn get(&self, key: StateKey, action: &Triplet) -> f64 {
        self.values.get(&(key, action.clone())).copied().unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

impl QFunction for QTable {
    fn register(&mut self, _action: &Triplet) -> Result<()> {
        Ok(())
    }

    fn value(&self, state: &State, action: &Triplet) -> f64 {
        self.get(state.key, action)
    }

    fn update(&mut self, state: &State, action: &Triplet, target: f64, _predicted: f64) {
        self.values.insert((state.key, action.clone()), target);
    }
}

/// The learner's memory of the previous call.
#[derive(Clone, Debug, PartialEq)]
pub struct Previous {
    pub state: State,
    /// `None` on the very first step (the "minus infinity" reward).
    pub reward: Option<f64>,
    pub action: Triplet,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepReport {
    /// The prediction for the next triplet.
    pub action: Triplet,
    /// Reward for the previous prediction; `None` on the first step.
    pub reward: Option<f64>,
    /// Whether the previous prediction equals the triplet just read.
    pub hit: Option<bool>,
    /// Size of the candidate set the prediction was chosen from.
    pub candidates: usize,
    /// Bogo-relevance of the prediction among the candidates.
    pub relevance: f64,
}

/// `(v[chosen] - mean(v)) / (max(v) - min(v))`, zero when all values are
/// equal.
pub fn relevance(values: &[f64], chosen: usize) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let range = max - min;
    if range.is_nan() || range <= 0.0 {
        return 0.0;
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    (values[chosen] - mean) / range
}

#[derive(Clone, Debug)]
pub struct Learner<Q> {
    config: EngineConfig,
    q: Q,
    actions: BTreeSet<Triplet>,
    counts: HashMap<(StateKey, Triplet), u64>,
    prev: Option<Previous>,
    lzw: Option<LzwTree>,
    last: Option<StepReport>,
}

/// The perceptron-per-action engine.
pub type Engine = Learner<NeuralQ>;

/// The lookup-table baseline with the same control flow.
pub type TableLearner = Learner<QTable>;

impl Engine {
    pub fn neural(config: EngineConfig, n_in: usize) -> Result<Self> {
        let q = NeuralQ::new(n_in, config.mlp.clone(), config.seed);
        Learner::with_q(config, q)
    }
}

impl TableLearner {
    pub fn table(config: EngineConfig) -> Result<Self> {
        Learner::with_q(config, QTable::default())
    }
}

impl<Q: QFunction> Learner<Q> {
    pub fn with_q(config: EngineConfig, q: Q) -> Result<Self> {
        config.validate()?;
        let lzw = (config.narrowing == Narrowing::Lzw).then(|| LzwTree::new(config.lzw_depth));
        Ok(Learner {
            config,
            q,
            actions: BTreeSet::new(),
            counts: HashMap::new(),
            prev: None,
            lzw,
            last: None,
        })
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    pub fn q(&self) -> &Q {
        &self.q
    }

    pub fn actions(&self) -> &BTreeSet<Triplet> {
        &self.actions
    }

    pub fn known_actions(&self) -> usize {
        self.actions.len()
    }

    pub fn lzw(&self) -> Option<&LzwTree> {
        self.lzw.as_ref()
    }

    pub fn lzw_mut(&mut self) -> Option<&mut LzwTree> {
        self.lzw.as_mut()
    }

    pub fn previous(&self) -> Option<&Previous> {
        self.prev.as_ref()
    }

    pub fn last_report(&self) -> Option<&StepReport> {
        self.last.as_ref()
    }

    pub fn count(&self, key: StateKey, action: &Triplet) -> u64 {
        self.counts.get(&(key, action.clone())).copied().unwrap_or(0)
    }

    /// Frequency table entries sorted by key then action.
    pub fn counts(&self) -> Vec<(StateKey, Triplet, u64)> {
        let mut v: Vec<_> = self
            .counts
            .iter()
            .map(|((k, a), n)| (*k, a.clone(), *n))
            .collect();
        v.sort_by(|x, y| x.0.cmp(&y.0).then_with(|| x.1.cmp(&y.1)));
        v
    }

    pub fn state(&self, image: MentalImage, current: &Triplet) -> State {
        let key = match self.config.state_key {
            StateKeyMode::Image => image.digest(),
            StateKeyMode::Triplet => triplet_digest(current),
        };
        State { image, key }
    }

    pub fn register(&mut self, action: &Triplet) -> Result<()> {
        if !self.actions.contains(action) {
            self.q.register(action)?;
            self.actions.insert(action.clone());
        }
        Ok(())
    }

    pub fn value(&self, state: &State, action: &Triplet) -> f64 {
        self.q.value(state, action)
    }

    /// Argmax of the exploration function; ties go to the smaller visit
    /// count, then to the smaller triplet.
    fn select(&self, state: &State, candidates: &[Triplet], values: &[f64]) -> usize {
        let score = |i: usize| {
            let n = self.count(state.key, &candidates[i]);
            (self.config.explore(values[i], n), n)
        };
        let mut best = 0;
        let (mut best_f, mut best_n) = score(0);
        for i in 1..candidates.len() {
            let (f, n) = score(i);
            let better = match f.total_cmp(&best_f) {
                std::cmp::Ordering::Greater => true,
                std::cmp::Ordering::Less => false,
                std::cmp::Ordering::Equal => n < best_n || (n == best_n && candidates[i] < candidates[best]),
            };
            if better {
                best = i;
                best_f = f;
                best_n = n;
            }
        }
        best
    }

    /// The greedy prediction for `state` without exploration and without
    /// learning. Candidates default to every known action.
    pub fn greedy(&self, state: &State, candidates: Option<&[Triplet]>) -> Option<Triplet> {
        let all: Vec<Triplet>;
        let candidates = match candidates {
            Some(c) if !c.is_empty() => c,
            _ => {
                all = self.actions.iter().cloned().collect();
                &all
            }
        };
        candidates
            .iter()
            .map(|p| (self.value(state, p), p))
            .max_by(|a, b| a.0.total_cmp(&b.0).then_with(|| b.1.cmp(a.1)))
            .map(|(_, p)| p.clone())
    }

    /// Bogo-relevance of `chosen` among `candidates` in `state`.
    pub fn bogo_relevance(&self, state: &State, chosen: &Triplet, candidates: &[Triplet]) -> f64 {
        let values: Vec<f64> = candidates.iter().map(|p| self.value(state, p)).collect();
        candidates
            .iter()
            .position(|p| p == chosen)
            .map_or(0.0, |i| relevance(&values, i))
    }

    /// One learning step for the current triplet `current` whose state image
    /// is `image` (rendered after `current` joined the statement window).
    pub fn step(&mut self, image: MentalImage, current: &Triplet) -> Result<StepReport> {
        self.register(current)?;
        let state = self.state(image, current);
        let reward = self
            .prev
            .as_ref()
            .map(|p| self.config.reward.reward(current, &p.action));
        let hit = self.prev.as_ref().map(|p| p.action == *current);

        let narrowed: Vec<Triplet> = match self.lzw.as_mut() {
            Some(tree) => {
                let node = tree.build_step(current);
                tree.children(node).into_iter().cloned().collect()
            }
            None => Vec::new(),
        };

        let mut action = current.clone();
        let mut candidate_count = 1;
        let mut relevance_value = 0.0;

        if let Some(prev) = self.prev.take() {
            let r = reward.expect("reward exists when a previous step exists");
            let n = {
                let entry = self.counts.entry((prev.state.key, prev.action.clone())).or_insert(0);
                *entry += 1;
                *entry
            };
            let nn = self.q.value(&prev.state, &prev.action);
            let candidates: Vec<Triplet> = if narrowed.is_empty() {
                self.actions.iter().cloned().collect()
            } else {
                narrowed
            };
            let mut values: Vec<f64> = candidates.iter().map(|p| self.q.value(&state, p)).collect();
            let alpha = self.config.alpha.alpha(n);
            let gamma = self.config.gamma;

            let chosen = match self.config.mode {
                LearningMode::QMax => {
                    let future = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    let target = nn + alpha * (r + gamma * future - nn);
                    self.q.update(&prev.state, &prev.action, target, nn);
                    // only the trained action's value at s' can have moved
                    if let Some(i) = candidates.iter().position(|p| *p == prev.action) {
                        values[i] = self.q.value(&state, &prev.action);
                    }
                    self.select(&state, &candidates, &values)
                }
                LearningMode::Sarsa => {
                    let chosen = self.select(&state, &candidates, &values);
                    let target = nn + alpha * (r + gamma * values[chosen] - nn);
                    self.q.update(&prev.state, &prev.action, target, nn);
                    if let Some(i) = candidates.iter().position(|p| *p == prev.action) {
                        values[i] = self.q.value(&state, &prev.action);
                    }
                    chosen
                }
            };
            action = candidates[chosen].clone();
            candidate_count = candidates.len();
            relevance_value = relevance(&values, chosen);
        }

        self.prev = Some(Previous {
            state,
            reward,
            action: action.clone(),
        });
        let report = StepReport {
            action,
            reward,
            hit,
            candidates: candidate_count,
            relevance: relevance_value,
        };
        self.last = Some(report.clone());
        Ok(report)
    }

    /// Forgets the previous step so the next call starts a fresh episode
    /// (no update, prediction equals the triplet read).
    pub fn clear_previous(&mut self) {
        self.prev = None;
    }

    pub(crate) fn restore(
        &mut self,
        counts: Vec<(StateKey, Triplet, u64)>,
        prev: Option<Previous>,
        lzw: Option<LzwTree>,
    ) {
        self.counts = counts.into_iter().map(|(k, a, n)| ((k, a), n)).collect();
        self.prev = prev;
        if self.config.narrowing == Narrowing::Lzw {
            self.lzw = Some(lzw.unwrap_or_else(|| LzwTree::new(self.config.lzw_depth)));
        }
    }
}

impl Engine {
    pub(crate) fn insert_perceptron(&mut self, action: Triplet, net: Perceptron) -> Result<()> {
        self.q.insert(action.clone(), net)?;
        self.actions.insert(action);
        Ok(())
    }
}
