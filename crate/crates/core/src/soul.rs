//! `samu.soul.txt`: the learner's weights and hyperparameters as text.
//!
//! ```text
//! SAMU-SOUL 1
//! gamma=0.9 alpha=const:0.2 ... n_in=800 actions=2
//! ACTION I love Samu 800 32
//! <one row of 800 input weights per hidden unit>
//! <32 output weights>
//! END
//! ```
//!
//! After the perceptrons come optional sections that let a restarted agent
//! continue exactly where it stopped: `FREQ` (frequency table), `PREV` (the
//! previous state and action), `LZW` (tree and cursor) and `WINDOW` (the
//! statement window). Each section header carries its entry count, so a
//! truncated file is rejected rather than silently shortened.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use crate::imagery::{ImageryConfig, MentalImage, StatementWindow};
use crate::lzw::{LzwTree, NodeId};
use crate::mlp::{Bias, Perceptron};
use crate::qengine::{Engine, EngineConfig, Previous, State, StateKey};
use crate::triplet::Triplet;
use crate::{Error, Result};

pub const SOUL_VERSION: u32 = 1;
const MAGIC: &str = "SAMU-SOUL";

/// Everything needed to rebuild an agent's learner.
#[derive(Clone, Debug)]
pub struct Soul {
    pub engine: EngineConfig,
    pub imagery: ImageryConfig,
    /// Settings owned by the caller (agent name, caregiver, ...).
    pub extra: Vec<(String, String)>,
    pub n_in: usize,
    pub perceptrons: Vec<(Triplet, Perceptron)>,
    pub counts: Vec<(StateKey, Triplet, u64)>,
    pub previous: Option<Previous>,
    pub lzw: Option<LzwTree>,
    pub window: Vec<Triplet>,
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn push_row(out: &mut String, values: &[f64]) {
    let row: Vec<String> = values.iter().map(|v| num(*v)).collect();
    out.push_str(&row.join(" "));
    out.push('\n');
}

impl Soul {
    /// A soul with no learned state.
    pub fn empty(engine: EngineConfig, imagery: ImageryConfig) -> Self {
        Soul {
            n_in: imagery.input_size(),
            engine,
            imagery,
            extra: Vec::new(),
            perceptrons: Vec::new(),
            counts: Vec::new(),
            previous: None,
            lzw: None,
            window: Vec::new(),
        }
    }

    pub fn capture(engine: &Engine, imagery: &ImageryConfig, window: &StatementWindow) -> Self {
        let mut perceptrons: Vec<(Triplet, Perceptron)> = engine
            .q()
            .perceptrons()
            .map(|(t, p)| (t.clone(), p.clone()))
            .collect();
        perceptrons.sort_by(|a, b| a.0.cmp(&b.0));
        Soul {
            engine: engine.config().clone(),
            imagery: imagery.clone(),
            extra: Vec::new(),
            n_in: engine.q().n_in(),
            perceptrons,
            counts: engine.counts(),
            previous: engine.previous().cloned(),
            lzw: engine.lzw().cloned(),
            window: window.iter().cloned().collect(),
        }
    }

    pub fn extra(&self, key: &str) -> Option<&str> {
        self.extra.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn set_extra(&mut self, key: &str, value: &str) {
        match self.extra.iter_mut().find(|(k, _)| k == key) {
            Some(slot) => slot.1 = value.to_owned(),
            None => self.extra.push((key.to_owned(), value.to_owned())),
        }
    }

    /// Rebuilds the engine and the statement window.
    pub fn restore(&self) -> Result<(Engine, StatementWindow)> {
        let mut engine = Engine::neural(self.engine.clone(), self.n_in)?;
        for (t, p) in &self.perceptrons {
            engine.insert_perceptron(t.clone(), p.clone())?;
        }
        engine.restore(self.counts.clone(), self.previous.clone(), self.lzw.clone());
        let mut window = self.imagery.new_window();
        for t in &self.window {
            window.push(t.clone());
        }
        Ok((engine, window))
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{MAGIC} {SOUL_VERSION}\n");
        let mut pairs = self.engine.to_pairs();
        pairs.extend(self.imagery.to_pairs());
        pairs.extend(self.extra.iter().cloned());
        pairs.push(("n_in".into(), self.n_in.to_string()));
        pairs.push(("actions".into(), self.perceptrons.len().to_string()));
        let line: Vec<String> = pairs.iter().map(|(k, v)| format!("{k}={v}")).collect();
        out.push_str(&line.join(" "));
        out.push('\n');

        for (t, p) in &self.perceptrons {
            let _ = writeln!(out, "ACTION {t} {} {}", p.n_in(), p.n_hidden());
            for row in p.weights_ih().chunks(p.n_in()) {
                push_row(&mut out, row);
            }
            push_row(&mut out, p.weights_ho());
            if let Some(b) = p.bias() {
                let mut row = b.hidden.clone();
                row.push(b.output);
                out.push_str("BIAS ");
                push_row(&mut out, &row);
            }
            out.push_str("END\n");
        }

        if !self.counts.is_empty() {
            let _ = writeln!(out, "FREQ {}", self.counts.len());
            for (key, t, n) in &self.counts {
                let _ = writeln!(out, "{key:016x} {t} {n}");
            }
        }
        if let Some(prev) = &self.previous {
            let reward = prev.reward.map_or_else(|| "none".to_owned(), num);
            let img = &prev.state.image;
            let _ = writeln!(
                out,
                "PREV {:016x} {reward} {} {} {}",
                prev.state.key,
                img.rows(),
                img.cols(),
                prev.action
            );
            push_row(&mut out, img.cells());
        }
        if let Some(tree) = &self.lzw {
            let nodes = tree.export_nodes();
            let _ = writeln!(out, "LZW {} {} {}", tree.max_depth(), tree.cursor(), nodes.len());
            for (parent, t) in nodes {
                let _ = writeln!(out, "{parent} {t}");
            }
        }
        if !self.window.is_empty() {
            let _ = writeln!(out, "WINDOW {}", self.window.len());
            for t in &self.window {
                let _ = writeln!(out, "{t}");
            }
        }
        out
    }

    pub fn parse(text: &str, origin: &str) -> Result<Soul> {
        let mut lines = Lines {
            inner: text.lines().enumerate(),
            origin,
            line: 0,
        };

        let header = lines.next()?;
        let mut parts = header.split_whitespace();
        if parts.next() != Some(MAGIC) {
            return Err(lines.err("not a soul file (missing SAMU-SOUL header)"));
        }
        let version = parts.next().unwrap_or("");
        if version.parse::<u32>().ok() != Some(SOUL_VERSION) {
            return Err(Error::Version {
                found: version.to_owned(),
                expected: SOUL_VERSION,
            });
        }

        let mut engine = EngineConfig::default();
        let mut imagery = ImageryConfig::default();
        let mut extra = Vec::new();
        let mut n_in = None;
        let mut actions = None;
        let params = lines.next()?;
        for pair in params.split_whitespace() {
            let (k, v) = pair
                .split_once('=')
                .ok_or_else(|| lines.err(format!("expected key=value, got {pair:?}")))?;
            let known = |r: Result<bool>| r.map_err(|e| lines.err(e.to_string()));
            match k {
                "n_in" => n_in = Some(lines.number::<usize>(v)?),
                "actions" => actions = Some(lines.number::<usize>(v)?),
                _ if known(engine.set(k, v))? => {}
                _ if known(imagery.set(k, v))? => {}
                _ => extra.push((k.to_owned(), v.to_owned())),
            }
        }
        let n_in = n_in.ok_or_else(|| lines.err("missing n_in"))?;
        let actions = actions.ok_or_else(|| lines.err("missing actions count"))?;

        let mut perceptrons = Vec::with_capacity(actions);
        for _ in 0..actions {
            perceptrons.push(lines.perceptron(engine.mlp.learning_rate)?);
        }

        let mut soul = Soul {
            engine,
            imagery,
            extra,
            n_in,
            perceptrons,
            counts: Vec::new(),
            previous: None,
            lzw: None,
            window: Vec::new(),
        };

        while let Some(line) = lines.next_opt() {
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            match fields[0] {
                "FREQ" if fields.len() == 2 => {
                    let n: usize = lines.number(fields[1])?;
                    for _ in 0..n {
                        let entry = lines.next()?;
                        let f: Vec<&str> = entry.split_whitespace().collect();
                        if f.len() != 5 {
                            return Err(lines.err("expected `<key> S P O <count>`"));
                        }
                        let key = lines.hex(f[0])?;
                        let t = lines.triplet(&f[1..4])?;
                        soul.counts.push((key, t, lines.number(f[4])?));
                    }
                }
                "PREV" if fields.len() == 8 => {
                    let key = lines.hex(fields[1])?;
                    let reward = match fields[2] {
                        "none" => None,
                        r => Some(lines.number::<f64>(r)?),
                    };
                    let rows: usize = lines.number(fields[3])?;
                    let cols: usize = lines.number(fields[4])?;
                    let action = lines.triplet(&fields[5..8])?;
                    let cells = lines.row(rows * cols)?;
                    let image = MentalImage::from_cells(rows, cols, cells).map_err(|e| lines.err(e.to_string()))?;
                    soul.previous = Some(Previous {
                        state: State { image, key },
                        reward,
                        action,
                    });
                }
                "LZW" if fields.len() == 4 => {
                    let depth: usize = lines.number(fields[1])?;
                    let cursor: NodeId = lines.number(fields[2])?;
                    let n: usize = lines.number(fields[3])?;
                    let mut nodes = Vec::with_capacity(n);
                    for _ in 0..n {
                        let entry = lines.next()?;
                        let f: Vec<&str> = entry.split_whitespace().collect();
                        if f.len() != 4 {
                            return Err(lines.err("expected `<parent> S P O`"));
                        }
                        nodes.push((lines.number(f[0])?, lines.triplet(&f[1..4])?));
                    }
                    let tree = LzwTree::from_nodes(depth, nodes, cursor).map_err(|e| lines.err(e.to_string()))?;
                    soul.lzw = Some(tree);
                }
                "WINDOW" if fields.len() == 2 => {
                    let n: usize = lines.number(fields[1])?;
                    for _ in 0..n {
                        let entry = lines.next()?;
                        let f: Vec<&str> = entry.split_whitespace().collect();
                        soul.window.push(lines.triplet(&f)?);
                    }
                }
                _ => return Err(lines.err(format!("unexpected line {line:?}"))),
            }
        }
        Ok(soul)
    }
}

struct Lines<'a, I> {
    inner: I,
    origin: &'a str,
    line: usize,
}

impl<'a, I: Iterator<Item = (usize, &'a str)>> Lines<'a, I> {
    fn err(&self, message: impl Into<String>) -> Error {
        Error::parse(self.origin, self.line, message)
    }

    fn next_opt(&mut self) -> Option<&'a str> {
        self.inner.next().map(|(i, l)| {
            self.line = i + 1;
            l
        })
    }

    fn next(&mut self) -> Result<&'a str> {
        match self.next_opt() {
            Some(l) => Ok(l),
            None => {
                self.line += 1;
                Err(self.err("unexpected end of file (truncated soul?)"))
            }
        }
    }

    fn number<T: std::str::FromStr>(&self, s: &str) -> Result<T> {
        s.parse().map_err(|_| self.err(format!("bad number {s:?}")))
    }

    fn hex(&self, s: &str) -> Result<u64> {
        u64::from_str_radix(s, 16).map_err(|_| self.err(format!("bad state key {s:?}")))
    }

    fn triplet(&self, f: &[&str]) -> Result<Triplet> {
        match f {
            [s, p, o] => Triplet::new(s, p, o).map_err(|e| self.err(e.to_string())),
            _ => Err(self.err("expected a triplet `S P O`")),
        }
    }

    fn row(&mut self, expected: usize) -> Result<Vec<f64>> {
        let line = self.next()?;
        let row: Vec<f64> = line
            .split_whitespace()
            .map(|v| self.number(v))
            .collect::<Result<_>>()?;
        if row.len() != expected {
            return Err(self.err(format!("expected {expected} values, found {}", row.len())));
        }
        Ok(row)
    }

    fn perceptron(&mut self, learning_rate: f64) -> Result<(Triplet, Perceptron)> {
        let head = self.next()?;
        let f: Vec<&str> = head.split_whitespace().collect();
        if f.len() != 6 || f[0] != "ACTION" {
            return Err(self.err("expected `ACTION S P O n_in n_hidden`"));
        }
        let t = self.triplet(&f[1..4])?;
        let n_in: usize = self.number(f[4])?;
        let n_hidden: usize = self.number(f[5])?;
        let mut w_ih = Vec::with_capacity(n_in * n_hidden);
        for _ in 0..n_hidden {
            w_ih.extend(self.row(n_in)?);
        }
        let w_ho = self.row(n_hidden)?;
        let mut bias = None;
        let mut end = self.next()?;
        if let Some(rest) = end.strip_prefix("BIAS ") {
            let mut values: Vec<f64> = rest
                .split_whitespace()
                .map(|v| self.number(v))
                .collect::<Result<_>>()?;
            if values.len() != n_hidden + 1 {
                return Err(self.err(format!("expected {} bias values", n_hidden + 1)));
            }
            let output = values.pop().expect("length checked");
            bias = Some(Bias { hidden: values, output });
            end = self.next()?;
        }
        if end.trim() != "END" {
            return Err(self.err("expected END after perceptron weights"));
        }
        let p = Perceptron::from_parts(n_in, n_hidden, w_ih, w_ho, bias, learning_rate)
            .map_err(|e| self.err(e.to_string()))?;
        Ok((t, p))
    }
}

/// Writes the soul next to `path` and renames it into place, so a reader
/// never sees a half-written file.
pub fn save_soul(path: &Path, soul: &Soul) -> Result<()> {
    let text = soul.to_text();
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = std::path::PathBuf::from(tmp);
    let write = || -> std::io::Result<()> {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(text.as_bytes())?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    };
    write().map_err(|e| Error::io(path, e))
}

pub fn load_soul(path: &Path) -> Result<Soul> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Soul::parse(&text, &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mlp::MlpConfig;
    use crate::qengine::Narrowing;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn t(s: &str, p: &str, o: &str) -> Triplet {
        Triplet::new(s, p, o).unwrap()
    }

    fn small_imagery() -> ImageryConfig {
        ImageryConfig {
            window: 3,
            ..ImageryConfig::default()
        }
    }

    fn trained(config: EngineConfig) -> (Engine, StatementWindow) {
        let imagery = small_imagery();
        let mut engine = Engine::neural(config, imagery.input_size()).unwrap();
        let mut window = imagery.new_window();
        let stream = [t("I", "love", "Samu"), t("sky", "is", "blue"), t("car", "is", "mine")];
        for i in 0..20 {
            let x = &stream[i % 3];
            window.push(x.clone());
            engine.step(imagery.render(&window), x).unwrap();
        }
        (engine, window)
    }

    fn engine_config() -> EngineConfig {
        EngineConfig {
            mlp: MlpConfig {
                hidden: 4,
                ..MlpConfig::default()
            },
            narrowing: Narrowing::Lzw,
            ..EngineConfig::default()
        }
    }

    #[test]
    fn roundtrip_preserves_forward_outputs() {
        let (engine, window) = trained(engine_config());
        let soul = Soul::capture(&engine, &small_imagery(), &window);
        let back = Soul::parse(&soul.to_text(), "mem").unwrap();
        let (restored, _) = back.restore().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let x: Vec<f64> = (0..800).map(|_| rng.gen::<f64>()).collect();
            for (a, p) in &soul.perceptrons {
                let q = restored.q().perceptron(a).unwrap();
                let d = (p.forward(&x).unwrap() - q.forward(&x).unwrap()).abs();
                assert!(d <= 1e-12, "{a}: {d}");
            }
        }
        assert_eq!(back.to_text(), soul.to_text());
        assert_eq!(restored.counts(), engine.counts());
        assert_eq!(restored.previous(), engine.previous());
        assert_eq!(restored.lzw().unwrap().dump(), engine.lzw().unwrap().dump());
    }

    #[test]
    fn bias_weights_roundtrip() {
        let mut config = engine_config();
        config.mlp.bias = true;
        let (engine, window) = trained(config);
        let soul = Soul::capture(&engine, &small_imagery(), &window);
        let text = soul.to_text();
        assert!(text.contains("\nBIAS "));
        let back = Soul::parse(&text, "mem").unwrap();
        for ((a, p), (b, q)) in soul.perceptrons.iter().zip(&back.perceptrons) {
            assert_eq!(a, b);
            assert_eq!(p, q);
        }
    }

    #[test]
    fn empty_soul_is_header_only() {
        let soul = Soul::empty(EngineConfig::default(), ImageryConfig::default());
        let text = soul.to_text();
        assert_eq!(text.lines().count(), 2);
        assert!(text.starts_with("SAMU-SOUL 1\n"));
        let back = Soul::parse(&text, "mem").unwrap();
        let (engine, window) = back.restore().unwrap();
        assert_eq!(engine.known_actions(), 0);
        assert!(window.is_empty());
    }

    #[test]
    fn extra_settings_survive() {
        let mut soul = Soul::empty(EngineConfig::default(), ImageryConfig::default());
        soul.set_extra("name", "Judah");
        soul.set_extra("name", "Samu");
        let back = Soul::parse(&soul.to_text(), "mem").unwrap();
        assert_eq!(back.extra("name"), Some("Samu"));
    }

    #[test]
    fn rejects_wrong_version() {
        let err = Soul::parse("SAMU-SOUL 2\nn_in=800 actions=0\n", "mem").unwrap_err();
        assert!(matches!(err, Error::Version { .. }), "{err}");
        assert!(Soul::parse("hello\n", "mem").is_err());
    }

    #[test]
    fn truncation_is_a_parse_error() {
        let (engine, window) = trained(engine_config());
        let text = Soul::capture(&engine, &small_imagery(), &window).to_text();
        let lines: Vec<&str> = text.lines().collect();
        for cut in [3, 8, lines.len() - 1] {
            let truncated = lines[..cut].join("\n");
            match Soul::parse(&truncated, "cut.soul") {
                Err(Error::Parse { origin, line, .. }) => {
                    assert_eq!(origin, "cut.soul");
                    assert!(line >= 1);
                }
                other => panic!("cut at {cut}: {other:?}"),
            }
        }
    }

    #[test]
    fn atomic_save_and_load() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("samu.soul.txt");
        let (engine, window) = trained(engine_config());
        let soul = Soul::capture(&engine, &small_imagery(), &window);
        save_soul(&path, &soul).unwrap();
        save_soul(&path, &soul).unwrap();
        let names: Vec<_> = fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
        assert_eq!(names.len(), 1, "temp file left behind: {names:?}");
        let back = load_soul(&path).unwrap();
        assert_eq!(back.to_text(), soul.to_text());
        assert!(matches!(load_soul(&dir.path().join("missing")), Err(Error::Io { .. })));
    }
}
