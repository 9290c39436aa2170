//! Triplet extraction from parser linkages.
//!
//! The engine does not parse English itself. It consumes linkages (labelled
//! links between word positions, as produced by a link or dependency parser)
//! in a small text interchange format:
//!
//! ```text
//! #S I love Samu
//! #L I love Samu
//! Sp*i 0 1 love
//! Os 1 2 Samu
//!
//! ```
//!
//! `#S` opens a record for one sentence, each `#L` line starts a linkage and
//! lists its words, and every following line is a link
//! `<label> <left> <right> <link_word>`. A blank line ends the record.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::triplet::Triplet;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Link {
    pub label: String,
    pub left: usize,
    pub right: usize,
    /// The word the parser associates with the link itself.
    pub link_word: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Linkage {
    pub words: Vec<String>,
    pub links: Vec<Link>,
}

impl Linkage {
    pub fn validate(&self) -> std::result::Result<(), String> {
        for link in &self.links {
            if link.left >= link.right {
                return Err(format!("link {} has left {} >= right {}", link.label, link.left, link.right));
            }
            if link.right >= self.words.len() {
                return Err(format!(
                    "link {} index {} out of range for {} words",
                    link.label,
                    link.right,
                    self.words.len()
                ));
            }
        }
        Ok(())
    }
}

/// One parsed sentence and all of its alternative linkages.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinkageRecord {
    pub sentence: String,
    pub linkages: Vec<Linkage>,
}

/// Walks the links in order. An `S*` link proposes subject and predicate
/// (the link word, or the right-hand word as an alternative); an `O*` link
/// sets the object and emits a triplet when its left word is one of the two
/// predicate candidates.
pub fn extract_triplets(linkage: &Linkage) -> Vec<Triplet> {
    let mut out = Vec::new();
    let mut subject: Option<&str> = None;
    let mut predicate: Option<&str> = None;
    let mut alter_predicate: Option<&str> = None;
    let word = |i: usize| linkage.words.get(i).map(String::as_str);

    for link in &linkage.links {
        if link.label.starts_with('S') {
            predicate = Some(&link.link_word);
            alter_predicate = word(link.right);
            subject = word(link.left);
        }
        if link.label.starts_with('O') {
            let object = word(link.right);
            let left = word(link.left);
            if left.is_some() && predicate == left {
                // keep predicate
            } else if left.is_some() && alter_predicate == left {
                predicate = alter_predicate;
            } else {
                continue;
            }
            if let (Some(s), Some(p), Some(o)) = (subject, predicate, object) {
                if let Ok(t) = Triplet::new(s, p, o) {
                    out.push(t);
                }
            }
        }
    }
    out
}

/// Triplets of a whole sentence: every linkage in order, duplicates removed.
pub fn sentence_triplets(record: &LinkageRecord) -> Vec<Triplet> {
    let mut out: Vec<Triplet> = Vec::new();
    for t in record.linkages.iter().flat_map(extract_triplets) {
        if !out.contains(&t) {
            out.push(t);
        }
    }
    out
}

pub fn parse_linkage_records(text: &str, origin: &str) -> Result<Vec<LinkageRecord>> {
    let mut records = Vec::new();
    let mut current: Option<LinkageRecord> = None;

    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() {
            records.extend(current.take());
            continue;
        }
        if let Some(sentence) = line.strip_prefix("#S") {
            if current.is_some() {
                return Err(Error::parse(origin, lineno, "record not terminated by a blank line"));
            }
            current = Some(LinkageRecord {
                sentence: sentence.trim().to_owned(),
                linkages: Vec::new(),
            });
            continue;
        }
        let Some(record) = current.as_mut() else {
            return Err(Error::parse(origin, lineno, "expected `#S <sentence>`"));
        };
        if let Some(words) = line.strip_prefix("#L") {
            let mut words: Vec<String> = words.split_whitespace().map(str::to_owned).collect();
            if words.is_empty() {
                words = record.sentence.split_whitespace().map(str::to_owned).collect();
            }
            record.linkages.push(Linkage {
                words,
                links: Vec::new(),
            });
            continue;
        }
        let Some(linkage) = record.linkages.last_mut() else {
            return Err(Error::parse(origin, lineno, "link before any `#L` line"));
        };
        let fields: Vec<&str> = line.split_whitespace().collect();
        let [label, left, right, link_word] = fields[..] else {
            return Err(Error::parse(
                origin,
                lineno,
                format!("expected `<label> <left> <right> <link_word>`, found {} fields", fields.len()),
            ));
        };
        let index = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| Error::parse(origin, lineno, format!("bad word index {s:?}")))
        };
        let link = Link {
            label: label.to_owned(),
            left: index(left)?,
            right: index(right)?,
            link_word: link_word.to_owned(),
        };
        linkage.links.push(link);
        linkage.validate().map_err(|m| Error::parse(origin, lineno, m))?;
    }
    records.extend(current);
    Ok(records)
}

pub fn read_linkage_file(path: &Path) -> Result<Vec<LinkageRecord>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_linkage_records(&text, &path.display().to_string())
}

pub fn format_linkage_records(records: &[LinkageRecord]) -> String {
    let mut out = String::new();
    for record in records {
        let _ = writeln!(out, "#S {}", record.sentence);
        for linkage in &record.linkages {
            let _ = writeln!(out, "#L {}", linkage.words.join(" "));
            for l in &linkage.links {
                let _ = writeln!(out, "{} {} {} {}", l.label, l.left, l.right, l.link_word);
            }
        }
        out.push('\n');
    }
    out
}

pub fn write_linkage_file(path: &Path, records: &[LinkageRecord]) -> Result<()> {
    fs::write(path, format_linkage_records(records)).map_err(|e| Error::io(path, e))
}

/// Converts CoNLL-U dependency parses into linkage records.
///
/// `nsubj`/`nsubj:pass`/`csubj` become `Ss` links from the subject to its
/// predicate (the copula when the head has one), and `obj`/`iobj` or a
/// copular head become `Os` links. Links that would point leftwards are
/// dropped, since the extractor reads the subject from the left end.
pub fn conllu_to_records(text: &str, origin: &str) -> Result<Vec<LinkageRecord>> {
    struct Token {
        form: String,
        head: usize,
        deprel: String,
    }

    fn finish(sentence: Option<String>, tokens: &mut Vec<Token>, out: &mut Vec<LinkageRecord>) {
        if tokens.is_empty() {
            return;
        }
        let words: Vec<String> = tokens.iter().map(|t| t.form.clone()).collect();
        let copula_of = |head: usize| {
            tokens
                .iter()
                .position(|t| t.head == head + 1 && t.deprel == "cop")
        };
        let mut links = Vec::new();
        for (i, tok) in tokens.iter().enumerate() {
            if tok.head == 0 {
                continue;
            }
            let head = tok.head - 1;
            let rel = tok.deprel.split(':').next().unwrap_or("");
            match rel {
                "nsubj" | "csubj" => {
                    let pred = copula_of(head).unwrap_or(head);
                    if i < pred {
                        links.push(Link {
                            label: "Ss".into(),
                            left: i,
                            right: pred,
                            link_word: words[pred].clone(),
                        });
                    }
                }
                "obj" | "iobj" if head < i => links.push(Link {
                    label: "Os".into(),
                    left: head,
                    right: i,
                    link_word: words[i].clone(),
                }),
                "cop" if i < head => links.push(Link {
                    label: "Os".into(),
                    left: i,
                    right: head,
                    link_word: words[head].clone(),
                }),
                _ => {}
            }
        }
        links.sort_by_key(|l| (l.left, l.right));
        let sentence = sentence.unwrap_or_else(|| words.join(" "));
        out.push(LinkageRecord {
            sentence,
            linkages: vec![Linkage { words, links }],
        });
        tokens.clear();
    }

    let mut out = Vec::new();
    let mut tokens = Vec::new();
    let mut sentence: Option<String> = None;
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            finish(sentence.take(), &mut tokens, &mut out);
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some(t) = comment.trim().strip_prefix("text =") {
                sentence = Some(t.trim().to_owned());
            }
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 10 {
            return Err(Error::parse(origin, idx + 1, format!("expected 10 columns, found {}", cols.len())));
        }
        // multiword ranges and empty nodes carry no surface word of their own
        if cols[0].contains('-') || cols[0].contains('.') {
            continue;
        }
        let head = cols[6]
            .parse::<usize>()
            .map_err(|_| Error::parse(origin, idx + 1, format!("bad head {:?}", cols[6])))?;
        tokens.push(Token {
            form: cols[1].to_owned(),
            head,
            deprel: cols[7].to_owned(),
        });
    }
    finish(sentence, &mut tokens, &mut out);
    Ok(out)
}

/// Lowercased, whitespace-collapsed sentence without trailing punctuation;
/// the key under which sentences are looked up.
pub fn normalize_sentence(sentence: &str) -> String {
    let joined = sentence.split_whitespace().collect::<Vec<_>>().join(" ");
    joined
        .trim_end_matches(['.', '!', '?', ';', ':'])
        .trim_end()
        .to_lowercase()
}

/// Sentence-to-triplets table built from linkage records.
#[derive(Clone, Debug, Default)]
pub struct Lexicon {
    entries: HashMap<String, Vec<Triplet>>,
}

const STORY_LINKAGES: &str = include_str!("../fixtures/story.linkage");
const INTRO_LINKAGES: &str = include_str!("../fixtures/intro.linkage");

impl Lexicon {
    /// The linkages that ship with the crate (the seven-sentence story and
    /// the ten-sentence introduction dialogue).
    pub fn bundled() -> Self {
        let mut lexicon = Lexicon::default();
        for (text, origin) in [(STORY_LINKAGES, "story.linkage"), (INTRO_LINKAGES, "intro.linkage")] {
            let records = parse_linkage_records(text, origin).expect("bundled linkage fixtures are well-formed");
            lexicon.add_records(&records);
        }
        lexicon
    }

    /// Adds records; a sentence already present keeps its first entry.
    pub fn add_records(&mut self, records: &[LinkageRecord]) {
        for record in records {
            self.entries
                .entry(normalize_sentence(&record.sentence))
                .or_insert_with(|| sentence_triplets(record));
        }
    }

    pub fn add_file(&mut self, path: &Path) -> Result<()> {
        let records = read_linkage_file(path)?;
        self.add_records(&records);
        Ok(())
    }

    /// Triplets for `sentence`, empty when the sentence is unknown or yields none.
    pub fn triplets_for(&self, sentence: &str) -> &[Triplet] {
        self.entries
            .get(&normalize_sentence(sentence))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

pub fn bundled_story_records() -> Vec<LinkageRecord> {
    parse_linkage_records(STORY_LINKAGES, "story.linkage").expect("bundled fixture")
}

pub fn bundled_intro_records() -> Vec<LinkageRecord> {
    parse_linkage_records(INTRO_LINKAGES, "intro.linkage").expect("bundled fixture")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn t(s: &str, p: &str, o: &str) -> Triplet {
        Triplet::new(s, p, o).unwrap()
    }

    fn link(label: &str, left: usize, right: usize, word: &str) -> Link {
        Link {
            label: label.into(),
            left,
            right,
            link_word: word.into(),
        }
    }

    fn words(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_owned).collect()
    }

    #[test]
    fn i_love_samu() {
        let linkage = Linkage {
            words: words("I love Samu"),
            links: vec![link("Ss", 0, 1, "love"), link("Os", 1, 2, "Samu")],
        };
        assert_eq!(extract_triplets(&linkage), vec![t("I", "love", "Samu")]);
    }

    #[test]
    fn no_object_link_no_triplet() {
        let linkage = Linkage {
            words: words("the sky is blue"),
            links: vec![link("Ds", 0, 1, "the"), link("Ss", 1, 2, "is"), link("Pa", 2, 3, "blue")],
        };
        assert!(extract_triplets(&linkage).is_empty());
    }

    #[test]
    fn squirrel_fixture() {
        // S link squirrel->has with link word "become": p=become, alternative
        // p=has, s=squirrel; the O link become->visitor has left word equal
        // to p, so (squirrel, become, visitor) is emitted.
        let records = bundled_story_records();
        assert_eq!(sentence_triplets(&records[0]), vec![t("squirrel", "become", "visitor")]);
    }

    #[test]
    fn alternate_predicate_is_used() {
        // link word does not match the O link's left word, the S link's right
        // word does
        let linkage = Linkage {
            words: words("cats chase mice"),
            links: vec![link("Sp", 0, 1, "LEFT-WALL"), link("Op", 1, 2, "mice")],
        };
        assert_eq!(extract_triplets(&linkage), vec![t("cats", "chase", "mice")]);
    }

    #[test]
    fn duplicates_within_a_linkage_are_kept() {
        let linkage = Linkage {
            words: words("I love Samu"),
            links: vec![link("Ss", 0, 1, "love"), link("Os", 1, 2, "Samu"), link("Ox", 1, 2, "Samu")],
        };
        assert_eq!(extract_triplets(&linkage).len(), 2);
    }

    #[test]
    fn duplicates_across_linkages_are_dropped() {
        let records = bundled_story_records();
        let samu = records.iter().find(|r| r.sentence == "I love Samu").unwrap();
        assert_eq!(samu.linkages.len(), 2);
        assert_eq!(sentence_triplets(samu), vec![t("I", "love", "Samu")]);
    }

    #[test]
    fn every_bundled_sentence_yields_one_triplet() {
        for record in bundled_story_records().iter().chain(&bundled_intro_records()) {
            assert_eq!(sentence_triplets(record).len(), 1, "{}", record.sentence);
        }
        assert_eq!(bundled_story_records().len(), 7);
        assert_eq!(bundled_intro_records().len(), 10);
    }

    #[test]
    fn empty_file_parses_to_nothing() {
        assert!(parse_linkage_records("", "x").unwrap().is_empty());
    }

    #[test]
    fn one_record_two_links() {
        let text = "#S I love Samu\n#L I love Samu\nSs 0 1 love\nOs 1 2 Samu\n\n";
        let records = parse_linkage_records(text, "x").unwrap();
        assert_eq!(records.len(), 1);
        assert_eq!(records[0].linkages[0].links.len(), 2);
    }

    #[test]
    fn missing_words_default_to_sentence_tokens() {
        let records = parse_linkage_records("#S I love Samu\n#L\nSs 0 1 love\n", "x").unwrap();
        assert_eq!(records[0].linkages[0].words, words("I love Samu"));
    }

    #[test]
    fn syntax_errors_carry_line_numbers() {
        let cases = [
            ("Ss 0 1 love\n", 1),
            ("#S a b\n#L a b\nSs 0 x b\n", 3),
            ("#S a b\n#L a b\nSs 1 0 b\n", 3),
            ("#S a b\n#L a b\nSs 0 5 b\n", 3),
            ("#S a b\nSs 0 1 b\n", 2),
            ("#S a b\n#S c d\n", 2),
        ];
        for (text, expected) in cases {
            match parse_linkage_records(text, "f") {
                Err(Error::Parse { line, .. }) => assert_eq!(line, expected, "{text:?}"),
                other => panic!("{text:?}: {other:?}"),
            }
        }
    }

    #[test]
    fn conllu_adapter() {
        let conllu = "# text = I love Samu\n\
            1\tI\tI\tPRON\t_\t_\t2\tnsubj\t_\t_\n\
            2\tlove\tlove\tVERB\t_\t_\t0\troot\t_\t_\n\
            3\tSamu\tSamu\tPROPN\t_\t_\t2\tobj\t_\t_\n\
            \n\
            # text = The sky is blue\n\
            1\tThe\tthe\tDET\t_\t_\t2\tdet\t_\t_\n\
            2\tsky\tsky\tNOUN\t_\t_\t4\tnsubj\t_\t_\n\
            3\tis\tbe\tAUX\t_\t_\t4\tcop\t_\t_\n\
            4\tblue\tblue\tADJ\t_\t_\t0\troot\t_\t_\n";
        let records = conllu_to_records(conllu, "x").unwrap();
        assert_eq!(records.len(), 2);
        assert_eq!(records[0].sentence, "I love Samu");
        assert_eq!(sentence_triplets(&records[0]), vec![t("I", "love", "Samu")]);
        assert_eq!(sentence_triplets(&records[1]), vec![t("sky", "is", "blue")]);
    }

    #[test]
    fn lexicon_lookup_is_normalized() {
        let lexicon = Lexicon::bundled();
        assert_eq!(lexicon.triplets_for("i LOVE samu."), &[t("I", "love", "Samu")]);
        assert!(lexicon.triplets_for("I am Nandi").is_empty());
    }

    fn token() -> impl Strategy<Value = String> {
        "[A-Za-z][A-Za-z*]{0,5}"
    }

    fn record() -> impl Strategy<Value = LinkageRecord> {
        let linkage = proptest::collection::vec(token(), 2..6).prop_flat_map(|words| {
            let n = words.len();
            let link = (0..n - 1, token(), token()).prop_flat_map(move |(left, label, word)| {
                (left + 1..n).prop_map(move |right| Link {
                    label: label.clone(),
                    left,
                    right,
                    link_word: word.clone(),
                })
            });
            proptest::collection::vec(link, 0..4).prop_map(move |links| Linkage {
                words: words.clone(),
                links,
            })
        });
        ("[A-Za-z][A-Za-z ,']{0,20}[A-Za-z]", proptest::collection::vec(linkage, 1..3))
            .prop_map(|(sentence, linkages)| LinkageRecord { sentence, linkages })
    }

    proptest! {
        #[test]
        fn format_then_parse_is_identity(records in proptest::collection::vec(record(), 0..4)) {
            let text = format_linkage_records(&records);
            prop_assert_eq!(parse_linkage_records(&text, "p").unwrap(), records);
        }

        #[test]
        fn extraction_bounded_and_grounded(rec in record()) {
            for linkage in &rec.linkages {
                let out = extract_triplets(linkage);
                let o_links = linkage.links.iter().filter(|l| l.label.starts_with('O')).count();
                prop_assert!(out.len() <= o_links);
                for tr in &out {
                    for tok in [tr.s(), tr.p(), tr.o()] {
                        let known = linkage.words.iter().any(|w| w == tok)
                            || linkage.links.iter().any(|l| l.link_word == tok);
                        prop_assert!(known);
                    }
                }
                prop_assert_eq!(extract_triplets(linkage), out);
            }
        }
    }
}
