//! Corpus ingestion, metadata/body splitting, split assignment and pair
//! construction.
//!
//! Each act's introductory metadata block becomes the query and the
//! remaining legislative text the document. Split assignment is keyed by
//! act id alone, so every language version of an act lands in the same split.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hashing::seeded_hash;
use crate::io::read_jsonl;

/// The official EU language codes.
pub const OFFICIAL_LANGUAGES: &[&str] = &[
    "bg", "cs", "da", "de", "el", "en", "es", "et", "fi", "fr", "ga", "hr", "hu", "it", "lt", "lv",
    "mt", "nl", "pl", "pt", "ro", "sk", "sl", "sv",
];

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid language code {0:?}: expected two ASCII letters")]
    InvalidLanguage(String),
    #[error("invalid split ratios: {0}")]
    InvalidRatios(String),
    #[error("duplicate act id {0:?}")]
    DuplicateActId(String),
    #[error("invalid boundary rule {index}: {message}")]
    InvalidRule { index: usize, message: String },
    #[error("invalid rules file: {0}")]
    RulesFormat(#[from] serde_json::Error),
}

/// Reasons an act cannot be split into query and document.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SplitError {
    #[error("act {0} has no text")]
    EmptyText(String),
    #[error("act {0}: metadata boundary at start of text leaves an empty query")]
    EmptyQuery(String),
    #[error("act {0}: nothing left after the metadata block")]
    EmptyDocument(String),
}

/// A skipped record or act, reported without aborting the batch.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub source: String,
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "{}:{}: {}", self.source, line, self.message),
            None => write!(f, "{}: {}", self.source, self.message),
        }
    }
}

/// Lowercase two-letter language code.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Language(String);

impl Language {
    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn is_official(&self) -> bool {
        OFFICIAL_LANGUAGES.contains(&self.0.as_str())
    }
}

impl FromStr for Language {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let code = s.trim();
        if code.len() == 2 && code.bytes().all(|b| b.is_ascii_alphabetic()) {
            Ok(Self(code.to_ascii_lowercase()))
        } else {
            Err(CorpusError::InvalidLanguage(s.to_owned()))
        }
    }
}

impl TryFrom<String> for Language {
    type Error = CorpusError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<Language> for String {
    fn from(l: Language) -> Self {
        l.0
    }
}

impl fmt::Display for Language {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Page {
    pub page: u32,
    pub text: String,
}

/// One legislative act in one language.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LegalAct {
    pub celex_id: String,
    pub language: Language,
    pub year: i32,
    pub pages: Vec<Page>,
}

#[derive(Deserialize)]
struct RawAct {
    celex_id: String,
    language: String,
    year: i32,
    pages: Vec<Page>,
}

impl LegalAct {
    fn from_raw(raw: RawAct) -> Result<Self, String> {
        if raw.celex_id.trim().is_empty() {
            return Err("empty celex_id".into());
        }
        let language = raw.language.parse::<Language>().map_err(|e| e.to_string())?;
        if raw.pages.is_empty() {
            return Err(format!("act {} has no pages", raw.celex_id));
        }
        if raw.pages.windows(2).any(|w| w[0].page >= w[1].page) {
            return Err(format!("act {}: page numbers not strictly increasing", raw.celex_id));
        }
        Ok(Self { celex_id: raw.celex_id, language, year: raw.year, pages: raw.pages })
    }

    /// Pages joined by newlines.
    pub fn full_text(&self) -> String {
        self.pages.iter().map(|p| p.text.as_str()).collect::<Vec<_>>().join("\n")
    }
}

/// Acts parsed from corpus files, plus per-line diagnostics for skipped records.
#[derive(Debug, Default)]
pub struct LoadedCorpus {
    pub acts: Vec<LegalAct>,
    pub diagnostics: Vec<Diagnostic>,
}

/// Reads corpus JSONL files. Unreadable files are hard errors; malformed or
/// invalid lines are reported and skipped.
pub fn load_corpus<P: AsRef<Path> + Sync>(paths: &[P]) -> Result<LoadedCorpus, CorpusError> {
    let per_file: Vec<LoadedCorpus> = paths
        .par_iter()
        .map(|p| {
            let path = p.as_ref();
            let file = File::open(path).map_err(|source| CorpusError::Io { path: path.to_owned(), source })?;
            load_reader(BufReader::new(file), &path.display().to_string())
                .map_err(|source| CorpusError::Io { path: path.to_owned(), source })
        })
        .collect::<Result<_, _>>()?;
    let mut out = LoadedCorpus::default();
    for part in per_file {
        out.acts.extend(part.acts);
        out.diagnostics.extend(part.diagnostics);
    }
    Ok(out)
}

pub fn load_reader<R: BufRead>(reader: R, source: &str) -> std::io::Result<LoadedCorpus> {
    let mut out = LoadedCorpus::default();
    for (line, parsed) in read_jsonl::<RawAct, _>(reader) {
        let diag = |message: String| Diagnostic { source: source.to_owned(), line: Some(line), message };
        match parsed? {
            Ok(raw) => match LegalAct::from_raw(raw) {
                Ok(act) => out.acts.push(act),
                Err(msg) => out.diagnostics.push(diag(msg)),
            },
            Err(e) => out.diagnostics.push(diag(format!("malformed record: {e}"))),
        }
    }
    Ok(out)
}

// ─── metadata boundary ──────────────────────────────────────────────────────

/// "Article 1" heading in each official language.
const ARTICLE_ONE_HEADINGS: &[(&str, &str)] = &[
    ("bg", r"Член[^\S\r\n]+1"),
    ("cs", r"Článek[^\S\r\n]+1"),
    ("da", r"Artikel[^\S\r\n]+1"),
    ("de", r"Artikel[^\S\r\n]+1"),
    ("el", r"Άρθρο[^\S\r\n]+1"),
    ("en", r"Article[^\S\r\n]+1"),
    ("es", r"Artículo[^\S\r\n]+1"),
    ("et", r"Artikkel[^\S\r\n]+1"),
    ("fi", r"1[^\S\r\n]+artikla"),
    ("fr", r"Article[^\S\r\n]+(?:1(?:er)?|premier)"),
    ("ga", r"Airteagal[^\S\r\n]+1"),
    ("hr", r"Članak[^\S\r\n]+1"),
    ("hu", r"1\.[^\S\r\n]+cikk"),
    ("it", r"Articolo[^\S\r\n]+1"),
    ("lt", r"1[^\S\r\n]+straipsnis"),
    ("lv", r"1\.[^\S\r\n]+pants"),
    ("mt", r"Artikolu[^\S\r\n]+1"),
    ("nl", r"Artikel[^\S\r\n]+1"),
    ("pl", r"Artykuł[^\S\r\n]+1"),
    ("pt", r"Artigo[^\S\r\n]+1"),
    ("ro", r"Articolul[^\S\r\n]+1"),
    ("sk", r"Článok[^\S\r\n]+1"),
    ("sl", r"Člen[^\S\r\n]+1"),
    ("sv", r"Artikel[^\S\r\n]+1"),
];

/// Wraps a heading so it must occupy a whole line, tolerating markdown
/// decoration and trailing ordinal marks.
fn heading_line(heading: &str) -> String {
    format!(r"(?mi)^[ \t#*_>]*{heading}[ \t.:*_º°]*$")
}

#[derive(Debug, Clone)]
pub struct BoundaryRule {
    /// `None` applies to every language.
    pub language: Option<Language>,
    pub pattern: Regex,
}

/// Ordered boundary patterns. The first rule (in order) that applies to the
/// act's language and matches anywhere in its text decides the boundary.
#[derive(Debug, Clone)]
pub struct BoundaryRules {
    rules: Vec<BoundaryRule>,
}

#[derive(Deserialize)]
struct RulesFile {
    rules: Vec<RuleSpec>,
}

#[derive(Deserialize)]
struct RuleSpec {
    language: Option<String>,
    pattern: String,
}

impl BoundaryRules {
    pub fn new(rules: Vec<BoundaryRule>) -> Self {
        Self { rules }
    }

    /// Rules-file format: `{"rules": [{"language": "en" | null, "pattern": "<regex>"}]}`.
    pub fn from_json(json: &str) -> Result<Self, CorpusError> {
        let file: RulesFile = serde_json::from_str(json)?;
        let rules = file
            .rules
            .into_iter()
            .enumerate()
            .map(|(index, spec)| {
                let language = spec.language.map(|l| l.parse()).transpose()?;
                let pattern = Regex::new(&spec.pattern)
                    .map_err(|e| CorpusError::InvalidRule { index, message: e.to_string() })?;
                Ok(BoundaryRule { language, pattern })
            })
            .collect::<Result<_, CorpusError>>()?;
        Ok(Self { rules })
    }

    pub fn rules(&self) -> &[BoundaryRule] {
        &self.rules
    }
}

impl Default for BoundaryRules {
    fn default() -> Self {
        let rules = ARTICLE_ONE_HEADINGS
            .iter()
            .map(|(lang, heading)| BoundaryRule {
                language: Some(Language((*lang).to_owned())),
                pattern: Regex::new(&heading_line(heading)).expect("built-in heading pattern"),
            })
            .collect();
        Self { rules }
    }
}

/// Where the metadata block ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    /// Index of the matching rule and byte offset of the match in the full text.
    Rule { index: usize, offset: usize },
    /// No rule matched; page 1 is the metadata.
    FirstPage,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MetadataSplit {
    pub act_id: String,
    pub language: Language,
    pub query: String,
    pub document: String,
    pub boundary: Boundary,
}

/// Splits an act into its metadata query and body document.
///
/// The query is the text before the first boundary match and the document is
/// everything from the match on, both trimmed. Without a match, page 1 is the
/// query and pages 2.. the document.
pub fn split_metadata(act: &LegalAct, rules: &BoundaryRules) -> Result<MetadataSplit, SplitError> {
    let id = || act.celex_id.clone();
    let text = act.full_text();
    if text.trim().is_empty() {
        return Err(SplitError::EmptyText(id()));
    }
    let found = rules
        .rules
        .iter()
        .enumerate()
        .filter(|(_, r)| r.language.as_ref().is_none_or(|l| *l == act.language))
        .find_map(|(index, r)| r.pattern.find(&text).map(|m| (index, m.start())));

    let (query, document, boundary) = match found {
        Some((index, offset)) => (
            text[..offset].trim().to_owned(),
            text[offset..].trim().to_owned(),
            Boundary::Rule { index, offset },
        ),
        None => {
            let rest: Vec<&str> = act.pages[1..].iter().map(|p| p.text.as_str()).collect();
            (act.pages[0].text.trim().to_owned(), rest.join("\n").trim().to_owned(), Boundary::FirstPage)
        }
    };
    if query.is_empty() {
        return Err(SplitError::EmptyQuery(id()));
    }
    if document.is_empty() {
        return Err(SplitError::EmptyDocument(id()));
    }
    Ok(MetadataSplit { act_id: id(), language: act.language.clone(), query, document, boundary })
}

// ─── split assignment ───────────────────────────────────────────────────────

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitLabel {
    Train,
    Val,
    Test,
}

impl SplitLabel {
    pub const ALL: [SplitLabel; 3] = [SplitLabel::Train, SplitLabel::Val, SplitLabel::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            SplitLabel::Train => "train",
            SplitLabel::Val => "val",
            SplitLabel::Test => "test",
        }
    }
}

impl fmt::Display for SplitLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SplitLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "train" => Ok(SplitLabel::Train),
            "val" => Ok(SplitLabel::Val),
            "test" => Ok(SplitLabel::Test),
            other => Err(format!("unknown split {other:?} (expected train, val or test)")),
        }
    }
}

/// Train/val/test proportions; positive and summing to one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 3]", into = "[f64; 3]")]
pub struct SplitRatios([f64; 3]);

impl SplitRatios {
    pub fn new(train: f64, val: f64, test: f64) -> Result<Self, CorpusError> {
        let r = [train, val, test];
        if r.iter().any(|x| !x.is_finite() || *x <= 0.0) {
            return Err(CorpusError::InvalidRatios(format!("{r:?}: every ratio must be positive")));
        }
        let sum: f64 = r.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(CorpusError::InvalidRatios(format!("{r:?} sums to {sum}, not 1")));
        }
        Ok(Self(r))
    }

    pub fn as_array(&self) -> [f64; 3] {
        self.0
    }

    /// Largest-remainder apportionment of `n` items. Ties in the remainder go
    /// to the earlier split (train, then val, then test).
    pub fn counts(&self, n: usize) -> [usize; 3] {
        let exact: Vec<f64> = self.0.iter().map(|r| r * n as f64).collect();
        // Guard against 0.6 * 10 landing at 5.999...
        let mut counts: Vec<usize> = exact.iter().map(|x| (x + 1e-9).floor() as usize).collect();
        let assigned: usize = counts.iter().sum();
        let mut order: Vec<usize> = (0..3).collect();
        let rem = |i: usize| exact[i] - counts[i] as f64;
        let rems: Vec<f64> = (0..3).map(rem).collect();
        order.sort_by(|&a, &b| rems[b].total_cmp(&rems[a]).then(a.cmp(&b)));
        for &i in order.iter().take(n.saturating_sub(assigned)) {
            counts[i] += 1;
        }
        [counts[0], counts[1], counts[2]]
    }
}

impl Default for SplitRatios {
    fn default() -> Self {
        Self([0.6, 0.2, 0.2])
    }
}

impl TryFrom<[f64; 3]> for SplitRatios {
    type Error = CorpusError;

    fn try_from(r: [f64; 3]) -> Result<Self, Self::Error> {
        Self::new(r[0], r[1], r[2])
    }
}

impl From<SplitRatios> for [f64; 3] {
    fn from(r: SplitRatios) -> Self {
        r.0
    }
}

impl FromStr for SplitRatios {
    type Err = CorpusError;

    /// Parses `"0.6,0.2,0.2"`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<f64> = s
            .split(',')
            .map(|p| p.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| CorpusError::InvalidRatios(format!("{s:?}: {e}")))?;
        match parts.as_slice() {
            [a, b, c] => Self::new(*a, *b, *c),
            _ => Err(CorpusError::InvalidRatios(format!("{s:?}: expected three comma-separated values"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitManifest {
    pub seed: u64,
    pub ratios: SplitRatios,
    pub assignment: BTreeMap<String, SplitLabel>,
}

impl SplitManifest {
    pub fn label(&self, act_id: &str) -> Option<SplitLabel> {
        self.assignment.get(act_id).copied()
    }

    pub fn acts_in(&self, label: SplitLabel) -> impl Iterator<Item = &str> {
        self.assignment.iter().filter(move |(_, l)| **l == label).map(|(id, _)| id.as_str())
    }

    pub fn counts(&self) -> [usize; 3] {
        let mut c = [0; 3];
        for l in self.assignment.values() {
            c[*l as usize] += 1;
        }
        c
    }

    /// Pretty JSON with a trailing newline. Key order is fixed, so equal
    /// manifests serialize to identical bytes.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }
}

/// Assigns each act id to a split. Ids are ordered by a seeded hash of the
/// id, and the first `train` ids go to train, the next `val` to val, the rest
/// to test, with counts from largest-remainder rounding.
pub fn assign_splits<S: AsRef<str>>(act_ids: &[S], ratios: SplitRatios, seed: u64) -> Result<SplitManifest, CorpusError> {
    let mut seen = HashSet::with_capacity(act_ids.len());
    for id in act_ids {
        if !seen.insert(id.as_ref()) {
            return Err(CorpusError::DuplicateActId(id.as_ref().to_owned()));
        }
    }
    let mut keyed: Vec<(u64, &str)> =
        act_ids.iter().map(|id| (seeded_hash(seed, id.as_ref().as_bytes()), id.as_ref())).collect();
    keyed.sort_unstable();
    let [train, val, _] = ratios.counts(keyed.len());
    let assignment = keyed
        .into_iter()
        .enumerate()
        .map(|(i, (_, id))| {
            let label = if i < train {
                SplitLabel::Train
            } else if i < train + val {
                SplitLabel::Val
            } else {
                SplitLabel::Test
            };
            (id.to_owned(), label)
        })
        .collect();
    Ok(SplitManifest { seed, ratios, assignment })
}

// ─── pairs and groups ───────────────────────────────────────────────────────

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryDocPair {
    pub act_id: String,
    pub language: Language,
    pub split: SplitLabel,
    pub query: String,
    pub document: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Positive {
    pub language: Language,
    pub document: String,
}

/// One query with every aligned language version of its act as positives.
/// The query's own-language document always comes first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PositiveGroup {
    pub act_id: String,
    pub query_language: Language,
    pub query: String,
    pub positives: Vec<Positive>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PairMode {
    Mono(Language),
    Bilingual(Language, Language),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BuiltPairs {
    Pairs(Vec<QueryDocPair>),
    Groups(Vec<PositiveGroup>),
}

#[derive(Debug, Clone)]
pub struct PairsOutcome {
    pub built: BuiltPairs,
    pub diagnostics: Vec<Diagnostic>,
}

fn act_diag(act_id: &str, message: String) -> Diagnostic {
    Diagnostic { source: act_id.to_owned(), line: None, message }
}

/// Splits every act of `lang`, in input order, deduplicating by act id.
fn split_language(
    acts: &[LegalAct],
    lang: &Language,
    manifest: &SplitManifest,
    rules: &BoundaryRules,
    diagnostics: &mut Vec<Diagnostic>,
) -> Vec<(SplitLabel, MetadataSplit)> {
    let mut seen = HashSet::new();
    let mut selected = Vec::new();
    for act in acts.iter().filter(|a| a.language == *lang) {
        if !seen.insert(act.celex_id.as_str()) {
            diagnostics.push(act_diag(&act.celex_id, format!("duplicate {lang} version skipped")));
            continue;
        }
        match manifest.label(&act.celex_id) {
            Some(label) => selected.push((label, act)),
            None => diagnostics.push(act_diag(&act.celex_id, "not in split manifest; skipped".into())),
        }
    }
    let results: Vec<_> = selected
        .par_iter()
        .map(|(label, act)| split_metadata(act, rules).map(|s| (*label, s)))
        .collect();
    results
        .into_iter()
        .filter_map(|r| r.map_err(|e| diagnostics.push(act_diag(e.act_id(), e.to_string()))).ok())
        .collect()
}

impl SplitError {
    pub fn act_id(&self) -> &str {
        match self {
            SplitError::EmptyText(id) | SplitError::EmptyQuery(id) | SplitError::EmptyDocument(id) => id,
        }
    }
}

/// One pair per act in `lang`.
pub fn mono_pairs(
    acts: &[LegalAct],
    manifest: &SplitManifest,
    lang: &Language,
    rules: &BoundaryRules,
) -> (Vec<QueryDocPair>, Vec<Diagnostic>) {
    let mut diagnostics = Vec::new();
    let pairs = split_language(acts, lang, manifest, rules, &mut diagnostics)
        .into_iter()
        .map(|(split, s)| QueryDocPair {
            act_id: s.act_id,
            language: s.language,
            split,
            query: s.query,
            document: s.document,
        })
        .collect();
    (pairs, diagnostics)
}

/// Two groups per act present in both languages: one queried in each
/// language, each holding both language documents as positives.
pub fn bilingual_groups(
    acts: &[LegalAct],
    manifest: &SplitManifest,
    lang_a: &Language,
    lang_b: &Language,
    rules: &BoundaryRules,
) -> (Vec<PositiveGroup>, Vec<Diagnostic>) {
    let mut diagnostics = Vec::new();
    let side_a = split_language(acts, lang_a, manifest, rules, &mut diagnostics);
    let side_b = split_language(acts, lang_b, manifest, rules, &mut diagnostics);
    let mut b_by_id: HashMap<String, MetadataSplit> =
        side_b.into_iter().map(|(_, s)| (s.act_id.clone(), s)).collect();

    let mut groups = Vec::new();
    for (_, a) in side_a {
        let Some(b) = b_by_id.remove(&a.act_id) else {
            diagnostics.push(act_diag(&a.act_id, format!("no usable {lang_b} version; skipped")));
            continue;
        };
        let pos_a = Positive { language: a.language.clone(), document: a.document.clone() };
        let pos_b = Positive { language: b.language.clone(), document: b.document.clone() };
        groups.push(PositiveGroup {
            act_id: a.act_id.clone(),
            query_language: a.language,
            query: a.query,
            positives: vec![pos_a.clone(), pos_b.clone()],
        });
        groups.push(PositiveGroup {
            act_id: b.act_id,
            query_language: b.language,
            query: b.query,
            positives: vec![pos_b, pos_a],
        });
    }
    let mut orphans: Vec<String> = b_by_id.into_keys().collect();
    orphans.sort();
    for id in orphans {
        diagnostics.push(act_diag(&id, format!("no usable {lang_a} version; skipped")));
    }
    (groups, diagnostics)
}

pub fn build_pairs(acts: &[LegalAct], manifest: &SplitManifest, mode: &PairMode, rules: &BoundaryRules) -> PairsOutcome {
    match mode {
        PairMode::Mono(lang) => {
            let (pairs, diagnostics) = mono_pairs(acts, manifest, lang, rules);
            PairsOutcome { built: BuiltPairs::Pairs(pairs), diagnostics }
        }
        PairMode::Bilingual(a, b) => {
            let (groups, diagnostics) = bilingual_groups(acts, manifest, a, b, rules);
            PairsOutcome { built: BuiltPairs::Groups(groups), diagnostics }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lang(s: &str) -> Language {
        s.parse().unwrap()
    }

    fn act(id: &str, l: &str, pages: &[&str]) -> LegalAct {
        LegalAct {
            celex_id: id.into(),
            language: lang(l),
            year: 2001,
            pages: pages.iter().enumerate().map(|(i, t)| Page { page: i as u32 + 1, text: (*t).into() }).collect(),
        }
    }

    #[test]
    fn language_codes() {
        assert_eq!(lang("EN").as_str(), "en");
        assert!(lang("mt").is_official());
        assert!("eng".parse::<Language>().is_err());
        assert!("e1".parse::<Language>().is_err());
    }

    #[test]
    fn load_skips_malformed_lines() {
        let data = concat!(
            r#"{"celex_id":"31990L0001","language":"en","year":1990,"pages":[{"page":1,"text":"a"}]}"#,
            "\n",
            "{not json\n",
            "\n",
            r#"{"celex_id":"31990L0002","language":"en","year":1990,"pages":[{"page":2,"text":"a"},{"page":1,"text":"b"}]}"#,
            "\n",
            r#"{"celex_id":"","language":"en","year":1990,"pages":[{"page":1,"text":"a"}]}"#,
            "\n",
            r#"{"celex_id":"x","language":"en","year":1990,"pages":[]}"#,
            "\n",
        );
        let out = load_reader(data.as_bytes(), "mem").unwrap();
        assert_eq!(out.acts.len(), 1);
        assert_eq!(out.diagnostics.len(), 4);
        assert_eq!(out.diagnostics[0].line, Some(2));
        assert_eq!(out.diagnostics[1].line, Some(4));
        assert!(load_reader(&b""[..], "mem").unwrap().acts.is_empty());
    }

    #[test]
    fn splits_at_article_heading() {
        let a = act(
            "32005D0001",
            "en",
            &["COMMISSION DECISION of 1 March 2005 on emissions\n\nArticle 1\n\nThis Decision applies.", "Article 2\nDone."],
        );
        let s = split_metadata(&a, &BoundaryRules::default()).unwrap();
        assert_eq!(s.query, "COMMISSION DECISION of 1 March 2005 on emissions");
        assert!(s.document.starts_with("Article 1"));
        assert!(s.document.ends_with("Done."));
        assert!(matches!(s.boundary, Boundary::Rule { .. }));
    }

    #[test]
    fn inline_article_references_are_not_boundaries() {
        let a = act("x", "en", &["Having regard to Article 1 of the Treaty,", "body"]);
        let s = split_metadata(&a, &BoundaryRules::default()).unwrap();
        assert_eq!(s.boundary, Boundary::FirstPage);
        assert_eq!(s.document, "body");
    }

    #[test]
    fn heading_translations_and_decoration() {
        let rules = BoundaryRules::default();
        for (l, heading) in [("lv", "1. pants"), ("fr", "Article premier"), ("fi", "1 artikla"), ("de", "**Artikel 1**"), ("pt", "Artigo 1.º"), ("en", "## ARTICLE 1")] {
            let a = act("x", l, &[&format!("meta\n{heading}\nbody")]);
            let s = split_metadata(&a, &rules).unwrap();
            assert_eq!(s.query, "meta", "{l}");
        }
    }

    #[test]
    fn boundary_at_start_is_rejected() {
        let a = act("x", "en", &["Article 1\nbody"]);
        assert_eq!(split_metadata(&a, &BoundaryRules::default()), Err(SplitError::EmptyQuery("x".into())));
    }

    #[test]
    fn fallback_to_first_page() {
        let a = act("x", "en", &["meta block", "page two", "page three"]);
        let s = split_metadata(&a, &BoundaryRules::default()).unwrap();
        assert_eq!(s.query, "meta block");
        assert_eq!(s.document, "page two\npage three");
        let lone = act("y", "en", &["  "]);
        assert_eq!(split_metadata(&lone, &BoundaryRules::default()), Err(SplitError::EmptyText("y".into())));
        let single = act("z", "en", &["only metadata"]);
        assert_eq!(split_metadata(&single, &BoundaryRules::default()), Err(SplitError::EmptyDocument("z".into())));
    }

    #[test]
    fn custom_rules_file() {
        let rules = BoundaryRules::from_json(r#"{"rules":[{"language":null,"pattern":"(?m)^HAS ADOPTED"}]}"#).unwrap();
        let a = act("x", "mt", &["meta\nHAS ADOPTED THIS\nbody"]);
        assert_eq!(split_metadata(&a, &rules).unwrap().query, "meta");
        assert!(BoundaryRules::from_json(r#"{"rules":[{"language":"en","pattern":"("}]}"#).is_err());
    }

    #[test]
    fn ratio_parsing() {
        assert!("0.6,0.2,0.2".parse::<SplitRatios>().is_ok());
        assert!("0.6,0.2".parse::<SplitRatios>().is_err());
        assert!("0.6,0.4,0".parse::<SplitRatios>().is_err());
        assert!("0.5,0.2,0.2".parse::<SplitRatios>().is_err());
    }

    #[test]
    fn split_counts() {
        let ids: Vec<String> = (0..10).map(|i| format!("act{i}")).collect();
        let m = assign_splits(&ids, SplitRatios::default(), 7).unwrap();
        assert_eq!(m.counts(), [6, 2, 2]);
        assert_eq!(SplitRatios::default().counts(7), [4, 2, 1]);
        assert_eq!(SplitRatios::default().counts(0), [0, 0, 0]);
        assert_eq!(SplitRatios::default().counts(1), [1, 0, 0]);
    }

    #[test]
    fn split_duplicates_rejected() {
        assert!(matches!(assign_splits(&["a", "b", "a"], SplitRatios::default(), 1), Err(CorpusError::DuplicateActId(id)) if id == "a"));
    }

    #[test]
    fn manifest_json_round_trip() {
        let m = assign_splits(&["a", "b", "c", "d", "e"], SplitRatios::default(), 3).unwrap();
        let back: SplitManifest = serde_json::from_str(&m.to_json()).unwrap();
        assert_eq!(back, m);
        let v: serde_json::Value = serde_json::from_str(&m.to_json()).unwrap();
        assert_eq!(v["ratios"], serde_json::json!([0.6, 0.2, 0.2]));
    }

    #[test]
    fn mono_and_bilingual() {
        let acts = vec![
            act("a", "en", &["meta a", "body a"]),
            act("b", "en", &["meta b", "body b"]),
            act("c", "en", &["meta c", "body c"]),
            act("a", "lv", &["meta a lv", "body a lv"]),
        ];
        let m = assign_splits(&["a", "b", "c"], SplitRatios::default(), 1).unwrap();
        let (pairs, diags) = mono_pairs(&acts, &m, &lang("en"), &BoundaryRules::default());
        assert_eq!(pairs.len(), 3);
        assert!(diags.is_empty());

        let (groups, diags) = bilingual_groups(&acts, &m, &lang("en"), &lang("lv"), &BoundaryRules::default());
        assert_eq!(groups.len(), 2);
        assert_eq!(diags.len(), 2, "{diags:?}");
        assert_eq!(groups[0].query_language, lang("en"));
        assert_eq!(groups[1].query_language, lang("lv"));
        for g in &groups {
            assert_eq!(g.positives.len(), 2);
            assert_eq!(g.positives[0].language, g.query_language);
        }
    }

    #[test]
    fn acts_outside_manifest_are_skipped() {
        let acts = vec![act("a", "en", &["m", "b"]), act("zz", "en", &["m", "b"])];
        let m = assign_splits(&["a"], SplitRatios::default(), 1).unwrap();
        let (pairs, diags) = mono_pairs(&acts, &m, &lang("en"), &BoundaryRules::default());
        assert_eq!(pairs.len(), 1);
        assert_eq!(diags[0].source, "zz");
    }
}
