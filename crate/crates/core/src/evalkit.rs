//! Metadata-to-document retrieval evaluation.
//!
//! `Acc@k` is the fraction of evaluated queries whose ground-truth document
//! ranks at position `k` or better. Ranks are 1-based; a query whose truth is
//! never retrieved has no rank and counts against every `k`.

use std::collections::BTreeSet;
use std::fmt::{self, Write as _};
use std::str::FromStr;

use rayon::prelude::*;
use serde::ser::{SerializeMap, Serializer};
use serde::{Deserialize, Deserializer, Serialize};
use thiserror::Error;

use crate::vindex::{IndexError, VectorIndex};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("ks must be non-empty, positive and strictly increasing: {0:?}")]
    InvalidKs(Vec<usize>),
    #[error("test-only evaluation needs the set of held-out document ids")]
    MissingHeldOut,
    #[error("reports differ in {0}")]
    Mismatch(&'static str),
    #[error("unknown setting {0:?} (expected full or test_only)")]
    UnknownSetting(String),
    #[error(transparent)]
    Index(#[from] IndexError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalSetting {
    /// Search every document (train, val and test).
    Full,
    /// Search held-out test documents only.
    TestOnly,
}

impl EvalSetting {
    pub fn as_str(self) -> &'static str {
        match self {
            EvalSetting::Full => "full",
            EvalSetting::TestOnly => "test_only",
        }
    }
}

impl fmt::Display for EvalSetting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EvalSetting {
    type Err = EvalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "full" => Ok(EvalSetting::Full),
            "test_only" => Ok(EvalSetting::TestOnly),
            other => Err(EvalError::UnknownSetting(other.to_owned())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvalConfig {
    setting: EvalSetting,
    ks: Vec<usize>,
}

pub const DEFAULT_KS: [usize; 3] = [1, 3, 5];

impl EvalConfig {
    pub fn new(setting: EvalSetting, ks: Vec<usize>) -> Result<Self, EvalError> {
        validate_ks(&ks)?;
        Ok(Self { setting, ks })
    }

    pub fn setting(&self) -> EvalSetting {
        self.setting
    }

    pub fn ks(&self) -> &[usize] {
        &self.ks
    }
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self { setting: EvalSetting::Full, ks: DEFAULT_KS.to_vec() }
    }
}

fn validate_ks(ks: &[usize]) -> Result<(), EvalError> {
    if ks.is_empty() || ks[0] == 0 || ks.windows(2).any(|w| w[0] >= w[1]) {
        return Err(EvalError::InvalidKs(ks.to_vec()));
    }
    Ok(())
}

/// Accuracy per cutoff, serialized as a JSON object keyed by the decimal k in
/// ascending order.
#[derive(Debug, Clone, PartialEq)]
pub struct AccuracyTable(pub Vec<(usize, f64)>);

impl AccuracyTable {
    pub fn get(&self, k: usize) -> Option<f64> {
        self.0.iter().find(|(kk, _)| *kk == k).map(|(_, a)| *a)
    }

    pub fn ks(&self) -> Vec<usize> {
        self.0.iter().map(|(k, _)| *k).collect()
    }
}

impl Serialize for AccuracyTable {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(self.0.len()))?;
        for (k, acc) in &self.0 {
            map.serialize_entry(&k.to_string(), acc)?;
        }
        map.end()
    }
}

impl<'de> Deserialize<'de> for AccuracyTable {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw: std::collections::BTreeMap<String, f64> = Deserialize::deserialize(d)?;
        let mut v = raw
            .into_iter()
            .map(|(k, a)| k.parse::<usize>().map(|k| (k, a)).map_err(serde::de::Error::custom))
            .collect::<Result<Vec<_>, _>>()?;
        v.sort_by_key(|(k, _)| *k);
        Ok(Self(v))
    }
}

/// `ranks[i]` is 0 when query `i`'s truth was not retrieved; `not_found`
/// counts those queries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub setting: EvalSetting,
    pub num_queries: usize,
    pub excluded: usize,
    pub acc: AccuracyTable,
    pub ranks: Vec<usize>,
    pub not_found: usize,
}

impl EvalReport {
    /// Builds a report from per-query ranks (`None` = not retrieved).
    pub fn from_ranks(setting: EvalSetting, ks: &[usize], ranks: &[Option<usize>], excluded: usize) -> Result<Self, EvalError> {
        validate_ks(ks)?;
        let n = ranks.len();
        let acc = ks
            .iter()
            .map(|&k| {
                let hits = ranks.iter().filter(|r| r.is_some_and(|r| r <= k)).count();
                (k, if n == 0 { 0.0 } else { hits as f64 / n as f64 })
            })
            .collect();
        Ok(Self {
            setting,
            num_queries: n,
            excluded,
            acc: AccuracyTable(acc),
            ranks: ranks.iter().map(|r| r.unwrap_or(0)).collect(),
            not_found: ranks.iter().filter(|r| r.is_none()).count(),
        })
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalQuery {
    pub query_id: String,
    pub vector: Vec<f64>,
    pub truth_doc_id: String,
}

/// Ranks every query's ground-truth document against the configured
/// collection.
///
/// `Full` searches the whole index. `TestOnly` searches the entries whose ids
/// are in `held_out`. Queries whose truth document is absent from the
/// searched collection are excluded, counted in `excluded` and listed in the
/// returned id vector.
pub fn evaluate(
    queries: &[EvalQuery],
    index: &VectorIndex,
    config: &EvalConfig,
    held_out: Option<&BTreeSet<String>>,
) -> Result<(EvalReport, Vec<String>), EvalError> {
    let restricted;
    let collection = match config.setting {
        EvalSetting::Full => index,
        EvalSetting::TestOnly => {
            let held_out = held_out.ok_or(EvalError::MissingHeldOut)?;
            restricted = index.subset(|id| held_out.contains(id));
            &restricted
        }
    };
    let outcomes: Vec<Option<usize>> = queries
        .par_iter()
        .map(|q| collection.rank_of(&q.vector, &q.truth_doc_id))
        .collect::<Result<_, _>>()?;
    let mut ranks = Vec::with_capacity(queries.len());
    let mut excluded = Vec::new();
    for (q, rank) in queries.iter().zip(outcomes) {
        match rank {
            Some(r) => ranks.push(Some(r)),
            None => excluded.push(q.query_id.clone()),
        }
    }
    let report = EvalReport::from_ranks(config.setting, &config.ks, &ranks, excluded.len())?;
    Ok((report, excluded))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KDelta {
    pub k: usize,
    pub base: f64,
    pub tuned: f64,
    pub delta: f64,
    /// `delta / base`; absent when the base accuracy is zero.
    pub relative_gain: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub setting: EvalSetting,
    pub deltas: Vec<KDelta>,
}

pub fn compare(base: &EvalReport, tuned: &EvalReport) -> Result<Comparison, EvalError> {
    if base.setting != tuned.setting {
        return Err(EvalError::Mismatch("setting"));
    }
    if base.acc.ks() != tuned.acc.ks() {
        return Err(EvalError::Mismatch("ks"));
    }
    let deltas = base
        .acc
        .0
        .iter()
        .zip(&tuned.acc.0)
        .map(|(&(k, b), &(_, t))| KDelta {
            k,
            base: b,
            tuned: t,
            delta: t - b,
            relative_gain: (b != 0.0).then(|| (t - b) / b),
        })
        .collect();
    Ok(Comparison { setting: base.setting, deltas })
}

/// Markdown table with one row per labelled report. Alongside each Acc@k
/// column is a text bar showing the increment over the previous cutoff, the
/// same quantity a stacked bar chart shows as segments.
pub fn markdown_table(rows: &[(&str, &EvalReport)]) -> String {
    let ks: Vec<usize> = rows.first().map(|(_, r)| r.acc.ks()).unwrap_or_default();
    let mut out = String::new();
    let _ = write!(out, "| model | setting | queries |");
    for k in &ks {
        let _ = write!(out, " Acc@{k} |");
    }
    out.push_str(" stacked |\n|---|---|---:|");
    for _ in &ks {
        out.push_str("---:|");
    }
    out.push_str("---|\n");
    for (label, report) in rows {
        let _ = write!(out, "| {label} | {} | {} |", report.setting, report.num_queries);
        let mut prev = 0.0;
        let mut bar = String::new();
        for (i, k) in ks.iter().enumerate() {
            let acc = report.acc.get(*k).unwrap_or(0.0);
            let _ = write!(out, " {:.2} |", 100.0 * acc);
            let segment = ((acc - prev).max(0.0) * 20.0).round() as usize;
            let glyph = ['█', '▓', '▒', '░'][i.min(3)];
            bar.extend(std::iter::repeat_n(glyph, segment));
            prev = acc;
        }
        let _ = writeln!(out, " `{bar}` |");
    }
    out
}

/// Markdown rendering of a comparison: base, tuned and delta per k.
pub fn comparison_markdown(cmp: &Comparison) -> String {
    let mut out = format!("Setting: {}\n\n| k | base | tuned | delta | relative |\n|---:|---:|---:|---:|---:|\n", cmp.setting);
    for d in &cmp.deltas {
        let rel = d.relative_gain.map_or_else(|| "n/a".to_owned(), |g| format!("{:+.1}%", 100.0 * g));
        let _ = writeln!(
            out,
            "| {} | {:.2} | {:.2} | {:+.2} | {} |",
            d.k,
            100.0 * d.base,
            100.0 * d.tuned,
            100.0 * d.delta,
            rel
        );
    }
    out
}
