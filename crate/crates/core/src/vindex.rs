//! Exact cosine vector index with head truncation for long documents.
//!
//! Stored vectors are unit-normalized `f32`. Scores are accumulated in `f64`
//! in a fixed order so rankings are reproducible, and ties are broken by
//! ascending doc id.

use std::collections::HashSet;
use std::fmt;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const INDEX_FORMAT: &str = "lemurkit-index";
pub const INDEX_VERSION: u32 = 1;

/// Share of documents that needed truncation in the reference corpus.
pub const REFERENCE_TRUNCATED_SHARE: (f64, f64) = (0.08, 0.15);
/// Share of tokens removed from a truncated document in the reference corpus.
pub const REFERENCE_REMOVED_SHARE: (f64, f64) = (0.40, 0.50);

const NORM_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum IndexError {
    #[error("truncation caps must be non-empty, positive and strictly decreasing: {0:?}")]
    InvalidCaps(Vec<usize>),
    #[error("no truncation cap fits within the provider limit of {0} tokens")]
    NoCapFits(usize),
    #[error("duplicate doc id {0:?}")]
    DuplicateId(String),
    #[error("vector for {0:?} has zero norm")]
    ZeroVector(String),
    #[error("vector for {id:?} has dimension {got}, expected {expected}")]
    DimensionMismatch { id: String, expected: usize, got: usize },
    #[error("query has dimension {got}, index has {expected}")]
    QueryDimension { expected: usize, got: usize },
    #[error("query vector is zero or non-finite")]
    BadQuery,
    #[error("vector for {0:?} has a non-finite entry")]
    NonFinite(String),
    #[error("k must be at least 1")]
    ZeroK,
    #[error("index file line {line}: {message}")]
    Format { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

// ─── truncation ─────────────────────────────────────────────────────────────

/// Decreasing token caps; the largest cap that fits the provider limit is
/// applied first, smaller caps are fallbacks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct TruncationPolicy {
    caps: Vec<usize>,
}

impl TruncationPolicy {
    pub fn new(caps: Vec<usize>) -> Result<Self, IndexError> {
        let ok = !caps.is_empty() && caps.iter().all(|&c| c > 0) && caps.windows(2).all(|w| w[0] > w[1]);
        if ok {
            Ok(Self { caps })
        } else {
            Err(IndexError::InvalidCaps(caps))
        }
    }

    pub fn caps(&self) -> &[usize] {
        &self.caps
    }

    /// Caps not exceeding `limit`, largest first.
    pub fn caps_within(&self, limit: usize) -> Result<&[usize], IndexError> {
        let start = self.caps.iter().position(|&c| c <= limit).ok_or(IndexError::NoCapFits(limit))?;
        Ok(&self.caps[start..])
    }

    pub fn cap_for(&self, limit: usize) -> Result<usize, IndexError> {
        self.caps_within(limit).map(|c| c[0])
    }
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        Self { caps: vec![2048, 1024, 512] }
    }
}

impl TryFrom<Vec<usize>> for TruncationPolicy {
    type Error = IndexError;

    fn try_from(caps: Vec<usize>) -> Result<Self, Self::Error> {
        Self::new(caps)
    }
}

impl From<TruncationPolicy> for Vec<usize> {
    fn from(p: TruncationPolicy) -> Self {
        p.caps
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Truncated {
    pub text: String,
    pub cap: usize,
    pub original_tokens: usize,
    pub tokens_removed: usize,
}

/// Keeps the first `cap` whitespace tokens, preserving the original spacing
/// between them.
pub fn truncate_to(text: &str, cap: usize) -> Truncated {
    let mut tokens = 0;
    let mut cut = None;
    let mut in_token = false;
    for (i, c) in text.char_indices() {
        if c.is_whitespace() {
            if in_token && tokens == cap && cut.is_none() {
                cut = Some(i);
            }
            in_token = false;
        } else if !in_token {
            in_token = true;
            tokens += 1;
        }
    }
    if tokens <= cap {
        return Truncated { text: text.to_owned(), cap, original_tokens: tokens, tokens_removed: 0 };
    }
    let kept = &text[..cut.unwrap_or(0)];
    Truncated { text: kept.to_owned(), cap, original_tokens: tokens, tokens_removed: tokens - cap }
}

/// Truncates to the largest cap not exceeding the provider's `limit`.
pub fn truncate_text(text: &str, policy: &TruncationPolicy, limit: usize) -> Result<Truncated, IndexError> {
    Ok(truncate_to(text, policy.cap_for(limit)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TruncationStats {
    pub docs_total: usize,
    pub docs_truncated: usize,
    /// Mean fraction of tokens removed, over truncated documents only.
    pub mean_removed_fraction: f64,
}

impl TruncationStats {
    pub fn from_truncations<'a, I: IntoIterator<Item = &'a Truncated>>(items: I) -> Self {
        let mut stats = Self::default();
        let mut frac_sum = 0.0;
        for t in items {
            stats.docs_total += 1;
            if t.tokens_removed > 0 {
                stats.docs_truncated += 1;
                frac_sum += t.tokens_removed as f64 / t.original_tokens as f64;
            }
        }
        if stats.docs_truncated > 0 {
            stats.mean_removed_fraction = frac_sum / stats.docs_truncated as f64;
        }
        stats
    }

    pub fn truncated_share(&self) -> f64 {
        if self.docs_total == 0 {
            0.0
        } else {
            self.docs_truncated as f64 / self.docs_total as f64
        }
    }
}

impl fmt::Display for TruncationStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "truncated {}/{} documents ({:.1}%, reference {:.0}-{:.0}%); mean tokens removed {:.1}% (reference {:.0}-{:.0}%)",
            self.docs_truncated,
            self.docs_total,
            100.0 * self.truncated_share(),
            100.0 * REFERENCE_TRUNCATED_SHARE.0,
            100.0 * REFERENCE_TRUNCATED_SHARE.1,
            100.0 * self.mean_removed_fraction,
            100.0 * REFERENCE_REMOVED_SHARE.0,
            100.0 * REFERENCE_REMOVED_SHARE.1,
        )
    }
}

// ─── index ──────────────────────────────────────────────────────────────────

/// Immutable set of unit vectors keyed by unique doc id.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorIndex {
    dim: usize,
    ids: Vec<String>,
    vectors: Vec<f32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Hit {
    pub doc_id: String,
    pub score: f64,
}

#[derive(Serialize, Deserialize)]
struct IndexHeader {
    format: String,
    version: u32,
    dim: usize,
    count: usize,
}

#[derive(Deserialize)]
struct IndexEntry {
    doc_id: String,
    vector: Vec<f32>,
}

pub(crate) fn unit_f64(v: &[f64]) -> Option<Vec<f64>> {
    if v.iter().any(|x| !x.is_finite()) {
        return None;
    }
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    (n > 0.0).then(|| v.iter().map(|x| x / n).collect())
}

impl VectorIndex {
    /// Normalizes and stores `items`. Rejects duplicate ids, zero or
    /// non-finite vectors and mixed dimensions. An empty item list yields an
    /// empty index of dimension 0.
    pub fn build<S: Into<String>>(items: impl IntoIterator<Item = (S, Vec<f64>)>) -> Result<Self, IndexError> {
        let mut index = Self { dim: 0, ids: Vec::new(), vectors: Vec::new() };
        let mut seen = HashSet::new();
        for (id, v) in items {
            let id: String = id.into();
            if index.ids.is_empty() {
                index.dim = v.len();
            } else if v.len() != index.dim {
                return Err(IndexError::DimensionMismatch { id, expected: index.dim, got: v.len() });
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(IndexError::NonFinite(id));
            }
            let Some(unit) = unit_f64(&v) else {
                return Err(IndexError::ZeroVector(id));
            };
            if !seen.insert(id.clone()) {
                return Err(IndexError::DuplicateId(id));
            }
            index.vectors.extend(unit.iter().map(|&x| x as f32));
            index.ids.push(id);
        }
        Ok(index)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn vector(&self, i: usize) -> &[f32] {
        &self.vectors[i * self.dim..(i + 1) * self.dim]
    }

    pub fn position(&self, doc_id: &str) -> Option<usize> {
        self.ids.iter().position(|id| id == doc_id)
    }

    pub fn contains(&self, doc_id: &str) -> bool {
        self.position(doc_id).is_some()
    }

    /// Copy holding only the entries whose id passes `keep`. Stored vectors
    /// are copied bit-for-bit.
    pub fn subset<F: Fn(&str) -> bool>(&self, keep: F) -> Self {
        let mut out = Self { dim: self.dim, ids: Vec::new(), vectors: Vec::new() };
        for (i, id) in self.ids.iter().enumerate() {
            if keep(id) {
                out.ids.push(id.clone());
                out.vectors.extend_from_slice(self.vector(i));
            }
        }
        out
    }

    fn unit_query(&self, query: &[f64]) -> Result<Vec<f64>, IndexError> {
        if query.len() != self.dim {
            return Err(IndexError::QueryDimension { expected: self.dim, got: query.len() });
        }
        unit_f64(query).ok_or(IndexError::BadQuery)
    }

    fn score(&self, unit_query: &[f64], i: usize) -> f64 {
        self.vector(i).iter().zip(unit_query).map(|(&v, q)| f64::from(v) * q).sum()
    }

    /// Cosine score of the query against every entry, in storage order.
    pub fn scores(&self, query: &[f64]) -> Result<Vec<f64>, IndexError> {
        let q = self.unit_query(query)?;
        Ok((0..self.len()).map(|i| self.score(&q, i)).collect())
    }

    /// Exact top-`k` by cosine; ties go to the smaller doc id.
    pub fn search(&self, query: &[f64], k: usize) -> Result<Vec<Hit>, IndexError> {
        if k == 0 {
            return Err(IndexError::ZeroK);
        }
        let scores = self.scores(query)?;
        let mut order: Vec<usize> = (0..self.len()).collect();
        let cmp = |&a: &usize, &b: &usize| {
            scores[b].partial_cmp(&scores[a]).expect("finite scores").then_with(|| self.ids[a].cmp(&self.ids[b]))
        };
        if k < order.len() {
            order.select_nth_unstable_by(k - 1, cmp);
            order.truncate(k);
        }
        order.sort_unstable_by(cmp);
        Ok(order.into_iter().map(|i| Hit { doc_id: self.ids[i].clone(), score: scores[i] }).collect())
    }

    /// 1-based rank `doc_id` would have in a full search, or `None` when the
    /// doc is absent.
    pub fn rank_of(&self, query: &[f64], doc_id: &str) -> Result<Option<usize>, IndexError> {
        let Some(target) = self.position(doc_id) else {
            self.unit_query(query)?;
            return Ok(None);
        };
        let scores = self.scores(query)?;
        let ts = scores[target];
        let ahead = scores
            .iter()
            .zip(&self.ids)
            .filter(|(&s, id)| s > ts || (s == ts && id.as_str() < doc_id))
            .count();
        Ok(Some(ahead + 1))
    }

    /// Header line, then one `{"doc_id", "vector"}` line per entry with
    /// components written to 9 significant digits (exact for `f32`).
    pub fn save<W: Write>(&self, mut w: W) -> Result<(), IndexError> {
        let header = IndexHeader { format: INDEX_FORMAT.into(), version: INDEX_VERSION, dim: self.dim, count: self.len() };
        serde_json::to_writer(&mut w, &header).map_err(std::io::Error::from)?;
        w.write_all(b"\n")?;
        let mut line = String::new();
        for (i, id) in self.ids.iter().enumerate() {
            line.clear();
            line.push_str("{\"doc_id\":");
            line.push_str(&serde_json::to_string(id).map_err(std::io::Error::from)?);
            line.push_str(",\"vector\":[");
            for (j, &x) in self.vector(i).iter().enumerate() {
                if j > 0 {
                    line.push(',');
                }
                line.push_str(&format_sig9(x));
            }
            line.push_str("]}\n");
            w.write_all(line.as_bytes())?;
        }
        Ok(())
    }

    pub fn load<R: BufRead>(r: R) -> Result<Self, IndexError> {
        let mut lines = r.lines().enumerate().filter(|(_, l)| l.as_ref().map_or(true, |l| !l.trim().is_empty()));
        let fmt_err = |line: usize, message: String| IndexError::Format { line, message };
        let (_, first) = lines.next().ok_or_else(|| fmt_err(1, "missing header".into()))?;
        let header: IndexHeader = serde_json::from_str(&first?).map_err(|e| fmt_err(1, e.to_string()))?;
        if header.format != INDEX_FORMAT || header.version != INDEX_VERSION {
            return Err(fmt_err(1, format!("unsupported format {} v{}", header.format, header.version)));
        }
        let mut index = Self { dim: header.dim, ids: Vec::with_capacity(header.count), vectors: Vec::new() };
        let mut seen = HashSet::new();
        for (i, line) in lines {
            let n = i + 1;
            let entry: IndexEntry = serde_json::from_str(&line?).map_err(|e| fmt_err(n, e.to_string()))?;
            if entry.vector.len() != index.dim {
                return Err(IndexError::DimensionMismatch { id: entry.doc_id, expected: index.dim, got: entry.vector.len() });
            }
            let norm = entry.vector.iter().map(|&x| f64::from(x).powi(2)).sum::<f64>().sqrt();
            if (norm - 1.0).abs() > NORM_TOLERANCE {
                return Err(fmt_err(n, format!("vector for {:?} has norm {norm}", entry.doc_id)));
            }
            if !seen.insert(entry.doc_id.clone()) {
                return Err(IndexError::DuplicateId(entry.doc_id));
            }
            index.vectors.extend_from_slice(&entry.vector);
            index.ids.push(entry.doc_id);
        }
        if index.len() != header.count {
            return Err(fmt_err(1, format!("header count {} but {} entries", header.count, index.len())));
        }
        Ok(index)
    }
}

/// Decimal with 9 significant digits, trailing zeros trimmed. Positional
/// notation for magnitudes in [1e-5, 1e9), scientific otherwise.
fn format_sig9(x: f32) -> String {
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{:.8e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    let (sign, digits) = match mantissa.strip_prefix('-') {
        Some(m) => ("-", m.replace('.', "")),
        None => ("", mantissa.replace('.', "")),
    };
    let digits = digits.trim_end_matches('0');
    let digits = if digits.is_empty() { "0" } else { digits };
    if !(-5..9).contains(&exp) {
        let (head, tail) = digits.split_at(1);
        return if tail.is_empty() { format!("{sign}{head}e{exp}") } else { format!("{sign}{head}.{tail}e{exp}") };
    }
    if exp < 0 {
        format!("{sign}0.{}{digits}", "0".repeat((-exp - 1) as usize))
    } else {
        let int_len = exp as usize + 1;
        if digits.len() <= int_len {
            format!("{sign}{digits}{}", "0".repeat(int_len - digits.len()))
        } else {
            format!("{sign}{}.{}", &digits[..int_len], &digits[int_len..])
        }
    }
}
