//! Lexical Content Score: cosine similarity of bag-of-words count vectors
//! between a converted document and its reference text.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::textnorm::{tokenize, NormalizedText};

pub const MIN_YEAR: i32 = 1900;
pub const MAX_YEAR: i32 = 2100;
pub const BIN_WIDTH: i32 = 5;

#[derive(Debug, Error, PartialEq)]
pub enum LcsError {
    #[error("year {0} outside [{MIN_YEAR}, {MAX_YEAR}]")]
    YearOutOfRange(i32),
}

/// Token frequencies of one text. Every stored count is at least one.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BowVector {
    counts: BTreeMap<String, u64>,
}

impl BowVector {
    pub fn from_tokens<'a, I: IntoIterator<Item = &'a str>>(tokens: I) -> Self {
        let mut counts = BTreeMap::new();
        for t in tokens {
            *counts.entry(t.to_owned()).or_insert(0) += 1;
        }
        Self { counts }
    }

    pub fn get(&self, token: &str) -> u64 {
        self.counts.get(token).copied().unwrap_or(0)
    }

    pub fn counts(&self) -> &BTreeMap<String, u64> {
        &self.counts
    }

    /// Number of distinct tokens.
    pub fn vocab_len(&self) -> usize {
        self.counts.len()
    }

    /// Sum of all counts; equals the source token count.
    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    fn squared_norm(&self) -> u128 {
        self.counts.values().map(|&c| u128::from(c) * u128::from(c)).sum()
    }
}

pub fn bow_vectorize(text: &NormalizedText) -> BowVector {
    BowVector::from_tokens(tokenize(text))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LcsResult {
    pub score: f64,
    pub shared_vocab: usize,
    pub empty_side: bool,
}

/// Cosine similarity between two count vectors over their union vocabulary.
///
/// Dot product and squared norms are exact integers; only the final ratio is
/// floating point. The score is exactly 1.0 if and only if the vectors are
/// positive multiples of each other, and 0.0 with `empty_side` set when either
/// vector has no tokens.
pub fn lcs_score(html: &BowVector, pdf: &BowVector) -> LcsResult {
    if html.is_empty() || pdf.is_empty() {
        return LcsResult { score: 0.0, shared_vocab: 0, empty_side: true };
    }
    let (small, large) = if html.vocab_len() <= pdf.vocab_len() { (html, pdf) } else { (pdf, html) };
    let mut dot: u128 = 0;
    let mut shared_vocab = 0;
    for (token, &c) in &small.counts {
        let other = large.get(token);
        if other > 0 {
            shared_vocab += 1;
            dot += u128::from(c) * u128::from(other);
        }
    }
    let na = html.squared_norm();
    let nb = pdf.squared_norm();

    let parallel = match (dot.checked_mul(dot), na.checked_mul(nb)) {
        (Some(dd), Some(nn)) => dd == nn,
        _ => false,
    };
    let score = if parallel {
        1.0
    } else if dot == 0 {
        0.0
    } else {
        let raw = dot as f64 / ((na as f64).sqrt() * (nb as f64).sqrt());
        // Cauchy-Schwarz is strict here; keep rounding from reaching 1.0.
        raw.clamp(0.0, 1.0 - f64::EPSILON / 2.0)
    };
    LcsResult { score, shared_vocab, empty_side: false }
}

/// Normalized texts in, score out.
pub fn score_texts(html: &NormalizedText, pdf: &NormalizedText) -> LcsResult {
    lcs_score(&bow_vectorize(html), &bow_vectorize(pdf))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LcsAggregate {
    pub language: String,
    /// Inclusive start year of the five-year bin.
    pub year_bin: i32,
    pub mean: f64,
    pub count: usize,
}

pub fn year_bin(year: i32) -> Result<i32, LcsError> {
    if !(MIN_YEAR..=MAX_YEAR).contains(&year) {
        return Err(LcsError::YearOutOfRange(year));
    }
    Ok(year.div_euclid(BIN_WIDTH) * BIN_WIDTH)
}

/// Mean score per (language, five-year bin), ordered by language then bin.
pub fn aggregate_lcs<S: AsRef<str>>(results: &[(S, i32, LcsResult)]) -> Result<Vec<LcsAggregate>, LcsError> {
    let mut groups: BTreeMap<(String, i32), (f64, usize)> = BTreeMap::new();
    for (lang, year, r) in results {
        let bin = year_bin(*year)?;
        let slot = groups.entry((lang.as_ref().to_owned(), bin)).or_insert((0.0, 0));
        slot.0 += r.score;
        slot.1 += 1;
    }
    Ok(groups
        .into_iter()
        .map(|((language, year_bin), (sum, count))| LcsAggregate {
            language,
            year_bin,
            mean: sum / count as f64,
            count,
        })
        .collect())
}
