//! Embedding providers: a deterministic token-bag mock and a line-delimited
//! JSON client for an external model service.
//!
//! Wire protocol, one JSON object per line:
//!
//! ```text
//! -> {"id": "r1", "model": "e5", "texts": ["...", "..."]}
//! <- {"id": "r1", "vectors": [[...], [...]], "token_counts": [12, 40]}
//! <- {"id": "r1", "error": {"kind": "length" | "model" | "internal", "message": "..."}}
//! ```
//!
//! A `length` error makes [`embed_batch`] retry with the next smaller
//! truncation cap.

use std::io::{BufRead, BufReader, Write};
use std::net::TcpStream;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hashing::{seeded_hash, SplitMix64};
use crate::vindex::{truncate_to, IndexError, TruncationPolicy, Truncated};

pub const DEFAULT_MOCK_DIM: usize = 384;
pub const DEFAULT_MOCK_SEED: u64 = 0;

#[derive(Debug, Error)]
pub enum EmbedError {
    #[error("invalid request: {0}")]
    Precondition(String),
    #[error("provider unreachable: {0}")]
    Transport(#[from] std::io::Error),
    #[error("protocol error: {message}; raw payload: {raw}")]
    Protocol { message: String, raw: String },
    #[error("provider rejected input length: {0}")]
    Length(String),
    #[error("model error: {0}")]
    Model(String),
    #[error("provider internal error: {0}")]
    Internal(String),
    #[error("invalid provider spec {0:?} (expected mock, mock:<dim>:<seed> or socket:<addr>)")]
    BadSpec(String),
    #[error(transparent)]
    Truncation(#[from] IndexError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmbedRequest {
    pub id: String,
    pub model: String,
    pub texts: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbedResponse {
    pub id: String,
    pub vectors: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub token_counts: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ErrorKind {
    Length,
    Model,
    Internal,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WireError {
    pub kind: ErrorKind,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorResponse {
    pub id: String,
    pub error: WireError,
}

/// Either response shape on the wire.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WireResponse {
    Error(ErrorResponse),
    Ok(EmbedResponse),
}

impl From<WireError> for EmbedError {
    fn from(e: WireError) -> Self {
        match e.kind {
            ErrorKind::Length => EmbedError::Length(e.message),
            ErrorKind::Model => EmbedError::Model(e.message),
            ErrorKind::Internal => EmbedError::Internal(e.message),
        }
    }
}

pub trait EmbeddingProvider {
    fn embed(&mut self, request: &EmbedRequest) -> Result<EmbedResponse, EmbedError>;
}

impl<P: EmbeddingProvider + ?Sized> EmbeddingProvider for Box<P> {
    fn embed(&mut self, request: &EmbedRequest) -> Result<EmbedResponse, EmbedError> {
        (**self).embed(request)
    }
}

// ─── mock ───────────────────────────────────────────────────────────────────

/// Deterministic unit vector for `text`.
///
/// Algorithm, stable across platforms:
/// 1. Tokens are the lowercased whitespace-separated words of `text`; an
///    empty text is the single token `""`.
/// 2. For each token, a SplitMix64 stream is seeded with
///    FNV-1a-64(seed as 8 little-endian bytes ++ token UTF-8) passed through
///    the SplitMix64 finalizer. `dim` draws map the top 53 bits of each
///    output to `[-1, 1)`; that vector is L2-normalized.
/// 3. The per-token unit vectors are summed and the sum L2-normalized.
///
/// # Panics
///
/// If `dim < 2`.
pub fn mock_embed(text: &str, dim: usize, seed: u64) -> Vec<f64> {
    assert!(dim >= 2, "mock embedding dimension must be at least 2");
    let lowered = text.to_lowercase();
    let mut tokens: Vec<&str> = lowered.split_whitespace().collect();
    if tokens.is_empty() {
        tokens.push("");
    }
    let mut sum = vec![0.0; dim];
    for token in tokens {
        let contribution = token_vector(token, dim, seed);
        sum.iter_mut().zip(&contribution).for_each(|(s, c)| *s += c);
    }
    crate::vindex::unit_f64(&sum).unwrap_or_else(|| token_vector("", dim, seed))
}

fn token_vector(token: &str, dim: usize, seed: u64) -> Vec<f64> {
    let mut rng = SplitMix64::new(seeded_hash(seed, token.as_bytes()));
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.next_signed_unit()).collect();
        if let Some(unit) = crate::vindex::unit_f64(&v) {
            return unit;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MockProvider {
    pub dim: usize,
    pub seed: u64,
}

impl MockProvider {
    pub fn new(dim: usize, seed: u64) -> Result<Self, EmbedError> {
        if dim < 2 {
            return Err(EmbedError::Precondition(format!("mock dimension {dim} < 2")));
        }
        Ok(Self { dim, seed })
    }
}

impl Default for MockProvider {
    fn default() -> Self {
        Self { dim: DEFAULT_MOCK_DIM, seed: DEFAULT_MOCK_SEED }
    }
}

impl EmbeddingProvider for MockProvider {
    fn embed(&mut self, request: &EmbedRequest) -> Result<EmbedResponse, EmbedError> {
        Ok(EmbedResponse {
            id: request.id.clone(),
            vectors: request.texts.iter().map(|t| mock_embed(t, self.dim, self.seed)).collect(),
            token_counts: Some(request.texts.iter().map(|t| t.split_whitespace().count()).collect()),
        })
    }
}

// ─── line protocol client ───────────────────────────────────────────────────

/// One request line out, one response line back.
pub struct LineClient<R, W> {
    reader: R,
    writer: W,
}

impl<R: BufRead, W: Write> LineClient<R, W> {
    pub fn new(reader: R, writer: W) -> Self {
        Self { reader, writer }
    }
}

impl<R: BufRead, W: Write> EmbeddingProvider for LineClient<R, W> {
    fn embed(&mut self, request: &EmbedRequest) -> Result<EmbedResponse, EmbedError> {
        let mut line = serde_json::to_string(request).map_err(std::io::Error::from)?;
        line.push('\n');
        self.writer.write_all(line.as_bytes())?;
        self.writer.flush()?;

        let mut raw = String::new();
        if self.reader.read_line(&mut raw)? == 0 {
            return Err(std::io::Error::new(std::io::ErrorKind::UnexpectedEof, "provider closed the connection").into());
        }
        let raw = raw.trim_end().to_owned();
        let parsed: WireResponse = serde_json::from_str(&raw)
            .map_err(|e| EmbedError::Protocol { message: e.to_string(), raw: raw.clone() })?;
        let id = match &parsed {
            WireResponse::Ok(r) => &r.id,
            WireResponse::Error(e) => &e.id,
        };
        if *id != request.id {
            return Err(EmbedError::Protocol {
                message: format!("response id {id:?} does not match request id {:?}", request.id),
                raw,
            });
        }
        match parsed {
            WireResponse::Error(e) => Err(e.error.into()),
            WireResponse::Ok(resp) => {
                check_response(request, &resp).map_err(|message| EmbedError::Protocol { message, raw })?;
                Ok(resp)
            }
        }
    }
}

/// TCP connection to a model service, e.g. `127.0.0.1:7070`.
pub type SocketProvider = LineClient<BufReader<TcpStream>, TcpStream>;

pub fn connect(addr: &str) -> Result<SocketProvider, EmbedError> {
    let stream = TcpStream::connect(addr)?;
    let reader = BufReader::new(stream.try_clone()?);
    Ok(LineClient::new(reader, stream))
}

/// Checks count, dimension, finiteness and id of a successful response.
fn check_response(request: &EmbedRequest, resp: &EmbedResponse) -> Result<(), String> {
    if resp.id != request.id {
        return Err(format!("response id {:?} does not match request id {:?}", resp.id, request.id));
    }
    if resp.vectors.len() != request.texts.len() {
        return Err(format!("{} vectors for {} texts", resp.vectors.len(), request.texts.len()));
    }
    let dim = resp.vectors.first().map_or(0, Vec::len);
    if dim == 0 {
        return Err("empty vectors".into());
    }
    if let Some(i) = resp.vectors.iter().position(|v| v.len() != dim) {
        return Err(format!("vector {i} has dimension {}, expected {dim}", resp.vectors[i].len()));
    }
    if resp.vectors.iter().flatten().any(|x| !x.is_finite()) {
        return Err("non-finite vector entry".into());
    }
    if let Some(tc) = &resp.token_counts {
        if tc.len() != request.texts.len() {
            return Err(format!("{} token counts for {} texts", tc.len(), request.texts.len()));
        }
    }
    Ok(())
}

// ─── provider selection ─────────────────────────────────────────────────────

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ProviderSpec {
    Mock { dim: usize, seed: u64 },
    Socket(String),
}

impl FromStr for ProviderSpec {
    type Err = EmbedError;

    /// `mock`, `mock:<dim>:<seed>` or `socket:<host:port>`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || EmbedError::BadSpec(s.to_owned());
        if s == "mock" {
            return Ok(ProviderSpec::Mock { dim: DEFAULT_MOCK_DIM, seed: DEFAULT_MOCK_SEED });
        }
        if let Some(rest) = s.strip_prefix("mock:") {
            let (dim, seed) = rest.split_once(':').ok_or_else(bad)?;
            let dim: usize = dim.parse().map_err(|_| bad())?;
            let seed: u64 = seed.parse().map_err(|_| bad())?;
            if dim < 2 {
                return Err(bad());
            }
            return Ok(ProviderSpec::Mock { dim, seed });
        }
        match s.strip_prefix("socket:") {
            Some(addr) if !addr.is_empty() => Ok(ProviderSpec::Socket(addr.to_owned())),
            _ => Err(bad()),
        }
    }
}

impl ProviderSpec {
    pub fn open(&self) -> Result<Box<dyn EmbeddingProvider>, EmbedError> {
        Ok(match self {
            ProviderSpec::Mock { dim, seed } => Box::new(MockProvider::new(*dim, *seed)?),
            ProviderSpec::Socket(addr) => Box::new(connect(addr)?),
        })
    }
}

// ─── batching with cap fallback ─────────────────────────────────────────────

#[derive(Debug, Clone, PartialEq)]
pub struct EmbedOutcome {
    pub response: EmbedResponse,
    /// Cap the accepted request was truncated to.
    pub cap: usize,
    pub truncations: Vec<Truncated>,
}

/// Embeds `request.texts`, head-truncated to the largest cap within `limit`.
/// When the provider answers with a `length` error the batch is retried at
/// the next smaller cap; the last cap's length error is returned as is.
pub fn embed_batch<P: EmbeddingProvider + ?Sized>(
    provider: &mut P,
    request: &EmbedRequest,
    policy: &TruncationPolicy,
    limit: usize,
) -> Result<EmbedOutcome, EmbedError> {
    if request.texts.is_empty() {
        return Err(EmbedError::Precondition("no texts to embed".into()));
    }
    let caps = policy.caps_within(limit)?;
    let mut last_err = None;
    for &cap in caps {
        let truncations: Vec<Truncated> = request.texts.iter().map(|t| truncate_to(t, cap)).collect();
        let attempt = EmbedRequest {
            id: request.id.clone(),
            model: request.model.clone(),
            texts: truncations.iter().map(|t| t.text.clone()).collect(),
        };
        match provider.embed(&attempt) {
            Ok(response) => {
                check_response(&attempt, &response).map_err(|message| EmbedError::Protocol {
                    message,
                    raw: serde_json::to_string(&response).unwrap_or_default(),
                })?;
                return Ok(EmbedOutcome { response, cap, truncations });
            }
            Err(EmbedError::Length(msg)) => last_err = Some(EmbedError::Length(msg)),
            Err(e) => return Err(e),
        }
    }
    Err(last_err.expect("caps_within returns at least one cap"))
}
