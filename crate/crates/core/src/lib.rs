//! # lemurkit
//!
//! Tooling for building and evaluating metadata-to-document retrieval over
//! multilingual legislative corpora.
//!
//! | Module | Purpose |
//! |--------|---------|
//! | [`textnorm`] | HTML stripping and lexical normalization |
//! | [`lcs`] | Lexical Content Score between converted and reference text |
//! | [`corpus`] | JSONL ingestion, metadata/body split, aligned splits, pair building |
//! | [`losses`] | Symmetric and grouped multi-positive MNR losses with gradients |
//! | [`vindex`] | Truncation policy and exact cosine vector index |
//! | [`evalkit`] | Acc@k evaluation and base-vs-tuned comparison |
//! | [`embedclient`] | Embedding provider protocol and deterministic mock embedder |

pub mod corpus;
pub mod embedclient;
pub mod evalkit;
mod ddouble;
mod hashing;
pub mod io;
pub mod lcs;
pub mod losses;
pub mod textnorm;
pub mod vindex;

pub use corpus::{Language, LegalAct, PositiveGroup, QueryDocPair, SplitLabel, SplitManifest};
pub use evalkit::{EvalConfig, EvalReport, EvalSetting};
pub use lcs::{BowVector, LcsResult};
pub use losses::{EmbeddingMatrix, LossBatch, LossOutput};
pub use textnorm::NormalizedText;
pub use vindex::{TruncationPolicy, VectorIndex};
