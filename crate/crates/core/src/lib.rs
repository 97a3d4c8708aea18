//! Term-weighted first-stage retrieval.
//!
//! Per-term importance weights (predicted by a weigher or replayed from
//! relevance-derived targets) are scaled to integers and stored in place of
//! term frequency in an ordinary inverted index, which is then searched with
//! BM25 or Jelinek-Mercer query likelihood. The crate also carries the
//! target generation, training, query weighting and evaluation stages.

pub mod analyzer;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod index;
pub mod retrieval;
pub mod targets;
pub mod weigher;

pub use analyzer::{AnalyzerConfig, Stemming};
pub use corpus::{Document, Qrels, Query};
pub use error::{Error, Result};
pub use index::InvertedIndex;
pub use targets::{TermTargets, WeightRecord, WeightTable};
