//! Post/corpus data model, JSONL persistence and the fetching layer.

pub mod adapters;
pub mod fetch;
pub mod fixture;
#[cfg(feature = "live")]
pub mod http;
pub mod model;
pub mod store;
pub mod thread;

use std::path::Path;

pub use fetch::{Clock, FetchPolicy, FetchResult, FetchStatus, Fetcher, RawResponse, Transport, TransportError};
pub use fixture::{DiskCache, FixtureTransport};
pub use model::{
    Expectation, OccurrenceBound, Post, ProvenanceEntry, QueryKind, Recurrence, RecurrenceKind, Source, TopicSpec,
    Vertical,
};
pub use store::{load_corpus, read_corpus, write_corpus, write_corpus_to, Corpus};
pub use thread::{expand_thread, FixtureThreadSource, ThreadExpansion, ThreadSource};

/// Environment variable naming the on-disk response cache directory.
pub const CACHE_ENV: &str = "SEEDSMITH_CACHE";
pub const DEFAULT_CACHE_DIR: &str = ".seedsmith-cache";

pub fn cache_dir() -> std::path::PathBuf {
    std::env::var_os(CACHE_ENV)
        .map(Into::into)
        .unwrap_or_else(|| DEFAULT_CACHE_DIR.into())
}

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("duplicate post id {0:?}")]
    DuplicateId(String),
    #[error("duplicate topic id {0:?}")]
    DuplicateTopic(String),
    #[error("post {post_id:?} refers to unknown topic {topic_id:?}")]
    UnknownTopic { post_id: String, topic_id: String },
    #[error("parent_id refers to missing posts: {}", .0.join(", "))]
    DanglingParents(Vec<String>),
    #[error("parent_id cycle among posts: {}", .0.join(", "))]
    ParentCycle(Vec<String>),
    #[error("invalid corpus: {0}")]
    Invalid(String),
    #[error("invalid URI {uri:?}: {reason}")]
    InvalidUri { uri: String, reason: String },
    #[error("fetch of {uri} failed: {status}")]
    Fetch { uri: String, status: String },
    #[error("adapter {adapter} does not support source {platform}")]
    UnsupportedSource { adapter: String, platform: String },
    #[error("adapter error: {0}")]
    Adapter(String),
}

impl CorpusError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        CorpusError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}
