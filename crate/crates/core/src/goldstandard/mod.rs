//! Per-topic gold-standard term vectors built from reference lists.

pub mod boilerplate;
pub mod references;
pub mod text;

use std::collections::BTreeMap;

use chrono::{DateTime, Utc};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{CorpusError, FetchResult, Fetcher, TopicSpec};
use crate::extraction::{classify_uri_kind, UriKind};

pub use boilerplate::{decode_html, strip_boilerplate, strip_boilerplate_with};
pub use references::{references_in_html, ReferenceList};
pub use text::{build_term_vector, tokenize, TermVector, STOPWORDS};

#[derive(Debug, thiserror::Error)]
pub enum GoldError {
    #[error("content is not valid {encoding}")]
    Decode { encoding: String },
    #[error("content is not HTML: {0}")]
    NotHtml(String),
    #[error("topic {0:?} has no reference URIs")]
    NoReferences(String),
    #[error("every reference of topic {topic:?} failed ({count} attempted)")]
    AllReferencesFailed { topic: String, count: usize },
    #[error(transparent)]
    Fetch(#[from] CorpusError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
}

/// Reference URIs of a fetched reference page.
pub fn extract_references(page: &FetchResult) -> ReferenceList {
    if !page.is_success() {
        return ReferenceList {
            uris: vec![],
            warnings: vec![format!(
                "reference page {} unavailable ({})",
                page.request_uri, page.status
            )],
        };
    }
    match decode_html(&page.body, page.content_type.as_deref()) {
        Ok(html) => references_in_html(&html, &page.final_uri),
        Err(e) => ReferenceList {
            uris: vec![],
            warnings: vec![format!("reference page {}: {e}", page.request_uri)],
        },
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReferenceFailure {
    pub uri: String,
    pub reason: String,
}

/// Serialized as `{topic_id, built_at, reference_uris, failures, weights}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoldStandard {
    pub topic_id: String,
    pub built_at: DateTime<Utc>,
    pub reference_uris: Vec<String>,
    pub failures: Vec<ReferenceFailure>,
    pub weights: BTreeMap<String, f64>,
    #[serde(skip)]
    pub term_count: usize,
    #[serde(skip)]
    pub source_doc_count: usize,
}

impl GoldStandard {
    /// Reference lists are single posts by many authors.
    pub const POST_CLASS: &'static str = "P1An";

    pub fn vector(&self) -> TermVector {
        TermVector {
            weights: self.weights.clone(),
            term_count: self.term_count,
            source_doc_count: self.source_doc_count,
            normalized: true,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("gold standard serializes");
        s.push('\n');
        s
    }

    pub fn load(path: &std::path::Path) -> Result<Self, GoldError> {
        let text = std::fs::read_to_string(path).map_err(|source| GoldError::Io {
            path: path.display().to_string(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|source| GoldError::Json {
            path: path.display().to_string(),
            source,
        })
    }
}

/// Plaintext of a fetched HTML document, or why there is none.
pub fn page_text(result: &FetchResult) -> Result<String, String> {
    if !result.is_success() {
        return Err(format!("fetch status {}", result.status));
    }
    let kind = classify_uri_kind(result.media_type.as_deref(), Some(&result.final_uri));
    if kind != UriKind::Html {
        return Err(format!(
            "not an HTML document ({})",
            result.media_type.as_deref().unwrap_or("unknown media type")
        ));
    }
    strip_boilerplate_with(&result.body, result.content_type.as_deref()).map_err(|e| e.to_string())
}

/// Dereferences every reference, strips boilerplate and builds one
/// normalized vector over the concatenated texts. Failed references are
/// listed; if all fail there is no gold standard.
pub fn build_gold_standard(
    topic: &TopicSpec,
    ref_uris: &[String],
    fetcher: &Fetcher,
    built_at: DateTime<Utc>,
) -> Result<GoldStandard, GoldError> {
    if ref_uris.is_empty() {
        return Err(GoldError::NoReferences(topic.topic_id.clone()));
    }
    let fetched: Vec<Result<String, ReferenceFailure>> = ref_uris
        .par_iter()
        .map(|uri| {
            let result = fetcher.dereference(uri)?;
            Ok(page_text(&result).map_err(|reason| ReferenceFailure {
                uri: uri.clone(),
                reason,
            }))
        })
        .collect::<Result<_, CorpusError>>()?;

    let mut texts = Vec::new();
    let mut failures = Vec::new();
    for item in fetched {
        match item {
            Ok(t) => texts.push(t),
            Err(f) => failures.push(f),
        }
    }
    if texts.is_empty() {
        return Err(GoldError::AllReferencesFailed {
            topic: topic.topic_id.clone(),
            count: ref_uris.len(),
        });
    }
    let vector = build_term_vector(&texts, true);
    Ok(GoldStandard {
        topic_id: topic.topic_id.clone(),
        built_at,
        reference_uris: ref_uris.to_vec(),
        failures,
        weights: vector.weights,
        term_count: vector.term_count,
        source_doc_count: vector.source_doc_count,
    })
}
