//! Seed URI extraction: from post groups to per-cell seed collections.

pub mod kind;
pub mod substitute;
pub mod uri;

use std::collections::{BTreeMap, HashMap, HashSet};

use chrono::{DateTime, Utc};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, CorpusError, Fetcher, Post, Source, Vertical};
use crate::segmentation::{CellKey, Partition, PostClass};

pub use kind::{classify_uri_kind, UriKind};
pub use substitute::{intra_site_platform, substitute_intra_site, Substitution};
pub use uri::{canonicalize, extract_uris, hostname_of};

#[derive(Debug, thiserror::Error)]
pub enum ExtractionError {
    #[error("invalid URI {uri:?}: {reason}")]
    InvalidUri { uri: String, reason: String },
    #[error("URI {0:?} has no host")]
    NoHost(String),
    #[error(transparent)]
    Fetch(#[from] CorpusError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedProvenance {
    pub post_id: String,
    pub group_id: String,
    pub topic_id: String,
    pub source: Source,
    pub vertical: Vertical,
    pub post_class: PostClass,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedUri {
    pub original: String,
    pub canonical: String,
    #[serde(rename = "final")]
    pub final_uri: Option<String>,
    pub kind: UriKind,
    pub hostname: String,
    pub provenance: SeedProvenance,
    pub retrieved_at: DateTime<Utc>,
    pub fetch_status: Option<String>,
}

/// A seed as derived from one post, before it is placed in a collection.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PostSeed {
    pub original: String,
    pub canonical: String,
    pub final_uri: Option<String>,
    pub kind: UriKind,
    pub hostname: String,
    pub fetch_status: Option<String>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DedupPolicy {
    /// Canonical URIs are unique within each collection.
    #[default]
    PerCollection,
    /// A canonical URI is kept only in the first collection (in key order).
    Global,
}

impl DedupPolicy {
    pub fn as_str(self) -> &'static str {
        match self {
            DedupPolicy::PerCollection => "per_collection",
            DedupPolicy::Global => "global",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CollectionKey {
    pub cell: CellKey,
    pub post_class: PostClass,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedCollection {
    pub key: CollectionKey,
    pub seeds: Vec<SeedUri>,
    pub dedup: DedupPolicy,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct KindCounts {
    pub all: usize,
    pub html: usize,
    pub non_html: usize,
    pub unknown: usize,
}

impl SeedCollection {
    pub fn counts(&self) -> KindCounts {
        let mut c = KindCounts {
            all: self.seeds.len(),
            ..KindCounts::default()
        };
        for s in &self.seeds {
            match s.kind {
                UriKind::Html => c.html += 1,
                UriKind::NonHtml => c.non_html += 1,
                UriKind::Unknown => c.unknown += 1,
            }
        }
        c
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractOptions {
    pub depth_limit: usize,
    pub dedup: DedupPolicy,
}

impl Default for ExtractOptions {
    fn default() -> Self {
        ExtractOptions {
            depth_limit: 3,
            dedup: DedupPolicy::PerCollection,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PostSeeds {
    pub seeds: Vec<PostSeed>,
    pub warnings: Vec<String>,
}

/// Extracts, substitutes, canonicalizes and classifies the seeds of one
/// post, deduplicated by canonical URI in order of appearance.
///
/// Without a fetcher, intra-site URIs are kept and kinds come from the
/// URI extension. With one, seeds whose fetch fails are `Unknown`.
pub fn seeds_for_post(
    post: &Post,
    fetcher: Option<&Fetcher>,
    opts: &ExtractOptions,
) -> Result<PostSeeds, ExtractionError> {
    let mut out = PostSeeds::default();
    let mut expanded: Vec<(String, String)> = Vec::new();
    for raw in extract_uris(post) {
        let canonical = match canonicalize(&raw) {
            Ok(c) => c,
            Err(e) => {
                out.warnings.push(format!("post {}: {e}; skipped", post.id));
                continue;
            }
        };
        let platform = substitute::platform_of(&post.source);
        match (fetcher, platform) {
            (Some(f), Some(p)) if intra_site_platform(&canonical).as_ref() == Some(&p) => {
                let sub = substitute_intra_site(&canonical, &p, f, opts.depth_limit)?;
                out.warnings
                    .extend(sub.warnings.into_iter().map(|w| format!("post {}: {w}", post.id)));
                for u in sub.uris {
                    let original = if u == canonical { raw.clone() } else { u.clone() };
                    expanded.push((original, u));
                }
            }
            _ => expanded.push((raw, canonical)),
        }
    }

    let mut seen = HashSet::new();
    for (original, canonical) in expanded {
        if !seen.insert(canonical.clone()) {
            continue;
        }
        let hostname = match hostname_of(&canonical) {
            Ok(h) => h,
            Err(e) => {
                out.warnings.push(format!("post {}: {e}; skipped", post.id));
                continue;
            }
        };
        let (kind, final_uri, fetch_status) = match fetcher {
            None => (classify_uri_kind(None, Some(&canonical)), None, None),
            Some(f) => {
                let r = f.dereference(&canonical)?;
                let kind = if r.is_success() {
                    classify_uri_kind(r.media_type.as_deref(), Some(&r.final_uri))
                } else {
                    out.warnings
                        .push(format!("post {}: seed {canonical} unavailable ({})", post.id, r.status));
                    UriKind::Unknown
                };
                (kind, Some(r.final_uri.clone()), Some(r.status.to_string()))
            }
        };
        out.seeds.push(PostSeed {
            original,
            canonical,
            final_uri,
            kind,
            hostname,
            fetch_status,
        });
    }
    Ok(out)
}

/// Seeds for every group in a partition.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Extraction {
    pub collections: BTreeMap<CollectionKey, SeedCollection>,
    /// Per-post seeds (deduplicated within the post only), keyed by post id.
    pub post_seeds: BTreeMap<String, Vec<PostSeed>>,
    pub warnings: Vec<String>,
}

impl Extraction {
    pub fn seeds_of(&self, post_id: &str) -> &[PostSeed] {
        self.post_seeds.get(post_id).map_or(&[], Vec::as_slice)
    }
}

/// Builds one seed collection per populated (cell, class) of `partition`.
///
/// Per-post work runs on the rayon pool; results are merged in group order
/// so output does not depend on scheduling.
pub fn assemble_collections(
    corpus: &Corpus,
    partition: &Partition,
    fetcher: Option<&Fetcher>,
    opts: &ExtractOptions,
) -> Result<Extraction, ExtractionError> {
    let mut post_ids: Vec<&str> = Vec::new();
    let mut seen = HashSet::new();
    for group in partition.groups() {
        for id in &group.post_ids {
            if seen.insert(id.as_str()) {
                post_ids.push(id);
            }
        }
    }

    let computed: Vec<(String, PostSeeds)> = post_ids
        .par_iter()
        .filter_map(|id| corpus.post(id))
        .map(|post| seeds_for_post(post, fetcher, opts).map(|s| (post.id.clone(), s)))
        .collect::<Result<_, _>>()?;

    let mut extraction = Extraction::default();
    let mut by_post: HashMap<String, Vec<PostSeed>> = HashMap::new();
    for (id, seeds) in computed {
        extraction.warnings.extend(seeds.warnings);
        by_post.insert(id, seeds.seeds);
    }

    let mut global_seen: HashSet<String> = HashSet::new();
    for ((cell, class), groups) in &partition.cells {
        let key = CollectionKey {
            cell: cell.clone(),
            post_class: *class,
        };
        let mut local_seen: HashSet<String> = HashSet::new();
        let mut seeds = Vec::new();
        for group in groups {
            for post_id in &group.post_ids {
                let Some(post) = corpus.post(post_id) else { continue };
                for s in by_post.get(post_id).into_iter().flatten() {
                    let fresh = match opts.dedup {
                        DedupPolicy::PerCollection => local_seen.insert(s.canonical.clone()),
                        DedupPolicy::Global => global_seen.insert(s.canonical.clone()),
                    };
                    if !fresh {
                        continue;
                    }
                    seeds.push(SeedUri {
                        original: s.original.clone(),
                        canonical: s.canonical.clone(),
                        final_uri: s.final_uri.clone(),
                        kind: s.kind,
                        hostname: s.hostname.clone(),
                        provenance: SeedProvenance {
                            post_id: post_id.clone(),
                            group_id: group.group_id.clone(),
                            topic_id: cell.topic_id.clone(),
                            source: cell.source.clone(),
                            vertical: cell.vertical.clone(),
                            post_class: *class,
                        },
                        retrieved_at: post.retrieved_at,
                        fetch_status: s.fetch_status.clone(),
                    });
                }
            }
        }
        extraction.collections.insert(
            key.clone(),
            SeedCollection {
                key,
                seeds,
                dedup: opts.dedup,
            },
        );
    }
    extraction.post_seeds = by_post.into_iter().collect();
    Ok(extraction)
}
