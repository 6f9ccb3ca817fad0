//! Measures over seed collections: URI-count distributions, relevance and
//! precision, conditional relevance by URI count, ages, hostname diversity
//! and SERP overlap.

pub mod dates;
pub mod distribution;
pub mod measures;
pub mod relevance;

use std::collections::{BTreeMap, HashMap, HashSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Fetcher, Source};
use crate::extraction::{Extraction, PostSeed, SeedUri, UriKind};
use crate::goldstandard::{page_text, GoldStandard, TermVector};
use crate::segmentation::{CellKey, ClassLabel, Partition, PostGroup};

pub use dates::{age_distribution, estimate_publication_date, AgeDistribution, AgeSample, FiveNumber, PubDate};
pub use distribution::{distribution_column, DistMode, KBin};
pub use measures::{hostname_diversity, serp_overlap};
pub use relevance::{
    class_average_precision, cosine_similarity, judge_relevance, judge_vector, post_precision, RelevanceJudgment,
    DEFAULT_THRESHOLD,
};

/// Which seeds a measure looks at.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KindFilter {
    All,
    Html,
    NonHtml,
}

impl KindFilter {
    pub const ALL: [KindFilter; 3] = [KindFilter::All, KindFilter::Html, KindFilter::NonHtml];

    pub fn accepts(self, kind: UriKind) -> bool {
        match self {
            KindFilter::All => true,
            KindFilter::Html => kind == UriKind::Html,
            KindFilter::NonHtml => kind == UriKind::NonHtml,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            KindFilter::All => "all",
            KindFilter::Html => "html",
            KindFilter::NonHtml => "nonhtml",
        }
    }
}

/// Column label of source-level tables: a class label or every base class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ColumnClass {
    Label(ClassLabel),
    All,
}

impl ColumnClass {
    pub fn as_str(self) -> &'static str {
        match self {
            ColumnClass::Label(l) => l.as_str(),
            ColumnClass::All => "All",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyzeOptions {
    pub threshold: f64,
    pub dist_mode: DistMode,
    /// Source whose seeds form the overlap reference.
    pub reference_source: String,
}

impl Default for AnalyzeOptions {
    fn default() -> Self {
        AnalyzeOptions {
            threshold: DEFAULT_THRESHOLD,
            dist_mode: DistMode::Normalized,
            reference_source: "google".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedJudgment {
    pub post_id: String,
    pub canonical: String,
    pub kind: UriKind,
    pub judgment: RelevanceJudgment,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionRow {
    pub cell: CellKey,
    pub class: ClassLabel,
    pub groups: usize,
    pub posts: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UriCountRow {
    pub cell: CellKey,
    pub class: ClassLabel,
    pub link_posts: usize,
    pub all: usize,
    pub html: usize,
    pub non_html: usize,
    pub unknown: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionRow {
    pub bin: KBin,
    pub source: Source,
    pub class: ColumnClass,
    pub kind: KindFilter,
    pub probability: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionalRow {
    pub source: Source,
    pub class: ColumnClass,
    pub bin: KBin,
    pub probability: Option<f64>,
    pub post_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrecisionRow {
    pub cell: CellKey,
    pub class: ClassLabel,
    pub kind: KindFilter,
    pub avg_precision: Option<f64>,
    pub post_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgeRow {
    pub cell: CellKey,
    pub class: ClassLabel,
    pub distribution: AgeDistribution,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiversityRow {
    pub cell: CellKey,
    pub class: ClassLabel,
    pub seeds: usize,
    pub hosts: usize,
    pub diversity: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapRow {
    pub cell: CellKey,
    pub class: ClassLabel,
    pub candidate: usize,
    pub shared: usize,
    pub overlap: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub partition: Vec<PartitionRow>,
    pub uri_counts: Vec<UriCountRow>,
    pub distribution: Vec<DistributionRow>,
    pub conditional: Vec<ConditionalRow>,
    pub precision: Vec<PrecisionRow>,
    pub ages: Vec<AgeRow>,
    pub diversity: Vec<DiversityRow>,
    pub overlap: Vec<OverlapRow>,
    pub judgments: Vec<SeedJudgment>,
    pub warnings: Vec<String>,
}

/// Collections per (cell, label), with MC as the PnA1 and PnAn seeds
/// deduplicated by canonical URI.
pub fn labeled_collections(
    partition: &Partition,
    extraction: &Extraction,
) -> BTreeMap<(CellKey, ClassLabel), Vec<SeedUri>> {
    let mut out: BTreeMap<(CellKey, ClassLabel), Vec<SeedUri>> = BTreeMap::new();
    for (key, coll) in &extraction.collections {
        let label: ClassLabel = key.post_class.into();
        out.insert((key.cell.clone(), label), coll.seeds.clone());
        if key.post_class.is_micro_collection() {
            let mc = out.entry((key.cell.clone(), ClassLabel::MC)).or_default();
            let seen: HashSet<String> = mc.iter().map(|s| s.canonical.clone()).collect();
            mc.extend(coll.seeds.iter().filter(|s| !seen.contains(&s.canonical)).cloned());
        }
    }
    // Keep the MC label only where a micro-collection class exists.
    let labeled = partition.labeled();
    out.retain(|k, _| labeled.contains_key(k));
    out
}

/// Membership = one (group, post) pair.
fn memberships(groups: &[PostGroup]) -> impl Iterator<Item = &str> {
    groups.iter().flat_map(|g| g.post_ids.iter().map(String::as_str))
}

fn count_kind(seeds: &[PostSeed], filter: KindFilter) -> usize {
    seeds.iter().filter(|s| filter.accepts(s.kind)).count()
}

struct Judge<'a> {
    corpus: &'a Corpus,
    fetcher: Option<&'a Fetcher>,
    golds: HashMap<&'a str, TermVector>,
    threshold: f64,
}

impl Judge<'_> {
    /// Text a seed is judged on: the page for HTML seeds, the embedding
    /// post for non-HTML ones, nothing for seeds of unknown kind.
    fn text(&self, post_id: &str, seed: &PostSeed) -> Result<String, String> {
        match seed.kind {
            UriKind::NonHtml => Ok(self.corpus.post(post_id).map(|p| p.text.clone()).unwrap_or_default()),
            UriKind::Unknown => Err(format!("seed {} has unknown kind", seed.canonical)),
            UriKind::Html => match self.fetcher {
                None => Err(format!("seed {} not fetched (no fetcher)", seed.canonical)),
                Some(f) => match f.dereference(&seed.canonical) {
                    Ok(r) => page_text(&r).map_err(|e| format!("seed {}: {e}", seed.canonical)),
                    Err(e) => Err(e.to_string()),
                },
            },
        }
    }
}

/// Computes every report table.
pub fn analyze(
    corpus: &Corpus,
    partition: &Partition,
    extraction: &Extraction,
    golds: &BTreeMap<String, GoldStandard>,
    fetcher: Option<&Fetcher>,
    opts: &AnalyzeOptions,
) -> MetricReport {
    let mut report = MetricReport::default();
    let labeled = partition.labeled();
    let collections = labeled_collections(partition, extraction);

    // Seed judgments, one per (post, seed), for posts whose topic has a gold vector.
    let judge = Judge {
        corpus,
        fetcher,
        golds: golds.iter().map(|(t, g)| (t.as_str(), g.vector())).collect(),
        threshold: opts.threshold,
    };
    let mut missing_gold: Vec<&str> = partition
        .keys
        .iter()
        .map(|k| k.topic_id.as_str())
        .filter(|t| !golds.contains_key(*t))
        .collect();
    missing_gold.dedup();
    for t in missing_gold {
        report
            .warnings
            .push(format!("topic {t} has no gold standard; its precision is NA"));
    }

    let post_ids: Vec<&String> = extraction.post_seeds.keys().collect();
    let judged: Vec<(String, Vec<RelevanceJudgment>, Vec<String>)> = post_ids
        .par_iter()
        .filter_map(|id| {
            let post = corpus.post(id)?;
            let gold = judge.golds.get(post.topic_id.as_str())?;
            let mut warnings = Vec::new();
            let js = extraction
                .seeds_of(id)
                .iter()
                .map(|seed| {
                    let text = judge.text(id, seed).unwrap_or_else(|w| {
                        warnings.push(w);
                        String::new()
                    });
                    judge_relevance(&[text], gold, judge.threshold)
                })
                .collect();
            Some(((*id).clone(), js, warnings))
        })
        .collect();
    let mut judgments: HashMap<String, Vec<RelevanceJudgment>> = HashMap::new();
    let mut seed_warnings: Vec<String> = Vec::new();
    for (id, js, warnings) in judged {
        for (seed, j) in extraction.seeds_of(&id).iter().zip(&js) {
            report.judgments.push(SeedJudgment {
                post_id: id.clone(),
                canonical: seed.canonical.clone(),
                kind: seed.kind,
                judgment: j.clone(),
            });
        }
        seed_warnings.extend(warnings);
        judgments.insert(id, js);
    }
    seed_warnings.sort();
    seed_warnings.dedup();
    report.warnings.extend(seed_warnings);

    let precision_of = |post_id: &str, filter: KindFilter| -> Option<f64> {
        let js = judgments.get(post_id)?;
        let flags: Vec<bool> = extraction
            .seeds_of(post_id)
            .iter()
            .zip(js)
            .filter(|(s, _)| filter.accepts(s.kind))
            .map(|(_, j)| j.relevant)
            .collect();
        post_precision(&flags)
    };

    // Partition, URI counts and precision per cell.
    for ((cell, label), groups) in &labeled {
        report.partition.push(PartitionRow {
            cell: cell.clone(),
            class: *label,
            groups: groups.len(),
            posts: memberships(groups).count(),
        });
        let seeds = collections.get(&(cell.clone(), *label)).map_or(&[][..], Vec::as_slice);
        let kinds = |k: UriKind| seeds.iter().filter(|s| s.kind == k).count();
        report.uri_counts.push(UriCountRow {
            cell: cell.clone(),
            class: *label,
            link_posts: memberships(groups)
                .filter(|p| !extraction.seeds_of(p).is_empty())
                .count(),
            all: seeds.len(),
            html: kinds(UriKind::Html),
            non_html: kinds(UriKind::NonHtml),
            unknown: kinds(UriKind::Unknown),
        });
        for filter in KindFilter::ALL {
            let precisions: Vec<f64> = memberships(groups).filter_map(|p| precision_of(p, filter)).collect();
            let avg = class_average_precision(&precisions);
            report.precision.push(PrecisionRow {
                cell: cell.clone(),
                class: *label,
                kind: filter,
                avg_precision: avg.map(|a| a.0),
                post_count: avg.map_or(0, |a| a.1),
            });
        }
    }

    // Source-level columns: every class label plus All (base classes).
    // Entries carry the stratum the literal mode divides by: the topic for
    // a class column, the (topic, class) pair for All.
    let mut columns: BTreeMap<(Source, ColumnClass), Vec<(String, &str)>> = BTreeMap::new();
    for ((cell, label), groups) in &labeled {
        let posts: Vec<&str> = memberships(groups).collect();
        columns
            .entry((cell.source.clone(), ColumnClass::Label(*label)))
            .or_default()
            .extend(posts.iter().map(|p| (cell.topic_id.clone(), *p)));
        if *label != ClassLabel::MC {
            columns
                .entry((cell.source.clone(), ColumnClass::All))
                .or_default()
                .extend(posts.iter().map(|p| (format!("{}\u{1f}{}", cell.topic_id, label), *p)));
        }
    }
    for ((source, class), entries) in &columns {
        for filter in KindFilter::ALL {
            let mut strata: BTreeMap<String, Vec<usize>> = BTreeMap::new();
            for (stratum, post) in entries {
                strata
                    .entry(stratum.clone())
                    .or_default()
                    .push(count_kind(extraction.seeds_of(post), filter));
            }
            let column = distribution_column(&strata, opts.dist_mode);
            for bin in KBin::ALL {
                report.distribution.push(DistributionRow {
                    bin,
                    source: source.clone(),
                    class: *class,
                    kind: filter,
                    probability: column.as_ref().map(|c| c[&bin]),
                });
            }
        }
        let samples: Vec<(usize, f64)> = entries
            .iter()
            .filter_map(|(_, post)| {
                let k = count_kind(extraction.seeds_of(post), KindFilter::Html);
                precision_of(post, KindFilter::Html).map(|p| (k, p))
            })
            .collect();
        let by_bin = distribution::mean_by_bin(&samples);
        for bin in KBin::ALL {
            let cell = by_bin.get(&bin);
            report.conditional.push(ConditionalRow {
                source: source.clone(),
                class: *class,
                bin,
                probability: cell.map(|c| c.0),
                post_count: cell.map_or(0, |c| c.1),
            });
        }
    }

    // Ages, diversity and overlap per labeled collection.
    let mut reference: HashMap<&str, HashSet<&str>> = HashMap::new();
    for ((cell, label), seeds) in &collections {
        if cell.source.as_str() == opts.reference_source && *label != ClassLabel::MC {
            reference
                .entry(cell.topic_id.as_str())
                .or_default()
                .extend(seeds.iter().map(|s| s.canonical.as_str()));
        }
    }
    let mut reference_warned = HashSet::new();
    for ((cell, label), seeds) in &collections {
        let samples: Vec<AgeSample> = match fetcher {
            None => Vec::new(),
            Some(f) => seeds
                .par_iter()
                .filter_map(|s| {
                    let r = f.dereference(&s.canonical).ok()?;
                    if !r.is_success() {
                        return None;
                    }
                    estimate_publication_date(&r).map(|d| AgeSample::new(&s.canonical, d, s.retrieved_at))
                })
                .collect(),
        };
        report.ages.push(AgeRow {
            cell: cell.clone(),
            class: *label,
            distribution: age_distribution(&samples),
            samples: samples.len(),
        });

        let hosts: Vec<&str> = seeds.iter().map(|s| s.hostname.as_str()).collect();
        report.diversity.push(DiversityRow {
            cell: cell.clone(),
            class: *label,
            seeds: seeds.len(),
            hosts: hosts.iter().collect::<HashSet<_>>().len(),
            diversity: hostname_diversity(&hosts),
        });

        if cell.source.as_str() == opts.reference_source {
            continue;
        }
        let candidate: Vec<&str> = seeds.iter().map(|s| s.canonical.as_str()).collect();
        let reference_set = reference.get(cell.topic_id.as_str());
        if reference_set.is_none() && reference_warned.insert(cell.topic_id.clone()) {
            report.warnings.push(format!(
                "topic {} has no {} seeds; overlap is NA",
                cell.topic_id, opts.reference_source
            ));
        }
        let reference_list: Vec<&str> = reference_set.map(|s| s.iter().copied().collect()).unwrap_or_default();
        let shared = candidate.iter().filter(|c| reference_list.contains(c)).count();
        report.overlap.push(OverlapRow {
            cell: cell.clone(),
            class: *label,
            candidate: candidate.len(),
            shared,
            overlap: reference_set.and_then(|_| serp_overlap(&reference_list, &candidate)),
        });
    }
    report
}
