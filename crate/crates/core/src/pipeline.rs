//! End-to-end runs: configuration, orchestration and the run manifest.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::time::Duration;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::analytics::{analyze, AnalyzeOptions, DistMode, MetricReport};
use crate::corpus::adapters::{HtmlSerpAdapter, RedditAdapter, SearchContext, SerpAdapter};
use crate::corpus::{
    expand_thread, load_corpus, Clock, Corpus, CorpusError, FetchPolicy, Fetcher, FixtureTransport, ProvenanceEntry,
    QueryKind, Source, TopicSpec, Vertical,
};
use crate::extraction::{assemble_collections, DedupPolicy, ExtractOptions, Extraction};
use crate::goldstandard::{build_gold_standard, extract_references, GoldError, GoldStandard};
use crate::segmentation::{partition_corpus, ClassLabel, Partition, SegmentOptions, Selector};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FetchMode {
    /// Replay responses from a fixture directory.
    #[default]
    Offline,
    Live,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub corpus: PathBuf,
    pub topics: Option<PathBuf>,
    pub select_topics: Vec<String>,
    pub select_sources: Vec<Source>,
    pub select_verticals: Vec<Vertical>,
    pub select_classes: Vec<ClassLabel>,
    pub mode: FetchMode,
    pub fixtures: Option<PathBuf>,
    pub threshold: f64,
    pub reply_limit: usize,
    pub depth_limit: usize,
    pub max_redirects: usize,
    pub politeness_delay_ms: u64,
    #[serde(skip)]
    pub out: PathBuf,
    pub dist_mode: DistMode,
    pub mc_exclude_root: bool,
    pub global_dedup: bool,
    pub strict: bool,
    pub jobs: Option<usize>,
    pub reference_source: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            corpus: PathBuf::new(),
            topics: None,
            select_topics: vec![],
            select_sources: vec![],
            select_verticals: vec![],
            select_classes: vec![],
            mode: FetchMode::Offline,
            fixtures: None,
            threshold: 0.25,
            reply_limit: 500,
            depth_limit: 3,
            max_redirects: 10,
            politeness_delay_ms: 1000,
            out: PathBuf::from("report"),
            dist_mode: DistMode::Normalized,
            mc_exclude_root: false,
            global_dedup: false,
            strict: false,
            jobs: None,
            reference_source: "google".into(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("threshold must lie strictly between 0 and 1, got {0}")]
    Threshold(f64),
    #[error("fixture directory {0} does not exist")]
    MissingFixtures(String),
    #[error("offline mode needs --fixtures")]
    NoFixtures,
    #[error("--jobs must be at least 1")]
    Jobs,
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("configuration: {0}")]
    Config(#[from] ConfigError),
    #[error("{module}: {message}")]
    Module { module: &'static str, message: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl PipelineError {
    /// 2 for configuration and validation problems, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) => 2,
            PipelineError::Module { module: "corpus", .. } => 2,
            _ => 1,
        }
    }

    fn module(module: &'static str, e: impl std::fmt::Display) -> Self {
        PipelineError::Module {
            module,
            message: e.to_string(),
        }
    }

    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        PipelineError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

impl RunConfig {
    /// Checks invariants; `needs_fetcher` is set by stages that dereference.
    pub fn validate(&self, needs_fetcher: bool) -> Result<(), ConfigError> {
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(ConfigError::Threshold(self.threshold));
        }
        if self.jobs == Some(0) {
            return Err(ConfigError::Jobs);
        }
        if self.mode == FetchMode::Offline {
            match &self.fixtures {
                Some(dir) if !dir.is_dir() => return Err(ConfigError::MissingFixtures(dir.display().to_string())),
                None if needs_fetcher => return Err(ConfigError::NoFixtures),
                _ => {}
            }
        }
        if self.reference_source.trim().is_empty() {
            return Err(ConfigError::Invalid("reference source must not be empty".into()));
        }
        Ok(())
    }

    pub fn selector(&self) -> Selector {
        Selector {
            topics: self.select_topics.clone(),
            sources: self.select_sources.clone(),
            verticals: self.select_verticals.clone(),
        }
    }

    pub fn segment_options(&self) -> SegmentOptions {
        SegmentOptions {
            mc_exclude_root: self.mc_exclude_root,
        }
    }

    pub fn extract_options(&self) -> ExtractOptions {
        ExtractOptions {
            depth_limit: self.depth_limit,
            dedup: if self.global_dedup {
                DedupPolicy::Global
            } else {
                DedupPolicy::PerCollection
            },
        }
    }

    pub fn analyze_options(&self) -> AnalyzeOptions {
        AnalyzeOptions {
            threshold: self.threshold,
            dist_mode: self.dist_mode,
            reference_source: self.reference_source.clone(),
        }
    }

    fn policy(&self) -> FetchPolicy {
        FetchPolicy {
            max_redirects: self.max_redirects,
            politeness_delay: match self.mode {
                FetchMode::Offline => Duration::ZERO,
                FetchMode::Live => Duration::from_millis(self.politeness_delay_ms),
            },
            strict: self.strict,
        }
    }

    /// Offline runs replay fixtures under a clock pinned to the latest
    /// retrieval time in the corpus, so outputs do not depend on when the
    /// run happens.
    pub fn fetcher(&self, corpus: &Corpus) -> Result<Option<Fetcher>, PipelineError> {
        match self.mode {
            FetchMode::Offline => {
                let Some(dir) = &self.fixtures else { return Ok(None) };
                let transport = FixtureTransport::new(dir).map_err(|e| PipelineError::io(dir, e))?;
                Ok(Some(
                    Fetcher::new(transport, self.policy()).with_clock(Clock::Fixed(pinned_time(corpus))),
                ))
            }
            FetchMode::Live => live_fetcher(self.policy()),
        }
    }

    pub fn is_selected(&self, label: ClassLabel) -> bool {
        self.select_classes.is_empty() || self.select_classes.contains(&label)
    }
}

#[cfg(feature = "live")]
fn live_fetcher(policy: FetchPolicy) -> Result<Option<Fetcher>, PipelineError> {
    use crate::corpus::{cache_dir, http::HttpTransport, DiskCache};
    let http = HttpTransport::new(
        concat!("seedsmith/", env!("CARGO_PKG_VERSION")),
        Duration::from_secs(30),
    )
    .map_err(|e| PipelineError::module("corpus", e.0))?;
    let dir = cache_dir();
    let cached = DiskCache::new(http, &dir).map_err(|e| PipelineError::io(&dir, e))?;
    Ok(Some(Fetcher::new(cached, policy)))
}

#[cfg(not(feature = "live"))]
fn live_fetcher(_policy: FetchPolicy) -> Result<Option<Fetcher>, PipelineError> {
    Err(ConfigError::Invalid("this build has no live fetching support".into()).into())
}

pub fn pinned_time(corpus: &Corpus) -> DateTime<Utc> {
    corpus
        .posts()
        .map(|p| p.retrieved_at)
        .max()
        .unwrap_or(DateTime::<Utc>::UNIX_EPOCH)
}

/// Reads a topics file: a JSON array of topic specs.
pub fn load_topics(path: &Path) -> Result<Vec<TopicSpec>, PipelineError> {
    let text = std::fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| PipelineError::module("corpus", format!("{}: {e}", path.display())))
}

pub fn load_run_corpus(config: &RunConfig) -> Result<Corpus, PipelineError> {
    let corpus = load_corpus(&config.corpus).map_err(|e| PipelineError::module("corpus", e))?;
    match &config.topics {
        Some(path) => corpus
            .with_topics(load_topics(path)?)
            .map_err(|e| PipelineError::module("corpus", e)),
        None => Ok(corpus),
    }
}

/// Module-tagged warnings collected over a run.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Warnings {
    pub entries: Vec<WarningEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WarningEntry {
    pub module: String,
    pub message: String,
}

impl Warnings {
    pub fn extend(&mut self, module: &str, messages: impl IntoIterator<Item = String>) {
        for message in messages {
            tracing::warn!(module, "{message}");
            self.entries.push(WarningEntry {
                module: module.to_string(),
                message,
            });
        }
    }

    pub fn counts(&self) -> BTreeMap<String, usize> {
        let mut out = BTreeMap::new();
        for e in &self.entries {
            *out.entry(e.module.clone()).or_default() += 1;
        }
        out
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Builds the gold standard of every topic with a reference page.
pub fn build_golds(
    corpus: &Corpus,
    topics: &BTreeSet<String>,
    fetcher: Option<&Fetcher>,
    strict: bool,
    warnings: &mut Warnings,
) -> Result<BTreeMap<String, GoldStandard>, PipelineError> {
    let mut golds = BTreeMap::new();
    let Some(fetcher) = fetcher else {
        if !topics.is_empty() {
            warnings.extend(
                "goldstandard",
                ["no fetcher configured; gold standards skipped".to_string()],
            );
        }
        return Ok(golds);
    };
    for topic_id in topics {
        let Some(topic) = corpus.topic(topic_id) else { continue };
        let Some(page_uri) = &topic.reference_page else {
            warnings.extend("goldstandard", [format!("topic {topic_id} has no reference page")]);
            continue;
        };
        let page = fetcher
            .dereference(page_uri)
            .map_err(|e| PipelineError::module("goldstandard", e))?;
        let refs = extract_references(&page);
        warnings.extend("goldstandard", refs.warnings);
        match build_gold_standard(topic, &refs.uris, fetcher, fetcher.clock().now()) {
            Ok(gold) => {
                warnings.extend(
                    "goldstandard",
                    gold.failures
                        .iter()
                        .map(|f| format!("topic {topic_id}: reference {} failed: {}", f.uri, f.reason)),
                );
                golds.insert(topic_id.clone(), gold);
            }
            Err(e @ (GoldError::NoReferences(_) | GoldError::AllReferencesFailed { .. })) if !strict => {
                warnings.extend("goldstandard", [e.to_string()]);
            }
            Err(e) => return Err(PipelineError::module("goldstandard", e)),
        }
    }
    Ok(golds)
}

/// Everything a run produces before it is written out.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub partition: Partition,
    pub extraction: Extraction,
    pub golds: BTreeMap<String, GoldStandard>,
    pub report: MetricReport,
    pub warnings: Warnings,
    pub corpus_posts: usize,
    pub fetch_mode: FetchMode,
}

/// Segment, extract, build gold standards and analyze.
pub fn execute(config: &RunConfig, corpus: &Corpus) -> Result<RunOutput, PipelineError> {
    let fetcher = config.fetcher(corpus)?;
    let mut warnings = Warnings::default();

    let partition = partition_corpus(corpus, &config.selector(), &config.segment_options());
    warnings.extend("segmentation", partition.warnings.clone());

    let extraction = assemble_collections(corpus, &partition, fetcher.as_ref(), &config.extract_options())
        .map_err(|e| PipelineError::module("extraction", e))?;
    warnings.extend("extraction", extraction.warnings.clone());

    let topics: BTreeSet<String> = partition.keys.iter().map(|k| k.topic_id.clone()).collect();
    let golds = build_golds(corpus, &topics, fetcher.as_ref(), config.strict, &mut warnings)?;

    let mut report = analyze(
        corpus,
        &partition,
        &extraction,
        &golds,
        fetcher.as_ref(),
        &config.analyze_options(),
    );
    warnings.extend("analytics", std::mem::take(&mut report.warnings));
    filter_classes(&mut report, config);

    Ok(RunOutput {
        partition,
        extraction,
        golds,
        report,
        warnings,
        corpus_posts: corpus.len(),
        fetch_mode: config.mode,
    })
}

fn filter_classes(report: &mut MetricReport, config: &RunConfig) {
    use crate::analytics::ColumnClass;
    if config.select_classes.is_empty() {
        return;
    }
    let keep = |l: ClassLabel| config.is_selected(l);
    let keep_col = |c: ColumnClass| match c {
        ColumnClass::Label(l) => keep(l),
        ColumnClass::All => true,
    };
    report.partition.retain(|r| keep(r.class));
    report.uri_counts.retain(|r| keep(r.class));
    report.precision.retain(|r| keep(r.class));
    report.ages.retain(|r| keep(r.class));
    report.diversity.retain(|r| keep(r.class));
    report.overlap.retain(|r| keep(r.class));
    report.distribution.retain(|r| keep_col(r.class));
    report.conditional.retain(|r| keep_col(r.class));
}

/// Runs the whole pipeline and writes the report bundle to `config.out`.
pub fn run_pipeline(config: &RunConfig, format: crate::report::Format) -> Result<RunOutput, PipelineError> {
    config.validate(true)?;
    let work = || {
        let corpus = load_run_corpus(config)?;
        let output = execute(config, &corpus)?;
        crate::report::emit_report(&output, config, format)?;
        Ok(output)
    };
    with_pool(config.jobs, work)
}

/// Runs `work` on a dedicated pool of `jobs` threads, or the global pool.
pub fn with_pool<T, E>(jobs: Option<usize>, work: impl FnOnce() -> Result<T, E> + Send) -> Result<T, E>
where
    T: Send,
    E: Send + From<PipelineError>,
{
    match jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| E::from(PipelineError::module("cli", e)))?
            .install(work),
        None => work(),
    }
}

/// Options for collecting a corpus from SERPs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CollectOptions {
    pub reddit_verticals: Vec<Vertical>,
    /// `{query}`/`{start}` template of the Web search engine, if any.
    pub web_serp_template: Option<String>,
    pub web_serp_name: String,
    pub serp_limit: usize,
    pub reply_limit: usize,
}

impl Default for CollectOptions {
    fn default() -> Self {
        CollectOptions {
            reddit_verticals: vec![Vertical::Relevance, Vertical::Top, Vertical::New, Vertical::Comments],
            web_serp_template: Some("https://www.google.com/search?q={query}&start={start}".into()),
            web_serp_name: "google".into(),
            serp_limit: 500,
            reply_limit: 500,
        }
    }
}

/// Queries every configured SERP for every topic and expands Reddit
/// threads. Adapter failures are kept as provenance warnings.
pub fn collect_corpus(topics: Vec<TopicSpec>, fetcher: &Fetcher, opts: &CollectOptions) -> Result<Corpus, CorpusError> {
    let reddit = RedditAdapter::new(fetcher);
    let web = opts
        .web_serp_template
        .as_deref()
        .map(|t| HtmlSerpAdapter::new(fetcher, &opts.web_serp_name, t));
    let mut posts = Vec::new();
    let mut provenance = Vec::new();
    let mut seen = std::collections::HashSet::new();

    for topic in &topics {
        let mut searches: Vec<(&dyn SerpAdapter, Source, Vertical)> = opts
            .reddit_verticals
            .iter()
            .map(|v| (&reddit as &dyn SerpAdapter, Source::Reddit, v.clone()))
            .collect();
        if let Some(web) = &web {
            searches.push((web, Source::Other(opts.web_serp_name.clone()), Vertical::Relevance));
        }
        for (adapter, source, vertical) in searches {
            let ctx = SearchContext {
                topic_id: topic.topic_id.clone(),
                source: source.clone(),
                vertical,
                query: topic.text_query.clone(),
                query_kind: QueryKind::Text,
            };
            let mut entry = ProvenanceEntry {
                adapter: adapter.name().to_string(),
                query: ctx.query.clone(),
                at: fetcher.clock().now(),
                post_count: 0,
                warnings: vec![],
            };
            match adapter.search(&ctx, opts.serp_limit) {
                Ok(found) => {
                    for root in found {
                        let thread = if source == Source::Reddit {
                            match expand_thread(&root, &reddit, opts.reply_limit) {
                                Ok(t) => {
                                    entry.warnings.extend(t.warnings);
                                    t.posts
                                }
                                Err(e) => {
                                    entry.warnings.push(e.to_string());
                                    vec![root]
                                }
                            }
                        } else {
                            vec![root]
                        };
                        for post in thread {
                            if seen.insert(post.id.clone()) {
                                entry.post_count += 1;
                                posts.push(post);
                            }
                        }
                    }
                }
                Err(e) => entry.warnings.push(e.to_string()),
            }
            provenance.push(entry);
        }
    }
    Corpus::new(topics, posts, provenance)
}
