use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use seedsmith::analytics::DistMode;
use seedsmith::corpus::{write_corpus, Source, Vertical};
use seedsmith::pipeline::{self, CollectOptions, ConfigError, FetchMode, PipelineError, RunConfig, Warnings};
use seedsmith::report::{self, Format};
use seedsmith::segmentation::{partition_corpus, ClassLabel};

#[derive(Parser)]
#[command(
    name = "seedsmith",
    version,
    about = "Seed URIs from social media posts, and how good they are"
)]
struct Cli {
    /// More log output (repeat for debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate and normalize a corpus, or collect one from SERPs with --collect.
    Ingest {
        #[command(flatten)]
        common: Common,
        /// Query the configured SERPs for every topic instead of reading --corpus.
        #[arg(long)]
        collect: bool,
        /// Results kept per SERP when collecting.
        #[arg(long, default_value_t = 500)]
        serp_limit: usize,
    },
    /// Reconstruct reply trees and assign post classes.
    Segment(Common),
    /// Build seed collections for every populated cell.
    Extract(Common),
    /// Build per-topic gold standards from reference pages.
    Goldstd(Common),
    /// Compute all measures and write report.json.
    Analyze(Common),
    /// Compute all measures and write the report bundle in one format.
    Report {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
        format: FormatArg,
    },
    /// Full pipeline: every CSV and JSON export plus the manifest.
    Run(Common),
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Offline,
    Live,
}

#[derive(Clone, Copy, ValueEnum)]
enum DistModeArg {
    Normalized,
    Literal,
}

#[derive(Args, Clone)]
struct Common {
    /// Corpus JSONL file.
    #[arg(long, default_value = "corpus.jsonl")]
    corpus: PathBuf,
    /// JSON array of topic specs replacing the corpus topics.
    #[arg(long)]
    topics: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "report")]
    out: PathBuf,
    /// Replay recorded responses, or fetch over the network.
    #[arg(long, value_enum, default_value_t = ModeArg::Offline)]
    mode: ModeArg,
    /// Directory of recorded responses used in offline mode.
    #[arg(long)]
    fixtures: Option<PathBuf>,
    /// Cosine a seed must exceed to count as relevant.
    #[arg(long, default_value_t = 0.25)]
    threshold: f64,
    /// Replies collected per expanded thread.
    #[arg(long, default_value_t = 500)]
    reply_limit: usize,
    /// Maximum chain of intra-site post links followed during substitution.
    #[arg(long, default_value_t = 3)]
    depth_limit: usize,
    /// Redirects followed before a fetch counts as failed.
    #[arg(long, default_value_t = 10)]
    max_redirects: usize,
    /// Minimum spacing between live requests to one host, in milliseconds.
    #[arg(long, default_value_t = 1000)]
    delay_ms: u64,
    /// How per-topic URI-count distributions are combined: pooled, or summed fractions.
    #[arg(long, value_enum, default_value_t = DistModeArg::Normalized)]
    dist_mode: DistModeArg,
    /// Leave thread roots out of micro-collection groups.
    #[arg(long)]
    mc_exclude_root: bool,
    /// Deduplicate seeds across all collections instead of per collection.
    #[arg(long)]
    global_dedup: bool,
    /// Worker threads for analysis; defaults to one per core.
    #[arg(long)]
    jobs: Option<usize>,
    /// Abort on the first fetch or module error.
    #[arg(long)]
    strict: bool,
    /// Restrict to these topics (repeatable).
    #[arg(long = "topic")]
    select_topics: Vec<String>,
    /// Restrict to these sources, e.g. reddit, twitter, scoopit (repeatable).
    #[arg(long = "source")]
    select_sources: Vec<String>,
    /// Restrict to these verticals (repeatable).
    #[arg(long = "vertical")]
    select_verticals: Vec<String>,
    /// Restrict outputs to these classes: P1A1, PnA1, PnAn, MC (repeatable).
    #[arg(long = "class")]
    select_classes: Vec<String>,
    /// Source whose seeds are the overlap reference.
    #[arg(long, default_value = "google")]
    reference_source: String,
}

impl Common {
    fn config(&self) -> Result<RunConfig, ConfigError> {
        let parse_all = |items: &[String], what: &str| -> Result<Vec<String>, ConfigError> {
            if items.iter().any(|s| s.trim().is_empty()) {
                return Err(ConfigError::Invalid(format!("empty {what} selector")));
            }
            Ok(items.to_vec())
        };
        let sources = parse_all(&self.select_sources, "source")?
            .iter()
            .map(|s| s.parse::<Source>().map_err(|e| ConfigError::Invalid(format!("{e:?}"))))
            .collect::<Result<_, _>>()?;
        let verticals = parse_all(&self.select_verticals, "vertical")?
            .iter()
            .map(|s| {
                s.parse::<Vertical>()
                    .map_err(|e| ConfigError::Invalid(format!("{e:?}")))
            })
            .collect::<Result<_, _>>()?;
        let classes = self
            .select_classes
            .iter()
            .map(|s| s.parse::<ClassLabel>().map_err(ConfigError::Invalid))
            .collect::<Result<_, _>>()?;
        Ok(RunConfig {
            corpus: self.corpus.clone(),
            topics: self.topics.clone(),
            select_topics: parse_all(&self.select_topics, "topic")?,
            select_sources: sources,
            select_verticals: verticals,
            select_classes: classes,
            mode: match self.mode {
                ModeArg::Offline => FetchMode::Offline,
                ModeArg::Live => FetchMode::Live,
            },
            fixtures: self.fixtures.clone(),
            threshold: self.threshold,
            reply_limit: self.reply_limit,
            depth_limit: self.depth_limit,
            max_redirects: self.max_redirects,
            politeness_delay_ms: self.delay_ms,
            out: self.out.clone(),
            dist_mode: match self.dist_mode {
                DistModeArg::Normalized => DistMode::Normalized,
                DistModeArg::Literal => DistMode::LiteralEq1,
            },
            mc_exclude_root: self.mc_exclude_root,
            global_dedup: self.global_dedup,
            strict: self.strict,
            jobs: self.jobs,
            reference_source: self.reference_source.clone(),
        })
    }
}

fn init_logging(verbose: u8) {
    let default = match verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let filter = tracing_subscriber::EnvFilter::try_from_default_env()
        .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new(default));
    tracing_subscriber::fmt()
        .with_env_filter(filter)
        .with_writer(std::io::stderr)
        .with_target(false)
        .init();
}

fn in_pool<T: Send>(config: &RunConfig, f: impl FnOnce() -> anyhow::Result<T> + Send) -> anyhow::Result<T> {
    pipeline::with_pool(config.jobs, f)
}

fn print_warnings(warnings: &Warnings) {
    if !warnings.is_empty() {
        eprintln!("{} warning(s); see manifest.json", warnings.len());
    }
}

fn create_out(config: &RunConfig) -> anyhow::Result<()> {
    std::fs::create_dir_all(&config.out).with_context(|| format!("creating {}", config.out.display()))
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Ingest {
            common,
            collect,
            serp_limit,
        } => {
            let config = common.config()?;
            config.validate(collect)?;
            let corpus = if collect {
                let topics_path = config
                    .topics
                    .as_ref()
                    .ok_or_else(|| ConfigError::Invalid("--collect needs --topics".into()))?;
                let topics = pipeline::load_topics(topics_path)?;
                let empty = seedsmith::corpus::Corpus::new(topics.clone(), vec![], vec![]).map_err(|e| {
                    PipelineError::Module {
                        module: "corpus",
                        message: e.to_string(),
                    }
                })?;
                let fetcher = config
                    .fetcher(&empty)?
                    .ok_or_else(|| ConfigError::Invalid("collecting needs a fetcher".into()))?;
                let opts = CollectOptions {
                    serp_limit,
                    reply_limit: config.reply_limit,
                    ..CollectOptions::default()
                };
                pipeline::collect_corpus(topics, &fetcher, &opts)?
            } else {
                pipeline::load_run_corpus(&config)?
            };
            create_out(&config)?;
            let path = config.out.join("corpus.jsonl");
            write_corpus(&corpus, &path)?;
            println!(
                "{} posts, {} topics -> {}",
                corpus.len(),
                corpus.topics().len(),
                path.display()
            );
        }
        Command::Segment(common) => {
            let config = common.config()?;
            config.validate(false)?;
            let corpus = pipeline::load_run_corpus(&config)?;
            let partition = partition_corpus(&corpus, &config.selector(), &config.segment_options());
            create_out(&config)?;
            let groups: Vec<_> = partition
                .groups()
                .filter(|g| config.is_selected(g.post_class.into()))
                .collect();
            let path = config.out.join("groups.json");
            report::write_json(&path, &groups)?;
            for w in &partition.warnings {
                eprintln!("warning: {w}");
            }
            println!(
                "{} groups in {} cells -> {}",
                groups.len(),
                partition.keys.len(),
                path.display()
            );
        }
        Command::Extract(common) => {
            let config = common.config()?;
            config.validate(false)?;
            in_pool(&config, || {
                let corpus = pipeline::load_run_corpus(&config)?;
                let fetcher = config.fetcher(&corpus)?;
                let partition = partition_corpus(&corpus, &config.selector(), &config.segment_options());
                let extraction = seedsmith::extraction::assemble_collections(
                    &corpus,
                    &partition,
                    fetcher.as_ref(),
                    &config.extract_options(),
                )
                .map_err(|e| PipelineError::Module {
                    module: "extraction",
                    message: e.to_string(),
                })?;
                create_out(&config)?;
                let seeds: Vec<_> = extraction
                    .collections
                    .values()
                    .filter(|c| config.is_selected(c.key.post_class.into()))
                    .flat_map(|c| &c.seeds)
                    .collect();
                report::write_seeds_csv(&config.out.join("seeds.csv"), &seeds)?;
                report::write_seeds_json(&config.out.join("seeds.json"), &seeds)?;
                for w in &extraction.warnings {
                    eprintln!("warning: {w}");
                }
                println!("{} seeds in {} collections", seeds.len(), extraction.collections.len());
                Ok(())
            })?;
        }
        Command::Goldstd(common) => {
            let config = common.config()?;
            config.validate(true)?;
            in_pool(&config, || {
                let corpus = pipeline::load_run_corpus(&config)?;
                let fetcher = config.fetcher(&corpus)?;
                let topics = corpus
                    .topics()
                    .map(|t| t.topic_id.clone())
                    .filter(|t| config.select_topics.is_empty() || config.select_topics.contains(t))
                    .collect();
                let mut warnings = Warnings::default();
                let golds = pipeline::build_golds(&corpus, &topics, fetcher.as_ref(), config.strict, &mut warnings)?;
                let dir = config.out.join("gold");
                std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
                for (topic, gold) in &golds {
                    let path = dir.join(format!("{topic}.json"));
                    std::fs::write(&path, gold.to_json()).with_context(|| format!("writing {}", path.display()))?;
                }
                for w in &warnings.entries {
                    eprintln!("warning: {}", w.message);
                }
                println!("{} gold standard(s) -> {}", golds.len(), dir.display());
                Ok(())
            })?;
        }
        Command::Analyze(common) => {
            let config = common.config()?;
            let output = pipeline::run_pipeline(&config, Format::Json)?;
            print_warnings(&output.warnings);
        }
        Command::Report { common, format } => {
            let config = common.config()?;
            let format = match format {
                FormatArg::Csv => Format::Csv,
                FormatArg::Json => Format::Json,
            };
            let output = pipeline::run_pipeline(&config, format)?;
            print_warnings(&output.warnings);
        }
        Command::Run(common) => {
            let config = common.config()?;
            let output = pipeline::run_pipeline(&config, Format::Both)?;
            print_warnings(&output.warnings);
            println!(
                "{} groups, {} seeds -> {}",
                output.partition.groups().count(),
                output
                    .extraction
                    .collections
                    .values()
                    .map(|c| c.seeds.len())
                    .sum::<usize>(),
                config.out.display()
            );
        }
    }
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<ConfigError>().is_some() {
        return 2;
    }
    if let Some(p) = err.downcast_ref::<PipelineError>() {
        return p.exit_code() as u8;
    }
    if err.downcast_ref::<seedsmith::corpus::CorpusError>().is_some() {
        return 2;
    }
    1
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_logging(cli.verbose);
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
