//! One function per acceptance criterion. Each returns a short summary on
//! success or the first mismatch found.

#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::time::{Duration, Instant};

use chrono::{TimeZone, Utc};
use rand::Rng;
use seedsmith::analytics::{
    analyze, hostname_diversity, judge_relevance, judge_vector, AnalyzeOptions, DistMode, KindFilter,
};
use seedsmith::corpus::{
    fixture::encode_response, read_corpus, write_corpus_to, Clock, Corpus, Expectation, FetchPolicy, Fetcher,
    FixtureTransport, OccurrenceBound, Post, ProvenanceEntry, QueryKind, RawResponse, Recurrence, RecurrenceKind,
    Source, TopicSpec, Vertical,
};
use seedsmith::extraction::{assemble_collections, ExtractOptions};
use seedsmith::goldstandard::{build_gold_standard, TermVector};
use seedsmith::pipeline::{run_pipeline, RunConfig};
use seedsmith::report::Format;
use seedsmith::segmentation::{partition_corpus, SegmentOptions, Selector};

use super::*;

pub type Outcome = Result<String, String>;

// ------------------------------------------------------------------ AC1

pub fn segmentation_oracle(cases: u64) -> Outcome {
    let start = Instant::now();
    let mut by_class: BTreeMap<String, usize> = BTreeMap::new();
    let mut detached = 0;
    for case in 0..cases {
        let mut r = rng(case);
        let (corpus, selector) = random_forest(&mut r, 20, 4);
        for exclude in [false, true] {
            let got = signatures(&partition_corpus(
                &corpus,
                &selector,
                &SegmentOptions {
                    mc_exclude_root: exclude,
                },
            ));
            let want = oracle_groups(&corpus, &selector, exclude);
            if got != want {
                let extra: Vec<_> = got.difference(&want).collect();
                let missing: Vec<_> = want.difference(&got).collect();
                return Err(format!(
                    "case {case} (mc_exclude_root={exclude}): extra {extra:?}, missing {missing:?}"
                ));
            }
            for g in &got {
                *by_class.entry(g.3.clone()).or_default() += 1;
                detached += usize::from(g.4.starts_with("detached:"));
            }
        }
    }
    let elapsed = start.elapsed();
    if elapsed > Duration::from_secs(10) {
        return Err(format!("{cases} forests took {elapsed:.2?} (limit 10 s)"));
    }
    Ok(format!(
        "{cases} forests, groups {by_class:?} ({detached} detached), {elapsed:.2?}"
    ))
}

// ------------------------------------------------------------------ AC2

fn kind_count(filter: KindFilter) -> impl Fn(&Post) -> usize {
    move |p| {
        let (html, non) = oracle_link_counts(p);
        match filter {
            KindFilter::All => html + non,
            KindFilter::Html => html,
            KindFilter::NonHtml => non,
        }
    }
}

pub fn distribution_correctness(cases: u64) -> Outcome {
    let mut cells = 0;
    for case in 0..cases {
        let mut r = rng(10_000 + case);
        let corpus = random_link_corpus(&mut r);
        let selector = Selector::default();
        let partition = partition_corpus(&corpus, &selector, &SegmentOptions::default());
        let extraction = assemble_collections(&corpus, &partition, None, &ExtractOptions::default())
            .map_err(|e| format!("case {case}: {e}"))?;
        let groups = oracle_groups(&corpus, &selector, false);

        for mode in [DistMode::Normalized, DistMode::LiteralEq1] {
            let opts = AnalyzeOptions {
                dist_mode: mode,
                ..AnalyzeOptions::default()
            };
            let report = analyze(&corpus, &partition, &extraction, &BTreeMap::new(), None, &opts);
            let mut got: BTreeMap<(String, String, KindFilter, String), Option<f64>> = BTreeMap::new();
            for row in &report.distribution {
                got.insert(
                    (
                        row.source.to_string(),
                        row.class.as_str().to_string(),
                        row.kind,
                        row.bin.to_string(),
                    ),
                    row.probability,
                );
            }
            let mut expected_rows = 0;
            for filter in KindFilter::ALL {
                let columns = oracle_columns(&corpus, &groups, kind_count(filter));
                for ((source, label), strata) in &columns {
                    let mut sum = 0.0;
                    let mut any = false;
                    for bin in BINS {
                        expected_rows += 1;
                        let key = (source.clone(), label.clone(), filter, bin.to_string());
                        let actual = got
                            .get(&key)
                            .ok_or_else(|| format!("case {case}: no row for {key:?}"))?;
                        let want = match mode {
                            DistMode::Normalized => oracle_pooled(strata, bin),
                            DistMode::LiteralEq1 => oracle_literal(strata, bin),
                        };
                        let ok = match (actual, want) {
                            (None, None) => true,
                            (Some(a), Some(w)) => match mode {
                                DistMode::Normalized => *a == w,
                                DistMode::LiteralEq1 => (a - w).abs() <= 1e-12,
                            },
                            _ => false,
                        };
                        if !ok {
                            return Err(format!("case {case} {mode:?} {key:?}: got {actual:?}, want {want:?}"));
                        }
                        if let Some(a) = actual {
                            any = true;
                            sum += a;
                        }
                        cells += 1;
                    }
                    if mode == DistMode::Normalized && any && (sum - 1.0).abs() > 1e-9 {
                        return Err(format!("case {case} {source}/{label}/{filter:?}: column sums to {sum}"));
                    }
                }
            }
            if expected_rows != got.len() {
                return Err(format!(
                    "case {case} {mode:?}: {} rows reported, {expected_rows} expected",
                    got.len()
                ));
            }
        }
    }
    Ok(format!("{cases} corpora, {cells} cells checked in both modes"))
}

// ------------------------------------------------------------------ AC3

fn page(body: &str) -> Vec<u8> {
    encode_response(&RawResponse {
        status: 200,
        reason: "OK".into(),
        headers: vec![("Content-Type".into(), "text/html; charset=utf-8".into())],
        body: format!("<html><body><nav><a href=\"/\">Home</a></nav><article><p>{body}</p></article></body></html>")
            .into_bytes(),
    })
}

/// Fetcher over a temporary fixture directory holding `pages`.
pub fn fixture_fetcher(dir: &Path, pages: &[(&str, Vec<u8>)]) -> Fetcher {
    for (uri, bytes) in pages {
        let canonical = url::Url::parse(uri).unwrap().to_string();
        fs::write(
            dir.join(seedsmith::corpus::fixture::response_file_name(&canonical)),
            bytes,
        )
        .unwrap();
    }
    let policy = FetchPolicy {
        politeness_delay: Duration::ZERO,
        ..FetchPolicy::default()
    };
    Fetcher::new(FixtureTransport::new(dir).unwrap(), policy).with_clock(Clock::Fixed(retrieved()))
}

pub fn relevance_fixtures() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let sixteen = "alpha bravo charlie delta echo foxtrot golf hotel india juliet kilo lima mike november oscar papa";
    let fetcher = fixture_fetcher(
        dir.path(),
        &[
            ("https://ref.example/a", page("The flood and the rain.")),
            ("https://ref.example/b", page("A storm, a flood!")),
            ("https://ref.example/c", page(sixteen)),
        ],
    );
    let gold = build_gold_standard(
        &topic("flood"),
        &["https://ref.example/a".into(), "https://ref.example/b".into()],
        &fetcher,
        retrieved(),
    )
    .map_err(|e| e.to_string())?;
    let g = gold.vector();
    // Hand counts: flood 2, rain 1, storm 1 over four tokens.
    let want_gold = [("flood", 0.5), ("rain", 0.25), ("storm", 0.25)];
    for (t, w) in want_gold {
        let got = g.weights.get(t).copied().unwrap_or(f64::NAN);
        if (got - w).abs() > 1e-12 {
            return Err(format!("gold weight {t}: got {got}, want {w}"));
        }
    }
    if g.weights.len() != 3 {
        return Err(format!("gold has {} terms, want 3", g.weights.len()));
    }

    // Cosines computed by hand from the vectors above.
    //   "flood rescue":    0.25 / (sqrt(0.375) * sqrt(0.5))   = 1/sqrt(3)
    //   "rain rain storm": 0.25 / (sqrt(0.375) * sqrt(5)/3)   = sqrt(0.3)
    //   "the cake recipe": no shared term                     = 0
    let hand = [
        ("flood rescue", 0.577_350, true),
        ("rain rain storm", 0.547_723, true),
        ("the cake recipe", 0.0, false),
    ];
    for (text, cos, relevant) in hand {
        let j = judge_relevance(&[text], &g, 0.25);
        if (j.cosine - cos).abs() > 1e-4 || j.relevant != relevant {
            return Err(format!(
                "{text:?}: cosine {} relevant {}, want {cos} {relevant}",
                j.cosine, j.relevant
            ));
        }
    }

    // Boundary: one of sixteen equally weighted gold terms gives cosine exactly 1/4.
    let gold16 = build_gold_standard(&topic("b"), &["https://ref.example/c".into()], &fetcher, retrieved())
        .map_err(|e| e.to_string())?
        .vector();
    let j = judge_relevance(&["kilo"], &gold16, 0.25);
    if j.cosine != 0.25 || j.relevant {
        return Err(format!("boundary: cosine {} relevant {}", j.cosine, j.relevant));
    }

    // Scale invariance on random vectors.
    let mut r = rng(3);
    let vocab: Vec<String> = (0..12).map(|i| format!("w{i}")).collect();
    let random_vec = |r: &mut Rng8| -> TermVector {
        let mut weights = BTreeMap::new();
        for w in &vocab {
            if r.gen_bool(0.5) {
                weights.insert(w.clone(), r.gen_range(0.01..5.0));
            }
        }
        TermVector::from_weights(weights)
    };
    let mut flips = 0;
    for i in 0..100 {
        let c = random_vec(&mut r);
        let gv = random_vec(&mut r);
        let threshold = r.gen_range(0.05..0.95);
        let base = judge_vector(&c, &gv, threshold);
        let a = r.gen_range(1e-3..1e3);
        let b = r.gen_range(1e-3..1e3);
        let scaled = judge_vector(&c.scaled(a), &gv.scaled(b), threshold);
        if (base.cosine - scaled.cosine).abs() > 1e-9 {
            return Err(format!(
                "vector {i}: cosine {} vs {} after scaling",
                base.cosine, scaled.cosine
            ));
        }
        // A verdict may only differ when rounding straddles the threshold.
        if base.relevant != scaled.relevant && (base.cosine - threshold).abs() > 1e-12 {
            flips += 1;
        }
    }
    if flips > 0 {
        return Err(format!("{flips} verdicts changed under rescaling"));
    }
    Ok("gold weights, 3 hand cosines, boundary 0.25, 100 rescaled vectors".into())
}

// ------------------------------------------------------------------ AC4

pub fn diversity() -> Outcome {
    if hostname_diversity(&["www.cnn.com", "www.cnn.com", "www.cnn.com"]) != Some(0.0) {
        return Err("single host should give d=0".into());
    }
    if hostname_diversity(&["a.example", "b.example", "c.example", "d.example"]) != Some(1.0) {
        return Err("all distinct hosts should give d=1".into());
    }
    if hostname_diversity(&["only.example"]).is_some() || hostname_diversity::<&str>(&[]).is_some() {
        return Err("N<2 should be NA".into());
    }
    let mut r = rng(4);
    for case in 0..500 {
        let n = r.gen_range(0..30);
        let pool = r.gen_range(1..10);
        let hosts: Vec<String> = (0..n).map(|_| format!("h{}.example", r.gen_range(0..pool))).collect();
        let got = hostname_diversity(&hosts);
        let want = if n < 2 {
            None
        } else {
            let u = distinct_count(hosts.iter().map(String::as_str));
            Some((u as f64 - 1.0) / (n as f64 - 1.0))
        };
        if got != want {
            return Err(format!("case {case}: got {got:?}, want {want:?}"));
        }
    }
    Ok("endpoints, NA, 500 random collections".into())
}

// ------------------------------------------------------------------ AC5

pub fn fixture_config(out: &Path) -> RunConfig {
    let dir = fixture_dir();
    RunConfig {
        corpus: dir.join("corpus.jsonl"),
        fixtures: Some(dir.join("responses")),
        out: out.to_path_buf(),
        ..RunConfig::default()
    }
}

fn csv_files(root: &Path) -> Vec<String> {
    let mut out = Vec::new();
    for sub in ["", "ecdf"] {
        let Ok(entries) = fs::read_dir(root.join(sub)) else {
            continue;
        };
        for e in entries.flatten() {
            let name = e.file_name().to_string_lossy().to_string();
            if name.ends_with(".csv") {
                out.push(if sub.is_empty() { name } else { format!("{sub}/{name}") });
            }
        }
    }
    out.sort();
    out
}

pub fn golden_run() -> Outcome {
    let out = tempfile::tempdir().map_err(|e| e.to_string())?;
    let start = Instant::now();
    run_pipeline(&fixture_config(out.path()), Format::Csv).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();

    let golden = fixture_dir().join("golden");
    let want = csv_files(&golden);
    let got = csv_files(out.path());
    if want.is_empty() {
        return Err("no golden files".into());
    }
    if want != got {
        return Err(format!("file sets differ: golden {want:?}, produced {got:?}"));
    }
    for name in &want {
        let a = fs::read(golden.join(name)).map_err(|e| e.to_string())?;
        let b = fs::read(out.path().join(name)).map_err(|e| e.to_string())?;
        if a != b {
            let first = String::from_utf8_lossy(&a)
                .lines()
                .zip(String::from_utf8_lossy(&b).lines())
                .find(|(x, y)| x != y)
                .map(|(x, y)| format!("golden {x:?} vs {y:?}"))
                .unwrap_or_else(|| "length differs".into());
            return Err(format!("{name}: {first}"));
        }
    }
    if elapsed > Duration::from_secs(60) {
        return Err(format!("run took {elapsed:.2?} (limit 60 s)"));
    }
    Ok(format!("{} CSV files byte-identical, {elapsed:.2?}", want.len()))
}

// ------------------------------------------------------------------ AC6

const TEXT_BITS: [&str; 8] = [
    "plain words",
    "quote \" and backslash \\",
    "newline\nand tab\t",
    "unicode ünïcödé ✓ 🌊",
    "https://a.example/x?utm_source=t",
    "",
    "  padded  ",
    "{\"json\": [1, 2]}",
];

pub fn random_corpus(r: &mut Rng8) -> Corpus {
    let (forest, _) = random_forest(r, 15, 4);
    let mut topics: Vec<TopicSpec> = forest.topics().cloned().collect();
    for t in &mut topics {
        if r.gen_bool(0.5) {
            t.hashtag_query = Some(format!("#{}", t.topic_id));
            t.expectation = Expectation::Expected;
            t.recurrence = Recurrence {
                kind: RecurrenceKind::Recurring,
                regularity: Some("annual".into()),
            };
            t.start_definition = OccurrenceBound::Month { year: 2017, month: 8 };
            t.end_definition = OccurrenceBound::Day(chrono::NaiveDate::from_ymd_opt(2017, 9, 2).unwrap());
            t.reference_page = Some("https://en.wikipedia.org/wiki/X".into());
        }
    }
    let posts: Vec<Post> = forest
        .posts()
        .map(|p| {
            let mut p = p.clone();
            p.text = (0..r.gen_range(0..4))
                .map(|_| TEXT_BITS[r.gen_range(0..TEXT_BITS.len())])
                .collect::<Vec<_>>()
                .join(" ");
            p.raw_links = (0..r.gen_range(0..3))
                .map(|i| format!("https://l{i}.example/{}", p.id))
                .collect();
            p.query_kind = if r.gen_bool(0.5) {
                QueryKind::Hashtag
            } else {
                QueryKind::Text
            };
            if r.gen_bool(0.3) {
                p.platform_uri = Some(format!("https://reddit.com/r/x/comments/{}", p.id));
            }
            if r.gen_bool(0.2) {
                p.source = match p.source {
                    Source::Reddit => Source::Reddit,
                    _ => Source::Other("tumblr".into()),
                };
                p.vertical = Vertical::Other("hot".into());
            }
            p
        })
        .collect();
    // Replies must share their parent's source.
    let by_id: std::collections::HashMap<String, Source> =
        posts.iter().map(|p| (p.id.clone(), p.source.clone())).collect();
    let posts: Vec<Post> = posts
        .into_iter()
        .map(|mut p| {
            if let Some(parent) = &p.parent_id {
                let mut root = parent.clone();
                let parents: std::collections::HashMap<String, Option<String>> =
                    forest.posts().map(|q| (q.id.clone(), q.parent_id.clone())).collect();
                while let Some(Some(next)) = parents.get(&root) {
                    root = next.clone();
                }
                p.source = by_id[&root].clone();
            }
            p
        })
        .collect();
    let provenance = (0..r.gen_range(0..3))
        .map(|i| ProvenanceEntry {
            adapter: "reddit".into(),
            query: format!("q{i}"),
            at: Utc.with_ymd_and_hms(2018, 11, 6, 0, 0, i).unwrap(),
            post_count: i as usize,
            warnings: if i == 1 { vec!["partial".into()] } else { vec![] },
        })
        .collect();
    Corpus::new(topics, posts, provenance).expect("random corpus is valid")
}

fn read_tree(root: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for e in fs::read_dir(&dir).unwrap().flatten() {
            let path = e.path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(root).unwrap().to_string_lossy().to_string();
                out.insert(rel, fs::read(&path).unwrap());
            }
        }
    }
    out
}

pub fn roundtrip_and_determinism(cases: u64) -> Outcome {
    for case in 0..cases {
        let mut r = rng(20_000 + case);
        let corpus = random_corpus(&mut r);
        let mut first = Vec::new();
        write_corpus_to(&corpus, &mut first).map_err(|e| e.to_string())?;
        let back = read_corpus(first.as_slice()).map_err(|e| format!("case {case}: {e}"))?;
        if back != corpus {
            return Err(format!("case {case}: corpus changed on round trip"));
        }
        let mut second = Vec::new();
        write_corpus_to(&back, &mut second).map_err(|e| e.to_string())?;
        if first != second {
            return Err(format!("case {case}: serialized bytes changed on round trip"));
        }
    }

    // Two identical runs must agree on every file; a run on a different
    // worker pool may differ only in the manifest, which echoes the job count.
    let a = tempfile::tempdir().map_err(|e| e.to_string())?;
    let b = tempfile::tempdir().map_err(|e| e.to_string())?;
    let c = tempfile::tempdir().map_err(|e| e.to_string())?;
    run_pipeline(&fixture_config(a.path()), Format::Both).map_err(|e| e.to_string())?;
    run_pipeline(&fixture_config(b.path()), Format::Both).map_err(|e| e.to_string())?;
    let mut cfg = fixture_config(c.path());
    cfg.jobs = Some(3);
    run_pipeline(&cfg, Format::Both).map_err(|e| e.to_string())?;
    let (ta, tb, tc) = (read_tree(a.path()), read_tree(b.path()), read_tree(c.path()));
    if ta != tb {
        let name = ta.iter().find(|(k, v)| tb.get(*k) != Some(v)).map(|(k, _)| k.clone());
        return Err(format!("two identical runs differ (first: {name:?})"));
    }
    if ta.keys().ne(tc.keys()) {
        return Err("a run with --jobs 3 wrote a different file set".into());
    }
    if let Some(name) = ta.keys().find(|k| *k != "manifest.json" && ta[*k] != tc[*k]) {
        return Err(format!("{name} differs under --jobs 3"));
    }
    Ok(format!(
        "{cases} corpora round-tripped, {} files identical across runs",
        ta.len()
    ))
}
