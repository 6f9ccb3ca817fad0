//! Shared generators and brute-force oracles for the integration tests and
//! the acceptance runner. Nothing here calls into the code under test
//! except to build inputs.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::PathBuf;

use chrono::{DateTime, Duration, TimeZone, Utc};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use seedsmith::corpus::{
    Corpus, Expectation, OccurrenceBound, Post, QueryKind, Recurrence, RecurrenceKind, Source, TopicSpec, Vertical,
};
use seedsmith::segmentation::{Partition, Selector};

pub mod criteria;
pub mod replication;

pub type Rng8 = ChaCha8Rng;

pub fn rng(seed: u64) -> Rng8 {
    rand::SeedableRng::seed_from_u64(seed)
}

pub fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data/fixture_corpus")
}

pub fn retrieved() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2018, 11, 6, 12, 0, 0).unwrap()
}

pub fn topic(id: &str) -> TopicSpec {
    TopicSpec {
        topic_id: id.into(),
        text_query: format!("{id} query"),
        hashtag_query: None,
        expectation: Expectation::Unexpected,
        recurrence: Recurrence {
            kind: RecurrenceKind::NonRecurring,
            regularity: None,
        },
        start_definition: OccurrenceBound::Undefined,
        end_definition: OccurrenceBound::Undefined,
        reference_page: None,
    }
}

pub fn post(id: &str, topic: &str, source: Source, vertical: Vertical, author: &str, parent: Option<&str>) -> Post {
    Post {
        id: id.into(),
        source,
        vertical,
        query: format!("{topic} query"),
        query_kind: QueryKind::Text,
        topic_id: topic.into(),
        author: author.into(),
        parent_id: parent.map(String::from),
        serp_visible: parent.is_none(),
        created_at: None,
        retrieved_at: retrieved(),
        text: String::new(),
        raw_links: vec![],
        platform_uri: None,
    }
}

/// Random reply forest: at most `max_posts` posts by at most `max_authors`
/// authors over two topics, two sources and two verticals. Roughly a
/// third of the cases come with a vertical selector, which leaves replies
/// whose parent is outside the selection.
pub fn random_forest(rng: &mut Rng8, max_posts: usize, max_authors: usize) -> (Corpus, Selector) {
    let n = rng.gen_range(1..=max_posts);
    let authors = rng.gen_range(1..=max_authors);
    let topics = ["t0", "t1"];
    let sources = [Source::Reddit, Source::Twitter];
    let verticals = [Vertical::Top, Vertical::New];
    let base = Utc.with_ymd_and_hms(2017, 9, 1, 0, 0, 0).unwrap();

    let mut posts: Vec<Post> = Vec::with_capacity(n);
    for i in 0..n {
        let author = format!("a{}", rng.gen_range(0..authors));
        let vertical = verticals.choose(rng).unwrap().clone();
        let parent = if i == 0 || rng.gen_bool(0.3) {
            None
        } else {
            Some(rng.gen_range(0..i))
        };
        let mut p = match parent {
            None => post(
                &format!("p{i:02}"),
                topics.choose(rng).unwrap(),
                sources.choose(rng).unwrap().clone(),
                vertical,
                &author,
                None,
            ),
            Some(j) => {
                let parent = &posts[j];
                let parent_id = parent.id.clone();
                post(
                    &format!("p{i:02}"),
                    &parent.topic_id.clone(),
                    parent.source.clone(),
                    vertical,
                    &author,
                    Some(&parent_id),
                )
            }
        };
        if p.parent_id.is_none() {
            p.serp_visible = rng.gen_bool(0.85);
        }
        // Coarse timestamps so siblings tie and fall back to the id.
        p.created_at = if rng.gen_bool(0.1) {
            None
        } else {
            Some(base + Duration::minutes(rng.gen_range(0..6)))
        };
        posts.push(p);
    }
    posts.shuffle(rng);
    let corpus = Corpus::new(topics.iter().map(|t| topic(t)).collect(), posts, vec![]).expect("valid forest");
    let selector = if rng.gen_bool(0.3) {
        Selector {
            verticals: vec![verticals.choose(rng).unwrap().clone()],
            ..Selector::default()
        }
    } else {
        Selector::default()
    };
    (corpus, selector)
}

/// A group as (topic, source, vertical, class, root id, sorted members).
pub type GroupSig = (String, String, String, String, String, Vec<String>);

pub fn signatures(partition: &Partition) -> BTreeSet<GroupSig> {
    partition
        .groups()
        .map(|g| {
            let mut ids = g.post_ids.clone();
            ids.sort();
            (
                g.topic_id.clone(),
                g.source.to_string(),
                g.vertical.to_string(),
                g.post_class.as_str().to_string(),
                g.root_id.clone(),
                ids,
            )
        })
        .collect()
}

/// Brute-force classifier working from the class definitions on the flat
/// post list: every tree is found by walking parent pointers, every
/// self-reply chain by checking each node's full ancestor path.
pub fn oracle_groups(corpus: &Corpus, selector: &Selector, mc_exclude_root: bool) -> BTreeSet<GroupSig> {
    let selected: HashMap<&str, &Post> = corpus
        .posts()
        .filter(|p| selector.matches(p))
        .map(|p| (p.id.as_str(), p))
        .collect();

    // Tree key: ("post", root id) or ("detached", cell of the orphan, missing parent).
    #[derive(Clone, PartialEq, Eq, PartialOrd, Ord)]
    enum Top {
        Root(String),
        Detached(String, String, String, String),
    }
    let top_of = |p: &Post| -> Top {
        let mut cur = p;
        loop {
            match cur.parent_id.as_deref() {
                None => return Top::Root(cur.id.clone()),
                Some(parent) => match selected.get(parent) {
                    Some(next) => cur = next,
                    None => {
                        return Top::Detached(
                            cur.topic_id.clone(),
                            cur.source.to_string(),
                            cur.vertical.to_string(),
                            parent.to_string(),
                        )
                    }
                },
            }
        }
    };
    let mut trees: BTreeMap<Top, Vec<&Post>> = BTreeMap::new();
    for p in selected.values() {
        trees.entry(top_of(p)).or_default().push(p);
    }

    let mut out = BTreeSet::new();
    for (top, members) in trees {
        let authors: BTreeSet<&str> = members.iter().map(|p| p.author.as_str()).collect();
        let mut ids: Vec<String> = members.iter().map(|p| p.id.clone()).collect();
        ids.sort();
        match top {
            Top::Detached(t, s, v, parent) => {
                if members.len() >= 2 && authors.len() >= 2 {
                    out.insert((t, s, v, "PnAn".into(), format!("detached:{parent}"), ids));
                }
            }
            Top::Root(root_id) => {
                let root = selected[root_id.as_str()];
                let cell = (
                    root.topic_id.clone(),
                    root.source.to_string(),
                    root.vertical.to_string(),
                );
                let sig = |class: &str, ids: Vec<String>| {
                    (
                        cell.0.clone(),
                        cell.1.clone(),
                        cell.2.clone(),
                        class.to_string(),
                        root_id.clone(),
                        ids,
                    )
                };
                if root.serp_visible {
                    out.insert(sig("P1A1", vec![root_id.clone()]));
                }
                for x in &members {
                    if x.id == root_id {
                        continue;
                    }
                    let mut path = vec![*x];
                    let mut cur = *x;
                    while let Some(parent) = cur.parent_id.as_deref() {
                        cur = selected[parent];
                        path.push(cur);
                    }
                    let own = path.iter().all(|p| p.author == root.author);
                    let extends = members
                        .iter()
                        .any(|c| c.parent_id.as_deref() == Some(x.id.as_str()) && c.author == root.author);
                    if own && !extends {
                        let mut chain: Vec<String> = path.iter().map(|p| p.id.clone()).collect();
                        if mc_exclude_root {
                            chain.retain(|id| *id != root_id);
                        }
                        chain.sort();
                        out.insert(sig("PnA1", chain));
                    }
                }
                if members.len() >= 2 && authors.len() >= 2 {
                    let mut all = ids.clone();
                    if mc_exclude_root {
                        all.retain(|id| *id != root_id);
                    }
                    out.insert(sig("PnAn", all));
                }
            }
        }
    }
    out
}

/// Random corpus with links for the distribution checks. Every post links
/// to 0..=6 URIs (with occasional in-post repeats) of HTML or PDF kind.
pub fn random_link_corpus(rng: &mut Rng8) -> Corpus {
    let n_topics = rng.gen_range(1..=4);
    let topics: Vec<String> = (0..n_topics).map(|i| format!("t{i}")).collect();
    let mut posts = Vec::new();
    let mut next = 0usize;
    for t in &topics {
        let (forest, _) = random_forest(rng, 12, 3);
        let mut rename: HashMap<String, String> = HashMap::new();
        for p in forest.posts() {
            rename.insert(p.id.clone(), format!("{t}-{}", p.id));
        }
        for p in forest.posts() {
            let mut q = p.clone();
            q.id = rename[&p.id].clone();
            q.parent_id = p.parent_id.as_ref().map(|id| rename[id].clone());
            q.topic_id = t.clone();
            let k = if rng.gen_bool(0.25) { 0 } else { rng.gen_range(1..=6) };
            for _ in 0..k {
                let ext = if rng.gen_bool(0.7) { "html" } else { "pdf" };
                q.raw_links
                    .push(format!("https://h{}.example/doc{next}.{ext}", rng.gen_range(0..5)));
                next += 1;
            }
            if !q.raw_links.is_empty() && rng.gen_bool(0.15) {
                let again = q.raw_links[0].clone();
                q.raw_links.push(again);
            }
            posts.push(q);
        }
    }
    Corpus::new(topics.iter().map(|t| topic(t)).collect(), posts, vec![]).expect("valid link corpus")
}

/// Distinct links of a post, split into (html, nonhtml) by extension.
pub fn oracle_link_counts(post: &Post) -> (usize, usize) {
    let distinct: BTreeSet<&str> = post.raw_links.iter().map(String::as_str).collect();
    let html = distinct.iter().filter(|u| u.ends_with(".html")).count();
    (html, distinct.len() - html)
}

pub fn oracle_bin(k: usize) -> Option<&'static str> {
    match k {
        0 => None,
        1 => Some("1"),
        2 => Some("2"),
        3 | 4 => Some("3-4"),
        _ => Some("5+"),
    }
}

pub const BINS: [&str; 4] = ["1", "2", "3-4", "5+"];

/// Column label (P1A1, PnA1, PnAn, MC or All) → stratum → post URI counts,
/// per source, computed from oracle group signatures.
pub type Columns = BTreeMap<(String, String), BTreeMap<String, Vec<usize>>>;

pub fn oracle_columns(corpus: &Corpus, groups: &BTreeSet<GroupSig>, count: impl Fn(&Post) -> usize) -> Columns {
    let mut cols: Columns = BTreeMap::new();
    for (topic, source, _vertical, class, _root, ids) in groups {
        for id in ids {
            let k = count(corpus.post(id).unwrap());
            let mut push = |label: &str, stratum: String| {
                cols.entry((source.clone(), label.to_string()))
                    .or_default()
                    .entry(stratum)
                    .or_default()
                    .push(k);
            };
            push(class, topic.clone());
            if class == "PnA1" || class == "PnAn" {
                push("MC", topic.clone());
            }
            push("All", format!("{topic}/{class}"));
        }
    }
    cols
}

/// Pooled brute-force probability of `bin` in a column.
pub fn oracle_pooled(strata: &BTreeMap<String, Vec<usize>>, bin: &str) -> Option<f64> {
    let with: Vec<usize> = strata.values().flatten().copied().filter(|&k| k > 0).collect();
    if with.is_empty() {
        return None;
    }
    let hits = with.iter().filter(|&&k| oracle_bin(k) == Some(bin)).count();
    Some(hits as f64 / with.len() as f64)
}

/// Printed formula: sum over strata of count(k) / |posts with a URI|.
pub fn oracle_literal(strata: &BTreeMap<String, Vec<usize>>, bin: &str) -> Option<f64> {
    let mut any = false;
    let mut total = 0.0;
    for counts in strata.values() {
        let with: Vec<usize> = counts.iter().copied().filter(|&k| k > 0).collect();
        if with.is_empty() {
            continue;
        }
        any = true;
        total += with.iter().filter(|&&k| oracle_bin(k) == Some(bin)).count() as f64 / with.len() as f64;
    }
    any.then_some(total)
}

/// Distinct count of an iterator, the independent set-size oracle.
pub fn distinct_count<'a>(items: impl IntoIterator<Item = &'a str>) -> usize {
    let mut v: Vec<&str> = items.into_iter().collect();
    v.sort_unstable();
    v.dedup();
    v.len()
}
