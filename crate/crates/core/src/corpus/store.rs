use std::collections::{BTreeSet, HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::model::{Post, ProvenanceEntry, TopicSpec};
use super::CorpusError;

/// Posts, topics and the ingestion log. Immutable once validated.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Corpus {
    posts: IndexMap<String, Post>,
    topics: IndexMap<String, TopicSpec>,
    provenance: Vec<ProvenanceEntry>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum Record {
    Topics { topics: Vec<TopicSpec> },
    Post(Post),
    Provenance(ProvenanceEntry),
}

#[derive(Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum RecordRef<'a> {
    Topics { topics: Vec<&'a TopicSpec> },
    Post(&'a Post),
    Provenance(&'a ProvenanceEntry),
}

impl Corpus {
    /// Builds a corpus and checks every invariant.
    pub fn new(
        topics: Vec<TopicSpec>,
        posts: Vec<Post>,
        provenance: Vec<ProvenanceEntry>,
    ) -> Result<Self, CorpusError> {
        let mut topic_map = IndexMap::with_capacity(topics.len());
        for topic in topics {
            if topic.text_query.trim().is_empty() {
                return Err(CorpusError::Invalid(format!(
                    "topic {:?} has an empty text_query",
                    topic.topic_id
                )));
            }
            if topic_map.contains_key(&topic.topic_id) {
                return Err(CorpusError::DuplicateTopic(topic.topic_id));
            }
            topic_map.insert(topic.topic_id.clone(), topic);
        }

        let mut post_map = IndexMap::with_capacity(posts.len());
        for post in posts {
            if post_map.contains_key(&post.id) {
                return Err(CorpusError::DuplicateId(post.id));
            }
            post_map.insert(post.id.clone(), post);
        }

        let corpus = Corpus {
            posts: post_map,
            topics: topic_map,
            provenance,
        };
        corpus.validate()?;
        Ok(corpus)
    }

    fn validate(&self) -> Result<(), CorpusError> {
        for post in self.posts.values() {
            if !self.topics.contains_key(&post.topic_id) {
                return Err(CorpusError::UnknownTopic {
                    post_id: post.id.clone(),
                    topic_id: post.topic_id.clone(),
                });
            }
            if post.serp_visible && post.parent_id.is_some() {
                return Err(CorpusError::Invalid(format!(
                    "post {:?} is serp_visible but has parent_id",
                    post.id
                )));
            }
        }

        let mut dangling = BTreeSet::new();
        for post in self.posts.values() {
            let Some(parent_id) = &post.parent_id else { continue };
            match self.posts.get(parent_id) {
                None => {
                    dangling.insert(parent_id.clone());
                }
                Some(parent) => {
                    if parent.topic_id != post.topic_id || parent.source != post.source {
                        return Err(CorpusError::Invalid(format!(
                            "post {:?} replies to {:?} across topic or source",
                            post.id, parent_id
                        )));
                    }
                }
            }
        }
        if !dangling.is_empty() {
            return Err(CorpusError::DanglingParents(dangling.into_iter().collect()));
        }

        self.check_acyclic()
    }

    fn check_acyclic(&self) -> Result<(), CorpusError> {
        // 0 = unvisited, 1 = on current path, 2 = done
        let mut state: HashMap<&str, u8> = HashMap::with_capacity(self.posts.len());
        for start in self.posts.keys() {
            let mut path: Vec<&str> = Vec::new();
            let mut cur = Some(start.as_str());
            while let Some(id) = cur {
                match state.get(id).copied().unwrap_or(0) {
                    2 => break,
                    1 => {
                        let mut ids: Vec<String> = path.iter().map(|s| s.to_string()).collect();
                        ids.sort();
                        return Err(CorpusError::ParentCycle(ids));
                    }
                    _ => {}
                }
                state.insert(id, 1);
                path.push(id);
                cur = self.posts[id].parent_id.as_deref();
            }
            for id in path {
                state.insert(id, 2);
            }
        }
        Ok(())
    }

    pub fn posts(&self) -> impl ExactSizeIterator<Item = &Post> + '_ {
        self.posts.values()
    }

    pub fn post(&self, id: &str) -> Option<&Post> {
        self.posts.get(id)
    }

    pub fn topics(&self) -> impl ExactSizeIterator<Item = &TopicSpec> + '_ {
        self.topics.values()
    }

    pub fn topic(&self, topic_id: &str) -> Option<&TopicSpec> {
        self.topics.get(topic_id)
    }

    pub fn provenance(&self) -> &[ProvenanceEntry] {
        &self.provenance
    }

    pub fn len(&self) -> usize {
        self.posts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.posts.is_empty()
    }

    /// Replaces the topic table, e.g. from a separate topics file.
    pub fn with_topics(self, topics: Vec<TopicSpec>) -> Result<Self, CorpusError> {
        Corpus::new(topics, self.posts.into_values().collect(), self.provenance)
    }

    pub fn into_parts(self) -> (Vec<TopicSpec>, Vec<Post>, Vec<ProvenanceEntry>) {
        (
            self.topics.into_values().collect(),
            self.posts.into_values().collect(),
            self.provenance,
        )
    }
}

/// Reads a corpus JSONL file. The first line must be the topics record.
pub fn load_corpus(path: impl AsRef<Path>) -> Result<Corpus, CorpusError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| CorpusError::io(path, e))?;
    read_corpus(BufReader::new(file))
}

pub fn read_corpus(reader: impl BufRead) -> Result<Corpus, CorpusError> {
    let mut topics: Option<Vec<TopicSpec>> = None;
    let mut posts = Vec::new();
    let mut provenance = Vec::new();
    let mut seen = HashSet::new();

    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| CorpusError::Malformed {
            line: line_no,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let record: Record = serde_json::from_str(&line).map_err(|e| CorpusError::Malformed {
            line: line_no,
            message: e.to_string(),
        })?;
        match record {
            Record::Topics { topics: t } => {
                if topics.is_some() {
                    return Err(CorpusError::Malformed {
                        line: line_no,
                        message: "second topics record".into(),
                    });
                }
                topics = Some(t);
            }
            Record::Post(post) => {
                if topics.is_none() {
                    return Err(CorpusError::Malformed {
                        line: line_no,
                        message: "post record before the topics record".into(),
                    });
                }
                if !seen.insert(post.id.clone()) {
                    return Err(CorpusError::DuplicateId(post.id));
                }
                posts.push(post);
            }
            Record::Provenance(entry) => provenance.push(entry),
        }
    }

    let topics = topics.ok_or(CorpusError::Malformed {
        line: 1,
        message: "missing topics record".into(),
    })?;
    Corpus::new(topics, posts, provenance)
}

/// Writes `corpus` as JSONL: topics record, posts in corpus order, then provenance.
pub fn write_corpus(corpus: &Corpus, path: impl AsRef<Path>) -> Result<(), CorpusError> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| CorpusError::io(path, e))?;
    let mut out = BufWriter::new(file);
    write_corpus_to(corpus, &mut out).map_err(|e| CorpusError::io(path, e))?;
    out.flush().map_err(|e| CorpusError::io(path, e))
}

pub fn write_corpus_to(corpus: &Corpus, out: &mut impl Write) -> std::io::Result<()> {
    let header = RecordRef::Topics {
        topics: corpus.topics.values().collect(),
    };
    serde_json::to_writer(&mut *out, &header)?;
    out.write_all(b"\n")?;
    for post in corpus.posts.values() {
        serde_json::to_writer(&mut *out, &RecordRef::Post(post))?;
        out.write_all(b"\n")?;
    }
    for entry in &corpus.provenance {
        serde_json::to_writer(&mut *out, &RecordRef::Provenance(entry))?;
        out.write_all(b"\n")?;
    }
    Ok(())
}
