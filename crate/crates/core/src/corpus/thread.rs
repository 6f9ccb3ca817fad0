use std::collections::{HashMap, HashSet, VecDeque};

use super::model::{Post, Source};
use super::CorpusError;

/// Supplies direct replies for a post on some platform.
pub trait ThreadSource: Send + Sync {
    fn name(&self) -> &str;

    fn supports(&self, source: &Source) -> bool;

    fn replies(&self, post: &Post) -> Result<Vec<Post>, CorpusError>;
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ThreadExpansion {
    /// Root first, then replies in breadth-first order.
    pub posts: Vec<Post>,
    pub warnings: Vec<String>,
}

/// Collects `root` and up to `reply_limit` descendants breadth-first.
///
/// Every post id is emitted at most once, so reply cycles in the source
/// terminate. A failing reply lookup is recorded as a warning and the
/// expansion continues with the remaining frontier.
pub fn expand_thread(
    root: &Post,
    source: &dyn ThreadSource,
    reply_limit: usize,
) -> Result<ThreadExpansion, CorpusError> {
    if !source.supports(&root.source) {
        return Err(CorpusError::UnsupportedSource {
            adapter: source.name().to_string(),
            platform: root.source.to_string(),
        });
    }
    if root.parent_id.is_some() {
        return Err(CorpusError::Invalid(format!("thread root {:?} has a parent", root.id)));
    }

    let mut out = ThreadExpansion {
        posts: vec![root.clone()],
        warnings: Vec::new(),
    };
    let mut seen: HashSet<String> = HashSet::from([root.id.clone()]);
    let mut queue: VecDeque<Post> = VecDeque::from([root.clone()]);

    'outer: while let Some(parent) = queue.pop_front() {
        if out.posts.len() > reply_limit {
            break;
        }
        let replies = match source.replies(&parent) {
            Ok(r) => r,
            Err(e) => {
                out.warnings.push(format!("replies of {} unavailable: {e}", parent.id));
                continue;
            }
        };
        for mut reply in replies {
            if out.posts.len() > reply_limit {
                break 'outer;
            }
            if !seen.insert(reply.id.clone()) {
                continue;
            }
            reply.parent_id = Some(parent.id.clone());
            reply.serp_visible = false;
            queue.push_back(reply.clone());
            out.posts.push(reply);
        }
    }
    Ok(out)
}

/// Reply graph held in memory; used for offline fixtures and tests.
#[derive(Debug, Clone, Default)]
pub struct FixtureThreadSource {
    sources: Vec<Source>,
    replies: HashMap<String, Vec<Post>>,
    failing: HashSet<String>,
}

impl FixtureThreadSource {
    /// Indexes `posts` by their `parent_id`.
    pub fn from_posts(posts: impl IntoIterator<Item = Post>) -> Self {
        let mut this = FixtureThreadSource::default();
        for post in posts {
            if let Some(parent) = post.parent_id.clone() {
                this.replies.entry(parent).or_default().push(post);
            }
        }
        this
    }

    /// Restricts the adapter to the given platforms (all by default).
    pub fn for_sources(mut self, sources: Vec<Source>) -> Self {
        self.sources = sources;
        self
    }

    pub fn add_reply(&mut self, parent_id: &str, reply: Post) {
        self.replies.entry(parent_id.to_string()).or_default().push(reply);
    }

    /// Makes reply lookups for `post_id` fail.
    pub fn fail_on(&mut self, post_id: &str) {
        self.failing.insert(post_id.to_string());
    }
}

impl ThreadSource for FixtureThreadSource {
    fn name(&self) -> &str {
        "fixture-threads"
    }

    fn supports(&self, source: &Source) -> bool {
        self.sources.is_empty() || self.sources.contains(source)
    }

    fn replies(&self, post: &Post) -> Result<Vec<Post>, CorpusError> {
        if self.failing.contains(&post.id) {
            return Err(CorpusError::Adapter(format!("fixture failure at {}", post.id)));
        }
        Ok(self.replies.get(&post.id).cloned().unwrap_or_default())
    }
}
