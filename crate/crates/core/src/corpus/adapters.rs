//! Platform adapters that produce posts through a [`Fetcher`].
//!
//! Everything goes through the fetcher, so the offline fixture transport
//! drives these adapters exactly like live traffic.

use std::collections::{HashMap, HashSet};
use std::sync::Mutex;

use chrono::{DateTime, TimeZone, Utc};
use serde_json::Value;
use url::Url;

use super::fetch::Fetcher;
use super::model::{Post, QueryKind, Source, Vertical};
use super::thread::ThreadSource;
use super::CorpusError;
use crate::html;

/// Query template that restricts a Web search to Twitter Moments.
pub fn moments_query(text_query: &str) -> String {
    format!("{text_query} site:twitter.com/i/moments")
}

pub fn is_moment_uri(uri: &str) -> bool {
    Url::parse(uri)
        .ok()
        .map(|u| {
            matches!(u.host_str(), Some("twitter.com" | "www.twitter.com" | "x.com"))
                && u.path().starts_with("/i/moments/")
        })
        .unwrap_or(false)
}

/// What a search was issued for; copied onto every produced post.
#[derive(Debug, Clone)]
pub struct SearchContext {
    pub topic_id: String,
    pub source: Source,
    pub vertical: Vertical,
    pub query: String,
    pub query_kind: QueryKind,
}

impl SearchContext {
    fn id_for(&self, native: &str) -> String {
        format!("{}:{}:{}:{}", self.topic_id, self.source, self.vertical, native)
    }
}

/// A SERP that yields posts.
pub trait SerpAdapter: Send + Sync {
    fn name(&self) -> &str;

    fn search(&self, ctx: &SearchContext, limit: usize) -> Result<Vec<Post>, CorpusError>;
}

/// Reddit through its public JSON listings.
pub struct RedditAdapter<'a> {
    fetcher: &'a Fetcher,
    base: String,
    page_size: usize,
    replies: Mutex<HashMap<String, Vec<Post>>>,
    loaded: Mutex<HashSet<String>>,
}

impl<'a> RedditAdapter<'a> {
    pub fn new(fetcher: &'a Fetcher) -> Self {
        Self::with_base(fetcher, "https://www.reddit.com")
    }

    pub fn with_base(fetcher: &'a Fetcher, base: &str) -> Self {
        RedditAdapter {
            fetcher,
            base: base.trim_end_matches('/').to_string(),
            page_size: 100,
            replies: Mutex::default(),
            loaded: Mutex::default(),
        }
    }

    fn sort_for(vertical: &Vertical) -> &str {
        match vertical {
            Vertical::Top => "top",
            Vertical::New => "new",
            Vertical::Comments => "comments",
            _ => "relevance",
        }
    }

    pub fn search_uri(&self, query: &str, vertical: &Vertical, after: Option<&str>) -> String {
        let mut uri = Url::parse(&format!("{}/search.json", self.base)).expect("static base");
        {
            let mut q = uri.query_pairs_mut();
            q.append_pair("q", query)
                .append_pair("sort", Self::sort_for(vertical))
                .append_pair("limit", &self.page_size.to_string());
            if let Some(after) = after {
                q.append_pair("after", after);
            }
        }
        uri.to_string()
    }

    fn fetch_json(&self, uri: &str) -> Result<(Value, DateTime<Utc>), CorpusError> {
        let fetched = self.fetcher.dereference(uri)?;
        if !fetched.is_success() {
            return Err(CorpusError::Adapter(format!("{uri}: status {}", fetched.status)));
        }
        let value =
            serde_json::from_slice(&fetched.body).map_err(|e| CorpusError::Adapter(format!("{uri}: bad JSON: {e}")))?;
        Ok((value, fetched.fetched_at))
    }

    fn link_post(&self, ctx: &SearchContext, data: &Value, retrieved_at: DateTime<Utc>) -> Option<Post> {
        let name = data.get("name")?.as_str()?;
        let title = str_field(data, "title");
        let selftext = unescape(str_field(data, "selftext"));
        let is_self = data.get("is_self").and_then(Value::as_bool).unwrap_or(false);
        let url = str_field(data, "url");
        let mut raw_links = Vec::new();
        if !is_self && url.starts_with("http") {
            raw_links.push(unescape(url));
        }
        let text = if selftext.is_empty() {
            unescape(title)
        } else {
            format!("{}\n\n{}", unescape(title), selftext)
        };
        Some(Post {
            id: ctx.id_for(name),
            source: Source::Reddit,
            vertical: ctx.vertical.clone(),
            query: ctx.query.clone(),
            query_kind: ctx.query_kind,
            topic_id: ctx.topic_id.clone(),
            author: str_field(data, "author").to_string(),
            parent_id: None,
            serp_visible: true,
            created_at: created_utc(data),
            retrieved_at,
            text,
            raw_links,
            platform_uri: data
                .get("permalink")
                .and_then(Value::as_str)
                .map(|p| format!("{}{}", self.base, p)),
        })
    }

    /// Loads the full comment tree of the thread containing `root`.
    fn load_thread(&self, root: &Post) -> Result<(), CorpusError> {
        let Some(permalink) = root.platform_uri.as_deref() else {
            return Err(CorpusError::Adapter(format!("post {} has no platform_uri", root.id)));
        };
        let uri = format!("{}/.json", permalink.trim_end_matches('/'));
        let (value, retrieved_at) = self.fetch_json(&uri)?;
        let comments = value
            .as_array()
            .and_then(|a| a.get(1))
            .ok_or_else(|| CorpusError::Adapter(format!("{uri}: no comment listing")))?;

        let prefix = root.id.rsplit_once(':').map(|(p, _)| p.to_string()).unwrap_or_default();
        let mut index: HashMap<String, Vec<Post>> = HashMap::new();
        let mut stack = vec![comments];
        while let Some(listing) = stack.pop() {
            let children = listing
                .pointer("/data/children")
                .and_then(Value::as_array)
                .map(Vec::as_slice)
                .unwrap_or_default();
            for child in children {
                if child.get("kind").and_then(Value::as_str) != Some("t1") {
                    continue;
                }
                let Some(data) = child.get("data") else { continue };
                let (Some(name), Some(parent)) = (
                    data.get("name").and_then(Value::as_str),
                    data.get("parent_id").and_then(Value::as_str),
                ) else {
                    continue;
                };
                let parent_id = format!("{prefix}:{parent}");
                let post = Post {
                    id: format!("{prefix}:{name}"),
                    source: root.source.clone(),
                    vertical: root.vertical.clone(),
                    query: root.query.clone(),
                    query_kind: root.query_kind,
                    topic_id: root.topic_id.clone(),
                    author: str_field(data, "author").to_string(),
                    parent_id: Some(parent_id.clone()),
                    serp_visible: false,
                    created_at: created_utc(data),
                    retrieved_at,
                    text: unescape(str_field(data, "body")),
                    raw_links: Vec::new(),
                    platform_uri: data
                        .get("permalink")
                        .and_then(Value::as_str)
                        .map(|p| format!("{}{}", self.base, p)),
                };
                index.entry(parent_id).or_default().push(post);
                if let Some(replies) = data.get("replies").filter(|r| r.is_object()) {
                    stack.push(replies);
                }
            }
        }

        let mut replies = self.replies.lock().unwrap();
        for (parent, mut posts) in index {
            posts.sort_by(|a, b| a.created_at.cmp(&b.created_at).then_with(|| a.id.cmp(&b.id)));
            replies.insert(parent, posts);
        }
        Ok(())
    }
}

impl SerpAdapter for RedditAdapter<'_> {
    fn name(&self) -> &str {
        "reddit-json"
    }

    fn search(&self, ctx: &SearchContext, limit: usize) -> Result<Vec<Post>, CorpusError> {
        let mut posts = Vec::new();
        let mut seen = HashSet::new();
        let mut after: Option<String> = None;
        while posts.len() < limit {
            let uri = self.search_uri(&ctx.query, &ctx.vertical, after.as_deref());
            let (value, retrieved_at) = self.fetch_json(&uri)?;
            let children = value
                .pointer("/data/children")
                .and_then(Value::as_array)
                .cloned()
                .unwrap_or_default();
            if children.is_empty() {
                break;
            }
            for child in &children {
                if posts.len() >= limit {
                    break;
                }
                if let Some(post) = child.get("data").and_then(|d| self.link_post(ctx, d, retrieved_at)) {
                    if seen.insert(post.id.clone()) {
                        posts.push(post);
                    }
                }
            }
            after = value.pointer("/data/after").and_then(Value::as_str).map(str::to_string);
            if after.is_none() {
                break;
            }
        }
        Ok(posts)
    }
}

impl ThreadSource for RedditAdapter<'_> {
    fn name(&self) -> &str {
        "reddit-json"
    }

    fn supports(&self, source: &Source) -> bool {
        *source == Source::Reddit
    }

    fn replies(&self, post: &Post) -> Result<Vec<Post>, CorpusError> {
        if post.parent_id.is_none() {
            let first = self.loaded.lock().unwrap().insert(post.id.clone());
            if first {
                self.load_thread(post)?;
            }
        }
        Ok(self.replies.lock().unwrap().get(&post.id).cloned().unwrap_or_default())
    }
}

/// A Web search engine result page scraped for outbound result links.
///
/// `template` holds `{query}` and `{start}` placeholders, e.g.
/// `https://www.google.com/search?q={query}&start={start}`.
pub struct HtmlSerpAdapter<'a> {
    fetcher: &'a Fetcher,
    name: String,
    template: String,
    pages: usize,
    page_size: usize,
}

impl<'a> HtmlSerpAdapter<'a> {
    pub fn new(fetcher: &'a Fetcher, name: &str, template: &str) -> Self {
        HtmlSerpAdapter {
            fetcher,
            name: name.to_string(),
            template: template.to_string(),
            pages: 2,
            page_size: 10,
        }
    }

    pub fn with_pages(mut self, pages: usize) -> Self {
        self.pages = pages;
        self
    }

    pub fn page_uri(&self, query: &str, page: usize) -> String {
        let encoded: String = url::form_urlencoded::byte_serialize(query.as_bytes()).collect();
        self.template
            .replace("{query}", &encoded)
            .replace("{start}", &(page * self.page_size).to_string())
    }

    /// Result links in rank order, engine-internal links removed.
    pub fn result_links(&self, query: &str) -> Result<(Vec<String>, DateTime<Utc>), CorpusError> {
        let mut links = Vec::new();
        let mut seen = HashSet::new();
        let mut retrieved_at = self.fetcher.clock().now();
        for page in 0..self.pages {
            let uri = self.page_uri(query, page);
            let fetched = self.fetcher.dereference(&uri)?;
            if !fetched.is_success() {
                return Err(CorpusError::Adapter(format!("{uri}: status {}", fetched.status)));
            }
            retrieved_at = fetched.fetched_at;
            let base = Url::parse(&fetched.final_uri).ok();
            let engine_host = base.as_ref().and_then(|b| b.host_str()).unwrap_or_default().to_string();
            let body = String::from_utf8_lossy(&fetched.body);
            for href in html::anchor_hrefs(&body, base.as_ref()) {
                let target = unwrap_engine_redirect(&href).unwrap_or(href);
                let Ok(parsed) = Url::parse(&target) else { continue };
                let host = parsed.host_str().unwrap_or_default();
                if !matches!(parsed.scheme(), "http" | "https") || same_site(host, &engine_host) {
                    continue;
                }
                if seen.insert(target.clone()) {
                    links.push(target);
                }
            }
        }
        Ok((links, retrieved_at))
    }
}

impl SerpAdapter for HtmlSerpAdapter<'_> {
    fn name(&self) -> &str {
        &self.name
    }

    /// Moments searches yield container roots (one per moment page);
    /// any other source yields one SERP-visible post per result link.
    fn search(&self, ctx: &SearchContext, limit: usize) -> Result<Vec<Post>, CorpusError> {
        let moments = ctx.source == Source::TwitterMoments;
        let query = if moments {
            moments_query(&ctx.query)
        } else {
            ctx.query.clone()
        };
        let (links, retrieved_at) = self.result_links(&query)?;
        let posts = links
            .into_iter()
            .filter(|l| !moments || is_moment_uri(l))
            .take(limit)
            .enumerate()
            .map(|(rank, link)| Post {
                id: ctx.id_for(&format!("r{rank}")),
                source: ctx.source.clone(),
                vertical: ctx.vertical.clone(),
                query: ctx.query.clone(),
                query_kind: ctx.query_kind,
                topic_id: ctx.topic_id.clone(),
                author: self.name.clone(),
                parent_id: None,
                serp_visible: !moments,
                created_at: None,
                retrieved_at,
                text: String::new(),
                raw_links: if moments { vec![] } else { vec![link.clone()] },
                platform_uri: moments.then_some(link),
            })
            .collect();
        Ok(posts)
    }
}

fn same_site(host: &str, engine_host: &str) -> bool {
    let base = |h: &str| {
        let labels: Vec<&str> = h.split('.').collect();
        labels[labels.len().saturating_sub(2)..].join(".")
    };
    !engine_host.is_empty() && base(host) == base(engine_host)
}

/// `/url?q=https://target&sa=U` style result wrappers.
fn unwrap_engine_redirect(href: &str) -> Option<String> {
    let parsed = Url::parse(href).ok()?;
    if parsed.path() != "/url" {
        return None;
    }
    parsed
        .query_pairs()
        .find(|(k, _)| k == "q" || k == "url")
        .map(|(_, v)| v.into_owned())
        .filter(|v| v.starts_with("http://") || v.starts_with("https://"))
}

fn str_field<'v>(data: &'v Value, key: &str) -> &'v str {
    data.get(key).and_then(Value::as_str).unwrap_or_default()
}

fn created_utc(data: &Value) -> Option<DateTime<Utc>> {
    let secs = data.get("created_utc")?.as_f64()?;
    Utc.timestamp_opt(secs as i64, 0).single()
}

fn unescape(s: &str) -> String {
    s.replace("&lt;", "<").replace("&gt;", ">").replace("&amp;", "&")
}
