//! Polite, cached dereferencing.
//!
//! A [`Transport`] performs exactly one HTTP exchange and never follows
//! redirects. [`Fetcher`] layers redirect handling, the per-run cache and
//! per-host politeness on top of it, so the same code path serves live
//! crawling and offline fixture replay.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};
use std::time::{Duration, Instant};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use url::Url;

use super::CorpusError;

/// One raw HTTP exchange as seen by a transport.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawResponse {
    pub status: u16,
    pub reason: String,
    pub headers: Vec<(String, String)>,
    pub body: Vec<u8>,
}

impl RawResponse {
    pub fn header(&self, name: &str) -> Option<&str> {
        self.headers
            .iter()
            .find(|(k, _)| k.eq_ignore_ascii_case(name))
            .map(|(_, v)| v.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{0}")]
pub struct TransportError(pub String);

pub trait Transport: Send + Sync {
    fn name(&self) -> &str;

    /// Performs one request without following redirects.
    fn request(&self, uri: &Url) -> Result<RawResponse, TransportError>;
}

/// HTTP status, or why no usable status exists.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FetchStatus {
    Http(u16),
    TransportError(String),
    TooManyRedirects,
    BadRedirect(String),
}

impl FetchStatus {
    pub fn is_success(&self) -> bool {
        matches!(self, FetchStatus::Http(code) if (200..300).contains(code))
    }

    pub fn is_error_tag(&self) -> bool {
        !matches!(self, FetchStatus::Http(_))
    }
}

impl fmt::Display for FetchStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FetchStatus::Http(code) => write!(f, "{code}"),
            FetchStatus::TransportError(msg) => write!(f, "transport-error: {msg}"),
            FetchStatus::TooManyRedirects => f.write_str("too-many-redirects"),
            FetchStatus::BadRedirect(msg) => write!(f, "bad-redirect: {msg}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FetchResult {
    pub request_uri: String,
    pub final_uri: String,
    pub status: FetchStatus,
    pub media_type: Option<String>,
    pub last_modified: Option<String>,
    pub content_type: Option<String>,
    pub body: Vec<u8>,
    pub fetched_at: DateTime<Utc>,
    /// Redirect targets in the order they were followed; the last one is `final_uri`.
    pub redirect_chain: Vec<String>,
}

impl FetchResult {
    pub fn is_success(&self) -> bool {
        self.status.is_success()
    }
}

#[derive(Debug, Clone)]
pub struct FetchPolicy {
    pub max_redirects: usize,
    /// Minimum spacing between request starts against one host.
    pub politeness_delay: Duration,
    /// Strict mode surfaces transport failures as errors instead of tagged results.
    pub strict: bool,
}

impl Default for FetchPolicy {
    fn default() -> Self {
        FetchPolicy {
            max_redirects: 10,
            politeness_delay: Duration::from_secs(1),
            strict: false,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub enum Clock {
    System,
    Fixed(DateTime<Utc>),
}

impl Clock {
    pub fn now(&self) -> DateTime<Utc> {
        match self {
            Clock::System => Utc::now(),
            Clock::Fixed(t) => *t,
        }
    }
}

/// Serializes requests per host and spaces them by the politeness delay.
#[derive(Default)]
struct HostGate {
    hosts: Mutex<HashMap<String, Arc<Mutex<Option<Instant>>>>>,
}

impl HostGate {
    fn run<R>(&self, host: &str, delay: Duration, f: impl FnOnce() -> R) -> R {
        let slot = {
            let mut hosts = self.hosts.lock().unwrap();
            hosts.entry(host.to_string()).or_default().clone()
        };
        let mut last = slot.lock().unwrap();
        if let Some(prev) = *last {
            let elapsed = prev.elapsed();
            if elapsed < delay {
                std::thread::sleep(delay - elapsed);
            }
        }
        *last = Some(Instant::now());
        f()
    }
}

pub struct Fetcher {
    transport: Box<dyn Transport>,
    policy: FetchPolicy,
    clock: Clock,
    cache: Mutex<HashMap<String, Arc<OnceLock<FetchResult>>>>,
    gate: HostGate,
}

impl Fetcher {
    pub fn new(transport: impl Transport + 'static, policy: FetchPolicy) -> Self {
        Self::from_boxed(Box::new(transport), policy)
    }

    pub fn from_boxed(transport: Box<dyn Transport>, policy: FetchPolicy) -> Self {
        Fetcher {
            transport,
            policy,
            clock: Clock::System,
            cache: Mutex::default(),
            gate: HostGate::default(),
        }
    }

    pub fn with_clock(mut self, clock: Clock) -> Self {
        self.clock = clock;
        self
    }

    pub fn policy(&self) -> &FetchPolicy {
        &self.policy
    }

    pub fn clock(&self) -> Clock {
        self.clock
    }

    pub fn transport_name(&self) -> &str {
        self.transport.name()
    }

    /// Dereferences `uri`, following redirects up to the policy limit.
    ///
    /// Repeated calls for the same request URI are served from the run
    /// cache; concurrent callers for one URI wait on a single request.
    /// In lenient mode every network failure comes back as a tagged
    /// [`FetchResult`]; only an invalid input URI is an error.
    pub fn dereference(&self, uri: &str) -> Result<FetchResult, CorpusError> {
        let parsed = parse_http_uri(uri)?;
        let cell = {
            let mut cache = self.cache.lock().unwrap();
            cache.entry(uri.to_string()).or_default().clone()
        };
        let result = cell.get_or_init(|| self.fetch_uncached(uri, parsed)).clone();
        if self.policy.strict && result.status.is_error_tag() {
            return Err(CorpusError::Fetch {
                uri: uri.to_string(),
                status: result.status.to_string(),
            });
        }
        Ok(result)
    }

    fn fetch_uncached(&self, request_uri: &str, start: Url) -> FetchResult {
        let mut chain = Vec::new();
        let mut current = start;
        let mut result = FetchResult {
            request_uri: request_uri.to_string(),
            final_uri: request_uri.to_string(),
            status: FetchStatus::TransportError("not attempted".into()),
            media_type: None,
            last_modified: None,
            content_type: None,
            body: Vec::new(),
            fetched_at: self.clock.now(),
            redirect_chain: Vec::new(),
        };

        loop {
            let host = current.host_str().unwrap_or_default().to_string();
            let response = self
                .gate
                .run(&host, self.policy.politeness_delay, || self.transport.request(&current));
            let response = match response {
                Ok(r) => r,
                Err(e) => {
                    tracing::warn!(uri = %current, error = %e, "transport failure");
                    result.status = FetchStatus::TransportError(e.0);
                    break;
                }
            };

            let location = response.header("location").map(str::to_string);
            if is_redirect(response.status) {
                if let Some(location) = location {
                    let next = match current.join(location.trim()) {
                        Ok(u) if matches!(u.scheme(), "http" | "https") => u,
                        Ok(u) => {
                            result.status = FetchStatus::BadRedirect(u.to_string());
                            break;
                        }
                        Err(e) => {
                            result.status = FetchStatus::BadRedirect(format!("{location}: {e}"));
                            break;
                        }
                    };
                    if chain.len() >= self.policy.max_redirects {
                        result.status = FetchStatus::TooManyRedirects;
                        break;
                    }
                    let next_str = next.to_string();
                    // A revisited hop can never resolve, so stop early.
                    let looped = next_str == request_uri || chain.contains(&next_str);
                    chain.push(next_str);
                    if looped {
                        result.status = FetchStatus::TooManyRedirects;
                        break;
                    }
                    current = next;
                    continue;
                }
            }

            result.status = FetchStatus::Http(response.status);
            result.content_type = response.header("content-type").map(str::to_string);
            result.media_type = result.content_type.as_deref().map(media_type_of);
            result.last_modified = response.header("last-modified").map(str::to_string);
            result.body = response.body;
            break;
        }

        if let Some(last) = chain.last() {
            result.final_uri = last.clone();
        }
        result.redirect_chain = chain;
        result.fetched_at = self.clock.now();
        result
    }
}

fn is_redirect(status: u16) -> bool {
    matches!(status, 301 | 302 | 303 | 307 | 308)
}

/// `"text/html; charset=utf-8"` → `"text/html"`.
pub fn media_type_of(content_type: &str) -> String {
    content_type
        .split(';')
        .next()
        .unwrap_or_default()
        .trim()
        .to_ascii_lowercase()
}

pub(crate) fn parse_http_uri(uri: &str) -> Result<Url, CorpusError> {
    let parsed = Url::parse(uri).map_err(|e| CorpusError::InvalidUri {
        uri: uri.to_string(),
        reason: e.to_string(),
    })?;
    if !matches!(parsed.scheme(), "http" | "https") || parsed.host_str().is_none() {
        return Err(CorpusError::InvalidUri {
            uri: uri.to_string(),
            reason: "expected an absolute http(s) URI".into(),
        });
    }
    Ok(parsed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicUsize, Ordering};

    struct MapTransport {
        responses: HashMap<String, RawResponse>,
        calls: AtomicUsize,
    }

    impl MapTransport {
        fn new(entries: Vec<(&str, RawResponse)>) -> Self {
            MapTransport {
                responses: entries.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
                calls: AtomicUsize::new(0),
            }
        }
    }

    impl Transport for MapTransport {
        fn name(&self) -> &str {
            "map"
        }

        fn request(&self, uri: &Url) -> Result<RawResponse, TransportError> {
            self.calls.fetch_add(1, Ordering::SeqCst);
            self.responses
                .get(uri.as_str())
                .cloned()
                .ok_or_else(|| TransportError(format!("connection refused: {uri}")))
        }
    }

    fn ok(content_type: &str, body: &str) -> RawResponse {
        RawResponse {
            status: 200,
            reason: "OK".into(),
            headers: vec![("Content-Type".into(), content_type.into())],
            body: body.as_bytes().to_vec(),
        }
    }

    fn redirect(to: &str) -> RawResponse {
        RawResponse {
            status: 301,
            reason: "Moved Permanently".into(),
            headers: vec![("Location".into(), to.into())],
            body: vec![],
        }
    }

    fn quick() -> FetchPolicy {
        FetchPolicy {
            politeness_delay: Duration::ZERO,
            ..FetchPolicy::default()
        }
    }

    #[test]
    fn passthrough_html() {
        let t = Arc::new(MapTransport::new(vec![(
            "https://a.example/",
            ok("text/html; charset=utf-8", "<p>x</p>"),
        )]));
        let f = Fetcher::new(t, quick());
        let r = f.dereference("https://a.example/").unwrap();
        assert_eq!(r.status, FetchStatus::Http(200));
        assert_eq!(r.media_type.as_deref(), Some("text/html"));
        assert_eq!(r.final_uri, r.request_uri);
        assert!(r.redirect_chain.is_empty());
    }

    #[test]
    fn single_redirect() {
        let t = Arc::new(MapTransport::new(vec![
            ("https://a.example/old", redirect("/new")),
            ("https://a.example/new", ok("text/html", "ok")),
        ]));
        let f = Fetcher::new(t, quick());
        let r = f.dereference("https://a.example/old").unwrap();
        assert_eq!(r.final_uri, "https://a.example/new");
        assert_eq!(r.redirect_chain.len(), 1);
        assert_eq!(r.status, FetchStatus::Http(200));
    }

    #[test]
    fn second_call_hits_cache() {
        let t = Arc::new(MapTransport::new(vec![("https://a.example/", ok("text/html", "x"))]));
        let f = Fetcher::new(t.clone(), quick());
        f.dereference("https://a.example/").unwrap();
        f.dereference("https://a.example/").unwrap();
        assert_eq!(t.calls.load(Ordering::SeqCst), 1);
    }

    #[test]
    fn concurrent_callers_share_one_request() {
        let t = Arc::new(MapTransport::new(vec![("https://a.example/", ok("text/html", "x"))]));
        let f = Arc::new(Fetcher::new(t.clone(), quick()));
        let handles: Vec<_> = (0..8)
            .map(|_| {
                let f = f.clone();
                std::thread::spawn(move || f.dereference("https://a.example/").unwrap())
            })
            .collect();
        for h in handles {
            h.join().unwrap();
        }
        assert_eq!(t.calls.load(Ordering::SeqCst), 1);
    }

    #[test]
    fn redirect_loop_is_tagged() {
        let t = Arc::new(MapTransport::new(vec![
            ("https://a.example/1", redirect("https://a.example/2")),
            ("https://a.example/2", redirect("https://a.example/1")),
        ]));
        let f = Fetcher::new(t, quick());
        let r = f.dereference("https://a.example/1").unwrap();
        assert_eq!(r.status, FetchStatus::TooManyRedirects);
    }

    #[test]
    fn transport_failure_lenient_vs_strict() {
        let t = Arc::new(MapTransport::new(vec![]));
        let f = Fetcher::new(t.clone(), quick());
        let r = f.dereference("https://down.example/").unwrap();
        assert!(matches!(r.status, FetchStatus::TransportError(_)));

        let strict = Fetcher::new(
            t,
            FetchPolicy {
                strict: true,
                ..quick()
            },
        );
        assert!(matches!(
            strict.dereference("https://down.example/"),
            Err(CorpusError::Fetch { .. })
        ));
    }

    #[test]
    fn rejects_non_http() {
        let f = Fetcher::new(Arc::new(MapTransport::new(vec![])), quick());
        assert!(matches!(
            f.dereference("mailto:a@b.c"),
            Err(CorpusError::InvalidUri { .. })
        ));
    }

    #[test]
    fn politeness_spaces_same_host() {
        let t = Arc::new(MapTransport::new(vec![
            ("https://a.example/1", ok("text/html", "x")),
            ("https://a.example/2", ok("text/html", "x")),
        ]));
        let f = Fetcher::new(
            t,
            FetchPolicy {
                politeness_delay: Duration::from_millis(60),
                ..FetchPolicy::default()
            },
        );
        let start = Instant::now();
        f.dereference("https://a.example/1").unwrap();
        f.dereference("https://a.example/2").unwrap();
        assert!(start.elapsed() >= Duration::from_millis(60));
    }
}
