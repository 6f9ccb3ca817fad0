//! Offline response fixtures and the on-disk response cache.
//!
//! Both use one file per request URI named `{sha256(uri)}.response`:
//!
//! ```text
//! HTTP/1.1 200 OK\r\n
//! Content-Type: text/html\r\n
//! \r\n
//! <body bytes>
//! ```
//!
//! Readers also accept bare `\n` line endings in the head. A status line of
//! the form `TRANSPORT-ERROR <message>` replays a transport failure.

use std::collections::HashMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use sha2::{Digest, Sha256};
use url::Url;

use super::fetch::{RawResponse, Transport, TransportError};

const TRANSPORT_ERROR_TAG: &str = "TRANSPORT-ERROR";

/// File stem for a request URI: lowercase hex SHA-256 of its serialized form.
pub fn uri_hash(uri: &str) -> String {
    hex::encode(Sha256::digest(uri.as_bytes()))
}

pub fn response_file_name(uri: &str) -> String {
    format!("{}.response", uri_hash(uri))
}

/// Serializes a response in the fixture file format.
pub fn encode_response(response: &RawResponse) -> Vec<u8> {
    let mut out = format!("HTTP/1.1 {} {}\r\n", response.status, response.reason).into_bytes();
    for (name, value) in &response.headers {
        out.extend_from_slice(format!("{name}: {value}\r\n").as_bytes());
    }
    out.extend_from_slice(b"\r\n");
    out.extend_from_slice(&response.body);
    out
}

pub fn encode_transport_error(message: &str) -> Vec<u8> {
    format!("{TRANSPORT_ERROR_TAG} {message}\r\n\r\n").into_bytes()
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum FixtureFormatError {
    #[error("missing blank line after headers")]
    NoHeadTerminator,
    #[error("head is not UTF-8")]
    HeadEncoding,
    #[error("bad status line {0:?}")]
    StatusLine(String),
    #[error("bad header line {0:?}")]
    HeaderLine(String),
}

/// Parses a fixture file. `Ok(Err(..))` is a recorded transport failure.
pub fn decode_response(bytes: &[u8]) -> Result<Result<RawResponse, TransportError>, FixtureFormatError> {
    let (head, body) = split_head(bytes).ok_or(FixtureFormatError::NoHeadTerminator)?;
    let head = std::str::from_utf8(head).map_err(|_| FixtureFormatError::HeadEncoding)?;
    let mut lines = head.split('\n').map(|l| l.strip_suffix('\r').unwrap_or(l));
    let status_line = lines.next().unwrap_or_default();

    if let Some(message) = status_line.strip_prefix(TRANSPORT_ERROR_TAG) {
        return Ok(Err(TransportError(message.trim().to_string())));
    }

    let mut parts = status_line.splitn(3, ' ');
    let version = parts.next().unwrap_or_default();
    let code = parts.next().unwrap_or_default();
    let reason = parts.next().unwrap_or_default();
    if !version.starts_with("HTTP/") {
        return Err(FixtureFormatError::StatusLine(status_line.to_string()));
    }
    let status: u16 = code
        .parse()
        .map_err(|_| FixtureFormatError::StatusLine(status_line.to_string()))?;

    let mut headers = Vec::new();
    for line in lines {
        if line.is_empty() {
            continue;
        }
        let (name, value) = line
            .split_once(':')
            .ok_or_else(|| FixtureFormatError::HeaderLine(line.to_string()))?;
        headers.push((name.trim().to_string(), value.trim().to_string()));
    }

    Ok(Ok(RawResponse {
        status,
        reason: reason.to_string(),
        headers,
        body: body.to_vec(),
    }))
}

fn split_head(bytes: &[u8]) -> Option<(&[u8], &[u8])> {
    let crlf = find(bytes, b"\r\n\r\n").map(|i| (i, 4));
    let lf = find(bytes, b"\n\n").map(|i| (i, 2));
    let (idx, len) = match (crlf, lf) {
        (Some(a), Some(b)) => {
            if a.0 <= b.0 {
                a
            } else {
                b
            }
        }
        (Some(a), None) => a,
        (None, Some(b)) => b,
        (None, None) => {
            // A head with no body and no trailing blank line.
            let trimmed = bytes.strip_suffix(b"\r\n").or_else(|| bytes.strip_suffix(b"\n"))?;
            return Some((trimmed, &[]));
        }
    };
    Some((&bytes[..idx], &bytes[idx + len..]))
}

fn find(haystack: &[u8], needle: &[u8]) -> Option<usize> {
    haystack.windows(needle.len()).position(|w| w == needle)
}

/// Replays responses from a fixture directory and counts requests.
pub struct FixtureTransport {
    dir: PathBuf,
    requests: AtomicUsize,
    per_uri: Mutex<HashMap<String, usize>>,
}

impl FixtureTransport {
    pub fn new(dir: impl Into<PathBuf>) -> io::Result<Self> {
        let dir = dir.into();
        if !dir.is_dir() {
            return Err(io::Error::new(
                io::ErrorKind::NotFound,
                format!("fixture directory {} does not exist", dir.display()),
            ));
        }
        Ok(FixtureTransport {
            dir,
            requests: AtomicUsize::new(0),
            per_uri: Mutex::default(),
        })
    }

    pub fn request_count(&self) -> usize {
        self.requests.load(Ordering::SeqCst)
    }

    pub fn requests_for(&self, uri: &str) -> usize {
        self.per_uri.lock().unwrap().get(uri).copied().unwrap_or(0)
    }
}

impl Transport for FixtureTransport {
    fn name(&self) -> &str {
        "fixtures"
    }

    fn request(&self, uri: &Url) -> Result<RawResponse, TransportError> {
        self.requests.fetch_add(1, Ordering::SeqCst);
        *self.per_uri.lock().unwrap().entry(uri.to_string()).or_default() += 1;
        read_fixture(&self.dir, uri.as_str()).unwrap_or_else(|| Err(TransportError(format!("no fixture for {uri}"))))
    }
}

impl<T: Transport + ?Sized> Transport for std::sync::Arc<T> {
    fn name(&self) -> &str {
        (**self).name()
    }

    fn request(&self, uri: &Url) -> Result<RawResponse, TransportError> {
        (**self).request(uri)
    }
}

fn read_fixture(dir: &Path, uri: &str) -> Option<Result<RawResponse, TransportError>> {
    let path = dir.join(response_file_name(uri));
    let bytes = fs::read(&path).ok()?;
    Some(
        decode_response(&bytes)
            .unwrap_or_else(|e| Err(TransportError(format!("corrupt fixture {}: {e}", path.display())))),
    )
}

/// Wraps a transport with a persistent per-hop cache in the fixture format,
/// so a live run's cache directory can later be replayed offline.
pub struct DiskCache<T> {
    inner: T,
    dir: PathBuf,
}

impl<T: Transport> DiskCache<T> {
    pub fn new(inner: T, dir: impl Into<PathBuf>) -> io::Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(DiskCache { inner, dir })
    }
}

impl<T: Transport> Transport for DiskCache<T> {
    fn name(&self) -> &str {
        self.inner.name()
    }

    fn request(&self, uri: &Url) -> Result<RawResponse, TransportError> {
        if let Some(hit) = read_fixture(&self.dir, uri.as_str()) {
            return hit;
        }
        let result = self.inner.request(uri);
        let bytes = match &result {
            Ok(response) => encode_response(response),
            Err(e) => encode_transport_error(&e.0),
        };
        let path = self.dir.join(response_file_name(uri.as_str()));
        if let Err(e) = fs::write(&path, bytes) {
            tracing::warn!(path = %path.display(), error = %e, "could not write cache entry");
        }
        result
    }
}
