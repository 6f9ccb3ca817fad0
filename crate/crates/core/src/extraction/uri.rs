use std::sync::LazyLock;

use regex::Regex;
use url::{Position, Url};

use super::ExtractionError;
use crate::corpus::Post;

static URI_IN_TEXT: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r#"(?i)https?://[^\s<>"'`\x{201C}\x{201D}]+"#).expect("static regex"));

const TRAILING: &[char] = &['.', ',', ';', ':', '!', '?', '\'', '"', '\u{2026}', '*'];

/// Raw links of the post followed by absolute http(s) URIs found in its text.
///
/// Duplicates are kept; the caller dedups after canonicalization.
pub fn extract_uris(post: &Post) -> Vec<String> {
    let mut out: Vec<String> = post.raw_links.clone();
    out.extend(uris_in_text(&post.text));
    out
}

pub fn uris_in_text(text: &str) -> Vec<String> {
    URI_IN_TEXT
        .find_iter(text)
        .filter_map(|m| {
            let trimmed = trim_uri(&m.as_str().replace("&amp;", "&"));
            (trimmed.len() > "https://".len()).then_some(trimmed)
        })
        .collect()
}

/// Drops trailing punctuation and closing brackets that have no opener
/// inside the URI.
fn trim_uri(candidate: &str) -> String {
    let mut s = candidate.to_string();
    while let Some(last) = s.chars().last() {
        let drop = if TRAILING.contains(&last) {
            true
        } else if let Some(open) = match last {
            ')' => Some('('),
            ']' => Some('['),
            '}' => Some('{'),
            '>' => Some('<'),
            _ => None,
        } {
            s.matches(last).count() > s.matches(open).count()
        } else {
            false
        };
        if !drop {
            break;
        }
        s.pop();
    }
    s
}

fn is_tracking_param(key: &str) -> bool {
    let key = key.to_ascii_lowercase();
    key.starts_with("utm_") || key == "fbclid" || key == "gclid"
}

/// Normal form used for dedup, overlap and fetching.
pub fn canonicalize(uri: &str) -> Result<String, ExtractionError> {
    let invalid = |reason: String| ExtractionError::InvalidUri {
        uri: uri.to_string(),
        reason,
    };
    let mut url = Url::parse(uri.trim()).map_err(|e| invalid(e.to_string()))?;
    if !matches!(url.scheme(), "http" | "https") {
        return Err(invalid(format!("unsupported scheme {:?}", url.scheme())));
    }
    if url.host_str().is_none_or(str::is_empty) {
        return Err(invalid("missing host".into()));
    }
    url.set_fragment(None);

    let query = url.query().map(|q| {
        let mut params: Vec<&str> = q
            .split('&')
            .filter(|p| !p.is_empty())
            .filter(|p| !is_tracking_param(p.split('=').next().unwrap_or_default()))
            .collect();
        params.sort_unstable();
        params.join("&")
    });
    url.set_query(query.as_deref().filter(|q| !q.is_empty()));

    if url.path() == "/" {
        Ok(format!(
            "{}{}",
            &url[..Position::BeforePath],
            &url[Position::AfterPath..]
        ))
    } else {
        Ok(url.to_string())
    }
}

/// Full lowercase host; no public-suffix collapsing.
pub fn hostname_of(canonical: &str) -> Result<String, ExtractionError> {
    let url = Url::parse(canonical).map_err(|e| ExtractionError::InvalidUri {
        uri: canonical.to_string(),
        reason: e.to_string(),
    })?;
    match url.host_str() {
        Some(h) if !h.is_empty() && matches!(url.scheme(), "http" | "https") => Ok(h.to_ascii_lowercase()),
        _ => Err(ExtractionError::NoHost(canonical.to_string())),
    }
}
