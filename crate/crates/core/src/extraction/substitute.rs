use std::collections::HashSet;

use scraper::{Html, Selector};
use url::Url;

use super::uri::canonicalize;
use super::ExtractionError;
use crate::corpus::{CorpusError, Fetcher, Source};
use crate::html::resolve;

/// Platform whose post permalinks are substituted; Moments belong to Twitter.
pub fn platform_of(source: &Source) -> Option<Source> {
    match source {
        Source::Twitter | Source::TwitterMoments => Some(Source::Twitter),
        Source::Reddit => Some(Source::Reddit),
        Source::ScoopIt => Some(Source::ScoopIt),
        Source::Other(_) => None,
    }
}

fn host_matches(host: &str, domain: &str) -> bool {
    host == domain || host.ends_with(&format!(".{domain}"))
}

fn platform_host(host: &str) -> Option<Source> {
    if ["twitter.com", "x.com"].iter().any(|d| host_matches(host, d)) {
        Some(Source::Twitter)
    } else if host_matches(host, "reddit.com") || host == "redd.it" {
        Some(Source::Reddit)
    } else if host_matches(host, "scoop.it") {
        Some(Source::ScoopIt)
    } else {
        None
    }
}

/// The platform of a post permalink such as a tweet status URI, or `None`
/// for anything else.
pub fn intra_site_platform(uri: &str) -> Option<Source> {
    let url = Url::parse(uri).ok()?;
    let host = url.host_str()?.to_ascii_lowercase();
    let platform = platform_host(&host)?;
    let segs: Vec<&str> = url.path_segments()?.filter(|s| !s.is_empty()).collect();
    let is_post = match platform {
        Source::Twitter => match segs.as_slice() {
            [_, "status" | "statuses", id, ..] => id.chars().all(|c| c.is_ascii_digit()),
            ["i", "web", "status", id, ..] => id.chars().all(|c| c.is_ascii_digit()),
            _ => false,
        },
        Source::Reddit => {
            host == "redd.it" && segs.len() == 1 || matches!(segs.as_slice(), ["r", _, "comments", _, ..])
        }
        Source::ScoopIt => matches!(segs.as_slice(), ["t", _, "p", _, ..]),
        _ => false,
    };
    is_post.then_some(platform)
}

/// Containers that hold the body of a post on the supported platforms.
const POST_BODY: &str = "[data-testid=tweetText], .tweet-text, .js-tweet-text, .usertext-body, \
                         [data-post-body], .post-body, .scoop-content, .post-content";

/// Outbound links of a fetched post page: anchors inside the post body
/// when such a container exists, otherwise every anchor. Platform links
/// that are not post permalinks (profiles, hashtags, navigation) are
/// dropped.
pub fn outbound_links(html: &str, page_uri: &str, platform: &Source) -> Vec<String> {
    let doc = Html::parse_document(html);
    let base = Url::parse(page_uri).ok();
    let body_sel = Selector::parse(POST_BODY).expect("static selector");
    let anchor_sel = Selector::parse("a[href]").expect("static selector");

    let scoped: Vec<_> = doc.select(&body_sel).collect();
    let hrefs: Vec<&str> = if scoped.is_empty() {
        doc.select(&anchor_sel).filter_map(|a| a.value().attr("href")).collect()
    } else {
        scoped
            .iter()
            .flat_map(|el| el.select(&anchor_sel))
            .filter_map(|a| a.value().attr("href"))
            .collect()
    };

    let mut seen = HashSet::new();
    hrefs
        .into_iter()
        .filter_map(|h| resolve(h.trim(), base.as_ref()))
        .filter(|u| {
            let host = Url::parse(u)
                .ok()
                .and_then(|p| p.host_str().map(str::to_ascii_lowercase))
                .unwrap_or_default();
            platform_host(&host).as_ref() != Some(platform) || intra_site_platform(u).as_ref() == Some(platform)
        })
        .filter(|u| seen.insert(u.clone()))
        .collect()
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Substitution {
    /// Canonical replacement URIs in order of discovery.
    pub uris: Vec<String>,
    pub warnings: Vec<String>,
}

/// Replaces the post permalink `uri` with the URIs its target post links
/// to, following nested permalinks of the same platform.
///
/// At most `depth_limit` pages are fetched along any chain and every
/// permalink is fetched at most once. A failed fetch keeps that permalink
/// in place (lenient fetcher) or aborts (strict fetcher), HTTP error
/// statuses included.
pub fn substitute_intra_site(
    uri: &str,
    platform: &Source,
    fetcher: &Fetcher,
    depth_limit: usize,
) -> Result<Substitution, ExtractionError> {
    let mut out = Substitution::default();
    if depth_limit == 0 {
        out.uris.push(uri.to_string());
        return Ok(out);
    }
    let mut visited = HashSet::new();
    expand(uri, 0, platform, fetcher, depth_limit, &mut visited, &mut out)?;
    let mut seen = HashSet::new();
    out.uris.retain(|u| seen.insert(u.clone()));
    if out.uris.is_empty() {
        out.warnings
            .push(format!("intra-site URI {uri} yielded no outbound URIs; dropped"));
    }
    Ok(out)
}

fn expand(
    uri: &str,
    depth: usize,
    platform: &Source,
    fetcher: &Fetcher,
    depth_limit: usize,
    visited: &mut HashSet<String>,
    out: &mut Substitution,
) -> Result<(), ExtractionError> {
    if !visited.insert(uri.to_string()) {
        return Ok(());
    }
    if depth >= depth_limit {
        out.warnings.push(format!(
            "intra-site URI {uri} is beyond the substitution depth limit {depth_limit}"
        ));
        return Ok(());
    }
    let result = fetcher.dereference(uri)?;
    if !result.is_success() {
        if fetcher.policy().strict {
            return Err(CorpusError::Fetch {
                uri: uri.to_string(),
                status: result.status.to_string(),
            }
            .into());
        }
        out.warnings.push(format!(
            "intra-site URI {uri} could not be fetched ({}); kept",
            result.status
        ));
        out.uris.push(uri.to_string());
        return Ok(());
    }
    let body = String::from_utf8_lossy(&result.body);
    for link in outbound_links(&body, &result.final_uri, platform) {
        let Ok(canonical) = canonicalize(&link) else {
            continue;
        };
        if intra_site_platform(&canonical).as_ref() == Some(platform) {
            expand(&canonical, depth + 1, platform, fetcher, depth_limit, visited, out)?;
        } else {
            out.uris.push(canonical);
        }
    }
    Ok(())
}
