//! Small HTML helpers shared by the extraction and gold-standard code.

use scraper::{Html, Selector};
use url::Url;

/// Absolute `href` targets of every anchor, in document order.
pub fn anchor_hrefs(html: &str, base: Option<&Url>) -> Vec<String> {
    let doc = Html::parse_document(html);
    let selector = Selector::parse("a[href]").expect("static selector");
    doc.select(&selector)
        .filter_map(|a| a.value().attr("href"))
        .filter_map(|href| resolve(href.trim(), base))
        .collect()
}

pub(crate) fn resolve(href: &str, base: Option<&Url>) -> Option<String> {
    if href.is_empty() || href.starts_with('#') {
        return None;
    }
    let url = match base {
        Some(b) => b.join(href).ok()?,
        None => Url::parse(href).ok()?,
    };
    matches!(url.scheme(), "http" | "https").then(|| url.to_string())
}
