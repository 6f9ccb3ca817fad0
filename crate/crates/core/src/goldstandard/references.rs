use std::collections::HashSet;

use scraper::{ElementRef, Html, Selector};
use url::Url;

use crate::html::resolve;

/// Markup used for citation lists by wikis and common CMS themes.
const REFERENCE_CONTAINERS: &str = "ol.references, ol.reference-list, div.reflist, div.refbegin, \
     [role=doc-bibliography], section.references, div.references, ol.citations, div.citations, \
     section.footnotes, div.footnotes";

const REFERENCE_HEADINGS: &[&str] = &[
    "bibliography",
    "citations",
    "footnotes",
    "notes",
    "references",
    "sources",
    "works cited",
];

/// Link families that belong to wiki infrastructure rather than cited work.
const WIKI_FAMILIES: &[&str] = &["mediawiki.org", "wikidata.org", "wikimedia.org", "wikipedia.org"];

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ReferenceList {
    pub uris: Vec<String>,
    pub warnings: Vec<String>,
}

/// Last two labels of a host: `en.wikipedia.org` → `wikipedia.org`.
fn host_family(host: &str) -> String {
    let labels: Vec<&str> = host.trim_end_matches('.').rsplit('.').take(2).collect();
    labels
        .into_iter()
        .rev()
        .collect::<Vec<_>>()
        .join(".")
        .to_ascii_lowercase()
}

fn heading_level(el: &ElementRef<'_>) -> Option<u8> {
    match el.value().name() {
        "h1" => Some(1),
        "h2" => Some(2),
        "h3" => Some(3),
        "h4" => Some(4),
        "h5" => Some(5),
        "h6" => Some(6),
        _ => None,
    }
}

fn heading_title(el: &ElementRef<'_>) -> String {
    el.text()
        .collect::<String>()
        .replace("[edit]", "")
        .trim()
        .trim_end_matches(':')
        .to_lowercase()
}

/// The heading level an element opens, looking inside wrapper elements.
fn opens_section(el: &ElementRef<'_>) -> Option<u8> {
    heading_level(el).or_else(|| {
        let sel = Selector::parse("h1, h2, h3, h4, h5, h6").expect("static selector");
        el.select(&sel).next().and_then(|h| heading_level(&h))
    })
}

/// Anchors in the section that follows a "References"-style heading.
fn heading_section_hrefs(doc: &Html) -> Vec<&str> {
    let headings = Selector::parse("h1, h2, h3, h4, h5, h6").expect("static selector");
    let anchors = Selector::parse("a[href]").expect("static selector");
    let mut out = Vec::new();
    for heading in doc.select(&headings) {
        if !REFERENCE_HEADINGS.contains(&heading_title(&heading).as_str()) {
            continue;
        }
        let level = heading_level(&heading).unwrap_or(6);
        // Headings wrapped in their own block (as MediaWiki does) are
        // followed by the wrapper's siblings.
        let mut start = heading;
        while start.next_siblings().all(|n| ElementRef::wrap(n).is_none()) {
            match start.parent().and_then(ElementRef::wrap) {
                Some(p) if p.value().name() != "body" => start = p,
                _ => break,
            }
        }
        for sib in start.next_siblings().filter_map(ElementRef::wrap) {
            if opens_section(&sib).is_some_and(|l| l <= level) {
                break;
            }
            out.extend(sib.select(&anchors).filter_map(|a| a.value().attr("href")));
        }
    }
    out
}

/// Off-site citation URIs of a reference page, in document order.
pub fn references_in_html(html: &str, page_uri: &str) -> ReferenceList {
    let doc = Html::parse_document(html);
    let base = Url::parse(page_uri).ok();
    let page_family = base.as_ref().and_then(Url::host_str).map(host_family);
    let containers = Selector::parse(REFERENCE_CONTAINERS).expect("static selector");
    let anchors = Selector::parse("a[href]").expect("static selector");

    let mut hrefs: Vec<&str> = doc
        .select(&containers)
        .flat_map(|c| c.select(&anchors))
        .filter_map(|a| a.value().attr("href"))
        .collect();
    let mut out = ReferenceList::default();
    if hrefs.is_empty() {
        hrefs = heading_section_hrefs(&doc);
    }
    if hrefs.is_empty() && doc.select(&containers).next().is_none() {
        out.warnings.push(format!("no references section found in {page_uri}"));
        return out;
    }

    let mut seen = HashSet::new();
    for href in hrefs {
        let Some(abs) = resolve(href.trim(), base.as_ref()) else {
            continue;
        };
        let Some(host) = Url::parse(&abs).ok().and_then(|u| u.host_str().map(str::to_string)) else {
            continue;
        };
        let family = host_family(&host);
        if page_family.as_deref() == Some(family.as_str()) || WIKI_FAMILIES.contains(&family.as_str()) {
            continue;
        }
        if seen.insert(abs.clone()) {
            out.uris.push(abs);
        }
    }
    out
}
