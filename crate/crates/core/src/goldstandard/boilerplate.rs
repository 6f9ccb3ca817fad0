use std::collections::HashMap;

use ego_tree::iter::Edge;
use ego_tree::{NodeId, NodeRef};
use encoding_rs::{Encoding, UTF_8};
use scraper::{Html, Node};

use super::GoldError;

/// Elements whose whole subtree is page furniture.
const REMOVED: &[&str] = &[
    "aside", "button", "footer", "form", "head", "header", "iframe", "nav", "noscript", "script", "select", "style",
    "svg", "template",
];

const BLOCK: &[&str] = &[
    "address",
    "article",
    "blockquote",
    "br",
    "caption",
    "dd",
    "div",
    "dl",
    "dt",
    "figcaption",
    "figure",
    "h1",
    "h2",
    "h3",
    "h4",
    "h5",
    "h6",
    "hr",
    "li",
    "main",
    "ol",
    "p",
    "pre",
    "section",
    "table",
    "td",
    "th",
    "tr",
    "ul",
];

const CANDIDATES: &[&str] = &["article", "blockquote", "body", "div", "main", "section", "td"];

fn is_removed(node: &NodeRef<'_, Node>) -> bool {
    match node.value() {
        Node::Element(el) => {
            REMOVED.contains(&el.name())
                || el.attr("hidden").is_some()
                || el.attr("aria-hidden").is_some_and(|v| v.eq_ignore_ascii_case("true"))
        }
        Node::Comment(_) | Node::ProcessingInstruction(_) => true,
        _ => false,
    }
}

fn element_name<'a>(node: &NodeRef<'a, Node>) -> Option<&'a str> {
    match node.value() {
        Node::Element(el) => Some(el.name()),
        _ => None,
    }
}

/// Charset from a BOM, the Content-Type header, or a `<meta>` declaration
/// in the first kilobyte; UTF-8 otherwise.
pub fn sniff_encoding(bytes: &[u8], content_type: Option<&str>) -> &'static Encoding {
    if let Some((enc, _)) = Encoding::for_bom(bytes) {
        return enc;
    }
    let from_label = |s: &str| {
        let lower = s.to_ascii_lowercase();
        let idx = lower.find("charset=")?;
        let rest = lower[idx + "charset=".len()..].trim_start_matches(['"', '\'']);
        let label: String = rest
            .chars()
            .take_while(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | ':' | '.'))
            .collect();
        Encoding::for_label(label.as_bytes())
    };
    if let Some(enc) = content_type.and_then(from_label) {
        return enc;
    }
    let head = String::from_utf8_lossy(&bytes[..bytes.len().min(1024)]).into_owned();
    if let Some(enc) = from_label(&head.replace("charset =", "charset=")) {
        return enc;
    }
    UTF_8
}

/// Decodes an HTML payload, rejecting bytes that are clearly not HTML.
pub fn decode_html(bytes: &[u8], content_type: Option<&str>) -> Result<String, GoldError> {
    if bytes.starts_with(b"%PDF") {
        return Err(GoldError::NotHtml("PDF document".into()));
    }
    if bytes[..bytes.len().min(1024)].contains(&0) && Encoding::for_bom(bytes).is_none() {
        return Err(GoldError::NotHtml("binary content".into()));
    }
    let encoding = sniff_encoding(bytes, content_type);
    let body = match Encoding::for_bom(bytes) {
        Some((_, bom_len)) => &bytes[bom_len..],
        None => bytes,
    };
    let text = encoding
        .decode_without_bom_handling_and_without_replacement(body)
        .ok_or_else(|| GoldError::Decode {
            encoding: encoding.name().to_string(),
        })?
        .into_owned();
    let has_tag = text
        .as_bytes()
        .windows(2)
        .any(|w| w[0] == b'<' && (w[1].is_ascii_alphabetic() || w[1] == b'!' || w[1] == b'/'));
    if !text.trim().is_empty() && !has_tag {
        return Err(GoldError::NotHtml("no markup found".into()));
    }
    Ok(text)
}

/// Main-content plaintext of an HTML document.
///
/// Furniture elements are dropped, then every `<p>`/`<pre>` adds its text
/// length to its parent and half of it to its grandparent. The candidate
/// block with the highest score, discounted by its link density, is kept;
/// documents without paragraphs fall back to the whole body.
pub fn strip_boilerplate(html: &[u8]) -> Result<String, GoldError> {
    strip_boilerplate_with(html, None)
}

pub fn strip_boilerplate_with(html: &[u8], content_type: Option<&str>) -> Result<String, GoldError> {
    let text = decode_html(html, content_type)?;
    let doc = Html::parse_document(&text);
    let root = doc.tree.root();

    // Text and link-text lengths per element, outside removed subtrees.
    let mut text_len: HashMap<NodeId, usize> = HashMap::new();
    let mut link_len: HashMap<NodeId, usize> = HashMap::new();
    let mut stack: Vec<(NodeId, usize, usize)> = Vec::new();
    let mut order: Vec<NodeRef<'_, Node>> = Vec::new();
    let mut skip_depth = 0usize;
    let mut anchor_depth = 0usize;
    for edge in root.traverse() {
        match edge {
            Edge::Open(node) => {
                if skip_depth > 0 || is_removed(&node) {
                    skip_depth += 1;
                    continue;
                }
                match node.value() {
                    Node::Element(el) => {
                        if el.name() == "a" {
                            anchor_depth += 1;
                        }
                        stack.push((node.id(), 0, 0));
                        order.push(node);
                    }
                    Node::Text(t) => {
                        let n = t.split_whitespace().map(|w| w.chars().count() + 1).sum::<usize>();
                        if let Some(top) = stack.last_mut() {
                            top.1 += n;
                            if anchor_depth > 0 {
                                top.2 += n;
                            }
                        }
                    }
                    _ => {}
                }
            }
            Edge::Close(node) => {
                if skip_depth > 0 {
                    skip_depth -= 1;
                    continue;
                }
                if let Node::Element(el) = node.value() {
                    if el.name() == "a" {
                        anchor_depth -= 1;
                    }
                    let (id, t, l) = stack.pop().expect("balanced traversal");
                    text_len.insert(id, t);
                    link_len.insert(id, l);
                    if let Some(parent) = stack.last_mut() {
                        parent.1 += t;
                        parent.2 += l;
                    }
                }
            }
        }
    }

    let density = |id: NodeId| {
        let t = text_len.get(&id).copied().unwrap_or(0);
        if t == 0 {
            0.0
        } else {
            link_len.get(&id).copied().unwrap_or(0) as f64 / t as f64
        }
    };

    let mut score: HashMap<NodeId, f64> = HashMap::new();
    for node in &order {
        if !matches!(element_name(node), Some("p" | "pre")) {
            continue;
        }
        let len = text_len.get(&node.id()).copied().unwrap_or(0) as f64 * (1.0 - density(node.id()));
        if len <= 0.0 {
            continue;
        }
        if let Some(parent) = node.parent() {
            *score.entry(parent.id()).or_default() += len;
            if let Some(grand) = parent.parent() {
                *score.entry(grand.id()).or_default() += len / 2.0;
            }
        }
    }

    let mut best: Option<(NodeRef<'_, Node>, f64)> = None;
    for node in &order {
        if !element_name(node).is_some_and(|n| CANDIDATES.contains(&n)) {
            continue;
        }
        let Some(s) = score.get(&node.id()) else { continue };
        let s = s * (1.0 - density(node.id()));
        if best.as_ref().is_none_or(|(_, b)| s > *b) {
            best = Some((*node, s));
        }
    }

    let chosen = match best {
        Some((node, _)) => render(node),
        None => String::new(),
    };
    if !chosen.is_empty() {
        return Ok(chosen);
    }
    let body = order.iter().find(|n| element_name(n) == Some("body")).copied();
    let fallback = body.map(render).unwrap_or_default();
    if fallback.is_empty() {
        tracing::warn!("document has no main content after boilerplate removal");
    }
    Ok(fallback)
}

/// Visible text under `node` with spaces at block boundaries, whitespace
/// collapsed.
fn render(node: NodeRef<'_, Node>) -> String {
    let mut out = String::new();
    let mut skip_depth = 0usize;
    for edge in node.traverse() {
        match edge {
            Edge::Open(n) => {
                if skip_depth > 0 || is_removed(&n) {
                    skip_depth += 1;
                    continue;
                }
                match n.value() {
                    Node::Text(t) => out.push_str(t),
                    Node::Element(el) if BLOCK.contains(&el.name()) => out.push(' '),
                    _ => {}
                }
            }
            Edge::Close(n) => {
                if skip_depth > 0 {
                    skip_depth -= 1;
                    continue;
                }
                if element_name(&n).is_some_and(|name| BLOCK.contains(&name)) {
                    out.push(' ');
                }
            }
        }
    }
    out.split_whitespace().collect::<Vec<_>>().join(" ")
}
