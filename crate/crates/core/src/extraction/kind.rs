use serde::{Deserialize, Serialize};
use url::Url;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum UriKind {
    #[serde(rename = "HTML")]
    Html,
    #[serde(rename = "NonHTML")]
    NonHtml,
    Unknown,
}

impl UriKind {
    pub fn as_str(self) -> &'static str {
        match self {
            UriKind::Html => "HTML",
            UriKind::NonHtml => "NonHTML",
            UriKind::Unknown => "Unknown",
        }
    }
}

impl std::fmt::Display for UriKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// File extensions that mark a non-HTML representation.
pub const NON_HTML_EXTENSIONS: &[&str] = &[
    "7z", "avi", "bmp", "csv", "doc", "docx", "epub", "flac", "gif", "gz", "ico", "jpeg", "jpg", "json", "m4a", "m4v",
    "mov", "mp3", "mp4", "mpeg", "mpg", "odp", "ods", "odt", "ogg", "pdf", "png", "ppt", "pptx", "ps", "rar", "rss",
    "rtf", "svg", "tar", "tif", "tiff", "tsv", "txt", "wav", "webm", "webp", "wmv", "xls", "xlsx", "xml", "zip",
];

/// Decides HTML vs non-HTML from a media type, falling back to the URI's
/// file extension. `Unknown` only when neither is given.
pub fn classify_uri_kind(media_type: Option<&str>, uri: Option<&str>) -> UriKind {
    if let Some(mt) = media_type.map(str::trim).filter(|m| !m.is_empty()) {
        let essence = mt.split(';').next().unwrap_or_default().trim().to_ascii_lowercase();
        return if essence == "text/html" || essence == "application/xhtml+xml" {
            UriKind::Html
        } else {
            UriKind::NonHtml
        };
    }
    let Some(uri) = uri else {
        return UriKind::Unknown;
    };
    let path = Url::parse(uri)
        .map(|u| u.path().to_string())
        .unwrap_or_else(|_| uri.split(['?', '#']).next().unwrap_or_default().to_string());
    let last = path.rsplit('/').next().unwrap_or_default();
    match last.rsplit_once('.') {
        Some((stem, ext)) if !stem.is_empty() && NON_HTML_EXTENSIONS.contains(&ext.to_ascii_lowercase().as_str()) => {
            UriKind::NonHtml
        }
        _ => UriKind::Html,
    }
}
