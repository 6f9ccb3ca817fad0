use std::sync::LazyLock;

use chrono::{DateTime, NaiveDate, Utc};
use regex::Regex;
use scraper::{Html, Selector};
use serde::{Deserialize, Serialize};
use url::Url;

use crate::corpus::FetchResult;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PubDate {
    pub date: NaiveDate,
    pub estimator: String,
}

/// One step of the publication-date chain.
pub trait DateEstimator: Send + Sync {
    fn name(&self) -> &str;

    fn estimate(&self, page: &FetchResult) -> Option<NaiveDate>;
}

static ISO_DATE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(\d{4})[-/.](\d{1,2})[-/.](\d{1,2})").expect("static regex"));
static JSON_LD_DATE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r#""datePublished"\s*:\s*"([^"]+)""#).expect("static regex"));
static PATH_DAY: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"/(\d{4})/(\d{1,2})/(\d{1,2})(?:/|$)").expect("static regex"));
static PATH_MONTH: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"/(\d{4})/(\d{1,2})(?:/|$)").expect("static regex"));

fn ymd(y: &str, m: &str, d: &str) -> Option<NaiveDate> {
    let year: i32 = y.parse().ok()?;
    if !(1900..=2100).contains(&year) {
        return None;
    }
    NaiveDate::from_ymd_opt(year, m.parse().ok()?, d.parse().ok()?)
}

/// Reads a date from the start of an ISO-8601-ish or RFC 2822 string.
pub fn parse_date_value(value: &str) -> Option<NaiveDate> {
    let value = value.trim();
    if let Ok(dt) = DateTime::parse_from_rfc2822(value) {
        return Some(dt.with_timezone(&Utc).date_naive());
    }
    if let Ok(dt) = DateTime::parse_from_rfc3339(value) {
        return Some(dt.with_timezone(&Utc).date_naive());
    }
    let caps = ISO_DATE.captures(value)?;
    ymd(&caps[1], &caps[2], &caps[3])
}

/// `<meta>` publication fields, `<time itemprop=datePublished>` and JSON-LD.
pub struct MetadataEstimator;

const META_SELECTORS: &str = "meta[property='article:published_time'], meta[property='og:published_time'], \
     meta[itemprop=datePublished], meta[name=pubdate], meta[name=publishdate], meta[name=date], \
     meta[name='DC.date.issued'], meta[name='dc.date'], meta[name='dcterms.created'], \
     meta[name=citation_publication_date], meta[name=citation_date], meta[name='parsely-pub-date'], \
     meta[name='sailthru.date']";

impl DateEstimator for MetadataEstimator {
    fn name(&self) -> &str {
        "metadata"
    }

    fn estimate(&self, page: &FetchResult) -> Option<NaiveDate> {
        let html = String::from_utf8_lossy(&page.body);
        let doc = Html::parse_document(&html);
        let meta = Selector::parse(META_SELECTORS).expect("static selector");
        if let Some(d) = doc
            .select(&meta)
            .filter_map(|m| m.value().attr("content"))
            .find_map(parse_date_value)
        {
            return Some(d);
        }
        let time = Selector::parse("time[itemprop=datePublished], time[pubdate]").expect("static selector");
        if let Some(d) = doc
            .select(&time)
            .filter_map(|t| t.value().attr("datetime"))
            .find_map(parse_date_value)
        {
            return Some(d);
        }
        let ld = Selector::parse("script[type='application/ld+json']").expect("static selector");
        doc.select(&ld)
            .flat_map(|s| s.text())
            .find_map(|t| JSON_LD_DATE.captures(t).and_then(|c| parse_date_value(&c[1])))
    }
}

/// `/YYYY/MM/DD/` or `/YYYY/MM/` in the URI path (first of month).
pub struct UriPathEstimator;

impl DateEstimator for UriPathEstimator {
    fn name(&self) -> &str {
        "uri_path"
    }

    fn estimate(&self, page: &FetchResult) -> Option<NaiveDate> {
        [&page.final_uri, &page.request_uri].into_iter().find_map(|u| {
            let path = Url::parse(u)
                .map(|p| p.path().to_string())
                .unwrap_or_else(|_| u.clone());
            PATH_DAY
                .captures(&path)
                .and_then(|c| ymd(&c[1], &c[2], &c[3]))
                .or_else(|| PATH_MONTH.captures(&path).and_then(|c| ymd(&c[1], &c[2], "1")))
        })
    }
}

pub struct LastModifiedEstimator;

impl DateEstimator for LastModifiedEstimator {
    fn name(&self) -> &str {
        "last_modified"
    }

    fn estimate(&self, page: &FetchResult) -> Option<NaiveDate> {
        page.last_modified.as_deref().and_then(parse_date_value)
    }
}

pub fn default_chain() -> Vec<Box<dyn DateEstimator>> {
    vec![
        Box::new(MetadataEstimator),
        Box::new(UriPathEstimator),
        Box::new(LastModifiedEstimator),
    ]
}

/// First estimate produced by `chain`, with the estimator's name.
pub fn estimate_with(chain: &[Box<dyn DateEstimator>], page: &FetchResult) -> Option<PubDate> {
    chain.iter().find_map(|e| {
        e.estimate(page).map(|date| PubDate {
            date,
            estimator: e.name().to_string(),
        })
    })
}

pub fn estimate_publication_date(page: &FetchResult) -> Option<PubDate> {
    estimate_with(&default_chain(), page)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgeSample {
    pub seed: String,
    pub publication_date: NaiveDate,
    pub estimator: String,
    pub retrieved_at: DateTime<Utc>,
    pub age_days: i64,
    /// The estimate postdates retrieval.
    pub flagged: bool,
}

impl AgeSample {
    pub fn new(seed: &str, pub_date: PubDate, retrieved_at: DateTime<Utc>) -> Self {
        let age_days = (retrieved_at.date_naive() - pub_date.date).num_days();
        AgeSample {
            seed: seed.to_string(),
            publication_date: pub_date.date,
            estimator: pub_date.estimator,
            retrieved_at,
            age_days,
            flagged: age_days < 0,
        }
    }

    pub fn age_years(&self) -> f64 {
        self.age_days as f64 / 365.25
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiveNumber {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub n: usize,
}

/// Quantile of sorted data by linear interpolation between order statistics.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn five_number_summary(values: &[f64]) -> Option<FiveNumber> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    Some(FiveNumber {
        min: v[0],
        q1: quantile(&v, 0.25),
        median: quantile(&v, 0.5),
        q3: quantile(&v, 0.75),
        max: v[v.len() - 1],
        n: v.len(),
    })
}

/// `(value, fraction ≤ value)` at each distinct value.
pub fn ecdf(values: &[f64]) -> Vec<(f64, f64)> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    let mut out = Vec::new();
    for (i, x) in v.iter().enumerate() {
        if v.get(i + 1) != Some(x) {
            out.push((*x, (i + 1) as f64 / n));
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgeDistribution {
    /// In years; `None` when every sample is flagged.
    pub summary: Option<FiveNumber>,
    pub ecdf: Vec<(f64, f64)>,
    pub flagged: usize,
}

/// Summary of non-flagged ages in years.
pub fn age_distribution(samples: &[AgeSample]) -> AgeDistribution {
    let years: Vec<f64> = samples
        .iter()
        .filter(|s| !s.flagged)
        .map(AgeSample::age_years)
        .collect();
    AgeDistribution {
        summary: five_number_summary(&years),
        ecdf: ecdf(&years),
        flagged: samples.iter().filter(|s| s.flagged).count(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::FetchStatus;
    use chrono::TimeZone;

    fn page(uri: &str, body: &str, last_modified: Option<&str>) -> FetchResult {
        FetchResult {
            request_uri: uri.into(),
            final_uri: uri.into(),
            status: FetchStatus::Http(200),
            media_type: Some("text/html".into()),
            last_modified: last_modified.map(String::from),
            content_type: Some("text/html".into()),
            body: body.as_bytes().to_vec(),
            fetched_at: Utc.with_ymd_and_hms(2018, 11, 6, 0, 0, 0).unwrap(),
            redirect_chain: vec![],
        }
    }

    fn d(y: i32, m: u32, day: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(y, m, day).unwrap()
    }

    #[test]
    fn metadata_first() {
        let p = page(
            "https://n.example/2016/01/05/story",
            r#"<meta property="article:published_time" content="2014-08-08T10:00:00Z">"#,
            None,
        );
        let got = estimate_publication_date(&p).unwrap();
        assert_eq!((got.date, got.estimator.as_str()), (d(2014, 8, 8), "metadata"));
    }

    #[test]
    fn json_ld_and_time() {
        let p = page(
            "https://n.example/a",
            r#"<script type="application/ld+json">{"@type":"NewsArticle","datePublished": "2015-03-02"}</script>"#,
            None,
        );
        assert_eq!(estimate_publication_date(&p).unwrap().date, d(2015, 3, 2));
        let p = page(
            "https://n.example/a",
            r#"<time itemprop="datePublished" datetime="2013-12-31">x</time>"#,
            None,
        );
        assert_eq!(estimate_publication_date(&p).unwrap().date, d(2013, 12, 31));
    }

    #[test]
    fn uri_path_then_header() {
        let p = page(
            "https://n.example/2016/01/05/story",
            "<p>x</p>",
            Some("Wed, 21 Oct 2015 07:28:00 GMT"),
        );
        let got = estimate_publication_date(&p).unwrap();
        assert_eq!((got.date, got.estimator.as_str()), (d(2016, 1, 5), "uri_path"));
        let p = page("https://n.example/2016/02/story", "<p>x</p>", None);
        assert_eq!(estimate_publication_date(&p).unwrap().date, d(2016, 2, 1));
        let p = page(
            "https://n.example/story",
            "<p>x</p>",
            Some("Wed, 21 Oct 2015 07:28:00 GMT"),
        );
        let got = estimate_publication_date(&p).unwrap();
        assert_eq!((got.date, got.estimator.as_str()), (d(2015, 10, 21), "last_modified"));
        assert!(estimate_publication_date(&page("https://n.example/story", "<p>x</p>", None)).is_none());
    }

    #[test]
    fn ages() {
        let retrieved = Utc.with_ymd_and_hms(2018, 11, 6, 0, 0, 0).unwrap();
        let s = AgeSample::new(
            "u",
            PubDate {
                date: d(2014, 8, 1),
                estimator: "metadata".into(),
            },
            retrieved,
        );
        assert!((s.age_years() - 4.27).abs() < 0.005);
        let future = AgeSample::new(
            "v",
            PubDate {
                date: d(2019, 1, 1),
                estimator: "metadata".into(),
            },
            retrieved,
        );
        assert!(future.flagged);
        let dist = age_distribution(&[future]);
        assert!(dist.summary.is_none());
        assert_eq!(dist.flagged, 1);
    }

    #[test]
    fn summary_and_ecdf() {
        let s = five_number_summary(&[30.0, 10.0, 20.0]).unwrap();
        assert_eq!((s.min, s.q1, s.median, s.q3, s.max), (10.0, 15.0, 20.0, 25.0, 30.0));
        assert_eq!(ecdf(&[2.0, 1.0, 2.0, 3.0]), [(1.0, 0.25), (2.0, 0.75), (3.0, 1.0)]);
    }
}
