use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, NaiveDate, Utc};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Social platform a post was collected from.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Source {
    Reddit,
    Twitter,
    TwitterMoments,
    ScoopIt,
    Other(String),
}

/// SERP vertical (tab or ordering) a post was found under.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Vertical {
    Relevance,
    Top,
    New,
    Comments,
    Latest,
    Scoops,
    Topics,
    Moments,
    Other(String),
}

macro_rules! string_enum {
    ($ty:ident { $($variant:ident => $name:literal),* $(,)? }) => {
        impl $ty {
            pub fn as_str(&self) -> &str {
                match self {
                    $($ty::$variant => $name,)*
                    $ty::Other(name) => name.as_str(),
                }
            }
        }

        impl FromStr for $ty {
            type Err = std::convert::Infallible;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                Ok(match s {
                    $($name => $ty::$variant,)*
                    other => $ty::Other(other.to_string()),
                })
            }
        }

        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl Serialize for $ty {
            fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
                serializer.serialize_str(self.as_str())
            }
        }

        impl<'de> Deserialize<'de> for $ty {
            fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
                let s = String::deserialize(deserializer)?;
                Ok(s.parse().unwrap_or_else(|never: std::convert::Infallible| match never {}))
            }
        }
    };
}

string_enum!(Source {
    Reddit => "reddit",
    Twitter => "twitter",
    TwitterMoments => "twitter_moments",
    ScoopIt => "scoopit",
});

string_enum!(Vertical {
    Relevance => "relevance",
    Top => "top",
    New => "new",
    Comments => "comments",
    Latest => "latest",
    Scoops => "scoops",
    Topics => "topics",
    Moments => "moments",
});

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QueryKind {
    Text,
    Hashtag,
}

/// One social-media post as scraped, before any canonicalization.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Post {
    pub id: String,
    pub source: Source,
    pub vertical: Vertical,
    pub query: String,
    pub query_kind: QueryKind,
    pub topic_id: String,
    pub author: String,
    pub parent_id: Option<String>,
    pub serp_visible: bool,
    pub created_at: Option<DateTime<Utc>>,
    pub retrieved_at: DateTime<Utc>,
    pub text: String,
    pub raw_links: Vec<String>,
    pub platform_uri: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Expectation {
    Expected,
    Unexpected,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecurrenceKind {
    Recurring,
    NonRecurring,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Recurrence {
    pub kind: RecurrenceKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regularity: Option<String>,
}

/// Start or end of a topic's occurrence. Month precision covers table
/// entries such as "December 2013".
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OccurrenceBound {
    #[default]
    Undefined,
    Month {
        year: i32,
        month: u32,
    },
    Day(NaiveDate),
}

impl fmt::Display for OccurrenceBound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OccurrenceBound::Undefined => f.write_str("undefined"),
            OccurrenceBound::Month { year, month } => write!(f, "{year:04}-{month:02}"),
            OccurrenceBound::Day(date) => write!(f, "{}", date.format("%Y-%m-%d")),
        }
    }
}

impl FromStr for OccurrenceBound {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("undefined") {
            return Ok(OccurrenceBound::Undefined);
        }
        if let Ok(date) = NaiveDate::parse_from_str(s, "%Y-%m-%d") {
            return Ok(OccurrenceBound::Day(date));
        }
        if let Some((y, m)) = s.split_once('-') {
            if let (Ok(year), Ok(month)) = (y.parse::<i32>(), m.parse::<u32>()) {
                if (1..=12).contains(&month) && y.len() == 4 {
                    return Ok(OccurrenceBound::Month { year, month });
                }
            }
        }
        Err(format!(
            "invalid occurrence bound {s:?}; expected YYYY-MM-DD, YYYY-MM or undefined"
        ))
    }
}

impl Serialize for OccurrenceBound {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for OccurrenceBound {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A topic and its temporal attributes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopicSpec {
    pub topic_id: String,
    pub text_query: String,
    #[serde(default)]
    pub hashtag_query: Option<String>,
    pub expectation: Expectation,
    pub recurrence: Recurrence,
    #[serde(default)]
    pub start_definition: OccurrenceBound,
    #[serde(default)]
    pub end_definition: OccurrenceBound,
    /// Page whose reference list seeds the topic's gold standard.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_page: Option<String>,
}

/// One ingestion log entry.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProvenanceEntry {
    pub adapter: String,
    pub query: String,
    pub at: DateTime<Utc>,
    pub post_count: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}
