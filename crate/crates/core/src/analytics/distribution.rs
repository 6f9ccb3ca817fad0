use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum KBin {
    #[serde(rename = "1")]
    One,
    #[serde(rename = "2")]
    Two,
    #[serde(rename = "3-4")]
    ThreeFour,
    #[serde(rename = "5+")]
    FivePlus,
}

impl KBin {
    pub const ALL: [KBin; 4] = [KBin::One, KBin::Two, KBin::ThreeFour, KBin::FivePlus];

    /// `None` for posts without URIs.
    pub fn of(k: usize) -> Option<KBin> {
        match k {
            0 => None,
            1 => Some(KBin::One),
            2 => Some(KBin::Two),
            3 | 4 => Some(KBin::ThreeFour),
            _ => Some(KBin::FivePlus),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            KBin::One => "1",
            KBin::Two => "2",
            KBin::ThreeFour => "3-4",
            KBin::FivePlus => "5+",
        }
    }
}

impl fmt::Display for KBin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistMode {
    /// Pooled over topics: Σ_t count_t(k) / Σ_t |c_t|.
    #[default]
    Normalized,
    /// Per-stratum fractions summed: Σ_t count_t(k) / |c_t|.
    LiteralEq1,
}

impl DistMode {
    pub fn as_str(self) -> &'static str {
        match self {
            DistMode::Normalized => "normalized",
            DistMode::LiteralEq1 => "literal",
        }
    }
}

impl FromStr for DistMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "normalized" => Ok(DistMode::Normalized),
            "literal" | "literal_eq1" => Ok(DistMode::LiteralEq1),
            _ => Err(format!(
                "unknown distribution mode {s:?} (expected normalized or literal)"
            )),
        }
    }
}

/// Probability of each k-bin over posts with at least one URI.
///
/// `per_topic` maps a stratum (a topic, or a topic and class for the All
/// column) to the URI counts of its posts; zero counts are ignored. The
/// literal mode sums one fraction per stratum. `None` when no stratum has
/// a post with a URI.
pub fn distribution_column(per_topic: &BTreeMap<String, Vec<usize>>, mode: DistMode) -> Option<BTreeMap<KBin, f64>> {
    let mut binned: Vec<(BTreeMap<KBin, usize>, usize)> = Vec::new();
    for counts in per_topic.values() {
        let mut bins: BTreeMap<KBin, usize> = BTreeMap::new();
        let mut n = 0;
        for bin in counts.iter().filter_map(|&k| KBin::of(k)) {
            *bins.entry(bin).or_default() += 1;
            n += 1;
        }
        if n > 0 {
            binned.push((bins, n));
        }
    }
    if binned.is_empty() {
        return None;
    }
    let total: usize = binned.iter().map(|(_, n)| n).sum();
    let column = KBin::ALL
        .iter()
        .map(|&bin| {
            let p = match mode {
                DistMode::Normalized => {
                    binned
                        .iter()
                        .map(|(b, _)| b.get(&bin).copied().unwrap_or(0))
                        .sum::<usize>() as f64
                        / total as f64
                }
                DistMode::LiteralEq1 => binned
                    .iter()
                    .map(|(b, n)| b.get(&bin).copied().unwrap_or(0) as f64 / *n as f64)
                    .sum(),
            };
            (bin, p)
        })
        .collect();
    Some(column)
}

/// Mean of `values` for the posts whose URI count falls in each bin.
pub fn mean_by_bin(samples: &[(usize, f64)]) -> BTreeMap<KBin, (f64, usize)> {
    let mut acc: BTreeMap<KBin, (f64, usize)> = BTreeMap::new();
    for &(k, v) in samples {
        if let Some(bin) = KBin::of(k) {
            let e = acc.entry(bin).or_default();
            e.0 += v;
            e.1 += 1;
        }
    }
    acc.into_iter().map(|(b, (sum, n))| (b, (sum / n as f64, n))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn topics(rows: &[(&str, &[usize])]) -> BTreeMap<String, Vec<usize>> {
        rows.iter().map(|(t, c)| (t.to_string(), c.to_vec())).collect()
    }

    #[test]
    fn single_topic_modes_agree() {
        let t = topics(&[("a", &[1, 1, 2, 5])]);
        for mode in [DistMode::Normalized, DistMode::LiteralEq1] {
            let c = distribution_column(&t, mode).unwrap();
            assert_eq!(c[&KBin::One], 0.5);
            assert_eq!(c[&KBin::Two], 0.25);
            assert_eq!(c[&KBin::ThreeFour], 0.0);
            assert_eq!(c[&KBin::FivePlus], 0.25);
        }
    }

    #[test]
    fn two_topics_differ_by_mode() {
        let t = topics(&[("a", &[1, 1, 2, 5]), ("b", &[1, 3])]);
        assert_eq!(distribution_column(&t, DistMode::LiteralEq1).unwrap()[&KBin::One], 1.0);
        assert_eq!(distribution_column(&t, DistMode::Normalized).unwrap()[&KBin::One], 0.5);
    }

    #[test]
    fn zero_counts_ignored_and_na() {
        assert!(distribution_column(&topics(&[("a", &[0, 0])]), DistMode::Normalized).is_none());
        assert!(distribution_column(&BTreeMap::new(), DistMode::LiteralEq1).is_none());
        let c = distribution_column(&topics(&[("a", &[0, 2])]), DistMode::Normalized).unwrap();
        assert_eq!(c[&KBin::Two], 1.0);
    }

    #[test]
    fn conditional_means() {
        let m = mean_by_bin(&[(1, 1.0), (1, 0.0), (1, 1.0), (8, 1.0)]);
        assert!((m[&KBin::One].0 - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(m[&KBin::FivePlus], (1.0, 1));
        assert!(!m.contains_key(&KBin::Two));
    }
}
