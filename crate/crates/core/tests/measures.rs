mod common;

use std::collections::{BTreeMap, BTreeSet};

use chrono::{NaiveDate, TimeZone, Utc};
use common::distinct_count;
use proptest::prelude::*;
use seedsmith::analytics::{
    age_distribution, class_average_precision, cosine_similarity, hostname_diversity, post_precision, serp_overlap,
    AgeSample, PubDate,
};
use seedsmith::goldstandard::TermVector;

fn vector(pairs: &[(&str, f64)]) -> TermVector {
    TermVector::from_weights(pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect())
}

fn oracle_cosine(a: &BTreeMap<String, f64>, b: &BTreeMap<String, f64>) -> f64 {
    let norm = |m: &BTreeMap<String, f64>| m.values().map(|x| x * x).sum::<f64>().sqrt();
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    let dot: f64 = a.iter().filter_map(|(k, x)| b.get(k).map(|y| x * y)).sum();
    dot / (na * nb)
}

#[test]
fn relevance_on_recorded_pages() {
    let outcome = common::criteria::relevance_fixtures();
    assert!(outcome.is_ok(), "{outcome:?}");
}

#[test]
fn diversity_examples() {
    let outcome = common::criteria::diversity();
    assert!(outcome.is_ok(), "{outcome:?}");
}

#[test]
fn half_overlapping_vector() {
    let c = cosine_similarity(&vector(&[("a", 0.5), ("b", 0.5)]), &vector(&[("a", 1.0)]));
    assert!((c - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-4);
}

#[test]
fn precision_examples() {
    assert_eq!(post_precision(&[true, false]), Some(0.5));
    assert_eq!(post_precision(&[true, true, true]), Some(1.0));
    assert!((post_precision(&[true, false, false]).unwrap() - 1.0 / 3.0).abs() < 1e-12);
    assert_eq!(post_precision(&[]), None);
    assert_eq!(class_average_precision(&[1.0, 0.0]), Some((0.5, 2)));
    assert_eq!(class_average_precision(&[0.7]), Some((0.7, 1)));
    assert_eq!(class_average_precision(&[1.0, 1.0, 0.0, 0.5]), Some((0.625, 4)));
}

#[test]
fn overlap_examples() {
    assert_eq!(serp_overlap(&["u1", "u2"], &["u2", "u3", "u4"]), Some(1.0 / 3.0));
    assert_eq!(serp_overlap(&["u1"], &["u2"]), Some(0.0));
    assert_eq!(serp_overlap(&["u1", "u2", "u3"], &["u2", "u1"]), Some(1.0));
}

fn sample(seed: &str, published: NaiveDate) -> AgeSample {
    let retrieved = Utc.with_ymd_and_hms(2018, 11, 6, 12, 0, 0).unwrap();
    AgeSample::new(
        seed,
        PubDate {
            date: published,
            estimator: "test".into(),
        },
        retrieved,
    )
}

#[test]
fn age_in_years_from_dates() {
    let s = sample("s", NaiveDate::from_ymd_opt(2014, 8, 1).unwrap());
    // 2014-08-01 to 2018-11-06 is 1558 days.
    assert_eq!(s.age_days, 1558);
    assert!((s.age_years() - 4.27).abs() < 0.005);
}

#[test]
fn median_of_three_ages() {
    let retrieved = NaiveDate::from_ymd_opt(2018, 11, 6).unwrap();
    let samples: Vec<AgeSample> = [10, 20, 30]
        .iter()
        .map(|d| sample("s", retrieved - chrono::Duration::days(*d)))
        .collect();
    let summary = age_distribution(&samples).summary.unwrap();
    assert!((summary.median * 365.25 - 20.0).abs() < 1e-9);
}

#[test]
fn future_dates_are_flagged_and_left_out() {
    let samples = vec![
        sample("old", NaiveDate::from_ymd_opt(2017, 1, 1).unwrap()),
        sample("future", NaiveDate::from_ymd_opt(2019, 1, 1).unwrap()),
    ];
    let dist = age_distribution(&samples);
    assert_eq!(dist.flagged, 1);
    assert_eq!(dist.summary.unwrap().n, 1);
}

fn arb_weights() -> impl Strategy<Value = BTreeMap<String, f64>> {
    prop::collection::btree_map("[a-h]", 0.0f64..5.0, 0..8)
}

proptest! {
    #[test]
    fn cosine_is_bounded_symmetric_and_matches_the_oracle(a in arb_weights(), b in arb_weights()) {
        let (va, vb) = (TermVector::from_weights(a.clone()), TermVector::from_weights(b.clone()));
        let c = cosine_similarity(&va, &vb);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&c));
        prop_assert!((c - cosine_similarity(&vb, &va)).abs() < 1e-12);
        prop_assert!((c - oracle_cosine(&a, &b)).abs() < 1e-9);
    }

    #[test]
    fn diversity_matches_the_distinct_count(hosts in prop::collection::vec("[a-d]\\.example", 0..10)) {
        let got = hostname_diversity(&hosts);
        let n = hosts.len();
        let want = match n {
            0 | 1 => None,
            _ => Some((distinct_count(hosts.iter().map(String::as_str)) - 1) as f64 / (n - 1) as f64),
        };
        prop_assert_eq!(got, want);
    }

    #[test]
    fn overlap_is_the_reference_share_of_the_candidate(
        reference in prop::collection::btree_set("u[0-9]", 0..6),
        candidate in prop::collection::btree_set("u[0-9]", 1..6),
    ) {
        let r: Vec<&String> = reference.iter().collect();
        let c: Vec<&String> = candidate.iter().collect();
        let shared: BTreeSet<_> = reference.intersection(&candidate).collect();
        prop_assert_eq!(serp_overlap(&r, &c), Some(shared.len() as f64 / candidate.len() as f64));
    }

    #[test]
    fn ecdf_reaches_one_and_never_decreases(days in prop::collection::vec(0i64..5000, 1..30)) {
        let retrieved = NaiveDate::from_ymd_opt(2018, 11, 6).unwrap();
        let samples: Vec<AgeSample> = days.iter().map(|d| sample("s", retrieved - chrono::Duration::days(*d))).collect();
        let dist = age_distribution(&samples);
        let last = dist.ecdf.last().unwrap();
        prop_assert_eq!(last.1, 1.0);
        for w in dist.ecdf.windows(2) {
            prop_assert!(w[0].0 < w[1].0 && w[0].1 < w[1].1);
        }
        let s = dist.summary.unwrap();
        prop_assert!(s.min <= s.q1 && s.q1 <= s.median && s.median <= s.q3 && s.q3 <= s.max);
    }
}
