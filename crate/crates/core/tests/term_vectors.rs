use std::collections::BTreeMap;

use proptest::prelude::*;
use seedsmith::goldstandard::{build_term_vector, STOPWORDS};

const WORDS: [&str; 10] = [
    "Flood", "rain", "the", "a", "storm", "levee", "and", "x", "Houston", "of",
];

fn oracle(words: &[Vec<&str>]) -> BTreeMap<String, f64> {
    let mut counts: BTreeMap<String, f64> = BTreeMap::new();
    for doc in words {
        for w in doc {
            let w = w.to_lowercase();
            if w.len() > 1 && !STOPWORDS.contains(&w.as_str()) {
                *counts.entry(w).or_default() += 1.0;
            }
        }
    }
    let total: f64 = counts.values().sum();
    counts.values_mut().for_each(|v| *v /= total);
    counts
}

#[test]
fn hand_counted_examples() {
    let v = build_term_vector(&["cat cat dog"], true);
    assert_eq!(v.weights["cat"], 2.0 / 3.0);
    assert_eq!(v.weights["dog"], 1.0 / 3.0);
    assert!(build_term_vector::<&str>(&[], true).is_empty());
    assert_eq!(build_term_vector::<&str>(&[], true).term_count, 0);
    assert!(build_term_vector(&["the the the"], true).is_empty());
}

#[test]
fn stopword_list_has_179_entries() {
    assert_eq!(STOPWORDS.len(), 179);
}

proptest! {
    #[test]
    fn normalized_weights_match_a_word_count(
        docs in prop::collection::vec(prop::collection::vec(prop::sample::select(WORDS.to_vec()), 0..12), 0..4),
        sep in prop::sample::select(vec![" ", ", ", "\n", " -- "]),
    ) {
        let texts: Vec<String> = docs.iter().map(|d| d.join(sep)).collect();
        let v = build_term_vector(&texts, true);
        let want = oracle(&docs);
        prop_assert_eq!(v.weights.keys().collect::<Vec<_>>(), want.keys().collect::<Vec<_>>());
        for (k, w) in &want {
            prop_assert!((v.weights[k] - w).abs() < 1e-12);
        }
        if !v.is_empty() {
            prop_assert!((v.weights.values().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }
}
