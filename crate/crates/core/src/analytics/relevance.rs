use serde::{Deserialize, Serialize};

use crate::goldstandard::{build_term_vector, TermVector};

pub const DEFAULT_THRESHOLD: f64 = 0.25;

/// Cosine over the shared term space; 0 when either side is empty.
pub fn cosine_similarity(a: &TermVector, b: &TermVector) -> f64 {
    let (small, large) = if a.weights.len() <= b.weights.len() {
        (a, b)
    } else {
        (b, a)
    };
    let dot: f64 = small
        .weights
        .iter()
        .filter_map(|(t, w)| large.weights.get(t).map(|v| w * v))
        .fold(0.0, |acc, x| acc + x);
    let na = a.weights.values().map(|w| w * w).sum::<f64>().sqrt();
    let nb = b.weights.values().map(|w| w * w).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    (dot / (na * nb)).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelevanceJudgment {
    pub cosine: f64,
    pub relevant: bool,
    pub threshold: f64,
    /// The candidate had no usable text.
    pub empty: bool,
}

/// A candidate is relevant when its cosine to the gold vector strictly
/// exceeds `threshold`.
pub fn judge_vector(candidate: &TermVector, gold: &TermVector, threshold: f64) -> RelevanceJudgment {
    let cosine = cosine_similarity(candidate, gold);
    RelevanceJudgment {
        cosine,
        relevant: cosine > threshold,
        threshold,
        empty: candidate.is_empty(),
    }
}

pub fn judge_relevance<S: AsRef<str>>(candidate_texts: &[S], gold: &TermVector, threshold: f64) -> RelevanceJudgment {
    judge_vector(&build_term_vector(candidate_texts, true), gold, threshold)
}

/// Relevant seeds over all seeds; `None` for a post without seeds.
pub fn post_precision(relevant: &[bool]) -> Option<f64> {
    if relevant.is_empty() {
        return None;
    }
    Some(relevant.iter().filter(|r| **r).count() as f64 / relevant.len() as f64)
}

/// Unweighted mean of per-post precisions with the number of posts.
pub fn class_average_precision(precisions: &[f64]) -> Option<(f64, usize)> {
    if precisions.is_empty() {
        return None;
    }
    Some((
        precisions.iter().sum::<f64>() / precisions.len() as f64,
        precisions.len(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn v(pairs: &[(&str, f64)]) -> TermVector {
        TermVector::from_weights(
            pairs
                .iter()
                .map(|(k, w)| (k.to_string(), *w))
                .collect::<BTreeMap<_, _>>(),
        )
    }

    #[test]
    fn cosine_cases() {
        let a = v(&[("a", 0.5), ("b", 0.5)]);
        assert!((cosine_similarity(&a, &a) - 1.0).abs() < 1e-12);
        assert_eq!(cosine_similarity(&a, &v(&[("c", 1.0)])), 0.0);
        assert!((cosine_similarity(&a, &v(&[("a", 1.0)])) - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-4);
        assert_eq!(cosine_similarity(&a, &TermVector::default()), 0.0);
    }

    #[test]
    fn strict_threshold() {
        // cos = 1/4 exactly: gold {a}, candidate a:1 plus 15 unit terms gives 1/sqrt(16)
        let gold = v(&[("a", 1.0)]);
        let mut pairs = vec![("a".to_string(), 1.0)];
        pairs.extend((0..15).map(|i| (format!("z{i}"), 1.0)));
        let cand = TermVector::from_weights(pairs.into_iter().collect());
        let j = judge_vector(&cand, &gold, 0.25);
        assert_eq!(j.cosine, 0.25);
        assert!(!j.relevant);
    }

    #[test]
    fn empty_candidate_flagged() {
        let j = judge_relevance::<&str>(&[], &v(&[("a", 1.0)]), 0.25);
        assert!(j.empty && !j.relevant && j.cosine == 0.0);
    }

    #[test]
    fn precision_means() {
        assert_eq!(post_precision(&[true, false]), Some(0.5));
        assert_eq!(post_precision(&[true, true]), Some(1.0));
        assert!((post_precision(&[true, false, false]).unwrap() - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(post_precision(&[]), None);
        assert_eq!(class_average_precision(&[1.0, 0.0]), Some((0.5, 2)));
        assert_eq!(class_average_precision(&[0.7]), Some((0.7, 1)));
        assert_eq!(class_average_precision(&[1.0, 1.0, 0.0, 0.5]), Some((0.625, 4)));
        assert_eq!(class_average_precision(&[]), None);
    }
}
