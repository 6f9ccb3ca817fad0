use std::collections::HashSet;

/// `(U − 1) / (N − 1)` over `N` seeds spanning `U` distinct hosts; `None`
/// for fewer than two seeds.
pub fn hostname_diversity<S: AsRef<str>>(hostnames: &[S]) -> Option<f64> {
    let n = hostnames.len();
    if n < 2 {
        return None;
    }
    let u = hostnames.iter().map(AsRef::as_ref).collect::<HashSet<&str>>().len();
    Some((u - 1) as f64 / (n - 1) as f64)
}

/// Fraction of the candidate's canonical URIs that also appear in the
/// reference collection; `None` for an empty candidate.
pub fn serp_overlap<S: AsRef<str>, T: AsRef<str>>(reference: &[S], candidate: &[T]) -> Option<f64> {
    let cand: HashSet<&str> = candidate.iter().map(AsRef::as_ref).collect();
    if cand.is_empty() {
        return None;
    }
    let reference: HashSet<&str> = reference.iter().map(AsRef::as_ref).collect();
    Some(cand.intersection(&reference).count() as f64 / cand.len() as f64)
}
