//! Bounded top-k selection shared by the retrievers.

use std::cmp::Ordering;

/// Returns the `k` smallest items under `cmp`, sorted. `cmp` must be a total
/// order for the result to be deterministic.
pub fn top_k_by<T, F>(mut items: Vec<T>, k: usize, mut cmp: F) -> Vec<T>
where
    F: FnMut(&T, &T) -> Ordering,
{
    if k == 0 {
        return Vec::new();
    }
    if items.len() > k {
        items.select_nth_unstable_by(k - 1, &mut cmp);
        items.truncate(k);
    }
    items.sort_unstable_by(cmp);
    items
}

/// Score-descending order with an ascending key as tie-break.
pub fn by_score_desc<K: Ord>(a: (f64, K), b: (f64, K)) -> Ordering {
    b.0.total_cmp(&a.0).then_with(|| a.1.cmp(&b.1))
}
