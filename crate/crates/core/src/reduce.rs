//! Order-fixed parallel reductions.
//!
//! Work is split into fixed-size chunks and the per-chunk results are folded
//! pairwise in index order, so floating-point sums do not depend on how many
//! threads ran the chunks.

use std::ops::Range;

use rayon::prelude::*;

/// Maps `f` over consecutive chunks of `0..len` in parallel; results are in
/// chunk order.
pub(crate) fn map_chunks<T, F>(len: usize, chunk: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(Range<usize>) -> T + Sync,
{
    let chunk = chunk.max(1);
    let count = len.div_ceil(chunk);
    (0..count)
        .into_par_iter()
        .map(|c| f(c * chunk..((c + 1) * chunk).min(len)))
        .collect()
}

/// Pairwise tree fold with a shape fixed by the number of items.
pub(crate) fn tree_fold<T>(mut items: Vec<T>, add: impl Fn(T, T) -> T) -> Option<T> {
    while items.len() > 1 {
        let mut next = Vec::with_capacity(items.len().div_ceil(2));
        let mut it = items.into_iter();
        while let Some(a) = it.next() {
            match it.next() {
                Some(b) => next.push(add(a, b)),
                None => next.push(a),
            }
        }
        items = next;
    }
    items.pop()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fold_shape_is_fixed() {
        let parts = map_chunks(10, 3, |r| r.sum::<usize>());
        assert_eq!(parts, vec![3, 12, 21, 9]);
        assert_eq!(tree_fold(parts, |a, b| a + b), Some(45));
        assert_eq!(tree_fold(Vec::<u8>::new(), |a, b| a + b), None);
        let order = tree_fold(vec!["a".to_string(), "b".into(), "c".into()], |a, b| format!("({a}{b})"));
        assert_eq!(order.unwrap(), "((ab)c)");
    }
}
