//! Deterministic parallel reductions: fixed-size chunks summed in order, so
//! results do not depend on the thread count.

use rayon::prelude::*;

pub(crate) const CHUNK_PIXELS: usize = 1 << 14;

/// Sums `f(range)` over consecutive pixel ranges of fixed length.
pub(crate) fn chunked_sum<const K: usize>(
    n: usize,
    f: impl Fn(std::ops::Range<usize>) -> [f64; K] + Sync,
) -> [f64; K] {
    let chunks = n.div_ceil(CHUNK_PIXELS);
    let parts: Vec<[f64; K]> = (0..chunks)
        .into_par_iter()
        .map(|c| f(c * CHUNK_PIXELS..((c + 1) * CHUNK_PIXELS).min(n)))
        .collect();
    let mut acc = [0.0; K];
    for p in parts {
        for k in 0..K {
            acc[k] += p[k];
        }
    }
    acc
}
