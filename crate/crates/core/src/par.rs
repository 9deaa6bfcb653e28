//! Execution helpers for the data-parallel inner loops (sweep members,
//! paired runs, excitation scans). With the `parallel` feature (default),
//! [`map`] fans work out over rayon; without it, it degrades to the
//! sequential path. [`map_seq`] is always sequential and exists so the two
//! can be benchmarked against each other.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Map `f` over `items`, preserving order. Parallel when the `parallel`
/// feature is enabled, sequential otherwise.
#[cfg(feature = "parallel")]
pub fn map<I, O, F>(items: Vec<I>, f: F) -> Vec<O>
where
    I: Send,
    O: Send,
    F: Fn(I) -> O + Sync + Send,
{
    items.into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map<I, O, F>(items: Vec<I>, f: F) -> Vec<O>
where
    F: Fn(I) -> O,
{
    map_seq(items, f)
}

/// Sequential reference path; output must be identical to [`map`].
pub fn map_seq<I, O, F>(items: Vec<I>, f: F) -> Vec<O>
where
    F: Fn(I) -> O,
{
    items.into_iter().map(f).collect()
}
