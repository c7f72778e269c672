//! Fixed-order reductions.
//!
//! Element and face loops compute their terms in parallel into a vector, then
//! reduce here in an order that depends only on the input length, so results
//! are bit-identical for any worker count.

use rayon::prelude::*;

use crate::tensor3::Vec3;

const BLOCK: usize = 16;

/// Pairwise (cascade) summation with a fixed recursion tree.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= BLOCK {
        return xs.iter().fold(0.0, |a, &b| a + b);
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Evaluate `f` on `0..n` in parallel; output order is index order.
pub fn par_collect<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).into_par_iter().map(f).collect()
}

/// Scatter per-element nodal contributions into a per-node gradient in
/// element order.
pub fn scatter<const K: usize>(
    n_nodes: usize,
    locals: &[([usize; K], [Vec3; K])],
) -> Vec<Vec3> {
    let mut out = vec![Vec3::ZERO; n_nodes];
    for (nodes, grads) in locals {
        for (&n, g) in nodes.iter().zip(grads.iter()) {
            out[n] += *g;
        }
    }
    out
}

pub fn add_into(acc: &mut [Vec3], other: &[Vec3]) {
    for (a, b) in acc.iter_mut().zip(other) {
        *a += *b;
    }
}

pub fn dot(a: &[Vec3], b: &[Vec3]) -> f64 {
    let terms: Vec<f64> = a.iter().zip(b).map(|(x, y)| x.dot(y)).collect();
    pairwise_sum(&terms)
}

pub fn norm(a: &[Vec3]) -> f64 {
    dot(a, a).sqrt()
}
