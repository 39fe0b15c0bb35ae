//! Dense row-major storage helpers for order-n tensors over `n_sites` indices.
//!
//! The flat index of `(i₁, …, iₙ)` is `Σ i_k·N^{n−k}`: the first index is the
//! most significant digit. For a symmetric tensor the canonical representative
//! of an index tuple is its nondecreasing rearrangement, which is also the
//! permutation with the smallest flat index.

pub(crate) fn len(n_sites: usize, order: usize) -> usize {
    n_sites.pow(order as u32)
}

pub(crate) fn decode(mut flat: usize, n_sites: usize, out: &mut [usize]) {
    for slot in out.iter_mut().rev() {
        *slot = flat % n_sites;
        flat /= n_sites;
    }
}

pub(crate) fn encode(idx: &[usize], n_sites: usize) -> usize {
    idx.iter().fold(0, |acc, &i| acc * n_sites + i)
}

/// Builds a symmetric tensor whose entries are `f(sorted index tuple)`.
///
/// `f` is only called on canonical tuples; all other entries are copies, so
/// the result is bitwise symmetric regardless of how `f` rounds.
pub(crate) fn fill_symmetric(
    n_sites: usize,
    order: usize,
    mut f: impl FnMut(&[usize]) -> f64,
) -> Vec<f64> {
    let total = len(n_sites, order);
    let mut out = vec![0.0; total];
    let mut idx = vec![0usize; order];
    for flat in 0..total {
        decode(flat, n_sites, &mut idx);
        if idx.windows(2).all(|w| w[0] <= w[1]) {
            out[flat] = f(&idx);
        } else {
            idx.sort_unstable();
            out[flat] = out[encode(&idx, n_sites)];
        }
    }
    out
}

/// `out[i] = Σ_w t[i·N + w]·weights[w]`, a contraction over the last index.
pub(crate) fn contract_last(t: &[f64], n_sites: usize, weights: &[f64]) -> Vec<f64> {
    debug_assert_eq!(t.len() % n_sites, 0);
    t.chunks_exact(n_sites)
        .map(|row| row.iter().zip(weights).map(|(a, b)| a * b).sum())
        .collect()
}

/// Full contraction of an order-n tensor with `weights` in every slot.
pub(crate) fn contract_all(t: &[f64], n_sites: usize, order: usize, weights: &[f64]) -> f64 {
    let mut cur: Vec<f64> = t.to_vec();
    for _ in 0..order {
        cur = contract_last(&cur, n_sites, weights);
    }
    debug_assert_eq!(cur.len(), 1);
    cur[0]
}

/// Largest absolute entry, 0 for an empty slice.
pub(crate) fn max_abs(t: &[f64]) -> f64 {
    t.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

pub(crate) fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}
