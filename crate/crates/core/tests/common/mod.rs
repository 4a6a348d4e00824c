#![allow(dead_code)]

use nalgebra::DMatrix;
use proptest::prelude::*;
use stratbundle::grassmann::Subspace;

pub fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = DMatrix<f64>> {
    prop::collection::vec(-2.0f64..2.0, rows * cols)
        .prop_map(move |v| DMatrix::from_vec(rows, cols, v))
}

/// Span of `0..=n` random vectors in `ℝⁿ`.
pub fn subspace_in(n: usize) -> impl Strategy<Value = Subspace> {
    (0..=n).prop_flat_map(move |d| {
        prop::collection::vec(prop::collection::vec(-2.0f64..2.0, n), d)
            .prop_map(move |vs| Subspace::span(&vs, n).unwrap())
    })
}

pub fn ambient_and_subspace(max: usize) -> impl Strategy<Value = (usize, Subspace)> {
    (1..=max).prop_flat_map(|n| subspace_in(n).prop_map(move |w| (n, w)))
}

/// Q factor of a random square matrix.
pub fn orthogonal(n: usize) -> impl Strategy<Value = DMatrix<f64>> {
    matrix(n, n).prop_map(move |m| (m + DMatrix::identity(n, n) * 0.1).qr().q())
}

fn multi_indices(k: usize, n: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|p| {
                (0..k).map(move |i| {
                    let mut q = p.clone();
                    q.push(i);
                    q
                })
            })
            .collect();
    }
    out
}

/// `m^{⊗n}` entrywise: `∏ m[i_t, j_t]` over lexicographic multi-indices.
pub fn kron_power(m: &DMatrix<f64>, n: usize) -> DMatrix<f64> {
    let rows = multi_indices(m.nrows(), n);
    let cols = multi_indices(m.ncols(), n);
    DMatrix::from_fn(rows.len(), cols.len(), |r, c| {
        rows[r].iter().zip(&cols[c]).map(|(&i, &j)| m[(i, j)]).product()
    })
}

fn permutations(n: usize) -> Vec<(Vec<usize>, f64)> {
    if n == 0 {
        return vec![(vec![], 1.0)];
    }
    let mut out = Vec::new();
    for (p, s) in permutations(n - 1) {
        for pos in 0..n {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            // Inserting the largest element at `pos` adds n-1-pos inversions.
            let sign = if (n - 1 - pos).is_multiple_of(2) { s } else { -s };
            out.push((q, sign));
        }
    }
    out
}

fn position(tuple: &[usize], k: usize) -> usize {
    tuple.iter().fold(0, |acc, &i| acc * k + i)
}

/// Columns: normalized (anti)symmetrizations of `e_{i₁}⊗…⊗e_{iₙ}` for the
/// given index tuples, inside `(ℝᵏ)^{⊗n}`.
fn embedding(k: usize, n: usize, tuples: &[Vec<usize>], alternating: bool) -> DMatrix<f64> {
    let perms = permutations(n);
    let mut a = DMatrix::zeros(k.pow(n as u32), tuples.len());
    for (c, t) in tuples.iter().enumerate() {
        for (p, s) in &perms {
            let permuted: Vec<usize> = p.iter().map(|&i| t[i]).collect();
            a[(position(&permuted, k), c)] += if alternating { *s } else { 1.0 };
        }
        let norm = a.column(c).norm();
        if norm > 0.0 {
            a.column_mut(c).unscale_mut(norm);
        }
    }
    a
}

fn increasing(k: usize, n: usize, strict: bool) -> Vec<Vec<usize>> {
    multi_indices(k, n)
        .into_iter()
        .filter(|t| t.windows(2).all(|w| if strict { w[0] < w[1] } else { w[0] <= w[1] }))
        .collect()
}

/// `Λⁿ m` as the restriction of `m^{⊗n}` to alternating tensors.
pub fn wedge_oracle(m: &DMatrix<f64>, n: usize) -> DMatrix<f64> {
    let out = embedding(m.nrows(), n, &increasing(m.nrows(), n, true), true);
    let inp = embedding(m.ncols(), n, &increasing(m.ncols(), n, true), true);
    out.transpose() * kron_power(m, n) * inp
}

/// `Symⁿ m` as the restriction of `m^{⊗n}` to symmetric tensors.
pub fn sym_oracle(m: &DMatrix<f64>, n: usize) -> DMatrix<f64> {
    let out = embedding(m.nrows(), n, &increasing(m.nrows(), n, false), false);
    let inp = embedding(m.ncols(), n, &increasing(m.ncols(), n, false), false);
    out.transpose() * kron_power(m, n) * inp
}

pub fn op_norm(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().svd(false, false).singular_values.max()
}
