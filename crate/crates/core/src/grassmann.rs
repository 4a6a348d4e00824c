//! Linear subspaces of ℝᴺ represented by orthonormal bases and their
//! orthogonal projections.
//!
//! A subspace `W` is identified with its projection matrix `P_W`; this is the
//! embedding of the Grassmannian into `End(ℝᴺ)`. Distances between subspaces
//! are measured by the gap metric `‖P_A − P_B‖` in the operator norm, and
//! containment `W ⊂ V` is tested as `P_V P_W = P_W`.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::config::{DEFAULT_TOL_ORTHO, DEFAULT_TOL_RANK};
use crate::error::{Error, Result};
use crate::linalg;

/// A linear subspace of ℝᴺ.
///
/// The basis is stored column-wise and is orthonormal; the projection is
/// derived from it once at construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SubspaceJson", into = "SubspaceJson")]
pub struct Subspace {
    ambient: usize,
    basis: DMatrix<f64>,
    projection: DMatrix<f64>,
}

/// Wire form: `{ "ambient": N, "basis": [[...], ...] }`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SubspaceJson {
    pub ambient: usize,
    pub basis: Vec<Vec<f64>>,
}

impl TryFrom<SubspaceJson> for Subspace {
    type Error = Error;

    fn try_from(value: SubspaceJson) -> Result<Self> {
        if value.ambient == 0 {
            return Err(Error::Shape("ambient dimension must be positive".into()));
        }
        Subspace::span(&value.basis, value.ambient)
    }
}

impl From<Subspace> for SubspaceJson {
    fn from(s: Subspace) -> Self {
        SubspaceJson {
            ambient: s.ambient,
            basis: s.basis_vectors(),
        }
    }
}

impl Subspace {
    /// The zero subspace of ℝᴺ: empty basis, zero projection.
    pub fn zero(ambient: usize) -> Self {
        Self {
            ambient,
            basis: DMatrix::zeros(ambient, 0),
            projection: DMatrix::zeros(ambient, ambient),
        }
    }

    /// All of ℝᴺ.
    pub fn full(ambient: usize) -> Self {
        Self::from_orthonormal(DMatrix::identity(ambient, ambient))
    }

    /// Span of a list of vectors of length `ambient`, with the default rank
    /// tolerance.
    pub fn span(vectors: &[Vec<f64>], ambient: usize) -> Result<Self> {
        Self::span_with_tol(vectors, ambient, DEFAULT_TOL_RANK)
    }

    pub fn span_with_tol(vectors: &[Vec<f64>], ambient: usize, tol_rank: f64) -> Result<Self> {
        let m = linalg::matrix_from_columns(vectors, ambient)?;
        Ok(Self::column_space(&m, tol_rank))
    }

    /// Column space of `m`. A singular value σ counts iff σ > `tol_rank`·σ_max.
    pub fn column_space(m: &DMatrix<f64>, tol_rank: f64) -> Self {
        Self::from_orthonormal(linalg::range_basis(m, tol_rank))
    }

    /// Wraps columns that are already orthonormal. No re-orthonormalization.
    pub(crate) fn from_orthonormal(basis: DMatrix<f64>) -> Self {
        let projection = &basis * basis.transpose();
        Self {
            ambient: basis.nrows(),
            basis,
            projection,
        }
    }

    /// Recovers a rank-`rank` subspace from an (approximate) projection
    /// matrix by keeping its top eigenvectors.
    pub fn from_projection(p: &DMatrix<f64>, rank: usize) -> Result<Self> {
        if p.nrows() != p.ncols() {
            return Err(Error::Shape(format!(
                "projection must be square, got {}x{}",
                p.nrows(),
                p.ncols()
            )));
        }
        let n = p.nrows();
        if rank > n {
            return Err(Error::Shape(format!("rank {rank} exceeds ambient {n}")));
        }
        if rank == 0 {
            return Ok(Self::zero(n));
        }
        let sym = (p + p.transpose()) * 0.5;
        let eig = SymmetricEigen::new(sym);
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let basis = DMatrix::from_fn(n, rank, |r, c| eig.eigenvectors[(r, order[c])]);
        Ok(Self::from_orthonormal(basis))
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn is_zero(&self) -> bool {
        self.dim() == 0
    }

    /// Orthonormal basis as the columns of an `ambient × dim` matrix.
    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn basis_vectors(&self) -> Vec<Vec<f64>> {
        linalg::columns_of(&self.basis)
    }

    pub fn projection(&self) -> &DMatrix<f64> {
        &self.projection
    }

    /// Orthogonal projection of `v` onto the subspace.
    pub fn project(&self, v: &[f64]) -> Result<Vec<f64>> {
        self.check_vector(v)?;
        Ok((&self.projection * linalg::to_dvector(v)).iter().copied().collect())
    }

    /// Euclidean distance from `v` to the subspace.
    pub fn distance_to(&self, v: &[f64]) -> Result<f64> {
        let p = self.project(v)?;
        Ok(linalg::distance(v, &p))
    }

    fn check_vector(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.ambient {
            return Err(Error::DimensionMismatch {
                expected: self.ambient,
                found: v.len(),
            });
        }
        Ok(())
    }

    /// Largest violation of the representation invariants: orthonormal basis,
    /// symmetric idempotent projection with trace equal to the rank, and
    /// `P b = b` for every basis vector.
    pub fn invariant_residual(&self) -> f64 {
        let r = self.dim();
        let gram = self.basis.transpose() * &self.basis;
        let ortho = (gram - DMatrix::identity(r, r)).amax();
        let p = &self.projection;
        let sym = (p - p.transpose()).amax();
        let idem = (p * p - p).amax();
        let trace = (p.trace() - r as f64).abs();
        let fixes = (p * &self.basis - &self.basis).amax();
        [ortho, sym, idem, trace, fixes]
            .into_iter()
            .fold(0.0, f64::max)
    }

    pub fn satisfies_invariants(&self) -> bool {
        self.invariant_residual() <= DEFAULT_TOL_ORTHO
    }

    /// Intersection with another subspace: vectors fixed by both projections.
    pub fn intersection(&self, other: &Subspace, tol: f64) -> Result<Subspace> {
        same_ambient(self, other)?;
        let n = self.ambient;
        let id = DMatrix::<f64>::identity(n, n);
        let mut stacked = DMatrix::zeros(2 * n, n);
        stacked
            .view_mut((0, 0), (n, n))
            .copy_from(&(&id - &self.projection));
        stacked
            .view_mut((n, 0), (n, n))
            .copy_from(&(&id - &other.projection));
        Ok(Subspace::from_orthonormal(linalg::null_basis(&stacked, tol)))
    }
}

fn same_ambient(a: &Subspace, b: &Subspace) -> Result<()> {
    if a.ambient != b.ambient {
        return Err(Error::DimensionMismatch {
            expected: a.ambient,
            found: b.ambient,
        });
    }
    Ok(())
}

/// Gap metric `‖P_a − P_b‖` in the operator norm.
pub fn gap_distance(a: &Subspace, b: &Subspace) -> Result<f64> {
    same_ambient(a, b)?;
    Ok(linalg::op_norm(&(&a.projection - &b.projection)))
}

/// `‖P_v P_w − P_w‖`: zero exactly when `w ⊂ v`.
pub fn containment_residual(w: &Subspace, v: &Subspace) -> Result<f64> {
    same_ambient(w, v)?;
    Ok(linalg::op_norm(&(&v.projection * &w.projection - &w.projection)))
}

pub fn is_contained(w: &Subspace, v: &Subspace, tol: f64) -> Result<bool> {
    Ok(containment_residual(w, v)? <= tol)
}

/// Image of `w` under the linear map `m`, with the rank re-decided.
pub fn apply_linear_map(m: &DMatrix<f64>, w: &Subspace) -> Result<Subspace> {
    apply_linear_map_with_tol(m, w, DEFAULT_TOL_RANK)
}

pub fn apply_linear_map_with_tol(m: &DMatrix<f64>, w: &Subspace, tol_rank: f64) -> Result<Subspace> {
    if m.ncols() != w.ambient {
        return Err(Error::Shape(format!(
            "map has {} columns but subspace lives in dimension {}",
            m.ncols(),
            w.ambient
        )));
    }
    Ok(Subspace::column_space(&(m * &w.basis), tol_rank))
}

/// A nonempty sequence of subspaces sharing ambient dimension and rank.
#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceSequence {
    items: Vec<Subspace>,
}

impl SubspaceSequence {
    pub fn new(items: Vec<Subspace>) -> Result<Self> {
        let first = items.first().ok_or(Error::EmptySequence)?;
        let (ambient, rank) = (first.ambient, first.dim());
        for (index, s) in items.iter().enumerate() {
            if s.ambient != ambient {
                return Err(Error::DimensionMismatch {
                    expected: ambient,
                    found: s.ambient,
                });
            }
            if s.dim() != rank {
                return Err(Error::SequenceRank {
                    index,
                    expected: rank,
                    found: s.dim(),
                });
            }
        }
        Ok(Self { items })
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn rank(&self) -> usize {
        self.items[0].dim()
    }

    pub fn items(&self) -> &[Subspace] {
        &self.items
    }
}

/// Outcome of a Cauchy-tail limit test.
#[derive(Debug, Clone, PartialEq)]
pub enum Limit {
    Converged(Subspace),
    /// The tail did not settle; `max_gap` is the largest pairwise gap seen.
    NoLimit { max_gap: f64 },
}

impl Limit {
    pub fn subspace(&self) -> Option<&Subspace> {
        match self {
            Limit::Converged(s) => Some(s),
            Limit::NoLimit { .. } => None,
        }
    }
}

/// Finite-sample surrogate for the limit of a sequence of subspaces.
///
/// The last `tail_len` items must be pairwise within `tol` in the gap metric;
/// the limit is then read off the final projection with the rank forced to
/// the sequence rank.
pub fn sequence_limit(seq: &SubspaceSequence, tol: f64, tail_len: usize) -> Result<Limit> {
    if tail_len > seq.len() || tail_len == 0 {
        return Err(Error::TailTooLong {
            tail_len,
            len: seq.len(),
        });
    }
    let tail = &seq.items[seq.len() - tail_len..];
    let mut max_gap = 0.0f64;
    for (i, a) in tail.iter().enumerate() {
        for b in &tail[i + 1..] {
            max_gap = max_gap.max(gap_distance(a, b)?);
        }
    }
    if max_gap > tol {
        return Ok(Limit::NoLimit { max_gap });
    }
    let last = tail.last().expect("tail is nonempty");
    Ok(Limit::Converged(Subspace::from_projection(
        last.projection(),
        seq.rank(),
    )?))
}
