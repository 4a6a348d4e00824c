//! Covariant orthogonalizable functors on finite-dimensional vector spaces,
//! realized on matrices.
//!
//! A functor is a tree of primitives. Each primitive acts on `ℝᵏ` through a
//! fixed orthonormal basis of `F(ℝᵏ)`:
//!
//! * tensor power `⊗ⁿ`: lexicographic multi-indices, so `F(m) = m ⊗ … ⊗ m`;
//! * wedge power `Λⁿ`: strictly increasing index tuples `e_{i₁}∧…∧e_{iₙ}`,
//!   orthonormal for the determinant inner product; entries of `Λⁿm` are
//!   `n×n` minors;
//! * symmetric power `Symⁿ`: weakly increasing index tuples, each the
//!   normalized symmetrization of its tensor; entries of `Symⁿm` are
//!   permanents divided by `√(∏μ_α! ∏μ_β!)` for multiplicities `μ`;
//! * direct sums act block-diagonally and constant functors map every arrow
//!   to the identity.
//!
//! Power functors are polynomial, not linear, in the arrow. Everything built
//! here only relies on functoriality, polynomial entries and `F(P_W) = P_{F(W)}`.

use std::fmt;
use std::str::FromStr;

use itertools::Itertools;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::config::DEFAULT_TOL_RANK;
use crate::error::{Error, Result};
use crate::grassmann::Subspace;
use crate::linalg;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "FunctorJson", into = "FunctorJson")]
pub enum LinearFunctor {
    Identity,
    /// `V ↦ ℝᵈ`, every arrow ↦ identity.
    Constant(usize),
    DirectSum(Box<LinearFunctor>, Box<LinearFunctor>),
    TensorPower(usize),
    WedgePower(usize),
    SymPower(usize),
    /// `Compose(outer, inner)` is `outer ∘ inner`.
    Compose(Box<LinearFunctor>, Box<LinearFunctor>),
}

impl LinearFunctor {
    pub fn tensor(n: usize) -> Result<Self> {
        check_power(n).map(|_| Self::TensorPower(n))
    }

    pub fn wedge(n: usize) -> Result<Self> {
        check_power(n).map(|_| Self::WedgePower(n))
    }

    pub fn sym(n: usize) -> Result<Self> {
        check_power(n).map(|_| Self::SymPower(n))
    }

    pub fn sum(left: LinearFunctor, right: LinearFunctor) -> Self {
        Self::DirectSum(Box::new(left), Box::new(right))
    }

    pub fn compose(outer: LinearFunctor, inner: LinearFunctor) -> Self {
        Self::Compose(Box::new(outer), Box::new(inner))
    }

    /// `F(k) = dim F(ℝᵏ)`.
    pub fn dim_map(&self, k: usize) -> usize {
        match self {
            Self::Identity => k,
            Self::Constant(d) => *d,
            Self::DirectSum(l, r) => l.dim_map(k) + r.dim_map(k),
            Self::TensorPower(n) => k.pow(*n as u32),
            Self::WedgePower(n) => binomial(k, *n),
            Self::SymPower(n) => {
                if k == 0 {
                    0
                } else {
                    binomial(k + n - 1, *n)
                }
            }
            Self::Compose(outer, inner) => outer.dim_map(inner.dim_map(k)),
        }
    }

    /// Matrix of `F(m)` for `m: ℝʲ → ℝᵏ` (a `k×j` matrix), as an
    /// `F(k)×F(j)` matrix in the canonical bases.
    pub fn apply_to_map(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        match self {
            Self::Identity => m.clone(),
            Self::Constant(d) => DMatrix::identity(*d, *d),
            Self::DirectSum(l, r) => linalg::block_diag(&l.apply_to_map(m), &r.apply_to_map(m)),
            Self::TensorPower(n) => tensor_power(m, *n),
            Self::WedgePower(n) => wedge_power(m, *n),
            Self::SymPower(n) => sym_power(m, *n),
            Self::Compose(outer, inner) => outer.apply_to_map(&inner.apply_to_map(m)),
        }
    }

    /// `F(W) ⊂ F(ℝᴺ)`, the image of `F(ι)` for the inclusion `ι: W → ℝᴺ`.
    ///
    /// With `B` the orthonormal basis of `W` this is the column space of
    /// `F(B)`, which coincides with the image of `F(P_W) = F(B)F(Bᵀ)`.
    pub fn apply_to_subspace(&self, w: &Subspace) -> Subspace {
        self.apply_to_subspace_with_tol(w, DEFAULT_TOL_RANK)
    }

    pub fn apply_to_subspace_with_tol(&self, w: &Subspace, tol_rank: f64) -> Subspace {
        let image = self.apply_to_map(w.basis());
        if image.ncols() == 0 {
            return Subspace::zero(image.nrows());
        }
        Subspace::column_space(&image, tol_rank)
    }

    /// Residual `‖F(P_W) − P_{F(W)}‖` and whether it is within `tol`.
    pub fn check_orthogonality(&self, w: &Subspace, tol: f64) -> OrthogonalityCheck {
        let fp = self.apply_to_map(w.projection());
        let fw = self.apply_to_subspace(w);
        let residual = linalg::op_norm(&(fp - fw.projection()));
        OrthogonalityCheck {
            holds: residual <= tol,
            residual,
            image_dim: fw.dim(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrthogonalityCheck {
    pub holds: bool,
    pub residual: f64,
    pub image_dim: usize,
}

fn check_power(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::Functor("power functors need n >= 1".into()));
    }
    Ok(())
}

pub(crate) fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

fn tensor_power(m: &DMatrix<f64>, n: usize) -> DMatrix<f64> {
    let mut out = m.clone();
    for _ in 1..n {
        out = out.kronecker(m);
    }
    out
}

fn submatrix(m: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])])
}

fn wedge_power(m: &DMatrix<f64>, n: usize) -> DMatrix<f64> {
    let rows: Vec<Vec<usize>> = (0..m.nrows()).combinations(n).collect();
    let cols: Vec<Vec<usize>> = (0..m.ncols()).combinations(n).collect();
    DMatrix::from_fn(rows.len(), cols.len(), |i, j| {
        submatrix(m, &rows[i], &cols[j]).determinant()
    })
}

fn sym_power(m: &DMatrix<f64>, n: usize) -> DMatrix<f64> {
    let rows: Vec<Vec<usize>> = (0..m.nrows()).combinations_with_replacement(n).collect();
    let cols: Vec<Vec<usize>> = (0..m.ncols()).combinations_with_replacement(n).collect();
    let row_norm: Vec<f64> = rows.iter().map(|t| multiplicity_factorials(t)).collect();
    let col_norm: Vec<f64> = cols.iter().map(|t| multiplicity_factorials(t)).collect();
    DMatrix::from_fn(rows.len(), cols.len(), |i, j| {
        permanent(&submatrix(m, &rows[i], &cols[j])) / (row_norm[i] * col_norm[j]).sqrt()
    })
}

/// `∏ μᵢ!` over the multiplicities of a sorted index tuple.
fn multiplicity_factorials(sorted: &[usize]) -> f64 {
    sorted
        .iter()
        .chunk_by(|&&i| i)
        .into_iter()
        .map(|(_, run)| (1..=run.count()).product::<usize>() as f64)
        .product()
}

/// Permanent via Ryser's inclusion–exclusion formula.
fn permanent(a: &DMatrix<f64>) -> f64 {
    let n = a.nrows();
    if n == 0 {
        return 1.0;
    }
    let mut total = 0.0;
    for mask in 1u64..(1u64 << n) {
        let mut prod = 1.0;
        for i in 0..n {
            let row_sum: f64 = (0..n).filter(|j| mask >> j & 1 == 1).map(|j| a[(i, j)]).sum();
            prod *= row_sum;
        }
        let sign = if (n as u32 - mask.count_ones()).is_multiple_of(2) { 1.0 } else { -1.0 };
        total += sign * prod;
    }
    total
}

/// Wire form: `{ "op": "wedge", "n": 2 }`, `{ "op": "sum", "args": [a, b] }`, ...
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FunctorJson {
    pub op: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub args: Vec<FunctorJson>,
}

impl TryFrom<FunctorJson> for LinearFunctor {
    type Error = Error;

    fn try_from(j: FunctorJson) -> Result<Self> {
        let need_n = |op: &str| {
            j.n
                .ok_or_else(|| Error::Functor(format!("\"{op}\" requires field \"n\"")))
        };
        let two_args = |op: &str, args: Vec<FunctorJson>| -> Result<(Self, Self)> {
            let mut it = args.into_iter();
            match (it.next(), it.next(), it.next()) {
                (Some(a), Some(b), None) => Ok((a.try_into()?, b.try_into()?)),
                _ => Err(Error::Functor(format!("\"{op}\" takes exactly two args"))),
            }
        };
        match j.op.as_str() {
            "id" => Ok(Self::Identity),
            "const" => Ok(Self::Constant(need_n("const")?)),
            "tensor" => Self::tensor(need_n("tensor")?),
            "wedge" => Self::wedge(need_n("wedge")?),
            "sym" => Self::sym(need_n("sym")?),
            "sum" => {
                let (a, b) = two_args("sum", j.args)?;
                Ok(Self::sum(a, b))
            }
            "compose" => {
                let (a, b) = two_args("compose", j.args)?;
                Ok(Self::compose(a, b))
            }
            other => Err(Error::Functor(format!("unknown op \"{other}\""))),
        }
    }
}

impl From<LinearFunctor> for FunctorJson {
    fn from(f: LinearFunctor) -> Self {
        let leaf = |op: &str, n: Option<usize>| FunctorJson {
            op: op.into(),
            n,
            args: vec![],
        };
        match f {
            LinearFunctor::Identity => leaf("id", None),
            LinearFunctor::Constant(d) => leaf("const", Some(d)),
            LinearFunctor::TensorPower(n) => leaf("tensor", Some(n)),
            LinearFunctor::WedgePower(n) => leaf("wedge", Some(n)),
            LinearFunctor::SymPower(n) => leaf("sym", Some(n)),
            LinearFunctor::DirectSum(a, b) => FunctorJson {
                op: "sum".into(),
                n: None,
                args: vec![(*a).into(), (*b).into()],
            },
            LinearFunctor::Compose(a, b) => FunctorJson {
                op: "compose".into(),
                n: None,
                args: vec![(*a).into(), (*b).into()],
            },
        }
    }
}

impl fmt::Display for LinearFunctor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Identity => write!(f, "id"),
            Self::Constant(d) => write!(f, "const:{d}"),
            Self::TensorPower(n) => write!(f, "tensor:{n}"),
            Self::WedgePower(n) => write!(f, "wedge:{n}"),
            Self::SymPower(n) => write!(f, "sym:{n}"),
            Self::DirectSum(a, b) => write!(f, "sum({a},{b})"),
            Self::Compose(a, b) => write!(f, "compose({a},{b})"),
        }
    }
}

/// Parses the CLI shorthand, e.g. `compose(wedge:2,sum(id,const:1))`.
impl FromStr for LinearFunctor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let mut parser = Parser {
            src: compact.as_bytes(),
            pos: 0,
        };
        let f = parser.term()?;
        if parser.pos != parser.src.len() {
            return Err(parser.error("trailing input"));
        }
        Ok(f)
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, what: &str) -> Error {
        Error::Functor(format!("{what} at offset {}", self.pos))
    }

    fn ident(&mut self) -> &str {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_alphabetic() {
            self.pos += 1;
        }
        std::str::from_utf8(&self.src[start..self.pos]).expect("ascii")
    }

    fn eat(&mut self, b: u8) -> Result<()> {
        if self.src.get(self.pos) == Some(&b) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(&format!("expected '{}'", b as char)))
        }
    }

    fn number(&mut self) -> Result<usize> {
        self.eat(b':')?;
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        std::str::from_utf8(&self.src[start..self.pos])
            .expect("ascii")
            .parse()
            .map_err(|_| self.error("expected an integer"))
    }

    fn pair(&mut self) -> Result<(LinearFunctor, LinearFunctor)> {
        self.eat(b'(')?;
        let a = self.term()?;
        self.eat(b',')?;
        let b = self.term()?;
        self.eat(b')')?;
        Ok((a, b))
    }

    fn term(&mut self) -> Result<LinearFunctor> {
        let start = self.pos;
        let name = self.ident().to_owned();
        match name.as_str() {
            "id" => Ok(LinearFunctor::Identity),
            "const" => Ok(LinearFunctor::Constant(self.number()?)),
            "tensor" => LinearFunctor::tensor(self.number()?),
            "wedge" => LinearFunctor::wedge(self.number()?),
            "sym" => LinearFunctor::sym(self.number()?),
            "sum" => self.pair().map(|(a, b)| LinearFunctor::sum(a, b)),
            "compose" => self.pair().map(|(a, b)| LinearFunctor::compose(a, b)),
            _ => {
                self.pos = start;
                Err(self.error("unknown functor"))
            }
        }
    }
}
