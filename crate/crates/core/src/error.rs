use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("empty subspace sequence")]
    EmptySequence,

    #[error("subspace sequence changes rank: item {index} has rank {found}, expected {expected}")]
    SequenceRank {
        index: usize,
        expected: usize,
        found: usize,
    },

    #[error("tail length {tail_len} exceeds sequence length {len}")]
    TailTooLong { tail_len: usize, len: usize },

    #[error("invalid functor: {0}")]
    Functor(String),

    #[error("invalid stratification: {0}")]
    Stratification(String),

    #[error("invalid bundle: {0}")]
    Bundle(String),

    #[error("invalid scenario: {0}")]
    Scenario(String),

    #[error("invalid section: {0}")]
    Section(String),

    #[error("invalid morphism: {0}")]
    Morphism(String),

    #[error("evaluator failure: {0}")]
    Evaluator(String),

    #[error("monoid action is not regular ({violations} inconsistent sample points)")]
    NotRegular { violations: usize },

    #[error("invalid group: {0}")]
    Group(String),

    #[error("subgroup not closed under multiplication: {0:?}")]
    SubgroupNotClosed(Vec<usize>),

    #[error("Reynolds average is not idempotent (residual {0:e})")]
    NotIdempotent(f64),

    #[error("sample set is not orbit-saturated: image of point {point} under element {element} is missing")]
    NotOrbitSaturated { point: usize, element: usize },

    #[error("bundle is not equivariant at point {point} under element {element} (gap {gap:e})")]
    NotEquivariant {
        point: usize,
        element: usize,
        gap: f64,
    },

    #[error("rank is not constant on stratum {stratum}: found ranks {ranks:?}")]
    RankNotConstant { stratum: String, ranks: Vec<usize> },

    #[error("fiber over orbit member {point} disagrees with its representative (gap {gap:e})")]
    OrbitFiberMismatch { point: usize, gap: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),
}
