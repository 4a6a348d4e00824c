pub use nalgebra;

pub mod bundle;
pub mod config;
pub mod equivariant;
pub mod error;
pub mod fixtures;
pub mod foliation;
pub mod functors;
pub mod grassmann;
mod linalg;
pub mod monoid;
pub mod poly;
pub mod report;
pub mod strata;

/// The guide's chapters, compiled so their snippets run as doc-tests.
#[cfg(doctest)]
pub mod guide {
    #[doc = include_str!("../../../README.md")]
    pub mod readme {}
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub mod introduction {}
    #[doc = include_str!("../../../book/src/subspaces.md")]
    pub mod subspaces {}
    #[doc = include_str!("../../../book/src/functors.md")]
    pub mod functors {}
    #[doc = include_str!("../../../book/src/stratifications.md")]
    pub mod stratifications {}
    #[doc = include_str!("../../../book/src/bundles.md")]
    pub mod bundles {}
    #[doc = include_str!("../../../book/src/monoid.md")]
    pub mod monoid {}
    #[doc = include_str!("../../../book/src/symmetry.md")]
    pub mod symmetry {}
    #[doc = include_str!("../../../book/src/foliations.md")]
    pub mod foliations {}
    #[doc = include_str!("../../../book/src/cli.md")]
    pub mod cli {}
}
