//! Exact computer algebra for Jacobi pairs in `C[y]((x^{-1/N}))` and Dixmier
//! pairs in the Weyl algebra, with coefficients restricted to the rationals.

pub mod cli;
pub mod error;
pub mod expansion;
pub mod newton;
pub mod poisson;
pub mod poly;
pub mod reduction;
pub mod normalform;
pub mod rat;
pub mod series;
pub mod verdict;
pub mod verifier;
pub mod weyl;

pub use error::{Error, Result};
pub use rat::{Exp, Rat};
pub use series::{Series, Space, Var};

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/intro.md")]
mod book_intro {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/series.md")]
mod book_series {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/newton.md")]
mod book_newton {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/bracket.md")]
mod book_bracket {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/expansion.md")]
mod book_expansion {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/reduction.md")]
mod book_reduction {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/normalform.md")]
mod book_normalform {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/weyl.md")]
mod book_weyl {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/verifier.md")]
mod book_verifier {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/cli.md")]
mod book_cli {}
