//! Exact point counts on affine Springer fibers for `GL(n)` over `F_q((pi))`
//! and brute-force checks of the unitary fundamental lemma at small scale.

pub mod cli;
pub mod config;
pub mod enumerate;
pub mod error;
pub mod field;
pub mod lattice;
pub mod report;
pub mod linalg;
pub mod series;
pub mod spectral;
pub mod springer;
pub mod strata;
pub mod unitary;
pub mod window;

pub use error::{Error, Result};
pub use field::{Fe, Field};
pub use series::{SeriesPolynomial, TruncatedSeries, Var};
