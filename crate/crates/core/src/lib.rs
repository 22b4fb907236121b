//! Exact l-adic computations in completed group rings of finitely generated
//! free pro-l groups.
//!
//! The group ring is modelled by truncated noncommutative power series
//! ([`ncseries`]). On top of that sit the I-adic and weight filtrations with
//! the r-Gauss norm ([`filtration`]), explicit actions by generator
//! substitution ([`galois`]), eigenvector lifting with denominator caps
//! ([`eigenlift`]) and matrix representations with unipotence checks
//! ([`reps`]).

pub mod eigenlift;
pub mod error;
pub mod filtration;
pub mod galois;
pub mod linalg;
pub mod ncseries;
pub mod padics;
pub mod reps;

pub use error::{Error, Result};
pub use linalg::Matrix;
pub use ncseries::{Alphabet, GroupWord, Monomial, NcSeries};
pub use padics::{PadicScalar, Valuation, DEFAULT_PRECISION};

/// Exact rationals used for norm exponents and bounds.
pub type Rational = num_rational::Ratio<i64>;
