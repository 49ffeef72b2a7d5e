//! Polynomials, the graded monomial basis and coefficient matrices.

mod basis;
mod coords;
mod monomial;
mod parse;
mod polynomial;

pub use basis::{grevlex_position, monomial_count, MonomialBasis};
pub use coords::{apply_coordinate_change, random_orthogonal};
pub use monomial::Monomial;
pub use parse::parse_system;
pub use polynomial::{coefficient_matrix, format_polynomial, CoefficientMatrix, PolySystem, Polynomial};
