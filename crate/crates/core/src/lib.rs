//! Numerical study of vanishing cycles, Abelian integrals and period determinants for
//! polynomials `H(x, y)` with a generic homogeneous highest part.

pub mod bounds;
pub mod config;
pub mod cycles;
pub mod detformula;
pub mod disc;
pub mod error;
pub mod genericity;
pub mod integrals;
pub mod io;
pub mod linalg;
pub mod poly;
pub mod projection;
pub mod resultant;
pub mod univariate;

pub use config::Config;
pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
pub use poly::{AffineChange, BivariatePolynomial, MonomialForm};
