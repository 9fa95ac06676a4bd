//! Extremal-derivative ("Ahlfors") polynomials on finite unions of real
//! intervals and circular arcs.
//!
//! The crate is organised bottom-up:
//!
//! * [`geometry`]: band/gap systems, arc systems, Möbius and coordinate maps.
//! * [`quadrature`]: band, regular and complex path integrals.
//! * [`abelian`]: normalized Abelian differentials and harmonic measures.
//! * [`potential`]: comb maps, Green and Martin functions, capacities.
//! * [`kernels`]: closed-form kernels, Ahlfors functions and predictors.
//! * [`inversion`]: real and generalized Abel–Jacobi inversion.
//! * [`extremal_poly`]: Pell pairs, candidate polynomials, Kolmogorov test.
//! * [`oracle`]: LP ground truth for the extremal derivative.

pub mod abelian;
pub mod error;
pub mod extremal_poly;
pub mod geometry;
pub mod inversion;
pub mod kernels;
pub mod oracle;
pub mod poly;
pub mod potential;
pub mod quadrature;

pub use error::{Error, Result};
pub use num_complex::Complex64;
