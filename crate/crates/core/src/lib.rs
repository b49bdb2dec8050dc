//! Numerical laboratory for Hardy-Sobolev interpolation inequalities.
//!
//! Radial functions are handled through their log-variable profile
//! `u(x) = |x|^{1-d/p} psi(log |x|)`, in which every weighted radial integral
//! becomes an unweighted integral over the real line.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod exponents;
pub mod families;
pub mod functionals;
pub mod grid;
pub mod invariants;
pub mod profile;
pub mod quadrature;
pub mod scaling;
pub mod varsolve;

pub use error::{Error, Result};
pub use exponents::{
    geometry, make_exponents, Exponents, GeometryConstants, LorentzIndex, ThetaWindow,
};
pub use families::{Piece, TrialFamily, TrialFunction};
pub use functionals::FunctionalReport;
pub use grid::LogGrid;
pub use profile::{ClosedForm, RadialProfile, Sampled, Shape};
