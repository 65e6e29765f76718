//! Lie-group Langevin dynamics: Arnold forms, hypoellipticity checks, stochastic
//! simulation on groups and algebras, and statistical diagnostics.

pub mod algebra;
pub mod algebra_file;
pub mod arnold;
pub mod chart;
pub mod curve;
pub mod error;
pub mod group;
pub mod hypo;
pub mod linalg;
pub mod presets;
pub mod scalar;
pub mod simulate;
pub mod stats;

pub use algebra::{AlgebraVector, LieAlgebraSpec};
pub use arnold::{arnold_form, euler_arnold_rhs, ArnoldForm};
pub use error::{Error, Result};
pub use group::{group_exp, GroupElement, Representation};
pub use presets::Preset;
pub use scalar::{Rational, Scalar};
