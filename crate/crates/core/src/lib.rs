//! Linear extension operators for traces of the Sobolev space `L^{2,p}(R^2)` on
//! finite planar sets, for `p > 2`.

// `!(x > y)` checks are intentional: they reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod assembly;
pub mod besov1d;
pub mod besov_set;
pub mod config;
pub mod cz;
pub mod error;
pub mod field;
pub mod geometry;
pub mod jets;
pub mod local;
pub mod oracle;
pub mod smooth;

pub use assembly::{extend, Extension, ExtensionOperator};
pub use config::Config;
pub use cz::CzDecomposition;
pub use error::{Error, Result};
pub use field::Field2D;
pub use geometry::{
    AffineJet, DyadicAddr, Frame, JetComponent, LinearFunctional, Point2, Square, WhitneyField,
};
