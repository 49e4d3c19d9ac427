//! Energies, limit functionals and recovery sequences for thin-walled
//! elastic beams whose cross-section is a planar arclength curve.
//!
//! The crate is `no_std` with `alloc`. Everything here is deterministic and
//! sequential; the `thinwall` crate adds parallel drivers, file formats and
//! the command line tool.

#![cfg_attr(not(test), no_std)]
// index loops mirror the formulas in the quadrature and assembly kernels
#![allow(clippy::needless_range_loop)]

extern crate alloc;

pub mod error;
pub mod fields;
pub mod geometry;
pub mod jet;
pub mod korn;
pub mod limit;
pub mod material;
pub mod math;
pub mod poly;
pub mod quadrature;
pub mod recovery;

pub use error::{Error, Result};


pub use fields::{DeformationField, LimitValue, Point, Scale, ScalingRegime, StrainMoments, Term};
pub use geometry::{ArcLengthCurve, Curvature, Frame, Scalars};
pub use limit::{ClassTag, LimitTriple, SepField, VecSepField};
pub use jet::{Jet, ScalarFn, VectorFn};


pub use material::MaterialModel;
pub use poly::Polynomial;
pub use quadrature::QuadratureGrid;
