//! Minimal graphs with infinite boundary values over polygons, their dual
//! maximal graphs in Lorentz–Minkowski space, conjugate surfaces and
//! reflections, built from univalent harmonic maps of the unit disk.

pub mod catalog;
pub mod domain;
pub mod error;
pub mod export;
pub mod feasibility;
pub mod harmonic;
pub mod height;
pub mod mc_tables;
pub mod mesh;
pub mod numerics;
pub mod reflection;
pub mod sp;
pub mod surfaces;

pub use error::{Error, Result};
pub use numerics::ComplexVal;
