//! Staggered discontinuous Galerkin discretization of Darcy flow in
//! fractured porous media on polygonal meshes with hanging nodes, with a
//! residual a posteriori error estimator and adaptive refinement.

pub mod adaptivity;
pub mod assembly;
pub mod basis;
pub mod benchmarks;
pub mod error;
pub mod estimator;
pub mod fields;
pub mod io;
pub mod mesh;
pub mod parallel;
pub mod problem;
pub mod quadrature;
pub mod solver;
pub mod spaces;

pub use error::{Error, Result};

pub type Point = nalgebra::Point2<f64>;
pub type Vector = nalgebra::Vector2<f64>;
