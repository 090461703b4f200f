//! Discontinuous Galerkin discretization of the magnetic (H(curl)-type)
//! advection-diffusion problem
//!
//! ```text
//! curl(eps curl u) - beta x curl u + grad(beta . u) + gamma u = f
//! ```
//!
//! on simplicial meshes of the unit square and cube. The scheme is built
//! from a weighted-residual formulation with two independent facet weights:
//! `alpha` (upwinding of the convective terms) and `alpha_d` (averaging of
//! the diffusive flux). Besides assembly and solution, the crate provides
//! the analysis machinery used to study the method: the DG energy norm, a
//! tailored projection that preserves normal facet moments, weight
//! functions for the inf-sup diagnostic, and identity batteries.
//!
//! Two-dimensional problems are handled as the translation-invariant
//! reduction of the 3D problem: vectors carry a zero third component and
//! rotational quantities (curl, `n x v`, `beta x v`) live on the z axis.
//!
//! The runnable programs under `examples/` show each capability end to end.

pub mod analysis;
pub mod config;
pub mod error;
pub mod expr;
pub mod mesh;
pub mod output;
pub mod pipeline;
pub mod problems;
pub mod projection;
pub mod quadrature;
pub mod scheme;
pub mod solve;
pub mod space;
pub mod sparse;
pub mod verify;

pub use error::{Error, Result};

/// Points and vectors are stored with three components; 2D data leaves the
/// last one at zero.
pub type Vec3 = nalgebra::Vector3<f64>;
pub type Mat3 = nalgebra::Matrix3<f64>;
