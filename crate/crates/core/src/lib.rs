//! Received-power simulation for links assisted by a metal plate or a
//! reconfigurable intelligent surface (RIS).
//!
//! Every element of a planar `n_v x n_h` surface scatters the transmitted
//! wave with an amplitude given by its bistatic radar cross section. The
//! received signal is the coherent sum of the per-element contributions,
//! each weighted by the element's reconfigurable response.
//!
//! Modules:
//! - [`geometry`]: surface frame, rotations, per-element angles
//! - [`scattering`]: closed-form element cross sections
//! - [`channel`]: path-loss coefficients and element responses
//! - [`link`]: coherent aggregation and phase optimizers
//! - [`oracle`]: physical-optics quadrature check of the metal-cell model
//! - [`experiments`]: distance and angle sweeps comparing RIS and metal plate
//!
//! The physics is generic over [`Real`] (`f32` or `f64`); the aliases below
//! fix the common double-precision instantiations.

pub mod channel;
pub mod error;
pub mod experiments;
pub mod geometry;
pub mod link;
pub mod oracle;
pub mod scalar;
pub mod scattering;
pub mod summation;

pub use error::{End, Error, Result};
pub use scalar::Real;

pub type Vec3d = geometry::Vec3<f64>;
pub type SceneF64 = geometry::Scene<f64>;
pub type SurfaceSpecF64 = geometry::SurfaceSpec<f64>;
pub type AngleQuadF64 = geometry::AngleQuad<f64>;
pub type CellDimsF64 = scattering::CellDims<f64>;
pub type PropagationParamsF64 = channel::PropagationParams<f64>;
pub type LinkModelF64 = link::LinkModel<f64>;
pub type RcsModelF64 = scattering::RcsModelKind<f64>;

pub type SceneF32 = geometry::Scene<f32>;
pub type AngleQuadF32 = geometry::AngleQuad<f32>;
pub type CellDimsF32 = scattering::CellDims<f32>;
pub type LinkModelF32 = link::LinkModel<f32>;
