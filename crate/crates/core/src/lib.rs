//! Numerical pipeline for curvature pinching of starshaped hypersurfaces in
//! the space forms of constant curvature.
//!
//! The crate computes extrinsic curvature data of radial graphs in a
//! conformally flat model of the ambient space, verifies the integral and
//! algebraic identities behind the stability estimate, evaluates the constant
//! chain of the estimate, and measures the Hausdorff distance of perturbed
//! geodesic spheres to their best-fitting geodesic sphere.

pub mod config;
pub mod constants;
pub mod error;
pub mod identities;
pub mod jet;
pub mod optimize;
pub mod output;
pub mod pinch;
pub mod quadrature;
pub mod spaceform;
pub mod surface;
pub mod symfun;

pub use error::{Error, ErrorKind, Result};
pub use spaceform::{AmbientPoint, SpaceFormModel};
