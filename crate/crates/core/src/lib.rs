//! Geometry of surfaces with anisotropic surface energy.
//!
//! The central object is a surface energy density `gamma` defined on unit
//! normal directions. Each energy density induces:
//!
//! * a Cahn-Hoffman field `xi(n)`, the gradient of the degree-one homogeneous
//!   extension of `gamma`, which replaces the unit normal in all first-order
//!   identities;
//! * a Wulff shape `W`, the unique energy minimizer at fixed volume, recovered
//!   here both as a polyhedral approximation (via convex-hull dualization) and
//!   as exact parametric patches for the built-in families;
//! * an anisotropic mean curvature `Lambda = -div xi` on any immersed surface,
//!   with `Lambda = -2` on the boundary of `W` itself.
//!
//! The crate provides four layers:
//!
//! * [`anisotropy`]: energy density families, their derivatives, pointwise
//!   Cahn-Hoffman data, convexity scans, and Wulff shape construction;
//! * [`surface`]: piecewise-smooth parametric surfaces, per-sample geometric
//!   fields (normal, support, `d nu`, `d xi`, curvatures), quadrature,
//!   equilibrium diagnostics, and the Gauss map degree;
//! * [`identities`]: numerical verification of the structural identities that
//!   link `gamma`, `xi`, and `Lambda` (rotation conjugation, divergence
//!   formulas, closed-surface integrals, variation formulas, expansion
//!   coefficients, stability integrand, isoperimetric ratio);
//! * [`delaunay`]: rotationally structured equilibrium surfaces (catenoid and
//!   unduloid analogues) for product-form Wulff shapes, built from a
//!   conserved-flux profile ODE and a tangency-based Cahn-Hoffman map.
//!
//! All floating point work is `f64`. Every public entry point is a pure
//! function of its inputs plus explicitly passed tolerances or seeds, so
//! values are reproducible bit-for-bit run to run; nothing reads global
//! state. Types are `Send + Sync` where the contained closures allow it, so
//! callers may evaluate samples concurrently.

pub mod anisotropy;
pub mod curve;
pub mod delaunay;
pub mod error;
pub mod geom;
pub mod hull;
pub mod identities;
pub mod io;
pub mod mesh;
pub mod quad;
pub mod report;
pub mod surface;
pub mod wulff;

pub use anisotropy::{Anisotropy, CahnHoffmanPointData, ConvexityScan};
pub use error::Error;
pub use mesh::TriMesh;
pub use surface::{
    Edge, GeometryFields, ParametricPatch, PiecewiseSurface, SampleFields,
};
pub use wulff::WulffShape;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
