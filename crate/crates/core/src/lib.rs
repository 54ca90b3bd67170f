//! Crossings and stress of random geometric graphs in `ℝ^d` projected onto a
//! plane.
//!
//! The crate samples Poisson random geometric graphs in a unit-volume window,
//! projects them onto a two-dimensional subspace, enumerates the crossings of
//! the projected edges and computes the projection stress. The [`theory`]
//! module provides the limiting constants and moment formulas, and [`stats`]
//! runs seeded replications and the statistical checks against them.

pub mod crossings;
pub mod error;
pub mod geometry;
pub mod sampling;
pub mod special;
pub mod stats;
pub mod stress;
pub mod theory;

pub use crossings::{count_in_region, enumerate_crossings, enumerate_crossings_bruteforce, CrossingEvent};
pub use error::{Error, Result};
pub use geometry::{
    fiber_integral, fiber_sq_integral, segments_intersect, GridQuadrature, Point2, PointSet, ProjectionPlane, Region2,
    Window, WindowKind,
};
pub use sampling::{build_rgg, sample_poisson_process, Edge, Graph, Regime, RegimeSpec, RngStream};
pub use stress::{pair_stress, stress_total, StressWeight, WeightTable};
pub use theory::LimitConstants;
