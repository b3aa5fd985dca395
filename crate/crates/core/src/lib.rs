//! Conformal geodesics on gravitational instantons.
//!
//! The crate integrates the third-order conformal geodesic flow
//! `∇_u a = −(|a|² + L(u,u)) u + L♯(u)` on a handful of four-dimensional model
//! geometries (flat space, Taub–NUT, Eguchi–Hanson, general two-centre
//! Gibbons–Hawking, CP² with the Fubini–Study metric) together with the
//! hyperbolic half-plane, and checks trajectories against first integrals,
//! Hamilton–Jacobi separation and closed-form solutions.

pub mod cp2;
pub mod eguchi_hanson;
pub mod error;
pub mod fd;
pub mod flows;
pub mod geometry;
pub mod invariants;
pub mod killing;
pub mod ode;
pub mod quad;
pub mod roots;
pub mod taubnut;

pub use error::{Error, Result};
pub use geometry::{ChartId, ChartPoint, Christoffel, Duality, GhData, MetricModel, TwoForm};
