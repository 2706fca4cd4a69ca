//! Radial self-similar solutions of the compressible Euler equations with similarity
//! exponent 0 < λ < 1: critical-point analysis, trajectory construction, flow
//! reconstruction and shock-absence checks.

pub mod cli;
pub mod critical_points;
pub mod error;
pub mod flow;
pub mod local_analysis;
pub mod ode;
pub mod shock;
pub mod similarity;
pub mod trajectory;

pub use error::{Error, Result};
pub use similarity::{PhasePoint, SimilarityParams, System};
