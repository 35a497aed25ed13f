//! Non-topological planar vortices of a singular Liouville-type equation: solver and verification harness
//!
//! `-Δu + 4e^u/(1+e^u) = 4π Σ δ_p - 4π Σ δ_q` on the plane, reduced to a
//! bounded remainder `v` that solves a regular semilinear problem.
//!
//! Everything numerical is generic over [`Scalar`]; the aliases below fix
//! `f64`, which is what the tolerances throughout the crate assume.

pub mod asymptotics;
pub mod config;
pub mod error;
pub mod greens;
pub mod grid;
pub mod io;
pub mod linalg;
pub mod profiles;
pub mod quadrature;
pub mod scalar;
pub mod singular;
pub mod solver;
pub mod verify;

pub use scalar::Scalar;

pub type Config = config::VortexConfig<f64>;
pub type Beta = config::BetaParam<f64>;
pub type Singular = singular::SingularData<f64>;
pub type Radial = grid::RadialGrid<f64>;
pub type Disk = grid::DiskGrid<f64>;
pub type Solution = solver::SolveResult<f64>;
pub type Source = greens::SourceField<f64>;
