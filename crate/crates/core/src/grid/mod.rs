//! Computational grids and the finite-volume interface the solvers work against.

mod disk;
mod radial;

pub use disk::{build_disk_grid, DiskGrid, DiskOptions, DEFAULT_NODE_CAP};
pub use radial::{build_radial_grid, radial_grid_for, RadialGrid};

use crate::scalar::Scalar;

/// Outcome of a linear solve.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LinearStats {
    pub iterations: usize,
    pub relative_residual: f64,
}

/// A cell-centered finite-volume discretization of a disk of radius `R`.
///
/// The stiffness matrix `A` is symmetric positive semidefinite with zero row
/// sums (homogeneous Neumann), so `A v ≈ -Δv` times cell volume. Volumes are
/// two-dimensional areas in every implementation.
pub trait Mesh<T: Scalar>: Sync {
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Node positions; radial grids report `(r, 0)`.
    fn points(&self) -> &[[T; 2]];

    /// Control-volume areas.
    fn volumes(&self) -> &[T];

    /// Nodes touching the outer circle with their share `ω` of its length.
    fn boundary(&self) -> &[(usize, T)];

    fn outer_radius(&self) -> T;

    /// `y = A x`.
    fn apply(&self, x: &[T], y: &mut [T]);

    /// `y = |A| |x|`, used for roundoff scales.
    fn apply_abs(&self, x: &[T], y: &mut [T]);

    /// Solves `(A + diag(shift)) x = rhs` with `shift >= 0`; `x` holds the
    /// initial guess on entry. With an all-zero shift the rhs must sum to zero
    /// and the solution with `x[0] = 0` is returned.
    fn solve(&self, shift: &[T], rhs: &[T], x: &mut [T]) -> Result<LinearStats, String>;

    /// Cell averages of `f`; the circles `(center, radius)` mark kinks to split at.
    fn cell_averages(&self, f: &(dyn Fn([T; 2]) -> T + Sync), kinks: &[([T; 2], T)]) -> Vec<T>;

    /// Whether node values depend on the radius only.
    fn is_radial(&self) -> bool;

    /// Distance from the origin of each node.
    fn radii(&self) -> Vec<T> {
        self.points().iter().map(|p| p[0].hypot(p[1])).collect()
    }
}

/// Rank-one pin used for singular Neumann solves: adds `c` at node 0.
pub(crate) fn pinned_shift<T: Scalar>(shift: &[T], pin: T) -> Option<Vec<T>> {
    if shift.iter().any(|&s| s > T::zero()) {
        return None;
    }
    let mut s = vec![T::zero(); shift.len()];
    s[0] = pin;
    Some(s)
}
