//! Discrete super/sub-solutions built from a shifted base field.
//!
//! For `w = base + τ` let `t = Σ F(w) / Σ V η0` with `F` the nodal nonlinear
//! part, and solve `A ψ = -A base - F(w) + t V η0` (zero total, so a pinned
//! Neumann solve applies). Then `N(w + ψ) = F(w + ψ) - F(w) + t V η0`, which
//! has the sign of `t` up to the change of `F`. A constant padding `± C`
//! absorbs that change; the smallest `C` making the inequality hold at every
//! node is found by bisection.

use crate::error::SolveError;
use crate::grid::Mesh;
use crate::scalar::Scalar;

use super::problem::Problem;

/// Largest admissible padding constant.
pub const PADDING_CAP: f64 = 50.0;

/// Relative slack of the nodewise inequalities.
const CHECK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Sub,
    Super,
}

impl Side {
    fn name(self) -> &'static str {
        match self {
            Side::Sub => "sub-solution",
            Side::Super => "super-solution",
        }
    }
}

/// One side of a bracket.
#[derive(Debug, Clone)]
pub struct Barrier<T> {
    pub field: Vec<T>,
    pub tau: T,
    /// `t = Σ F(base + τ) / Σ V η0`.
    pub t: T,
    pub padding: T,
}

/// A discrete sub-solution below a discrete super-solution.
#[derive(Debug, Clone)]
pub struct Bracket<T> {
    pub lower: Barrier<T>,
    pub upper: Barrier<T>,
}

impl<T: Scalar> Bracket<T> {
    /// `max (upper - lower)`.
    pub fn width(&self) -> T {
        self.lower.field.iter().zip(&self.upper.field).map(|(&a, &b)| b - a).fold(T::neg_infinity(), T::max)
    }

    /// Whether `field` lies between the barriers up to `slack`.
    pub fn contains(&self, field: &[T], slack: T) -> bool {
        field
            .iter()
            .zip(self.lower.field.iter().zip(&self.upper.field))
            .all(|(&v, (&lo, &hi))| v >= lo - slack && v <= hi + slack)
    }
}

/// The constant `τ` with `Σ F(base + τ) = 0`, i.e. total mass `μ_β`.
pub fn mass_shift<T: Scalar, M: Mesh<T>>(p: &Problem<'_, T, M>, base: &[T]) -> T {
    let excess = |tau: T| {
        let w: Vec<T> = base.iter().map(|&b| b + tau).collect();
        p.interior_mass(&w) + p.exterior_mass(&w) - p.data().mass()
    };
    let (mut lo, mut hi) = (T::lit(-1.0), T::lit(1.0));
    while excess(lo) > T::zero() && lo > T::lit(-1e4) {
        lo *= T::lit(2.0);
    }
    while excess(hi) < T::zero() && hi < T::lit(1e4) {
        hi *= T::lit(2.0);
    }
    for _ in 0..200 {
        let mid = T::lit(0.5) * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if excess(mid) < T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    T::lit(0.5) * (lo + hi)
}

/// `max_i (∓N_i / scale_i)` for the padded field: positive means violated.
fn violation<T: Scalar, M: Mesh<T>>(p: &Problem<'_, T, M>, field: &[T], side: Side) -> T {
    let mut r = vec![T::zero(); field.len()];
    p.residual(field, &mut r);
    let s = p.scale(field);
    r.iter()
        .zip(&s)
        .map(|(&n, &sc)| {
            let signed = match side {
                Side::Super => -n,
                Side::Sub => n,
            };
            signed - T::lit(CHECK_TOL) * sc
        })
        .fold(T::neg_infinity(), T::max)
}

/// Whether `field` satisfies the discrete super/sub inequality at every node.
pub fn is_barrier<T: Scalar, M: Mesh<T>>(p: &Problem<'_, T, M>, field: &[T], side: Side) -> bool {
    violation(p, field, side) <= T::zero()
}

/// Builds one side from `base + τ` with the minimal padding.
pub fn construct_side<T: Scalar, M: Mesh<T>>(
    p: &Problem<'_, T, M>,
    base: &[T],
    tau: T,
    side: Side,
) -> Result<Barrier<T>, SolveError> {
    let n = base.len();
    let mesh = p.mesh();
    let vol = mesh.volumes();
    let eta = &p.data().fields().eta;
    let w: Vec<T> = base.iter().map(|&b| b + tau).collect();
    let mut nl = vec![T::zero(); n];
    p.nonlinear(&w, &mut nl);
    let eta_mass: T = eta.iter().zip(vol).map(|(&e, &v)| e * v).sum();
    let t = nl.iter().copied().sum::<T>() / eta_mass;
    let mut rhs = vec![T::zero(); n];
    mesh.apply(base, &mut rhs);
    for i in 0..n {
        rhs[i] = -rhs[i] - nl[i] + t * vol[i] * eta[i];
    }
    let total: T = rhs.iter().copied().sum();
    let area: T = vol.iter().copied().sum();
    for i in 0..n {
        rhs[i] -= total * vol[i] / area;
    }
    let mut psi = vec![T::zero(); n];
    mesh.solve(&vec![T::zero(); n], &rhs, &mut psi).map_err(|reason| SolveError::Linear { iteration: 0, reason })?;
    let core: Vec<T> = w.iter().zip(&psi).map(|(&a, &b)| a + b).collect();
    let sign = match side {
        Side::Super => T::one(),
        Side::Sub => -T::one(),
    };
    let padded = |c: T| core.iter().map(|&x| x + sign * c).collect::<Vec<T>>();
    let ok = |c: T| violation(p, &padded(c), side) <= T::zero();
    let padding = if ok(T::zero()) {
        T::zero()
    } else {
        let cap = T::lit(PADDING_CAP);
        if !ok(cap) {
            return Err(SolveError::PaddingCap { side: side.name(), cap: PADDING_CAP });
        }
        let (mut lo, mut hi) = (T::zero(), cap);
        for _ in 0..60 {
            let mid = T::lit(0.5) * (lo + hi);
            if ok(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    };
    Ok(Barrier { field: padded(padding), tau, t, padding })
}

/// Bracket from `base` shifted by `tau_sub` (lower) and `tau_sup` (upper).
pub fn shifted_bracket<T: Scalar, M: Mesh<T>>(
    p: &Problem<'_, T, M>,
    base: &[T],
    tau_sub: T,
    tau_sup: T,
) -> Result<Bracket<T>, SolveError> {
    Ok(Bracket {
        lower: construct_side(p, base, tau_sub, Side::Sub)?,
        upper: construct_side(p, base, tau_sup, Side::Super)?,
    })
}

/// Bracket around the constant field carrying the prescribed mass.
pub fn constant_bracket<T: Scalar, M: Mesh<T>>(p: &Problem<'_, T, M>) -> Result<Bracket<T>, SolveError> {
    let base = vec![T::zero(); p.len()];
    let tau = mass_shift(p, &base);
    shifted_bracket(p, &base, tau, tau)
}
