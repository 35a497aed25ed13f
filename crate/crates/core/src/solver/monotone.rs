use crate::error::SolveError;
use crate::grid::Mesh;
use crate::scalar::Scalar;

use super::problem::Problem;
use super::{IterationRecord, LambdaPolicy, StepKind};

/// Which side of the solution a monotone sequence starts from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    FromAbove,
    FromBelow,
}

/// Slack allowed when checking monotonicity of iterates.
const MONOTONE_TOL: f64 = 1e-12;

/// Solves `(A + diag(lam)) x = diag(lam) w - F(w)` for the next iterate.
fn step<T: Scalar, M: Mesh<T>>(p: &Problem<'_, T, M>, w: &[T], lam: &[T], x: &mut [T]) -> Result<f64, String> {
    let mut rhs = vec![T::zero(); w.len()];
    p.nonlinear(w, &mut rhs);
    for i in 0..w.len() {
        rhs[i] = lam[i] * w[i] - rhs[i];
    }
    x.copy_from_slice(w);
    p.mesh().solve(lam, &rhs, x).map(|s| s.relative_residual)
}

/// Allowed drift against the monotone direction at node `i`.
fn slack<T: Scalar>(w: T, x_max: T, lin_res: f64) -> T {
    T::lit(MONOTONE_TOL) * (T::one() + w.abs()) + T::lit(10.0 * lin_res) * x_max
}

/// Diagonal shift for the given hull `[lo, hi]` of consecutive iterates.
fn shift<T: Scalar, M: Mesh<T>>(p: &Problem<'_, T, M>, policy: LambdaPolicy, lo: &[T], hi: &[T]) -> Vec<T> {
    let vol = p.mesh().volumes();
    (0..lo.len())
        .map(|i| match policy {
            LambdaPolicy::Adaptive => p.slope_sup(i, lo[i], hi[i]),
            LambdaPolicy::Fixed(lambda) => {
                let edge =
                    if p.omega()[i] > T::zero() { p.omega()[i] * p.exterior().mass_slope(hi[i]) } else { T::zero() };
                vol[i] * T::lit(lambda) + edge
            }
        })
        .collect()
}

/// Outcome of a one-sided monotone iteration.
#[derive(Debug, Clone)]
pub struct MonotoneOutcome<T> {
    pub field: Vec<T>,
    pub log: Vec<IterationRecord>,
    pub converged: bool,
}

/// Monotone iteration `(A + Λ) w_{k+1} = Λ w_k - F(w_k)` from a discrete
/// super-solution (`FromAbove`) or sub-solution (`FromBelow`).
///
/// `Λ` must dominate the slope of `F` between consecutive iterates for each
/// iterate to stay a super/sub-solution. The hull is only known after the
/// solve, so each step is checked and repeated with a larger `Λ` if needed.
pub fn monotone_iterate<T: Scalar, M: Mesh<T>>(
    p: &Problem<'_, T, M>,
    start: &[T],
    direction: Direction,
    policy: LambdaPolicy,
    tol: f64,
    max_iter: usize,
) -> Result<MonotoneOutcome<T>, SolveError> {
    let n = start.len();
    let mut w = start.to_vec();
    let mut x = vec![T::zero(); n];
    let mut log = Vec::new();
    // predicted magnitude of the next update, per node
    let mut reach = vec![T::one(); n];
    for k in 0..max_iter {
        let (mut lo, mut hi) = match direction {
            Direction::FromAbove => (w.iter().zip(&reach).map(|(&a, &d)| a - d).collect::<Vec<_>>(), w.clone()),
            Direction::FromBelow => (w.clone(), w.iter().zip(&reach).map(|(&a, &d)| a + d).collect()),
        };
        let mut lin_res;
        let mut attempts = 0;
        loop {
            let lam = shift(p, policy, &lo, &hi);
            lin_res = step(p, &w, &lam, &mut x).map_err(|reason| SolveError::Linear { iteration: k, reason })?;
            let actual_lo: Vec<T> = w.iter().zip(&x).map(|(&a, &b)| a.min(b)).collect();
            let actual_hi: Vec<T> = w.iter().zip(&x).map(|(&a, &b)| a.max(b)).collect();
            let need = shift(p, policy, &actual_lo, &actual_hi);
            let short = (0..n).any(|i| need[i] > lam[i] * T::lit(1.0 + 1e-12));
            attempts += 1;
            if !short || attempts > 8 {
                break;
            }
            for i in 0..n {
                let d = (x[i] - w[i]).abs() * T::lit(2.0);
                lo[i] = lo[i].min(w[i] - d);
                hi[i] = hi[i].max(w[i] + d);
            }
        }
        let x_max = x.iter().fold(T::zero(), |m, &v| m.max(v.abs()));
        let mut violation = T::zero();
        let mut update = T::zero();
        for i in 0..n {
            let d = x[i] - w[i];
            let wrong = match direction {
                Direction::FromAbove => d,
                Direction::FromBelow => -d,
            };
            if wrong > slack(w[i], x_max, lin_res) {
                violation = violation.max(wrong);
            }
            update = update.max(d.abs());
            reach[i] = d.abs() * T::lit(2.0);
        }
        if violation > T::zero() {
            return Err(SolveError::NotMonotone { iteration: k, violation: violation.as_f64() });
        }
        std::mem::swap(&mut w, &mut x);
        let residual = p.residual_norm(&w).as_f64();
        log.push(IterationRecord { kind: StepKind::Monotone, step: k, residual, update: update.as_f64() });
        if !update.is_finite() {
            return Err(SolveError::NonFinite(format!("monotone iterate at step {k}")));
        }
        if update.as_f64() <= tol {
            return Ok(MonotoneOutcome { field: w, log, converged: true });
        }
    }
    Ok(MonotoneOutcome { field: w, log, converged: false })
}

/// Result of a two-sided squeeze.
#[derive(Debug, Clone)]
pub struct Squeeze<T> {
    pub lower: Vec<T>,
    pub upper: Vec<T>,
    pub log: Vec<IterationRecord>,
    pub width: T,
}

/// Iterates a sub-solution and a super-solution towards each other with the
/// shared shift `Λ = sup F'` over the current bracket, until the bracket is
/// narrower than `tol` or `max_iter` steps have run.
pub fn squeeze<T: Scalar, M: Mesh<T>>(
    p: &Problem<'_, T, M>,
    lower: &[T],
    upper: &[T],
    tol: f64,
    max_iter: usize,
) -> Result<Squeeze<T>, SolveError> {
    let n = lower.len();
    let mut lo = lower.to_vec();
    let mut hi = upper.to_vec();
    let mut next_lo = vec![T::zero(); n];
    let mut next_hi = vec![T::zero(); n];
    let mut log = Vec::new();
    let width_of = |a: &[T], b: &[T]| a.iter().zip(b).map(|(&x, &y)| y - x).fold(T::neg_infinity(), T::max);
    let mut width = width_of(&lo, &hi);
    for k in 0..max_iter {
        if width.as_f64() <= tol {
            break;
        }
        let lam = shift(p, LambdaPolicy::Adaptive, &lo, &hi);
        let r_hi = step(p, &hi, &lam, &mut next_hi).map_err(|reason| SolveError::Linear { iteration: k, reason })?;
        let r_lo = step(p, &lo, &lam, &mut next_lo).map_err(|reason| SolveError::Linear { iteration: k, reason })?;
        let x_max = next_hi.iter().chain(&next_lo).fold(T::zero(), |m, &v| m.max(v.abs()));
        let mut violation = T::zero();
        for i in 0..n {
            let up = next_hi[i] - hi[i];
            let down = lo[i] - next_lo[i];
            let cross = next_lo[i] - next_hi[i];
            let s = slack(hi[i], x_max, r_hi.max(r_lo));
            for bad in [up, down, cross] {
                if bad > s {
                    violation = violation.max(bad);
                }
            }
        }
        if violation > T::zero() {
            return Err(SolveError::NotMonotone { iteration: k, violation: violation.as_f64() });
        }
        let update = (0..n).map(|i| (next_hi[i] - hi[i]).abs().max((next_lo[i] - lo[i]).abs())).fold(T::zero(), T::max);
        std::mem::swap(&mut lo, &mut next_lo);
        std::mem::swap(&mut hi, &mut next_hi);
        width = width_of(&lo, &hi);
        if !width.is_finite() {
            return Err(SolveError::NonFinite(format!("squeeze at step {k}")));
        }
        log.push(IterationRecord {
            kind: StepKind::Squeeze,
            step: k,
            residual: p.residual_norm(&hi).max(p.residual_norm(&lo)).as_f64(),
            update: update.as_f64(),
        });
    }
    Ok(Squeeze { lower: lo, upper: hi, log, width })
}
