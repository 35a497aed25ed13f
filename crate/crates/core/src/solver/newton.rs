use crate::error::SolveError;
use crate::grid::Mesh;
use crate::scalar::Scalar;

use super::problem::Problem;
use super::{IterationRecord, StepKind};

/// Halvings of the Newton step before giving up.
pub const MAX_HALVINGS: usize = 20;

/// Outcome of a Newton run.
#[derive(Debug, Clone)]
pub struct NewtonOutcome<T> {
    pub field: Vec<T>,
    pub log: Vec<IterationRecord>,
    pub residual: T,
    pub converged: bool,
}

/// Damped Newton on `N(v) = 0` with Jacobian `A + diag(V f' + ω T')`.
///
/// Steps are halved until the merit `sqrt(Σ N_i²/V_i)` decreases; after
/// [`MAX_HALVINGS`] failed halvings the run reports stagnation. Converges when
/// the pointwise residual falls below `max(tol, roundoff floor)`.
pub fn newton_solve<T: Scalar, M: Mesh<T>>(
    p: &Problem<'_, T, M>,
    start: &[T],
    tol: f64,
    max_iter: usize,
) -> Result<NewtonOutcome<T>, SolveError> {
    let n = start.len();
    let mut v = start.to_vec();
    let mut r = vec![T::zero(); n];
    p.residual(&v, &mut r);
    let mut merit = p.merit(&r);
    let mut log = Vec::new();
    let mut trial = vec![T::zero(); n];
    let mut r_trial = vec![T::zero(); n];
    for k in 0..max_iter {
        let res = p.scaled_sup(&r);
        let target = T::lit(tol).max(p.roundoff_floor(&v));
        if res <= target {
            return Ok(NewtonOutcome { field: v, log, residual: res, converged: true });
        }
        let shift = p.jacobian_shift(&v);
        let rhs: Vec<T> = r.iter().map(|&x| -x).collect();
        let mut delta = vec![T::zero(); n];
        p.mesh().solve(&shift, &rhs, &mut delta).map_err(|reason| SolveError::Linear { iteration: k, reason })?;
        let mut alpha = T::one();
        let mut accepted = false;
        for _ in 0..=MAX_HALVINGS {
            for i in 0..n {
                trial[i] = v[i] + alpha * delta[i];
            }
            p.residual(&trial, &mut r_trial);
            let m = p.merit(&r_trial);
            if m.is_finite() && m < merit {
                accepted = true;
                merit = m;
                break;
            }
            alpha *= T::lit(0.5);
        }
        if !accepted {
            // the merit may stall at roundoff just above the target
            if res <= target * T::lit(10.0) {
                return Ok(NewtonOutcome { field: v, log, residual: res, converged: true });
            }
            return Err(SolveError::Stagnation { iteration: k });
        }
        let update = delta.iter().fold(T::zero(), |m, &d| m.max(d.abs())) * alpha;
        std::mem::swap(&mut v, &mut trial);
        std::mem::swap(&mut r, &mut r_trial);
        log.push(IterationRecord {
            kind: StepKind::Newton,
            step: k,
            residual: p.scaled_sup(&r).as_f64(),
            update: update.as_f64(),
        });
    }
    let res = p.scaled_sup(&r);
    let converged = res <= T::lit(tol).max(p.roundoff_floor(&v));
    Ok(NewtonOutcome { field: v, log, residual: res, converged })
}
