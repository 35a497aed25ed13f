//! Nonlinear solve of `Δv = f(x, v) - g_β` on a truncated domain closed by
//! the exact exterior branch.

pub mod bracket;
mod exterior;
pub mod monotone;
pub mod newton;
mod problem;

use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use bracket::{constant_bracket, mass_shift, shifted_bracket, Barrier, Bracket, Side, PADDING_CAP};
pub use exterior::Exterior;
pub use monotone::{monotone_iterate, squeeze, Direction, MonotoneOutcome, Squeeze};
pub use newton::{newton_solve, NewtonOutcome};
pub use problem::Problem;

use crate::asymptotics::DecayFit;
use crate::config::{BetaParam, VortexConfig};
use crate::error::SolveError;
use crate::grid::{build_disk_grid, radial_grid_for, DiskGrid, DiskOptions, Mesh, RadialGrid};
use crate::scalar::Scalar;
use crate::singular::{assemble, SingularData};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Two-sided monotone squeeze only.
    Monotone,
    /// Newton from the middle of the initial bracket.
    Newton,
    /// A few squeeze steps, then Newton; squeeze again if Newton stalls.
    Hybrid,
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "monotone" => Ok(Method::Monotone),
            "newton" => Ok(Method::Newton),
            "hybrid" => Ok(Method::Hybrid),
            _ => Err(format!("unknown method {s:?} (expected monotone, newton or hybrid)")),
        }
    }
}

/// Diagonal shift of the monotone scheme.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum LambdaPolicy {
    /// `Λ = λ V` plus the exterior slope on the ring.
    Fixed(f64),
    /// `Λ = sup F'` over the hull of consecutive iterates (or the bracket).
    Adaptive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StepKind {
    Monotone,
    Squeeze,
    Newton,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub kind: StepKind,
    pub step: usize,
    /// `max |N_i| / V_i` after the step.
    pub residual: f64,
    /// `max |Δv|` of the step.
    pub update: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    /// Residual target for Newton, bracket width for the squeeze.
    pub tol: f64,
    pub max_iter: usize,
    pub method: Method,
    pub lambda: LambdaPolicy,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { tol: 1e-9, max_iter: 500, method: Method::Hybrid, lambda: LambdaPolicy::Adaptive }
    }
}

/// A converged (or best-effort) discrete solution with its diagnostics.
#[derive(Debug, Clone)]
pub struct SolveResult<T> {
    pub beta: T,
    pub v: Vec<T>,
    /// `lim v` at infinity along the exterior branch.
    pub b_beta: T,
    /// `max |N_i| / V_i`.
    pub residual: T,
    pub interior_mass: T,
    /// Mass beyond `R`, equal to the flux `Φ(R)` the closure injects.
    pub exterior_mass: T,
    pub expected_mass: T,
    /// `∫ f - μ_β` over the plane.
    pub mass_defect: T,
    /// `∫_{B_R} 4 e^u / (1 + e^u)` recomputed from `u = u0 + v`.
    pub flux: T,
    pub iterations: Vec<IterationRecord>,
    /// Final width of the monotone bracket, if one was kept.
    pub bracket_width: Option<T>,
    pub converged: bool,
    pub decay: Option<DecayFit>,
}

impl<T: Scalar> SolveResult<T> {
    pub fn from_field<M: Mesh<T>>(
        p: &Problem<'_, T, M>,
        v: Vec<T>,
        iterations: Vec<IterationRecord>,
        converged: bool,
    ) -> Self {
        let interior_mass = p.interior_mass(&v);
        let exterior_mass = p.exterior_mass(&v);
        let expected_mass = p.data().expected_mass();
        Self {
            beta: p.data().beta().value(),
            b_beta: p.far_limit(&v),
            residual: p.residual_norm(&v),
            interior_mass,
            exterior_mass,
            expected_mass,
            mass_defect: interior_mass + exterior_mass - expected_mass,
            flux: p.flux_diagnostic(&v),
            v,
            iterations,
            bracket_width: None,
            converged,
            decay: None,
        }
    }

    pub fn relative_mass_defect(&self) -> T {
        (self.mass_defect / self.expected_mass).abs()
    }
}

/// Bracket width at which the hybrid scheme hands over to Newton.
const HANDOVER_WIDTH: f64 = 1e-1;
const HANDOVER_STEPS: usize = 40;

/// Solves from the given bracket with the configured method.
pub fn solve_with_bracket<T: Scalar, M: Mesh<T>>(
    p: &Problem<'_, T, M>,
    bracket: &Bracket<T>,
    opts: &SolveOptions,
) -> Result<SolveResult<T>, SolveError> {
    let mid = |a: &[T], b: &[T]| a.iter().zip(b).map(|(&x, &y)| T::lit(0.5) * (x + y)).collect::<Vec<T>>();
    let full_squeeze = |lower: &[T], upper: &[T], mut log: Vec<IterationRecord>| {
        let sq = squeeze(p, lower, upper, opts.tol, opts.max_iter)?;
        log.extend(sq.log);
        let converged = sq.width.as_f64() <= opts.tol;
        let mut out = SolveResult::from_field(p, mid(&sq.lower, &sq.upper), log, converged);
        out.bracket_width = Some(sq.width);
        if !converged {
            return Err(SolveError::NoConvergence { iterations: opts.max_iter, residual: out.residual.as_f64() });
        }
        Ok(out)
    };
    let (lower, upper) = (&bracket.lower.field, &bracket.upper.field);
    match opts.method {
        Method::Monotone => full_squeeze(lower, upper, Vec::new()),
        Method::Newton => match newton_solve(p, &mid(lower, upper), opts.tol, opts.max_iter) {
            Ok(nw) if nw.converged => Ok(SolveResult::from_field(p, nw.field, nw.log, true)),
            Ok(nw) => Err(SolveError::NoConvergence { iterations: nw.log.len(), residual: nw.residual.as_f64() }),
            Err(SolveError::Stagnation { .. }) => full_squeeze(lower, upper, Vec::new()),
            Err(e) => Err(e),
        },
        Method::Hybrid => {
            let sq = squeeze(p, lower, upper, HANDOVER_WIDTH.max(opts.tol), HANDOVER_STEPS.min(opts.max_iter))?;
            let mut log = sq.log;
            match newton_solve(p, &mid(&sq.lower, &sq.upper), opts.tol, opts.max_iter) {
                Ok(nw) if nw.converged => {
                    log.extend(nw.log);
                    let mut out = SolveResult::from_field(p, nw.field, log, true);
                    out.bracket_width = Some(sq.width);
                    Ok(out)
                }
                Ok(_) | Err(SolveError::Stagnation { .. }) => full_squeeze(&sq.lower, &sq.upper, log),
                Err(e) => Err(e),
            }
        }
    }
}

/// Solves with the bracket around the mass-carrying constant.
pub fn solve<T: Scalar, M: Mesh<T>>(p: &Problem<'_, T, M>, opts: &SolveOptions) -> Result<SolveResult<T>, SolveError> {
    let bracket = constant_bracket(p)?;
    solve_with_bracket(p, &bracket, opts)
}

/// A solve together with the grid and data it lives on.
#[derive(Debug, Clone)]
pub struct Solved<T, M> {
    pub mesh: M,
    pub data: SingularData<T>,
    pub result: SolveResult<T>,
}

impl<T: Scalar, M: Mesh<T>> Solved<T, M> {
    pub fn problem(&self) -> Problem<'_, T, M> {
        Problem::new(&self.mesh, &self.data)
    }
}

/// Radial solve for coincident vortices on `[0, r_max]` with `nodes` nodes.
pub fn solve_radial<T: Scalar>(
    config: &VortexConfig<T>,
    beta: BetaParam<T>,
    r_max: T,
    nodes: usize,
    opts: &SolveOptions,
) -> Result<Solved<T, RadialGrid<T>>, SolveError> {
    let mesh = radial_grid_for(config, r_max, nodes)?;
    let data = assemble(config, beta, &mesh)?;
    let result = solve(&Problem::new(&mesh, &data), opts)?;
    Ok(Solved { mesh, data, result })
}

/// Two-dimensional solve on the lattice disk.
pub fn solve_disk<T: Scalar>(
    config: &VortexConfig<T>,
    beta: BetaParam<T>,
    grid: DiskOptions,
    opts: &SolveOptions,
) -> Result<Solved<T, DiskGrid<T>>, SolveError> {
    let mesh = build_disk_grid(grid, config)?;
    let data = assemble(config, beta, &mesh)?;
    let result = solve(&Problem::new(&mesh, &data), opts)?;
    Ok(Solved { mesh, data, result })
}
