//! Shifted barriers `v_{β0} + τ_β` around the anchor solution at `β0 = N - M + 1`.

use serde::{Deserialize, Serialize};

use crate::config::{BetaParam, VortexConfig};
use crate::error::{AnalysisError, SolveError};
use crate::grid::Mesh;
use crate::scalar::Scalar;
use crate::singular::{assemble, measured_c1, SingularData};
use crate::solver::bracket::{construct_side, Barrier, Side};
use crate::solver::{mass_shift, Problem, SolveOptions, SolveResult};

use super::analysis::linear_fit;

/// The four constants of the shift formulas, with the pieces they are made of.
///
/// `d1` and `d3` integrate `e^{-v1}`, which behaves like `|x - p|^{-2 mult}`
/// at every pole and is not integrable; they are reported as `+inf`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShiftConstants {
    pub beta0: f64,
    /// `b_{β0}` of the anchor.
    pub b0: f64,
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
    pub d4: f64,
    /// Tail of `d2` beyond the grid, from a power-law fit on the outer decade.
    pub d2_tail: f64,
    /// `‖v_{β0}‖_∞`.
    pub sup_anchor: f64,
    /// `∫_{B_{r0}} e^{-v1}`.
    pub pole_integral: f64,
    /// Measured `c1` with `|v3 + ln|x|| <= c1` for `|x| >= 2 r0`.
    pub c1: f64,
}

/// Which rule produced a shift.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TauRule {
    /// Sub-solution, `β >= β0`: `(ln(2(N-M) - β) + ln(2π/d1))₋`.
    Tau0,
    /// Super-solution, `β >= β0`: `(ln(2(N-M) - β) + ln(2π/d2))₋`.
    Tau1,
    /// Sub-solution, `β < β0`: `(ln(β - 2) + ln(2π(β0 - 2)/d3))₋`.
    Tau2,
    /// Super-solution, `β < β0`: `(ln(β - 2) - ln d4)₋`.
    Tau3,
    /// `τ` with `∫ f(v_{β0} + τ) = μ_β`, used when the formula is `-inf`.
    MassBalance,
}

/// Result of the shift formula for one side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TauChoice {
    /// Formula the side is attached to.
    pub formula: TauRule,
    /// Value of that formula (may be `-inf`).
    pub formula_value: f64,
    /// Rule actually used to build the barrier.
    pub used: TauRule,
    pub tau: f64,
}

/// Padded sub/super-solutions at one `β` built from the anchor.
#[derive(Debug, Clone)]
pub struct ShiftConstruction<T> {
    pub beta: f64,
    pub sub: Barrier<T>,
    pub sup: Barrier<T>,
    pub sub_choice: TauChoice,
    pub sup_choice: TauChoice,
}

impl<T: Scalar> ShiftConstruction<T> {
    /// Whether `field` lies between the barriers up to `slack`.
    pub fn brackets(&self, field: &[T], slack: T) -> bool {
        field
            .iter()
            .zip(self.sub.field.iter().zip(&self.sup.field))
            .all(|(&v, (&lo, &hi))| v >= lo - slack && v <= hi + slack)
    }
}

/// `a₋ = min(0, a)`.
fn negative_part(a: f64) -> f64 {
    a.min(0.0)
}

/// `∫_{|x|>R} F` for a radially decaying integrand, from a power-law fit of
/// the nodal values on `[R/10, R]`. Fails if the fit is poor or not integrable.
fn power_tail<T: Scalar, M: Mesh<T>>(mesh: &M, values: &[f64]) -> Result<f64, AnalysisError> {
    let r_max = mesh.outer_radius().as_f64();
    let radii = mesh.radii();
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for (r, &v) in radii.iter().zip(values) {
        let r = r.as_f64();
        if r >= 0.1 * r_max && r <= r_max && v > 0.0 {
            xs.push(r.ln());
            ys.push(v.ln());
        }
    }
    if xs.len() < 3 {
        return Err(AnalysisError::TailUnstable { residual: f64::INFINITY });
    }
    let (slope, intercept, rms) = linear_fit(&xs, &ys);
    let q = -slope;
    if rms > 0.1 || q <= 2.0 {
        return Err(AnalysisError::TailUnstable { residual: rms });
    }
    Ok(std::f64::consts::TAU * intercept.exp() * r_max.powf(2.0 - q) / (q - 2.0))
}

/// Evaluates `d1..d4` on the anchor's grid.
pub fn compute_shift_constants<T: Scalar, M: Mesh<T>>(
    anchor: &Problem<'_, T, M>,
    solution: &SolveResult<T>,
    config: &VortexConfig<T>,
) -> Result<ShiftConstants, AnalysisError> {
    let mesh = anchor.mesh();
    let data = anchor.data();
    let fields = data.fields();
    let vol = mesh.volumes();
    let v = &solution.v;
    let beta0 = config.beta0().as_f64();
    let deg = f64::from(config.degree());
    let r0 = config.r0().as_f64();
    let n = v.len();
    let at = |i: usize| (fields.v1[i].as_f64(), fields.v2[i].as_f64(), fields.v3[i].as_f64(), v[i].as_f64());

    // d1 = ∫ 4 K_{β0} e^{v - v1}
    let d1_nodes: Vec<f64> = (0..n)
        .map(|i| {
            let (v1, _, v3, vi) = at(i);
            4.0 * (beta0 * v3 + vi - v1).exp()
        })
        .collect();
    let d1 = if d1_nodes.iter().any(|x| !x.is_finite()) {
        f64::INFINITY
    } else {
        d1_nodes.iter().zip(vol).map(|(x, w)| x * w.as_f64()).sum::<f64>() + power_tail(mesh, &d1_nodes)?
    };

    // d2 = ∫ 4 K_{2(N-M)} e^{v} / (e^{v1 - v2} + K_{2(N-M)} e^{v})
    let d2_nodes: Vec<f64> = (0..n)
        .map(|i| {
            let (v1, v2, v3, vi) = at(i);
            4.0 * (2.0 * deg * v3 + vi + v2 - v1).sigmoid()
        })
        .collect();
    let d2_tail = power_tail(mesh, &d2_nodes)?;
    let d2 = d2_nodes.iter().zip(vol).map(|(x, w)| x * w.as_f64()).sum::<f64>() + d2_tail;

    // d3 = 4 e^{‖v‖∞} ((β0 - 2) ∫_{B_{r0}} e^{-v1} + 2π)
    let sup_anchor = v.iter().fold(0.0f64, |m, x| m.max(x.as_f64().abs()));
    let radii = mesh.radii();
    let pole_integral: f64 =
        (0..n).filter(|&i| radii[i].as_f64() < r0).map(|i| vol[i].as_f64() * (-fields.v1[i].as_f64()).exp()).sum();
    let d3 = 4.0 * sup_anchor.exp() * ((beta0 - 2.0) * pole_integral + std::f64::consts::TAU);

    // d4 = e^{-2(N-M) c1} / (N-M-1) · e^{b0} (2 r0)^{2-β0} / (1 + 2(β0-2) e^{b0})
    let c1 = measured_c1(fields, mesh).as_f64();
    let b0 = solution.b_beta.as_f64();
    let d4 = (-2.0 * deg * c1).exp() / (deg - 1.0) * b0.exp() * (2.0 * r0).powf(2.0 - beta0)
        / (1.0 + 2.0 * (beta0 - 2.0) * b0.exp());

    for (name, d) in [("d1", d1), ("d2", d2), ("d3", d3), ("d4", d4)] {
        if !(d > 0.0) {
            return Err(AnalysisError::Precondition(format!("{name} = {d} is not positive")));
        }
    }
    Ok(ShiftConstants { beta0, b0, d1, d2, d3, d4, d2_tail, sup_anchor, pole_integral, c1 })
}

/// The formula values attached to each side at `β`.
pub fn tau_formulas(beta: f64, degree: u32, c: &ShiftConstants) -> (TauRule, f64, TauRule, f64) {
    let tau = std::f64::consts::TAU;
    if beta >= c.beta0 {
        let eps = 2.0 * f64::from(degree) - beta;
        (
            TauRule::Tau0,
            negative_part(eps.ln() + (tau / c.d1).ln()),
            TauRule::Tau1,
            negative_part(eps.ln() + (tau / c.d2).ln()),
        )
    } else {
        let eps = beta - 2.0;
        (
            TauRule::Tau2,
            negative_part(eps.ln() + (tau * (c.beta0 - 2.0) / c.d3).ln()),
            TauRule::Tau3,
            negative_part(eps.ln() - c.d4.ln()),
        )
    }
}

/// Builds the padded sub/super-solutions at the problem's `β` from the anchor field.
pub fn supersub_construct<T: Scalar, M: Mesh<T>>(
    p: &Problem<'_, T, M>,
    anchor: &[T],
    constants: &ShiftConstants,
    degree: u32,
) -> Result<ShiftConstruction<T>, SolveError> {
    let beta = p.data().beta().value().as_f64();
    let (sub_rule, sub_value, sup_rule, sup_value) = tau_formulas(beta, degree, constants);
    let mut balance = None;
    let mut choose = |rule: TauRule, value: f64| {
        if value.is_finite() {
            TauChoice { formula: rule, formula_value: value, used: rule, tau: value }
        } else {
            let tau = *balance.get_or_insert_with(|| mass_shift(p, anchor).as_f64());
            TauChoice { formula: rule, formula_value: value, used: TauRule::MassBalance, tau }
        }
    };
    let sub_choice = choose(sub_rule, sub_value);
    let sup_choice = choose(sup_rule, sup_value);
    let sub = construct_side(p, anchor, T::lit(sub_choice.tau), Side::Sub)?;
    let sup = construct_side(p, anchor, T::lit(sup_choice.tau), Side::Super)?;
    Ok(ShiftConstruction { beta, sub, sup, sub_choice, sup_choice })
}

/// Anchor solution at `β0` with its shift constants, on a fixed grid.
#[derive(Debug, Clone)]
pub struct Anchor<T, M> {
    pub config: VortexConfig<T>,
    pub mesh: M,
    pub data: SingularData<T>,
    pub solution: SolveResult<T>,
    pub constants: ShiftConstants,
}

impl<T: Scalar, M: Mesh<T>> Anchor<T, M> {
    pub fn new(config: &VortexConfig<T>, mesh: M, opts: &SolveOptions) -> Result<Self, AnalysisError> {
        let beta0 = BetaParam::new(config.beta0(), config).map_err(SolveError::from)?;
        let data = assemble(config, beta0, &mesh)?;
        let p = Problem::new(&mesh, &data);
        let solution = crate::solver::solve(&p, opts)?;
        let constants = compute_shift_constants(&p, &solution, config)?;
        Ok(Self { config: config.clone(), mesh, data, solution, constants })
    }

    /// Singular data at `β` on the anchor grid.
    pub fn data_at(&self, beta: BetaParam<T>) -> Result<SingularData<T>, SolveError> {
        SingularData::new(self.data.fields().clone(), beta, self.mesh.volumes())
    }

    /// Barriers at the `β` of `data` (which must live on the anchor grid).
    pub fn construct(&self, data: &SingularData<T>) -> Result<ShiftConstruction<T>, SolveError> {
        let p = Problem::new(&self.mesh, data);
        supersub_construct(&p, &self.solution.v, &self.constants, self.config.degree())
    }
}
