//! Sweeps of `b_β` towards either end of the admissible interval.

use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{BetaParam, VortexConfig};
use crate::error::AnalysisError;
use crate::grid::Mesh;
use crate::scalar::Scalar;
use crate::solver::{solve_radial, SolveOptions};

use super::analysis::fit_decay;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Endpoint {
    /// `β = 2(N - M) - ε`.
    Upper,
    /// `β = 2 + ε`.
    Lower,
}

impl FromStr for Endpoint {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "upper" => Ok(Endpoint::Upper),
            "lower" => Ok(Endpoint::Lower),
            _ => Err(format!("unknown endpoint {s:?} (expected upper or lower)")),
        }
    }
}

impl Endpoint {
    pub fn beta(self, degree: u32, eps: f64) -> f64 {
        match self {
            Endpoint::Upper => 2.0 * f64::from(degree) - eps,
            Endpoint::Lower => 2.0 + eps,
        }
    }
}

/// Default `ε` list of an endpoint sweep.
pub const DEFAULT_EPSILONS: [f64; 4] = [1e-1, 1e-2, 1e-3, 1e-4];

/// Largest admissible spread of `|b_β - ln ε|` over a sweep.
pub const BAND_WIDTH: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepOptions {
    pub r_max: f64,
    pub nodes: usize,
    pub solve: SolveOptions,
    /// Window of the decay fit; defaults to `[10 r0, R/10]`.
    pub decay_window: Option<[f64; 2]>,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self { r_max: 1e4, nodes: 2001, solve: SolveOptions::default(), decay_window: None }
    }
}

/// One solve of a sweep; failed solves keep `error` and leave the values empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub beta: f64,
    pub epsilon: f64,
    pub b_beta: Option<f64>,
    pub b_over_logeps: Option<f64>,
    pub decay_slope: Option<f64>,
    pub decay_pass: Option<bool>,
    pub mass_defect: Option<f64>,
    pub iterations: Option<usize>,
    pub runtime_s: f64,
    pub grid: String,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub endpoint: Endpoint,
    /// Sorted by `β`.
    pub points: Vec<SweepPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepVerdict {
    pub endpoint: Endpoint,
    /// `|b_β - ln ε|` in order of decreasing `ε`.
    pub offsets: Vec<f64>,
    /// `b_β / ln ε` in order of decreasing `ε`.
    pub ratios: Vec<f64>,
    /// `max - min` of the offsets.
    pub band: f64,
    pub band_pass: bool,
    /// `|ratio - 1|` strictly decreases as `ε` decreases.
    pub ratio_trend_pass: bool,
    /// `b_β` at the smallest `ε` lies below `b_β` at the largest.
    pub b_decreasing: bool,
    pub failures: usize,
    pub pass: bool,
}

impl SweepRecord {
    /// Points in order of decreasing `ε`.
    pub fn by_epsilon(&self) -> Vec<&SweepPoint> {
        let mut pts: Vec<&SweepPoint> = self.points.iter().collect();
        pts.sort_by(|a, b| b.epsilon.total_cmp(&a.epsilon));
        pts
    }

    pub fn verdict(&self) -> SweepVerdict {
        let pts = self.by_epsilon();
        let failures = pts.iter().filter(|p| p.b_beta.is_none()).count();
        let ok: Vec<(f64, f64)> = pts.iter().filter_map(|p| p.b_beta.map(|b| (p.epsilon, b))).collect();
        let offsets: Vec<f64> = ok.iter().map(|&(e, b)| (b - e.ln()).abs()).collect();
        let ratios: Vec<f64> = ok.iter().map(|&(e, b)| b / e.ln()).collect();
        let band = offsets.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            - offsets.iter().cloned().fold(f64::INFINITY, f64::min);
        let band_pass = failures == 0 && !ok.is_empty() && band <= BAND_WIDTH;
        let ratio_trend_pass =
            failures == 0 && ratios.len() >= 2 && ratios.windows(2).all(|w| (w[1] - 1.0).abs() < (w[0] - 1.0).abs());
        let b_decreasing = failures == 0 && ok.len() >= 2 && ok[ok.len() - 1].1 < ok[0].1;
        SweepVerdict {
            endpoint: self.endpoint,
            offsets,
            ratios,
            band,
            band_pass,
            ratio_trend_pass,
            b_decreasing,
            failures,
            pass: band_pass && ratio_trend_pass,
        }
    }
}

fn sweep_point<T: Scalar>(config: &VortexConfig<T>, endpoint: Endpoint, eps: f64, opts: &SweepOptions) -> SweepPoint {
    let beta = endpoint.beta(config.degree(), eps);
    let grid = format!("radial rmax={} nodes={}", opts.r_max, opts.nodes);
    let start = Instant::now();
    let mut point = SweepPoint {
        beta,
        epsilon: eps,
        b_beta: None,
        b_over_logeps: None,
        decay_slope: None,
        decay_pass: None,
        mass_defect: None,
        iterations: None,
        runtime_s: 0.0,
        grid,
        error: None,
    };
    let outcome = BetaParam::new(T::lit(beta), config)
        .map_err(Into::into)
        .and_then(|b| solve_radial(config, b, T::lit(opts.r_max), opts.nodes, &opts.solve));
    match outcome {
        Ok(solved) => {
            let r = &solved.result;
            let b = r.b_beta.as_f64();
            point.b_beta = Some(b);
            point.b_over_logeps = Some(b / eps.ln());
            point.mass_defect = Some(r.mass_defect.as_f64());
            point.iterations = Some(r.iterations.len());
            let r0 = config.r0().as_f64();
            let window = opts.decay_window.unwrap_or([10.0 * r0, 0.1 * opts.r_max]);
            match fit_decay(&solved.mesh.radii(), &r.v, r.b_beta, beta, window, 10.0 * opts.solve.tol) {
                Ok(fit) => {
                    point.decay_slope = Some(fit.slope);
                    point.decay_pass = Some(fit.pass);
                }
                Err(e) => point.error = Some(format!("decay fit: {e}")),
            }
        }
        Err(e) => point.error = Some(e.to_string()),
    }
    point.runtime_s = start.elapsed().as_secs_f64();
    point
}

/// Radial solves at `β = 2(N - M) - ε` or `β = 2 + ε` for every `ε`, run in
/// parallel and merged in `β` order. Failed solves are kept as marked points.
pub fn sweep_endpoints<T: Scalar>(
    config: &VortexConfig<T>,
    epsilons: &[f64],
    endpoint: Endpoint,
    opts: &SweepOptions,
) -> Result<SweepRecord, AnalysisError> {
    if epsilons.is_empty() || epsilons.iter().any(|&e| !(e > 0.0)) {
        return Err(AnalysisError::Precondition("epsilon list must be non-empty and positive".into()));
    }
    if epsilons.windows(2).any(|w| w[1] >= w[0]) {
        return Err(AnalysisError::Precondition("epsilon list must be strictly decreasing".into()));
    }
    if !config.is_coincident_at_origin() {
        return Err(AnalysisError::Precondition("endpoint sweeps run on coincident radial configurations".into()));
    }
    let mut points: Vec<SweepPoint> = epsilons.par_iter().map(|&e| sweep_point(config, endpoint, e, opts)).collect();
    points.sort_by(|a, b| a.beta.total_cmp(&b.beta));
    Ok(SweepRecord { endpoint, points })
}
