//! Invariant suites run by `sigma-vortex verify` on built-in reference cases.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::asymptotics::Anchor;
use crate::config::{validate_config, BetaParam, RawConfig, VortexConfig};
use crate::greens::{check_lemma21, check_lemma22, spread_targets, tail_source, SourceField};
use crate::grid::radial_grid_for;
use crate::singular::assemble;
use crate::solver::{monotone_iterate, solve, Direction, LambdaPolicy, Problem, SolveOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    MassIdentity,
    Lemma21,
    Lemma22,
    Bracket,
    Comparison,
}

impl Suite {
    pub const ALL: [Suite; 5] =
        [Suite::MassIdentity, Suite::Lemma21, Suite::Lemma22, Suite::Bracket, Suite::Comparison];

    pub fn name(self) -> &'static str {
        match self {
            Suite::MassIdentity => "mass-identity",
            Suite::Lemma21 => "lemma21",
            Suite::Lemma22 => "lemma22",
            Suite::Bracket => "bracket",
            Suite::Comparison => "comparison",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Suite::ALL.into_iter().find(|x| x.name() == s).ok_or_else(|| {
            format!("unknown suite {s:?} (expected one of mass-identity, lemma21, lemma22, bracket, comparison)")
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerifyOptions {
    pub seed: u64,
    /// Flips the sign of `g_β` inside the mass-identity suite.
    pub inject_g_sign_error: bool,
    pub r_max: f64,
    pub nodes: usize,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self { seed: 0, inject_g_sign_error: false, r_max: 1e4, nodes: 2001 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteOutcome {
    pub suite: Suite,
    pub pass: bool,
    /// One line per checked case.
    pub details: Vec<String>,
    #[serde(skip)]
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub outcomes: Vec<SuiteOutcome>,
    pub pass: bool,
}

impl VerifyReport {
    pub fn table(&self) -> String {
        let mut s = String::new();
        for o in &self.outcomes {
            s.push_str(&format!(
                "{:<14} {}  ({:.2} s)\n",
                o.suite.name(),
                if o.pass { "PASS" } else { "FAIL" },
                o.seconds
            ));
            for d in &o.details {
                s.push_str(&format!("    {d}\n"));
            }
        }
        s
    }
}

/// The reference configuration: two coincident poles at the origin, no zeros.
pub fn reference_config() -> VortexConfig<f64> {
    validate_config(&RawConfig::coincident(2, 0.5)).expect("reference configuration is valid")
}

/// Relative mass-defect limit of the mass-identity suite.
pub const MASS_TOLERANCE: f64 = 1e-3;

fn mass_identity(opts: &VerifyOptions, details: &mut Vec<String>) -> bool {
    let config = reference_config();
    let mut ok = true;
    for beta in [2.5, 3.0, 3.5] {
        let outcome = (|| {
            let mesh = radial_grid_for(&config, opts.r_max, opts.nodes)?;
            let mut data = assemble(&config, BetaParam::new(beta, &config)?, &mesh)?;
            if opts.inject_g_sign_error {
                data.inject_g_sign_error();
            }
            solve(&Problem::new(&mesh, &data), &SolveOptions::default())
        })();
        match outcome {
            Ok(r) => {
                let mu = std::f64::consts::TAU * (4.0 - beta);
                let total = r.interior_mass + r.exterior_mass;
                let rel = (total - mu).abs() / mu;
                let pass = rel <= MASS_TOLERANCE;
                ok &= pass;
                details.push(format!(
                    "beta={beta}: interior {:.9} + exterior {:.3e} vs 2pi(4-beta) {mu:.9}, rel {rel:.2e}",
                    r.interior_mass, r.exterior_mass
                ));
            }
            Err(e) => {
                ok = false;
                details.push(format!("beta={beta}: solve failed: {e}"));
            }
        }
    }
    ok
}

fn lemma21(opts: &VerifyOptions, details: &mut Vec<String>) -> bool {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut ok = true;
    let mut worst = 0.0f64;
    for k in 0..16 {
        let radius = rng.gen_range(1.0..2.0);
        let source = SourceField::random_compact(&mut rng, radius, 40);
        let radii: Vec<f64> = (0..64).map(|_| radius * (4.0 + 36.0 * (1.0 - rng.gen::<f64>()))).collect();
        match check_lemma21(&source, &spread_targets(&radii)) {
            Ok(rep) => {
                worst = worst.max(rep.max_ratio);
                if !rep.pass {
                    ok = false;
                    details.push(format!("source {k}: max ratio {:.4}", rep.max_ratio));
                }
            }
            Err(e) => {
                ok = false;
                details.push(format!("source {k}: {e}"));
            }
        }
    }
    details.push(format!("16 sources x 64 radii in (4R, 40R]: max |Γ*F| |x| / (R ‖F‖₁) = {worst:.4}"));
    ok
}

fn lemma22(details: &mut Vec<String>) -> bool {
    let source = tail_source(3.0, 2.0, 0.05, 20);
    let radii: Vec<f64> = (0..16).map(|k| 10.0 * 20f64.powf(k as f64 / 15.0)).collect();
    match check_lemma22(&source, &spread_targets(&radii)) {
        Ok(rep) => {
            details.push(format!(
                "beta=3 tail source on [10, 200]: envelope slope {:.4}, decay slope {:.4}, envelope constant {:.4}",
                rep.envelope_slope, rep.decay_slope, rep.envelope_constant
            ));
            rep.pass
        }
        Err(e) => {
            details.push(e.to_string());
            false
        }
    }
}

fn bracket(opts: &VerifyOptions, details: &mut Vec<String>) -> bool {
    let config = reference_config();
    let anchor = match radial_grid_for(&config, opts.r_max, opts.nodes)
        .map_err(Into::into)
        .and_then(|mesh| Anchor::new(&config, mesh, &SolveOptions::default()))
    {
        Ok(a) => a,
        Err(e) => {
            details.push(format!("anchor: {e}"));
            return false;
        }
    };
    let mut ok = true;
    for beta in [2.5, 3.0, 3.5] {
        let outcome = (|| {
            let data = anchor.data_at(BetaParam::new(beta, &config)?)?;
            let c = anchor.construct(&data)?;
            let r = solve(&Problem::new(&anchor.mesh, &data), &SolveOptions::default())?;
            Ok::<_, crate::error::SolveError>((c, r))
        })();
        match outcome {
            Ok((c, r)) => {
                let pass = c.brackets(&r.v, 1e-9);
                ok &= pass;
                details.push(format!(
                    "beta={beta}: sub tau {:.4} ({:?}) pad {:.3}, super tau {:.4} ({:?}) pad {:.3}: {}",
                    c.sub_choice.tau,
                    c.sub_choice.used,
                    c.sub.padding,
                    c.sup_choice.tau,
                    c.sup_choice.used,
                    c.sup.padding,
                    if pass { "contains solution" } else { "solution escapes" }
                ));
            }
            Err(e) => {
                ok = false;
                details.push(format!("beta={beta}: {e}"));
            }
        }
    }
    ok
}

/// Sup-norm agreement required of the two one-sided limits.
pub const SQUEEZE_AGREEMENT: f64 = 1e-6;

/// One-sided monotone iterations from the shifted sub- and super-solutions at
/// `β`, on a coarse radial grid. Returns the sup-norm gap of the two limits.
pub fn two_sided_gap(beta: f64, r_max: f64, nodes: usize) -> Result<(f64, usize, usize), crate::error::AnalysisError> {
    let config = reference_config();
    let mesh = radial_grid_for(&config, r_max, nodes)?;
    let anchor = Anchor::new(&config, mesh, &SolveOptions::default())?;
    let data = anchor.data_at(BetaParam::new(beta, &config)?)?;
    let c = anchor.construct(&data)?;
    let p = Problem::new(&anchor.mesh, &data);
    let tol = 1e-10;
    let down = monotone_iterate(&p, &c.sup.field, Direction::FromAbove, LambdaPolicy::Adaptive, tol, 2000)?;
    let up = monotone_iterate(&p, &c.sub.field, Direction::FromBelow, LambdaPolicy::Adaptive, tol, 2000)?;
    let gap = down.field.iter().zip(&up.field).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    Ok((gap, down.log.len(), up.log.len()))
}

fn comparison(details: &mut Vec<String>) -> bool {
    match two_sided_gap(3.5, 1e3, 401) {
        Ok((gap, nd, nu)) => {
            details.push(format!(
                "beta=3.5, 401 nodes: limits from above ({nd} steps) and below ({nu} steps) differ by {gap:.2e}"
            ));
            gap <= SQUEEZE_AGREEMENT
        }
        Err(e) => {
            details.push(e.to_string());
            false
        }
    }
}

pub fn run_suite(suite: Suite, opts: &VerifyOptions) -> SuiteOutcome {
    let start = std::time::Instant::now();
    let mut details = Vec::new();
    let pass = match suite {
        Suite::MassIdentity => mass_identity(opts, &mut details),
        Suite::Lemma21 => lemma21(opts, &mut details),
        Suite::Lemma22 => lemma22(&mut details),
        Suite::Bracket => bracket(opts, &mut details),
        Suite::Comparison => comparison(&mut details),
    };
    SuiteOutcome { suite, pass, details, seconds: start.elapsed().as_secs_f64() }
}

/// Runs the given suites in order (all of them when `suites` is empty).
pub fn run_verify(suites: &[Suite], opts: &VerifyOptions) -> VerifyReport {
    let chosen: Vec<Suite> = if suites.is_empty() { Suite::ALL.to_vec() } else { suites.to_vec() };
    let outcomes: Vec<SuiteOutcome> = chosen.into_iter().map(|s| run_suite(s, opts)).collect();
    let pass = outcomes.iter().all(|o| o.pass);
    VerifyReport { outcomes, pass }
}
