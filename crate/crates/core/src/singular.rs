//! The singular decomposition `u = u0 + v` sampled on a grid.
//!
//! `v1 = 2 Σ mult ρ(|x - p|/ϱ)`, `v2` likewise for zeros, `v3` the radial
//! potential of the bump, `g_β = g1 - g2 - β η0` and `K_β = e^{β v3}`.

use std::sync::Arc;

use crate::config::{BetaParam, VortexConfig};
use crate::error::SolveError;
use crate::grid::Mesh;
use crate::profiles::{BumpProfile, CutoffProfile};
use crate::scalar::Scalar;

/// Relative mass defect above which assembly reports under-resolution.
pub const MASS_DEFECT_LIMIT: f64 = 1e-4;

/// The `β`-independent part of the singular data.
#[derive(Debug, Clone, PartialEq)]
pub struct SingularFields<T> {
    pub v1: Vec<T>,
    pub v2: Vec<T>,
    pub v3: Vec<T>,
    /// Cell averages of `g1 - g2`.
    pub g12: Vec<T>,
    /// Cell averages of `η0`.
    pub eta: Vec<T>,
    /// `N - M`.
    pub degree: u32,
    pub c0: T,
    pub r0: T,
}

/// Point evaluation of the singular profiles for one configuration.
#[derive(Debug, Clone)]
pub struct SingularProfiles<T> {
    cutoff: CutoffProfile<T>,
    bump: BumpProfile<T>,
    config: VortexConfig<T>,
}

impl<T: Scalar> SingularProfiles<T> {
    pub fn new(config: &VortexConfig<T>) -> Self {
        Self {
            cutoff: CutoffProfile::new().expect("quintic blend is monotone"),
            bump: BumpProfile::new(),
            config: config.clone(),
        }
    }

    pub fn bump(&self) -> &BumpProfile<T> {
        &self.bump
    }

    pub fn cutoff(&self) -> &CutoffProfile<T> {
        &self.cutoff
    }

    fn sum_rho(&self, centers: &[crate::config::Center<T>], x: [T; 2]) -> T {
        let two = T::lit(2.0);
        centers
            .iter()
            .map(|c| {
                let t = (x[0] - c.pos[0]).hypot(x[1] - c.pos[1]) / self.config.varrho();
                two * T::of_usize(c.mult as usize) * self.cutoff.value(t)
            })
            .sum()
    }

    pub fn v1(&self, x: [T; 2]) -> T {
        self.sum_rho(self.config.poles(), x)
    }

    pub fn v2(&self, x: [T; 2]) -> T {
        self.sum_rho(self.config.zeros(), x)
    }

    pub fn v3(&self, x: [T; 2]) -> T {
        self.bump.v3(x[0].hypot(x[1]))
    }

    /// `g1 - g2`, supported on the annuli `ϱ/2 < |x - c| < ϱ`.
    pub fn g12(&self, x: [T; 2]) -> T {
        let varrho = self.config.varrho();
        let scale = T::lit(-2.0) / (varrho * varrho);
        self.config
            .signed_centers()
            .map(|(c, m)| {
                let t = (x[0] - c.pos[0]).hypot(x[1] - c.pos[1]) / varrho;
                scale * T::lit(m as f64) * self.cutoff.radial_laplacian(t)
            })
            .sum()
    }

    pub fn eta0(&self, x: [T; 2]) -> T {
        self.bump.eta0(x[0].hypot(x[1]))
    }

    /// Circles where `g` has reduced smoothness.
    pub fn kinks(&self) -> Vec<([T; 2], T)> {
        let varrho = self.config.varrho();
        self.config.signed_centers().flat_map(|(c, _)| [(c.pos, varrho * T::lit(0.5)), (c.pos, varrho)]).collect()
    }
}

impl<T: Scalar> SingularFields<T> {
    /// Samples `v1, v2, v3` at nodes and cell-averages `g1 - g2` and `η0`.
    pub fn sample<M: Mesh<T>>(config: &VortexConfig<T>, mesh: &M) -> Self {
        let prof = SingularProfiles::new(config);
        let pts = mesh.points();
        let kinks = prof.kinks();
        let g12 = mesh.cell_averages(&|x| prof.g12(x), &kinks);
        let eta = mesh.cell_averages(&|x| prof.eta0(x), &[([T::zero(), T::zero()], T::one())]);
        Self {
            v1: pts.iter().map(|&x| prof.v1(x)).collect(),
            v2: pts.iter().map(|&x| prof.v2(x)).collect(),
            v3: pts.iter().map(|&x| prof.v3(x)).collect(),
            g12,
            eta,
            degree: config.degree(),
            c0: prof.bump.c0(),
            r0: config.r0(),
        }
    }

    pub fn len(&self) -> usize {
        self.v1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.v1.is_empty()
    }
}

/// Singular data at a fixed admissible `β`.
#[derive(Debug, Clone)]
pub struct SingularData<T> {
    fields: Arc<SingularFields<T>>,
    beta: BetaParam<T>,
    g: Vec<T>,
    /// `v2 + β v3 - v1`, the log-weight in the nonlinearity.
    shift: Vec<T>,
    mass: T,
}

/// Assembles the singular data and checks the discrete mass identity.
pub fn assemble<T: Scalar, M: Mesh<T>>(
    config: &VortexConfig<T>,
    beta: BetaParam<T>,
    mesh: &M,
) -> Result<SingularData<T>, SolveError> {
    let fields = Arc::new(SingularFields::sample(config, mesh));
    SingularData::new(fields, beta, mesh.volumes())
}

impl<T: Scalar> SingularData<T> {
    /// Combines precomputed fields with `β`; fails if the mass identity is off
    /// by more than [`MASS_DEFECT_LIMIT`] relative.
    pub fn new(fields: Arc<SingularFields<T>>, beta: BetaParam<T>, volumes: &[T]) -> Result<Self, SolveError> {
        let b = beta.value();
        let g: Vec<T> = fields.g12.iter().zip(&fields.eta).map(|(&g, &e)| g - b * e).collect();
        let shift = (0..fields.len()).map(|i| fields.v2[i] + b * fields.v3[i] - fields.v1[i]).collect();
        let mass = g.iter().zip(volumes).map(|(&g, &v)| g * v).sum();
        let data = Self { fields, beta, g, shift, mass };
        let defect = data.relative_mass_defect();
        if !(defect.as_f64() <= MASS_DEFECT_LIMIT) {
            return Err(SolveError::UnderResolved { defect: defect.as_f64(), limit: MASS_DEFECT_LIMIT });
        }
        Ok(data)
    }

    pub fn fields(&self) -> &Arc<SingularFields<T>> {
        &self.fields
    }

    pub fn beta(&self) -> BetaParam<T> {
        self.beta
    }

    pub fn len(&self) -> usize {
        self.g.len()
    }

    pub fn is_empty(&self) -> bool {
        self.g.is_empty()
    }

    /// Cell-averaged `g_β`.
    pub fn g(&self) -> &[T] {
        &self.g
    }

    /// `v2 + β v3 - v1` at nodes (`+inf` on poles, `-inf` on zeros).
    pub fn log_weight(&self) -> &[T] {
        &self.shift
    }

    pub fn k_beta(&self, i: usize) -> T {
        (self.beta.value() * self.fields.v3[i]).exp()
    }

    pub fn u0(&self, i: usize) -> T {
        -self.fields.v1[i] + self.fields.v2[i] + self.beta.value() * self.fields.v3[i]
    }

    /// Discrete `∫ g_β`.
    pub fn mass(&self) -> T {
        self.mass
    }

    /// `2π (2(N - M) - β)`.
    pub fn expected_mass(&self) -> T {
        T::TAU() * (T::lit(2.0 * self.fields.degree as f64) - self.beta.value())
    }

    pub fn relative_mass_defect(&self) -> T {
        let e = self.expected_mass();
        ((self.mass - e) / e).abs()
    }

    /// Test hook: flips the sign of `g_β`, breaking the mass identity.
    #[doc(hidden)]
    pub fn inject_g_sign_error(&mut self) {
        self.g.iter_mut().for_each(|g| *g = -*g);
        self.mass = -self.mass;
    }
}

/// `max |v3 + ln|x| + c0| |x|` over nodes with `|x| >= 2 r0`; `None` if no node qualifies.
pub fn check_v3_farfield<T: Scalar, M: Mesh<T>>(fields: &SingularFields<T>, mesh: &M) -> Option<T> {
    let limit = T::lit(2.0) * fields.r0;
    mesh.points()
        .iter()
        .zip(&fields.v3)
        .filter_map(|(p, &v3)| {
            let r = p[0].hypot(p[1]);
            (r >= limit).then(|| (v3 + r.ln() + fields.c0).abs() * r)
        })
        .fold(None, |acc, x| Some(acc.map_or(x, |a: T| a.max(x))))
}

/// `max_{|x| >= 2 r0} |v3 + ln|x||`, the measured far-field constant.
pub fn measured_c1<T: Scalar, M: Mesh<T>>(fields: &SingularFields<T>, mesh: &M) -> T {
    let limit = T::lit(2.0) * fields.r0;
    mesh.points()
        .iter()
        .zip(&fields.v3)
        .filter(|(p, _)| p[0].hypot(p[1]) >= limit)
        .map(|(p, &v3)| (v3 + p[0].hypot(p[1]).ln()).abs())
        .fold(T::zero(), T::max)
}
