use crate::grid::Mesh;
use crate::scalar::Scalar;
use crate::singular::SingularData;

use super::exterior::Exterior;

/// The discrete operator `N(v) = A v + V (f(v) - g) + ω T(v)`.
///
/// `A` is the finite-volume stiffness (so `A v ≈ -Δv · V`), `f = 4σ(v + ln w)`
/// with the log-weight `ln w = v2 + β v3 - v1`, and `T` the mass the exterior
/// branch carries past the outer circle. Zeros of `N` are discrete solutions,
/// `N >= 0` marks super-solutions and `N <= 0` sub-solutions.
#[derive(Debug, Clone)]
pub struct Problem<'a, T, M> {
    mesh: &'a M,
    data: &'a SingularData<T>,
    exterior: Exterior<T>,
    /// Per-node share of the outer circle (zero off the boundary).
    omega: Vec<T>,
}

impl<'a, T: Scalar, M: Mesh<T>> Problem<'a, T, M> {
    pub fn new(mesh: &'a M, data: &'a SingularData<T>) -> Self {
        let exterior = Exterior::new(data.beta().value(), data.fields().c0, mesh.outer_radius());
        let mut omega = vec![T::zero(); mesh.len()];
        for &(i, w) in mesh.boundary() {
            omega[i] += w;
        }
        Self { mesh, data, exterior, omega }
    }

    pub fn mesh(&self) -> &'a M {
        self.mesh
    }

    pub fn data(&self) -> &'a SingularData<T> {
        self.data
    }

    pub fn exterior(&self) -> &Exterior<T> {
        &self.exterior
    }

    pub fn len(&self) -> usize {
        self.mesh.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mesh.is_empty()
    }

    pub fn omega(&self) -> &[T] {
        &self.omega
    }

    /// `f(x_i, v) = 4 K e^{v2 + v} / (e^{v1} + K e^{v2 + v})`.
    #[inline]
    pub fn f(&self, i: usize, v: T) -> T {
        T::lit(4.0) * (v + self.data.log_weight()[i]).sigmoid()
    }

    /// `∂f/∂v = f (1 - f/4)`.
    #[inline]
    pub fn df(&self, i: usize, v: T) -> T {
        let s = v + self.data.log_weight()[i];
        T::lit(4.0) * s.sigmoid() * (-s).sigmoid()
    }

    /// `sup ∂f/∂v` over `[lo, hi]`; the derivative peaks at 1 where the
    /// exponent `v + ln w` vanishes.
    pub fn df_sup(&self, i: usize, lo: T, hi: T) -> T {
        let w = self.data.log_weight()[i];
        if lo + w <= T::zero() && hi + w >= T::zero() {
            T::one()
        } else {
            self.df(i, lo).max(self.df(i, hi))
        }
    }

    /// Nodal nonlinear part `V (f - g) + ω T`.
    pub fn nonlinear(&self, v: &[T], out: &mut [T]) {
        let vol = self.mesh.volumes();
        let g = self.data.g();
        for i in 0..v.len() {
            out[i] = vol[i] * (self.f(i, v[i]) - g[i]);
        }
        for &(i, w) in self.mesh.boundary() {
            out[i] += w * self.exterior.mass(v[i]);
        }
    }

    /// Upper bound of `∂/∂v` of the nodal nonlinear part on `[lo, hi]`.
    pub fn slope_sup(&self, i: usize, lo: T, hi: T) -> T {
        let mut s = self.mesh.volumes()[i] * self.df_sup(i, lo, hi);
        if self.omega[i] > T::zero() {
            s += self.omega[i] * self.exterior.mass_slope(hi);
        }
        s
    }

    /// Diagonal of the Jacobian of `N`, excluding `A`.
    pub fn jacobian_shift(&self, v: &[T]) -> Vec<T> {
        let vol = self.mesh.volumes();
        (0..v.len())
            .map(|i| {
                let mut d = vol[i] * self.df(i, v[i]);
                if self.omega[i] > T::zero() {
                    d += self.omega[i] * self.exterior.mass_slope(v[i]);
                }
                d
            })
            .collect()
    }

    /// `N(v)`.
    pub fn residual(&self, v: &[T], out: &mut [T]) {
        self.mesh.apply(v, out);
        let mut nl = vec![T::zero(); v.len()];
        self.nonlinear(v, &mut nl);
        for (o, n) in out.iter_mut().zip(nl) {
            *o += n;
        }
    }

    /// `max_i |N_i| / V_i`, the pointwise residual of `Δv = f - g`.
    pub fn residual_norm(&self, v: &[T]) -> T {
        let mut r = vec![T::zero(); v.len()];
        self.residual(v, &mut r);
        self.scaled_sup(&r)
    }

    pub fn scaled_sup(&self, r: &[T]) -> T {
        r.iter().zip(self.mesh.volumes()).map(|(&x, &vol)| (x / vol).abs()).fold(T::zero(), T::max)
    }

    /// `sqrt(Σ N_i² / V_i)`, the merit function for line searches.
    pub fn merit(&self, r: &[T]) -> T {
        r.iter().zip(self.mesh.volumes()).map(|(&x, &vol)| x * x / vol).sum::<T>().sqrt()
    }

    /// Per-node magnitude of the terms in `N`, for roundoff-aware comparisons.
    pub fn scale(&self, v: &[T]) -> Vec<T> {
        let mut s = vec![T::zero(); v.len()];
        self.mesh.apply_abs(v, &mut s);
        let vol = self.mesh.volumes();
        let g = self.data.g();
        for i in 0..v.len() {
            s[i] += vol[i] * (self.f(i, v[i]) + g[i].abs());
        }
        for &(i, w) in self.mesh.boundary() {
            s[i] += w * self.exterior.mass(v[i]);
        }
        s
    }

    /// Residual level below which roundoff dominates.
    pub fn roundoff_floor(&self, v: &[T]) -> T {
        let s = self.scale(v);
        T::lit(64.0) * T::epsilon() * self.scaled_sup(&s)
    }

    /// `Σ V f`, the mass inside the computational disk.
    pub fn interior_mass(&self, v: &[T]) -> T {
        v.iter().zip(self.mesh.volumes()).enumerate().map(|(i, (&x, &vol))| vol * self.f(i, x)).sum()
    }

    /// Mass carried by the exterior branch.
    pub fn exterior_mass(&self, v: &[T]) -> T {
        self.mesh.boundary().iter().map(|&(i, w)| w * self.exterior.mass(v[i])).sum()
    }

    /// `Σ V 4 e^u / (1 + e^u)` with `u = u0 + v` recomputed from the decomposition.
    pub fn flux_diagnostic(&self, v: &[T]) -> T {
        let vol = self.mesh.volumes();
        (0..v.len()).map(|i| vol[i] * T::lit(4.0) * (self.data.u0(i) + v[i]).sigmoid()).sum()
    }

    /// `lim v` at infinity through the exterior branch, averaged over the ring.
    pub fn far_limit(&self, v: &[T]) -> T {
        let (num, den) = self
            .mesh
            .boundary()
            .iter()
            .fold((T::zero(), T::zero()), |(n, d), &(i, w)| (n + w * self.exterior.far_limit(v[i]), d + w));
        num / den
    }

    /// Discrete energy whose gradient is `N`:
    /// `½ vᵀA v + Σ V (4 ln(e^{v1} + K e^{v2 + v}) - g v) + Σ ω E(v)`.
    pub fn energy(&self, v: &[T]) -> T {
        let mut av = vec![T::zero(); v.len()];
        self.mesh.apply(v, &mut av);
        let quad: T = v.iter().zip(&av).map(|(&a, &b)| a * b).sum::<T>() * T::lit(0.5);
        let fields = self.data.fields();
        let beta = self.data.beta().value();
        let vol = self.mesh.volumes();
        let g = self.data.g();
        let bulk: T = (0..v.len())
            .map(|i| {
                let lse = fields.v1[i].log_add_exp(beta * fields.v3[i] + fields.v2[i] + v[i]);
                vol[i] * (T::lit(4.0) * lse - g[i] * v[i])
            })
            .sum();
        let edge: T = self.mesh.boundary().iter().map(|&(i, w)| w * self.exterior.energy(v[i])).sum();
        quad + bulk + edge
    }

    /// Mass constraint defect `∫ f - μ_β` including the exterior.
    pub fn mass_defect(&self, v: &[T]) -> T {
        self.interior_mass(v) + self.exterior_mass(v) - self.data.expected_mass()
    }
}
