//! The cutoff profile `rho`, the bump `eta0` and the radial potential `v3`.

use crate::error::ProfileError;
use crate::quadrature::integrate_adaptive;
use crate::scalar::Scalar;

/// Monomial coefficients of the quintic Hermite basis on `[0, 1]`.
const H0: [f64; 6] = [1.0, 0.0, 0.0, -10.0, 15.0, -6.0];
const H1: [f64; 6] = [0.0, 1.0, 0.0, -6.0, 8.0, -3.0];
const H2: [f64; 6] = [0.0, 0.0, 0.5, -1.5, 1.5, -0.5];

/// Samples used for the monotonicity check of the blend.
pub const MONOTONE_SAMPLES: usize = 10_000;

/// `rho(t)`: `ln t` on `(0, 1/2]`, `0` on `[1, inf)`, and on `(1/2, 1)` the
/// quintic matching value, slope and curvature at both ends.
#[derive(Debug, Clone, PartialEq)]
pub struct CutoffProfile<T> {
    /// Coefficients in `s = 2t - 1`.
    coef: [T; 6],
    min_slope: T,
}

/// Value and first two derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet<T> {
    pub value: T,
    pub d1: T,
    pub d2: T,
}

impl<T: Scalar> CutoffProfile<T> {
    /// Builds the blend and checks it is increasing on `MONOTONE_SAMPLES` points.
    pub fn new() -> Result<Self, ProfileError> {
        let h = 0.5;
        let (y0, y1, y2) = (0.5f64.ln(), 2.0, -4.0);
        let mut coef = [0.0f64; 6];
        for k in 0..6 {
            coef[k] = y0 * H0[k] + h * y1 * H1[k] + h * h * y2 * H2[k];
        }
        // the slope dips to ~2e-7 near t = 1, so the check runs in f64
        let exact = CutoffProfile { coef, min_slope: 0.0 };
        let mut min_slope = f64::INFINITY;
        for i in 1..MONOTONE_SAMPLES {
            let t = 0.5 + 0.5 * i as f64 / MONOTONE_SAMPLES as f64;
            min_slope = min_slope.min(exact.blend(t).d1);
        }
        if !(min_slope > 0.0) {
            return Err(ProfileError::NotMonotone(min_slope));
        }
        Ok(Self { coef: coef.map(T::lit), min_slope: T::lit(min_slope) })
    }

    /// Smallest sampled slope on `(1/2, 1)`.
    pub fn min_blend_slope(&self) -> T {
        self.min_slope
    }

    /// Coefficients of the blend as a polynomial in `s = 2t - 1`.
    pub fn blend_coefficients(&self) -> [T; 6] {
        self.coef
    }

    fn blend(&self, t: T) -> Jet<T> {
        let s = T::lit(2.0) * t - T::one();
        let c = &self.coef;
        let mut v = c[5];
        let mut d1 = T::lit(5.0) * c[5];
        let mut d2 = T::lit(20.0) * c[5];
        for k in (0..5).rev() {
            v = v * s + c[k];
        }
        for k in (1..5).rev() {
            d1 = d1 * s + T::of_usize(k) * c[k];
        }
        for k in (2..5).rev() {
            d2 = d2 * s + T::of_usize(k * (k - 1)) * c[k];
        }
        Jet { value: v, d1: T::lit(2.0) * d1, d2: T::lit(4.0) * d2 }
    }

    /// Value, first and second derivative at `t > 0`.
    pub fn eval(&self, t: T) -> Result<Jet<T>, ProfileError> {
        if !(t > T::zero()) {
            return Err(ProfileError::Domain(t.as_f64()));
        }
        Ok(self.eval_unchecked(t))
    }

    /// As [`eval`](Self::eval) without the domain check; `t = 0` gives `-inf`.
    pub fn eval_unchecked(&self, t: T) -> Jet<T> {
        if t <= T::lit(0.5) {
            Jet { value: t.ln(), d1: t.recip(), d2: -(t * t).recip() }
        } else if t >= T::one() {
            Jet { value: T::zero(), d1: T::zero(), d2: T::zero() }
        } else {
            self.blend(t)
        }
    }

    pub fn value(&self, t: T) -> T {
        self.eval_unchecked(t).value
    }

    /// `rho'' + rho'/t`, the radial Laplacian in the scaled variable; zero off `(1/2, 1)`.
    pub fn radial_laplacian(&self, t: T) -> T {
        if t <= T::lit(0.5) || t >= T::one() {
            return T::zero();
        }
        let j = self.blend(t);
        j.d2 + j.d1 / t
    }
}

/// Cells of the `m`, `c` tables on `[0, 1]`.
const TABLE_CELLS: usize = 2048;

/// The bump `eta0(r) = A exp(-1/(1 - r^2))` on `[0, 1)`, zero beyond, with
/// `int_0^1 eta0 r dr = 1`, plus tables for the radial potential `v3`.
#[derive(Debug, Clone, PartialEq)]
pub struct BumpProfile<T> {
    amplitude: T,
    c0: T,
    /// `m(r) = int_0^r eta0 s ds` at `r_j = j / TABLE_CELLS`.
    mass: Vec<T>,
    /// `c(r) = int_0^r (-ln s) eta0 s ds` at the same nodes.
    log_moment: Vec<T>,
}

/// Below this radius `m` and `v3` come from their Taylor series.
const SMALL_R: f64 = 1.0 / 64.0;

fn bump_shape(r: f64) -> f64 {
    if r >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - r * r)).exp()
    }
}

impl<T: Scalar> BumpProfile<T> {
    pub fn new() -> Self {
        let norm = integrate_adaptive(|r: f64| bump_shape(r) * r, 0.0, 1.0, 1e-17).value;
        let a = 1.0 / norm;
        let eta = |r: f64| a * bump_shape(r);
        let c0 = integrate_adaptive(|r: f64| if r > 0.0 { -r.ln() * eta(r) * r } else { 0.0 }, 0.0, 1.0, 1e-17).value;

        let mut mass = Vec::with_capacity(TABLE_CELLS + 1);
        let mut log_moment = Vec::with_capacity(TABLE_CELLS + 1);
        let (mut m, mut c) = (0.0f64, 0.0f64);
        mass.push(T::zero());
        log_moment.push(T::zero());
        for j in 0..TABLE_CELLS {
            let lo = j as f64 / TABLE_CELLS as f64;
            let hi = (j + 1) as f64 / TABLE_CELLS as f64;
            m += integrate_adaptive(|r: f64| eta(r) * r, lo, hi, 1e-19).value;
            c += integrate_adaptive(|r: f64| if r > 0.0 { -r.ln() * eta(r) * r } else { 0.0 }, lo, hi, 1e-19).value;
            mass.push(T::lit(m));
            log_moment.push(T::lit(c));
        }
        Self { amplitude: T::lit(a), c0: T::lit(c0), mass, log_moment }
    }

    /// Normalizing constant `A`.
    pub fn amplitude(&self) -> T {
        self.amplitude
    }

    /// `c0 = int_0^1 (-ln r) eta0(r) r dr`.
    pub fn c0(&self) -> T {
        self.c0
    }

    pub fn eta0(&self, r: T) -> T {
        if r >= T::one() {
            T::zero()
        } else {
            self.amplitude * (-(T::one() - r * r).recip()).exp()
        }
    }

    fn hermite(&self, table: &[T], deriv: impl Fn(T) -> T, r: T) -> T {
        let n = TABLE_CELLS;
        let x = r * T::of_usize(n);
        let j = x.floor().to_usize().unwrap_or(0).min(n - 1);
        let h = T::of_usize(n).recip();
        let s = x - T::of_usize(j);
        let r0 = T::of_usize(j) * h;
        let r1 = T::of_usize(j + 1) * h;
        let (y0, y1) = (table[j], table[j + 1]);
        let (d0, d1) = (deriv(r0) * h, deriv(r1) * h);
        let s2 = s * s;
        let s3 = s2 * s;
        let two = T::lit(2.0);
        let three = T::lit(3.0);
        y0 * (two * s3 - three * s2 + T::one())
            + d0 * (s3 - two * s2 + s)
            + y1 * (three * s2 - two * s3)
            + d1 * (s3 - s2)
    }

    /// `e^{-x/(1-x)} = 1 - x - x^2/2 - x^3/6 + O(x^4)` integrated against
    /// `u^{2k+1}` (weight `p = 1`) or `u^{2k+1} ln(1/u)` (`p = 2`) on `[0, 1]`.
    fn small_r_series(&self, r: T, p: i32) -> T {
        let x = r * r;
        let coef = [1.0, -1.0, -0.5, -1.0 / 6.0];
        let mut acc = T::zero();
        for (k, &c) in coef.iter().enumerate().rev() {
            acc = acc * x + T::lit(c / ((2 * k + 2) as f64).powi(p));
        }
        self.amplitude * T::lit((-1.0f64).exp()) * x * acc
    }

    /// `m(r) = int_0^r eta0(s) s ds`, equal to 1 for `r >= 1`.
    pub fn enclosed_mass(&self, r: T) -> T {
        if r >= T::one() {
            return T::one();
        }
        if r < T::lit(SMALL_R) {
            return self.small_r_series(r.max(T::zero()), 1);
        }
        self.hermite(&self.mass, |s| self.eta0(s) * s, r.max(T::zero()))
    }

    fn log_moment(&self, r: T) -> T {
        if r >= T::one() {
            return self.c0;
        }
        let d = |s: T| if s > T::zero() { -s.ln() * self.eta0(s) * s } else { T::zero() };
        self.hermite(&self.log_moment, d, r.max(T::zero()))
    }

    /// `v3(r) = -m(r) ln r - c(r)`; exactly `-ln r - c0` for `r >= 1`.
    pub fn v3(&self, r: T) -> T {
        if r >= T::one() {
            return -r.ln() - self.c0;
        }
        if r < T::lit(SMALL_R) {
            return -self.small_r_series(r.max(T::zero()), 2);
        }
        -self.enclosed_mass(r) * r.ln() - self.log_moment(r)
    }

    /// `v3'(r) = -m(r) / r`.
    pub fn v3_prime(&self, r: T) -> T {
        if r <= T::zero() {
            return T::zero();
        }
        -self.enclosed_mass(r) / r
    }
}

impl<T: Scalar> Default for BumpProfile<T> {
    fn default() -> Self {
        Self::new()
    }
}
