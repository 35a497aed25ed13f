//! Exact radial solution beyond the truncation radius.
//!
//! For `|x| >= R > r0` the singular data reduce to `v1 = v2 = 0` and
//! `v3 = -ln r - c0`, and the remainder is far below the saturation of the
//! logistic, so the equation becomes `Δv = 4 a r^{-β} e^v` with
//! `a = e^{-β c0}`. In `t = ln r` the shifted field `φ = v + ln a - κ t`,
//! `κ = β - 2`, solves `φ'' = 4 e^φ`, whose decaying branch is known in
//! closed form. Matching it to `v(R)` gives the outgoing flux and the limit
//! `b = lim v` without truncating the domain.

use crate::scalar::Scalar;

/// Exterior Liouville branch attached to the outer circle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Exterior<T> {
    kappa: T,
    log_a: T,
    log_r: T,
}

impl<T: Scalar> Exterior<T> {
    pub fn new(beta: T, c0: T, r_max: T) -> Self {
        Self { kappa: beta - T::lit(2.0), log_a: -beta * c0, log_r: r_max.ln() }
    }

    pub fn kappa(&self) -> T {
        self.kappa
    }

    /// `U = φ(ln R)` for boundary value `v`.
    pub fn shifted(&self, v: T) -> T {
        v + self.log_a - self.kappa * self.log_r
    }

    fn root(&self, u: T) -> T {
        (self.kappa * self.kappa + T::lit(8.0) * u.exp()).sqrt()
    }

    /// Mass `∫_{|x|>R} 4 a r^{-β} e^v` carried by the exterior solution.
    pub fn mass(&self, v: T) -> T {
        let u = self.shifted(v);
        let s = self.root(u);
        T::TAU() * T::lit(8.0) * u.exp() / (s + self.kappa)
    }

    /// `d mass / d v`.
    pub fn mass_slope(&self, v: T) -> T {
        let u = self.shifted(v);
        T::TAU() * T::lit(4.0) * u.exp() / self.root(u)
    }

    /// Potential whose derivative in `v` is [`Self::mass`].
    pub fn energy(&self, v: T) -> T {
        let s = self.root(self.shifted(v));
        T::TAU() * (T::lit(2.0) * s - T::lit(2.0) * self.kappa * (s + self.kappa).ln())
    }

    /// `lim_{r→∞} v` along the exterior branch.
    pub fn far_limit(&self, v: T) -> T {
        let u = self.shifted(v);
        let k = T::lit(0.5) * self.kappa;
        let x = (k * (-T::lit(0.5) * u).exp() / T::SQRT_2()).asinh();
        v + T::lit(2.0) * (-(-T::lit(2.0) * x).exp_m1()).ln()
    }

    /// Exterior field at radius `r >= R`.
    pub fn field(&self, v: T, r: T) -> T {
        let u = self.shifted(v);
        let k = T::lit(0.5) * self.kappa;
        let tau = (k * (-T::lit(0.5) * u).exp() / T::SQRT_2()).asinh() / k;
        let t = r.ln();
        let arg = k * (t - self.log_r + tau);
        // φ = ln(κ² / (8 sinh²(k (t - t*))))
        let phi = (self.kappa * self.kappa / T::lit(8.0)).ln() - T::lit(2.0) * arg.sinh().ln();
        phi - self.log_a + self.kappa * t
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ext() -> Exterior<f64> {
        Exterior::new(3.0, 0.868, 1e3)
    }

    #[test]
    fn field_matches_boundary_value_and_limit() {
        let e = ext();
        for v in [-8.0, -2.0, 0.0, 3.0] {
            assert!((e.field(v, 1e3) - v).abs() < 1e-10);
            let far = e.field(v, 1e12);
            assert!((far - e.far_limit(v)).abs() < 1e-6, "{far} {}", e.far_limit(v));
        }
    }

    #[test]
    fn field_solves_the_exterior_equation() {
        let e = ext();
        let a = (-3.0f64 * 0.868).exp();
        let v = 1.0;
        for r in [2e3, 1e4, 1e5] {
            let t = f64::ln(r);
            let h = 1e-2;
            let w = |t: f64| e.field(v, t.exp());
            let vtt =
                (-w(t + 2.0 * h) + 16.0 * w(t + h) - 30.0 * w(t) + 16.0 * w(t - h) - w(t - 2.0 * h)) / (12.0 * h * h);
            let rhs = r * r * 4.0 * a * r.powf(-3.0) * w(t).exp();
            assert!((vtt - rhs).abs() < 1e-4 * rhs.max(1e-12), "{vtt} {rhs}");
        }
    }

    #[test]
    fn mass_is_the_flux_deficit() {
        // mass = -2π r v_r at R since v_r -> 0 at infinity
        let e = ext();
        let v = 0.5;
        let r = 1e3;
        let h = 1e-4 * r;
        let vr = (e.field(v, r + h) - e.field(v, r)) / h;
        let vr2 = (e.field(v, r + 2.0 * h) - e.field(v, r)) / (2.0 * h);
        let slope = 2.0 * vr - vr2;
        assert!((-std::f64::consts::TAU * r * slope - e.mass(v)).abs() < 1e-6 * e.mass(v));
    }

    #[test]
    fn derivatives_are_consistent() {
        let e = ext();
        let h = 1e-6;
        for v in [-5.0, 0.0, 4.0] {
            let dm = (e.mass(v + h) - e.mass(v - h)) / (2.0 * h);
            assert!((dm - e.mass_slope(v)).abs() < 1e-6 * e.mass_slope(v));
            // the energy is O(1) while its slope can be 1e-5: a wider step avoids cancellation
            let k = 1e-3;
            let de = (8.0 * (e.energy(v + k) - e.energy(v - k)) - (e.energy(v + 2.0 * k) - e.energy(v - 2.0 * k)))
                / (12.0 * k);
            assert!((de - e.mass(v)).abs() < 1e-6 * e.mass(v).max(1e-8), "v = {v}: {de} vs {}", e.mass(v));
        }
    }

    #[test]
    fn far_limit_approaches_boundary_value_for_small_mass() {
        let e = ext();
        // tiny exterior mass: v is already at its limit
        assert!((e.far_limit(-40.0) + 40.0).abs() < 1e-12);
        assert!(e.far_limit(2.0) < 2.0);
    }
}
