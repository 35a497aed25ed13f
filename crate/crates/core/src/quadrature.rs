//! One-dimensional quadrature: Gauss-Legendre rules and adaptive Gauss-Kronrod.

use crate::scalar::Scalar;

/// Nodes and weights of the `n`-point Gauss-Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 1 { z } else { p1 };
            let pm1 = if n == 1 { 1.0 } else { p0 };
            dp = nf * (z * p - pm1) / (z * z - 1.0);
            let dz = p / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        if n == 1 {
            z = 0.0;
            dp = 1.0;
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// A fixed Gauss-Legendre rule mapped onto arbitrary intervals.
#[derive(Debug, Clone)]
pub struct GaussLegendre<T> {
    x: Vec<T>,
    w: Vec<T>,
}

impl<T: Scalar> GaussLegendre<T> {
    pub fn new(n: usize) -> Self {
        let (x, w) = gauss_legendre(n);
        Self { x: x.into_iter().map(T::lit).collect(), w: w.into_iter().map(T::lit).collect() }
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Nodes and weights for `[a, b]`.
    pub fn on(&self, a: T, b: T) -> impl Iterator<Item = (T, T)> + '_ {
        let half = (b - a) * T::lit(0.5);
        let mid = (a + b) * T::lit(0.5);
        self.x.iter().zip(&self.w).map(move |(&x, &w)| (mid + half * x, half * w))
    }

    pub fn integrate<F: FnMut(T) -> T>(&self, a: T, b: T, mut f: F) -> T {
        self.on(a, b).map(|(x, w)| w * f(x)).sum()
    }

    /// Integrates over `[a, b]` split at the given interior points.
    pub fn integrate_split<F: FnMut(T) -> T>(&self, a: T, b: T, breaks: &[T], mut f: F) -> T {
        let mut pts: Vec<T> = breaks.iter().copied().filter(|&t| t > a && t < b).collect();
        pts.sort_by(|p, q| p.partial_cmp(q).unwrap());
        let mut lo = a;
        let mut acc = T::zero();
        for hi in pts.into_iter().chain(std::iter::once(b)) {
            acc += self.integrate(lo, hi, &mut f);
            lo = hi;
        }
        acc
    }
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_0,
];
const WG: [f64; 4] =
    [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

fn gk15<T: Scalar, F: FnMut(T) -> T>(f: &mut F, a: T, b: T) -> (T, T) {
    let half = (b - a) * T::lit(0.5);
    let mid = (a + b) * T::lit(0.5);
    let fc = f(mid);
    let mut kron = fc * T::lit(WGK[7]);
    let mut gauss = fc * T::lit(WG[3]);
    for j in 0..7 {
        let dx = half * T::lit(XGK[j]);
        let s = f(mid - dx) + f(mid + dx);
        kron += s * T::lit(WGK[j]);
        if j % 2 == 1 {
            gauss += s * T::lit(WG[j / 2]);
        }
    }
    (kron * half, ((kron - gauss) * half).abs())
}

/// Outcome of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral<T> {
    pub value: T,
    pub error: T,
    pub evaluations: usize,
}

/// Adaptive 15-point Gauss-Kronrod integration to absolute tolerance `tol`.
///
/// Interval bisection stops at depth 50; the returned error estimate then
/// exceeds `tol` and the caller decides what to do with it.
pub fn integrate_adaptive<T: Scalar, F: FnMut(T) -> T>(mut f: F, a: T, b: T, tol: T) -> Integral<T> {
    let mut stack = vec![(a, b, 0u32, tol)];
    let mut value = T::zero();
    let mut error = T::zero();
    let mut evaluations = 0;
    while let Some((lo, hi, depth, tol_here)) = stack.pop() {
        let (v, e) = gk15(&mut f, lo, hi);
        evaluations += 15;
        let floor = T::epsilon() * T::lit(50.0) * v.abs();
        if e <= tol_here || e <= floor || depth >= 50 {
            value += v;
            error += e;
        } else {
            let mid = (lo + hi) * T::lit(0.5);
            let t = tol_here * T::lit(0.5);
            stack.push((mid, hi, depth + 1, t));
            stack.push((lo, mid, depth + 1, t));
        }
    }
    Integral { value, error, evaluations }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_rule_is_exact_to_degree_2n_minus_1() {
        for n in 1..12 {
            let gl = GaussLegendre::<f64>::new(n);
            for deg in 0..(2 * n) {
                let got = gl.integrate(0.0, 2.0, |x| x.powi(deg as i32));
                let exact = 2f64.powi(deg as i32 + 1) / (deg as f64 + 1.0);
                assert!((got - exact).abs() < 1e-12 * exact.max(1.0), "n={n} deg={deg}");
            }
        }
    }

    #[test]
    fn legendre_weights_sum_to_two() {
        let (_, w) = gauss_legendre(64);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-13);
    }

    #[test]
    fn adaptive_handles_log_singularity() {
        // -int_0^1 ln x dx = 1
        let r = integrate_adaptive(|x: f64| -x.ln(), 0.0, 1.0, 1e-13);
        assert!((r.value - 1.0).abs() < 1e-12, "{}", r.value);
    }

    #[test]
    fn adaptive_smooth_integrand() {
        let r = integrate_adaptive(|x: f64| x.sin(), 0.0, std::f64::consts::PI, 1e-14);
        assert!((r.value - 2.0).abs() < 1e-13);
        assert!(r.error < 1e-13);
    }

    #[test]
    fn split_integration_over_kink() {
        let gl = GaussLegendre::<f64>::new(4);
        let v = gl.integrate_split(-1.0, 2.0, &[0.0], |x| x.abs());
        assert!((v - 2.5).abs() < 1e-14);
    }
}
