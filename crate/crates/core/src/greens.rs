//! Free-space convolution with `Γ(x) = -ln|x| / 2π` and numerical checks of
//! the two decay estimates for zero-mean sources.
//!
//! A source is piecewise constant on axis-aligned square cells. Cells close to
//! a target are integrated exactly with the antiderivative of `ln|x|` over a
//! rectangle; distant cells use the midpoint rule.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::asymptotics::linear_fit;
use crate::error::AnalysisError;
use crate::scalar::Scalar;

/// Cells closer than this many side lengths are integrated exactly.
const NEAR_FIELD: f64 = 3.0;

/// Midpoint subsamples per axis when a cell average is taken.
const SUBSAMPLES: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cell<T> {
    pub center: [T; 2],
    pub side: T,
    pub value: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Support {
    /// `F = 0` outside the ball of this radius.
    Compact { radius: f64 },
    /// `|F(x)| <= c2 |x|^{-β}` far out.
    Tail { beta: f64, c2: f64 },
}

/// Samples of `F` with cached moments.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceField<T> {
    cells: Vec<Cell<T>>,
    support: Support,
    mass: T,
    first_moment: [T; 2],
    l1: T,
    sup: T,
}

/// `∫_0^x ∫_0^y ln|z| dz` for `x, y >= 0` (and the odd extension otherwise).
fn log_antiderivative<T: Scalar>(x: T, y: T) -> T {
    let half = T::lit(0.5);
    let r2 = x * x + y * y;
    if r2 == T::zero() {
        return T::zero();
    }
    let mut g = x * y * (r2.ln() - T::lit(3.0));
    if x != T::zero() {
        g += x * x * (y / x).atan();
    }
    if y != T::zero() {
        g += y * y * (x / y).atan();
    }
    half * g
}

/// `∫ ln|z - p| dz` over the rectangle `[x0, x1] × [y0, y1]`.
pub fn rectangle_log_integral<T: Scalar>(p: [T; 2], x0: T, x1: T, y0: T, y1: T) -> T {
    let (a0, a1, b0, b1) = (x0 - p[0], x1 - p[0], y0 - p[1], y1 - p[1]);
    log_antiderivative(a1, b1) - log_antiderivative(a0, b1) - log_antiderivative(a1, b0) + log_antiderivative(a0, b0)
}

/// `∫ ln|z|` over the square `[-a, a]²`.
pub fn centered_square_log_integral<T: Scalar>(a: T) -> T {
    let two = T::lit(2.0);
    two * a * a * (two * a.ln() + two.ln() - T::lit(3.0) + T::FRAC_PI_2())
}

impl<T: Scalar> SourceField<T> {
    pub fn from_cells(cells: Vec<Cell<T>>, support: Support) -> Self {
        let mut mass = T::zero();
        let mut first_moment = [T::zero(); 2];
        let mut l1 = T::zero();
        let mut sup = T::zero();
        for c in &cells {
            let w = c.side * c.side * c.value;
            mass += w;
            first_moment[0] += w * c.center[0];
            first_moment[1] += w * c.center[1];
            l1 += w.abs();
            sup = sup.max(c.value.abs());
        }
        Self { cells, support, mass, first_moment, l1, sup }
    }

    /// Cell averages of `f` on the uniform lattice of side `h` covering `[-half_width, half_width]²`.
    pub fn uniform(half_width: T, h: T, f: impl Fn([T; 2]) -> T + Sync, support: Support) -> Self {
        let n = (T::lit(2.0) * half_width / h).round().to_usize().unwrap_or(0).max(1);
        let h = T::lit(2.0) * half_width / T::of_usize(n);
        let cells = square_lattice(-half_width, n, h, &f);
        Self::from_cells(cells, support)
    }

    /// Nested square rings whose cell side doubles with each ring.
    ///
    /// The core `[-l0, l0]²` has cells of side `h0`; ring `k` covers
    /// `[-2^k l0, 2^k l0]² \ [-2^{k-1} l0, 2^{k-1} l0]²` with side `2^k h0`.
    /// `l0 / h0` must be an even integer.
    pub fn graded(l0: T, h0: T, rings: usize, f: impl Fn([T; 2]) -> T + Sync, support: Support) -> Self {
        let n = (T::lit(2.0) * l0 / h0).round().to_usize().unwrap_or(2).max(2) & !1;
        let h0 = T::lit(2.0) * l0 / T::of_usize(n);
        let mut cells = square_lattice(-l0, n, h0, &f);
        for k in 1..=rings {
            let scale = T::lit(2f64.powi(k as i32));
            let (l, h) = (l0 * scale, h0 * scale);
            let inner = n / 4;
            let ring: Vec<Cell<T>> = square_lattice(-l, n, h, &f)
                .into_iter()
                .enumerate()
                .filter(|(idx, _)| {
                    let (i, j) = (idx / n, idx % n);
                    !(i >= inner && i < n - inner && j >= inner && j < n - inner)
                })
                .map(|(_, c)| c)
                .collect();
            cells.extend(ring);
        }
        Self::from_cells(cells, support)
    }

    /// Seeded random compact source of zero mean supported in `B_radius`.
    ///
    /// A sum of four Gaussian bumps of random sign, width and centre plus
    /// small cellwise noise, restricted to cells inside the ball and then
    /// shifted there to zero mean.
    pub fn random_compact<R: Rng>(rng: &mut R, radius: f64, cells_per_radius: usize) -> Self {
        let bumps: Vec<([f64; 2], f64, f64)> = (0..4)
            .map(|_| {
                let r = 0.5 * radius * rng.gen::<f64>().sqrt();
                let th = std::f64::consts::TAU * rng.gen::<f64>();
                let w = radius * rng.gen_range(0.1..0.4);
                let s = if rng.gen::<bool>() { 1.0 } else { -1.0 } * rng.gen_range(0.5..2.0);
                ([r * th.cos(), r * th.sin()], w, s)
            })
            .collect();
        let n = 2 * cells_per_radius;
        let h = 2.0 * radius / n as f64;
        let reach = h * std::f64::consts::FRAC_1_SQRT_2;
        let mut cells = Vec::new();
        for i in 0..n {
            for j in 0..n {
                let c = [-radius + (i as f64 + 0.5) * h, -radius + (j as f64 + 0.5) * h];
                if c[0].hypot(c[1]) + reach > radius {
                    continue;
                }
                let mut v = 0.1 * rng.gen_range(-1.0..1.0);
                for &(b, w, s) in &bumps {
                    let d2 = (c[0] - b[0]).powi(2) + (c[1] - b[1]).powi(2);
                    v += s * (-d2 / (w * w)).exp();
                }
                cells.push(Cell { center: [T::lit(c[0]), T::lit(c[1])], side: T::lit(h), value: T::lit(v) });
            }
        }
        let area = T::lit(h * h) * T::of_usize(cells.len());
        let mean = cells.iter().map(|c| c.value).sum::<T>() * T::lit(h * h) / area;
        for c in cells.iter_mut() {
            c.value -= mean;
        }
        Self::from_cells(cells, Support::Compact { radius })
    }

    pub fn cells(&self) -> &[Cell<T>] {
        &self.cells
    }

    pub fn support(&self) -> Support {
        self.support
    }

    /// `∫ F`.
    pub fn mass(&self) -> T {
        self.mass
    }

    /// `∫ y F(y) dy`.
    pub fn first_moment(&self) -> [T; 2] {
        self.first_moment
    }

    pub fn l1(&self) -> T {
        self.l1
    }

    pub fn sup(&self) -> T {
        self.sup
    }

    /// Smallest `R` with every nonzero cell inside `B_R`.
    pub fn support_radius(&self) -> T {
        self.cells
            .iter()
            .filter(|c| c.value != T::zero())
            .map(|c| c.center[0].abs().hypot(c.center[1].abs()) + c.side * T::FRAC_1_SQRT_2())
            .fold(T::zero(), T::max)
    }

    /// `k F`.
    pub fn scaled(&self, k: T) -> Self {
        let cells = self.cells.iter().map(|c| Cell { value: c.value * k, ..*c }).collect();
        Self::from_cells(cells, self.support)
    }

    /// `a F + b G` on a shared set of cells.
    pub fn combine(&self, a: T, other: &Self, b: T) -> Result<Self, AnalysisError> {
        if self.cells.len() != other.cells.len()
            || self.cells.iter().zip(&other.cells).any(|(p, q)| p.center != q.center || p.side != q.side)
        {
            return Err(AnalysisError::Precondition("sources live on different cells".into()));
        }
        let cells =
            self.cells.iter().zip(&other.cells).map(|(p, q)| Cell { value: a * p.value + b * q.value, ..*p }).collect();
        Ok(Self::from_cells(cells, self.support))
    }
}

fn square_lattice<T: Scalar>(lo: T, n: usize, h: T, f: &(impl Fn([T; 2]) -> T + Sync)) -> Vec<Cell<T>> {
    let sub = T::of_usize(SUBSAMPLES);
    (0..n * n)
        .into_par_iter()
        .map(|idx| {
            let (i, j) = (idx / n, idx % n);
            let x0 = lo + T::of_usize(i) * h;
            let y0 = lo + T::of_usize(j) * h;
            let mut acc = T::zero();
            for a in 0..SUBSAMPLES {
                for b in 0..SUBSAMPLES {
                    let x = x0 + (T::of_usize(a) + T::lit(0.5)) * h / sub;
                    let y = y0 + (T::of_usize(b) + T::lit(0.5)) * h / sub;
                    acc += f([x, y]);
                }
            }
            let half = T::lit(0.5) * h;
            Cell { center: [x0 + half, y0 + half], side: h, value: acc / (sub * sub) }
        })
        .collect()
}

/// `Γ ∗ F` at each target, computed in parallel over targets with a fixed
/// summation order per target.
pub fn gamma_convolve<T: Scalar>(source: &SourceField<T>, targets: &[[T; 2]]) -> Vec<T> {
    let inv = -T::one() / T::TAU();
    targets
        .par_iter()
        .map(|&p| {
            let mut acc = T::zero();
            for c in &source.cells {
                if c.value == T::zero() {
                    continue;
                }
                let dx = c.center[0] - p[0];
                let dy = c.center[1] - p[1];
                let d = dx.hypot(dy);
                let integral = if d < T::lit(NEAR_FIELD) * c.side {
                    let half = T::lit(0.5) * c.side;
                    rectangle_log_integral(
                        p,
                        c.center[0] - half,
                        c.center[0] + half,
                        c.center[1] - half,
                        c.center[1] + half,
                    )
                } else {
                    c.side * c.side * d.ln()
                };
                acc += c.value * integral;
            }
            inv * acc
        })
        .collect()
}

/// Targets at the given radii, at angles spread by the golden angle.
pub fn spread_targets(radii: &[f64]) -> Vec<[f64; 2]> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    radii.iter().enumerate().map(|(k, &r)| [r * (golden * k as f64).cos(), r * (golden * k as f64).sin()]).collect()
}

/// One sampled point of a bound check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundSample {
    pub x: [f64; 2],
    pub radius: f64,
    pub value: f64,
    pub bound: f64,
    /// `|value| / bound`.
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lemma21Report {
    pub support_radius: f64,
    pub l1: f64,
    pub samples: Vec<BoundSample>,
    pub max_ratio: f64,
    /// Largest `|Γ ∗ F|` seen at the cell centres and the samples.
    pub sampled_sup: f64,
    /// `‖F‖_1 + R ln R ‖F‖_∞`, stated for `R >= e`.
    pub global_bound: Option<f64>,
    pub pass: bool,
}

/// Checks `|Γ ∗ F(x)| <= (R/|x|) ‖F‖_1` for `|x| > 4R` and, when `R >= e`,
/// `‖Γ ∗ F‖_∞ <= ‖F‖_1 + R ln R ‖F‖_∞` on the sampled points.
pub fn check_lemma21(source: &SourceField<f64>, targets: &[[f64; 2]]) -> Result<Lemma21Report, AnalysisError> {
    let l1 = source.l1();
    if source.mass().abs() > 1e-10 * l1 {
        return Err(AnalysisError::Precondition(format!(
            "source mean {:e} is not zero relative to its L1 norm {l1:e}",
            source.mass()
        )));
    }
    // Cells cut by the declared support circle stick out by up to half a
    // diagonal; the bound is checked with the radius that covers them.
    let radius = match source.support() {
        Support::Compact { radius } => radius.max(source.support_radius()),
        Support::Tail { .. } => return Err(AnalysisError::Precondition("compact support required".into())),
    };
    if let Some(t) = targets.iter().find(|t| t[0].hypot(t[1]) <= 4.0 * radius) {
        return Err(AnalysisError::Precondition(format!("target {t:?} is not beyond 4R = {}", 4.0 * radius)));
    }
    let values = gamma_convolve(source, targets);
    let samples: Vec<BoundSample> = targets
        .iter()
        .zip(&values)
        .map(|(&x, &value)| {
            let r = x[0].hypot(x[1]);
            let bound = radius / r * l1;
            let ratio = if bound > 0.0 { value.abs() / bound } else { 0.0 };
            BoundSample { x, radius: r, value, bound, ratio }
        })
        .collect();
    let max_ratio = samples.iter().map(|s| s.ratio).fold(0.0, f64::max);
    let centres: Vec<[f64; 2]> = source.cells().iter().filter(|c| c.value != 0.0).map(|c| c.center).collect();
    let interior = gamma_convolve(source, &centres);
    let sampled_sup = interior.iter().chain(&values).fold(0.0f64, |m, v| m.max(v.abs()));
    let global_bound = (radius >= std::f64::consts::E).then(|| l1 + radius * radius.ln() * source.sup());
    let pass = max_ratio <= 1.0 && global_bound.map_or(true, |g| sampled_sup <= g);
    Ok(Lemma21Report { support_radius: radius, l1, samples, max_ratio, sampled_sup, global_bound, pass })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lemma22Report {
    pub beta: f64,
    /// `(β - 2)/(β - 1)`.
    pub exponent: f64,
    /// `(|x|, |Γ ∗ F(x)| |x|^{exponent})`.
    pub envelope: Vec<(f64, f64)>,
    /// Largest envelope value.
    pub envelope_constant: f64,
    /// Log-log slope of the envelope.
    pub envelope_slope: f64,
    /// Log-log slope of `|Γ ∗ F|` itself.
    pub decay_slope: f64,
    pub pass: bool,
}

/// Slack on the envelope slope.
pub const ENVELOPE_SLACK: f64 = 0.05;

/// Checks that `|Γ ∗ F(x)| |x|^{(β-2)/(β-1)}` shows no growth over the targets.
pub fn check_lemma22(source: &SourceField<f64>, targets: &[[f64; 2]]) -> Result<Lemma22Report, AnalysisError> {
    let beta = match source.support() {
        Support::Tail { beta, .. } => beta,
        Support::Compact { .. } => {
            return Err(AnalysisError::Precondition("tail constants (c2, beta) required".into()))
        }
    };
    if !(beta > 2.0) {
        return Err(AnalysisError::Precondition(format!("beta = {beta} is inadmissible, need beta > 2")));
    }
    if source.mass().abs() > 1e-10 * source.l1() {
        return Err(AnalysisError::Precondition(format!("source mean {:e} is not zero", source.mass())));
    }
    if targets.len() < 3 {
        return Err(AnalysisError::Precondition("need at least three targets".into()));
    }
    let exponent = (beta - 2.0) / (beta - 1.0);
    let values = gamma_convolve(source, targets);
    let mut envelope: Vec<(f64, f64)> = targets
        .iter()
        .zip(&values)
        .map(|(x, v)| {
            let r = x[0].hypot(x[1]);
            (r, v.abs() * r.powf(exponent))
        })
        .collect();
    envelope.sort_by(|a, b| a.0.total_cmp(&b.0));
    if envelope.iter().any(|e| !(e.1 > 0.0)) {
        return Err(AnalysisError::BelowNoiseFloor { floor: 0.0 });
    }
    let xs: Vec<f64> = envelope.iter().map(|e| e.0.ln()).collect();
    let ys: Vec<f64> = envelope.iter().map(|e| e.1.ln()).collect();
    let envelope_slope = linear_fit(&xs, &ys).0;
    let decay_slope = envelope_slope - exponent;
    let envelope_constant = envelope.iter().map(|e| e.1).fold(0.0, f64::max);
    Ok(Lemma22Report {
        beta,
        exponent,
        envelope,
        envelope_constant,
        envelope_slope,
        decay_slope,
        pass: envelope_slope <= ENVELOPE_SLACK,
    })
}

/// The radial zero-mean source `a χ_{|x|<1} + |x|^{-β} χ_{|x|>=1}` with `a = -2/(β-2)`.
pub fn tail_source(beta: f64, l0: f64, h0: f64, rings: usize) -> SourceField<f64> {
    let a = -2.0 / (beta - 2.0);
    let f = move |x: [f64; 2]| {
        let r = x[0].hypot(x[1]);
        if r < 1.0 {
            a
        } else {
            r.powf(-beta)
        }
    };
    let raw = SourceField::graded(l0, h0, rings, f, Support::Tail { beta, c2: 1.0 });
    // The truncated tail misses some mass; put it back on the unit disk.
    let inside = |c: &Cell<f64>| c.center[0].hypot(c.center[1]) + c.side * std::f64::consts::FRAC_1_SQRT_2 < 1.0;
    let disk: f64 = raw.cells().iter().filter(|c| inside(c)).map(|c| c.side * c.side).sum();
    let shift = -raw.mass() / disk;
    let cells =
        raw.cells().iter().map(|c| if inside(c) { Cell { value: c.value + shift, ..*c } } else { *c }).collect();
    SourceField::from_cells(cells, Support::Tail { beta, c2: 1.0 })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn centered_square_matches_antiderivative() {
        for a in [1e-3f64, 0.05, 0.5, 2.0] {
            let exact = centered_square_log_integral(a);
            let via = rectangle_log_integral([0.0, 0.0], -a, a, -a, a);
            assert!((exact - via).abs() < 1e-14 * (1.0 + exact.abs()), "{a}: {exact} vs {via}");
        }
    }

    #[test]
    fn rectangle_integral_matches_brute_force() {
        let p = [0.3, -0.2];
        let (x0, x1, y0, y1) = (-0.1, 0.7, -0.5, 0.4);
        let n = 2000;
        let (hx, hy) = ((x1 - x0) / n as f64, (y1 - y0) / n as f64);
        let mut brute = 0.0;
        for i in 0..n {
            for j in 0..n {
                let x = x0 + (i as f64 + 0.5) * hx;
                let y = y0 + (j as f64 + 0.5) * hy;
                brute += ((x - p[0]).hypot(y - p[1])).ln() * hx * hy;
            }
        }
        let exact = rectangle_log_integral(p, x0, x1, y0, y1);
        assert!((exact - brute).abs() < 1e-5, "{exact} vs {brute}");
    }

    #[test]
    fn zero_source_convolves_to_zero() {
        let f = SourceField::uniform(1.0, 0.1, |_| 0.0, Support::Compact { radius: 1.5 });
        let t = spread_targets(&[0.0, 0.5, 7.0]);
        assert!(gamma_convolve(&f, &t).iter().all(|&v| v == 0.0));
        let rep = check_lemma21(&f, &spread_targets(&[7.0, 9.0])).unwrap();
        assert!(rep.samples.iter().all(|s| s.ratio == 0.0));
    }

    #[test]
    fn graded_rings_tile_without_overlap() {
        let f = SourceField::<f64>::graded(2.0, 0.1, 3, |_| 1.0, Support::Tail { beta: 3.0, c2: 1.0 });
        let side: f64 = 2.0 * 2.0 * 8.0;
        assert!((f.mass() - side * side).abs() < 1e-9);
    }
}
