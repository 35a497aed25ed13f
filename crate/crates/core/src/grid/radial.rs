use crate::config::VortexConfig;
use crate::error::GridError;
use crate::grid::{pinned_shift, LinearStats, Mesh};
use crate::linalg::tridiag::{solve_symmetric_tridiagonal, tridiagonal_apply};
use crate::quadrature::GaussLegendre;
use crate::scalar::Scalar;

/// Radial grid `r_k = 2 sinh(ξ_k / 2)` with uniform `ξ`: spacing `≈ Δξ` near
/// the origin and `≈ r Δξ / 2` far out, so the outer decades are logarithmic.
///
/// Interval counts that double give nested grids.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid<T> {
    r: Vec<T>,
    points: Vec<[T; 2]>,
    /// `∫ f r dr` weights, piecewise quadratic.
    weights: Vec<T>,
    volumes: Vec<T>,
    /// Face conductances `2π r_{k+1/2} / (r_{k+1} - r_k)`.
    conductance: Vec<T>,
    diag: Vec<T>,
    boundary: [(usize, T); 1],
}

/// Builds a radial grid with `nodes` points on `[0, r_max]`.
pub fn build_radial_grid<T: Scalar>(r_max: T, nodes: usize) -> Result<RadialGrid<T>, GridError> {
    if nodes < 3 {
        return Err(GridError::TooFewNodes { min: 3, got: nodes });
    }
    if !(r_max > T::zero()) || !r_max.is_finite() {
        return Err(GridError::Invalid(format!("rmax = {r_max}")));
    }
    let n = nodes - 1;
    let two = T::lit(2.0);
    let xi_max = two * (r_max / two).asinh();
    let mut r: Vec<T> = (0..=n).map(|k| two * (xi_max * T::of_usize(k) / T::of_usize(n) / two).sinh()).collect();
    r[0] = T::zero();
    r[n] = r_max;

    let pi = T::PI();
    let faces: Vec<T> = (0..n).map(|k| (r[k] + r[k + 1]) / two).collect();
    let mut volumes = Vec::with_capacity(nodes);
    for k in 0..=n {
        let lo = if k == 0 { T::zero() } else { faces[k - 1] };
        let hi = if k == n { r_max } else { faces[k] };
        volumes.push(pi * (hi * hi - lo * lo));
    }
    let conductance: Vec<T> = (0..n).map(|k| two * pi * faces[k] / (r[k + 1] - r[k])).collect();
    let mut diag = vec![T::zero(); nodes];
    for k in 0..n {
        diag[k] += conductance[k];
        diag[k + 1] += conductance[k];
    }

    let weights = quadratic_weights(&r);
    let points = r.iter().map(|&x| [x, T::zero()]).collect();
    Ok(RadialGrid { r, points, weights, volumes, conductance, diag, boundary: [(n, T::one())] })
}

/// Radial grid for `config`: requires every center at the origin and `R >= 4 r0`.
pub fn radial_grid_for<T: Scalar>(
    config: &VortexConfig<T>,
    r_max: T,
    nodes: usize,
) -> Result<RadialGrid<T>, GridError> {
    if !config.is_coincident_at_origin() {
        return Err(GridError::RadialRequiresCoincident);
    }
    let required = T::lit(4.0) * config.r0();
    if r_max < required {
        return Err(GridError::DomainTooSmall { r_max: r_max.as_f64(), required: required.as_f64() });
    }
    build_radial_grid(r_max, nodes)
}

/// Weights integrating the piecewise quadratic interpolant times `r` exactly.
/// An odd interval count leaves one single interval at the origin. Very
/// coarse, strongly graded grids fall back to the piecewise linear rule.
fn quadratic_weights<T: Scalar>(r: &[T]) -> Vec<T> {
    let w = quadratic_weights_raw(r);
    if w.iter().all(|&x| x > T::zero()) {
        return w;
    }
    let mut w = vec![T::zero(); r.len()];
    let six = T::lit(6.0);
    for k in 0..r.len() - 1 {
        let (a, b) = (r[k], r[k + 1]);
        let h = b - a;
        w[k] += h * (T::lit(2.0) * a + b) / six;
        w[k + 1] += h * (a + T::lit(2.0) * b) / six;
    }
    w
}

fn quadratic_weights_raw<T: Scalar>(r: &[T]) -> Vec<T> {
    let n = r.len() - 1;
    let gl = GaussLegendre::<T>::new(3);
    let mut w = vec![T::zero(); r.len()];
    let mut add = |idx: [usize; 3], lo: T, hi: T| {
        let [a, b, c] = idx.map(|i| r[i]);
        for (x, wq) in gl.on(lo, hi) {
            let la = (x - b) * (x - c) / ((a - b) * (a - c));
            let lb = (x - a) * (x - c) / ((b - a) * (b - c));
            let lc = (x - a) * (x - b) / ((c - a) * (c - b));
            w[idx[0]] += wq * x * la;
            w[idx[1]] += wq * x * lb;
            w[idx[2]] += wq * x * lc;
        }
    };
    let mut start = 0;
    if n % 2 == 1 {
        add([0, 1, 2], r[0], r[1]);
        start = 1;
    }
    let mut k = start;
    while k + 2 <= n {
        add([k, k + 1, k + 2], r[k], r[k + 2]);
        k += 2;
    }
    w
}

impl<T: Scalar> RadialGrid<T> {
    pub fn nodes(&self) -> &[T] {
        &self.r
    }

    pub fn r_max(&self) -> T {
        self.r[self.r.len() - 1]
    }

    /// Weights for `∫_0^{R} f(r) r dr`.
    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn integrate_r_dr(&self, f: impl Fn(T) -> T) -> T {
        self.r.iter().zip(&self.weights).map(|(&r, &w)| w * f(r)).sum()
    }

    /// Off-diagonal of the stiffness matrix.
    pub fn off_diagonal(&self) -> Vec<T> {
        self.conductance.iter().map(|&c| -c).collect()
    }

    /// Index of the first node with `r >= x`.
    pub fn index_at_or_above(&self, x: T) -> usize {
        self.r.partition_point(|&r| r < x)
    }

    /// Linear interpolation of a nodal field at radius `x`.
    pub fn interpolate(&self, field: &[T], x: T) -> T {
        let n = self.r.len();
        if x <= T::zero() {
            return field[0];
        }
        if x >= self.r_max() {
            return field[n - 1];
        }
        let j = self.index_at_or_above(x).max(1);
        let t = (x - self.r[j - 1]) / (self.r[j] - self.r[j - 1]);
        field[j - 1] * (T::one() - t) + field[j] * t
    }
}

impl<T: Scalar> Mesh<T> for RadialGrid<T> {
    fn len(&self) -> usize {
        self.r.len()
    }

    fn points(&self) -> &[[T; 2]] {
        &self.points
    }

    fn volumes(&self) -> &[T] {
        &self.volumes
    }

    fn boundary(&self) -> &[(usize, T)] {
        &self.boundary
    }

    fn outer_radius(&self) -> T {
        self.r_max()
    }

    fn apply(&self, x: &[T], y: &mut [T]) {
        tridiagonal_apply(&self.diag, &self.off_diagonal(), x, y);
    }

    fn apply_abs(&self, x: &[T], y: &mut [T]) {
        let ax: Vec<T> = x.iter().map(|v| v.abs()).collect();
        tridiagonal_apply(&self.diag, &self.conductance, &ax, y);
    }

    fn solve(&self, shift: &[T], rhs: &[T], x: &mut [T]) -> Result<LinearStats, String> {
        let pin = pinned_shift(shift, self.diag[0]);
        let shift = pin.as_deref().unwrap_or(shift);
        let d: Vec<T> = self.diag.iter().zip(shift).map(|(&a, &s)| a + s).collect();
        let e = self.off_diagonal();
        solve_symmetric_tridiagonal(&d, &e, rhs, x)?;
        // one step of iterative refinement
        let mut res = vec![T::zero(); x.len()];
        tridiagonal_apply(&d, &e, x, &mut res);
        for (r, &b) in res.iter_mut().zip(rhs) {
            *r = b - *r;
        }
        let mut dx = vec![T::zero(); x.len()];
        solve_symmetric_tridiagonal(&d, &e, &res, &mut dx)?;
        for (xi, di) in x.iter_mut().zip(&dx) {
            *xi += *di;
        }
        Ok(LinearStats { iterations: 1, relative_residual: 0.0 })
    }

    fn cell_averages(&self, f: &(dyn Fn([T; 2]) -> T + Sync), kinks: &[([T; 2], T)]) -> Vec<T> {
        let n = self.r.len() - 1;
        let two = T::lit(2.0);
        let gl = GaussLegendre::<T>::new(8);
        let breaks: Vec<T> = kinks.iter().map(|(c, rad)| c[0].hypot(c[1]) + *rad).collect();
        (0..=n)
            .map(|k| {
                let lo = if k == 0 { T::zero() } else { (self.r[k - 1] + self.r[k]) / two };
                let hi = if k == n { self.r[n] } else { (self.r[k] + self.r[k + 1]) / two };
                let integral = gl.integrate_split(lo, hi, &breaks, |r| f([r, T::zero()]) * r);
                two * T::PI() * integral / self.volumes[k]
            })
            .collect()
    }

    fn is_radial(&self) -> bool {
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn last_node_is_rmax_exactly() {
        let g = build_radial_grid(1e4f64, 4000).unwrap();
        assert_eq!(g.len(), 4000);
        assert_eq!(g.r_max(), 1e4);
        assert_eq!(g.nodes()[0], 0.0);
        assert!(g.nodes().windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn weights_positive_and_reproduce_r_dr() {
        for nodes in [3usize, 4, 101, 1000, 4000] {
            let g = build_radial_grid(1e4f64, nodes).unwrap();
            assert!(g.weights().iter().all(|&w| w > 0.0), "nodes={nodes}");
            let total = g.integrate_r_dr(|_| 1.0);
            assert!((total - 0.5e8).abs() <= 1e-12 * 0.5e8, "nodes={nodes}");
        }
        let g = build_radial_grid(1.0f64, 50).unwrap();
        assert!((g.integrate_r_dr(|_| 2.0) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn exponential_moment_against_closed_form() {
        let g = build_radial_grid(1e4f64, 4000).unwrap();
        let got = g.integrate_r_dr(|r| (-r).exp());
        let big_r = 1e4f64;
        let exact = 1.0 - (1.0 + big_r) * (-big_r).exp();
        assert!(((got - exact) / exact).abs() <= 1e-8, "{got} vs {exact}");
    }

    #[test]
    fn volumes_tile_the_disk() {
        let g = build_radial_grid(50.0f64, 301).unwrap();
        let total: f64 = g.volumes().iter().sum();
        assert!((total - std::f64::consts::PI * 2500.0).abs() < 1e-9);
    }

    #[test]
    fn stiffness_has_zero_row_sums() {
        let g = build_radial_grid(50.0f64, 301).unwrap();
        let ones = vec![1.0; g.len()];
        let mut y = vec![0.0; g.len()];
        g.apply(&ones, &mut y);
        assert!(y.iter().all(|v| v.abs() < 1e-9));
    }

    #[test]
    fn stiffness_reproduces_laplacian_of_r_squared() {
        // -Δ r^2 = -4, so (A v)_k ≈ -4 V_k in the interior.
        let g = build_radial_grid(20.0f64, 801).unwrap();
        let v: Vec<f64> = g.nodes().iter().map(|r| r * r).collect();
        let mut y = vec![0.0; g.len()];
        g.apply(&v, &mut y);
        for k in 1..g.len() - 1 {
            let lap = -y[k] / g.volumes()[k];
            assert!((lap - 4.0).abs() < 1e-3, "k={k}: {lap}");
        }
    }

    #[test]
    fn pinned_solve_fixes_node_zero() {
        let g = build_radial_grid(10.0f64, 101).unwrap();
        let mut rhs: Vec<f64> = g.volumes().iter().enumerate().map(|(k, v)| v * (k as f64).cos()).collect();
        let mean = rhs.iter().sum::<f64>() / rhs.len() as f64;
        rhs.iter_mut().for_each(|b| *b -= mean);
        let mut x = vec![0.0; g.len()];
        g.solve(&vec![0.0; g.len()], &rhs, &mut x).unwrap();
        assert!(x[0].abs() < 1e-9);
        let mut y = vec![0.0; g.len()];
        g.apply(&x, &mut y);
        for k in 0..g.len() {
            assert!((y[k] - rhs[k]).abs() < 1e-8);
        }
    }

    #[test]
    fn cell_averages_integrate_exactly() {
        let g = build_radial_grid(10.0f64, 101).unwrap();
        let f = |p: [f64; 2]| if p[0] < 1.0 { 1.0 } else { 0.0 };
        let avg = g.cell_averages(&f, &[([0.0, 0.0], 1.0)]);
        let mass: f64 = avg.iter().zip(g.volumes()).map(|(a, v)| a * v).sum();
        assert!((mass - std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn radial_path_needs_coincident_centers() {
        use crate::config::{validate_config, RawConfig};
        let raw = RawConfig { poles: vec![[0.0, 0.0], [1.0, 0.0]], ..Default::default() };
        let c: VortexConfig<f64> = validate_config(&raw).unwrap();
        let e = radial_grid_for(&c, 1e4, 100).unwrap_err();
        assert!(e.to_string().contains("radial path requires coincident vortices"));
        let c: VortexConfig<f64> = validate_config(&RawConfig::coincident(2, 0.5)).unwrap();
        assert!(radial_grid_for(&c, 1e4, 100).is_ok());
        assert!(matches!(radial_grid_for(&c, 40.0, 100), Err(GridError::DomainTooSmall { .. })));
    }

    #[test]
    fn rejects_tiny_grids() {
        assert!(matches!(build_radial_grid(10.0f64, 2), Err(GridError::TooFewNodes { .. })));
    }
}
