use rayon::prelude::*;

use crate::config::VortexConfig;
use crate::error::GridError;
use crate::grid::{pinned_shift, LinearStats, Mesh};
use crate::linalg::amg::{Aggregation, Hierarchy};
use crate::linalg::csr::Csr;
use crate::linalg::pcg::pcg;
use crate::quadrature::GaussLegendre;
use crate::scalar::Scalar;

/// Default memory guard on the number of nodes.
pub const DEFAULT_NODE_CAP: usize = 4_000_000;

/// Parameters of a disk grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiskOptions {
    pub r_max: f64,
    pub h: f64,
    pub node_cap: usize,
    /// Relative tolerance of the CG solves.
    pub cg_tol: f64,
}

impl DiskOptions {
    pub fn new(r_max: f64, h: f64) -> Self {
        Self { r_max, h, node_cap: DEFAULT_NODE_CAP, cg_tol: 1e-10 }
    }
}

/// Cartesian lattice nodes inside the open disk of radius `R`, with
/// control volumes `cell ∩ disk`.
///
/// Lattice squares whose center falls outside the disk are merged into an
/// adjacent inside node, so the volumes tile the disk exactly. Faces are
/// clipped to the disk; faces between merged slivers carry no flux.
pub struct DiskGrid<T> {
    h: T,
    r_max: T,
    half_width: i64,
    /// Lattice coordinates of each node.
    lattice: Vec<(i64, i64)>,
    points: Vec<[T; 2]>,
    /// Node index for each lattice square of the bounding box, or `usize::MAX`.
    index: Vec<usize>,
    volumes: Vec<T>,
    /// For each node, `(host, x0, y0)` of the lattice squares it owns.
    owned: Vec<Vec<(i64, i64)>>,
    boundary: Vec<(usize, T)>,
    stiffness: Csr<T>,
    aggregation: Aggregation,
    snap_offsets: Vec<T>,
    cg_tol: T,
}

impl<T: Scalar> std::fmt::Debug for DiskGrid<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DiskGrid")
            .field("h", &self.h)
            .field("r_max", &self.r_max)
            .field("nodes", &self.points.len())
            .field("boundary_nodes", &self.boundary.len())
            .finish()
    }
}

/// `∫ sqrt(R^2 - x^2) dx`.
fn chord_antiderivative(x: f64, r: f64) -> f64 {
    let x = x.clamp(-r, r);
    0.5 * (x * (r * r - x * x).max(0.0).sqrt() + r * r * (x / r).asin())
}

/// Exact area of `[x0, x1] × [y0, y1] ∩ B_R(0)`.
pub(crate) fn square_disk_area(x0: f64, x1: f64, y0: f64, y1: f64, r: f64) -> f64 {
    let lo = x0.max(-r);
    let hi = x1.min(r);
    if lo >= hi {
        return 0.0;
    }
    let mut breaks = vec![lo, hi];
    for y in [y0, y1] {
        if y.abs() < r {
            let xb = (r * r - y * y).sqrt();
            for b in [-xb, xb] {
                if b > lo && b < hi {
                    breaks.push(b);
                }
            }
        }
    }
    breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut area = 0.0;
    for w in breaks.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b <= a {
            continue;
        }
        let m = 0.5 * (a + b);
        let s = (r * r - m * m).max(0.0).sqrt();
        let top_is_arc = s < y1;
        let bottom_is_arc = -s > y0;
        let top = if top_is_arc { s } else { y1 };
        let bottom = if bottom_is_arc { -s } else { y0 };
        if top <= bottom {
            continue;
        }
        let arc = chord_antiderivative(b, r) - chord_antiderivative(a, r);
        let top_int = if top_is_arc { arc } else { y1 * (b - a) };
        let bottom_int = if bottom_is_arc { -arc } else { y0 * (b - a) };
        area += top_int - bottom_int;
    }
    area
}

/// Length of the circle `|x| = R` inside `[x0, x1] × [y0, y1]`.
pub(crate) fn square_arc_length(x0: f64, x1: f64, y0: f64, y1: f64, r: f64) -> f64 {
    use std::f64::consts::PI;
    let tau = 2.0 * PI;
    let mut angles = vec![0.0, tau];
    let norm = |a: f64| a.rem_euclid(tau);
    for x in [x0, x1] {
        if x.abs() <= r {
            let a = (x / r).acos();
            angles.push(norm(a));
            angles.push(norm(-a));
        }
    }
    for y in [y0, y1] {
        if y.abs() <= r {
            let a = (y / r).asin();
            angles.push(norm(a));
            angles.push(norm(PI - a));
        }
    }
    angles.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut len = 0.0;
    for w in angles.windows(2) {
        if w[1] <= w[0] {
            continue;
        }
        let m = 0.5 * (w[0] + w[1]);
        let (px, py) = (r * m.cos(), r * m.sin());
        if px >= x0 && px <= x1 && py >= y0 && py <= y1 {
            len += r * (w[1] - w[0]);
        }
    }
    len
}

/// Length of the segment `{x} × [y0, y1]` inside the open disk.
fn clipped_segment(x: f64, y0: f64, y1: f64, r: f64) -> f64 {
    if x.abs() >= r {
        return 0.0;
    }
    let s = (r * r - x * x).sqrt();
    (y1.min(s) - y0.max(-s)).max(0.0)
}

/// Builds a disk grid for `config`, enforcing `h <= varrho/8`, `R >= 4 r0`
/// and the node cap.
pub fn build_disk_grid<T: Scalar>(opts: DiskOptions, config: &VortexConfig<T>) -> Result<DiskGrid<T>, GridError> {
    let (r, h) = (opts.r_max, opts.h);
    if !(h > 0.0) || !h.is_finite() || !(r > 0.0) || !r.is_finite() {
        return Err(GridError::Invalid(format!("rmax = {r}, h = {h}")));
    }
    let limit = config.varrho().as_f64() / 8.0;
    if h > limit * (1.0 + 1e-12) {
        return Err(GridError::TooCoarse { h, limit });
    }
    let estimate = (std::f64::consts::PI * (r / h).powi(2)).ceil() as usize;
    if estimate > opts.node_cap {
        return Err(GridError::NodeCap { nodes: estimate, cap: opts.node_cap });
    }
    let required = 4.0 * config.r0().as_f64();
    if r < required {
        return Err(GridError::DomainTooSmall { r_max: r, required });
    }
    let centers: Vec<[f64; 2]> = config.signed_centers().map(|(c, _)| [c.pos[0].as_f64(), c.pos[1].as_f64()]).collect();
    Ok(DiskGrid::assemble(r, h, opts.cg_tol, &centers))
}

impl<T: Scalar> DiskGrid<T> {
    fn assemble(r: f64, h: f64, cg_tol: f64, centers: &[[f64; 2]]) -> Self {
        let k = (r / h).ceil() as i64 + 1;
        let width = (2 * k + 1) as usize;
        let slot = |i: i64, j: i64| ((j + k) as usize) * width + (i + k) as usize;
        let inside = |i: i64, j: i64| {
            let (x, y) = (i as f64 * h, j as f64 * h);
            x * x + y * y < r * r
        };

        let mut lattice = Vec::new();
        let mut index = vec![usize::MAX; width * width];
        for j in -k..=k {
            for i in -k..=k {
                if inside(i, j) {
                    index[slot(i, j)] = lattice.len();
                    lattice.push((i, j));
                }
            }
        }
        let n = lattice.len();
        let sq = |i: i64, j: i64| {
            let (x, y) = (i as f64 * h, j as f64 * h);
            (x - 0.5 * h, x + 0.5 * h, y - 0.5 * h, y + 0.5 * h)
        };
        let full = |i: i64, j: i64| {
            let (x0, x1, y0, y1) = sq(i, j);
            let fx = x0.abs().max(x1.abs());
            let fy = y0.abs().max(y1.abs());
            fx * fx + fy * fy <= r * r
        };

        let mut owned: Vec<Vec<(i64, i64)>> = lattice.iter().map(|&p| vec![p]).collect();
        // squares with center outside that still meet the disk
        for j in -k..=k {
            for i in -k..=k {
                if inside(i, j) {
                    continue;
                }
                let (x0, x1, y0, y1) = sq(i, j);
                let nx = 0.0f64.clamp(x0, x1);
                let ny = 0.0f64.clamp(y0, y1);
                if nx * nx + ny * ny >= r * r {
                    continue;
                }
                let host = [(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1)]
                    .iter()
                    .map(|&(di, dj)| (i + di, j + dj))
                    .filter(|&(a, b)| a.abs() <= k && b.abs() <= k && inside(a, b))
                    .min_by(|p, q| {
                        let dp = (p.0 * p.0 + p.1 * p.1) as f64;
                        let dq = (q.0 * q.0 + q.1 * q.1) as f64;
                        dp.partial_cmp(&dq).unwrap().then(p.cmp(q))
                    });
                if let Some((a, b)) = host {
                    owned[index[slot(a, b)]].push((i, j));
                }
            }
        }

        let mut volumes = vec![T::zero(); n];
        let mut arcs = vec![0.0f64; n];
        for (node, squares) in owned.iter().enumerate() {
            let mut area = 0.0;
            for &(i, j) in squares {
                if full(i, j) {
                    area += h * h;
                } else {
                    let (x0, x1, y0, y1) = sq(i, j);
                    area += square_disk_area(x0, x1, y0, y1, r);
                    arcs[node] += square_arc_length(x0, x1, y0, y1, r);
                }
            }
            volumes[node] = T::lit(area);
        }
        let circumference = 2.0 * std::f64::consts::PI * r;
        let boundary: Vec<(usize, T)> =
            arcs.iter().enumerate().filter(|(_, &a)| a > 0.0).map(|(i, &a)| (i, T::lit(a / circumference))).collect();

        let mut trip = Vec::with_capacity(5 * n);
        for (a, &(i, j)) in lattice.iter().enumerate() {
            for (di, dj) in [(1i64, 0i64), (0, 1)] {
                let (ni, nj) = (i + di, j + dj);
                if ni.abs() > k || nj.abs() > k || !inside(ni, nj) {
                    continue;
                }
                let b = index[slot(ni, nj)];
                let (x, y) = (i as f64 * h, j as f64 * h);
                let len = if di == 1 {
                    clipped_segment(x + 0.5 * h, y - 0.5 * h, y + 0.5 * h, r)
                } else {
                    clipped_segment(y + 0.5 * h, x - 0.5 * h, x + 0.5 * h, r)
                };
                if len <= 0.0 {
                    continue;
                }
                let c = T::lit(len / h);
                trip.push((a, b, -c));
                trip.push((b, a, -c));
                trip.push((a, a, c));
                trip.push((b, b, c));
            }
        }
        for a in 0..n {
            trip.push((a, a, T::zero()));
        }
        let stiffness = Csr::from_triplets(n, trip);
        let aggregation = Aggregation::build(&stiffness);

        let snap_offsets = centers
            .iter()
            .map(|c| {
                let (i, j) = ((c[0] / h).round(), (c[1] / h).round());
                T::lit((c[0] - i * h).hypot(c[1] - j * h))
            })
            .collect();
        let points = lattice.iter().map(|&(i, j)| [T::lit(i as f64 * h), T::lit(j as f64 * h)]).collect();
        Self {
            h: T::lit(h),
            r_max: T::lit(r),
            half_width: k,
            lattice,
            points,
            index,
            volumes,
            owned,
            boundary,
            stiffness,
            aggregation,
            snap_offsets,
            cg_tol: T::lit(cg_tol),
        }
    }

    pub fn spacing(&self) -> T {
        self.h
    }

    /// Distance from each pole/zero to its nearest lattice node.
    pub fn snap_offsets(&self) -> &[T] {
        &self.snap_offsets
    }

    pub fn stiffness(&self) -> &Csr<T> {
        &self.stiffness
    }

    /// Node at lattice position `(i, j)`, if inside.
    pub fn node_at(&self, i: i64, j: i64) -> Option<usize> {
        let k = self.half_width;
        if i.abs() > k || j.abs() > k {
            return None;
        }
        let width = (2 * k + 1) as usize;
        let id = self.index[((j + k) as usize) * width + (i + k) as usize];
        (id != usize::MAX).then_some(id)
    }

    pub fn lattice(&self) -> &[(i64, i64)] {
        &self.lattice
    }

    /// Sum of the quadrature weights.
    pub fn total_weight(&self) -> T {
        self.volumes.iter().copied().sum()
    }
}

impl<T: Scalar> Mesh<T> for DiskGrid<T> {
    fn len(&self) -> usize {
        self.points.len()
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
        self.r_max
    }

    fn apply(&self, x: &[T], y: &mut [T]) {
        self.stiffness.apply(x, y);
    }

    fn apply_abs(&self, x: &[T], y: &mut [T]) {
        self.stiffness.apply_abs(x, y);
    }

    fn solve(&self, shift: &[T], rhs: &[T], x: &mut [T]) -> Result<LinearStats, String> {
        let pin = pinned_shift(shift, self.stiffness.diagonal()[0]);
        let shift = pin.as_deref().unwrap_or(shift);
        let a = self.stiffness.with_diagonal_shift(shift);
        let hier = Hierarchy::new(&a, &self.aggregation)?;
        let out = pcg(|u, v| a.apply(u, v), |r, z| hier.precondition(r, z), rhs, x, self.cg_tol, 2000);
        if !out.converged {
            return Err(format!(
                "CG stopped after {} iterations at relative residual {:e}",
                out.iterations, out.relative_residual
            ));
        }
        Ok(LinearStats { iterations: out.iterations, relative_residual: out.relative_residual })
    }

    fn cell_averages(&self, f: &(dyn Fn([T; 2]) -> T + Sync), kinks: &[([T; 2], T)]) -> Vec<T> {
        let h = self.h.as_f64();
        let r = self.r_max.as_f64();
        let gl = GaussLegendre::<f64>::new(5);
        let kinks: Vec<([f64; 2], f64)> =
            kinks.iter().map(|(c, k)| ([c[0].as_f64(), c[1].as_f64()], k.as_f64())).collect();
        let crosses = |x0: f64, x1: f64, y0: f64, y1: f64| {
            kinks.iter().any(|(c, rad)| {
                let nx = c[0].clamp(x0, x1) - c[0];
                let ny = c[1].clamp(y0, y1) - c[1];
                let fx = (x0 - c[0]).abs().max((x1 - c[0]).abs());
                let fy = (y0 - c[1]).abs().max((y1 - c[1]).abs());
                nx.hypot(ny) <= *rad && fx.hypot(fy) >= *rad
            })
        };
        let inside = |px: f64, py: f64| px * px + py * py < r * r;
        // Quadtree refinement of subsquares a kink circle passes through.
        fn square(
            x0: f64,
            y0: f64,
            s: f64,
            depth: u32,
            gl: &GaussLegendre<f64>,
            crosses: &dyn Fn(f64, f64, f64, f64) -> bool,
            inside: &dyn Fn(f64, f64) -> bool,
            f: &dyn Fn(f64, f64) -> f64,
        ) -> f64 {
            if depth > 0 && crosses(x0, x0 + s, y0, y0 + s) {
                let hs = 0.5 * s;
                return [(0.0, 0.0), (hs, 0.0), (0.0, hs), (hs, hs)]
                    .iter()
                    .map(|&(dx, dy)| square(x0 + dx, y0 + dy, hs, depth - 1, gl, crosses, inside, f))
                    .sum();
            }
            let mut acc = 0.0;
            for (px, wx) in gl.on(x0, x0 + s) {
                for (py, wy) in gl.on(y0, y0 + s) {
                    if inside(px, py) {
                        acc += wx * wy * f(px, py);
                    }
                }
            }
            acc
        }
        let fe = |px: f64, py: f64| f([T::lit(px), T::lit(py)]).as_f64();
        (0..self.len())
            .into_par_iter()
            .map(|node| {
                let mut integral = 0.0;
                for &(i, j) in &self.owned[node] {
                    let (x0, y0) = (i as f64 * h - 0.5 * h, j as f64 * h - 0.5 * h);
                    integral += square(x0, y0, h, 7, &gl, &crosses, &inside, &fe);
                }
                T::lit(integral) / self.volumes[node]
            })
            .collect()
    }

    fn is_radial(&self) -> bool {
        false
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{validate_config, RawConfig};
    use std::f64::consts::PI;

    fn monte_carlo_area(x0: f64, x1: f64, y0: f64, y1: f64, r: f64) -> f64 {
        let m = 2000;
        let mut hits = 0usize;
        for a in 0..m {
            for b in 0..m {
                let x = x0 + (a as f64 + 0.5) / m as f64 * (x1 - x0);
                let y = y0 + (b as f64 + 0.5) / m as f64 * (y1 - y0);
                if x * x + y * y < r * r {
                    hits += 1;
                }
            }
        }
        hits as f64 / (m * m) as f64 * (x1 - x0) * (y1 - y0)
    }

    #[test]
    fn cut_area_matches_midpoint_sampling() {
        for (x0, y0) in [(0.7, 0.1), (-0.95, -0.4), (0.3, 0.8), (-0.2, -0.2), (0.9, 0.9)] {
            let (x1, y1) = (x0 + 0.3, y0 + 0.25);
            let exact = square_disk_area(x0, x1, y0, y1, 1.0);
            let mc = monte_carlo_area(x0, x1, y0, y1, 1.0);
            assert!((exact - mc).abs() < 2e-5, "({x0},{y0}): {exact} vs {mc}");
        }
        assert!((square_disk_area(-2.0, 2.0, -2.0, 2.0, 1.0) - PI).abs() < 1e-14);
    }

    #[test]
    fn arc_lengths_cover_the_circle() {
        let h = 0.37;
        let r = 2.0;
        let mut total = 0.0;
        for i in -7..=7 {
            for j in -7..=7 {
                let (x0, y0) = (i as f64 * h - 0.5 * h, j as f64 * h - 0.5 * h);
                total += square_arc_length(x0, x0 + h, y0, y0 + h, r);
            }
        }
        assert!((total - 2.0 * PI * r).abs() < 1e-12);
    }

    fn cfg(varrho: f64) -> VortexConfig<f64> {
        validate_config(&RawConfig::coincident(2, varrho)).unwrap()
    }

    #[test]
    fn total_weight_is_disk_area() {
        let c = cfg(0.8);
        let g: DiskGrid<f64> = build_disk_grid(DiskOptions::new(44.0, 0.1), &c).unwrap();
        let area = PI * 44.0 * 44.0;
        assert!(((g.total_weight() - area) / area).abs() < 1e-6);
        let omega: f64 = g.boundary().iter().map(|b| b.1).sum();
        assert!((omega - 1.0).abs() < 1e-9);
        assert!(g.snap_offsets().iter().all(|&o| o <= 0.05 + 1e-15));
        // linear functions integrate to zero by symmetry, and x^2 + y^2 to πR^4/2
        let first: f64 = g.points().iter().zip(g.volumes()).map(|(p, v)| p[0] * v).sum();
        assert!(first.abs() < 1e-6 * area * 44.0);
    }

    #[test]
    fn guards() {
        let c = cfg(0.4);
        let e = build_disk_grid::<f64>(DiskOptions::new(44.0, 0.1), &c).unwrap_err();
        assert!(e.to_string().contains("h too coarse for cutoff annulus"));
        let c = cfg(0.5);
        let mut o = DiskOptions::new(44.0, 0.05);
        o.node_cap = 500_000;
        assert!(matches!(build_disk_grid::<f64>(o, &c), Err(GridError::NodeCap { .. })));
        let e = build_disk_grid::<f64>(DiskOptions::new(40.0, 0.05), &c).unwrap_err();
        assert!(matches!(e, GridError::DomainTooSmall { .. }));
    }

    #[test]
    fn stiffness_consistency() {
        let c = cfg(0.8);
        let g: DiskGrid<f64> = build_disk_grid(DiskOptions::new(44.0, 0.1), &c).unwrap();
        let ones = vec![1.0; g.len()];
        let mut y = vec![0.0; g.len()];
        g.apply(&ones, &mut y);
        assert!(y.iter().all(|v| v.abs() < 1e-10));
        // -Δ (x^2 + y^2) = -4 away from the boundary
        let v: Vec<f64> = g.points().iter().map(|p| p[0] * p[0] + p[1] * p[1]).collect();
        g.apply(&v, &mut y);
        for (i, p) in g.points().iter().enumerate() {
            if p[0].hypot(p[1]) < 40.0 {
                assert!((y[i] / g.volumes()[i] + 4.0).abs() < 1e-8);
            }
        }
    }
}
