//! Smoothed-aggregation algebraic multigrid, used as a PCG preconditioner.
//!
//! Aggregates depend only on sparsity patterns, so they are computed once per
//! grid; prolongators and Galerkin operators are rebuilt for every new
//! diagonal shift.

use crate::linalg::csr::Csr;
use crate::scalar::Scalar;

const COARSEST: usize = 400;
const MAX_LEVELS: usize = 25;

/// Node-to-aggregate maps for each level transition.
#[derive(Debug, Clone, PartialEq)]
pub struct Aggregation {
    maps: Vec<(Vec<usize>, usize)>,
}

fn aggregate_pattern(n: usize, adj: &[Vec<usize>]) -> (Vec<usize>, usize) {
    const NONE: usize = usize::MAX;
    let mut agg = vec![NONE; n];
    let mut count = 0;
    for i in 0..n {
        if agg[i] == NONE && adj[i].iter().all(|&j| agg[j] == NONE) {
            agg[i] = count;
            for &j in &adj[i] {
                agg[j] = count;
            }
            count += 1;
        }
    }
    for i in 0..n {
        if agg[i] == NONE {
            if let Some(&j) = adj[i].iter().find(|&&j| agg[j] != NONE) {
                agg[i] = agg[j];
            }
        }
    }
    for a in agg.iter_mut() {
        if *a == NONE {
            *a = count;
            count += 1;
        }
    }
    (agg, count)
}

fn adjacency<T: Scalar>(a: &Csr<T>) -> Vec<Vec<usize>> {
    (0..a.n()).map(|i| a.row(i).filter(|&(j, v)| j != i && v != T::zero()).map(|(j, _)| j).collect()).collect()
}

/// Tentative prolongator: one unit entry per row, in the node's aggregate.
fn tentative<T: Scalar>(agg: &[usize], nc: usize) -> Csr<T> {
    Csr::from_rows(nc, agg.iter().map(|&g| vec![(g, T::one())]).collect())
}

/// `P = (I - ω D⁻¹ A) P_tent` with `ω = 4 / (3 ρ)`, `ρ` the Gershgorin bound of `D⁻¹ A`.
fn smoothed_prolongator<T: Scalar>(a: &Csr<T>, agg: &[usize], nc: usize) -> Csr<T> {
    let d = a.diagonal();
    let rho = (0..a.n()).map(|i| a.row(i).map(|(_, v)| v.abs()).sum::<T>() / d[i]).fold(T::zero(), T::max);
    let omega = T::lit(4.0 / 3.0) / rho;
    let ap = a.matmul(&tentative::<T>(agg, nc));
    let rows = (0..a.n())
        .map(|i| {
            let mut row: Vec<(usize, T)> = ap.row(i).map(|(j, v)| (j, -omega * v / d[i])).collect();
            match row.iter_mut().find(|e| e.0 == agg[i]) {
                Some(e) => e.1 += T::one(),
                None => row.push((agg[i], T::one())),
            }
            row
        })
        .collect();
    Csr::from_rows(nc, rows)
}

/// Galerkin triple `(P, Pᵀ, Pᵀ A P)`.
fn galerkin<T: Scalar>(a: &Csr<T>, agg: &[usize], nc: usize) -> (Csr<T>, Csr<T>, Csr<T>) {
    let p = smoothed_prolongator(a, agg, nc);
    let r = p.transpose();
    let coarse = r.matmul(&a.matmul(&p));
    (p, r, coarse)
}

/// Same pattern with unit off-diagonals and a dominant diagonal, so the
/// prolongator smoothing is well defined whatever the stored values.
fn unit_pattern<T: Scalar>(m: &Csr<T>) -> Csr<f64> {
    let rows = (0..m.n())
        .map(|i| {
            let deg = m.row(i).filter(|&(j, _)| j != i).count() as f64;
            m.row(i).map(|(j, _)| (j, if j == i { deg + 1.0 } else { -1.0 })).collect()
        })
        .collect();
    Csr::from_rows(m.n(), rows)
}

impl Aggregation {
    pub fn build<T: Scalar>(a: &Csr<T>) -> Self {
        let mut maps = Vec::new();
        let mut current = unit_pattern(a);
        while current.n() > COARSEST && maps.len() < MAX_LEVELS {
            let (agg, nc) = aggregate_pattern(current.n(), &adjacency(&current));
            if nc * 10 > current.n() * 9 {
                break;
            }
            let (_, _, next) = galerkin(&current, &agg, nc);
            maps.push((agg, nc));
            current = unit_pattern(&next);
        }
        Self { maps }
    }

    pub fn levels(&self) -> usize {
        self.maps.len() + 1
    }
}

/// A V-cycle hierarchy for one matrix.
pub struct Hierarchy<T> {
    ops: Vec<Csr<T>>,
    diags: Vec<Vec<T>>,
    prolong: Vec<Csr<T>>,
    restrict: Vec<Csr<T>>,
    chol: Vec<T>,
    nc: usize,
}

fn cholesky<T: Scalar>(a: &Csr<T>) -> Result<Vec<T>, String> {
    let n = a.n();
    let mut m = vec![T::zero(); n * n];
    for i in 0..n {
        for (j, v) in a.row(i) {
            m[i * n + j] = v;
        }
    }
    for j in 0..n {
        let mut d = m[j * n + j];
        for k in 0..j {
            d -= m[j * n + k] * m[j * n + k];
        }
        if !(d > T::zero()) {
            return Err(format!("coarse matrix not positive definite at {j}"));
        }
        let d = d.sqrt();
        m[j * n + j] = d;
        for i in j + 1..n {
            let mut s = m[i * n + j];
            for k in 0..j {
                s -= m[i * n + k] * m[j * n + k];
            }
            m[i * n + j] = s / d;
        }
    }
    Ok(m)
}

impl<T: Scalar> Hierarchy<T> {
    pub fn new(a: &Csr<T>, aggregation: &Aggregation) -> Result<Self, String> {
        let mut ops = vec![a.clone()];
        let mut prolong = Vec::new();
        let mut restrict = Vec::new();
        for (agg, nc) in &aggregation.maps {
            let (p, r, next) = galerkin(ops.last().unwrap(), agg, *nc);
            ops.push(next);
            prolong.push(p);
            restrict.push(r);
        }
        let diags = ops.iter().map(|o| o.diagonal()).collect();
        let coarsest = ops.last().unwrap();
        let chol = cholesky(coarsest)?;
        let nc = coarsest.n();
        Ok(Self { ops, diags, prolong, restrict, chol, nc })
    }

    fn gauss_seidel(&self, level: usize, b: &[T], x: &mut [T], forward: bool) {
        let (row_ptr, cols, vals) = self.ops[level].raw();
        let d = &self.diags[level];
        let n = x.len();
        let mut sweep = |i: usize| {
            let mut s = b[i];
            for k in row_ptr[i]..row_ptr[i + 1] {
                let j = cols[k];
                if j != i {
                    s -= vals[k] * x[j];
                }
            }
            x[i] = s / d[i];
        };
        if forward {
            (0..n).for_each(&mut sweep);
        } else {
            (0..n).rev().for_each(&mut sweep);
        }
    }

    fn coarse_solve(&self, b: &[T], x: &mut [T]) {
        let n = self.nc;
        let l = &self.chol;
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s -= l[i * n + k] * y[k];
            }
            y[i] = s / l[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..n {
                s -= l[k * n + i] * x[k];
            }
            x[i] = s / l[i * n + i];
        }
    }

    fn cycle(&self, level: usize, b: &[T], x: &mut [T]) {
        if level + 1 == self.ops.len() {
            self.coarse_solve(b, x);
            return;
        }
        let a = &self.ops[level];
        x.iter_mut().for_each(|v| *v = T::zero());
        self.gauss_seidel(level, b, x, true);
        let mut r = vec![T::zero(); x.len()];
        a.apply(x, &mut r);
        for (ri, &bi) in r.iter_mut().zip(b) {
            *ri = bi - *ri;
        }
        let nc = self.ops[level + 1].n();
        let mut rc = vec![T::zero(); nc];
        self.restrict[level].apply(&r, &mut rc);
        let mut xc = vec![T::zero(); nc];
        self.cycle(level + 1, &rc, &mut xc);
        let mut fine = vec![T::zero(); x.len()];
        self.prolong[level].apply(&xc, &mut fine);
        for (xi, f) in x.iter_mut().zip(fine) {
            *xi += f;
        }
        self.gauss_seidel(level, b, x, false);
    }

    /// One symmetric V-cycle applied to `r`.
    pub fn precondition(&self, r: &[T], z: &mut [T]) {
        self.cycle(0, r, z);
    }
}
