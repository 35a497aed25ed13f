use crate::scalar::Scalar;

/// Result of a conjugate-gradient run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgOutcome {
    pub iterations: usize,
    pub relative_residual: f64,
    pub converged: bool,
}

fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

/// Preconditioned conjugate gradients for a symmetric positive definite operator.
pub fn pcg<T: Scalar>(
    apply: impl Fn(&[T], &mut [T]),
    precondition: impl Fn(&[T], &mut [T]),
    b: &[T],
    x: &mut [T],
    rel_tol: T,
    max_iter: usize,
) -> CgOutcome {
    let n = b.len();
    let bnorm = dot(b, b).sqrt();
    if bnorm == T::zero() {
        x.iter_mut().for_each(|v| *v = T::zero());
        return CgOutcome { iterations: 0, relative_residual: 0.0, converged: true };
    }
    let mut r = vec![T::zero(); n];
    apply(x, &mut r);
    for (ri, &bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    let mut z = vec![T::zero(); n];
    precondition(&r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![T::zero(); n];
    let mut rel = dot(&r, &r).sqrt() / bnorm;
    for it in 0..max_iter {
        if rel <= rel_tol {
            return CgOutcome { iterations: it, relative_residual: rel.as_f64(), converged: true };
        }
        apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > T::zero()) {
            return CgOutcome { iterations: it, relative_residual: rel.as_f64(), converged: false };
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        rel = dot(&r, &r).sqrt() / bnorm;
        precondition(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    CgOutcome { iterations: max_iter, relative_residual: rel.as_f64(), converged: rel <= rel_tol }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::amg::{Aggregation, Hierarchy};
    use crate::linalg::csr::Csr;

    fn laplacian_2d(m: usize, shift: f64) -> Csr<f64> {
        let idx = |i: usize, j: usize| i * m + j;
        let mut t = Vec::new();
        for i in 0..m {
            for j in 0..m {
                let mut d = shift;
                for (di, dj) in [(0i64, 1i64), (1, 0), (0, -1), (-1, 0)] {
                    let (ni, nj) = (i as i64 + di, j as i64 + dj);
                    if ni >= 0 && nj >= 0 && (ni as usize) < m && (nj as usize) < m {
                        t.push((idx(i, j), idx(ni as usize, nj as usize), -1.0));
                        d += 1.0;
                    }
                }
                t.push((idx(i, j), idx(i, j), d));
            }
        }
        Csr::from_triplets(m * m, t)
    }

    #[test]
    fn amg_pcg_solves_shifted_neumann_laplacian() {
        let a = laplacian_2d(120, 1e-4);
        let agg = Aggregation::build(&a);
        assert!(agg.levels() > 2);
        let h = Hierarchy::new(&a, &agg).unwrap();
        let xs: Vec<f64> = (0..a.n()).map(|k| ((k * 7919) % 1000) as f64 / 1000.0).collect();
        let mut b = vec![0.0; a.n()];
        a.apply(&xs, &mut b);
        let mut x = vec![0.0; a.n()];
        let out = pcg(|u, v| a.apply(u, v), |r, z| h.precondition(r, z), &b, &mut x, 1e-11, 500);
        assert!(out.converged, "{out:?}");
        assert!(out.iterations < 150, "{out:?}");
        let err = x.iter().zip(&xs).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
        assert!(err < 1e-5, "{err}");
    }

    #[test]
    fn unpreconditioned_cg_small_system() {
        let a = laplacian_2d(10, 1.0);
        let b = vec![1.0; a.n()];
        let mut x = vec![0.0; a.n()];
        let out = pcg(|u, v| a.apply(u, v), |r, z| z.copy_from_slice(r), &b, &mut x, 1e-12, 1000);
        assert!(out.converged);
        for v in x {
            assert!((v - 1.0).abs() < 1e-10);
        }
    }
}
