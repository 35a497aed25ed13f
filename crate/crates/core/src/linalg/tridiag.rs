use crate::scalar::Scalar;

/// Solves the symmetric tridiagonal system with diagonal `d` and off-diagonal
/// `e` (`e[k]` couples `k` and `k + 1`) by the Thomas algorithm.
///
/// No pivoting; intended for diagonally dominant matrices.
pub fn solve_symmetric_tridiagonal<T: Scalar>(d: &[T], e: &[T], rhs: &[T], x: &mut [T]) -> Result<(), String> {
    let n = d.len();
    if e.len() + 1 != n || rhs.len() != n || x.len() != n {
        return Err("tridiagonal dimensions disagree".into());
    }
    let mut c = vec![T::zero(); n];
    let mut y = vec![T::zero(); n];
    let mut piv = d[0];
    if piv == T::zero() || !piv.is_finite() {
        return Err("zero pivot at row 0".into());
    }
    y[0] = rhs[0] / piv;
    for k in 1..n {
        c[k - 1] = e[k - 1] / piv;
        piv = d[k] - e[k - 1] * c[k - 1];
        if piv == T::zero() || !piv.is_finite() {
            return Err(format!("zero pivot at row {k}"));
        }
        y[k] = (rhs[k] - e[k - 1] * y[k - 1]) / piv;
    }
    x[n - 1] = y[n - 1];
    for k in (0..n - 1).rev() {
        x[k] = y[k] - c[k] * x[k + 1];
    }
    Ok(())
}

/// `y = T x` for the symmetric tridiagonal matrix `(d, e)`.
pub fn tridiagonal_apply<T: Scalar>(d: &[T], e: &[T], x: &[T], y: &mut [T]) {
    let n = d.len();
    for k in 0..n {
        let mut s = d[k] * x[k];
        if k > 0 {
            s += e[k - 1] * x[k - 1];
        }
        if k + 1 < n {
            s += e[k] * x[k + 1];
        }
        y[k] = s;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_known_solution() {
        let n = 50;
        let d: Vec<f64> = (0..n).map(|k| 4.0 + k as f64 * 0.01).collect();
        let e: Vec<f64> = (0..n - 1).map(|k| -1.0 - (k % 3) as f64 * 0.3).collect();
        let xs: Vec<f64> = (0..n).map(|k| (k as f64 * 0.37).sin()).collect();
        let mut b = vec![0.0; n];
        tridiagonal_apply(&d, &e, &xs, &mut b);
        let mut x = vec![0.0; n];
        solve_symmetric_tridiagonal(&d, &e, &b, &mut x).unwrap();
        for k in 0..n {
            assert!((x[k] - xs[k]).abs() < 1e-13);
        }
    }

    #[test]
    fn rejects_zero_pivot() {
        let mut x = [0.0; 2];
        assert!(solve_symmetric_tridiagonal(&[0.0, 1.0], &[1.0], &[1.0, 1.0], &mut x).is_err());
    }
}
