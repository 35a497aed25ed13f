use crate::scalar::Scalar;

/// Compressed sparse row matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Csr<T> {
    n: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<T>,
}

impl<T: Scalar> Csr<T> {
    /// Assembles from `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, T)>) -> Self {
        triplets.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0usize; n + 1];
        let mut cols = Vec::with_capacity(triplets.len());
        let mut vals: Vec<T> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in triplets {
            assert!(i < n && j < n, "triplet ({i}, {j}) outside {n}x{n}");
            if last == Some((i, j)) {
                *vals.last_mut().unwrap() += v;
            } else {
                cols.push(j);
                vals.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self { n, ncols: n, row_ptr, cols, vals }
    }

    /// Builds from per-row `(col, value)` lists, which must not repeat a column.
    pub fn from_rows(ncols: usize, rows: Vec<Vec<(usize, T)>>) -> Self {
        let n = rows.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        row_ptr.push(0);
        let nnz = rows.iter().map(Vec::len).sum();
        let mut cols = Vec::with_capacity(nnz);
        let mut vals = Vec::with_capacity(nnz);
        for mut row in rows {
            row.sort_by_key(|e| e.0);
            for (j, v) in row {
                debug_assert!(j < ncols);
                cols.push(j);
                vals.push(v);
            }
            row_ptr.push(cols.len());
        }
        Self { n, ncols, row_ptr, cols, vals }
    }

    /// Number of rows.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn transpose(&self) -> Self {
        let mut count = vec![0usize; self.ncols + 1];
        for &j in &self.cols {
            count[j + 1] += 1;
        }
        for j in 0..self.ncols {
            count[j + 1] += count[j];
        }
        let row_ptr = count.clone();
        let mut next = count;
        let mut cols = vec![0usize; self.cols.len()];
        let mut vals = vec![T::zero(); self.vals.len()];
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.cols[k];
                cols[next[j]] = i;
                vals[next[j]] = self.vals[k];
                next[j] += 1;
            }
        }
        Self { n: self.ncols, ncols: self.n, row_ptr, cols, vals }
    }

    /// Sparse product `self * other` (row-by-row accumulation, parallel over rows).
    pub fn matmul(&self, other: &Csr<T>) -> Self {
        use rayon::prelude::*;
        assert_eq!(self.ncols, other.n, "inner dimensions differ");
        let m = other.ncols;
        let rows: Vec<Vec<(usize, T)>> = (0..self.n)
            .into_par_iter()
            .map_init(
                || (vec![T::zero(); m], vec![usize::MAX; m]),
                |(acc, mark), i| {
                    let mut touched = Vec::new();
                    for (k, a) in self.row(i) {
                        for (j, b) in other.row(k) {
                            if mark[j] != i {
                                mark[j] = i;
                                acc[j] = T::zero();
                                touched.push(j);
                            }
                            acc[j] += a * b;
                        }
                    }
                    touched.into_iter().map(|j| (j, acc[j])).collect()
                },
            )
            .collect();
        Self::from_rows(m, rows)
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    pub fn diagonal(&self) -> Vec<T> {
        (0..self.n).map(|i| self.row(i).find(|&(j, _)| j == i).map(|(_, v)| v).unwrap_or_else(T::zero)).collect()
    }

    pub fn apply(&self, x: &[T], y: &mut [T]) {
        for i in 0..self.n {
            y[i] = self.row(i).map(|(j, v)| v * x[j]).sum();
        }
    }

    pub fn apply_abs(&self, x: &[T], y: &mut [T]) {
        for i in 0..self.n {
            y[i] = self.row(i).map(|(j, v)| v.abs() * x[j].abs()).sum();
        }
    }

    /// Copy with `shift` added to the diagonal (every row must store its diagonal).
    pub fn with_diagonal_shift(&self, shift: &[T]) -> Self {
        let mut out = self.clone();
        for i in 0..self.n {
            for k in out.row_ptr[i]..out.row_ptr[i + 1] {
                if out.cols[k] == i {
                    out.vals[k] += shift[i];
                }
            }
        }
        out
    }

    pub(crate) fn raw(&self) -> (&[usize], &[usize], &[T]) {
        (&self.row_ptr, &self.cols, &self.vals)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_and_transpose_match_dense() {
        let a = Csr::from_rows(3, vec![vec![(0, 1.0), (2, 2.0)], vec![(1, -1.0)]]);
        let b = Csr::from_rows(2, vec![vec![(1, 3.0)], vec![(0, 4.0)], vec![(0, 1.0), (1, 1.0)]]);
        let c = a.matmul(&b);
        let dense = |m: &Csr<f64>| {
            let mut d = vec![vec![0.0; m.ncols()]; m.n()];
            for i in 0..m.n() {
                for (j, v) in m.row(i) {
                    d[i][j] = v;
                }
            }
            d
        };
        assert_eq!(dense(&c), vec![vec![2.0, 5.0], vec![-4.0, 0.0]]);
        let t = a.transpose();
        assert_eq!(dense(&t), vec![vec![1.0, 0.0], vec![0.0, -1.0], vec![2.0, 0.0]]);
    }

    #[test]
    fn triplets_sum_duplicates() {
        let a = Csr::from_triplets(2, vec![(0, 0, 1.0), (0, 1, 2.0), (0, 0, 3.0), (1, 1, 5.0)]);
        assert_eq!(a.nnz(), 3);
        assert_eq!(a.diagonal(), vec![4.0, 5.0]);
        let mut y = [0.0; 2];
        a.apply(&[1.0, 1.0], &mut y);
        assert_eq!(y, [6.0, 5.0]);
        let b = a.with_diagonal_shift(&[1.0, -1.0]);
        assert_eq!(b.diagonal(), vec![5.0, 4.0]);
    }
}
