use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Dense row-major matrix. `rows * cols == data.len()` always holds; the
/// fields stay private so constructors can enforce it.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<F> {
    rows: usize,
    cols: usize,
    data: Vec<F>,
}

impl<F: Scalar> Matrix<F> {
    pub fn new(rows: usize, cols: usize, data: Vec<F>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "matrix {rows}x{cols} needs {} elements, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![F::zero(); rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> F) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[F] {
        &self.data
    }

    pub fn get(&self, r: usize, c: usize) -> F {
        debug_assert!(r < self.rows && c < self.cols);
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: F) {
        debug_assert!(r < self.rows && c < self.cols);
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[F] {
        debug_assert!(r < self.rows);
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// `self * x` for a column vector `x`. Callers validate shapes first;
    /// a mismatch here is a programming error.
    pub fn matvec(&self, x: &[F]) -> Vec<F> {
        assert_eq!(self.cols, x.len(), "matvec shape mismatch");
        (0..self.rows)
            .map(|r| {
                self.row(r)
                    .iter()
                    .zip(x)
                    .fold(F::zero(), |acc, (&w, &xi)| acc + w * xi)
            })
            .collect()
    }

    /// `self^T * v`, without materializing the transpose.
    pub fn matvec_transpose(&self, v: &[F]) -> Vec<F> {
        assert_eq!(self.rows, v.len(), "matvec_transpose shape mismatch");
        let mut out = vec![F::zero(); self.cols];
        for (r, &vr) in v.iter().enumerate() {
            for (o, &w) in out.iter_mut().zip(self.row(r)) {
                *o += w * vr;
            }
        }
        out
    }

    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.cols, rhs.rows, "matmul shape mismatch");
        let mut out = Self::zeros(self.rows, rhs.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(r, k);
                if a == F::zero() {
                    continue;
                }
                let rhs_row = rhs.row(k);
                let out_row = &mut out.data[r * rhs.cols..(r + 1) * rhs.cols];
                for (o, &b) in out_row.iter_mut().zip(rhs_row) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// New matrix keeping `indices` rows, in the given order.
    pub fn select_rows(&self, indices: &[usize]) -> Self {
        let mut data = Vec::with_capacity(indices.len() * self.cols);
        for &r in indices {
            data.extend_from_slice(self.row(r));
        }
        Self {
            rows: indices.len(),
            cols: self.cols,
            data,
        }
    }

    /// New matrix keeping `indices` columns, in the given order.
    pub fn select_cols(&self, indices: &[usize]) -> Self {
        Self::from_fn(self.rows, indices.len(), |r, i| self.get(r, indices[i]))
    }

    /// New matrix with the given rows removed. `drop` must be sorted and
    /// duplicate-free.
    pub fn drop_rows(&self, drop: &[usize]) -> Self {
        let keep: Vec<usize> = (0..self.rows)
            .filter(|r| drop.binary_search(r).is_err())
            .collect();
        self.select_rows(&keep)
    }

    /// New matrix with the given columns removed. `drop` must be sorted and
    /// duplicate-free.
    pub fn drop_cols(&self, drop: &[usize]) -> Self {
        let keep: Vec<usize> = (0..self.cols)
            .filter(|c| drop.binary_search(c).is_err())
            .collect();
        self.select_cols(&keep)
    }

    /// `[self | right]` side by side.
    pub fn hconcat(&self, right: &Self) -> Self {
        assert_eq!(self.rows, right.rows, "hconcat shape mismatch");
        let mut data = Vec::with_capacity(self.data.len() + right.data.len());
        for r in 0..self.rows {
            data.extend_from_slice(self.row(r));
            data.extend_from_slice(right.row(r));
        }
        Self {
            rows: self.rows,
            cols: self.cols + right.cols,
            data,
        }
    }

    /// `self += scale * other`, elementwise.
    pub fn add_scaled(&mut self, other: &Self, scale: F) {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += scale * b;
        }
    }

    /// `self += scale * u * v^T` (rank-1 update, used for weight gradients).
    pub fn add_scaled_outer(&mut self, u: &[F], v: &[F], scale: F) {
        assert_eq!(self.rows, u.len());
        assert_eq!(self.cols, v.len());
        for (r, &ur) in u.iter().enumerate() {
            let s = scale * ur;
            let row = &mut self.data[r * self.cols..(r + 1) * self.cols];
            for (w, &vc) in row.iter_mut().zip(v) {
                *w += s * vc;
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: usize, cols: usize, data: &[f64]) -> Matrix<f64> {
        Matrix::new(rows, cols, data.to_vec()).unwrap()
    }

    #[test]
    fn new_rejects_wrong_length() {
        assert!(Matrix::new(2, 3, vec![0.0f64; 5]).is_err());
    }

    #[test]
    fn matvec_matches_by_hand() {
        let a = m(2, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        assert_eq!(a.matvec(&[1.0, 0.0, -1.0]), vec![-2.0, -2.0]);
    }

    #[test]
    fn matvec_transpose_matches_explicit_transpose() {
        let a = m(2, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        // A^T * [1, -1] = [1-4, 2-5, 3-6]
        assert_eq!(a.matvec_transpose(&[1.0, -1.0]), vec![-3.0, -3.0, -3.0]);
    }

    #[test]
    fn matmul_matches_by_hand() {
        let a = m(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let b = m(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        assert_eq!(a.matmul(&b), m(2, 2, &[2.0, 1.0, 4.0, 3.0]));
    }

    #[test]
    fn select_and_drop_are_complements() {
        let a = m(3, 3, &[0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0]);
        assert_eq!(a.select_rows(&[1]), m(1, 3, &[3.0, 4.0, 5.0]));
        assert_eq!(a.drop_rows(&[0, 2]), m(1, 3, &[3.0, 4.0, 5.0]));
        assert_eq!(a.select_cols(&[0, 2]).row(1), &[3.0, 5.0]);
        assert_eq!(a.drop_cols(&[1]).row(1), &[3.0, 5.0]);
    }

    #[test]
    fn hconcat_keeps_row_layout() {
        let a = m(2, 1, &[1.0, 2.0]);
        let b = m(2, 2, &[3.0, 4.0, 5.0, 6.0]);
        assert_eq!(a.hconcat(&b), m(2, 3, &[1.0, 3.0, 4.0, 2.0, 5.0, 6.0]));
    }

    #[test]
    fn add_scaled_outer_matches_by_hand() {
        let mut a = Matrix::<f64>::zeros(2, 2);
        a.add_scaled_outer(&[1.0, 2.0], &[3.0, 4.0], 0.5);
        assert_eq!(a, m(2, 2, &[1.5, 2.0, 3.0, 4.0]));
    }
}
