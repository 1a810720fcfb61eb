use crate::error::{Error, Result};

/// Dense row-major matrix of `f64`.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor2 {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Tensor2 {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Shape(format!(
                "buffer of length {} cannot be {rows}x{cols}",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn scalar(x: f64) -> Self {
        Self {
            rows: 1,
            cols: 1,
            data: vec![x],
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// `self · rhs`
    pub fn matmul(&self, rhs: &Tensor2) -> Result<Tensor2> {
        if self.cols != rhs.rows {
            return Err(Error::Shape(format!(
                "matmul {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = Tensor2::zeros(self.rows, rhs.cols);
        gemm(1.0, self, false, rhs, false, 0.0, &mut out);
        Ok(out)
    }

    pub fn transpose(&self) -> Tensor2 {
        let mut out = Tensor2::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        out
    }

    pub fn max_abs_diff(&self, other: &Tensor2) -> f64 {
        assert_eq!(self.shape(), other.shape());
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// `c ← alpha · op(a) · op(b) + beta · c`, where `op` optionally transposes.
/// Shapes are the caller's responsibility.
pub(crate) fn gemm(
    alpha: f64,
    a: &Tensor2,
    trans_a: bool,
    b: &Tensor2,
    trans_b: bool,
    beta: f64,
    c: &mut Tensor2,
) {
    let (m, k) = if trans_a { (a.cols, a.rows) } else { (a.rows, a.cols) };
    let (kb, n) = if trans_b { (b.cols, b.rows) } else { (b.rows, b.cols) };
    assert_eq!(k, kb, "gemm inner dimensions");
    assert_eq!((c.rows, c.cols), (m, n), "gemm output shape");
    if m == 0 || n == 0 {
        return;
    }
    let (rsa, csa) = if trans_a { (1, a.cols) } else { (a.cols, 1) };
    let (rsb, csb) = if trans_b { (1, b.cols) } else { (b.cols, 1) };
    // SAFETY: strides describe the row-major buffers of the asserted shapes.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            alpha,
            a.data.as_ptr(),
            rsa as isize,
            csa as isize,
            b.data.as_ptr(),
            rsb as isize,
            csb as isize,
            beta,
            c.data.as_mut_ptr(),
            c.cols as isize,
            1,
        );
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive(a: &Tensor2, b: &Tensor2) -> Tensor2 {
        let mut out = Tensor2::zeros(a.rows, b.cols);
        for i in 0..a.rows {
            for j in 0..b.cols {
                out.data[i * b.cols + j] = (0..a.cols).map(|k| a.get(i, k) * b.get(k, j)).sum();
            }
        }
        out
    }

    #[test]
    fn gemm_matches_naive_with_transposes() {
        let a = Tensor2::from_vec(3, 4, (0..12).map(|i| (i as f64).sin()).collect()).unwrap();
        let b = Tensor2::from_vec(4, 2, (0..8).map(|i| (i as f64).cos()).collect()).unwrap();
        let want = naive(&a, &b);
        assert!(a.matmul(&b).unwrap().max_abs_diff(&want) < 1e-14);

        let mut c = Tensor2::zeros(3, 2);
        gemm(1.0, &a.transpose(), true, &b.transpose(), true, 0.0, &mut c);
        assert!(c.max_abs_diff(&want) < 1e-14);
    }

    #[test]
    fn shape_errors() {
        let a = Tensor2::zeros(2, 3);
        assert!(matches!(a.matmul(&a), Err(Error::Shape(_))));
        assert!(Tensor2::from_vec(2, 2, vec![0.0; 3]).is_err());
    }
}
