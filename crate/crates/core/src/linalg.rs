//! Minimal dense Cholesky factorization for the small design-covariance
//! matrices. The lower triangle is row-packed; element `(i, j)` with
//! `j <= i` lives at `i*(i+1)/2 + j`. No external BLAS: the matrices stay
//! at design size `n`, never grid size.

#[derive(Debug)]
pub(crate) struct PackedCholesky {
    n: usize,
    l: Vec<f64>,
    inv_diag: Vec<f64>,
}

impl PackedCholesky {
    /// Factor a symmetric positive definite matrix given as a row-packed
    /// lower triangle. Returns the index of the first non-positive pivot
    /// on failure.
    pub fn factor(packed_lower: &[f64], n: usize) -> Result<PackedCholesky, usize> {
        debug_assert_eq!(packed_lower.len(), n * (n + 1) / 2);
        let mut l = packed_lower.to_vec();
        let mut inv_diag = vec![0.0; n];
        for i in 0..n {
            let row_i = i * (i + 1) / 2;
            for j in 0..=i {
                let row_j = j * (j + 1) / 2;
                let mut s = l[row_i + j];
                for k in 0..j {
                    s -= l[row_i + k] * l[row_j + k];
                }
                if i == j {
                    if s <= 0.0 || !s.is_finite() {
                        return Err(i);
                    }
                    let d = s.sqrt();
                    l[row_i + i] = d;
                    inv_diag[i] = 1.0 / d;
                } else {
                    l[row_i + j] = s * inv_diag[j];
                }
            }
        }
        Ok(PackedCholesky { n, l, inv_diag })
    }


    /// Forward substitution `L y = k` writing into `y`, returning `|y|^2`.
    ///
    /// This is the conditioning hot path: the posterior variance at a point
    /// is the prior variance minus this squared norm.
    #[inline]
    pub fn forward_norm_sq(&self, k: &[f64], y: &mut [f64]) -> f64 {
        debug_assert_eq!(k.len(), self.n);
        debug_assert_eq!(y.len(), self.n);
        let l = &self.l;
        let mut acc = 0.0;
        let mut row = 0usize;
        for i in 0..self.n {
            let mut s = k[i];
            for (lij, yj) in l[row..row + i].iter().zip(y[..i].iter()) {
                s -= lij * yj;
            }
            let yi = s * self.inv_diag[i];
            y[i] = yi;
            acc += yi * yi;
            row += i + 1;
        }
        acc
    }

    /// Solve `A x = b` with `A = L L^T`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x = vec![0.0; n];
        // forward: L y = b
        let mut row = 0usize;
        for i in 0..n {
            let mut s = b[i];
            for (lij, xj) in self.l[row..row + i].iter().zip(&x[..i]) {
                s -= lij * xj;
            }
            x[i] = s * self.inv_diag[i];
            row += i + 1;
        }
        // backward: L^T x = y
        for i in (0..n).rev() {
            let mut s = x[i];
            for (j, xj) in x.iter().enumerate().take(n).skip(i + 1) {
                s -= self.l[j * (j + 1) / 2 + i] * xj;
            }
            x[i] = s * self.inv_diag[i];
        }
        x
    }
}
