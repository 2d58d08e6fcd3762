//! Dense matrix factorizations bridged to `faer`.
//!
//! All tensor-level code stores data row-major; the bridge copies into
//! column-major `faer` matrices and back. Copies are negligible next to the
//! factorization cost at every size this crate touches.

use faer::{Mat, MatRef, Side};
use num_complex::Complex64;

use crate::error::{QpdeError, Result};

pub(crate) type C64 = Complex64;

/// Row-major complex matrix as a flat buffer. The minimal shuttle type
/// between tensor storage and the factorization backend.
#[derive(Clone, Debug)]
pub struct CMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<C64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMatrix { rows, cols, data: vec![C64::new(0.0, 0.0); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = CMatrix::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = C64::new(1.0, 0.0);
        }
        m
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: C64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn dagger(&self) -> CMatrix {
        let mut out = CMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(j, i, self.at(i, j).conj());
            }
        }
        out
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    fn as_faer(&self) -> MatRef<'_, C64> {
        MatRef::from_row_major_slice(&self.data, self.rows, self.cols)
    }

    fn from_faer(m: MatRef<'_, C64>) -> CMatrix {
        let mut out = CMatrix::zeros(m.nrows(), m.ncols());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                out.set(i, j, m[(i, j)]);
            }
        }
        out
    }
}

/// `a * b` through the backend gemm.
pub fn matmul(a: &CMatrix, b: &CMatrix) -> CMatrix {
    assert_eq!(a.cols, b.rows, "matmul inner dimensions");
    let prod: Mat<C64> = a.as_faer() * b.as_faer();
    CMatrix::from_faer(prod.as_ref())
}

/// Thin SVD `a = u * diag(s) * vdag` with `s` sorted nonincreasing.
pub fn svd(a: &CMatrix) -> Result<(CMatrix, Vec<f64>, CMatrix)> {
    let f = a
        .as_faer()
        .thin_svd()
        .map_err(|e| QpdeError::Backend(format!("svd failed: {e:?}")))?;
    let k = f.S().dim();
    let s: Vec<f64> = (0..k).map(|i| f.S()[i].re).collect();
    let u = CMatrix::from_faer(f.U());
    // faer returns V; we hand out V^dagger to match the reconstruction u s vdag.
    let v = f.V();
    let mut vdag = CMatrix::zeros(k, a.cols);
    for i in 0..k {
        for j in 0..a.cols {
            vdag.set(i, j, v[(j, i)].conj());
        }
    }
    Ok((u, s, vdag))
}

/// Randomized truncated SVD (range sketch with one power iteration).
///
/// Accurate for spectra that decay past `rank`; the Frobenius mass beyond the
/// sketch is reported by the caller through the norm identity. Deterministic:
/// the Gaussian test matrix comes from a fixed-seed generator.
pub fn svd_sketch(a: &CMatrix, rank: usize) -> Result<(CMatrix, Vec<f64>, CMatrix)> {
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    let (rows, cols) = (a.rows, a.cols);
    let k = rank.min(rows).min(cols);
    if k == rows.min(cols) {
        return svd(a);
    }
    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(0x5eed_0001);
    let mut g = CMatrix::zeros(cols, k);
    for v in g.data.iter_mut() {
        let re: f64 = rng.sample(rand_distr::StandardNormal);
        let im: f64 = rng.sample(rand_distr::StandardNormal);
        *v = C64::new(re, im);
    }
    // Y = A G, one power iteration: Y = A (A^dag Y) = A (Y^dag A)^dag;
    // the transposed form avoids materializing A^dag at these sizes
    let y = matmul(a, &g);
    let aty = matmul(&y.dagger(), a).dagger();
    let y = matmul(a, &aty);
    let q = thin_q(&y)?;
    // B = Q^dag A  (k x cols)
    let b = matmul(&q.dagger(), a);
    // SVD of B through the LQ trick: B^dag = Q_b R_b  =>  B = R_b^dag Q_b^dag
    let qb = thin_q(&b.dagger())?;
    let small = matmul(&b, &qb); // = R_b^dag, k x k
    let (us, s, vdag_small) = svd(&small)?;
    let u = matmul(&q, &us);
    let vdag = matmul(&vdag_small, &qb.dagger());
    Ok((u, s, vdag))
}

fn thin_q(a: &CMatrix) -> Result<CMatrix> {
    let qr = a.as_faer().qr();
    let q = qr.compute_thin_Q();
    Ok(CMatrix::from_faer(q.as_ref()))
}

/// Eigendecomposition of a Hermitian matrix; eigenvalues ascending.
pub fn eigh(a: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    assert_eq!(a.rows, a.cols);
    let f = a
        .as_faer()
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| QpdeError::Backend(format!("eigh failed: {e:?}")))?;
    let n = a.rows;
    let w: Vec<f64> = (0..n).map(|i| f.S()[i].re).collect();
    let vecs = CMatrix::from_faer(f.U());
    Ok((w, vecs))
}

/// Eigenvalues of a general complex square matrix.
pub fn eigvals(a: &CMatrix) -> Result<Vec<C64>> {
    assert_eq!(a.rows, a.cols);
    let ev = a
        .as_faer()
        .eigenvalues()
        .map_err(|e| QpdeError::Backend(format!("eig failed: {e:?}")))?;
    Ok(ev)
}

/// Solve the real linear system `a x = b` by partial-pivot LU.
/// Small KKT and normal-equation systems only.
pub fn solve_real(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    let mut m: Vec<Vec<f64>> = a.iter().map(|r| r.clone()).collect();
    let mut rhs = b.to_vec();
    for col in 0..n {
        let (piv, mx) = (col..n)
            .map(|r| (r, m[r][col].abs()))
            .max_by(|x, y| x.1.total_cmp(&y.1))?;
        if mx < 1e-14 {
            return None;
        }
        m.swap(col, piv);
        rhs.swap(col, piv);
        for r in col + 1..n {
            let f = m[r][col] / m[col][col];
            for c in col..n {
                m[r][c] -= f * m[col][c];
            }
            rhs[r] -= f * rhs[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let mut acc = rhs[r];
        for c in r + 1..n {
            acc -= m[r][c] * x[c];
        }
        x[r] = acc / m[r][r];
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_like(rows: usize, cols: usize) -> CMatrix {
        let mut m = CMatrix::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                let re = (((i * 31 + j * 17) % 101) as f64) / 101.0 - 0.5;
                let im = (((i * 13 + j * 7) % 89) as f64) / 89.0 - 0.5;
                m.set(i, j, C64::new(re, im));
            }
        }
        m
    }

    #[test]
    fn svd_reconstructs() {
        let a = random_like(12, 7);
        let (u, s, vdag) = svd(&a).unwrap();
        let mut us = u.clone();
        for i in 0..us.rows {
            for j in 0..us.cols {
                let v = us.at(i, j) * s[j];
                us.set(i, j, v);
            }
        }
        let rec = matmul(&us, &vdag);
        let mut err = 0.0;
        for i in 0..a.rows {
            for j in 0..a.cols {
                err += (rec.at(i, j) - a.at(i, j)).norm_sqr();
            }
        }
        assert!(err.sqrt() < 1e-12);
    }

    #[test]
    fn eigh_diagonal() {
        let mut a = CMatrix::zeros(3, 3);
        a.set(0, 0, C64::new(2.0, 0.0));
        a.set(1, 1, C64::new(-1.0, 0.0));
        a.set(2, 2, C64::new(0.5, 0.0));
        let (w, _) = eigh(&a).unwrap();
        assert!((w[0] + 1.0).abs() < 1e-14);
        assert!((w[2] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn solve_real_small() {
        let a = vec![vec![2.0, 1.0], vec![1.0, 3.0]];
        let x = solve_real(&a, &[5.0, 10.0]).unwrap();
        assert!((2.0 * x[0] + x[1] - 5.0).abs() < 1e-12);
        assert!((x[0] + 3.0 * x[1] - 10.0).abs() < 1e-12);
    }
}
