//! Dense complex tensor kernels.
//!
//! `DenseTensor` stores complex double-precision entries in row-major order
//! (last axis fastest). Every higher layer — MPS, MPO, circuit environments —
//! is built from the four operations here: pairwise contraction, axis
//! permutation, truncated SVD across an axis bipartition, and the polar
//! (nearest-unitary) factor of a square matrix.
//!
//! All operations are pure functions on immutable inputs and are safe to call
//! concurrently.

use num_complex::Complex64;

use crate::error::{QpdeError, Result};
use crate::linalg::{self, CMatrix};

pub type C64 = Complex64;

/// Dense multi-dimensional complex array, row-major.
#[derive(Clone, Debug)]
pub struct DenseTensor {
    shape: Vec<usize>,
    data: Vec<C64>,
}

impl DenseTensor {
    pub fn zeros(shape: &[usize]) -> Self {
        let len = shape.iter().product();
        DenseTensor { shape: shape.to_vec(), data: vec![C64::new(0.0, 0.0); len] }
    }

    pub fn from_data(shape: &[usize], data: Vec<C64>) -> Result<Self> {
        let len: usize = shape.iter().product();
        if data.len() != len {
            return Err(QpdeError::ShapeMismatch(format!(
                "data length {} does not match shape {:?}",
                data.len(),
                shape
            )));
        }
        Ok(DenseTensor { shape: shape.to_vec(), data })
    }

    /// Scalar tensor (rank 0).
    pub fn scalar(v: C64) -> Self {
        DenseTensor { shape: vec![], data: vec![v] }
    }

    /// Identity matrix as a rank-2 tensor.
    pub fn eye(n: usize) -> Self {
        let mut t = DenseTensor::zeros(&[n, n]);
        for i in 0..n {
            t.data[i * n + i] = C64::new(1.0, 0.0);
        }
        t
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [C64] {
        &mut self.data
    }

    /// Reinterpret the buffer under a new shape of equal length.
    pub fn reshape(&self, shape: &[usize]) -> Result<DenseTensor> {
        let len: usize = shape.iter().product();
        if len != self.data.len() {
            return Err(QpdeError::ShapeMismatch(format!(
                "cannot reshape {:?} into {:?}",
                self.shape, shape
            )));
        }
        Ok(DenseTensor { shape: shape.to_vec(), data: self.data.clone() })
    }

    fn strides(shape: &[usize]) -> Vec<usize> {
        let mut s = vec![1usize; shape.len()];
        for i in (0..shape.len().saturating_sub(1)).rev() {
            s[i] = s[i + 1] * shape[i + 1];
        }
        s
    }

    /// Permute axes: `perm[k]` is the source axis placed at position `k`.
    pub fn permute(&self, perm: &[usize]) -> DenseTensor {
        assert_eq!(perm.len(), self.shape.len(), "permutation arity");
        let r = self.shape.len();
        if r <= 1 || perm.iter().enumerate().all(|(i, &p)| i == p) {
            return self.clone();
        }
        let new_shape: Vec<usize> = perm.iter().map(|&p| self.shape[p]).collect();
        let old_strides = Self::strides(&self.shape);
        let src_stride: Vec<usize> = perm.iter().map(|&p| old_strides[p]).collect();
        let mut out = vec![C64::new(0.0, 0.0); self.data.len()];
        let mut idx = vec![0usize; r];
        let mut src = 0usize;
        for slot in out.iter_mut() {
            *slot = self.data[src];
            // odometer increment over the new axis order
            for ax in (0..r).rev() {
                idx[ax] += 1;
                src += src_stride[ax];
                if idx[ax] < new_shape[ax] {
                    break;
                }
                src -= src_stride[ax] * new_shape[ax];
                idx[ax] = 0;
            }
        }
        DenseTensor { shape: new_shape, data: out }
    }

    pub fn conj(&self) -> DenseTensor {
        DenseTensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|c| c.conj()).collect(),
        }
    }

    pub fn scale(&self, a: C64) -> DenseTensor {
        DenseTensor { shape: self.shape.clone(), data: self.data.iter().map(|c| c * a).collect() }
    }

    pub fn add(&self, other: &DenseTensor) -> Result<DenseTensor> {
        if self.shape != other.shape {
            return Err(QpdeError::ShapeMismatch("add on unequal shapes".into()));
        }
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Ok(DenseTensor { shape: self.shape.clone(), data })
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Sum over a pair of equal-extent axes (partial trace).
    pub fn trace_pair(&self, ax1: usize, ax2: usize) -> Result<DenseTensor> {
        if ax1 == ax2 || self.shape[ax1] != self.shape[ax2] {
            return Err(QpdeError::ShapeMismatch(format!(
                "trace over axes {ax1},{ax2} of {:?}",
                self.shape
            )));
        }
        let (lo, hi) = (ax1.min(ax2), ax1.max(ax2));
        let r = self.shape.len();
        // bring the traced pair to the back, then sum diagonals
        let mut perm: Vec<usize> = (0..r).filter(|&a| a != lo && a != hi).collect();
        let kept: Vec<usize> = perm.iter().map(|&a| self.shape[a]).collect();
        perm.push(lo);
        perm.push(hi);
        let moved = self.permute(&perm);
        let d = self.shape[lo];
        let block: usize = kept.iter().product();
        let mut out = vec![C64::new(0.0, 0.0); block];
        for (b, slot) in out.iter_mut().enumerate() {
            let base = b * d * d;
            let mut acc = C64::new(0.0, 0.0);
            for k in 0..d {
                acc += moved.data[base + k * d + k];
            }
            *slot = acc;
        }
        Ok(DenseTensor { shape: kept, data: out })
    }

    /// View as a matrix splitting axes `[0, split)` from `[split, rank)`.
    pub fn as_matrix(&self, split: usize) -> CMatrix {
        let rows: usize = self.shape[..split].iter().product();
        let cols: usize = self.shape[split..].iter().product();
        CMatrix { rows, cols, data: self.data.clone() }
    }

    pub fn from_matrix(m: &CMatrix, shape: &[usize]) -> Result<DenseTensor> {
        DenseTensor::from_data(shape, m.data.clone())
    }
}

/// Result of a truncated SVD across an axis bipartition.
///
/// `u` carries the row-group axes plus a new trailing bond axis; `vdag`
/// carries a leading bond axis plus the column-group axes. Singular values
/// are sorted descending and `truncation_error` is the 2-norm of the
/// discarded tail.
#[derive(Clone, Debug)]
pub struct SVDResult {
    pub u: DenseTensor,
    pub s: Vec<f64>,
    pub vdag: DenseTensor,
    pub truncation_error: f64,
}

/// Contract `a` and `b` over the given axis pairs `(axis_of_a, axis_of_b)`.
///
/// The result carries the unpaired axes of `a` in order, then those of `b`.
/// An empty pair list is the outer product.
pub fn contract(a: &DenseTensor, b: &DenseTensor, axis_pairs: &[(usize, usize)]) -> Result<DenseTensor> {
    for &(ia, ib) in axis_pairs {
        if ia >= a.rank() || ib >= b.rank() || a.shape[ia] != b.shape[ib] {
            return Err(QpdeError::ShapeMismatch(format!(
                "contract axes ({ia},{ib}) of {:?} and {:?}",
                a.shape, b.shape
            )));
        }
    }
    let a_con: Vec<usize> = axis_pairs.iter().map(|p| p.0).collect();
    let b_con: Vec<usize> = axis_pairs.iter().map(|p| p.1).collect();
    let a_free: Vec<usize> = (0..a.rank()).filter(|x| !a_con.contains(x)).collect();
    let b_free: Vec<usize> = (0..b.rank()).filter(|x| !b_con.contains(x)).collect();

    let mut a_perm = a_free.clone();
    a_perm.extend_from_slice(&a_con);
    let mut b_perm = b_con.clone();
    b_perm.extend_from_slice(&b_free);

    let ap = a.permute(&a_perm);
    let bp = b.permute(&b_perm);

    let m: usize = a_free.iter().map(|&x| a.shape[x]).product();
    let k: usize = a_con.iter().map(|&x| a.shape[x]).product();
    let n: usize = b_free.iter().map(|&x| b.shape[x]).product();

    let am = CMatrix { rows: m, cols: k, data: ap.data };
    let bm = CMatrix { rows: k, cols: n, data: bp.data };
    let cm = linalg::matmul(&am, &bm);

    let mut shape: Vec<usize> = a_free.iter().map(|&x| a.shape[x]).collect();
    shape.extend(b_free.iter().map(|&x| b.shape[x]));
    DenseTensor::from_data(&shape, cm.data)
}

/// Truncated SVD of `t` split after axis `split` (row group = first `split` axes).
///
/// Keeps singular values with `s_k / s_0 > cutoff` (relative convention),
/// capped at `max_bond`. The kept count is always at least one.
pub fn truncated_svd(
    t: &DenseTensor,
    split: usize,
    max_bond: usize,
    cutoff: f64,
) -> Result<SVDResult> {
    if split == 0 || split >= t.rank() {
        return Err(QpdeError::ShapeMismatch(format!(
            "split {split} does not bipartition rank-{} tensor",
            t.rank()
        )));
    }
    let m = t.as_matrix(split);
    let (u, s, vdag) = linalg::svd(&m)?;
    if s.is_empty() || s[0] <= 0.0 {
        return Err(QpdeError::SingularSpectrumDegenerate(
            "all singular values vanish".into(),
        ));
    }
    let mut keep = s.iter().filter(|&&x| x / s[0] > cutoff).count();
    keep = keep.clamp(1, max_bond.max(1)).min(s.len());
    let discarded: f64 = s[keep..].iter().map(|x| x * x).sum::<f64>().sqrt();

    let rows = m.rows;
    let cols = m.cols;
    let mut u_t = CMatrix::zeros(rows, keep);
    for i in 0..rows {
        for j in 0..keep {
            u_t.set(i, j, u.at(i, j));
        }
    }
    let mut v_t = CMatrix::zeros(keep, cols);
    for i in 0..keep {
        for j in 0..cols {
            v_t.set(i, j, vdag.at(i, j));
        }
    }

    let mut u_shape: Vec<usize> = t.shape[..split].to_vec();
    u_shape.push(keep);
    let mut v_shape = vec![keep];
    v_shape.extend_from_slice(&t.shape[split..]);

    Ok(SVDResult {
        u: DenseTensor::from_data(&u_shape, u_t.data)?,
        s: s[..keep].to_vec(),
        vdag: DenseTensor::from_data(&v_shape, v_t.data)?,
        truncation_error: discarded,
    })
}

/// Truncated SVD through the randomized range sketch, same interface as
/// [`truncated_svd`]. The discarded mass is recovered from the Frobenius-norm
/// identity instead of explicit tail singular values, so the reported
/// truncation error is an upper estimate. Intended for large splits whose
/// spectrum decays within `max_bond`.
pub fn truncated_svd_sketched(
    t: &DenseTensor,
    split: usize,
    max_bond: usize,
    cutoff: f64,
) -> Result<SVDResult> {
    const OVERSAMPLE: usize = 64;
    if split == 0 || split >= t.rank() {
        return Err(QpdeError::ShapeMismatch(format!(
            "split {split} does not bipartition rank-{} tensor",
            t.rank()
        )));
    }
    let m = t.as_matrix(split);
    let rank = max_bond.saturating_add(OVERSAMPLE);
    let (u, s, vdag) = linalg::svd_sketch(&m, rank)?;
    if s.is_empty() || s[0] <= 0.0 {
        return Err(QpdeError::SingularSpectrumDegenerate(
            "all singular values vanish".into(),
        ));
    }
    let mut keep = s.iter().filter(|&&x| x / s[0] > cutoff).count();
    keep = keep.clamp(1, max_bond.max(1)).min(s.len());
    let kept_sq: f64 = s[..keep].iter().map(|x| x * x).sum();
    let total_sq: f64 = m.data.iter().map(|c| c.norm_sqr()).sum();
    let discarded = (total_sq - kept_sq).max(0.0).sqrt();

    let rows = m.rows;
    let cols = m.cols;
    let mut u_t = CMatrix::zeros(rows, keep);
    for i in 0..rows {
        for j in 0..keep {
            u_t.set(i, j, u.at(i, j));
        }
    }
    let mut v_t = CMatrix::zeros(keep, cols);
    for i in 0..keep {
        for j in 0..cols {
            v_t.set(i, j, vdag.at(i, j));
        }
    }
    let mut u_shape: Vec<usize> = t.shape[..split].to_vec();
    u_shape.push(keep);
    let mut v_shape = vec![keep];
    v_shape.extend_from_slice(&t.shape[split..]);
    Ok(SVDResult {
        u: DenseTensor::from_data(&u_shape, u_t.data)?,
        s: s[..keep].to_vec(),
        vdag: DenseTensor::from_data(&v_shape, v_t.data)?,
        truncation_error: discarded,
    })
}

/// Nearest unitary to a square matrix `g = U S V^dag`, returned as `U V^dag`.
///
/// Errors on rank-deficient input instead of completing the gauge arbitrarily.
pub fn polar_unitary(g: &DenseTensor) -> Result<DenseTensor> {
    if g.rank() != 2 || g.shape[0] != g.shape[1] {
        return Err(QpdeError::ShapeMismatch(format!(
            "polar factor needs a square matrix, got {:?}",
            g.shape
        )));
    }
    let m = g.as_matrix(1);
    let (u, s, vdag) = linalg::svd(&m)?;
    let n = g.shape[0];
    if s[n - 1] <= 1e-14 * s[0].max(1e-300) {
        return Err(QpdeError::PolarDegenerate(format!(
            "smallest singular value {:.3e} relative to {:.3e}",
            s[n - 1],
            s[0]
        )));
    }
    let w = linalg::matmul(&u, &vdag);
    DenseTensor::from_data(&[n, n], w.data)
}

/// Sum of singular values of a square matrix; the optimal value of
/// `max_W Re Tr[g^dag W]` over unitary `W`.
pub fn nuclear_norm(g: &DenseTensor) -> Result<f64> {
    let (_, s, _) = linalg::svd(&g.as_matrix(1))?;
    Ok(s.iter().sum())
}
