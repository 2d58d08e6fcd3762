//! Open-boundary matrix product operators.
//!
//! Site tensors carry legs `(left bond, physical out 2, physical in 2,
//! right bond)`. Products and state applications use a left-to-right zip-up
//! with on-the-fly truncation, then a right-to-left two-site sweep at the
//! requested cutoff; the zip stage is exact (cutoff 0) wherever the carried
//! bond is already capped by the physical dimension.

use num_complex::Complex64;

use crate::error::{QpdeError, Result};
use crate::mps::{Mps, Truncation};
use crate::tensor::{contract, truncated_svd, truncated_svd_sketched, DenseTensor, SVDResult};

type C64 = Complex64;

/// Bond split honoring the truncation policy: exact SVD by default, the
/// randomized sketch once both matrix dimensions clear the threshold.
fn split_tensor(t: &DenseTensor, split: usize, tr: Truncation) -> Result<SVDResult> {
    let rows: usize = t.shape()[..split].iter().product();
    let cols: usize = t.shape()[split..].iter().product();
    let min_dim = rows.min(cols);
    if min_dim >= tr.sketch_min_dim && tr.max_bond.saturating_add(96) < min_dim {
        truncated_svd_sketched(t, split, tr.max_bond, tr.cutoff)
    } else {
        truncated_svd(t, split, tr.max_bond, tr.cutoff)
    }
}

#[derive(Clone, Debug)]
pub struct Mpo {
    sites: Vec<DenseTensor>,
}

/// Compression outcome attached to products and applications.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompressionInfo {
    /// 2-norm of discarded singular values over all truncation points.
    pub truncation_error: f64,
    /// Largest bond dimension in the result.
    pub max_bond: usize,
}

impl Mpo {
    pub fn from_sites(sites: Vec<DenseTensor>) -> Result<Self> {
        if sites.is_empty() {
            return Err(QpdeError::ShapeMismatch("empty MPO".into()));
        }
        for (i, s) in sites.iter().enumerate() {
            if s.rank() != 4 || s.shape()[1] != 2 || s.shape()[2] != 2 {
                return Err(QpdeError::ShapeMismatch(format!(
                    "site {i} has shape {:?}, want (l, 2, 2, r)",
                    s.shape()
                )));
            }
        }
        if sites[0].shape()[0] != 1 || sites[sites.len() - 1].shape()[3] != 1 {
            return Err(QpdeError::ShapeMismatch("boundary bonds must be 1".into()));
        }
        for i in 0..sites.len() - 1 {
            if sites[i].shape()[3] != sites[i + 1].shape()[0] {
                return Err(QpdeError::ShapeMismatch(format!("bond mismatch at {i}")));
            }
        }
        Ok(Mpo { sites })
    }

    pub fn identity(n: usize) -> Self {
        let sites = (0..n)
            .map(|_| {
                let mut t = DenseTensor::zeros(&[1, 2, 2, 1]);
                t.data_mut()[0] = C64::new(1.0, 0.0);
                t.data_mut()[3] = C64::new(1.0, 0.0);
                t
            })
            .collect();
        Mpo { sites }
    }

    /// Same single-site operator on every site (bond dimension 1).
    pub fn uniform_one_site(n: usize, op: &DenseTensor) -> Result<Self> {
        if op.rank() != 2 || op.shape() != [2, 2] {
            return Err(QpdeError::ShapeMismatch("one-site op must be 2x2".into()));
        }
        let sites = (0..n).map(|_| op.reshape(&[1, 2, 2, 1]).unwrap()).collect();
        Ok(Mpo { sites })
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn site(&self, i: usize) -> &DenseTensor {
        &self.sites[i]
    }

    pub fn sites(&self) -> &[DenseTensor] {
        &self.sites
    }

    pub fn max_bond(&self) -> usize {
        self.sites.iter().map(|s| s.shape()[3]).max().unwrap_or(1)
    }

    pub fn scale(&mut self, a: C64) {
        let last = self.sites.len() - 1;
        self.sites[last] = self.sites[last].scale(a);
    }

    /// Hermitian adjoint: swap out/in legs and conjugate.
    pub fn dagger(&self) -> Mpo {
        let sites = self.sites.iter().map(|t| t.conj().permute(&[0, 2, 1, 3])).collect();
        Mpo { sites }
    }

    /// Prepend `k` identity sites (idle wires on the left).
    pub fn padded_left(&self, k: usize) -> Mpo {
        let mut sites: Vec<DenseTensor> = Mpo::identity(k).sites;
        sites.extend(self.sites.iter().cloned());
        Mpo { sites }
    }

    /// Dense matrix of the operator; row index is the out configuration with
    /// site 0 as the most significant bit. Exponential in the site count.
    pub fn to_matrix(&self) -> DenseTensor {
        let n = self.sites.len();
        // accumulate (out_so_far, in_so_far, bond)
        let mut acc = DenseTensor::from_data(&[1, 1, 1], vec![C64::new(1.0, 0.0)]).unwrap();
        for t in &self.sites {
            // acc (O, I, b) x t (b, o, i, r) -> (O, I, o, i, r)
            let x = contract(&acc, t, &[(2, 0)]).unwrap();
            // -> (O, o, I, i, r) -> (O*o, I*i, r)
            let p = x.permute(&[0, 2, 1, 3, 4]);
            let (bigo, o, bigi, i, r) =
                (p.shape()[0], p.shape()[1], p.shape()[2], p.shape()[3], p.shape()[4]);
            acc = p.reshape(&[bigo * o, bigi * i, r]).unwrap();
        }
        let d = 1 << n;
        acc.reshape(&[d, d]).unwrap()
    }

    /// Frobenius norm via transfer contraction of Tr[O^dag O].
    pub fn frobenius_norm(&self) -> f64 {
        let mut env = DenseTensor::from_data(&[1, 1], vec![C64::new(1.0, 0.0)]).unwrap();
        for t in &self.sites {
            let x = contract(&env, &t.conj(), &[(0, 0)]).unwrap();
            env = contract(&x, t, &[(0, 0), (1, 1), (2, 2)]).unwrap();
        }
        env.data()[0].re.max(0.0).sqrt()
    }

    /// Trace Tr[O] by closing out/in legs on every site.
    pub fn trace(&self) -> C64 {
        let mut env = DenseTensor::from_data(&[1], vec![C64::new(1.0, 0.0)]).unwrap();
        for t in &self.sites {
            let closed = t.trace_pair(1, 2).unwrap(); // (l, r)
            env = contract(&env, &closed, &[(0, 0)]).unwrap();
        }
        env.data()[0]
    }

    /// Apply a gate on `span` contiguous sites starting at `start`, acting on
    /// the output legs (left multiplication `G * O`). The gate tensor has
    /// legs `(o_1..o_span, i_1..i_span)`.
    pub fn apply_gate_out(
        &mut self,
        gate: &DenseTensor,
        start: usize,
        span: usize,
        tr: Truncation,
    ) -> Result<f64> {
        assert_eq!(gate.rank(), 2 * span, "gate rank");
        // merge the span into one blob: legs (l, o_1, i_1, ..., o_k, i_k, r)
        let mut blob = self.sites[start].clone();
        for k in 1..span {
            blob = contract(&blob, &self.sites[start + k], &[(blob.rank() - 1, 0)])?;
        }
        // move outs to the front: current legs (l, o1, i1, o2, i2, ..., r)
        let r = blob.rank();
        let mut perm: Vec<usize> = vec![0];
        for k in 0..span {
            perm.push(1 + 2 * k); // o_k
        }
        for k in 0..span {
            perm.push(2 + 2 * k); // i_k
        }
        perm.push(r - 1);
        let blob = blob.permute(&perm); // (l, o..., i..., r)
        // contract gate's input legs with blob's out legs
        let pairs: Vec<(usize, usize)> = (0..span).map(|k| (span + k, 1 + k)).collect();
        let applied = contract(gate, &blob, &pairs)?;
        // legs (g_o..., l, i..., r) -> (l, g_o1, i1, g_o2, i2, ..., r)
        let mut back: Vec<usize> = vec![span];
        for k in 0..span {
            back.push(k); // new out k
            back.push(span + 1 + k); // in k
        }
        back.push(2 * span + 1);
        let mut merged = applied.permute(&back);
        // split back into site tensors
        let mut err_sq = 0.0;
        for k in 0..span - 1 {
            // merged legs: (l, o, i, [o, i, ...], r); split after (l, o, i)
            let svd = split_tensor(&merged, 3, tr)?;
            err_sq += svd.truncation_error * svd.truncation_error;
            self.sites[start + k] = svd.u;
            let kk = svd.s.len();
            let mut sv = svd.vdag.clone();
            let cols = sv.len() / kk;
            for (row, &sval) in svd.s.iter().enumerate() {
                for c in 0..cols {
                    let v = sv.data()[row * cols + c] * sval;
                    sv.data_mut()[row * cols + c] = v;
                }
            }
            merged = sv;
        }
        self.sites[start + span - 1] = merged;
        Ok(err_sq.sqrt())
    }

    /// Apply a gate on the input legs (right multiplication `O * G`).
    pub fn apply_gate_in(
        &mut self,
        gate: &DenseTensor,
        start: usize,
        span: usize,
        tr: Truncation,
    ) -> Result<f64> {
        assert_eq!(gate.rank(), 2 * span, "gate rank");
        let mut blob = self.sites[start].clone();
        for k in 1..span {
            blob = contract(&blob, &self.sites[start + k], &[(blob.rank() - 1, 0)])?;
        }
        let r = blob.rank();
        let mut perm: Vec<usize> = vec![0];
        for k in 0..span {
            perm.push(1 + 2 * k);
        }
        for k in 0..span {
            perm.push(2 + 2 * k);
        }
        perm.push(r - 1);
        let blob = blob.permute(&perm); // (l, o..., i..., r)
        // O * G: contract blob's in legs with gate's out legs
        let pairs: Vec<(usize, usize)> = (0..span).map(|k| (1 + span + k, k)).collect();
        let applied = contract(&blob, gate, &pairs)?;
        // legs (l, o..., r, g_i...) -> (l, o1, g_i1, ..., r)
        let mut back: Vec<usize> = vec![0];
        for k in 0..span {
            back.push(1 + k);
            back.push(span + 2 + k);
        }
        back.push(span + 1);
        let mut merged = applied.permute(&back);
        let mut err_sq = 0.0;
        for k in 0..span - 1 {
            let svd = split_tensor(&merged, 3, tr)?;
            err_sq += svd.truncation_error * svd.truncation_error;
            self.sites[start + k] = svd.u;
            let kk = svd.s.len();
            let mut sv = svd.vdag.clone();
            let cols = sv.len() / kk;
            for (row, &sval) in svd.s.iter().enumerate() {
                for c in 0..cols {
                    let v = sv.data()[row * cols + c] * sval;
                    sv.data_mut()[row * cols + c] = v;
                }
            }
            merged = sv;
        }
        self.sites[start + span - 1] = merged;
        Ok(err_sq.sqrt())
    }

    /// Right-to-left two-site truncation sweep (same scheme as for states).
    pub fn compress_sweep(&mut self, tr: Truncation) -> Result<f64> {
        let n = self.sites.len();
        let mut err_sq = 0.0;
        for i in (0..n.saturating_sub(1)).rev() {
            let blob = contract(&self.sites[i], &self.sites[i + 1], &[(3, 0)])?;
            // legs (l, o_i, i_i, o_j, i_j, r); split after (l, o_i, i_i)
            let svd = split_tensor(&blob, 3, tr)?;
            err_sq += svd.truncation_error * svd.truncation_error;
            let k = svd.s.len();
            let mut us = svd.u.clone();
            let rows = us.len() / k;
            for row in 0..rows {
                for (j, &sval) in svd.s.iter().enumerate() {
                    let v = us.data()[row * k + j] * sval;
                    us.data_mut()[row * k + j] = v;
                }
            }
            self.sites[i] = us;
            self.sites[i + 1] = svd.vdag;
        }
        Ok(err_sq.sqrt())
    }
}

/// Compressed product `a * b` (apply `b` first) by zip-up plus final sweep.
pub fn mpo_product(a: &Mpo, b: &Mpo, tr: Truncation) -> Result<(Mpo, CompressionInfo)> {
    if a.len() != b.len() {
        return Err(QpdeError::ShapeMismatch("mpo product on unequal lengths".into()));
    }
    let n = a.len();
    let mut sites = Vec::with_capacity(n);
    let mut err_sq = 0.0;
    // carry (c, ra, rb)
    let mut carry = DenseTensor::from_data(&[1, 1, 1], vec![C64::new(1.0, 0.0)]).unwrap();
    for i in 0..n {
        // carry (c, la, lb) x a_i (la, o, k, ra) -> (c, lb, o, k, ra)
        let t = contract(&carry, a.site(i), &[(1, 0)])?;
        // x b_i (lb, k, i, rb) over (lb, k) -> (c, o, ra, i, rb)
        let t = contract(&t, b.site(i), &[(1, 0), (3, 1)])?;
        // -> (c, o, i, ra, rb)
        let t = t.permute(&[0, 1, 3, 2, 4]);
        if i + 1 == n {
            // ra = rb = 1
            let (c, o, ii) = (t.shape()[0], t.shape()[1], t.shape()[2]);
            sites.push(t.reshape(&[c, o, ii, 1])?);
        } else {
            let svd = split_tensor(&t, 3, tr)?;
            err_sq += svd.truncation_error * svd.truncation_error;
            sites.push(svd.u);
            let k = svd.s.len();
            let mut sv = svd.vdag.clone();
            let cols = sv.len() / k;
            for (row, &sval) in svd.s.iter().enumerate() {
                for c in 0..cols {
                    let v = sv.data()[row * cols + c] * sval;
                    sv.data_mut()[row * cols + c] = v;
                }
            }
            carry = sv; // (k, ra, rb)
        }
    }
    let mut out = Mpo::from_sites(sites)?;
    let sweep_err = out.compress_sweep(tr)?;
    err_sq += sweep_err * sweep_err;
    let info = CompressionInfo { truncation_error: err_sq.sqrt(), max_bond: out.max_bond() };
    Ok((out, info))
}

/// Compressed application `o |s>`: exact zip-up (the carried bond is capped
/// by the physical dimension), then a truncation sweep.
pub fn apply_mpo(o: &Mpo, s: &Mps, tr: Truncation) -> Result<(Mps, CompressionInfo)> {
    if o.len() != s.len() {
        return Err(QpdeError::ShapeMismatch("apply_mpo on unequal lengths".into()));
    }
    let n = o.len();
    let mut sites = Vec::with_capacity(n);
    let mut err_sq = 0.0;
    let mut carry = DenseTensor::from_data(&[1, 1, 1], vec![C64::new(1.0, 0.0)]).unwrap();
    for i in 0..n {
        // carry (c, lo, ls) x o_i (lo, p, k, ro) -> (c, ls, p, k, ro)
        let t = contract(&carry, o.site(i), &[(1, 0)])?;
        // x s_i (ls, k, rs) -> (c, p, ro, rs)
        let t = contract(&t, s.site(i), &[(1, 0), (3, 1)])?;
        if i + 1 == n {
            let (c, p) = (t.shape()[0], t.shape()[1]);
            sites.push(t.reshape(&[c, p, 1])?);
        } else {
            let svd = truncated_svd(&t, 2, usize::MAX, 0.0)?;
            err_sq += svd.truncation_error * svd.truncation_error;
            sites.push(svd.u);
            let k = svd.s.len();
            let mut sv = svd.vdag.clone();
            let cols = sv.len() / k;
            for (row, &sval) in svd.s.iter().enumerate() {
                for c in 0..cols {
                    let v = sv.data()[row * cols + c] * sval;
                    sv.data_mut()[row * cols + c] = v;
                }
            }
            carry = sv;
        }
    }
    let mut out = Mps::from_sites(sites)?;
    let sweep_err = out.compress_sweep(tr)?;
    err_sq += sweep_err * sweep_err;
    let info = CompressionInfo { truncation_error: err_sq.sqrt(), max_bond: out.max_bond() };
    Ok((out, info))
}

/// Expectation value <bra| O |ket> by three-layer transfer contraction.
pub fn expectation(bra: &Mps, o: &Mpo, ket: &Mps) -> Result<C64> {
    if bra.len() != o.len() || ket.len() != o.len() {
        return Err(QpdeError::ShapeMismatch("expectation on unequal lengths".into()));
    }
    // env (lb, lo, lk)
    let mut env = DenseTensor::from_data(&[1, 1, 1], vec![C64::new(1.0, 0.0)]).unwrap();
    for i in 0..o.len() {
        // env x conj(bra_i) (lb, p, rb) -> (lo, lk, p, rb)
        let t = contract(&env, &bra.site(i).conj(), &[(0, 0)])?;
        // x o_i (lo, p, k, ro) over (lo, p) -> (lk, rb, k, ro)
        let t = contract(&t, o.site(i), &[(0, 0), (2, 1)])?;
        // x ket_i (lk, k, rk) over (lk, k) -> (rb, ro, rk)
        env = contract(&t, ket.site(i), &[(0, 0), (2, 1)])?;
    }
    Ok(env.data()[0])
}
