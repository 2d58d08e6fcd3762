//! Open-boundary matrix product states.
//!
//! Site tensors carry legs `(left bond, physical 2, right bond)`; boundary
//! bonds have extent 1. Compression follows a fixed two-stage scheme: an
//! exact left-to-right zip-up (no information loss, the carried bond is
//! capped by the physical dimension) followed by a right-to-left two-site
//! sweep that truncates at a relative singular-value cutoff.
//!
//! Equality of states is never tested tensor-by-tensor; gauge freedom makes
//! that meaningless. Tests compare dense reconstructions or gauge-invariant
//! scalars.

use num_complex::Complex64;

use crate::error::{QpdeError, Result};
use crate::tensor::{contract, truncated_svd, DenseTensor};

type C64 = Complex64;

/// Truncation controls threaded through every compression point.
#[derive(Clone, Copy, Debug)]
pub struct Truncation {
    pub max_bond: usize,
    pub cutoff: f64,
    /// Split matrices whose smaller dimension reaches this switch to the
    /// randomized truncated SVD. Off by default (exact everywhere).
    pub sketch_min_dim: usize,
}

impl Truncation {
    pub fn new(max_bond: usize, cutoff: f64) -> Self {
        Truncation { max_bond, cutoff, sketch_min_dim: usize::MAX }
    }

    /// No truncation beyond exact rank.
    pub fn exact() -> Self {
        Truncation::new(usize::MAX, 0.0)
    }

    pub fn with_sketch(mut self, min_dim: usize) -> Self {
        self.sketch_min_dim = min_dim;
        self
    }
}

#[derive(Clone, Debug)]
pub struct Mps {
    sites: Vec<DenseTensor>,
}

impl Mps {
    pub fn from_sites(sites: Vec<DenseTensor>) -> Result<Self> {
        if sites.is_empty() {
            return Err(QpdeError::ShapeMismatch("empty MPS".into()));
        }
        for (i, s) in sites.iter().enumerate() {
            if s.rank() != 3 || s.shape()[1] != 2 {
                return Err(QpdeError::ShapeMismatch(format!(
                    "site {i} has shape {:?}, want (l, 2, r)",
                    s.shape()
                )));
            }
        }
        if sites[0].shape()[0] != 1 || sites[sites.len() - 1].shape()[2] != 1 {
            return Err(QpdeError::ShapeMismatch("boundary bonds must be 1".into()));
        }
        for i in 0..sites.len() - 1 {
            if sites[i].shape()[2] != sites[i + 1].shape()[0] {
                return Err(QpdeError::ShapeMismatch(format!("bond mismatch at {i}")));
            }
        }
        Ok(Mps { sites })
    }

    /// Computational-basis product state |b_0 b_1 ... b_{n-1}>.
    pub fn basis_state(n: usize, bits: &[u8]) -> Self {
        assert_eq!(bits.len(), n);
        let sites = bits
            .iter()
            .map(|&b| {
                let mut t = DenseTensor::zeros(&[1, 2, 1]);
                t.data_mut()[b as usize] = C64::new(1.0, 0.0);
                t
            })
            .collect();
        Mps { sites }
    }

    pub fn all_zeros(n: usize) -> Self {
        Mps::basis_state(n, &vec![0u8; n])
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

    pub fn bond_dims(&self) -> Vec<usize> {
        self.sites.iter().map(|s| s.shape()[2]).collect()
    }

    pub fn max_bond(&self) -> usize {
        self.sites.iter().map(|s| s.shape()[2]).max().unwrap_or(1)
    }

    pub fn norm(&self) -> f64 {
        inner(self, self).re.max(0.0).sqrt()
    }

    pub fn normalize(&mut self) {
        let n = self.norm();
        if n > 0.0 {
            let last = self.sites.len() - 1;
            self.sites[last] = self.sites[last].scale(C64::new(1.0 / n, 0.0));
        }
    }

    pub fn scale(&mut self, a: C64) {
        let last = self.sites.len() - 1;
        self.sites[last] = self.sites[last].scale(a);
    }

    /// Left-orthogonalize every site; the returned scalar is the norm that
    /// accumulated at the right boundary.
    pub fn left_orthogonalize(&mut self) -> Result<C64> {
        let n = self.sites.len();
        for i in 0..n {
            let t = &self.sites[i];
            let r = truncated_svd(t, 2, usize::MAX, 0.0)?;
            self.sites[i] = r.u;
            let k = r.s.len();
            let mut sv = r.vdag.clone();
            for (row, &sval) in r.s.iter().enumerate() {
                let cols = sv.len() / k;
                for c in 0..cols {
                    let v = sv.data()[row * cols + c] * sval;
                    sv.data_mut()[row * cols + c] = v;
                }
            }
            if i + 1 < n {
                self.sites[i + 1] = contract(&sv, &self.sites[i + 1], &[(1, 0)])?;
            } else {
                // sv is (1, 1); fold the residual scalar back into the last site
                let residual = sv.data()[0];
                self.sites[i] = self.sites[i].scale(residual);
                return Ok(residual);
            }
        }
        unreachable!("loop returns at the last site")
    }

    /// Right-to-left two-site truncation sweep. Returns the accumulated
    /// truncation error (2-norm over bonds).
    pub fn compress_sweep(&mut self, tr: Truncation) -> Result<f64> {
        let n = self.sites.len();
        let mut err_sq = 0.0;
        for i in (0..n.saturating_sub(1)).rev() {
            let blob = contract(&self.sites[i], &self.sites[i + 1], &[(2, 0)])?;
            // legs (l, p_i, p_{i+1}, r); split after (l, p_i)
            let r = truncated_svd(&blob, 2, tr.max_bond, tr.cutoff)?;
            err_sq += r.truncation_error * r.truncation_error;
            // move the center left: site_{i+1} right-canonical, site_i keeps U*S
            let k = r.s.len();
            let mut us = r.u.clone();
            let rows = us.len() / k;
            for row in 0..rows {
                for (j, &sval) in r.s.iter().enumerate() {
                    let v = us.data()[row * k + j] * sval;
                    us.data_mut()[row * k + j] = v;
                }
            }
            self.sites[i] = us;
            self.sites[i + 1] = r.vdag;
        }
        Ok(err_sq.sqrt())
    }

    /// Apply a two-qubit gate (legs `(o1, o2, i1, i2)`) to sites `(i, i+1)`.
    pub fn apply_two_site(&mut self, gate: &DenseTensor, i: usize, tr: Truncation) -> Result<f64> {
        let blob = contract(&self.sites[i], &self.sites[i + 1], &[(2, 0)])?;
        // (l, p_i, p_{i+1}, r) x gate (o1, o2, i1, i2) over (p_i, i1), (p_{i+1}, i2)
        let applied = contract(&blob, gate, &[(1, 2), (2, 3)])?;
        // legs now (l, r, o1, o2) -> (l, o1, o2, r)
        let re = applied.permute(&[0, 2, 3, 1]);
        let svd = truncated_svd(&re, 2, tr.max_bond, tr.cutoff)?;
        let k = svd.s.len();
        let mut sv = svd.vdag.clone();
        let cols = sv.len() / k;
        for (row, &sval) in svd.s.iter().enumerate() {
            for c in 0..cols {
                let v = sv.data()[row * cols + c] * sval;
                sv.data_mut()[row * cols + c] = v;
            }
        }
        self.sites[i] = svd.u;
        self.sites[i + 1] = sv;
        Ok(svd.truncation_error)
    }

    /// Apply a single-qubit gate (2x2) on site `i`.
    pub fn apply_one_site(&mut self, gate: &DenseTensor, i: usize) -> Result<()> {
        let t = contract(gate, &self.sites[i], &[(1, 1)])?;
        // legs (o, l, r) -> (l, o, r)
        self.sites[i] = t.permute(&[1, 0, 2]);
        Ok(())
    }

    /// Dense statevector; site 0 is the most significant bit.
    pub fn to_statevector(&self) -> Vec<C64> {
        let mut acc = DenseTensor::from_data(&[1, 1], vec![C64::new(1.0, 0.0)]).unwrap();
        for s in &self.sites {
            // acc (D, l) x site (l, 2, r) -> (D, 2, r) -> (D*2, r)
            let t = contract(&acc, s, &[(1, 0)]).unwrap();
            let d = t.shape()[0] * t.shape()[1];
            let r = t.shape()[2];
            acc = t.reshape(&[d, r]).unwrap();
        }
        acc.data().to_vec()
    }
}

/// Inner product <a|b> by left-to-right transfer contraction.
pub fn inner(a: &Mps, b: &Mps) -> C64 {
    assert_eq!(a.len(), b.len(), "inner on unequal lengths");
    let mut env = DenseTensor::from_data(&[1, 1], vec![C64::new(1.0, 0.0)]).unwrap();
    for (ta, tb) in a.sites.iter().zip(&b.sites) {
        // env (la, lb) x conj(a_i) (la, p, ra) -> (lb, p, ra)
        let t = contract(&env, &ta.conj(), &[(0, 0)]).unwrap();
        // (lb, p, ra) x b_i (lb, p, rb) -> (ra, rb)
        env = contract(&t, tb, &[(0, 0), (1, 1)]).unwrap();
    }
    env.data()[0]
}

/// Lossless MPS factorization of a dense statevector (length must be a
/// power of two). Exactly zero singular values are dropped; nothing else is.
pub fn statevector_to_mps(v: &[C64]) -> Result<Mps> {
    let len = v.len();
    if len < 2 || !len.is_power_of_two() {
        return Err(QpdeError::ShapeMismatch(format!(
            "statevector length {len} is not a power of two"
        )));
    }
    let n = len.trailing_zeros() as usize;
    let mut sites = Vec::with_capacity(n);
    let mut rest = DenseTensor::from_data(&[1, len], v.to_vec())?;
    for _ in 0..n - 1 {
        let l = rest.shape()[0];
        let cols = rest.shape()[1] / 2;
        let t = rest.reshape(&[l * 2, cols])?;
        let r = truncated_svd(&t, 1, usize::MAX, 0.0)?;
        let k = r.s.len();
        sites.push(r.u.reshape(&[l, 2, k])?);
        let mut sv = r.vdag.clone();
        for (row, &sval) in r.s.iter().enumerate() {
            for c in 0..cols {
                let val = sv.data()[row * cols + c] * sval;
                sv.data_mut()[row * cols + c] = val;
            }
        }
        rest = sv;
    }
    sites.push(rest.reshape(&[rest.shape()[0], 2, 1])?);
    Mps::from_sites(sites)
}

/// Ancilla-superposition state (|0>|g> + |1>|e>)/sqrt(2) over N+1 sites,
/// ancilla at site 0, returned normalized and left-orthogonalized.
pub fn superpose_ancilla(g: &Mps, e: &Mps) -> Result<Mps> {
    if g.len() != e.len() {
        return Err(QpdeError::ShapeMismatch("branch lengths differ".into()));
    }
    let n = g.len();
    let mut sites = Vec::with_capacity(n + 1);

    // ancilla: (1, 2, 2) with branch label on the right bond
    let mut anc = DenseTensor::zeros(&[1, 2, 2]);
    let amp = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    anc.data_mut()[0] = amp; // s=0 -> branch 0
    anc.data_mut()[3] = amp; // s=1 -> branch 1
    sites.push(anc);

    for i in 0..n {
        let (tg, te) = (g.site(i), e.site(i));
        let (lg, rg) = (tg.shape()[0], tg.shape()[2]);
        let (le, re) = (te.shape()[0], te.shape()[2]);
        let last = i == n - 1;
        let (l, r) = (lg + le, if last { 1 } else { rg + re });
        let mut t = DenseTensor::zeros(&[l, 2, r]);
        for a in 0..lg {
            for p in 0..2 {
                for b in 0..rg {
                    let v = tg.data()[(a * 2 + p) * rg + b];
                    t.data_mut()[(a * 2 + p) * r + b] = v;
                }
            }
        }
        for a in 0..le {
            for p in 0..2 {
                for b in 0..re {
                    let v = te.data()[(a * 2 + p) * re + b];
                    let col = if last { b } else { rg + b };
                    t.data_mut()[((lg + a) * 2 + p) * r + col] = v;
                }
            }
        }
        sites.push(t);
    }

    let mut out = Mps::from_sites(sites)?;
    out.left_orthogonalize()?;
    out.normalize();
    Ok(out)
}

/// Weight of the ancilla-0 branch ||(<0| x I) |psi>||^2 for an (N+1)-site state.
pub fn ancilla_zero_weight(psi: &Mps) -> f64 {
    // project site 0 onto |0> and take the squared norm of the remainder
    let anc = psi.site(0);
    let r = anc.shape()[2];
    let mut proj = DenseTensor::zeros(&[1, r]);
    for b in 0..r {
        proj.data_mut()[b] = anc.data()[b]; // p = 0 slice
    }
    // transfer over remaining sites with proj as the boundary
    let mut env = contract(&proj.conj(), &proj, &[(0, 0)]).unwrap();
    for i in 1..psi.len() {
        let t = contract(&env, &psi.site(i).conj(), &[(0, 0)]).unwrap();
        env = contract(&t, psi.site(i), &[(0, 0), (1, 1)]).unwrap();
    }
    env.data()[0].re
}
