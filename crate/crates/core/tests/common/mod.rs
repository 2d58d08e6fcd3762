//! Independent dense oracles for the integration suites.
//!
//! Everything here recomputes quantities through paths the library does not
//! use: per-bitstring chain products instead of transfer contractions, naive
//! triple-loop matrix algebra instead of the gemm backend, Taylor series with
//! scaling-and-squaring instead of Trotter products or eigendecompositions,
//! and Kronecker-built fermion operators instead of Pauli-term bookkeeping.

#![allow(dead_code)]

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

use qpde_core::circuit::BrickWallCircuit;
use qpde_core::mpo::Mpo;
use qpde_core::mps::Mps;

pub type C64 = Complex64;

/// Dense row-major matrix with naive algebra only.
#[derive(Clone, Debug)]
pub struct NaiveMatrix {
    pub n: usize,
    pub a: Vec<C64>,
}

impl NaiveMatrix {
    pub fn zeros(n: usize) -> Self {
        NaiveMatrix { n, a: vec![C64::new(0.0, 0.0); n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = NaiveMatrix::zeros(n);
        for i in 0..n {
            m.a[i * n + i] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn at(&self, i: usize, j: usize) -> C64 {
        self.a[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: C64) {
        self.a[i * self.n + j] = v;
    }

    pub fn mul(&self, other: &NaiveMatrix) -> NaiveMatrix {
        let n = self.n;
        let mut out = NaiveMatrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let aik = self.a[i * n + k];
                if aik == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..n {
                    out.a[i * n + j] += aik * other.a[k * n + j];
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &[C64]) -> Vec<C64> {
        let n = self.n;
        let mut out = vec![C64::new(0.0, 0.0); n];
        for i in 0..n {
            for j in 0..n {
                out[i] += self.a[i * n + j] * v[j];
            }
        }
        out
    }

    pub fn dagger(&self) -> NaiveMatrix {
        let mut out = NaiveMatrix::zeros(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                out.set(j, i, self.at(i, j).conj());
            }
        }
        out
    }

    pub fn trace(&self) -> C64 {
        (0..self.n).map(|i| self.at(i, i)).sum()
    }

    pub fn scale(&mut self, c: C64) {
        for v in self.a.iter_mut() {
            *v *= c;
        }
    }

    pub fn add_assign(&mut self, other: &NaiveMatrix) {
        for (x, y) in self.a.iter_mut().zip(&other.a) {
            *x += y;
        }
    }

    pub fn sub(&self, other: &NaiveMatrix) -> NaiveMatrix {
        let mut out = self.clone();
        for (x, y) in out.a.iter_mut().zip(&other.a) {
            *x -= y;
        }
        out
    }

    pub fn frobenius(&self) -> f64 {
        self.a.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn kron(&self, other: &NaiveMatrix) -> NaiveMatrix {
        let (n, m) = (self.n, other.n);
        let mut out = NaiveMatrix::zeros(n * m);
        for i in 0..n {
            for j in 0..n {
                let v = self.at(i, j);
                if v == C64::new(0.0, 0.0) {
                    continue;
                }
                for k in 0..m {
                    for l in 0..m {
                        out.set(i * m + k, j * m + l, v * other.at(k, l));
                    }
                }
            }
        }
        out
    }

    /// Operator 2-norm by power iteration on A^dag A.
    pub fn two_norm(&self) -> f64 {
        let n = self.n;
        let mut v: Vec<C64> = (0..n)
            .map(|i| C64::new(1.0 / (i + 1) as f64, 0.3 / (i + 2) as f64))
            .collect();
        let norm = |x: &[C64]| x.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        let nv = norm(&v);
        v.iter_mut().for_each(|c| *c /= nv);
        let ad = self.dagger();
        let mut lam = 0.0;
        for _ in 0..200 {
            let w = ad.matvec(&self.matvec(&v));
            lam = norm(&w);
            if lam == 0.0 {
                return 0.0;
            }
            v = w.into_iter().map(|c| c / lam).collect();
        }
        lam.sqrt()
    }
}

/// Statevector of an MPS by per-bitstring chain products (no shared code
/// with the transfer-contraction path).
pub fn mps_to_vec_oracle(m: &Mps) -> Vec<C64> {
    let n = m.len();
    let dim = 1usize << n;
    let mut out = Vec::with_capacity(dim);
    for idx in 0..dim {
        // running row vector across the bond space
        let mut row: Vec<C64> = vec![C64::new(1.0, 0.0)];
        for (site, t) in m.sites().iter().enumerate() {
            let bit = (idx >> (n - 1 - site)) & 1;
            let (l, r) = (t.shape()[0], t.shape()[2]);
            let mut next = vec![C64::new(0.0, 0.0); r];
            for a in 0..l {
                for b in 0..r {
                    next[b] += row[a] * t.data()[(a * 2 + bit) * r + b];
                }
            }
            row = next;
        }
        out.push(row[0]);
    }
    out
}

/// Dense matrix of an MPO by per-(row, col) chain products.
pub fn mpo_to_matrix_oracle(m: &Mpo) -> NaiveMatrix {
    let n = m.len();
    let dim = 1usize << n;
    let mut out = NaiveMatrix::zeros(dim);
    for row in 0..dim {
        for col in 0..dim {
            let mut acc: Vec<C64> = vec![C64::new(1.0, 0.0)];
            for (site, t) in m.sites().iter().enumerate() {
                let o = (row >> (n - 1 - site)) & 1;
                let i = (col >> (n - 1 - site)) & 1;
                let (l, r) = (t.shape()[0], t.shape()[3]);
                let mut next = vec![C64::new(0.0, 0.0); r];
                for a in 0..l {
                    for b in 0..r {
                        next[b] += acc[a] * t.data()[((a * 2 + o) * 2 + i) * r + b];
                    }
                }
                acc = next;
            }
            out.set(row, col, acc[0]);
        }
    }
    out
}

/// Embed a two-qubit gate at wires (w, w+1) of an n-wire register.
pub fn embed_two_site(gate: &[C64], w: usize, n: usize) -> NaiveMatrix {
    let left = NaiveMatrix::identity(1 << w);
    let mut g = NaiveMatrix::zeros(4);
    g.a.copy_from_slice(gate);
    let right = NaiveMatrix::identity(1 << (n - w - 2));
    left.kron(&g).kron(&right)
}

/// Dense unitary of a brick-wall circuit by naive embedding and
/// multiplication, layer 0 applied first.
pub fn circuit_to_matrix_oracle(c: &BrickWallCircuit, n: usize) -> NaiveMatrix {
    let mut u = NaiveMatrix::identity(1 << n);
    for layer in c.layers() {
        for (k, g) in layer.gates.iter().enumerate() {
            let m = embed_two_site(g.data(), layer.wire_of(k), n);
            u = m.mul(&u);
        }
    }
    u
}

/// `exp(A)` by Taylor series with scaling and squaring; independent of any
/// eigensolver or product formula.
pub fn expm_oracle(a: &NaiveMatrix) -> NaiveMatrix {
    let norm1: f64 = a.a.iter().map(|c| c.norm()).sum::<f64>() / a.n as f64;
    let squarings = norm1.log2().ceil().max(0.0) as u32 + 4;
    let scale = 2.0f64.powi(-(squarings as i32));
    let mut scaled = a.clone();
    scaled.scale(C64::new(scale, 0.0));
    let mut out = NaiveMatrix::identity(a.n);
    let mut term = NaiveMatrix::identity(a.n);
    for k in 1..=24 {
        term = term.mul(&scaled);
        term.scale(C64::new(1.0 / k as f64, 0.0));
        out.add_assign(&term);
    }
    for _ in 0..squarings {
        out = out.mul(&out);
    }
    out
}

/// Hubbard Hamiltonian built from Jordan-Wigner fermion operators as
/// explicit Kronecker products (up-down interleaved ordering).
pub fn hubbard_dense_fermionic(n_sites: usize, t_hop: f64, u: f64) -> NaiveMatrix {
    let n = 2 * n_sites;
    let dim = 1usize << n;
    let eye = NaiveMatrix::identity(2);
    let mut z = NaiveMatrix::identity(2);
    z.set(1, 1, C64::new(-1.0, 0.0));
    let mut sm = NaiveMatrix::zeros(2); // annihilates |1>
    sm.set(0, 1, C64::new(1.0, 0.0));

    let annihilate = |p: usize| -> NaiveMatrix {
        let mut m = NaiveMatrix::identity(1);
        for q in 0..n {
            let factor = if q < p {
                &z
            } else if q == p {
                &sm
            } else {
                &eye
            };
            m = m.kron(factor);
        }
        m
    };
    let a: Vec<NaiveMatrix> = (0..n).map(annihilate).collect();
    let ad: Vec<NaiveMatrix> = a.iter().map(|m| m.dagger()).collect();

    let mut h = NaiveMatrix::zeros(dim);
    for q in 0..n_sites - 1 {
        for s in 0..2 {
            let i = 2 * q + s;
            let j = 2 * (q + 1) + s;
            let mut hop = ad[j].mul(&a[i]);
            hop.add_assign(&ad[i].mul(&a[j]));
            hop.scale(C64::new(-t_hop, 0.0));
            h.add_assign(&hop);
        }
    }
    for q in 0..n_sites {
        let nu = ad[2 * q].mul(&a[2 * q]);
        let nd = ad[2 * q + 1].mul(&a[2 * q + 1]);
        let mut onsite = nu.mul(&nd);
        onsite.scale(C64::new(u, 0.0));
        h.add_assign(&onsite);
        let mut chem = nu.clone();
        chem.add_assign(&nd);
        chem.scale(C64::new(-u / 2.0, 0.0));
        h.add_assign(&chem);
    }
    h
}

/// Hermitian eigenvalues by cyclic Jacobi rotations; independent of the
/// factorization backend. Ascending order.
pub fn eigvalsh_jacobi(m: &NaiveMatrix) -> Vec<f64> {
    let n = m.n;
    let mut a = m.clone();
    for _ in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                off += a.at(i, j).norm_sqr();
            }
        }
        if off.sqrt() < 1e-13 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a.at(p, q);
                if apq.norm() < 1e-300 {
                    continue;
                }
                let app = a.at(p, p).re;
                let aqq = a.at(q, q).re;
                // complex Jacobi rotation zeroing (p, q)
                let phase = apq / apq.norm();
                let theta = 0.5 * (2.0 * apq.norm()).atan2(aqq - app);
                let (c, s) = (theta.cos(), theta.sin());
                let sp = phase * s;
                // apply from both sides: rows/cols p, q
                for k in 0..n {
                    let akp = a.at(k, p);
                    let akq = a.at(k, q);
                    a.set(k, p, akp * c - akq * sp.conj());
                    a.set(k, q, akp * sp + akq * c);
                }
                for k in 0..n {
                    let apk = a.at(p, k);
                    let aqk = a.at(q, k);
                    a.set(p, k, apk * c - aqk * sp);
                    a.set(q, k, apk * sp.conj() + aqk * c);
                }
            }
        }
    }
    let mut w: Vec<f64> = (0..n).map(|i| a.at(i, i).re).collect();
    w.sort_by(f64::total_cmp);
    w
}

pub fn random_statevector(n: usize, seed: u64) -> Vec<C64> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut v: Vec<C64> =
        (0..1usize << n).map(|_| C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)).collect();
    let norm = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    v.iter_mut().for_each(|c| *c /= norm);
    v
}

pub fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn vec_dist(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt()
}

/// Random brick-wall circuit with genuinely random unitary gates (not the
/// near-identity initialization).
pub fn random_circuit(width: usize, depth: usize, seed: u64) -> BrickWallCircuit {
    // large epsilon makes the polar projection of I + eps R essentially Haar-ish
    qpde_core::circuit::init_brickwall(width, depth, 10.0, seed, 0)
}
