//! 1D Hubbard Hamiltonian, Jordan-Wigner mapping, and exact-diagonalization
//! references.
//!
//! Qubit ordering interleaves spins: site q maps to qubits `2q` (up) and
//! `2q + 1` (down). Under this ordering a same-spin hop between neighboring
//! sites is next-nearest-neighbor in qubit index, so the Jordan-Wigner parity
//! string contributes exactly one Z on the qubit in between:
//!
//! ```text
//! a^+_{q+1,s} a_{q,s} + h.c.  ->  (X Z X + Y Z Y) / 2   on qubits (i, i+1, i+2)
//! ```
//!
//! The on-site interaction minus the half-filling chemical potential reduces
//! to `(U/4) Z Z` on each (up, down) pair plus a constant `-U/4` per site.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::error::{QpdeError, Result};
use crate::linalg::{self, CMatrix};
use crate::tensor::DenseTensor;

type C64 = Complex64;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Pauli {
    X,
    Y,
    Z,
}

/// One term `C_b P_b` of a Pauli-string Hamiltonian. The identity term is an
/// empty operator map.
#[derive(Clone, Debug)]
pub struct PauliTerm {
    pub coefficient: f64,
    pub operators: BTreeMap<usize, Pauli>,
}

impl PauliTerm {
    pub fn identity(coefficient: f64) -> Self {
        PauliTerm { coefficient, operators: BTreeMap::new() }
    }

    pub fn new(coefficient: f64, ops: &[(usize, Pauli)]) -> Self {
        PauliTerm { coefficient, operators: ops.iter().cloned().collect() }
    }

    pub fn is_identity(&self) -> bool {
        self.operators.is_empty()
    }

    /// Lowest and highest qubit touched, or None for the identity term.
    pub fn support(&self) -> Option<(usize, usize)> {
        let lo = *self.operators.keys().next()?;
        let hi = *self.operators.keys().next_back()?;
        Some((lo, hi))
    }

    /// Apply the Pauli string (without the coefficient) to a basis index with
    /// site 0 as the most significant bit; returns (target index, phase).
    pub fn apply_to_basis(&self, index: usize, n: usize) -> (usize, C64) {
        let mut out = index;
        let mut phase = C64::new(1.0, 0.0);
        for (&q, &p) in &self.operators {
            let bit = (index >> (n - 1 - q)) & 1;
            match p {
                Pauli::X => out ^= 1 << (n - 1 - q),
                Pauli::Y => {
                    out ^= 1 << (n - 1 - q);
                    // Y|0> = i|1>, Y|1> = -i|0>
                    phase *= if bit == 0 { C64::new(0.0, 1.0) } else { C64::new(0.0, -1.0) };
                }
                Pauli::Z => {
                    if bit == 1 {
                        phase = -phase;
                    }
                }
            }
        }
        (out, phase)
    }
}

/// Apply `sum_b C_b P_b` to a dense statevector.
pub fn apply_terms(terms: &[PauliTerm], v: &[C64], n: usize) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); v.len()];
    for term in terms {
        for (idx, &amp) in v.iter().enumerate() {
            if amp == C64::new(0.0, 0.0) {
                continue;
            }
            let (tgt, phase) = term.apply_to_basis(idx, n);
            out[tgt] += amp * phase * term.coefficient;
        }
    }
    out
}

/// Dense matrix of a Pauli-term sum on `n` qubits. Exponential in `n`.
pub fn terms_to_matrix(terms: &[PauliTerm], n: usize) -> CMatrix {
    let dim = 1usize << n;
    let mut h = CMatrix::zeros(dim, dim);
    for term in terms {
        for col in 0..dim {
            let (row, phase) = term.apply_to_basis(col, n);
            let v = h.at(row, col) + phase * term.coefficient;
            h.set(row, col, v);
        }
    }
    h
}

/// 1D Hubbard model parameters. `N = 2 n_sites` qubits under the interleaved
/// up-down ordering.
#[derive(Clone, Copy, Debug)]
pub struct HubbardSpec {
    pub n_sites: usize,
    pub hopping: f64,
    pub onsite: f64,
}

impl HubbardSpec {
    pub fn new(n_sites: usize, hopping: f64, onsite: f64) -> Result<Self> {
        if n_sites < 1 {
            return Err(QpdeError::InvalidConfig("n_sites must be positive".into()));
        }
        Ok(HubbardSpec { n_sites, hopping, onsite })
    }

    pub fn num_qubits(&self) -> usize {
        2 * self.n_sites
    }
}

/// Pauli decomposition of the Hubbard Hamiltonian.
///
/// Term order is fixed and load-bearing for the Trotter product: hopping
/// terms left-to-right (per bond: up XZX, up YZY, down XZX, down YZY), then
/// on-site ZZ terms left-to-right, then the identity constant.
pub fn build_hubbard(spec: &HubbardSpec) -> Vec<PauliTerm> {
    let mut terms = Vec::new();
    let t = spec.hopping;
    let u = spec.onsite;
    for q in 0..spec.n_sites.saturating_sub(1) {
        for s in 0..2 {
            let i = 2 * q + s;
            terms.push(PauliTerm::new(
                -t / 2.0,
                &[(i, Pauli::X), (i + 1, Pauli::Z), (i + 2, Pauli::X)],
            ));
            terms.push(PauliTerm::new(
                -t / 2.0,
                &[(i, Pauli::Y), (i + 1, Pauli::Z), (i + 2, Pauli::Y)],
            ));
        }
    }
    for q in 0..spec.n_sites {
        terms.push(PauliTerm::new(u / 4.0, &[(2 * q, Pauli::Z), (2 * q + 1, Pauli::Z)]));
    }
    terms.push(PauliTerm::identity(-u * spec.n_sites as f64 / 4.0));
    terms
}

/// Reference eigenpairs. Eigenvectors are dense; energies ascend.
#[derive(Clone, Debug)]
pub struct EigenSolution {
    pub energies: Vec<f64>,
    pub states: Vec<Vec<C64>>,
    pub gap: f64,
}

const DENSE_QUBIT_LIMIT: usize = 12;
const DESK_QUBIT_LIMIT: usize = 14;

/// `k` lowest eigenpairs of a Pauli-term Hamiltonian on `n` qubits.
///
/// Dense Hermitian diagonalization up to 12 qubits; Lanczos with full
/// reorthogonalization above that, bounded at 14 qubits.
pub fn exact_eigs(terms: &[PauliTerm], n: usize, k: usize) -> Result<EigenSolution> {
    if n > DESK_QUBIT_LIMIT {
        return Err(QpdeError::ResourceLimit(format!(
            "{n} qubits exceeds the desk-scale bound of {DESK_QUBIT_LIMIT}"
        )));
    }
    let (energies, states) = if n <= DENSE_QUBIT_LIMIT {
        dense_lowest(terms, n, k)?
    } else {
        lanczos_lowest(terms, n, k)?
    };
    // residual check makes this solution oracle-grade
    for (e, v) in energies.iter().zip(&states) {
        let hv = apply_terms(terms, v, n);
        let mut res = 0.0;
        for (x, y) in hv.iter().zip(v) {
            res += (x - y * *e).norm_sqr();
        }
        if res.sqrt() > 1e-10 {
            return Err(QpdeError::Backend(format!(
                "eigenpair residual {:.3e} exceeds 1e-10",
                res.sqrt()
            )));
        }
    }
    let gap = if energies.len() > 1 { energies[1] - energies[0] } else { 0.0 };
    Ok(EigenSolution { energies, states, gap })
}

fn dense_lowest(terms: &[PauliTerm], n: usize, k: usize) -> Result<(Vec<f64>, Vec<Vec<C64>>)> {
    let h = terms_to_matrix(terms, n);
    let (w, vecs) = linalg::eigh(&h)?;
    let dim = 1usize << n;
    let k = k.min(dim);
    let energies = w[..k].to_vec();
    let states = (0..k)
        .map(|j| (0..dim).map(|i| vecs.at(i, j)).collect::<Vec<C64>>())
        .collect();
    Ok((energies, states))
}

fn lanczos_lowest(terms: &[PauliTerm], n: usize, k: usize) -> Result<(Vec<f64>, Vec<Vec<C64>>)> {
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    let dim = 1usize << n;
    let m_cap = (40 * k + 400).min(dim);
    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(0x1ac0);
    let mut q: Vec<C64> =
        (0..dim).map(|_| C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)).collect();
    let norm = q.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    q.iter_mut().for_each(|c| *c /= norm);

    let mut basis: Vec<Vec<C64>> = vec![q];
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let extract = |alphas: &[f64],
                   betas: &[f64],
                   basis: &[Vec<C64>]|
     -> Result<(Vec<f64>, Vec<Vec<C64>>)> {
        let mm = alphas.len();
        let mut tri = CMatrix::zeros(mm, mm);
        for i in 0..mm {
            tri.set(i, i, C64::new(alphas[i], 0.0));
            if i + 1 < mm {
                tri.set(i, i + 1, C64::new(betas[i], 0.0));
                tri.set(i + 1, i, C64::new(betas[i], 0.0));
            }
        }
        let (w, vecs) = linalg::eigh(&tri)?;
        let kk = k.min(mm);
        let energies = w[..kk].to_vec();
        let mut states = Vec::with_capacity(kk);
        for j in 0..kk {
            let mut v = vec![C64::new(0.0, 0.0); dim];
            for (i, b) in basis.iter().enumerate() {
                let c = vecs.at(i, j);
                for (x, y) in v.iter_mut().zip(b) {
                    *x += c * y;
                }
            }
            let norm = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
            v.iter_mut().for_each(|c| *c /= norm);
            states.push(v);
        }
        Ok((energies, states))
    };

    for j in 0..m_cap {
        let mut w = apply_terms(terms, &basis[j], n);
        let alpha: f64 =
            basis[j].iter().zip(&w).map(|(a, b)| (a.conj() * b).re).sum();
        alphas.push(alpha);
        // full reorthogonalization, twice, keeps the basis clean at this scale
        for _ in 0..2 {
            for prev in &basis {
                let ov: C64 = prev.iter().zip(&w).map(|(a, b)| a.conj() * b).sum();
                for (x, p) in w.iter_mut().zip(prev) {
                    *x -= ov * p;
                }
            }
        }
        let beta = w.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if beta < 1e-12 || j + 1 == m_cap {
            break;
        }
        betas.push(beta);
        w.iter_mut().for_each(|c| *c /= beta);
        basis.push(w);

        // converged once every requested Ritz pair beats the residual gate
        if (j + 1) % 40 == 0 && j + 1 >= 3 * k {
            let (energies, states) =
                extract(&alphas, &betas[..alphas.len() - 1], &basis[..alphas.len()])?;
            let ok = energies.iter().zip(&states).all(|(e, v)| {
                let hv = apply_terms(terms, v, n);
                let res: f64 =
                    hv.iter().zip(v).map(|(x, y)| (x - y * *e).norm_sqr()).sum();
                res.sqrt() <= 1e-11
            });
            if ok {
                return Ok((energies, states));
            }
        }
    }
    extract(&alphas, &betas, &basis)
}

/// Dense Pauli matrix on the term's contiguous support (identity on gaps),
/// returned with its start qubit and span.
pub fn term_support_matrix(term: &PauliTerm) -> (usize, usize, DenseTensor) {
    let Some((lo, hi)) = term.support() else {
        return (0, 0, DenseTensor::scalar(C64::new(1.0, 0.0)));
    };
    let span = hi - lo + 1;
    let dim = 1usize << span;
    let mut m = DenseTensor::zeros(&[dim, dim]);
    for col in 0..dim {
        let mut row = col;
        let mut phase = C64::new(1.0, 0.0);
        for (&q, &p) in &term.operators {
            let pos = q - lo;
            let bit = (col >> (span - 1 - pos)) & 1;
            match p {
                Pauli::X => row ^= 1 << (span - 1 - pos),
                Pauli::Y => {
                    row ^= 1 << (span - 1 - pos);
                    phase *= if bit == 0 { C64::new(0.0, 1.0) } else { C64::new(0.0, -1.0) };
                }
                Pauli::Z => {
                    if bit == 1 {
                        phase = -phase;
                    }
                }
            }
        }
        m.data_mut()[row * dim + col] = phase;
    }
    (lo, span, m)
}

/// Exact exponential `exp(i angle P)` of a single Pauli string, as a dense
/// gate on the term's support: `cos(angle) I + i sin(angle) P`.
///
/// The identity term exponentiates to the global phase `exp(i angle)`.
pub fn pauli_exp_gate(term: &PauliTerm, angle: f64) -> (usize, usize, DenseTensor) {
    let (start, span, p) = term_support_matrix(term);
    if span == 0 {
        return (0, 0, DenseTensor::scalar(C64::new(angle.cos(), angle.sin())));
    }
    let dim = 1usize << span;
    let mut g = p.scale(C64::new(0.0, angle.sin()));
    for i in 0..dim {
        let v = g.data()[i * dim + i] + angle.cos();
        g.data_mut()[i * dim + i] = v;
    }
    (start, span, g)
}
