//! Reference time-evolution MPOs from the second-order Trotter formula.
//!
//! One slice of `S_2(tau)` is the palindromic product over the fixed term
//! ordering: `prod_{b=1..K} exp(i C_b P_b tau/2) * prod_{b=K..1} exp(i C_b P_b tau/2)`.
//! `Reverse` builds `S_2(-dt/m)^m ~ exp(+i H dt)` (the adjoint reference);
//! `Forward` negates every angle and approximates `exp(-i H dt)`.
//!
//! Each exponential factor is exact on its contiguous support and is applied
//! to the accumulating MPO as a small gate with local SVD splits; a
//! right-to-left truncation sweep runs after every slice.

use num_complex::Complex64;

use crate::error::Result;
use crate::model::{pauli_exp_gate, PauliTerm};
use crate::mpo::{CompressionInfo, Mpo};
use crate::mps::Truncation;

type C64 = Complex64;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TimeSign {
    /// Approximates `exp(-i H dt)`.
    Forward,
    /// Approximates `exp(+i H dt)`; the compression reference `U_ref^dag`.
    Reverse,
}

#[derive(Clone, Copy, Debug)]
pub struct TrotterSpec {
    pub dt: f64,
    pub slices: usize,
    pub sign: TimeSign,
    pub truncation: Truncation,
}

/// Default slice count at which the Trotter MPO stands in for the exact
/// propagator.
pub const EXACT_REFERENCE_SLICES: usize = 100;

/// Second-order Trotter MPO over `n` qubits for the given term list.
///
/// The term order of `terms` is the product order; keep it fixed across a
/// study, since the S_2 error depends on it.
pub fn build_trotter_mpo(terms: &[PauliTerm], n: usize, spec: &TrotterSpec) -> Result<(Mpo, CompressionInfo)> {
    assert!(spec.slices >= 1, "slices must be positive");
    let sign = match spec.sign {
        TimeSign::Reverse => 1.0,
        TimeSign::Forward => -1.0,
    };
    let half_angle_of =
        |t: &PauliTerm| sign * t.coefficient * spec.dt / (2.0 * spec.slices as f64);

    let mut mpo = Mpo::identity(n);
    let mut err_sq = 0.0;
    let mut max_bond = 1usize;

    // palindromic factor list for one slice
    let mut order: Vec<usize> = (0..terms.len()).collect();
    order.extend((0..terms.len()).rev());

    // full truncation sweeps are only needed occasionally for bond hygiene;
    // the per-gate splits already truncate locally
    const SWEEP_EVERY: usize = 10;

    for slice in 0..spec.slices {
        for &b in &order {
            let term = &terms[b];
            let (start, span, gate) = pauli_exp_gate(term, half_angle_of(term));
            if span == 0 {
                mpo.scale(gate.data()[0]);
                continue;
            }
            let legs = vec![2usize; 2 * span];
            let gate = gate.reshape(&legs)?;
            let e = mpo.apply_gate_out(&gate, start, span, spec.truncation)?;
            err_sq += e * e;
        }
        if (slice + 1) % SWEEP_EVERY == 0 || slice + 1 == spec.slices {
            let e = mpo.compress_sweep(spec.truncation)?;
            err_sq += e * e;
        }
        max_bond = max_bond.max(mpo.max_bond());
    }
    Ok((mpo, CompressionInfo { truncation_error: err_sq.sqrt(), max_bond }))
}

/// Trotter MPO at the slice count adopted as the exact propagator.
pub fn build_exact_reference_mpo(
    terms: &[PauliTerm],
    n: usize,
    dt: f64,
    sign: TimeSign,
    truncation: Truncation,
) -> Result<(Mpo, CompressionInfo)> {
    if dt == 0.0 {
        return Ok((Mpo::identity(n), CompressionInfo { truncation_error: 0.0, max_bond: 1 }));
    }
    build_trotter_mpo(
        terms,
        n,
        &TrotterSpec { dt, slices: EXACT_REFERENCE_SLICES, sign, truncation },
    )
}

/// Dense matrix of the same Trotter product, with no tensor compression at
/// all: every exponential factor is embedded at its support and multiplied
/// out. Exponential in `n`; the exact-evolution backend at desk scale.
pub fn dense_trotter_propagator(
    terms: &[PauliTerm],
    n: usize,
    spec: &TrotterSpec,
) -> crate::linalg::CMatrix {
    use crate::linalg::{matmul, CMatrix};
    let dim = 1usize << n;
    let sign = match spec.sign {
        TimeSign::Reverse => 1.0,
        TimeSign::Forward => -1.0,
    };
    let mut order: Vec<usize> = (0..terms.len()).collect();
    order.extend((0..terms.len()).rev());

    // one slice as a dense matrix, then the slice power
    let mut slice = CMatrix::identity(dim);
    for &b in &order {
        let term = &terms[b];
        let angle = sign * term.coefficient * spec.dt / (2.0 * spec.slices as f64);
        let (start, span, gate) = pauli_exp_gate(term, angle);
        if span == 0 {
            for v in slice.data.iter_mut() {
                *v *= gate.data()[0];
            }
            continue;
        }
        let embedded = embed_gate(&gate, start, span, n);
        slice = matmul(&embedded, &slice);
    }
    let mut acc = slice.clone();
    for _ in 1..spec.slices {
        acc = matmul(&slice, &acc);
    }
    acc
}

fn embed_gate(gate: &crate::tensor::DenseTensor, start: usize, span: usize, n: usize) -> crate::linalg::CMatrix {
    let dim = 1usize << n;
    let gdim = 1usize << span;
    let right = n - start - span;
    let mut out = crate::linalg::CMatrix::zeros(dim, dim);
    for gr in 0..gdim {
        for gc in 0..gdim {
            let v = gate.data()[gr * gdim + gc];
            if v == C64::new(0.0, 0.0) {
                continue;
            }
            for left in 0..(1usize << start) {
                for rest in 0..(1usize << right) {
                    let row = (left << (span + right)) | (gr << right) | rest;
                    let col = (left << (span + right)) | (gc << right) | rest;
                    out.set(row, col, v);
                }
            }
        }
    }
    out
}

/// Dense matrix exponential `exp(i s H dt)` of a Pauli-term sum, via the
/// Hermitian eigendecomposition. Test-grade oracle; exponential in `n`.
pub fn dense_propagator(terms: &[PauliTerm], n: usize, dt: f64, sign: TimeSign) -> Result<crate::linalg::CMatrix> {
    use crate::linalg::{eigh, CMatrix};
    use crate::model::terms_to_matrix;
    let s = match sign {
        TimeSign::Reverse => 1.0,
        TimeSign::Forward => -1.0,
    };
    let h = terms_to_matrix(terms, n);
    let (w, v) = eigh(&h)?;
    let dim = 1usize << n;
    let mut out = CMatrix::zeros(dim, dim);
    for a in 0..dim {
        for b in 0..dim {
            let mut acc = C64::new(0.0, 0.0);
            for k in 0..dim {
                let ph = s * w[k] * dt;
                acc += v.at(a, k) * C64::new(ph.cos(), ph.sin()) * v.at(b, k).conj();
            }
            out.set(a, b, acc);
        }
    }
    Ok(out)
}
