//! Circuit-family execution: all-zeros probability m(theta) for the
//! prepare / phase / evolve / unprepare circuit, with optional shot sampling
//! and a global depolarizing channel.
//!
//! The desk-scale backend is a dense statevector (site 0 is the most
//! significant bit, matching the MPS layout). The phase gate commutes with
//! the evolution (disjoint wires), so a series run evolves one state
//! incrementally and reads the four probabilities per step as overlaps with
//! fixed measurement states.

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::Binomial;

use crate::circuit::BrickWallCircuit;
use crate::error::{QpdeError, Result};
use crate::linalg::CMatrix;
use crate::tensor::DenseTensor;

type C64 = Complex64;

pub const THETAS: [f64; 4] = [
    0.0,
    std::f64::consts::FRAC_PI_2,
    std::f64::consts::PI,
    3.0 * std::f64::consts::FRAC_PI_2,
];

/// Dense statevector over `n` qubits, site 0 as the most significant bit.
#[derive(Clone, Debug)]
pub struct Statevector {
    n: usize,
    amps: Vec<C64>,
}

impl Statevector {
    pub fn zeros(n: usize) -> Self {
        let mut amps = vec![C64::new(0.0, 0.0); 1 << n];
        amps[0] = C64::new(1.0, 0.0);
        Statevector { n, amps }
    }

    pub fn from_amps(n: usize, amps: Vec<C64>) -> Result<Self> {
        if amps.len() != 1 << n {
            return Err(QpdeError::ShapeMismatch("statevector length".into()));
        }
        Ok(Statevector { n, amps })
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn amps(&self) -> &[C64] {
        &self.amps
    }

    pub fn dot(&self, other: &Statevector) -> C64 {
        self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum()
    }

    /// Apply a two-qubit gate (legs `(o1, o2, i1, i2)`) on wires `(w, w+1)`.
    pub fn apply_two_site(&mut self, gate: &DenseTensor, w: usize) {
        let n = self.n;
        let g = gate.data();
        let hi = n - 1 - w; // bit position of wire w
        let lo = n - 2 - w;
        let (mh, ml) = (1usize << hi, 1usize << lo);
        let dim = self.amps.len();
        let mut idx = 0usize;
        while idx < dim {
            if idx & mh == 0 && idx & ml == 0 {
                let i00 = idx;
                let i01 = idx | ml;
                let i10 = idx | mh;
                let i11 = idx | mh | ml;
                let a = [self.amps[i00], self.amps[i01], self.amps[i10], self.amps[i11]];
                for (r, &slot) in [i00, i01, i10, i11].iter().enumerate() {
                    let mut acc = C64::new(0.0, 0.0);
                    for (c, &ac) in a.iter().enumerate() {
                        acc += g[r * 4 + c] * ac;
                    }
                    self.amps[slot] = acc;
                }
            }
            idx += 1;
        }
    }

    /// Apply a single-qubit gate on wire `w`.
    pub fn apply_one_site(&mut self, gate: &DenseTensor, w: usize) {
        let g = gate.data();
        let m = 1usize << (self.n - 1 - w);
        for idx in 0..self.amps.len() {
            if idx & m == 0 {
                let a0 = self.amps[idx];
                let a1 = self.amps[idx | m];
                self.amps[idx] = g[0] * a0 + g[1] * a1;
                self.amps[idx | m] = g[2] * a0 + g[3] * a1;
            }
        }
    }

    /// Apply a brick-wall circuit with its wire 0 mapped to `wire_offset`.
    pub fn apply_circuit(&mut self, c: &BrickWallCircuit, wire_offset: usize) {
        for layer in c.layers() {
            for (k, g) in layer.gates.iter().enumerate() {
                self.apply_two_site(g, wire_offset + layer.wire_of(k));
            }
        }
    }

    /// Apply a dense operator on the trailing `m` wires (identity elsewhere).
    pub fn apply_dense_tail(&mut self, op: &CMatrix, m: usize) {
        let tail = 1usize << m;
        assert_eq!(op.rows, tail);
        let blocks = self.amps.len() / tail;
        let mut scratch = vec![C64::new(0.0, 0.0); tail];
        for b in 0..blocks {
            let base = b * tail;
            for (r, slot) in scratch.iter_mut().enumerate() {
                let mut acc = C64::new(0.0, 0.0);
                for c in 0..tail {
                    acc += op.at(r, c) * self.amps[base + c];
                }
                *slot = acc;
            }
            self.amps[base..base + tail].copy_from_slice(&scratch);
        }
    }
}

/// One time-evolution step, either a compressed circuit on the system wires
/// or a dense operator (the exact-limit mode).
#[derive(Clone, Debug)]
pub enum Evolution {
    /// Brick-wall circuit over the N system wires; the ancilla idles.
    Circuit(BrickWallCircuit),
    /// Dense `2^N x 2^N` step operator on the system wires.
    Dense(CMatrix),
}

impl Evolution {
    pub fn system_qubits(&self) -> usize {
        match self {
            Evolution::Circuit(c) => c.width(),
            Evolution::Dense(m) => m.rows.trailing_zeros() as usize,
        }
    }

    fn step(&self, psi: &mut Statevector) {
        match self {
            Evolution::Circuit(c) => psi.apply_circuit(c, 1),
            Evolution::Dense(m) => psi.apply_dense_tail(m, self.system_qubits()),
        }
    }
}

/// The Fig.-1 circuit family: prepare, phase the ancilla, evolve n steps,
/// unprepare, measure all zeros.
#[derive(Clone, Debug)]
pub struct ExperimentCircuit {
    pub prep: BrickWallCircuit,
    pub evol: Evolution,
    pub theta: f64,
    pub steps: usize,
}

/// Shot and depolarizing-noise controls. `shots: None` is exact-probability
/// mode. The composite depolarizing rate after `r` steps is
/// `p_dep = 1 - (1 - p_step)^r`.
#[derive(Clone, Copy, Debug)]
pub struct NoiseSpec {
    pub p_step: f64,
    pub shots: Option<u64>,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn exact() -> Self {
        NoiseSpec { p_step: 0.0, shots: None, seed: 0 }
    }

    pub fn p_dep(&self, steps: usize) -> f64 {
        1.0 - (1.0 - self.p_step).powi(steps as i32)
    }
}

/// Initial state plus the four fixed measurement states; the incremental
/// engine behind series collection.
pub struct ExperimentRun {
    psi: Statevector,
    meas: [Statevector; 4],
    a0sq: f64,
    evol: Evolution,
    steps_done: usize,
}

fn phase_gate(theta: f64) -> DenseTensor {
    let mut g = DenseTensor::zeros(&[2, 2]);
    g.data_mut()[0] = C64::new(1.0, 0.0);
    g.data_mut()[3] = C64::new(theta.cos(), theta.sin());
    g
}

impl ExperimentRun {
    /// Prepare from a compressed circuit: `|psi> = U_prep |0...0>` on N+1 wires.
    pub fn from_prep_circuit(prep: &BrickWallCircuit, evol: Evolution) -> Result<Self> {
        let w = prep.width();
        if evol.system_qubits() + 1 != w {
            return Err(QpdeError::ShapeMismatch(
                "evolution must act on one wire fewer than prep".into(),
            ));
        }
        let mut psi = Statevector::zeros(w);
        psi.apply_circuit(prep, 0);
        Self::from_prepared_state(psi, evol)
    }

    /// Prepare from an explicit (N+1)-qubit state (the exact-limit mode).
    pub fn from_prepared_state(psi: Statevector, evol: Evolution) -> Result<Self> {
        let w = psi.num_qubits();
        if evol.system_qubits() + 1 != w {
            return Err(QpdeError::ShapeMismatch(
                "evolution must act on one wire fewer than the state".into(),
            ));
        }
        let half = psi.amps.len() / 2;
        let a0sq: f64 = psi.amps[..half].iter().map(|c| c.norm_sqr()).sum();
        // measurement states P(-theta) |psi_prep>
        let meas = std::array::from_fn(|i| {
            let mut m = psi.clone();
            m.apply_one_site(&phase_gate(-THETAS[i]), 0);
            m
        });
        Ok(ExperimentRun { psi, meas, a0sq, evol, steps_done: 0 })
    }

    pub fn a0sq(&self) -> f64 {
        self.a0sq
    }

    pub fn num_qubits(&self) -> usize {
        self.psi.num_qubits()
    }

    pub fn steps_done(&self) -> usize {
        self.steps_done
    }

    /// Advance one evolution step and return the four exact probabilities
    /// m(theta) for theta in {0, pi/2, pi, 3pi/2}.
    pub fn step(&mut self) -> [f64; 4] {
        self.evol.step(&mut self.psi);
        self.steps_done += 1;
        std::array::from_fn(|i| self.meas[i].dot(&self.psi).norm_sqr())
    }
}

/// Exact (or shot-sampled) all-zeros probability of one circuit instance:
/// `m'(theta) = (1 - p_dep) m(theta) + p_dep / 2^{N+1}`.
pub fn measure_m(circ: &ExperimentCircuit, noise: &NoiseSpec) -> Result<f64> {
    let mut run = ExperimentRun::from_prep_circuit(&circ.prep, circ.evol.clone())?;
    let mut m = if circ.steps == 0 {
        run.meas[theta_index(circ.theta)?].dot(&run.psi).norm_sqr()
    } else {
        let mut last = [0.0; 4];
        for _ in 0..circ.steps {
            last = run.step();
        }
        last[theta_index(circ.theta)?]
    };
    let nplus1 = circ.prep.width();
    let p = noise.p_dep(circ.steps);
    m = (1.0 - p) * m + p / (1u64 << nplus1) as f64;
    match noise.shots {
        None => Ok(m),
        Some(shots) => {
            let mut rng = ChaCha12Rng::seed_from_u64(noise.seed);
            Ok(sample_probability(m, shots, &mut rng))
        }
    }
}

fn theta_index(theta: f64) -> Result<usize> {
    THETAS
        .iter()
        .position(|&t| (t - theta).abs() < 1e-12)
        .ok_or_else(|| QpdeError::InvalidConfig(format!("theta {theta} not in the four-point set")))
}

/// Binomial draw of the all-zeros count, as a frequency.
pub fn sample_probability<R: Rng>(m: f64, shots: u64, rng: &mut R) -> f64 {
    let p = m.clamp(0.0, 1.0);
    let bin = Binomial::new(shots, p).expect("valid probability");
    rng.sample(bin) as f64 / shots as f64
}

/// Classical branch weight |a0|^2 of a preparation circuit, through the MPS
/// route (projection of the ancilla site).
pub fn ancilla_zero_weight(prep: &BrickWallCircuit) -> Result<f64> {
    let zero = crate::mps::Mps::all_zeros(prep.width());
    let (state, _) = prep.apply_to_mps(&zero, crate::mps::Truncation::new(usize::MAX, 1e-14))?;
    Ok(crate::mps::ancilla_zero_weight(&state))
}
