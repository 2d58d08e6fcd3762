//! Algorithmic error mitigation for compressed evolution circuits.
//!
//! A handful of circuit variants `U_evol^i` of differing accuracy are mixed
//! into an approximate density matrix `mu(t) = sum_i c_i(t) rho_i(t)`. The
//! weights minimize `||rho_p(t) - mu(t)||_F^2 = 1 + sum_ij M_ij c_i c_j
//! - 2 sum_i L_i c_i` under `sum_i c_i = 1` and `sum_i |c_i| <= 3`.
//!
//! M and L are overlap magnitudes of sandwich products evaluated inside-out:
//! the chain `C_{n+1} = L C_n R` stays close to the identity because the
//! factors nearly cancel, which keeps its bond dimension far below that of
//! the bare powers. Left factors are either a variant circuit adjoint (for
//! M) or the forward exact-reference MPO (for L).

use num_complex::Complex64;
use rayon::prelude::*;

use crate::circuit::BrickWallCircuit;
use crate::error::{QpdeError, Result};
use crate::linalg;
use crate::mpo::{expectation, mpo_product, Mpo};
use crate::mps::{Mps, Truncation};
use crate::signal::{combine_signal, SeriesMeta, StopReason, TimeSeries};

type C64 = Complex64;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VariantKind {
    /// Variants differ in the Trotter slice count of their references.
    Slices,
    /// Variants differ in the optimization sweep count.
    Sweeps,
}

#[derive(Clone, Debug)]
pub struct Variant {
    pub label: String,
    pub circuit: BrickWallCircuit,
}

#[derive(Clone, Debug)]
pub struct VariantSet {
    pub kind: VariantKind,
    pub variants: Vec<Variant>,
}

impl VariantSet {
    pub fn len(&self) -> usize {
        self.variants.len()
    }

    pub fn is_empty(&self) -> bool {
        self.variants.is_empty()
    }
}

/// Left factor of the sandwich chain.
pub enum SandwichLeft<'a> {
    /// Adjoint of a variant circuit, applied gate by gate.
    CircuitAdjoint(&'a BrickWallCircuit),
    /// MPO factor (the forward exact reference `e^{+iH dt}`).
    MpoFactor(&'a Mpo),
}

/// Per-step record of the chain state.
#[derive(Clone, Copy, Debug)]
pub struct ChainStep {
    pub step: usize,
    pub value: C64,
    pub max_bond: usize,
    pub truncation_error: f64,
}

#[derive(Clone, Debug)]
pub struct SandwichResult {
    pub steps: Vec<ChainStep>,
    /// Set when the bond budget stopped the chain early.
    pub stopped_at: Option<usize>,
}

/// Values `v_n = <prep| C_n |prep>` for `n = 1..=steps` with
/// `C_{n+1} = L C_n R`, compressed after every factor.
pub fn sandwich_overlaps(
    prep: &Mps,
    left: SandwichLeft<'_>,
    right: &BrickWallCircuit,
    steps: usize,
    tr: Truncation,
    bond_budget: usize,
) -> Result<SandwichResult> {
    let n = prep.len();
    // factors act on the trailing system wires; idle wires (the ancilla)
    // stay identity in the chain
    if right.width() > n {
        return Err(QpdeError::ShapeMismatch("right factor wider than prep".into()));
    }
    let pad_r = n - right.width();
    let padded_left_mpo = match &left {
        SandwichLeft::MpoFactor(mpo) => {
            if mpo.len() > n {
                return Err(QpdeError::ShapeMismatch("left factor wider than prep".into()));
            }
            Some(mpo.padded_left(n - mpo.len()))
        }
        SandwichLeft::CircuitAdjoint(c) => {
            if c.width() > n {
                return Err(QpdeError::ShapeMismatch("left factor wider than prep".into()));
            }
            None
        }
    };
    let mut chain = Mpo::identity(n);
    let mut out = Vec::with_capacity(steps);
    let mut stopped_at = None;
    let mut err_acc = 0.0f64;

    for step in 1..=steps {
        // C <- L C
        let e_left = match &left {
            SandwichLeft::MpoFactor(_) => {
                let (next, info) = mpo_product(padded_left_mpo.as_ref().unwrap(), &chain, tr)?;
                chain = next;
                info.truncation_error
            }
            SandwichLeft::CircuitAdjoint(c) => {
                let pad = n - c.width();
                let mut err_sq = 0.0;
                for layer in c.layers().iter().rev() {
                    for (k, g) in layer.gates.iter().enumerate() {
                        let gd = g.conj().permute(&[2, 3, 0, 1]);
                        let e = chain.apply_gate_out(&gd, pad + layer.wire_of(k), 2, tr)?;
                        err_sq += e * e;
                    }
                }
                err_sq.sqrt()
            }
        };
        // C <- C R
        let mut err_sq = 0.0;
        for layer in right.layers().iter().rev() {
            for (k, g) in layer.gates.iter().enumerate() {
                let e = chain.apply_gate_in(g, pad_r + layer.wire_of(k), 2, tr)?;
                err_sq += e * e;
            }
        }
        let e_sweep = chain.compress_sweep(tr)?;
        err_acc =
            (err_acc * err_acc + e_left * e_left + err_sq + e_sweep * e_sweep).sqrt();

        let value = expectation(prep, &chain, prep)?;
        out.push(ChainStep {
            step,
            value,
            max_bond: chain.max_bond(),
            truncation_error: err_acc,
        });
        if chain.max_bond() > bond_budget {
            stopped_at = Some(step);
            break;
        }
    }
    Ok(SandwichResult { steps: out, stopped_at })
}

/// Per-step M matrix and L vector tables.
#[derive(Clone, Debug)]
pub struct MlTables {
    /// `m[t][i][j]`, symmetric with unit diagonal, for computed steps.
    pub m: Vec<Vec<Vec<f64>>>,
    /// `l[t][i]`.
    pub l: Vec<Vec<f64>>,
    /// Per-step max bond across the L_i chains (the cost driver).
    pub l_max_bond: Vec<usize>,
    /// Number of steps for which every chain delivered a value.
    pub steps_computed: usize,
}

/// Assemble M and L by running the sandwich chains; pairwise M chains and
/// per-variant L chains are independent and run in parallel.
pub fn compute_m_l(
    prep: &Mps,
    variants: &VariantSet,
    exact_forward: &Mpo,
    steps: usize,
    tr: Truncation,
    bond_budget: usize,
) -> Result<MlTables> {
    let k = variants.len();
    if k < 2 {
        return Err(QpdeError::InvalidConfig("need at least 2 variants".into()));
    }
    enum Job {
        Pair(usize, usize),
        Ref(usize),
    }
    let mut jobs = Vec::new();
    for i in 0..k {
        for j in (i + 1)..k {
            jobs.push(Job::Pair(i, j));
        }
    }
    for i in 0..k {
        jobs.push(Job::Ref(i));
    }

    let results: Vec<(usize, usize, SandwichResult)> = jobs
        .par_iter()
        .map(|job| match job {
            Job::Pair(i, j) => {
                let r = sandwich_overlaps(
                    prep,
                    SandwichLeft::CircuitAdjoint(&variants.variants[*i].circuit),
                    &variants.variants[*j].circuit,
                    steps,
                    tr,
                    bond_budget,
                )?;
                Ok((*i, *j, r))
            }
            Job::Ref(i) => {
                let r = sandwich_overlaps(
                    prep,
                    SandwichLeft::MpoFactor(exact_forward),
                    &variants.variants[*i].circuit,
                    steps,
                    tr,
                    bond_budget,
                )?;
                Ok((*i, k, r)) // j = k marks an L chain
            }
        })
        .collect::<Result<Vec<_>>>()?;

    let steps_computed =
        results.iter().map(|(_, _, r)| r.steps.len()).min().unwrap_or(0);
    let mut m = vec![vec![vec![1.0; k]; k]; steps_computed];
    let mut l = vec![vec![0.0; k]; steps_computed];
    let mut l_max_bond = vec![0usize; steps_computed];
    for (i, j, r) in &results {
        for (t, cs) in r.steps.iter().take(steps_computed).enumerate() {
            let mag2 = cs.value.norm_sqr();
            if *j == k {
                l[t][*i] = mag2;
                l_max_bond[t] = l_max_bond[t].max(cs.max_bond);
            } else {
                m[t][*i][*j] = mag2;
                m[t][*j][*i] = mag2;
            }
        }
    }
    // diagonal stays exactly 1: the variants are unitary by construction
    Ok(MlTables { m, l, l_max_bond, steps_computed })
}

/// Weights for one step.
#[derive(Clone, Debug)]
pub struct AemWeights {
    pub coefficients: Vec<f64>,
    /// Value of `1 + c^T M c - 2 L^T c` at the solution.
    pub objective: f64,
    /// A ridge was added to a singular KKT system.
    pub ridge_applied: bool,
}

const L1_BOUND: f64 = 3.0;
const FEAS_TOL: f64 = 1e-9;

fn quad_objective(m: &[Vec<f64>], l: &[f64], c: &[f64]) -> f64 {
    let k = c.len();
    let mut v = 1.0;
    for i in 0..k {
        v -= 2.0 * l[i] * c[i];
        for j in 0..k {
            v += m[i][j] * c[i] * c[j];
        }
    }
    v
}

fn feasible(c: &[f64]) -> bool {
    let sum: f64 = c.iter().sum();
    let l1: f64 = c.iter().map(|x| x.abs()).sum();
    (sum - 1.0).abs() < FEAS_TOL && l1 <= L1_BOUND + FEAS_TOL
}

/// Minimize the mitigation quadratic under the sum and L1 constraints by
/// exact enumeration over sign patterns (variant counts are tiny).
///
/// For each pattern in `{+,-,0}^k` the equality-constrained KKT system is
/// solved twice, with the L1 constraint inactive and active; all feasible,
/// sign-consistent candidates compete on the true objective. Basis vectors
/// and the uniform weights are always in the candidate pool, so the result
/// never loses to a single variant.
pub fn solve_weights(m: &[Vec<f64>], l: &[f64]) -> Result<AemWeights> {
    let k = l.len();
    if k == 0 || m.len() != k {
        return Err(QpdeError::ShapeMismatch("weights need square M matching L".into()));
    }
    let mut ridge_applied = false;

    let mut candidates: Vec<Vec<f64>> = Vec::new();
    for i in 0..k {
        let mut e = vec![0.0; k];
        e[i] = 1.0;
        candidates.push(e);
    }
    candidates.push(vec![1.0 / k as f64; k]);

    // sign patterns: 0 = zero, 1 = positive, 2 = negative
    let total = 3usize.pow(k as u32);
    for code in 1..total {
        let mut signs = Vec::with_capacity(k);
        let mut c = code;
        for _ in 0..k {
            signs.push(c % 3);
            c /= 3;
        }
        let free: Vec<usize> = (0..k).filter(|&i| signs[i] != 0).collect();
        if free.is_empty() {
            continue;
        }
        for l1_active in [false, true] {
            let nf = free.len();
            let dim = nf + 1 + usize::from(l1_active);
            let mut a = vec![vec![0.0; dim]; dim];
            let mut b = vec![0.0; dim];
            for (r, &i) in free.iter().enumerate() {
                for (cc, &j) in free.iter().enumerate() {
                    a[r][cc] = 2.0 * m[i][j];
                }
                a[r][nf] = 1.0;
                a[nf][r] = 1.0;
                if l1_active {
                    let s = if signs[i] == 1 { 1.0 } else { -1.0 };
                    a[r][nf + 1] = s;
                    a[nf + 1][r] = s;
                }
                b[r] = 2.0 * l[i];
            }
            b[nf] = 1.0;
            if l1_active {
                b[nf + 1] = L1_BOUND;
            }
            let solved = linalg::solve_real(&a, &b).or_else(|| {
                // near-singular M (variants too similar): ridge and retry
                ridge_applied = true;
                let mut ar = a.clone();
                for (r, _) in free.iter().enumerate() {
                    ar[r][r] += 2.0 * 1e-10;
                }
                linalg::solve_real(&ar, &b)
            });
            if let Some(x) = solved {
                let mut cand = vec![0.0; k];
                let mut sign_ok = true;
                for (r, &i) in free.iter().enumerate() {
                    cand[i] = x[r];
                    let want = if signs[i] == 1 { 1.0 } else { -1.0 };
                    if cand[i] * want < -FEAS_TOL {
                        sign_ok = false;
                    }
                }
                if sign_ok && feasible(&cand) {
                    candidates.push(cand);
                }
            }
        }
    }

    let best = candidates
        .into_iter()
        .filter(|c| feasible(c))
        .min_by(|a, b| quad_objective(m, l, a).total_cmp(&quad_objective(m, l, b)))
        .ok_or_else(|| QpdeError::NoSignal("no feasible weights".into()))?;
    let objective = quad_objective(m, l, &best);
    Ok(AemWeights { coefficients: best, objective, ridge_applied })
}

/// Mix per-variant probability grids into the mitigated series:
/// `m_mit(theta, t) = sum_i c_i(t) m_i(theta, t)`, then the usual signal
/// combination.
pub fn mitigated_series(
    weights: &[AemWeights],
    m_grids: &[Vec<[f64; 4]>],
    a0sq: f64,
    dt: f64,
) -> Result<TimeSeries> {
    let steps = weights.len();
    for (i, grid) in m_grids.iter().enumerate() {
        if grid.len() < steps {
            return Err(QpdeError::ShapeMismatch(format!(
                "variant {i} grid has {} steps, weights need {steps}",
                grid.len()
            )));
        }
    }
    let mut samples = Vec::with_capacity(steps);
    for t in 0..steps {
        let c = &weights[t].coefficients;
        if c.len() != m_grids.len() {
            return Err(QpdeError::ShapeMismatch("weights vs variant count".into()));
        }
        let mut mixed = [0.0f64; 4];
        for (ci, grid) in c.iter().zip(m_grids) {
            for (slot, v) in mixed.iter_mut().zip(grid[t].iter()) {
                *slot += ci * v;
            }
        }
        let s = combine_signal(mixed[0], mixed[1], mixed[2], mixed[3], a0sq)?;
        samples.push((t + 1, s));
    }
    Ok(TimeSeries {
        dt,
        samples,
        a0sq,
        meta: SeriesMeta { shots: None, p_step: 0.0, stop_reason: StopReason::MaxSteps },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_sandwich_stays_at_one() {
        use crate::circuit::init_brickwall;
        let prep = Mps::basis_state(4, &[0, 1, 1, 0]);
        let c = init_brickwall(4, 2, 0.1, 5, 0);
        let r = sandwich_overlaps(
            &prep,
            SandwichLeft::CircuitAdjoint(&c),
            &c,
            4,
            Truncation::exact(),
            1 << 20,
        )
        .unwrap();
        for cs in &r.steps {
            assert!((cs.value.re - 1.0).abs() < 1e-10, "step {} value {}", cs.step, cs.value);
            assert!(cs.value.im.abs() < 1e-10);
        }
    }

    #[test]
    fn two_variant_weights_hand_solved() {
        // M = I, L = (1, 0): minimum at c = (1, 0), objective 0
        let m = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let l = vec![1.0, 0.0];
        let w = solve_weights(&m, &l).unwrap();
        assert!((w.coefficients[0] - 1.0).abs() < 1e-8);
        assert!(w.coefficients[1].abs() < 1e-8);
        assert!(w.objective.abs() < 1e-8);
    }

    #[test]
    fn degenerate_variants_get_uniform_weights() {
        let m = vec![vec![1.0; 3]; 3];
        let l = vec![0.9; 3];
        let w = solve_weights(&m, &l).unwrap();
        let expect = 1.0 + 1.0 - 2.0 * 0.9;
        assert!((w.objective - expect).abs() < 1e-6);
        assert!((w.coefficients.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn weights_beat_every_basis_vector() {
        let m = vec![
            vec![1.0, 0.9, 0.7],
            vec![0.9, 1.0, 0.8],
            vec![0.7, 0.8, 1.0],
        ];
        let l = vec![0.95, 0.85, 0.75];
        let w = solve_weights(&m, &l).unwrap();
        for i in 0..3 {
            let mut e = vec![0.0; 3];
            e[i] = 1.0;
            assert!(w.objective <= quad_objective(&m, &l, &e) + 1e-12);
        }
        let uniform = vec![1.0 / 3.0; 3];
        assert!(w.objective <= quad_objective(&m, &l, &uniform) + 1e-12);
        let l1: f64 = w.coefficients.iter().map(|x| x.abs()).sum();
        assert!(l1 <= L1_BOUND + 1e-9);
    }

    #[test]
    fn grid_search_agrees_on_random_instances() {
        use rand::Rng;
        use rand_chacha::rand_core::SeedableRng;
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(33);
        for _ in 0..20 {
            // random SPD M with unit diagonal, random L
            let mut q = [[0.0f64; 3]; 3];
            for row in q.iter_mut() {
                for v in row.iter_mut() {
                    *v = rng.gen::<f64>() - 0.5;
                }
            }
            let mut m = vec![vec![0.0; 3]; 3];
            for i in 0..3 {
                for j in 0..3 {
                    m[i][j] = q[i].iter().zip(&q[j]).map(|(a, b)| a * b).sum::<f64>()
                        + if i == j { 0.5 } else { 0.0 };
                }
            }
            let scale = (m[0][0] * m[1][1] * m[2][2]).powf(1.0 / 3.0);
            for row in m.iter_mut() {
                for v in row.iter_mut() {
                    *v /= scale;
                }
            }
            let l: Vec<f64> = (0..3).map(|_| rng.gen::<f64>()).collect();
            let w = solve_weights(&m, &l).unwrap();
            // brute force over the constrained plane
            let mut best = f64::INFINITY;
            let grid = 80;
            for a in -grid..=2 * grid {
                for b in -grid..=2 * grid {
                    let c0 = a as f64 / grid as f64;
                    let c1 = b as f64 / grid as f64;
                    let c2 = 1.0 - c0 - c1;
                    let c = vec![c0, c1, c2];
                    if c.iter().map(|x| x.abs()).sum::<f64>() <= L1_BOUND {
                        best = best.min(quad_objective(&m, &l, &c));
                    }
                }
            }
            assert!(
                w.objective <= best + 1e-5,
                "kkt {} vs grid {}",
                w.objective,
                best
            );
        }
    }

    #[test]
    fn mitigated_series_with_unit_weight_reproduces_variant() {
        let grids = vec![
            vec![[0.6, 0.45, 0.35, 0.55]; 5],
            vec![[0.1, 0.2, 0.3, 0.4]; 5],
        ];
        let weights: Vec<AemWeights> = (0..5)
            .map(|_| AemWeights {
                coefficients: vec![1.0, 0.0],
                objective: 0.0,
                ridge_applied: false,
            })
            .collect();
        let ts = mitigated_series(&weights, &grids, 0.5, 0.1).unwrap();
        let expect = combine_signal(0.6, 0.45, 0.35, 0.55, 0.5).unwrap();
        for &(_, s) in &ts.samples {
            assert!((s - expect).norm() < 1e-14);
        }
    }
}
