use qpde_core::compress::{optimize_evolution, OptimizeOptions};
use qpde_core::model::{build_hubbard, exact_eigs, HubbardSpec};
use qpde_core::mps::Truncation;
use qpde_core::trotter::{build_trotter_mpo, TimeSign, TrotterSpec};
use num_complex::Complex64 as C64;

fn circuit_gap(circ: &qpde_core::circuit::BrickWallCircuit, sol: &qpde_core::model::EigenSolution, dt: f64) -> (f64, f64) {
    let (mpo, _) = circ.to_mpo(Truncation::exact()).unwrap();
    let u = mpo.to_matrix();
    let dim = 256usize;
    let mut phases = [0.0f64; 2];
    let mut min_ov = 1.0f64;
    for k in 0..2 {
        let psi = &sol.states[k];
        let mut amp = C64::new(0.0, 0.0);
        for i in 0..dim {
            let mut acc = C64::new(0.0, 0.0);
            for j in 0..dim {
                acc += u.data()[i * dim + j] * psi[j];
            }
            amp += psi[i].conj() * acc;
        }
        phases[k] = -amp.arg() / dt;
        min_ov = min_ov.min(amp.norm());
    }
    (phases[1] - phases[0], min_ov)
}

fn main() {
    let spec = HubbardSpec::new(4, 1.0, 10.0).unwrap();
    let terms = build_hubbard(&spec);
    let sol = exact_eigs(&terms, 8, 2).unwrap();
    let dt = 0.05;
    let tspec = TrotterSpec { dt, slices: 100, sign: TimeSign::Reverse, truncation: Truncation::new(4096, 1e-12) };
    let (reference, _) = build_trotter_mpo(&terms, 8, &tspec).unwrap();

    // survey: epsilon and first_offset and depth (sanity: depth 7 should do better)
    for (eps, off, depth, sweeps) in [
        (0.01, 0usize, 5usize, 2000usize),
        (0.05, 0, 5, 2000),
        (0.2, 0, 5, 2000),
        (0.01, 1, 5, 2000),
        (0.0, 0, 5, 2000),
        (0.01, 0, 7, 2000),
        (0.01, 0, 3, 2000),
    ] {
        let opts = OptimizeOptions { sweeps, epsilon: eps, seed: 1, first_offset: off, alternate_directions: false };
        let (circ, reports, _) = optimize_evolution(&reference, depth, &opts).unwrap();
        let fid = reports.last().unwrap().overlap_or_fidelity;
        let (gap, ov) = circuit_gap(&circ, &sol, dt);
        println!(
            "eps {eps} off {off} depth {depth}: fid {fid:.8} gap {gap:.6} rel {:+.3}% (sector ov {ov:.6})",
            (gap - sol.gap) / sol.gap * 100.0
        );
    }
}
