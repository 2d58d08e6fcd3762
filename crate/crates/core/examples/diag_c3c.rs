use qpde_core::compress::{optimize_evolution, OptimizeOptions};
use qpde_core::model::{build_hubbard, exact_eigs, HubbardSpec};
use qpde_core::mps::Truncation;
use qpde_core::trotter::{build_trotter_mpo, TimeSign, TrotterSpec};
use num_complex::Complex64 as C64;

fn main() {
    let spec = HubbardSpec::new(4, 1.0, 10.0).unwrap();
    let terms = build_hubbard(&spec);
    let sol = exact_eigs(&terms, 8, 2).unwrap();
    for dt in [0.05f64, 0.1] {
        let tspec = TrotterSpec { dt, slices: 100, sign: TimeSign::Reverse, truncation: Truncation::new(4096, 1e-12) };
        let (reference, _) = build_trotter_mpo(&terms, 8, &tspec).unwrap();
        for seed in [1u64, 2, 3] {
            for off in [1usize, 0] {
                let opts = OptimizeOptions { sweeps: 10000, epsilon: 0.01, seed, first_offset: off, alternate_directions: false };
                let (circ, reports, _) = optimize_evolution(&reference, 5, &opts).unwrap();
                let fid = reports.last().unwrap().overlap_or_fidelity;
                let (mpo, _) = circ.to_mpo(Truncation::exact()).unwrap();
                let u = mpo.to_matrix();
                let dim = 256usize;
                let mut phases = [0.0f64; 2];
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
                }
                let gap = phases[1] - phases[0];
                println!(
                    "dt {dt} seed {seed} off {off}: fid {fid:.8} gap {gap:.6} rel {:+.3}%",
                    (gap - sol.gap) / sol.gap * 100.0
                );
            }
        }
    }
}
