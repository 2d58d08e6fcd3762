use qpde_core::compress::{optimize_evolution, OptimizeOptions};
use qpde_core::model::{build_hubbard, exact_eigs, terms_to_matrix, HubbardSpec};
use qpde_core::mps::Truncation;
use qpde_core::trotter::{build_trotter_mpo, TimeSign, TrotterSpec};
use num_complex::Complex64 as C64;


fn main() {
    let spec = HubbardSpec::new(4, 1.0, 10.0).unwrap();
    let terms = build_hubbard(&spec);
    let sol = exact_eigs(&terms, 8, 2).unwrap();
    let dt = 0.05;
    let tspec = TrotterSpec { dt, slices: 100, sign: TimeSign::Reverse, truncation: Truncation::new(4096, 1e-12) };
    let (reference, _) = build_trotter_mpo(&terms, 8, &tspec).unwrap();

    for seed in [1u64, 2, 3, 4] {
        for sweeps in [2000usize] {
            let opts = OptimizeOptions { sweeps, epsilon: 0.01, seed, first_offset: 0, alternate_directions: false };
            let (circ, reports, _) = optimize_evolution(&reference, 5, &opts).unwrap();
            let fid = reports.last().unwrap().overlap_or_fidelity;
            // dense unitary of the circuit
            let (mpo, _) = circ.to_mpo(Truncation::exact()).unwrap();
            let u = mpo.to_matrix(); // (256,256) DenseTensor
            // theta_k via <psi_k|U|psi_k> phase (projected phases; good when overlap ~ 1)
            let dim = 256usize;
            let mut phases = [0.0f64; 2];
            for k in 0..2 {
                let psi = &sol.states[k];
                let mut upsi = vec![C64::new(0.0, 0.0); dim];
                for i in 0..dim {
                    let mut acc = C64::new(0.0, 0.0);
                    for j in 0..dim {
                        acc += u.data()[i * dim + j] * psi[j];
                    }
                    upsi[i] = acc;
                }
                let amp: C64 = psi.iter().zip(&upsi).map(|(a, b)| a.conj() * b).sum();
                phases[k] = -amp.arg() / dt;
                if k == 1 {
                    println!("  |<psi1|U|psi1>| = {:.6}", amp.norm());
                }
            }
            let circuit_gap = phases[1] - phases[0];
            println!(
                "seed {seed} sweeps {sweeps}: fid {fid:.8} circuit gap {:.6} (ref {:.6}, rel {:+.3}%)",
                circuit_gap, sol.gap, (circuit_gap - sol.gap) / sol.gap * 100.0
            );
        }
    }
}
