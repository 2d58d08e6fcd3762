use qpde_core::compress::{optimize_evolution, OptimizeOptions};
use qpde_core::model::{build_hubbard, exact_eigs, HubbardSpec};
use qpde_core::mps::Truncation;
use qpde_core::trotter::{build_trotter_mpo, TimeSign, TrotterSpec};
use num_complex::Complex64 as C64;

fn main() {
    let spec = HubbardSpec::new(4, 1.0, 10.0).unwrap();
    let terms = build_hubbard(&spec);
    let sol = exact_eigs(&terms, 8, 4).unwrap();
    println!("E: {:?}", &sol.energies);
    let dt = 0.05;
    let tspec = TrotterSpec { dt, slices: 100, sign: TimeSign::Reverse, truncation: Truncation::new(4096, 1e-12) };
    let (reference, _) = build_trotter_mpo(&terms, 8, &tspec).unwrap();

    for seed in [5u64, 6, 7, 8, 9, 10] {
        let opts = OptimizeOptions { sweeps: 3000, epsilon: 0.01, seed, first_offset: 0, alternate_directions: false };
        let (circ, reports, _) = optimize_evolution(&reference, 5, &opts).unwrap();
        let fid = reports.last().unwrap().overlap_or_fidelity;
        let (mpo, _) = circ.to_mpo(Truncation::exact()).unwrap();
        let u = mpo.to_matrix();
        let dim = 256usize;
        let phase_of = |psi: &Vec<C64>| -> (f64, f64) {
            let mut amp = C64::new(0.0, 0.0);
            for i in 0..dim {
                let mut acc = C64::new(0.0, 0.0);
                for j in 0..dim {
                    acc += u.data()[i * dim + j] * psi[j];
                }
                amp += psi[i].conj() * acc;
            }
            (-amp.arg() / dt, amp.norm())
        };
        let (th0, _) = phase_of(&sol.states[0]);
        let gaps: Vec<f64> = (1..4).map(|k| phase_of(&sol.states[k]).0 - th0).collect();
        let rels: Vec<String> =
            gaps.iter().map(|g| format!("{:+.2}%", (g - sol.gap) / sol.gap * 100.0)).collect();
        println!("seed {seed}: fid {fid:.8} triplet gap biases {rels:?}");
    }
}
