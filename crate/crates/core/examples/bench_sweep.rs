use qpde_core::compress::{optimize_evolution, optimize_prep, OptimizeOptions};
use qpde_core::model::{build_hubbard, exact_eigs, HubbardSpec};
use qpde_core::mps::{statevector_to_mps, superpose_ancilla, Truncation};
use qpde_core::trotter::{build_trotter_mpo, TimeSign, TrotterSpec};
use std::time::Instant;

fn main() {
    let spec = HubbardSpec::new(4, 1.0, 10.0).unwrap();
    let terms = build_hubbard(&spec);
    let n = 8;

    let t0 = Instant::now();
    let tspec = TrotterSpec { dt: 0.05, slices: 100, sign: TimeSign::Reverse, truncation: Truncation::new(4096, 1e-12) };
    let (reference, info) = build_trotter_mpo(&terms, n, &tspec).unwrap();
    println!("trotter m=100 build: {:?}, max_bond {}, err {:.2e}", t0.elapsed(), reference.max_bond(), info.truncation_error);

    let t0 = Instant::now();
    let opts = OptimizeOptions { sweeps: 100, epsilon: 0.01, seed: 1, first_offset: 0, alternate_directions: false };
    let (_c, reports, trace) = optimize_evolution(&reference, 5, &opts).unwrap();
    let dt100 = t0.elapsed();
    println!("evol 100 sweeps: {:?} -> fidelity {:.8}", dt100, reports.last().unwrap().overlap_or_fidelity);
    println!("  per-sweep: {:?}", dt100 / 100);
    let mono = trace.pre.iter().zip(&trace.post).all(|(a, b)| *b <= a + 1e-10);
    println!("  monotone: {mono}");

    let t0 = Instant::now();
    let sol = exact_eigs(&terms, n, 2).unwrap();
    println!("eigs: {:?} gap {:.6}", t0.elapsed(), sol.gap);
    let g = statevector_to_mps(&sol.states[0]).unwrap();
    let e = statevector_to_mps(&sol.states[1]).unwrap();
    let target = superpose_ancilla(&g, &e).unwrap();
    println!("target max bond {}", target.max_bond());

    let t0 = Instant::now();
    let opts = OptimizeOptions { sweeps: 100, epsilon: 0.01, seed: 1, first_offset: 0, alternate_directions: false };
    let (_c, reports, _) = optimize_prep(&target, 5, &opts).unwrap();
    let dtp = t0.elapsed();
    println!("prep 100 sweeps: {:?} -> overlap {:.8}", dtp, reports.last().unwrap().overlap_or_fidelity);
    println!("  per-sweep: {:?}", dtp / 100);
}
