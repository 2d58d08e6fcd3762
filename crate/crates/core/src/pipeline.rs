//! Experiment orchestration: model, compression, simulation, estimation,
//! mitigation, and file emission, staged behind a [`RunConfig`].
//!
//! Compressed circuits are cached on disk keyed by every field that affects
//! them, so presets sharing a model and depth reuse each other's
//! optimization runs. All outputs are deterministic given the seed; no
//! timestamps are written.

use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::aem::{self, Variant, VariantKind, VariantSet};
use crate::circuit::{self, BrickWallCircuit};
use crate::compress::{
    enhance_overlap, optimize_evolution, optimize_prep, EnhanceOptions, OptimizeOptions,
    SweepReport, UpdateTrace,
};
use crate::config::RunConfig;
use crate::error::{QpdeError, Result};
use crate::model::{build_hubbard, exact_eigs, EigenSolution, HubbardSpec, PauliTerm};
use crate::mpo::Mpo;
use crate::mps::{statevector_to_mps, superpose_ancilla, Mps, Truncation};
use crate::signal::{
    collect_series, default_stop_threshold, write_series, MeasurementRecord, TimeSeries,
};
use crate::sim::{sample_probability, Evolution, ExperimentRun, NoiseSpec, Statevector};
use crate::spectral::{estimate_gap, SpectralEstimate};
use crate::trotter::{build_trotter_mpo, TimeSign, TrotterSpec};

/// Everything a finished run reports.
#[derive(Clone, Debug)]
pub struct RunReport {
    pub gap_reference: f64,
    pub gap_estimate: f64,
    pub estimate: SpectralEstimate,
    /// Unmitigated gap estimate when AEM ran.
    pub gap_estimate_raw: Option<f64>,
    pub series: TimeSeries,
    pub prep_overlap: Option<f64>,
    pub evol_fidelity: Option<f64>,
    pub a0sq: f64,
    /// (step, gap error using data up to that step).
    pub gap_trace: Vec<(usize, f64)>,
    /// Per-step max bond of the L_i chains when AEM ran.
    pub aem_bonds: Vec<usize>,
}

struct ModelStage {
    terms: Vec<PauliTerm>,
    eigen: EigenSolution,
    target: Mps,
}

struct PrepStage {
    /// None in exact-prep mode.
    circuit: Option<BrickWallCircuit>,
    reports: Vec<SweepReport>,
    update_trace: UpdateTrace,
    overlap: Option<f64>,
    enhance_overlaps: Vec<f64>,
}

struct EvolStage {
    evolution: Evolution,
    reports: Vec<SweepReport>,
    update_trace: UpdateTrace,
    fidelity: Option<f64>,
}

/// Staged pipeline with lazy artifact construction.
pub struct Pipeline {
    pub cfg: RunConfig,
    pub verbose: bool,
    model: Option<ModelStage>,
    prep: Option<PrepStage>,
    evol: Option<EvolStage>,
}

fn cache_dir() -> PathBuf {
    std::env::var("QPDE_CACHE_DIR").map(PathBuf::from).unwrap_or_else(|_| "qpde_cache".into())
}

impl Pipeline {
    pub fn new(cfg: RunConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Pipeline { cfg, verbose: false, model: None, prep: None, evol: None })
    }

    fn say(&self, msg: &str) {
        if self.verbose {
            eprintln!("[qpde] {msg}");
        }
    }

    fn out_path(&self, name: &str) -> PathBuf {
        Path::new(&self.cfg.out_dir).join(name)
    }

    fn ensure_out_dir(&self) -> Result<()> {
        fs::create_dir_all(&self.cfg.out_dir)?;
        Ok(())
    }

    // ------------------------------------------------------------------
    // stage: model
    // ------------------------------------------------------------------

    pub fn build_model(&mut self) -> Result<()> {
        if self.model.is_some() {
            return Ok(());
        }
        let spec = HubbardSpec::new(self.cfg.n_sites, self.cfg.hopping, self.cfg.onsite)?;
        let n = spec.num_qubits();
        self.say(&format!("exact diagonalization of the {n}-qubit model"));
        let terms = build_hubbard(&spec);
        let eigen = exact_eigs(&terms, n, 2)?;
        let g = statevector_to_mps(&eigen.states[0])?;
        let e = statevector_to_mps(&eigen.states[1])?;
        let target = superpose_ancilla(&g, &e)?;
        self.model = Some(ModelStage { terms, eigen, target });
        Ok(())
    }

    pub fn reference_gap(&mut self) -> Result<f64> {
        self.build_model()?;
        Ok(self.model.as_ref().unwrap().eigen.gap)
    }

    pub fn write_model_summary(&mut self) -> Result<()> {
        self.build_model()?;
        self.ensure_out_dir()?;
        let m = self.model.as_ref().unwrap();
        let mut f = BufWriter::new(fs::File::create(self.out_path("model.txt"))?);
        writeln!(f, "# model summary")?;
        writeln!(f, "n_sites {}", self.cfg.n_sites)?;
        writeln!(f, "qubits {}", self.cfg.num_system_qubits())?;
        writeln!(f, "pauli_terms {}", m.terms.len())?;
        writeln!(f, "e0 {:.12}", m.eigen.energies[0])?;
        writeln!(f, "e1 {:.12}", m.eigen.energies[1])?;
        writeln!(f, "gap {:.12}", m.eigen.gap)?;
        writeln!(f, "target_max_bond {}", m.target.max_bond())?;
        Ok(())
    }

    // ------------------------------------------------------------------
    // stage: state-preparation circuit
    // ------------------------------------------------------------------

    pub fn build_prep(&mut self) -> Result<()> {
        if self.prep.is_some() {
            return Ok(());
        }
        self.build_model()?;
        if self.cfg.exact_prep {
            self.prep = Some(PrepStage {
                circuit: None,
                reports: vec![],
                update_trace: UpdateTrace::default(),
                overlap: None,
                enhance_overlaps: vec![],
            });
            return Ok(());
        }
        let key = self.cfg.circuit_cache_key("prep", self.cfg.sweeps_prep, None);
        let target = &self.model.as_ref().unwrap().target;
        if let Some(circ) = load_cached_circuit(&key) {
            self.say("prep circuit from cache");
            let reference = crate::compress::prep_reference_mpo(target)?;
            let tr = crate::compress::trace_with_circuit(&reference, &circ)?;
            self.prep = Some(PrepStage {
                circuit: Some(circ),
                reports: vec![],
                update_trace: UpdateTrace::default(),
                overlap: Some(tr.re),
                enhance_overlaps: vec![],
            });
            return Ok(());
        }
        self.say(&format!(
            "optimizing prep circuit: depth {}, {} sweeps",
            self.cfg.d_prep, self.cfg.sweeps_prep
        ));
        let stage = if self.cfg.enhance {
            let opts = EnhanceOptions {
                depth_per_iter: self.cfg.enhance_depth_per_iter,
                sweeps_per_iter: self.cfg.enhance_sweeps_per_iter,
                max_iters: self.cfg.enhance_max_iters,
                merge_truncation: Truncation::new(usize::MAX, self.cfg.svd_cutoff),
                min_gain: 1e-3,
                bond_budget: 1 << 12,
                epsilon: self.cfg.epsilon_init,
                seed: self.cfg.seed,
            };
            let (circ, overlaps) = enhance_overlap(target, &opts)?;
            PrepStage {
                circuit: Some(circ),
                reports: vec![],
                update_trace: UpdateTrace::default(),
                overlap: overlaps.last().copied(),
                enhance_overlaps: overlaps,
            }
        } else {
            let opts = OptimizeOptions {
                sweeps: self.cfg.sweeps_prep,
                epsilon: self.cfg.epsilon_init,
                seed: self.cfg.seed,
                first_offset: 0, alternate_directions: false };
            let (circ, reports, trace) = optimize_prep(target, self.cfg.d_prep, &opts)?;
            let overlap = reports.last().map(|r| r.overlap_or_fidelity);
            PrepStage {
                circuit: Some(circ),
                reports,
                update_trace: trace,
                overlap,
                enhance_overlaps: vec![],
            }
        };
        if let Some(c) = &stage.circuit {
            store_cached_circuit(&key, c);
        }
        self.prep = Some(stage);
        Ok(())
    }

    // ------------------------------------------------------------------
    // stage: evolution circuit
    // ------------------------------------------------------------------

    fn reference_mpo(&self, slices: usize, sign: TimeSign) -> Result<Mpo> {
        let tag = match sign {
            TimeSign::Reverse => "rev",
            TimeSign::Forward => "fwd",
        };
        let key = format!(
            "mpo_{tag}_ns{}_t{}_u{}_dt{}_m{}_cut{:e}",
            self.cfg.n_sites,
            self.cfg.hopping,
            self.cfg.onsite,
            self.cfg.dt,
            slices,
            self.cfg.svd_cutoff
        )
        .replace(['.', '+'], "p");
        if let Some(mpo) = load_cached_mpo(&key) {
            return Ok(mpo);
        }
        let m = self.model.as_ref().unwrap();
        let n = self.cfg.num_system_qubits();
        let spec = TrotterSpec {
            dt: self.cfg.dt,
            slices,
            sign,
            truncation: Truncation::new(1 << 12, self.cfg.svd_cutoff),
        };
        let mpo = build_trotter_mpo(&m.terms, n, &spec)?.0;
        store_cached_mpo(&key, &mpo);
        Ok(mpo)
    }

    fn reverse_reference(&self, slices: usize) -> Result<Mpo> {
        self.reference_mpo(slices, TimeSign::Reverse)
    }

    fn optimize_variant(&self, sweeps: usize, slices: usize, seed_salt: u64) -> Result<(BrickWallCircuit, Vec<SweepReport>, UpdateTrace, f64)> {
        let key = self.cfg.circuit_cache_key("evol", sweeps, Some(slices));
        let reference = self.reverse_reference(slices)?;
        if let Some(circ) = load_cached_circuit(&key) {
            let t = crate::compress::trace_with_circuit(&reference, &circ)?;
            let fid = t.norm() / (1u64 << self.cfg.num_system_qubits()) as f64;
            return Ok((circ, vec![], UpdateTrace::default(), fid));
        }
        let opts = OptimizeOptions {
            sweeps,
            epsilon: self.cfg.epsilon_init,
            seed: self.cfg.seed.wrapping_add(seed_salt),
            first_offset: 0, alternate_directions: false };
        let (circ, reports, trace) = optimize_evolution(&reference, self.cfg.d_evol, &opts)?;
        let fid = reports.last().map(|r| r.overlap_or_fidelity).unwrap_or(0.0);
        store_cached_circuit(&key, &circ);
        Ok((circ, reports, trace, fid))
    }

    pub fn build_evol(&mut self) -> Result<()> {
        if self.evol.is_some() {
            return Ok(());
        }
        self.build_model()?;
        if self.cfg.exact_evolution {
            self.say("dense exact-reference evolution");
            let m = self.model.as_ref().unwrap();
            let spec = TrotterSpec {
                dt: self.cfg.dt,
                slices: self.cfg.trotter_slices,
                sign: TimeSign::Forward,
                truncation: Truncation::exact(),
            };
            let dense =
                crate::trotter::dense_trotter_propagator(&m.terms, self.cfg.num_system_qubits(), &spec);
            self.evol = Some(EvolStage {
                evolution: Evolution::Dense(dense),
                reports: vec![],
                update_trace: UpdateTrace::default(),
                fidelity: None,
            });
            return Ok(());
        }
        self.say(&format!(
            "optimizing evolution circuit: depth {}, {} sweeps",
            self.cfg.d_evol, self.cfg.sweeps_evol
        ));
        let (circ, reports, trace, fid) =
            self.optimize_variant(self.cfg.sweeps_evol, self.cfg.trotter_slices, 0x0e01)?;
        self.evol = Some(EvolStage {
            evolution: Evolution::Circuit(circ),
            reports,
            update_trace: trace,
            fidelity: Some(fid),
        });
        Ok(())
    }

    // ------------------------------------------------------------------
    // stage: simulation
    // ------------------------------------------------------------------

    fn prepared_run(&self, evolution: Evolution) -> Result<ExperimentRun> {
        match (&self.cfg.exact_prep, &self.prep.as_ref().unwrap().circuit) {
            (true, _) | (false, None) => {
                let m = self.model.as_ref().unwrap();
                let psi = Statevector::from_amps(
                    self.cfg.num_system_qubits() + 1,
                    m.target.to_statevector(),
                )?;
                ExperimentRun::from_prepared_state(psi, evolution)
            }
            (false, Some(circ)) => ExperimentRun::from_prep_circuit(circ, evolution),
        }
    }

    fn noise(&self) -> NoiseSpec {
        NoiseSpec { p_step: self.cfg.p_step, shots: self.cfg.shots, seed: self.cfg.seed }
    }

    pub fn simulate(&mut self) -> Result<(TimeSeries, Vec<MeasurementRecord>)> {
        self.build_prep()?;
        self.build_evol()?;
        let evolution = self.evol.as_ref().unwrap().evolution.clone();
        let mut run = self.prepared_run(evolution)?;
        let noise = self.noise();
        let threshold = self
            .cfg
            .stop_threshold
            .unwrap_or_else(|| default_stop_threshold(self.cfg.shots));
        let mut log = Vec::new();
        let mut ts =
            collect_series(&mut run, &noise, self.cfg.max_steps, threshold, Some(&mut log))?;
        ts.dt = self.cfg.dt;
        Ok((ts, log))
    }

    /// Exact per-step probability grid for one evolution variant, with the
    /// same noise model as the base series.
    fn m_grid(&self, evolution: Evolution, steps: usize, seed_salt: u64) -> Result<(Vec<[f64; 4]>, f64)> {
        let mut run = self.prepared_run(evolution)?;
        let noise = self.noise();
        let a0sq = run.a0sq();
        let dim = 1u64 << run.num_qubits();
        let mut rng = {
            use rand_chacha::rand_core::SeedableRng;
            rand_chacha::ChaCha12Rng::seed_from_u64(noise.seed.wrapping_add(seed_salt))
        };
        let mut grid = Vec::with_capacity(steps);
        for r in 1..=steps {
            let exact = run.step();
            let p = noise.p_dep(r);
            let mut row = [0.0; 4];
            for (slot, m) in row.iter_mut().zip(exact.iter()) {
                let noisy = (1.0 - p) * m + p / dim as f64;
                *slot = match noise.shots {
                    None => noisy,
                    Some(shots) => sample_probability(noisy, shots, &mut rng),
                };
            }
            grid.push(row);
        }
        Ok((grid, a0sq))
    }

    // ------------------------------------------------------------------
    // stage: AEM
    // ------------------------------------------------------------------

    fn build_variants(&mut self) -> Result<VariantSet> {
        self.build_model()?;
        let mut variants = Vec::new();
        match self.cfg.aem_kind {
            VariantKind::Sweeps => {
                // same seed salt as the base circuit: the variant whose sweep
                // count equals the default is the base circuit, bit for bit
                for &sw in &self.cfg.aem_variants.clone() {
                    self.say(&format!("variant circuit: {sw} sweeps"));
                    let (c, _, _, _) =
                        self.optimize_variant(sw, self.cfg.trotter_slices, 0x0e01)?;
                    variants.push(Variant { label: format!("sweeps_{sw}"), circuit: c });
                }
            }
            VariantKind::Slices => {
                for &m in &self.cfg.aem_variants.clone() {
                    self.say(&format!("variant circuit: {m} slices"));
                    let (c, _, _, _) = self.optimize_variant(self.cfg.sweeps_evol, m, 0x0e01)?;
                    variants.push(Variant { label: format!("slices_{m}"), circuit: c });
                }
            }
        }
        Ok(VariantSet { kind: self.cfg.aem_kind, variants })
    }

    // ------------------------------------------------------------------
    // full run
    // ------------------------------------------------------------------

    pub fn run(&mut self) -> Result<RunReport> {
        self.ensure_out_dir()?;
        self.build_model()?;
        self.build_prep()?;
        self.build_evol()?;

        let gap_reference = self.model.as_ref().unwrap().eigen.gap;
        let (raw_series, log) = self.simulate()?;

        let mut aem_bonds = Vec::new();
        let mut gap_estimate_raw = None;
        let (series, estimate, gap_estimate) = if self.cfg.aem {
            let variants = self.build_variants()?;
            self.say("exact inverse-step reference for the L chains");
            // the left chain factor must cancel one evolution step:
            // exp(+iH dt), i.e. the Reverse sign
            let mut exact_forward = self.reference_mpo(self.cfg.trotter_slices, TimeSign::Reverse)?;
            if self.cfg.aem_cutoff > self.cfg.svd_cutoff {
                // the chains truncate at the AEM cutoff anyway; a reference
                // compressed to the same accuracy shrinks the zip width
                exact_forward
                    .compress_sweep(Truncation::new(self.cfg.aem_max_bond, self.cfg.aem_cutoff))?;
            }
            let prep_mps = self.prep_state_mps()?;
            self.say("sandwich chains for M and L");
            let tables = aem::compute_m_l(
                &prep_mps,
                &variants,
                &exact_forward,
                self.cfg.max_steps,
                Truncation::new(self.cfg.aem_max_bond, self.cfg.aem_cutoff).with_sketch(512),
                self.cfg.aem_max_bond,
            )?;
            aem_bonds = tables.l_max_bond.clone();
            let steps_eff = tables.steps_computed.min(self.cfg.max_steps);
            let mut weights = Vec::with_capacity(steps_eff);
            for t in 0..steps_eff {
                weights.push(aem::solve_weights(&tables.m[t], &tables.l[t])?);
            }
            self.say("per-variant measurement grids");
            let mut grids = Vec::new();
            let mut a0sq = 0.5;
            for (i, v) in variants.variants.iter().enumerate() {
                let (g, a) =
                    self.m_grid(Evolution::Circuit(v.circuit.clone()), steps_eff, i as u64)?;
                grids.push(g);
                a0sq = a;
            }
            let mitigated = aem::mitigated_series(&weights, &grids, a0sq, self.cfg.dt)?;
            self.write_aem_tables(&tables, &weights)?;
            let (raw_gap, _) = estimate_gap(&raw_series.truncated(steps_eff))?;
            gap_estimate_raw = Some(raw_gap);
            let (gap, est) = estimate_gap(&mitigated)?;
            (mitigated, est, gap)
        } else {
            let (gap, est) = estimate_gap(&raw_series)?;
            (raw_series.clone(), est, gap)
        };

        // gap-error trace: estimate from the data up to each step
        let mut gap_trace = Vec::new();
        for r in 6..=series.samples.len() {
            if let Ok((g, _)) = estimate_gap(&series.truncated(r)) {
                gap_trace.push((r, g - gap_reference));
            }
        }

        let report = RunReport {
            gap_reference,
            gap_estimate,
            estimate,
            gap_estimate_raw,
            series: series.clone(),
            prep_overlap: self.prep.as_ref().unwrap().overlap,
            evol_fidelity: self.evol.as_ref().unwrap().fidelity,
            a0sq: series.a0sq,
            gap_trace,
            aem_bonds,
        };
        self.write_outputs(&report, &raw_series, &log)?;
        Ok(report)
    }

    /// The prepared state as an MPS (for the AEM chains and |a0|^2).
    fn prep_state_mps(&self) -> Result<Mps> {
        match &self.prep.as_ref().unwrap().circuit {
            Some(c) => {
                let zero = Mps::all_zeros(c.width());
                Ok(c.apply_to_mps(&zero, Truncation::new(usize::MAX, 1e-14))?.0)
            }
            None => Ok(self.model.as_ref().unwrap().target.clone()),
        }
    }

    // ------------------------------------------------------------------
    // emission
    // ------------------------------------------------------------------

    fn write_aem_tables(&self, tables: &aem::MlTables, weights: &[aem::AemWeights]) -> Result<()> {
        self.ensure_out_dir()?;
        let mut f = BufWriter::new(fs::File::create(self.out_path("aem_ml.txt"))?);
        writeln!(f, "# step M_ij (row-major upper triangle) then L_i, then max_bond(L)")?;
        let k = tables.l.first().map(|l| l.len()).unwrap_or(0);
        for t in 0..tables.steps_computed {
            write!(f, "{}", t + 1)?;
            for i in 0..k {
                for j in i..k {
                    write!(f, " {:.12e}", tables.m[t][i][j])?;
                }
            }
            for i in 0..k {
                write!(f, " {:.12e}", tables.l[t][i])?;
            }
            writeln!(f, " {}", tables.l_max_bond[t])?;
        }
        let mut f = BufWriter::new(fs::File::create(self.out_path("aem_weights.txt"))?);
        writeln!(f, "# step c_i ... objective ridge")?;
        for (t, w) in weights.iter().enumerate() {
            write!(f, "{}", t + 1)?;
            for c in &w.coefficients {
                write!(f, " {:.12e}", c)?;
            }
            writeln!(f, " {:.12e} {}", w.objective, u8::from(w.ridge_applied))?;
        }
        Ok(())
    }

    fn write_outputs(
        &self,
        report: &RunReport,
        raw_series: &TimeSeries,
        log: &[MeasurementRecord],
    ) -> Result<()> {
        self.ensure_out_dir()?;
        fs::write(self.out_path("config.txt"), self.cfg.serialize())?;

        let f = BufWriter::new(fs::File::create(self.out_path("series.txt"))?);
        write_series(&report.series, f)?;
        if self.cfg.aem {
            let f = BufWriter::new(fs::File::create(self.out_path("series_raw.txt"))?);
            write_series(raw_series, f)?;
        }

        if !log.is_empty() {
            let mut f = BufWriter::new(fs::File::create(self.out_path("run_log.txt"))?);
            writeln!(f, "# step theta shots count")?;
            for r in log {
                writeln!(f, "{} {:.10} {} {}", r.step, r.theta, r.shots, r.count)?;
            }
        }

        let mut f = BufWriter::new(fs::File::create(self.out_path("estimate.txt"))?);
        writeln!(f, "# spectral estimate")?;
        writeln!(f, "gap_reference {:.12}", report.gap_reference)?;
        writeln!(f, "gap_estimate {:.12}", report.gap_estimate)?;
        if let Some(raw) = report.gap_estimate_raw {
            writeln!(f, "gap_estimate_unmitigated {:.12}", raw)?;
        }
        writeln!(f, "alpha {:.12e}", report.estimate.alpha)?;
        writeln!(f, "residual {:.12e}", report.estimate.residual)?;
        writeln!(f, "refinement_capped {}", u8::from(report.estimate.refinement_capped))?;
        writeln!(f, "# modes: amplitude frequency")?;
        for m in &report.estimate.modes {
            writeln!(f, "mode {:.12e} {:.12}", m.amplitude, m.frequency)?;
        }

        let mut f = BufWriter::new(fs::File::create(self.out_path("gap_trace.txt"))?);
        writeln!(f, "# step gap_error")?;
        for &(r, e) in &report.gap_trace {
            writeln!(f, "{} {:.12e}", r, e)?;
        }

        if !report.aem_bonds.is_empty() {
            let mut f = BufWriter::new(fs::File::create(self.out_path("aem_bonds.txt"))?);
            writeln!(f, "# step max_bond_L cutoff {:.3e}", self.cfg.aem_cutoff)?;
            for (t, b) in report.aem_bonds.iter().enumerate() {
                writeln!(f, "{} {}", t + 1, b)?;
            }
        }

        self.write_sweep_reports()?;

        let mut f = BufWriter::new(fs::File::create(self.out_path("report.txt"))?);
        writeln!(f, "# run report")?;
        writeln!(f, "gap_reference {:.12}", report.gap_reference)?;
        writeln!(f, "gap_estimate {:.12}", report.gap_estimate)?;
        writeln!(f, "gap_error {:.12e}", report.gap_estimate - report.gap_reference)?;
        if let Some(raw) = report.gap_estimate_raw {
            writeln!(f, "gap_error_unmitigated {:.12e}", raw - report.gap_reference)?;
        }
        if let Some(o) = report.prep_overlap {
            writeln!(f, "prep_overlap {:.12}", o)?;
        }
        if let Some(fi) = report.evol_fidelity {
            writeln!(f, "evol_fidelity {:.12}", fi)?;
        }
        writeln!(f, "a0sq {:.12}", report.a0sq)?;
        writeln!(f, "samples {}", report.series.samples.len())?;
        Ok(())
    }

    pub fn write_sweep_reports(&self) -> Result<()> {
        self.ensure_out_dir()?;
        if let Some(prep) = &self.prep {
            if !prep.reports.is_empty() {
                write_reports(&self.out_path("sweeps_prep.txt"), &prep.reports)?;
            }
            if !prep.enhance_overlaps.is_empty() {
                let mut f =
                    BufWriter::new(fs::File::create(self.out_path("enhance_overlaps.txt"))?);
                writeln!(f, "# iter overlap")?;
                for (i, o) in prep.enhance_overlaps.iter().enumerate() {
                    writeln!(f, "{} {:.12}", i + 1, o)?;
                }
            }
            if let Some(c) = &prep.circuit {
                let f = BufWriter::new(fs::File::create(self.out_path("prep_gates.txt"))?);
                circuit::export_gate_list(c, f)?;
            }
        }
        if let Some(evol) = &self.evol {
            if !evol.reports.is_empty() {
                write_reports(&self.out_path("sweeps_evol.txt"), &evol.reports)?;
            }
            if let Evolution::Circuit(c) = &evol.evolution {
                let f = BufWriter::new(fs::File::create(self.out_path("evol_gates.txt"))?);
                circuit::export_gate_list(c, f)?;
            }
        }
        Ok(())
    }

    /// Per-update objective traces for monotonicity audits.
    pub fn update_traces(&self) -> (Option<&UpdateTrace>, Option<&UpdateTrace>) {
        (
            self.prep.as_ref().map(|p| &p.update_trace),
            self.evol.as_ref().map(|e| &e.update_trace),
        )
    }
}

fn write_reports(path: &Path, reports: &[SweepReport]) -> Result<()> {
    let mut f = BufWriter::new(fs::File::create(path)?);
    writeln!(f, "# sweep objective overlap_or_fidelity")?;
    for r in reports {
        writeln!(f, "{} {:.12e} {:.12}", r.sweep_index, r.objective, r.overlap_or_fidelity)?;
    }
    Ok(())
}

fn load_cached_mpo(key: &str) -> Option<Mpo> {
    let path = cache_dir().join(format!("{key}.qtn"));
    let file = fs::File::open(path).ok()?;
    crate::serialize::load_mpo(BufReader::new(file)).ok()
}

fn store_cached_mpo(key: &str, m: &Mpo) {
    let dir = cache_dir();
    if fs::create_dir_all(&dir).is_err() {
        return;
    }
    let path = dir.join(format!("{key}.qtn"));
    if let Ok(file) = fs::File::create(&path) {
        let _ = crate::serialize::save_mpo(m, BufWriter::new(file));
    }
}

fn load_cached_circuit(key: &str) -> Option<BrickWallCircuit> {
    let path = cache_dir().join(format!("{key}.qbw"));
    let file = fs::File::open(path).ok()?;
    circuit::load_circuit(BufReader::new(file)).ok()
}

fn store_cached_circuit(key: &str, c: &BrickWallCircuit) {
    let dir = cache_dir();
    if fs::create_dir_all(&dir).is_err() {
        return;
    }
    let path = dir.join(format!("{key}.qbw"));
    if let Ok(file) = fs::File::create(&path) {
        let _ = circuit::save_circuit(c, BufWriter::new(file));
    }
}

/// Columnar plot-data files regenerated from a finished run directory.
pub fn emit_plotdata(out_dir: &str) -> Result<Vec<PathBuf>> {
    let dir = Path::new(out_dir);
    let mut written = Vec::new();

    // gap-error trace: (step, error)
    let trace = dir.join("gap_trace.txt");
    if trace.exists() {
        let dst = dir.join("plot_gap_error.txt");
        fs::copy(&trace, &dst)?;
        written.push(dst);
    }

    // signal magnitude: (step, |s|)
    let series = dir.join("series.txt");
    if series.exists() {
        let ts = crate::signal::read_series(BufReader::new(fs::File::open(&series)?))?;
        let dst = dir.join("plot_signal_magnitude.txt");
        let mut f = BufWriter::new(fs::File::create(&dst)?);
        writeln!(f, "# step value")?;
        for &(r, s) in &ts.samples {
            writeln!(f, "{} {:.12e}", r, s.norm())?;
        }
        written.push(dst);
    }

    // AEM bond growth: (step, max bond)
    let bonds = dir.join("aem_bonds.txt");
    if bonds.exists() {
        let dst = dir.join("plot_bond_growth.txt");
        fs::copy(&bonds, &dst)?;
        written.push(dst);
    }

    // spectral modes: (frequency, amplitude)
    let est = dir.join("estimate.txt");
    if est.exists() {
        let text = fs::read_to_string(&est)?;
        let dst = dir.join("plot_modes.txt");
        let mut f = BufWriter::new(fs::File::create(&dst)?);
        writeln!(f, "# frequency amplitude")?;
        for line in text.lines() {
            if let Some(rest) = line.strip_prefix("mode ") {
                let mut it = rest.split_whitespace();
                let amp: f64 = it.next().unwrap_or("0").parse().unwrap_or(0.0);
                let freq: f64 = it.next().unwrap_or("0").parse().unwrap_or(0.0);
                writeln!(f, "{:.12} {:.12e}", freq, amp)?;
            }
        }
        written.push(dst);
    }

    if written.is_empty() {
        return Err(QpdeError::InvalidConfig(format!(
            "no emittable artifacts found in {out_dir}"
        )));
    }
    Ok(written)
}

/// Convenience wrapper: validate, run, report.
pub fn run_pipeline(cfg: &RunConfig) -> Result<RunReport> {
    Pipeline::new(cfg.clone())?.run()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation_failure_is_reported() {
        let mut cfg = RunConfig::default();
        cfg.max_steps = 1;
        assert!(matches!(Pipeline::new(cfg), Err(QpdeError::InvalidConfig(_))));
    }

    #[test]
    fn exact_limit_small_model_runs() {
        let mut cfg = RunConfig::default();
        cfg.n_sites = 2;
        cfg.exact_prep = true;
        cfg.exact_evolution = true;
        cfg.shots = None;
        cfg.max_steps = 30;
        cfg.trotter_slices = 20;
        let dir = tempdir_path("exact_small");
        cfg.out_dir = dir.clone();
        let report = run_pipeline(&cfg).unwrap();
        // n_s = 2, U = 10 gap; exact-limit estimate lands close to reference
        assert!(
            (report.gap_estimate - report.gap_reference).abs() < 1e-4,
            "est {} vs ref {}",
            report.gap_estimate,
            report.gap_reference
        );
        let _ = fs::remove_dir_all(dir);
    }

    fn tempdir_path(tag: &str) -> String {
        std::env::temp_dir()
            .join(format!("qpde_test_{tag}_{}", std::process::id()))
            .to_string_lossy()
            .into_owned()
    }
}
