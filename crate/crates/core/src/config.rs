//! Flat key-value run configuration.
//!
//! The on-disk format is `key = value`, one per line, `#` comments. Keys
//! match the struct fields; serialization emits them in a fixed order so a
//! parse/serialize round trip is canonical.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::aem::VariantKind;
use crate::error::{QpdeError, Result};

/// Everything a pipeline run needs. Defaults follow the reference study:
/// 4 sites (9 wires with the ancilla), dt 0.05, depth 5 circuits, 10^3 prep
/// and 10^4 evolution sweeps, SVD cutoff 1e-12, 100 Trotter slices, 10^5
/// shots, 50 steps.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub n_sites: usize,
    pub hopping: f64,
    pub onsite: f64,
    pub dt: f64,
    pub max_steps: usize,
    pub d_prep: usize,
    pub d_evol: usize,
    pub sweeps_prep: usize,
    pub sweeps_evol: usize,
    pub svd_cutoff: f64,
    pub trotter_slices: usize,
    /// None is exact-probability mode.
    pub shots: Option<u64>,
    pub p_step: f64,
    /// Early-stop threshold on |s_t|; None derives it from the shot budget.
    pub stop_threshold: Option<f64>,
    pub epsilon_init: f64,

    pub exact_prep: bool,
    pub exact_evolution: bool,

    pub aem: bool,
    pub aem_kind: VariantKind,
    /// Slice counts or sweep counts, depending on `aem_kind`.
    pub aem_variants: Vec<usize>,
    pub aem_cutoff: f64,
    pub aem_max_bond: usize,

    pub enhance: bool,
    pub enhance_depth_per_iter: usize,
    pub enhance_sweeps_per_iter: usize,
    pub enhance_max_iters: usize,

    pub seed: u64,
    pub out_dir: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            n_sites: 4,
            hopping: 1.0,
            onsite: 10.0,
            dt: 0.05,
            max_steps: 50,
            d_prep: 5,
            d_evol: 5,
            sweeps_prep: 1000,
            sweeps_evol: 10000,
            svd_cutoff: 1e-12,
            trotter_slices: 100,
            shots: Some(100_000),
            p_step: 0.0,
            stop_threshold: None,
            epsilon_init: 0.01,
            exact_prep: false,
            exact_evolution: false,
            aem: false,
            aem_kind: VariantKind::Slices,
            aem_variants: vec![1, 4, 100],
            aem_cutoff: 1e-8,
            aem_max_bond: 4096,
            enhance: false,
            enhance_depth_per_iter: 5,
            enhance_sweeps_per_iter: 1000,
            enhance_max_iters: 2,
            seed: 1,
            out_dir: "qpde_out".into(),
        }
    }
}

impl RunConfig {
    pub fn num_system_qubits(&self) -> usize {
        2 * self.n_sites
    }

    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        if self.n_sites < 1 || self.n_sites > 7 {
            bad.push("n_sites must be in 1..=7 (desk scale)");
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            bad.push("dt must be positive");
        }
        if self.max_steps < 4 {
            bad.push("max_steps must be at least 4");
        }
        if self.d_prep < 1 || self.d_evol < 1 {
            bad.push("circuit depths must be at least 1");
        }
        if !(0.0..1.0).contains(&self.p_step) {
            bad.push("p_step must be in [0, 1)");
        }
        if self.svd_cutoff < 0.0 || self.aem_cutoff < 0.0 {
            bad.push("cutoffs must be nonnegative");
        }
        if self.trotter_slices < 1 {
            bad.push("trotter_slices must be positive");
        }
        if self.aem && self.aem_variants.len() < 2 {
            bad.push("aem needs at least 2 variants");
        }
        if self.aem && self.aem_variants.len() > 4 {
            bad.push("aem supports at most 4 variants");
        }
        if self.enhance && self.enhance_depth_per_iter < 1 {
            bad.push("enhance_depth_per_iter must be at least 1");
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(QpdeError::InvalidConfig(bad.join("; ")))
        }
    }

    pub fn serialize(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "n_sites = {}", self.n_sites);
        let _ = writeln!(s, "hopping = {}", self.hopping);
        let _ = writeln!(s, "onsite = {}", self.onsite);
        let _ = writeln!(s, "dt = {}", self.dt);
        let _ = writeln!(s, "max_steps = {}", self.max_steps);
        let _ = writeln!(s, "d_prep = {}", self.d_prep);
        let _ = writeln!(s, "d_evol = {}", self.d_evol);
        let _ = writeln!(s, "sweeps_prep = {}", self.sweeps_prep);
        let _ = writeln!(s, "sweeps_evol = {}", self.sweeps_evol);
        let _ = writeln!(s, "svd_cutoff = {:e}", self.svd_cutoff);
        let _ = writeln!(s, "trotter_slices = {}", self.trotter_slices);
        let _ = writeln!(
            s,
            "shots = {}",
            self.shots.map(|v| v.to_string()).unwrap_or_else(|| "exact".into())
        );
        let _ = writeln!(s, "p_step = {}", self.p_step);
        let _ = writeln!(
            s,
            "stop_threshold = {}",
            self.stop_threshold.map(|v| format!("{v:e}")).unwrap_or_else(|| "auto".into())
        );
        let _ = writeln!(s, "epsilon_init = {}", self.epsilon_init);
        let _ = writeln!(s, "exact_prep = {}", self.exact_prep);
        let _ = writeln!(s, "exact_evolution = {}", self.exact_evolution);
        let _ = writeln!(s, "aem = {}", self.aem);
        let _ = writeln!(
            s,
            "aem_kind = {}",
            match self.aem_kind {
                VariantKind::Slices => "slices",
                VariantKind::Sweeps => "sweeps",
            }
        );
        let _ = writeln!(
            s,
            "aem_variants = {}",
            self.aem_variants.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
        );
        let _ = writeln!(s, "aem_cutoff = {:e}", self.aem_cutoff);
        let _ = writeln!(s, "aem_max_bond = {}", self.aem_max_bond);
        let _ = writeln!(s, "enhance = {}", self.enhance);
        let _ = writeln!(s, "enhance_depth_per_iter = {}", self.enhance_depth_per_iter);
        let _ = writeln!(s, "enhance_sweeps_per_iter = {}", self.enhance_sweeps_per_iter);
        let _ = writeln!(s, "enhance_max_iters = {}", self.enhance_max_iters);
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "out_dir = {}", self.out_dir);
        s
    }

    pub fn parse(text: &str) -> Result<RunConfig> {
        let mut map = BTreeMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                QpdeError::InvalidConfig(format!("line {}: expected key = value", lineno + 1))
            })?;
            map.insert(k.trim().to_string(), v.trim().to_string());
        }
        let mut cfg = RunConfig::default();
        cfg.apply_all(&map)?;
        Ok(cfg)
    }

    fn apply_all(&mut self, map: &BTreeMap<String, String>) -> Result<()> {
        for (k, v) in map {
            self.set(k, v)?;
        }
        Ok(())
    }

    /// Set one field from its textual form; unknown keys are errors.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
            v.parse().map_err(|_| {
                QpdeError::InvalidConfig(format!("bad value for {key}: {v}"))
            })
        }
        match key {
            "n_sites" => self.n_sites = num(key, value)?,
            "hopping" => self.hopping = num(key, value)?,
            "onsite" => self.onsite = num(key, value)?,
            "dt" => self.dt = num(key, value)?,
            "max_steps" => self.max_steps = num(key, value)?,
            "d_prep" => self.d_prep = num(key, value)?,
            "d_evol" => self.d_evol = num(key, value)?,
            "sweeps_prep" => self.sweeps_prep = num(key, value)?,
            "sweeps_evol" => self.sweeps_evol = num(key, value)?,
            "svd_cutoff" => self.svd_cutoff = num(key, value)?,
            "trotter_slices" => self.trotter_slices = num(key, value)?,
            "shots" => {
                self.shots = if value == "exact" { None } else { Some(num(key, value)?) }
            }
            "p_step" => self.p_step = num(key, value)?,
            "stop_threshold" => {
                self.stop_threshold =
                    if value == "auto" { None } else { Some(num(key, value)?) }
            }
            "epsilon_init" => self.epsilon_init = num(key, value)?,
            "exact_prep" => self.exact_prep = num(key, value)?,
            "exact_evolution" => self.exact_evolution = num(key, value)?,
            "aem" => self.aem = num(key, value)?,
            "aem_kind" => {
                self.aem_kind = match value {
                    "slices" => VariantKind::Slices,
                    "sweeps" => VariantKind::Sweeps,
                    _ => {
                        return Err(QpdeError::InvalidConfig(format!(
                            "aem_kind must be slices or sweeps, got {value}"
                        )))
                    }
                }
            }
            "aem_variants" => {
                self.aem_variants = value
                    .split(',')
                    .map(|v| num("aem_variants", v.trim()))
                    .collect::<Result<Vec<usize>>>()?
            }
            "aem_cutoff" => self.aem_cutoff = num(key, value)?,
            "aem_max_bond" => self.aem_max_bond = num(key, value)?,
            "enhance" => self.enhance = num(key, value)?,
            "enhance_depth_per_iter" => self.enhance_depth_per_iter = num(key, value)?,
            "enhance_sweeps_per_iter" => self.enhance_sweeps_per_iter = num(key, value)?,
            "enhance_max_iters" => self.enhance_max_iters = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            "out_dir" => self.out_dir = value.to_string(),
            _ => return Err(QpdeError::InvalidConfig(format!("unknown key: {key}"))),
        }
        Ok(())
    }

    /// Cache key for compressed circuits: every field that affects them.
    pub fn circuit_cache_key(&self, role: &str, sweeps: usize, variant: Option<usize>) -> String {
        let mut k = format!(
            "{role}_ns{}_t{}_u{}_dt{}_d{}_sw{}_cut{:e}_m{}_eps{}_seed{}",
            self.n_sites,
            self.hopping,
            self.onsite,
            self.dt,
            if role == "prep" { self.d_prep } else { self.d_evol },
            sweeps,
            self.svd_cutoff,
            self.trotter_slices,
            self.epsilon_init,
            self.seed,
        );
        if let Some(v) = variant {
            let _ = write!(k, "_var{v}");
        }
        if role == "prep" && self.enhance {
            let _ = write!(
                k,
                "_enh{}x{}i{}",
                self.enhance_depth_per_iter, self.enhance_sweeps_per_iter, self.enhance_max_iters
            );
        }
        k.replace(['.', '+'], "p")
    }
}

/// Named presets reproducing the study configurations.
pub fn preset(name: &str) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    match name {
        // exact eigenstate prep + m = 100 Trotter evolution; fast smoke run
        "exact_smoke" => {
            cfg.exact_prep = true;
            cfg.exact_evolution = true;
            cfg.shots = None;
            cfg.max_steps = 50;
            cfg.out_dir = "out_exact_smoke".into();
        }
        // gap-error traces at three step sizes (run once per dt)
        "fig_dt_study" => {
            cfg.shots = None;
            cfg.max_steps = 100;
            cfg.out_dir = "out_dt_study".into();
        }
        // with/without AEM at dt = 0.1 with sweep variants
        "fig_aem_sweeps" => {
            cfg.dt = 0.1;
            cfg.shots = None;
            cfg.aem = true;
            cfg.aem_kind = VariantKind::Sweeps;
            cfg.aem_variants = vec![1, 10, 10000];
            cfg.aem_cutoff = 1e-8;
            cfg.out_dir = "out_aem_sweeps".into();
        }
        // AEM cutoff robustness (run once per aem_cutoff)
        "fig_aem_cutoffs" => {
            cfg.dt = 0.1;
            cfg.shots = None;
            cfg.max_steps = 24;
            cfg.aem = true;
            cfg.aem_kind = VariantKind::Sweeps;
            cfg.aem_variants = vec![1, 10, 10000];
            cfg.aem_cutoff = 1e-12;
            cfg.out_dir = "out_aem_cutoffs".into();
        }
        _ => {
            return Err(QpdeError::InvalidConfig(format!(
                "unknown preset {name}; known: exact_smoke, fig_dt_study, fig_aem_sweeps, fig_aem_cutoffs"
            )))
        }
    }
    Ok(cfg)
}
