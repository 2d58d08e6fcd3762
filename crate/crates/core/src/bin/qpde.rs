//! CLI for the gap-estimation pipeline.
//!
//! Verbs stage the run: `build` (model summary), `compress` (circuits),
//! `simulate` (time series), `estimate` (signal processing), `run` (all of
//! it), `report` (plot-data files from a finished run). Flags mirror the
//! config keys; `--config` loads a file first and explicit flags override.
//!
//! Exit codes: 0 success, 2 invalid configuration, 3 resource limit.

use std::fs;
use std::io::BufReader;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use qpde_core::config::{preset, RunConfig};
use qpde_core::error::QpdeError;
use qpde_core::pipeline::{emit_plotdata, Pipeline};
use qpde_core::signal::read_series;
use qpde_core::spectral::estimate_gap;

#[derive(Parser)]
#[command(name = "qpde", about = "Tensor-network phase-difference gap estimation", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone, Default)]
struct ConfigArgs {
    /// Load a key = value config file before applying flags.
    #[arg(long)]
    config: Option<String>,
    /// Start from a named preset: exact_smoke, fig_dt_study, fig_aem_sweeps,
    /// fig_aem_cutoffs.
    #[arg(long)]
    preset: Option<String>,
    /// Override any config key, repeatable: --set dt=0.1 --set aem=true
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,

    #[arg(long)]
    n_sites: Option<usize>,
    #[arg(long)]
    hopping: Option<f64>,
    #[arg(long)]
    onsite: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    max_steps: Option<usize>,
    #[arg(long)]
    d_prep: Option<usize>,
    #[arg(long)]
    d_evol: Option<usize>,
    #[arg(long)]
    sweeps_prep: Option<usize>,
    #[arg(long)]
    sweeps_evol: Option<usize>,
    #[arg(long)]
    svd_cutoff: Option<f64>,
    #[arg(long)]
    trotter_slices: Option<usize>,
    /// Shot count, or "exact" for exact probabilities.
    #[arg(long)]
    shots: Option<String>,
    #[arg(long)]
    p_step: Option<f64>,
    #[arg(long)]
    stop_threshold: Option<f64>,
    #[arg(long)]
    epsilon_init: Option<f64>,
    #[arg(long)]
    exact_prep: Option<bool>,
    #[arg(long)]
    exact_evolution: Option<bool>,
    #[arg(long)]
    aem: Option<bool>,
    /// slices or sweeps
    #[arg(long)]
    aem_kind: Option<String>,
    /// Comma-separated slice or sweep counts.
    #[arg(long)]
    aem_variants: Option<String>,
    #[arg(long)]
    aem_cutoff: Option<f64>,
    #[arg(long)]
    aem_max_bond: Option<usize>,
    #[arg(long)]
    enhance: Option<bool>,
    #[arg(long)]
    enhance_depth_per_iter: Option<usize>,
    #[arg(long)]
    enhance_sweeps_per_iter: Option<usize>,
    #[arg(long)]
    enhance_max_iters: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out_dir: Option<String>,
}

impl ConfigArgs {
    fn build(&self) -> Result<RunConfig, QpdeError> {
        let mut cfg = match &self.preset {
            Some(name) => preset(name)?,
            None => RunConfig::default(),
        };
        if let Some(path) = &self.config {
            cfg = RunConfig::parse(&fs::read_to_string(path)?)?;
        }
        macro_rules! apply {
            ($field:ident) => {
                if let Some(v) = &self.$field {
                    cfg.set(stringify!($field), &v.to_string())?;
                }
            };
        }
        apply!(n_sites);
        apply!(hopping);
        apply!(onsite);
        apply!(dt);
        apply!(max_steps);
        apply!(d_prep);
        apply!(d_evol);
        apply!(sweeps_prep);
        apply!(sweeps_evol);
        apply!(svd_cutoff);
        apply!(trotter_slices);
        apply!(shots);
        apply!(p_step);
        apply!(stop_threshold);
        apply!(epsilon_init);
        apply!(exact_prep);
        apply!(exact_evolution);
        apply!(aem);
        apply!(aem_kind);
        apply!(aem_variants);
        apply!(aem_cutoff);
        apply!(aem_max_bond);
        apply!(enhance);
        apply!(enhance_depth_per_iter);
        apply!(enhance_sweeps_per_iter);
        apply!(enhance_max_iters);
        apply!(seed);
        apply!(out_dir);
        for kv in &self.sets {
            let (k, v) = kv.split_once('=').ok_or_else(|| {
                QpdeError::InvalidConfig(format!("--set expects KEY=VALUE, got {kv}"))
            })?;
            cfg.set(k.trim(), v.trim())?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Diagonalize the model and write the reference summary.
    Build {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long, short)]
        verbose: bool,
    },
    /// Optimize (or load cached) preparation and evolution circuits.
    Compress {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long, short)]
        verbose: bool,
    },
    /// Collect the time series with the configured circuits.
    Simulate {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long, short)]
        verbose: bool,
    },
    /// Estimate the gap from a series file.
    Estimate {
        /// Series file written by `simulate` or `run`.
        #[arg(long)]
        series: String,
    },
    /// Full pipeline: build, compress, simulate, mitigate, estimate, emit.
    Run {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long, short)]
        verbose: bool,
    },
    /// Regenerate plot-data files from a finished run directory.
    Report {
        #[arg(long)]
        dir: String,
    },
}

fn main() -> ExitCode {
    if let Ok(threads) = std::env::var("QPDE_THREADS") {
        if let Ok(n) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                QpdeError::InvalidConfig(_) => ExitCode::from(2),
                QpdeError::ResourceLimit(_) => ExitCode::from(3),
                _ => ExitCode::FAILURE,
            }
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), QpdeError> {
    match cli.cmd {
        Cmd::Build { config, verbose } => {
            let mut p = Pipeline::new(config.build()?)?;
            p.verbose = verbose;
            p.write_model_summary()?;
            let gap = p.reference_gap()?;
            println!("reference gap: {gap:.6}");
            Ok(())
        }
        Cmd::Compress { config, verbose } => {
            let mut p = Pipeline::new(config.build()?)?;
            p.verbose = verbose;
            p.build_prep()?;
            p.build_evol()?;
            p.write_sweep_reports()?;
            println!("circuits ready (cached for reuse)");
            Ok(())
        }
        Cmd::Simulate { config, verbose } => {
            let mut p = Pipeline::new(config.build()?)?;
            p.verbose = verbose;
            let (ts, _) = p.simulate()?;
            let out = std::path::Path::new(&p.cfg.out_dir).join("series.txt");
            fs::create_dir_all(&p.cfg.out_dir)?;
            let f = std::io::BufWriter::new(fs::File::create(&out)?);
            qpde_core::signal::write_series(&ts, f)?;
            println!("{} samples -> {}", ts.samples.len(), out.display());
            Ok(())
        }
        Cmd::Estimate { series } => {
            let ts = read_series(BufReader::new(fs::File::open(&series)?))?;
            let (gap, est) = estimate_gap(&ts)?;
            println!("gap_estimate {gap:.9}");
            println!("alpha {:.6e}", est.alpha);
            println!("residual {:.6e}", est.residual);
            for m in est.modes.iter().take(5) {
                println!("mode amplitude {:.6} frequency {:.9}", m.amplitude, m.frequency);
            }
            Ok(())
        }
        Cmd::Run { config, verbose } => {
            let mut p = Pipeline::new(config.build()?)?;
            p.verbose = verbose;
            let report = p.run()?;
            println!("reference gap  {:.9}", report.gap_reference);
            println!("estimated gap  {:.9}", report.gap_estimate);
            println!(
                "gap error      {:.3e}",
                report.gap_estimate - report.gap_reference
            );
            if let Some(raw) = report.gap_estimate_raw {
                println!("unmitigated    {:.9} (error {:.3e})", raw, raw - report.gap_reference);
            }
            if let Some(o) = report.prep_overlap {
                println!("prep overlap   {o:.6}");
            }
            if let Some(fi) = report.evol_fidelity {
                println!("evol fidelity  {fi:.6}");
            }
            println!("outputs in {}", p.cfg.out_dir);
            Ok(())
        }
        Cmd::Report { dir } => {
            let files = emit_plotdata(&dir)?;
            for f in files {
                println!("{}", f.display());
            }
            Ok(())
        }
    }
}
