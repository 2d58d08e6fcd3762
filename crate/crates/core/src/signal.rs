//! Time-series assembly from the four phase-setting probabilities.
//!
//! `s_t = [m(0) - m(pi) - i (m(pi/2) - m(3pi/2))] / (4 |a0|^2 (1 - |a0|^2))`
//! is the interference signal whose mode frequencies are the eigenphase
//! differences of the evolution step.

use std::io::{BufRead, Write};

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::error::{QpdeError, Result};
use crate::sim::{sample_probability, ExperimentRun, NoiseSpec, THETAS};

type C64 = Complex64;

/// Why a series run ended.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopReason {
    MaxSteps,
    /// `|s_t|` stayed below threshold for the full window ending here.
    SignalLost { at_step: usize },
}

#[derive(Clone, Debug)]
pub struct SeriesMeta {
    pub shots: Option<u64>,
    pub p_step: f64,
    pub stop_reason: StopReason,
}

/// Ordered complex samples `(step r, s_{r dt})` with the branch weight used
/// to normalize them.
#[derive(Clone, Debug)]
pub struct TimeSeries {
    pub dt: f64,
    pub samples: Vec<(usize, C64)>,
    pub a0sq: f64,
    pub meta: SeriesMeta,
}

impl TimeSeries {
    pub fn values(&self) -> Vec<C64> {
        self.samples.iter().map(|&(_, s)| s).collect()
    }

    pub fn truncated(&self, steps: usize) -> TimeSeries {
        TimeSeries {
            dt: self.dt,
            samples: self.samples.iter().take(steps).cloned().collect(),
            a0sq: self.a0sq,
            meta: self.meta.clone(),
        }
    }
}

/// One measurement record appended to the run log.
#[derive(Clone, Copy, Debug)]
pub struct MeasurementRecord {
    pub step: usize,
    pub theta: f64,
    pub shots: u64,
    pub count: u64,
}

/// Combine the four probabilities into the complex signal value.
///
/// Errors when the branch weight is degenerate (no interference term).
pub fn combine_signal(m0: f64, mhalf: f64, mpi: f64, m3half: f64, a0sq: f64) -> Result<C64> {
    if a0sq <= 0.0 || a0sq >= 1.0 {
        return Err(QpdeError::DegenerateBranch(a0sq));
    }
    let denom = 4.0 * a0sq * (1.0 - a0sq);
    Ok(C64::new(m0 - mpi, -(mhalf - m3half)) / denom)
}

/// Window length of consecutive sub-threshold samples that stops collection.
pub const STOP_WINDOW: usize = 3;

/// Default stop threshold given a shot budget.
pub fn default_stop_threshold(shots: Option<u64>) -> f64 {
    match shots {
        Some(s) => 4.0 / (s as f64).sqrt(),
        None => 0.0,
    }
}

/// Run steps `1..=max_steps`, four phase settings each, stopping early after
/// [`STOP_WINDOW`] consecutive samples with `|s_t| < stop_threshold`.
///
/// Measurement records (exact or sampled counts) go to `log` when provided.
pub fn collect_series(
    run: &mut ExperimentRun,
    noise: &NoiseSpec,
    max_steps: usize,
    stop_threshold: f64,
    mut log: Option<&mut Vec<MeasurementRecord>>,
) -> Result<TimeSeries> {
    let a0sq = run.a0sq();
    let mut samples = Vec::with_capacity(max_steps);
    let mut below = 0usize;
    let mut stop_reason = StopReason::MaxSteps;
    let mut rng = ChaCha12Rng::seed_from_u64(noise.seed);
    let dim = 1u64 << run.num_qubits();
    for r in 1..=max_steps {
        let exact = run.step();
        let p = noise.p_dep(r);
        let mut ms = [0.0; 4];
        for (i, m) in exact.iter().enumerate() {
            let noisy = (1.0 - p) * m + p / dim as f64;
            ms[i] = match noise.shots {
                None => noisy,
                Some(shots) => {
                    let freq = sample_probability(noisy, shots, &mut rng);
                    if let Some(log) = log.as_deref_mut() {
                        log.push(MeasurementRecord {
                            step: r,
                            theta: THETAS[i],
                            shots,
                            count: (freq * shots as f64).round() as u64,
                        });
                    }
                    freq
                }
            };
        }
        let s = combine_signal(ms[0], ms[1], ms[2], ms[3], a0sq)?;
        samples.push((r, s));
        if s.norm() < stop_threshold {
            below += 1;
            if below >= STOP_WINDOW {
                stop_reason = StopReason::SignalLost { at_step: r };
                break;
            }
        } else {
            below = 0;
        }
    }
    Ok(TimeSeries {
        dt: 0.0, // caller stamps dt; the run does not know it
        samples,
        a0sq,
        meta: SeriesMeta { shots: noise.shots, p_step: noise.p_step, stop_reason },
    })
}

/// Columnar text export: `step  t  Re(s)  Im(s)` with metadata headers.
pub fn write_series<W: Write>(ts: &TimeSeries, mut w: W) -> Result<()> {
    writeln!(w, "# time series v1")?;
    writeln!(w, "# dt {}", ts.dt)?;
    writeln!(w, "# a0sq {:.17e}", ts.a0sq)?;
    writeln!(
        w,
        "# shots {}",
        ts.meta.shots.map(|s| s.to_string()).unwrap_or_else(|| "exact".into())
    )?;
    writeln!(w, "# p_step {}", ts.meta.p_step)?;
    let stop = match ts.meta.stop_reason {
        StopReason::MaxSteps => "max_steps".to_string(),
        StopReason::SignalLost { at_step } => format!("signal_lost {at_step}"),
    };
    writeln!(w, "# stop {stop}")?;
    writeln!(w, "# step t re_s im_s")?;
    for &(r, s) in &ts.samples {
        writeln!(w, "{} {:.17e} {:.17e} {:.17e}", r, r as f64 * ts.dt, s.re, s.im)?;
    }
    Ok(())
}

pub fn read_series<R: BufRead>(r: R) -> Result<TimeSeries> {
    let mut dt = 0.0;
    let mut a0sq = 0.5;
    let mut shots = None;
    let mut p_step = 0.0;
    let mut stop_reason = StopReason::MaxSteps;
    let mut samples = Vec::new();
    for line in r.lines() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            let mut it = rest.split_whitespace();
            match it.next() {
                Some("dt") => dt = parse_f64(it.next())?,
                Some("a0sq") => a0sq = parse_f64(it.next())?,
                Some("shots") => {
                    let v = it.next().unwrap_or("exact");
                    shots = if v == "exact" { None } else { Some(v.parse().map_err(bad_num)?) };
                }
                Some("p_step") => p_step = parse_f64(it.next())?,
                Some("stop") => {
                    stop_reason = match it.next() {
                        Some("signal_lost") => StopReason::SignalLost {
                            at_step: it.next().unwrap_or("0").parse().map_err(bad_num)?,
                        },
                        _ => StopReason::MaxSteps,
                    }
                }
                _ => {}
            }
            continue;
        }
        let mut it = line.split_whitespace();
        let step: usize = it.next().ok_or_else(|| bad_line(line))?.parse().map_err(bad_num)?;
        let _t = parse_f64(it.next())?;
        let re = parse_f64(it.next())?;
        let im = parse_f64(it.next())?;
        samples.push((step, C64::new(re, im)));
    }
    Ok(TimeSeries { dt, samples, a0sq, meta: SeriesMeta { shots, p_step, stop_reason } })
}

fn parse_f64(v: Option<&str>) -> Result<f64> {
    v.ok_or_else(|| QpdeError::InvalidConfig("missing numeric field".into()))?
        .parse()
        .map_err(bad_num)
}

fn bad_num<E: std::fmt::Display>(e: E) -> QpdeError {
    QpdeError::InvalidConfig(format!("bad number: {e}"))
}

fn bad_line(l: &str) -> QpdeError {
    QpdeError::InvalidConfig(format!("bad series line: {l}"))
}

/// Synthetic damped-exponential series for tests and calibration:
/// `s_r = sum_J P_J exp(-(i delta_J + alpha) r dt)`.
pub fn synthetic_series(
    modes: &[(f64, f64)],
    alpha: f64,
    dt: f64,
    steps: usize,
    noise: f64,
    seed: u64,
) -> TimeSeries {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let samples = (1..=steps)
        .map(|r| {
            let t = r as f64 * dt;
            let mut s = C64::new(0.0, 0.0);
            for &(p, delta) in modes {
                let ph = -delta * t;
                s += p * (-alpha * t).exp() * C64::new(ph.cos(), ph.sin());
            }
            if noise > 0.0 {
                s += C64::new(
                    noise * (rng.gen::<f64>() - 0.5) * 2.0,
                    noise * (rng.gen::<f64>() - 0.5) * 2.0,
                );
            }
            (r, s)
        })
        .collect();
    TimeSeries {
        dt,
        samples,
        a0sq: 0.5,
        meta: SeriesMeta { shots: None, p_step: 0.0, stop_reason: StopReason::MaxSteps },
    }
}
