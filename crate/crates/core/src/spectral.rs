//! Mode extraction from the signal: matrix-pencil initial guess, damped
//! least-squares refinement, and the dominant-mode gap readout.
//!
//! The pencil builds shifted Hankel matrices A0, A1 from the samples and
//! solves the generalized eigenproblem `A1 x = lambda A0 x` on the dominant
//! singular subspace of A0. Each eigenvalue maps to a frequency
//! `delta = -arg(lambda)/dt` and a shared decay `alpha = -ln|lambda|/dt`.
//! Amplitudes come from a real-valued linear least-squares fit, and the
//! refinement polishes all retained `(P_J, delta_J)` plus the global alpha
//! under a monotone Levenberg-style damping loop.

use num_complex::Complex64;

use crate::error::{QpdeError, Result};
use crate::linalg::{self, CMatrix};
use crate::signal::TimeSeries;

type C64 = Complex64;

/// One retained mode: nonnegative amplitude and real frequency.
#[derive(Clone, Copy, Debug)]
pub struct Mode {
    pub amplitude: f64,
    pub frequency: f64,
}

#[derive(Clone, Debug)]
pub struct SpectralEstimate {
    /// Modes sorted by descending amplitude.
    pub modes: Vec<Mode>,
    /// Shared decay rate, clamped nonnegative.
    pub alpha: f64,
    /// Sum of squared fit errors over the samples.
    pub residual: f64,
    /// Set when the refinement hit its iteration cap without converging.
    pub refinement_capped: bool,
}

impl SpectralEstimate {
    /// Mode with the largest amplitude; ties within 1 % go to the smaller
    /// absolute frequency.
    pub fn dominant(&self) -> Option<&Mode> {
        let best = self
            .modes
            .iter()
            .max_by(|a, b| a.amplitude.total_cmp(&b.amplitude))?;
        self.modes
            .iter()
            .filter(|m| m.amplitude >= 0.99 * best.amplitude)
            .min_by(|a, b| a.frequency.abs().total_cmp(&b.frequency.abs()))
            .or(Some(best))
    }
}

/// Hankel pencil dimensions and rank controls.
#[derive(Clone, Copy, Debug)]
pub struct PencilConfig {
    /// Hankel column count; `samples/2` by default.
    pub columns: usize,
    /// Hankel row count plus one (the paper's `m`); `samples - columns + 1`.
    pub rows: usize,
    /// Relative singular-value threshold that sets the retained rank.
    pub rel_threshold: f64,
    /// Hard cap on the retained rank.
    pub max_modes: usize,
}

impl PencilConfig {
    /// Default split `l = n/2`, `m = n - l + 1`, which consumes every sample.
    pub fn for_samples(n: usize, rel_threshold: f64) -> Self {
        let columns = (n / 2).max(1);
        PencilConfig { columns, rows: n - columns + 1, rel_threshold, max_modes: 12 }
    }

    /// Threshold adapted to the shot budget: singular values produced by
    /// measurement noise scale like `sigma_s sqrt(l)`.
    pub fn for_series(ts: &TimeSeries) -> Self {
        let n = ts.samples.len();
        let rel = match ts.meta.shots {
            None => 1e-10,
            Some(shots) => {
                let denom = 4.0 * ts.a0sq * (1.0 - ts.a0sq);
                let sigma = 2.0 / (shots as f64).sqrt() / denom;
                // conservative factor 3 over the expected noise floor
                3.0 * sigma * (n as f64 / 2.0).sqrt()
            }
        };
        PencilConfig::for_samples(n, rel)
    }
}

/// Matrix-pencil estimate of the damped-exponential modes of a series.
pub fn pencil_initial_guess(ts: &TimeSeries, cfg: &PencilConfig) -> Result<SpectralEstimate> {
    let s = ts.values();
    let n = s.len();
    let l = cfg.columns;
    let m = cfg.rows;
    if l == 0 || m < 2 || l + m - 1 > n {
        return Err(QpdeError::InsufficientData(format!(
            "pencil needs l + m - 1 <= samples, got l={l} m={m} n={n}"
        )));
    }
    let rows = m - 1;
    let mut a0 = CMatrix::zeros(rows, l);
    let mut a1 = CMatrix::zeros(rows, l);
    for i in 0..rows {
        for j in 0..l {
            a0.set(i, j, s[i + j]);
            a1.set(i, j, s[i + j + 1]);
        }
    }

    let (u, sv, vdag) = linalg::svd(&a0)?;
    if sv.is_empty() || sv[0] <= 0.0 {
        return Err(QpdeError::NoSignal("Hankel matrix is zero".into()));
    }
    let q = sv
        .iter()
        .filter(|&&x| x / sv[0] > cfg.rel_threshold)
        .count()
        .clamp(1, cfg.max_modes.min(sv.len()));

    // reduced pencil: M = S_q^{-1} U_q^dag A1 V_q
    let mut uq_dag = CMatrix::zeros(q, rows);
    for i in 0..q {
        for j in 0..rows {
            uq_dag.set(i, j, u.at(j, i).conj());
        }
    }
    let mut vq = CMatrix::zeros(l, q);
    for i in 0..l {
        for j in 0..q {
            vq.set(i, j, vdag.at(j, i).conj());
        }
    }
    let mut red = linalg::matmul(&linalg::matmul(&uq_dag, &a1), &vq);
    for i in 0..q {
        for j in 0..q {
            let v = red.at(i, j) / sv[i];
            red.set(i, j, v);
        }
    }
    let lambdas = linalg::eigvals(&red)?;

    // shared decay: amplitude-weighted after the per-mode map; the model has
    // one alpha, so average the per-eigenvalue decays of retained modes
    let deltas: Vec<f64> = lambdas.iter().map(|lam| -lam.arg() / ts.dt).collect();
    let decays: Vec<f64> = lambdas
        .iter()
        .map(|lam| if lam.norm() > 0.0 { -lam.norm().ln() / ts.dt } else { 0.0 })
        .collect();

    // real nonnegative amplitudes by linear least squares on Re/Im stacks
    let amps = fit_amplitudes(&s, &lambdas)?;
    let mut weighted = 0.0;
    let mut total = 0.0;
    for (a, d) in amps.iter().zip(&decays) {
        weighted += a * d;
        total += a;
    }
    let alpha = if total > 0.0 { (weighted / total).max(0.0) } else { 0.0 };

    let mut modes: Vec<Mode> = amps
        .iter()
        .zip(&deltas)
        .map(|(&amplitude, &frequency)| Mode { amplitude: amplitude.max(0.0), frequency })
        .collect();
    modes.sort_by(|a, b| b.amplitude.total_cmp(&a.amplitude));
    let residual = model_residual(&s, ts.dt, &modes, alpha);
    Ok(SpectralEstimate { modes, alpha, residual, refinement_capped: false })
}

/// Least-squares real amplitudes for fixed eigenvalues.
fn fit_amplitudes(s: &[C64], lambdas: &[C64]) -> Result<Vec<f64>> {
    let n = s.len();
    let q = lambdas.len();
    // normal equations on the stacked real system
    let mut cols: Vec<Vec<C64>> = Vec::with_capacity(q);
    for lam in lambdas {
        let mut col = Vec::with_capacity(n);
        let mut p = *lam;
        for _ in 0..n {
            col.push(p);
            p *= lam;
        }
        cols.push(col);
    }
    let mut ata = vec![vec![0.0; q]; q];
    let mut atb = vec![0.0; q];
    for i in 0..q {
        for j in 0..q {
            ata[i][j] = cols[i]
                .iter()
                .zip(&cols[j])
                .map(|(a, b)| a.re * b.re + a.im * b.im)
                .sum();
        }
        atb[i] = cols[i].iter().zip(s).map(|(a, b)| a.re * b.re + a.im * b.im).sum();
        ata[i][i] += 1e-14;
    }
    linalg::solve_real(&ata, &atb)
        .ok_or_else(|| QpdeError::NoSignal("amplitude fit is singular".into()))
}

fn model_value(dt: f64, modes: &[Mode], alpha: f64, r: usize) -> C64 {
    let t = r as f64 * dt;
    let mut v = C64::new(0.0, 0.0);
    for m in modes {
        let ph = -m.frequency * t;
        v += m.amplitude * (-alpha * t).exp() * C64::new(ph.cos(), ph.sin());
    }
    v
}

fn model_residual(s: &[C64], dt: f64, modes: &[Mode], alpha: f64) -> f64 {
    s.iter()
        .enumerate()
        .map(|(i, v)| (v - model_value(dt, modes, alpha, i + 1)).norm_sqr())
        .sum()
}

const REFINE_MAX_ITERS: usize = 500;
const REFINE_GRAD_TOL: f64 = 1e-12;

/// Joint nonlinear refinement of all retained `(P_J, delta_J)` and the shared
/// alpha by damped least squares. The residual never increases; if the
/// iteration cap is hit the guess comes back flagged.
pub fn refine_fit(ts: &TimeSeries, guess: &SpectralEstimate) -> Result<SpectralEstimate> {
    if guess.modes.is_empty() {
        return Err(QpdeError::NoSignal("refine_fit on an empty mode list".into()));
    }
    let s = ts.values();
    let dt = ts.dt;
    let q = guess.modes.len();
    let np = 2 * q + 1;

    let mut modes = guess.modes.clone();
    let mut alpha = guess.alpha;
    let mut residual = model_residual(&s, dt, &modes, alpha);
    let mut lambda = 1e-3;
    let mut converged = false;

    for _ in 0..REFINE_MAX_ITERS {
        // residuals and Jacobian (rows: Re then Im per sample)
        let mut jtj = vec![vec![0.0; np]; np];
        let mut jtr = vec![0.0; np];
        for (i, sv) in s.iter().enumerate() {
            let r_step = i + 1;
            let t = r_step as f64 * dt;
            let env = (-alpha * t).exp();
            let mut model = C64::new(0.0, 0.0);
            let mut grads: Vec<C64> = Vec::with_capacity(np);
            for m in &modes {
                let ph = -m.frequency * t;
                let e = C64::new(ph.cos(), ph.sin()) * env;
                model += m.amplitude * e;
                grads.push(e); // d/dP
            }
            for m in &modes {
                let ph = -m.frequency * t;
                let e = C64::new(ph.cos(), ph.sin()) * env;
                grads.push(m.amplitude * e * C64::new(0.0, -t)); // d/ddelta
            }
            grads.push(
                modes
                    .iter()
                    .map(|m| {
                        let ph = -m.frequency * t;
                        m.amplitude * C64::new(ph.cos(), ph.sin()) * env * (-t)
                    })
                    .sum(),
            ); // d/dalpha
            let diff = sv - model;
            for a in 0..np {
                jtr[a] += grads[a].re * diff.re + grads[a].im * diff.im;
                for b in a..np {
                    let v = grads[a].re * grads[b].re + grads[a].im * grads[b].im;
                    jtj[a][b] += v;
                }
            }
        }
        for a in 0..np {
            for b in 0..a {
                jtj[a][b] = jtj[b][a];
            }
        }
        let gnorm = jtr.iter().map(|x| x * x).sum::<f64>().sqrt();
        if gnorm < REFINE_GRAD_TOL {
            converged = true;
            break;
        }

        // damped step, retried with more damping until the residual drops
        let mut accepted = false;
        for _ in 0..40 {
            let mut a = jtj.clone();
            for d in 0..np {
                a[d][d] += lambda * (jtj[d][d].max(1e-12));
            }
            if let Some(step) = linalg::solve_real(&a, &jtr) {
                let mut cand = modes.clone();
                for (j, m) in cand.iter_mut().enumerate() {
                    m.amplitude = (m.amplitude + step[j]).max(0.0);
                    m.frequency += step[q + j];
                }
                let cand_alpha = (alpha + step[np - 1]).max(0.0);
                let cand_res = model_residual(&s, dt, &cand, cand_alpha);
                if cand_res <= residual {
                    let improvement = residual - cand_res;
                    modes = cand;
                    alpha = cand_alpha;
                    residual = cand_res;
                    lambda = (lambda / 3.0).max(1e-14);
                    accepted = true;
                    if improvement < 1e-16 * (1.0 + residual) {
                        converged = true;
                    }
                    break;
                }
            }
            lambda *= 4.0;
            if lambda > 1e12 {
                break;
            }
        }
        if !accepted {
            converged = true; // damping exhausted: at a local minimum
            break;
        }
        if converged {
            break;
        }
    }

    modes.sort_by(|a, b| b.amplitude.total_cmp(&a.amplitude));
    Ok(SpectralEstimate { modes, alpha, residual, refinement_capped: !converged })
}

/// Full readout: pencil guess, refinement, dominant-mode frequency.
pub fn estimate_gap(ts: &TimeSeries) -> Result<(f64, SpectralEstimate)> {
    let cfg = PencilConfig::for_series(ts);
    let guess = pencil_initial_guess(ts, &cfg)?;
    let refined = refine_fit(ts, &guess)?;
    let dominant = refined
        .dominant()
        .ok_or_else(|| QpdeError::NoSignal("no mode survived estimation".into()))?;
    Ok((dominant.frequency, refined.clone()))
}
