// Copyright 2026 Spinorbit Contributors
// SPDX-License-Identifier: Apache-2.0

//! Maximum-likelihood state reconstruction.
//!
//! The estimate is parameterized as `ρ = T†T / tr(T†T)` with `T` lower
//! triangular (real diagonal), so every iterate is a valid density matrix.
//! The log-likelihood is maximized with L-BFGS from a linear-inversion start
//! plus seeded random restarts; the best converged run wins.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::linalg::{c, cholesky_psd, project_density, CMatrix};
use super::settings::{measurements, LikelihoodModel, Measurement, TomoSettings};
use super::DensityMatrix;
use crate::error::{Error, Result};
use crate::fock::C64;
use crate::measurement::CountRecord;

const LBFGS_MEMORY: usize = 8;
const ARMIJO: f64 = 1e-4;

/// Result of a reconstruction.
#[derive(Debug, Clone)]
pub struct MleOutcome {
    pub rho: DensityMatrix,
    /// Log-likelihood per detected event (constant terms dropped).
    pub log_likelihood: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Starts attempted, including the linear-inversion start.
    pub starts: usize,
}

/// Precomputed data for one reconstruction.
struct Problem {
    dim: usize,
    projectors: Vec<CMatrix>,
    /// Counts divided by the total over all records.
    weights: Vec<f64>,
    /// Shots divided by the same total (Poisson only).
    exposures: Vec<f64>,
    /// Measurement indices grouped by setting.
    groups: Vec<Vec<usize>>,
    model: LikelihoodModel,
}

impl Problem {
    fn new(meas: &[Measurement], model: LikelihoodModel) -> Result<Self> {
        let total: f64 = meas.iter().map(|m| m.counts).sum();
        if total <= 0.0 {
            return Err(Error::Data("all counts are zero".into()));
        }
        let mut by_setting: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
        for (k, m) in meas.iter().enumerate() {
            by_setting.entry(&m.setting).or_default().push(k);
        }
        Ok(Problem {
            dim: meas[0].projector.nrows(),
            projectors: meas.iter().map(|m| m.projector.clone()).collect(),
            weights: meas.iter().map(|m| m.counts / total).collect(),
            exposures: meas.iter().map(|m| m.shots / total).collect(),
            groups: by_setting.into_values().collect(),
            model,
        })
    }

    fn probability(&self, rho: &CMatrix, k: usize) -> f64 {
        let p = &self.projectors[k];
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..self.dim {
            for j in 0..self.dim {
                acc += rho[(i, j)] * p[(j, i)];
            }
        }
        acc.re
    }

    /// Log-likelihood and its derivative operator `G = ∂L/∂ρ`.
    fn evaluate(&self, rho: &CMatrix) -> (f64, CMatrix) {
        let d = self.dim;
        let mut grad = CMatrix::zeros(d, d);
        let mut value = 0.0;
        let probs: Vec<f64> = (0..self.projectors.len())
            .map(|k| self.probability(rho, k))
            .collect();
        match self.model {
            LikelihoodModel::Multinomial => {
                for group in &self.groups {
                    let w_s: f64 = group.iter().map(|&k| self.weights[k]).sum();
                    if w_s == 0.0 {
                        continue;
                    }
                    let p_s: f64 = group.iter().map(|&k| probs[k]).sum();
                    if p_s <= 0.0 {
                        return (f64::NEG_INFINITY, grad);
                    }
                    value -= w_s * p_s.ln();
                    for &k in group {
                        let w = self.weights[k];
                        grad -= &self.projectors[k] * c(w_s / p_s, 0.0);
                        if w == 0.0 {
                            continue;
                        }
                        if probs[k] <= 0.0 {
                            return (f64::NEG_INFINITY, grad);
                        }
                        value += w * probs[k].ln();
                        grad += &self.projectors[k] * c(w / probs[k], 0.0);
                    }
                }
            }
            LikelihoodModel::Poisson => {
                for (k, &p) in probs.iter().enumerate() {
                    let w = self.weights[k];
                    let n = self.exposures[k];
                    value -= n * p;
                    grad -= &self.projectors[k] * c(n, 0.0);
                    if w == 0.0 {
                        continue;
                    }
                    if p <= 0.0 {
                        return (f64::NEG_INFINITY, grad);
                    }
                    value += w * p.ln();
                    grad += &self.projectors[k] * c(w / p, 0.0);
                }
            }
        }
        (value, grad)
    }

    fn n_params(&self) -> usize {
        self.dim * self.dim
    }

    fn t_from(&self, x: &DVector<f64>) -> CMatrix {
        let d = self.dim;
        let mut t = CMatrix::zeros(d, d);
        for i in 0..d {
            t[(i, i)] = c(x[i], 0.0);
        }
        let mut k = d;
        for i in 0..d {
            for j in 0..i {
                t[(i, j)] = c(x[k], x[k + 1]);
                k += 2;
            }
        }
        t
    }

    fn x_from(&self, t: &CMatrix) -> DVector<f64> {
        let d = self.dim;
        let mut x = DVector::zeros(self.n_params());
        for i in 0..d {
            x[i] = t[(i, i)].re;
        }
        let mut k = d;
        for i in 0..d {
            for j in 0..i {
                x[k] = t[(i, j)].re;
                x[k + 1] = t[(i, j)].im;
                k += 2;
            }
        }
        x
    }

    fn rho_from_t(t: &CMatrix) -> Option<CMatrix> {
        let a = t.adjoint() * t;
        let tr = a.trace().re;
        (tr > 0.0 && tr.is_finite()).then(|| a / c(tr, 0.0))
    }

    /// Negative log-likelihood and gradient in parameter space.
    fn objective(&self, x: &DVector<f64>) -> (f64, DVector<f64>) {
        let t = self.t_from(x);
        let a = t.adjoint() * &t;
        let tr = a.trace().re;
        let mut g = DVector::zeros(self.n_params());
        if tr <= 0.0 || tr.is_nan() {
            return (f64::INFINITY, g);
        }
        let rho = &a / c(tr, 0.0);
        let (value, op) = self.evaluate(&rho);
        if !value.is_finite() {
            return (f64::INFINITY, g);
        }
        let d = self.dim;
        let shift = (&op * &rho).trace();
        let centred = op - CMatrix::identity(d, d) * shift;
        let m = centred * t.adjoint();
        let scale = 2.0 / tr;
        for i in 0..d {
            g[i] = -scale * m[(i, i)].re;
        }
        let mut k = d;
        for i in 0..d {
            for j in 0..i {
                g[k] = -scale * m[(j, i)].re;
                g[k + 1] = scale * m[(j, i)].im;
                k += 2;
            }
        }
        (-value, g)
    }

    fn start_from_rho(&self, rho: &CMatrix) -> DVector<f64> {
        // T lower triangular with T†T = ρ: T = P · chol(PρP)† · P.
        let d = self.dim;
        let p = CMatrix::from_fn(d, d, |i, j| {
            if i + j == d - 1 {
                c(1.0, 0.0)
            } else {
                c(0.0, 0.0)
            }
        });
        let l = cholesky_psd(&(&p * rho * &p));
        self.x_from(&(&p * l.adjoint() * &p))
    }

    /// Least-squares linear inversion on per-setting frequencies.
    fn linear_inversion(&self) -> CMatrix {
        let d = self.dim;
        let mut freqs = vec![0.0; self.projectors.len()];
        for group in &self.groups {
            let w_s: f64 = group.iter().map(|&k| self.weights[k]).sum();
            for &k in group {
                freqs[k] = if w_s > 0.0 {
                    self.weights[k] / w_s
                } else {
                    0.0
                };
            }
        }
        let a = DMatrix::from_fn(self.projectors.len(), d * d, |k, idx| {
            let (i, j) = (idx / d, idx % d);
            self.projectors[k][(j, i)]
        });
        let b = DVector::from_iterator(freqs.len(), freqs.iter().map(|&f| c(f, 0.0)));
        let svd = a.svd(true, true);
        let solved = svd
            .solve(&b, 1e-12)
            .unwrap_or_else(|_| DVector::from_element(d * d, c(0.0, 0.0)));
        let rho = CMatrix::from_fn(d, d, |i, j| solved[i * d + j]);
        project_density(&rho)
    }
}

struct Run {
    x: DVector<f64>,
    value: f64,
    iterations: usize,
    converged: bool,
}

/// Minimizes the objective with L-BFGS and Armijo backtracking.
fn lbfgs(problem: &Problem, x0: DVector<f64>, settings: &TomoSettings) -> Run {
    let (mut f, mut g) = problem.objective(&x0);
    let mut x = x0;
    if !f.is_finite() {
        return Run {
            x,
            value: f,
            iterations: 0,
            converged: false,
        };
    }
    let mut s_hist: Vec<DVector<f64>> = Vec::new();
    let mut y_hist: Vec<DVector<f64>> = Vec::new();
    let mut quiet = 0;
    for iter in 0..settings.max_iterations {
        if g.amax() < 1e-14 {
            return Run {
                x,
                value: f,
                iterations: iter,
                converged: true,
            };
        }
        // Two-loop recursion.
        let mut q = g.clone();
        let mut alphas = Vec::with_capacity(s_hist.len());
        for (s, y) in s_hist.iter().zip(&y_hist).rev() {
            let rho = 1.0 / y.dot(s);
            let a = rho * s.dot(&q);
            q -= y * a;
            alphas.push((a, rho));
        }
        let gamma = match (s_hist.last(), y_hist.last()) {
            (Some(s), Some(y)) => s.dot(y) / y.dot(y),
            _ => 1.0 / g.norm().max(1.0),
        };
        let mut r = q * gamma;
        for ((s, y), (a, rho)) in s_hist.iter().zip(&y_hist).zip(alphas.into_iter().rev()) {
            let b = rho * y.dot(&r);
            r += s * (a - b);
        }
        let mut dir = -r;
        let mut slope = g.dot(&dir);
        if slope >= 0.0 {
            s_hist.clear();
            y_hist.clear();
            dir = -g.clone() / g.norm().max(1.0);
            slope = g.dot(&dir);
        }
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let candidate = &x + &dir * step;
            let (fc, gc) = problem.objective(&candidate);
            if fc.is_finite() && fc <= f + ARMIJO * step * slope {
                accepted = Some((candidate, fc, gc));
                break;
            }
            step *= 0.5;
        }
        let Some((x_new, f_new, g_new)) = accepted else {
            if s_hist.is_empty() {
                // No descent possible even along the gradient: stationary to
                // machine precision.
                return Run {
                    x,
                    value: f,
                    iterations: iter,
                    converged: true,
                };
            }
            s_hist.clear();
            y_hist.clear();
            continue;
        };
        let s = &x_new - &x;
        let y = &g_new - &g;
        if s.dot(&y) > 1e-16 * s.norm() * y.norm() {
            if s_hist.len() == LBFGS_MEMORY {
                s_hist.remove(0);
                y_hist.remove(0);
            }
            s_hist.push(s);
            y_hist.push(y);
        }
        let improvement = f - f_new;
        x = x_new;
        f = f_new;
        g = g_new;
        if improvement < settings.tolerance {
            quiet += 1;
            if quiet >= 3 {
                return Run {
                    x,
                    value: f,
                    iterations: iter + 1,
                    converged: true,
                };
            }
        } else {
            quiet = 0;
        }
    }
    Run {
        x,
        value: f,
        iterations: settings.max_iterations,
        converged: false,
    }
}

/// Log-likelihood of `rho` for the given records (per detected event).
pub fn log_likelihood(
    rho: &DensityMatrix,
    records: &[CountRecord],
    settings: &TomoSettings,
) -> Result<f64> {
    let meas = measurements(records, settings.pol_encoding)?;
    let problem = Problem::new(&meas, settings.likelihood)?;
    if problem.dim != rho.dim() {
        return Err(Error::Domain("dimension mismatch".into()));
    }
    Ok(problem.evaluate(rho.matrix()).0)
}

/// Maximum-likelihood density matrix for the given counts.
pub fn mle_state_tomo(records: &[CountRecord], settings: &TomoSettings) -> Result<MleOutcome> {
    let meas = measurements(records, settings.pol_encoding)?;
    let problem = Problem::new(&meas, settings.likelihood)?;
    let d = problem.dim;

    let li = problem.linear_inversion();
    let mixed = &li * c(0.99, 0.0) + CMatrix::identity(d, d) * c(0.01 / d as f64, 0.0);
    let mut starts = vec![problem.start_from_rho(&li), problem.start_from_rho(&mixed)];
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    for _ in 0..settings.restarts {
        starts.push(DVector::from_fn(problem.n_params(), |_, _| {
            StandardNormal.sample(&mut rng)
        }));
    }

    let mut best: Option<Run> = None;
    let mut any_converged = false;
    let mut iterations = 0;
    let n_starts = starts.len();
    for x0 in starts {
        let run = lbfgs(&problem, x0, settings);
        iterations += run.iterations;
        if !run.value.is_finite() {
            continue;
        }
        any_converged |= run.converged;
        let better = match &best {
            None => true,
            Some(b) => (run.converged, -run.value) > (b.converged, -b.value),
        };
        if better {
            best = Some(run);
        }
    }
    let best = best.ok_or_else(|| Error::Data("no start reached a finite likelihood".into()))?;
    let rho = Problem::rho_from_t(&problem.t_from(&best.x))
        .ok_or_else(|| Error::Domain("degenerate estimate".into()))?;
    let outcome = MleOutcome {
        rho: DensityMatrix::new(rho)?,
        log_likelihood: -best.value,
        iterations,
        converged: any_converged,
        starts: n_starts,
    };
    if !any_converged {
        return Err(Error::NonConvergence {
            restarts: settings.restarts,
            best_log_likelihood: outcome.log_likelihood,
            best: Box::new(outcome),
        });
    }
    Ok(outcome)
}
