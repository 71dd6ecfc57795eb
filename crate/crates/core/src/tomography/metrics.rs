// Copyright 2026 Spinorbit Contributors
// SPDX-License-Identifier: Apache-2.0

//! Scalar figures of merit.

use serde::{Deserialize, Serialize};

use super::linalg::{c, hermitian_eigen, psd_sqrt, CMatrix};
use super::DensityMatrix;
use crate::error::{Error, Result};
use crate::fock::C64;

/// Wootters concurrence of a two-qubit state.
pub fn concurrence(rho: &DensityMatrix) -> Result<f64> {
    if rho.dim() != 4 {
        return Err(Error::Domain(
            "concurrence needs a 4×4 density matrix".into(),
        ));
    }
    let m = rho.matrix();
    let yy = CMatrix::from_fn(4, 4, |i, j| {
        // σ_y ⊗ σ_y is anti-diagonal with signs (−1, 1, 1, −1).
        if i + j == 3 {
            c(if i == 0 || i == 3 { -1.0 } else { 1.0 }, 0.0)
        } else {
            c(0.0, 0.0)
        }
    });
    let flipped = &yy * m.map(|z| z.conj()) * &yy;
    let s = psd_sqrt(m);
    let r = &s * flipped * &s;
    let mut lambdas: Vec<f64> = hermitian_eigen(&r)
        .0
        .iter()
        .map(|&x| x.max(0.0).sqrt())
        .collect();
    lambdas.sort_by(|a, b| b.total_cmp(a));
    Ok((lambdas[0] - lambdas[1] - lambdas[2] - lambdas[3]).max(0.0))
}

/// Uhlmann fidelity `(tr √(√ρ σ √ρ))²`.
pub fn fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::Domain(
            "fidelity of matrices of different dimension".into(),
        ));
    }
    let s = psd_sqrt(rho.matrix());
    let inner = &s * sigma.matrix() * &s;
    let tr: f64 = hermitian_eigen(&inner)
        .0
        .iter()
        .map(|&x| x.max(0.0).sqrt())
        .sum();
    Ok((tr * tr).min(1.0))
}

/// `⟨ψ|ρ|ψ⟩` for a normalized pure target.
pub fn pure_state_fidelity(rho: &DensityMatrix, psi: &[C64]) -> Result<f64> {
    if psi.len() != rho.dim() {
        return Err(Error::Domain(
            "state and density matrix dimensions differ".into(),
        ));
    }
    let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
    let m = rho.matrix();
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..psi.len() {
        for j in 0..psi.len() {
            acc += psi[i].conj() * m[(i, j)] * psi[j];
        }
    }
    Ok(acc.re / norm)
}

/// Plateau, minimum and visibility `(C_∞ − C_min)/C_∞` of a delay scan.
/// The plateau is the mean over points with `|t_d| > 3 τ_c`.
pub fn dip_visibility(scan: &[(f64, f64)], tau_c: f64) -> Result<(f64, f64, f64)> {
    let plateau: Vec<f64> = scan
        .iter()
        .filter(|(t, _)| t.abs() > 3.0 * tau_c)
        .map(|&(_, p)| p)
        .collect();
    if plateau.is_empty() {
        return Err(Error::Data(format!(
            "no scan points beyond 3τ_c = {:.4} ps to estimate the plateau",
            3.0 * tau_c
        )));
    }
    let c_inf = plateau.iter().sum::<f64>() / plateau.len() as f64;
    if c_inf <= 0.0 {
        return Err(Error::Data("plateau coincidence rate is zero".into()));
    }
    let c_min = scan.iter().map(|&(_, p)| p).fold(f64::INFINITY, f64::min);
    Ok((c_inf, c_min, (c_inf - c_min) / c_inf))
}

/// `(Σ enhanced − Σ suppressed)/(Σ enhanced + Σ suppressed)`.
pub fn correlation_visibility(enhanced: &[f64], suppressed: &[f64]) -> Result<f64> {
    let e: f64 = enhanced.iter().sum();
    let s: f64 = suppressed.iter().sum();
    if e + s <= 0.0 {
        return Err(Error::Data("no coincidences in either basis".into()));
    }
    Ok((e - s) / (e + s))
}

/// Metrics file written next to reconstructed matrices.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsDoc {
    pub concurrence: Option<f64>,
    pub fidelity: Option<f64>,
    pub visibility: Option<f64>,
    pub gamma: Option<f64>,
    #[serde(rename = "chi_II")]
    pub chi_ii: Option<f64>,
    pub converged: bool,
}
