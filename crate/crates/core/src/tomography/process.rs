// Copyright 2026 Spinorbit Contributors
// SPDX-License-Identifier: Apache-2.0

//! Single-qubit process tomography: least-squares inversion for χ followed by
//! Dykstra alternating projection onto the completely-positive,
//! trace-preserving set.

use nalgebra::{DMatrix, DVector};

use super::linalg::{c, hermitize, paulis, project_psd, rank, CMatrix};
use super::{ChiMatrix, DensityMatrix};
use crate::error::{Error, Result};

const PROJECTION_TOLERANCE: f64 = 1e-10;
const MAX_PROJECTION_ITERATIONS: usize = 20_000;

#[derive(Debug, Clone)]
pub struct ProcessOutcome {
    pub chi: ChiMatrix,
    /// Frobenius distance between the raw inversion and the physical χ.
    pub projection_distance: f64,
    pub projection_iterations: usize,
}

/// Affine map `χ ↦ Σ χ_mn P_n P_m` as a 4 × 16 matrix on row-major vec(χ).
fn tp_map() -> DMatrix<crate::fock::C64> {
    let p = paulis();
    DMatrix::from_fn(4, 16, |row, col| {
        let (m, n) = (col / 4, col % 4);
        let prod = &p[n] * &p[m];
        prod[(row / 2, row % 2)]
    })
}

fn vec_of(m: &CMatrix) -> DVector<crate::fock::C64> {
    DVector::from_iterator(16, (0..16).map(|k| m[(k / 4, k % 4)]))
}

fn mat_of(v: &DVector<crate::fock::C64>) -> CMatrix {
    CMatrix::from_fn(4, 4, |i, j| v[i * 4 + j])
}

/// Reconstructs χ from input/output state pairs.
pub fn process_tomo(inputs: &[DensityMatrix], outputs: &[DensityMatrix]) -> Result<ProcessOutcome> {
    if inputs.len() != outputs.len() {
        return Err(Error::Data(format!(
            "{} inputs but {} outputs",
            inputs.len(),
            outputs.len()
        )));
    }
    if inputs.iter().chain(outputs).any(|r| r.dim() != 2) {
        return Err(Error::Domain(
            "process tomography needs single-qubit states".into(),
        ));
    }
    let p = paulis();
    // Row block j, entry (a, b): Σ_mn χ_mn (P_m ρ_j P_n)_ab.
    let rows = 4 * inputs.len();
    let mut a = DMatrix::from_element(rows, 16, c(0.0, 0.0));
    let mut b = DVector::from_element(rows, c(0.0, 0.0));
    for (j, (rho, sigma)) in inputs.iter().zip(outputs).enumerate() {
        for m in 0..4 {
            for n in 0..4 {
                let term = &p[m] * rho.matrix() * &p[n];
                for e in 0..4 {
                    a[(4 * j + e, m * 4 + n)] = term[(e / 2, e % 2)];
                }
            }
        }
        for e in 0..4 {
            b[4 * j + e] = sigma.matrix()[(e / 2, e % 2)];
        }
    }
    if rank(&a, 1e-9) < 16 {
        return Err(Error::Data(
            "input states are not linearly independent enough to determine χ".into(),
        ));
    }
    let raw = a
        .svd(true, true)
        .solve(&b, 1e-12)
        .map_err(|e| Error::Data(format!("least-squares solve failed: {e}")))?;
    let raw = hermitize(&mat_of(&raw));

    // Projector onto {A vec(χ) = vec(I)}.
    let tp = tp_map();
    let tp_adj = tp.adjoint();
    let gram_inv = (&tp * &tp_adj)
        .try_inverse()
        .ok_or_else(|| Error::Domain("singular trace-preservation map".into()))?;
    let target = DVector::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
    let project_tp = |chi: &CMatrix| -> CMatrix {
        let v = vec_of(chi);
        let residual = &tp * &v - &target;
        hermitize(&mat_of(&(v - &tp_adj * (&gram_inv * residual))))
    };

    // Dykstra's algorithm; the affine step needs no correction term.
    let mut x = project_tp(&raw);
    let mut p_corr = CMatrix::zeros(4, 4);
    let mut iterations = 0;
    loop {
        iterations += 1;
        let y = project_psd(&(&x + &p_corr));
        p_corr = &x + &p_corr - &y;
        let x_next = project_tp(&y);
        let change = (&x_next - &x).norm();
        x = x_next;
        let chi = ChiMatrix::from_matrix(x.clone())?;
        let feasible = chi.min_eigenvalue() >= -1e-12 && chi.tp_residual() < 1e-12;
        if (change < PROJECTION_TOLERANCE && chi.min_eigenvalue() >= -1e-8) || feasible {
            break;
        }
        if iterations >= MAX_PROJECTION_ITERATIONS {
            return Err(Error::Domain(format!(
                "CPTP projection did not settle (min eigenvalue {:e})",
                chi.min_eigenvalue()
            )));
        }
    }
    Ok(ProcessOutcome {
        projection_distance: (&x - &raw).norm(),
        chi: ChiMatrix::from_matrix(x)?,
        projection_iterations: iterations,
    })
}
