// Copyright 2026 Spinorbit Contributors
// SPDX-License-Identifier: Apache-2.0

//! State and process reconstruction from counts, and the scalar figures of
//! merit used to summarize them.

pub mod linalg;
pub mod metrics;
mod mle;
mod process;
pub mod settings;
mod stokes;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::C64;
use linalg::{c, hermitian_eigen, trace, CMatrix};

pub use metrics::{concurrence, fidelity, pure_state_fidelity, MetricsDoc};
pub use mle::{log_likelihood, mle_state_tomo, MleOutcome};
pub use process::{process_tomo, ProcessOutcome};
pub use settings::{LikelihoodModel, PolEncoding, QubitKind, TomoSettings};
pub use stokes::{stokes_reconstruct, StokesOutcome};

/// Tolerance on Hermiticity and trace of a density matrix.
pub const DM_TOLERANCE: f64 = 1e-10;
/// Most negative eigenvalue accepted in a density matrix.
pub const PSD_TOLERANCE: f64 = 1e-8;

/// On-disk form of a square complex matrix: rows of `[re, im]` pairs.
pub type MatrixDoc = Vec<Vec<[f64; 2]>>;

pub fn matrix_to_doc(m: &CMatrix) -> MatrixDoc {
    (0..m.nrows())
        .map(|i| {
            (0..m.ncols())
                .map(|j| [m[(i, j)].re, m[(i, j)].im])
                .collect()
        })
        .collect()
}

pub fn matrix_from_doc(doc: &MatrixDoc) -> Result<CMatrix> {
    let n = doc.len();
    if n == 0 || doc.iter().any(|row| row.len() != n) {
        return Err(Error::Schema {
            location: "matrix".into(),
            reason: format!("expected a non-empty square array, got {n} rows"),
        });
    }
    Ok(CMatrix::from_fn(n, n, |i, j| c(doc[i][j][0], doc[i][j][1])))
}

/// Physical density matrix of one or two qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    m: CMatrix,
}

impl DensityMatrix {
    /// Validates Hermiticity, unit trace and positivity.
    pub fn new(m: CMatrix) -> Result<Self> {
        let n = m.nrows();
        if n != m.ncols() || !(n == 2 || n == 4) {
            return Err(Error::Domain(format!(
                "density matrix must be 2×2 or 4×4, got {}×{}",
                n,
                m.ncols()
            )));
        }
        let asym = (&m - m.adjoint()).map(|z| z.norm()).max();
        if asym > DM_TOLERANCE {
            return Err(Error::Domain(format!(
                "matrix is not Hermitian (deviation {asym:e})"
            )));
        }
        let tr = trace(&m);
        if (tr - c(1.0, 0.0)).norm() > DM_TOLERANCE {
            return Err(Error::Domain(format!("trace is {tr}, expected 1")));
        }
        let min = hermitian_eigen(&m).0[0];
        if min < -PSD_TOLERANCE {
            return Err(Error::Domain(format!(
                "matrix is not PSD (min eigenvalue {min:e})"
            )));
        }
        Ok(DensityMatrix {
            m: linalg::hermitize(&m),
        })
    }

    /// `|ψ⟩⟨ψ|` after normalizing ψ.
    pub fn pure(psi: &[C64]) -> Result<Self> {
        let v = linalg::ket(psi);
        let norm = v.norm();
        if norm == 0.0 {
            return Err(Error::Domain("zero vector".into()));
        }
        Self::new(linalg::outer(&(v / c(norm, 0.0))))
    }

    pub fn maximally_mixed(dim: usize) -> Result<Self> {
        Self::new(CMatrix::identity(dim, dim) * c(1.0 / dim as f64, 0.0))
    }

    /// Convex mixture `Σ wᵢ ρᵢ`; weights must be non-negative and sum to 1.
    pub fn mixture(parts: &[(f64, DensityMatrix)]) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| Error::Domain("empty mixture".into()))?;
        let mut m = CMatrix::zeros(first.1.dim(), first.1.dim());
        for (w, rho) in parts {
            if *w < 0.0 || rho.dim() != first.1.dim() {
                return Err(Error::Domain(
                    "mixture weights must be ≥ 0 and dims equal".into(),
                ));
            }
            m += rho.matrix() * c(*w, 0.0);
        }
        Self::new(m)
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.m
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigen(&self.m).0
    }

    pub fn purity(&self) -> f64 {
        (&self.m * &self.m).trace().re
    }

    /// `tr(ρ Π)` for a Hermitian operator.
    pub fn expectation(&self, op: &CMatrix) -> f64 {
        (&self.m * op).trace().re
    }

    pub fn to_doc(&self) -> MatrixDoc {
        matrix_to_doc(&self.m)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_doc())?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: MatrixDoc = serde_json::from_str(text).map_err(|e| Error::Schema {
            location: format!("line {} column {}", e.line(), e.column()),
            reason: e.to_string(),
        })?;
        Self::new(matrix_from_doc(&doc)?)
    }
}

impl Serialize for DensityMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_doc().serialize(s)
    }
}

impl<'de> Deserialize<'de> for DensityMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let doc = MatrixDoc::deserialize(d)?;
        matrix_from_doc(&doc)
            .and_then(DensityMatrix::new)
            .map_err(serde::de::Error::custom)
    }
}

/// Single-qubit process in the unnormalized Pauli basis {I, X, Y, Z}:
/// `E(ρ) = Σ χ_mn P_m ρ P_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChiMatrix {
    m: CMatrix,
}

impl ChiMatrix {
    /// Wraps a 4×4 matrix without checking physicality.
    pub fn from_matrix(m: CMatrix) -> Result<Self> {
        if m.nrows() != 4 || m.ncols() != 4 {
            return Err(Error::Domain("χ must be 4×4".into()));
        }
        Ok(ChiMatrix { m })
    }

    /// χ of the unitary channel `ρ → UρU†`.
    pub fn from_unitary(u: &CMatrix) -> Result<Self> {
        // U = Σ u_m P_m with u_m = tr(P_m U)/2.
        let p = linalg::paulis();
        let coeffs: Vec<C64> = p.iter().map(|pm| (pm * u).trace() * c(0.5, 0.0)).collect();
        Self::from_matrix(CMatrix::from_fn(4, 4, |i, j| coeffs[i] * coeffs[j].conj()))
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.m
    }

    /// Process fidelity with the identity channel.
    pub fn chi_ii(&self) -> f64 {
        self.m[(0, 0)].re
    }

    /// `‖Σ χ_mn P_n P_m − I‖_F`.
    pub fn tp_residual(&self) -> f64 {
        let p = linalg::paulis();
        let mut acc = CMatrix::zeros(2, 2);
        for m in 0..4 {
            for n in 0..4 {
                acc += &p[n] * &p[m] * self.m[(m, n)];
            }
        }
        (acc - CMatrix::identity(2, 2)).norm()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        linalg::min_eigenvalue(&self.m)
    }

    /// Applies the channel to a single-qubit density matrix.
    pub fn apply(&self, rho: &CMatrix) -> CMatrix {
        let p = linalg::paulis();
        let mut out = CMatrix::zeros(2, 2);
        for m in 0..4 {
            for n in 0..4 {
                out += &p[m] * rho * &p[n] * self.m[(m, n)];
            }
        }
        out
    }

    pub fn to_doc(&self) -> MatrixDoc {
        matrix_to_doc(&self.m)
    }
}

impl Serialize for ChiMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_doc().serialize(s)
    }
}
