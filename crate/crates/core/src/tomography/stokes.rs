// Copyright 2026 Spinorbit Contributors
// SPDX-License-Identifier: Apache-2.0

//! Single-qubit reconstruction from the three mutually unbiased bases.
//!
//! Axis convention, polarization / OAM:
//! - `S_x`: D − A / d+ − d−
//! - `S_y`: L − R / dL − dR
//! - `S_z`: H − V / +2 − −2
//!
//! With `|0⟩ = H` (or `+2`) this gives `ρ = (I + S·σ)/2`. A vector longer
//! than one is scaled back onto the sphere.

use std::collections::BTreeMap;

use super::linalg::{c, CMatrix};
use super::DensityMatrix;
use crate::error::{Error, Result};
use crate::measurement::CountRecord;

#[derive(Debug, Clone)]
pub struct StokesOutcome {
    pub bloch: [f64; 3],
    pub rho: DensityMatrix,
    /// Whether the raw vector had to be shortened.
    pub clipped: bool,
}

const AXES: [[[&str; 2]; 2]; 3] = [
    [["D", "A"], ["d+", "d-"]],
    [["L", "R"], ["dL", "dR"]],
    [["H", "V"], ["+2", "-2"]],
];

/// Reconstructs a qubit from counts labelled by outcome state.
pub fn stokes_reconstruct(records: &[CountRecord]) -> Result<StokesOutcome> {
    let mut counts: BTreeMap<&str, u64> = BTreeMap::new();
    for r in records {
        *counts.entry(r.pattern.as_str()).or_default() += r.counts;
    }
    let oam = counts
        .keys()
        .any(|k| ["+2", "-2", "d+", "d-", "dL", "dR"].contains(k));
    let pol = counts
        .keys()
        .any(|k| ["H", "V", "D", "A", "L", "R"].contains(k));
    if oam && pol {
        return Err(Error::Data(
            "records mix polarization and OAM outcomes".into(),
        ));
    }
    let which = usize::from(oam);
    let mut s = [0.0; 3];
    for (axis, labels) in AXES.iter().enumerate() {
        let [plus, minus] = labels[which];
        let np = counts.get(plus).copied().unwrap_or(0) as f64;
        let nm = counts.get(minus).copied().unwrap_or(0) as f64;
        if np + nm == 0.0 {
            return Err(Error::Data(format!(
                "no counts in the {plus}/{minus} basis"
            )));
        }
        s[axis] = (np - nm) / (np + nm);
    }
    let len = (s[0] * s[0] + s[1] * s[1] + s[2] * s[2]).sqrt();
    let clipped = len > 1.0;
    if clipped {
        for x in &mut s {
            *x /= len;
        }
    }
    let rho = CMatrix::from_row_slice(
        2,
        2,
        &[
            c(0.5 * (1.0 + s[2]), 0.0),
            c(0.5 * s[0], -0.5 * s[1]),
            c(0.5 * s[0], 0.5 * s[1]),
            c(0.5 * (1.0 - s[2]), 0.0),
        ],
    );
    Ok(StokesOutcome {
        bloch: s,
        rho: DensityMatrix::new(rho)?,
        clipped,
    })
}
