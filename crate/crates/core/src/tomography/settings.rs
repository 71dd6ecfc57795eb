// Copyright 2026 Spinorbit Contributors
// SPDX-License-Identifier: Apache-2.0

//! Measurement settings and their projectors.
//!
//! A setting label names one basis per qubit, joined by `|` (for example
//! `HV|pm2`); an outcome label names one state per qubit (`H|+2`).
//!
//! | qubit | bases | outcome states |
//! |-------|-------|----------------|
//! | polarization | `HV`, `DA`, `LR` | `H V D A L R` |
//! | OAM | `pm2`, `dpm`, `dRL` | `+2 -2 d+ d- dR dL` |
//!
//! OAM states use `|0⟩ = |+2⟩`, `|1⟩ = |−2⟩`, `d± = (|0⟩ ± |1⟩)/√2`,
//! `dL = (|0⟩ + i|1⟩)/√2`, `dR = (|0⟩ − i|1⟩)/√2`. The polarization qubit is
//! encoded either linearly (`|0⟩ = H`) or circularly (`|0⟩ = R`, `|1⟩ = L`).

use std::collections::{BTreeMap, BTreeSet};
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::linalg::{c, ket, outer, rank, CMatrix};
use crate::error::{Error, Result};
use crate::fock::C64;
use crate::measurement::CountRecord;
use crate::optics::jones::{PolState, FRAC_1_SQRT_2};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QubitKind {
    Pol,
    Oam,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolEncoding {
    /// `|0⟩ = H`, `|1⟩ = V`.
    Linear,
    /// `|0⟩ = R`, `|1⟩ = L`.
    Circular,
}

pub const POL_BASES: [(&str, [&str; 2]); 3] =
    [("HV", ["H", "V"]), ("DA", ["D", "A"]), ("LR", ["L", "R"])];
pub const OAM_BASES: [(&str, [&str; 2]); 3] = [
    ("pm2", ["+2", "-2"]),
    ("dpm", ["d+", "d-"]),
    ("dRL", ["dR", "dL"]),
];

fn bases(kind: QubitKind) -> &'static [(&'static str, [&'static str; 2]); 3] {
    match kind {
        QubitKind::Pol => &POL_BASES,
        QubitKind::Oam => &OAM_BASES,
    }
}

/// Which qubit a basis label belongs to.
pub fn basis_kind(label: &str) -> Option<QubitKind> {
    if POL_BASES.iter().any(|(b, _)| *b == label) {
        Some(QubitKind::Pol)
    } else if OAM_BASES.iter().any(|(b, _)| *b == label) {
        Some(QubitKind::Oam)
    } else {
        None
    }
}

/// Outcome labels of a basis.
pub fn basis_outcomes(label: &str) -> Option<[&'static str; 2]> {
    POL_BASES
        .iter()
        .chain(OAM_BASES.iter())
        .find(|(b, _)| *b == label)
        .map(|(_, o)| *o)
}

/// Computational-basis amplitudes of a labelled single-qubit state.
pub fn outcome_vector(label: &str, encoding: PolEncoding) -> Option<(QubitKind, [C64; 2])> {
    let s = FRAC_1_SQRT_2;
    let oam = match label {
        "+2" => Some([c(1.0, 0.0), c(0.0, 0.0)]),
        "-2" => Some([c(0.0, 0.0), c(1.0, 0.0)]),
        "d+" => Some([c(s, 0.0), c(s, 0.0)]),
        "d-" => Some([c(s, 0.0), c(-s, 0.0)]),
        "dL" => Some([c(s, 0.0), c(0.0, s)]),
        "dR" => Some([c(s, 0.0), c(0.0, -s)]),
        _ => None,
    };
    if let Some(v) = oam {
        return Some((QubitKind::Oam, v));
    }
    let pol = PolState::from_str(label)
        .ok()
        .filter(|_| label.len() == 1 && label == label.to_uppercase())?;
    Some((QubitKind::Pol, encode_pol(pol.jones_vector(), encoding)))
}

/// Re-expresses an (H, V) Jones vector in the chosen qubit encoding.
pub fn encode_pol(v: [C64; 2], encoding: PolEncoding) -> [C64; 2] {
    match encoding {
        PolEncoding::Linear => v,
        PolEncoding::Circular => {
            let r = PolState::R.jones_vector();
            let l = PolState::L.jones_vector();
            let dot = |a: [C64; 2]| a[0].conj() * v[0] + a[1].conj() * v[1];
            [dot(r), dot(l)]
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LikelihoodModel {
    Multinomial,
    Poisson,
}

/// Reconstruction options.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TomoSettings {
    pub pol_encoding: PolEncoding,
    pub likelihood: LikelihoodModel,
    /// Stop when the log-likelihood improves by less than this.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Random starts in addition to the linear-inversion start.
    pub restarts: usize,
    pub seed: u64,
}

impl TomoSettings {
    /// Polarization ⊗ OAM tomography with the circular polarization encoding.
    pub fn two_qubit() -> Self {
        TomoSettings {
            pol_encoding: PolEncoding::Circular,
            likelihood: LikelihoodModel::Multinomial,
            tolerance: 1e-10,
            max_iterations: 5000,
            restarts: 3,
            seed: 0,
        }
    }

    /// Single-qubit tomography with the linear polarization encoding.
    pub fn single_qubit() -> Self {
        TomoSettings {
            pol_encoding: PolEncoding::Linear,
            ..Self::two_qubit()
        }
    }
}

impl Default for TomoSettings {
    fn default() -> Self {
        Self::two_qubit()
    }
}

/// One measured projector with its data.
#[derive(Debug, Clone)]
pub struct Measurement {
    pub setting: String,
    pub outcome: String,
    pub projector: CMatrix,
    pub counts: f64,
    pub shots: f64,
}

/// Parses a setting label into per-qubit bases.
pub fn parse_setting(setting: &str) -> Result<Vec<(QubitKind, &str)>> {
    setting
        .split('|')
        .map(|b| {
            basis_kind(b)
                .map(|k| (k, b))
                .ok_or_else(|| Error::Data(format!("unknown basis `{b}` in setting `{setting}`")))
        })
        .collect()
}

/// Projector of an outcome label, checked against its setting.
pub fn projector(setting: &str, outcome: &str, encoding: PolEncoding) -> Result<CMatrix> {
    let bases = parse_setting(setting)?;
    let parts: Vec<&str> = outcome.split('|').collect();
    if parts.len() != bases.len() {
        return Err(Error::Data(format!(
            "outcome `{outcome}` does not match setting `{setting}`"
        )));
    }
    let mut amp = vec![c(1.0, 0.0)];
    for ((_, basis), part) in bases.iter().zip(&parts) {
        let allowed = basis_outcomes(basis).expect("basis parsed");
        if !allowed.contains(part) {
            return Err(Error::Data(format!(
                "outcome `{part}` is not in basis `{basis}`"
            )));
        }
        let (_, v) = outcome_vector(part, encoding).expect("known outcome");
        amp = amp
            .iter()
            .flat_map(|a| v.iter().map(move |b| a * b))
            .collect();
    }
    Ok(outer(&ket(&amp)))
}

/// All settings and outcomes for a qubit layout, e.g. 9 × 4 for pol ⊗ OAM.
pub fn full_settings(kinds: &[QubitKind]) -> Vec<(String, Vec<String>)> {
    let mut settings: Vec<(Vec<&str>, Vec<Vec<&str>>)> = vec![(Vec::new(), vec![Vec::new()])];
    for &kind in kinds {
        let mut next = Vec::new();
        for (labels, outcomes) in &settings {
            for (basis, outs) in bases(kind) {
                let mut l = labels.clone();
                l.push(*basis);
                let o: Vec<Vec<&str>> = outcomes
                    .iter()
                    .flat_map(|prefix| {
                        outs.iter().map(move |x| {
                            let mut p = prefix.clone();
                            p.push(*x);
                            p
                        })
                    })
                    .collect();
                next.push((l, o));
            }
        }
        settings = next;
    }
    settings
        .into_iter()
        .map(|(l, o)| (l.join("|"), o.into_iter().map(|x| x.join("|")).collect()))
        .collect()
}

/// Qubit layout implied by a set of records; all settings must agree.
pub fn layout(records: &[CountRecord]) -> Result<Vec<QubitKind>> {
    let first = records
        .first()
        .ok_or_else(|| Error::Data("no count records".into()))?;
    let kinds: Vec<QubitKind> = parse_setting(&first.setting)?
        .into_iter()
        .map(|(k, _)| k)
        .collect();
    for r in records {
        let k: Vec<QubitKind> = parse_setting(&r.setting)?
            .into_iter()
            .map(|(k, _)| k)
            .collect();
        if k != kinds {
            return Err(Error::Data(format!(
                "setting `{}` does not match layout of `{}`",
                r.setting, first.setting
            )));
        }
    }
    Ok(kinds)
}

/// Converts records to projectors, merging duplicates and checking that
/// the set is informationally complete.
pub fn measurements(records: &[CountRecord], encoding: PolEncoding) -> Result<Vec<Measurement>> {
    let kinds = layout(records)?;
    let dim = 1usize << kinds.len();
    let mut merged: BTreeMap<(String, String), (f64, f64)> = BTreeMap::new();
    for r in records {
        let entry = merged
            .entry((r.setting.clone(), r.pattern.clone()))
            .or_insert((0.0, 0.0));
        entry.0 += r.counts as f64;
        entry.1 += r.shots as f64;
    }
    let mut out = Vec::with_capacity(merged.len());
    for ((setting, outcome), (counts, shots)) in merged {
        let projector = projector(&setting, &outcome, encoding)?;
        out.push(Measurement {
            setting,
            outcome,
            projector,
            counts,
            shots,
        });
    }
    // Informational completeness: the projectors must span all Hermitian
    // operators on the qubit space.
    let rows = DMatrix::from_fn(out.len(), dim * dim, |k, idx| {
        out[k].projector[(idx / dim, idx % dim)]
    });
    if rank(&rows, 1e-9) < dim * dim {
        let present: BTreeSet<(String, String)> = out
            .iter()
            .map(|m| (m.setting.clone(), m.outcome.clone()))
            .collect();
        let missing: Vec<String> = full_settings(&kinds)
            .into_iter()
            .flat_map(|(s, outs)| outs.into_iter().map(move |o| (s.clone(), o)))
            .filter(|k| !present.contains(k))
            .map(|(s, o)| format!("{s}:{o}"))
            .collect();
        return Err(Error::Data(format!(
            "settings are not informationally complete; missing projectors: {}",
            missing.join(", ")
        )));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn circular_encoding_maps_r_to_zero() {
        let (_, v) = outcome_vector("R", PolEncoding::Circular).unwrap();
        assert_abs_diff_eq!(v[0].norm(), 1.0, epsilon = 1e-15);
        let (_, v) = outcome_vector("L", PolEncoding::Circular).unwrap();
        assert_abs_diff_eq!(v[1].norm(), 1.0, epsilon = 1e-15);
        let (_, v) = outcome_vector("H", PolEncoding::Linear).unwrap();
        assert_abs_diff_eq!(v[0].norm(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn full_two_qubit_set_has_36_projectors() {
        let s = full_settings(&[QubitKind::Pol, QubitKind::Oam]);
        assert_eq!(s.len(), 9);
        assert!(s.iter().all(|(_, o)| o.len() == 4));
        assert_eq!(s[0].0, "HV|pm2");
        assert_eq!(s[0].1[0], "H|+2");
    }

    #[test]
    fn basis_outcomes_resolve_identity() {
        for kind in [QubitKind::Pol, QubitKind::Oam] {
            for (setting, outcomes) in full_settings(&[kind]) {
                let sum = outcomes
                    .iter()
                    .map(|o| projector(&setting, o, PolEncoding::Circular).unwrap())
                    .fold(CMatrix::zeros(2, 2), |a, b| a + b);
                assert!((sum - CMatrix::identity(2, 2)).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn incomplete_set_names_missing_projectors() {
        let records: Vec<CountRecord> = ["H", "V"]
            .iter()
            .map(|o| CountRecord::new("HV", o, 10, 20, 0))
            .collect();
        let err = measurements(&records, PolEncoding::Linear).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("DA:D") && msg.contains("LR:R"), "{msg}");
    }

    #[test]
    fn rejects_mismatched_outcome() {
        assert!(projector("HV", "D", PolEncoding::Linear).is_err());
        assert!(projector("HV|pm2", "H", PolEncoding::Linear).is_err());
        assert!(projector("XY", "H", PolEncoding::Linear).is_err());
    }
}
