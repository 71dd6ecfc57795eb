// Copyright 2026 Spinorbit Contributors
// SPDX-License-Identifier: Apache-2.0

//! Multimode bosonic Fock states over labeled modes.
//!
//! A mode is the tuple (path, polarization, OAM, wavepacket). Polarization is
//! stored in the linear H/V basis only; circular states are superpositions
//! with `L = (H + iV)/√2` and `R = (H − iV)/√2`.
//!
//! States are immutable values. Every operation returns a new, normalized
//! state; norm removed by a filtering element is folded into
//! `success_probability` so that post-selection is tracked explicitly.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Default photon capacity of a state.
pub const DEFAULT_N_MAX: usize = 4;

/// Amplitudes below this magnitude are dropped during canonicalization.
pub const PRUNE_THRESHOLD: f64 = 1e-14;

/// Surviving norm² below which a filtered state counts as fully absorbed.
const ABSORBED_NORM_SQR: f64 = 1e-28;

/// Linear polarization basis element.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Pol {
    H,
    V,
}

impl Pol {
    pub const BOTH: [Pol; 2] = [Pol::H, Pol::V];

    pub fn index(self) -> usize {
        match self {
            Pol::H => 0,
            Pol::V => 1,
        }
    }

    pub fn from_index(i: usize) -> Pol {
        if i == 0 {
            Pol::H
        } else {
            Pol::V
        }
    }
}

impl fmt::Display for Pol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Pol::H => f.write_str("H"),
            Pol::V => f.write_str("V"),
        }
    }
}

/// Label of a single bosonic mode.
///
/// The derived ordering (path, pol, oam, wavepacket) is the canonical order
/// used for serialization.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(from = "(String, Pol, i32, u32)", into = "(String, Pol, i32, u32)")]
pub struct ModeKey {
    pub path: String,
    pub pol: Pol,
    pub oam: i32,
    pub wavepacket: u32,
}

/// Suffix marking the loss reservoir attached to a path.
pub const LOSS_SUFFIX: &str = "~loss";

impl ModeKey {
    pub fn new(path: impl Into<String>, pol: Pol, oam: i32, wavepacket: u32) -> Self {
        ModeKey {
            path: path.into(),
            pol,
            oam,
            wavepacket,
        }
    }

    /// Same mode with a different path.
    pub fn on_path(&self, path: &str) -> Self {
        ModeKey {
            path: path.to_owned(),
            ..self.clone()
        }
    }

    pub fn with_pol(&self, pol: Pol) -> Self {
        ModeKey {
            pol,
            ..self.clone()
        }
    }

    pub fn with_oam(&self, oam: i32) -> Self {
        ModeKey {
            oam,
            ..self.clone()
        }
    }

    pub fn with_wavepacket(&self, wavepacket: u32) -> Self {
        ModeKey {
            wavepacket,
            ..self.clone()
        }
    }

    /// Loss reservoir mode paired with this one.
    pub fn loss_mode(&self) -> Self {
        self.on_path(&format!("{}{}", self.path, LOSS_SUFFIX))
    }

    pub fn is_loss(&self) -> bool {
        self.path.ends_with(LOSS_SUFFIX)
    }
}

impl From<(String, Pol, i32, u32)> for ModeKey {
    fn from((path, pol, oam, wavepacket): (String, Pol, i32, u32)) -> Self {
        ModeKey {
            path,
            pol,
            oam,
            wavepacket,
        }
    }
}

impl From<ModeKey> for (String, Pol, i32, u32) {
    fn from(m: ModeKey) -> Self {
        (m.path, m.pol, m.oam, m.wavepacket)
    }
}

impl fmt::Display for ModeKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{},{},{:+},{}",
            self.path, self.pol, self.oam, self.wavepacket
        )
    }
}

/// Occupation-number basis state. Canonical: no zero counts.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FockBasisState {
    occupations: BTreeMap<ModeKey, u32>,
}

impl FockBasisState {
    pub fn vacuum() -> Self {
        Self::default()
    }

    /// Builds a basis state, merging repeated modes and dropping zero counts.
    pub fn from_counts(counts: impl IntoIterator<Item = (ModeKey, u32)>) -> Self {
        let mut occupations = BTreeMap::new();
        for (mode, n) in counts {
            if n > 0 {
                *occupations.entry(mode).or_insert(0) += n;
            }
        }
        FockBasisState { occupations }
    }

    pub fn single(mode: ModeKey) -> Self {
        Self::from_counts([(mode, 1)])
    }

    pub fn photon_number(&self) -> usize {
        self.occupations.values().map(|&n| n as usize).sum()
    }

    pub fn count(&self, mode: &ModeKey) -> u32 {
        self.occupations.get(mode).copied().unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&ModeKey, u32)> {
        self.occupations.iter().map(|(m, &n)| (m, n))
    }

    pub fn is_vacuum(&self) -> bool {
        self.occupations.is_empty()
    }

    fn with_added(&self, mode: &ModeKey) -> Self {
        let mut occupations = self.occupations.clone();
        *occupations.entry(mode.clone()).or_insert(0) += 1;
        FockBasisState { occupations }
    }

    /// Π_m sqrt(n_m!)
    fn sqrt_factorial_product(&self) -> f64 {
        self.occupations
            .values()
            .map(|&n| sqrt_factorial(n))
            .product()
    }
}

impl fmt::Display for FockBasisState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.occupations.is_empty() {
            return f.write_str("|vac>");
        }
        for (m, n) in &self.occupations {
            write!(f, "|{n}>[{m}]")?;
        }
        Ok(())
    }
}

fn sqrt_factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product::<f64>().sqrt()
}

/// Image of a creation operator under a linear mode map.
///
/// `None` leaves the mode untouched; `Some(vec![])` annihilates it.
pub type ModeImage = Option<Vec<(ModeKey, C64)>>;

/// Normalized superposition of Fock basis states with equal photon number.
#[derive(Debug, Clone, PartialEq)]
pub struct PhotonicState {
    n_max: usize,
    amplitudes: BTreeMap<FockBasisState, C64>,
    success_probability: f64,
}

impl PhotonicState {
    pub fn vacuum(n_max: usize) -> Self {
        let mut amplitudes = BTreeMap::new();
        amplitudes.insert(FockBasisState::vacuum(), C64::new(1.0, 0.0));
        PhotonicState {
            n_max,
            amplitudes,
            success_probability: 1.0,
        }
    }

    /// Builds a state from (possibly unnormalized) terms.
    ///
    /// Fails on zero norm, on mixed photon numbers, or on exceeding `n_max`.
    pub fn from_terms(
        n_max: usize,
        terms: impl IntoIterator<Item = (FockBasisState, C64)>,
        success_probability: f64,
    ) -> Result<Self> {
        if !(0.0..=1.0).contains(&success_probability) {
            return Err(Error::param(
                "success_probability",
                format!("{success_probability} is outside [0, 1]"),
            ));
        }
        let mut amplitudes: BTreeMap<FockBasisState, C64> = BTreeMap::new();
        for (basis, amp) in terms {
            *amplitudes.entry(basis).or_insert(C64::new(0.0, 0.0)) += amp;
        }
        amplitudes.retain(|_, a| a.norm() >= PRUNE_THRESHOLD);
        let mut photon_number = None;
        for basis in amplitudes.keys() {
            let n = basis.photon_number();
            if n > n_max {
                return Err(Error::Capacity {
                    requested: n,
                    n_max,
                });
            }
            match photon_number {
                None => photon_number = Some(n),
                Some(m) if m != n => {
                    return Err(Error::Domain(format!(
                        "superposition mixes photon numbers {m} and {n}"
                    )))
                }
                _ => {}
            }
        }
        let norm_sqr: f64 = amplitudes.values().map(|a| a.norm_sqr()).sum();
        if norm_sqr < ABSORBED_NORM_SQR {
            return Err(Error::Domain("state has zero norm".into()));
        }
        let scale = 1.0 / norm_sqr.sqrt();
        for a in amplitudes.values_mut() {
            *a *= scale;
        }
        Ok(PhotonicState {
            n_max,
            amplitudes,
            success_probability,
        })
    }

    /// Single-photon superposition Σ c_k |1⟩_{mode_k}, normalized.
    pub fn single_photon(n_max: usize, terms: &[(ModeKey, C64)]) -> Result<Self> {
        Self::from_terms(
            n_max,
            terms
                .iter()
                .map(|(m, c)| (FockBasisState::single(m.clone()), *c)),
            1.0,
        )
    }

    /// Product of single-mode excitations `Π a†_m |0⟩`, normalized.
    pub fn from_modes(n_max: usize, modes: &[ModeKey]) -> Result<Self> {
        modes
            .iter()
            .try_fold(Self::vacuum(n_max), |s, m| s.apply_creation(m))
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn success_probability(&self) -> f64 {
        self.success_probability
    }

    /// True when a filter removed the entire state.
    pub fn is_absorbed(&self) -> bool {
        self.success_probability == 0.0
    }

    pub fn photon_number(&self) -> usize {
        self.amplitudes
            .keys()
            .next()
            .map(FockBasisState::photon_number)
            .unwrap_or(0)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&FockBasisState, C64)> {
        self.amplitudes.iter().map(|(b, &a)| (b, a))
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    pub fn amplitude(&self, basis: &FockBasisState) -> C64 {
        self.amplitudes
            .get(basis)
            .copied()
            .unwrap_or(C64::new(0.0, 0.0))
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.values().map(|a| a.norm_sqr()).sum()
    }

    /// Distinct paths that carry at least one photon in some term.
    pub fn paths(&self) -> Vec<String> {
        let mut paths: Vec<String> = self
            .amplitudes
            .keys()
            .flat_map(|b| b.iter().map(|(m, _)| m.path.clone()))
            .collect();
        paths.sort();
        paths.dedup();
        paths
    }

    /// Prunes negligible amplitudes and renormalizes.
    pub fn canonicalize(&self) -> Self {
        let mut amplitudes = self.amplitudes.clone();
        amplitudes.retain(|_, a| a.norm() >= PRUNE_THRESHOLD);
        let norm_sqr: f64 = amplitudes.values().map(|a| a.norm_sqr()).sum();
        if norm_sqr < ABSORBED_NORM_SQR {
            return Self::absorbed(self.n_max);
        }
        // Already-normalized states are left bit-for-bit alone so that
        // canonicalization is idempotent.
        if (norm_sqr - 1.0).abs() > 1e-14 {
            let scale = 1.0 / norm_sqr.sqrt();
            for a in amplitudes.values_mut() {
                *a *= scale;
            }
        }
        PhotonicState {
            n_max: self.n_max,
            amplitudes,
            success_probability: self.success_probability,
        }
    }

    fn absorbed(n_max: usize) -> Self {
        PhotonicState {
            success_probability: 0.0,
            ..Self::vacuum(n_max)
        }
    }

    /// Applies `a†_mode`: |n⟩ ↦ √(n+1)|n+1⟩ on every term, then renormalizes.
    pub fn apply_creation(&self, mode: &ModeKey) -> Result<Self> {
        let requested = self.photon_number() + 1;
        if requested > self.n_max {
            return Err(Error::Capacity {
                requested,
                n_max: self.n_max,
            });
        }
        let terms = self.amplitudes.iter().map(|(basis, &amp)| {
            let n = basis.count(mode);
            (basis.with_added(mode), amp * f64::from(n + 1).sqrt())
        });
        Self::from_terms(self.n_max, terms, self.success_probability)
    }

    /// Hermitian inner product ⟨self|other⟩.
    pub fn inner_product(&self, other: &PhotonicState) -> C64 {
        let (small, large, conj_small) = if self.len() <= other.len() {
            (self, other, true)
        } else {
            (other, self, false)
        };
        small
            .amplitudes
            .iter()
            .filter_map(|(basis, &a)| large.amplitudes.get(basis).map(|&b| (a, b)))
            .map(|(a, b)| {
                if conj_small {
                    a.conj() * b
                } else {
                    b.conj() * a
                }
            })
            .sum()
    }

    /// Bosonic product: the creation polynomials of both states multiplied
    /// and applied to the vacuum. Shared modes combine via ladder algebra.
    pub fn tensor(&self, other: &PhotonicState) -> Result<Self> {
        let requested = self.photon_number() + other.photon_number();
        let n_max = self.n_max.max(other.n_max);
        if requested > n_max {
            return Err(Error::Capacity { requested, n_max });
        }
        let mut terms = Vec::with_capacity(self.len() * other.len());
        for (a, &ca) in &self.amplitudes {
            for (b, &cb) in &other.amplitudes {
                let merged = FockBasisState::from_counts(
                    a.iter().chain(b.iter()).map(|(m, n)| (m.clone(), n)),
                );
                let weight = merged.sqrt_factorial_product()
                    / (a.sqrt_factorial_product() * b.sqrt_factorial_product());
                terms.push((merged, ca * cb * weight));
            }
        }
        Self::from_terms(
            n_max,
            terms,
            self.success_probability * other.success_probability,
        )
    }

    /// Substitutes every creation operator by its image under `map` and
    /// expands the product multinomially.
    ///
    /// The map may be sub-unitary: whatever norm does not survive is folded
    /// into `success_probability`. A fully absorbed state comes back as the
    /// vacuum with zero success probability.
    pub fn substitute<F>(&self, map: F) -> Self
    where
        F: Fn(&ModeKey) -> ModeImage,
    {
        if self.is_absorbed() {
            return self.clone();
        }
        let mut out: BTreeMap<FockBasisState, C64> = BTreeMap::new();
        let mut images: BTreeMap<ModeKey, Vec<(ModeKey, C64)>> = BTreeMap::new();
        for (basis, &amp) in &self.amplitudes {
            // Monomials in the output creation operators, keyed by occupation.
            let mut poly: BTreeMap<FockBasisState, C64> = BTreeMap::new();
            poly.insert(
                FockBasisState::vacuum(),
                amp / basis.sqrt_factorial_product(),
            );
            for (mode, n) in basis.iter() {
                let image = images.entry(mode.clone()).or_insert_with(|| {
                    map(mode).unwrap_or_else(|| vec![(mode.clone(), C64::new(1.0, 0.0))])
                });
                for _ in 0..n {
                    let mut next: BTreeMap<FockBasisState, C64> = BTreeMap::new();
                    for (mono, &c) in &poly {
                        for (target, u) in image.iter() {
                            *next
                                .entry(mono.with_added(target))
                                .or_insert(C64::new(0.0, 0.0)) += c * u;
                        }
                    }
                    poly = next;
                }
            }
            for (mono, c) in poly {
                let a = c * mono.sqrt_factorial_product();
                *out.entry(mono).or_insert(C64::new(0.0, 0.0)) += a;
            }
        }
        out.retain(|_, a| a.norm() >= PRUNE_THRESHOLD);
        let norm_sqr: f64 = out.values().map(|a| a.norm_sqr()).sum();
        if norm_sqr < ABSORBED_NORM_SQR {
            return Self::absorbed(self.n_max);
        }
        let scale = 1.0 / norm_sqr.sqrt();
        for a in out.values_mut() {
            *a *= scale;
        }
        PhotonicState {
            n_max: self.n_max,
            amplitudes: out,
            success_probability: (self.success_probability * norm_sqr).min(1.0),
        }
    }

    /// Serializes to the JSON state document.
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&StateDoc::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: StateDoc = serde_json::from_str(text).map_err(|e| Error::Schema {
            location: format!("line {} column {}", e.line(), e.column()),
            reason: e.to_string(),
        })?;
        doc.into_state()
    }
}

/// On-disk form of a [`PhotonicState`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StateDoc {
    pub n_max: usize,
    pub success_probability: f64,
    pub terms: Vec<TermDoc>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TermDoc {
    pub modes: Vec<(ModeKey, u32)>,
    pub amp: [f64; 2],
}

impl From<&PhotonicState> for StateDoc {
    fn from(state: &PhotonicState) -> Self {
        StateDoc {
            n_max: state.n_max,
            success_probability: state.success_probability,
            terms: state
                .amplitudes
                .iter()
                .map(|(basis, a)| TermDoc {
                    modes: basis.iter().map(|(m, n)| (m.clone(), n)).collect(),
                    amp: [a.re, a.im],
                })
                .collect(),
        }
    }
}

impl StateDoc {
    pub fn into_state(self) -> Result<PhotonicState> {
        if self.terms.is_empty() {
            return Err(Error::Schema {
                location: "terms".into(),
                reason: "state has no terms".into(),
            });
        }
        let mut terms = Vec::with_capacity(self.terms.len());
        for (i, term) in self.terms.into_iter().enumerate() {
            let mut seen = std::collections::BTreeSet::new();
            for (mode, n) in &term.modes {
                if *n == 0 {
                    return Err(Error::Schema {
                        location: format!("terms[{i}].modes"),
                        reason: format!("zero occupation for mode {mode}"),
                    });
                }
                if !seen.insert(mode.clone()) {
                    return Err(Error::Schema {
                        location: format!("terms[{i}].modes"),
                        reason: format!("mode {mode} listed twice"),
                    });
                }
            }
            terms.push((
                FockBasisState::from_counts(term.modes),
                C64::new(term.amp[0], term.amp[1]),
            ));
        }
        PhotonicState::from_terms(self.n_max, terms, self.success_probability)
    }
}

/// Gaussian temporal overlap between a wavepacket delayed by `t_d` and the
/// undelayed one, and the delayed packet's decomposition on
/// {e₀ (undelayed), e₁ (orthogonal complement)}.
pub fn wavepacket_decompose(t_d: f64, tau_c: f64) -> Result<(C64, [C64; 2])> {
    if tau_c <= 0.0 || !tau_c.is_finite() {
        return Err(Error::param(
            "tau_c",
            format!("must be positive, got {tau_c}"),
        ));
    }
    if t_d.is_nan() {
        return Err(Error::param("t_d", "is NaN"));
    }
    let x = t_d / tau_c;
    let gamma = (-0.5 * x * x).exp();
    let rest = (1.0 - gamma * gamma).max(0.0).sqrt();
    Ok((
        C64::new(gamma, 0.0),
        [C64::new(gamma, 0.0), C64::new(rest, 0.0)],
    ))
}
