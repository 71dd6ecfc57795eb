// Copyright 2026 Spinorbit Contributors
// SPDX-License-Identifier: Apache-2.0

//! Detection: coincidence probabilities, count sampling, and reduced qubit
//! density matrices.
//!
//! Detectors never resolve wavepacket indices and never see loss-reservoir
//! modes. By default they are bucket detectors that click on one or more
//! photons.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{ModeKey, PhotonicState, Pol, C64};
use crate::optics::jones::PolState;
use crate::tomography::linalg::{c, CMatrix};
use crate::tomography::settings::encode_pol;
use crate::tomography::{DensityMatrix, PolEncoding};

/// Which modes a detector accepts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModeFilter {
    pub path: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pol: Option<Pol>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oam: Option<i32>,
}

impl ModeFilter {
    pub fn path(path: &str) -> Self {
        ModeFilter {
            path: path.to_owned(),
            pol: None,
            oam: None,
        }
    }

    pub fn accepts(&self, mode: &ModeKey) -> bool {
        !mode.is_loss()
            && mode.path == self.path
            && self.pol.is_none_or(|p| p == mode.pol)
            && self.oam.is_none_or(|l| l == mode.oam)
    }

    /// Whether some mode could satisfy both filters.
    pub fn overlaps(&self, other: &ModeFilter) -> bool {
        fn differ<T: PartialEq>(a: Option<T>, b: Option<T>) -> bool {
            matches!((a, b), (Some(x), Some(y)) if x != y)
        }
        self.path == other.path && !differ(self.pol, other.pol) && !differ(self.oam, other.oam)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DetectorSpec {
    pub id: String,
    pub accepts: ModeFilter,
    /// `Some(n)`: photon-number resolving, requires exactly `n` photons.
    /// `None`: clicks on one or more.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resolve: Option<u32>,
}

impl DetectorSpec {
    pub fn bucket(id: &str, path: &str) -> Self {
        DetectorSpec {
            id: id.to_owned(),
            accepts: ModeFilter::path(path),
            resolve: None,
        }
    }

    pub fn with_oam(mut self, oam: i32) -> Self {
        self.accepts.oam = Some(oam);
        self
    }

    pub fn with_pol(mut self, pol: Pol) -> Self {
        self.accepts.pol = Some(pol);
        self
    }

    pub fn resolving(mut self, n: u32) -> Self {
        self.resolve = Some(n);
        self
    }

    fn fires(&self, n: u32) -> bool {
        match self.resolve {
            Some(k) => n == k,
            None => n >= 1,
        }
    }
}

impl fmt::Display for DetectorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}={}", self.id, self.accepts.path)?;
        if let Some(p) = self.accepts.pol {
            write!(f, ":{p}")?;
        }
        if let Some(l) = self.accepts.oam {
            write!(f, ":{l:+}")?;
        }
        if let Some(n) = self.resolve {
            write!(f, ":n{n}")?;
        }
        Ok(())
    }
}

impl FromStr for DetectorSpec {
    type Err = Error;

    /// `ID=path[:H|:V][:l][:nN]`, for example `D_A=kA`, `D1=a:H:+2` or
    /// `D=kA:n2`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = |why: &str| Error::Configuration(format!("detector `{s}`: {why}"));
        let (id, rest) = s.split_once('=').ok_or_else(|| bad("expected ID=path"))?;
        let mut parts = rest.split(':');
        let path = parts
            .next()
            .filter(|p| !p.is_empty())
            .ok_or_else(|| bad("missing path"))?;
        let mut det = DetectorSpec::bucket(id.trim(), path.trim());
        for part in parts {
            match part {
                "H" => det.accepts.pol = Some(Pol::H),
                "V" => det.accepts.pol = Some(Pol::V),
                p if p.starts_with('n') => {
                    det.resolve = Some(p[1..].parse().map_err(|_| bad("bad photon number"))?);
                }
                p => det.accepts.oam = Some(p.parse().map_err(|_| bad("bad qualifier"))?),
            }
        }
        Ok(det)
    }
}

/// Joint firing condition on a set of detectors.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoincidencePattern {
    detectors: Vec<DetectorSpec>,
}

impl CoincidencePattern {
    pub fn new(detectors: Vec<DetectorSpec>) -> Result<Self> {
        if detectors.is_empty() {
            return Err(Error::Configuration(
                "coincidence pattern has no detectors".into(),
            ));
        }
        for (i, a) in detectors.iter().enumerate() {
            for b in &detectors[i + 1..] {
                if a.accepts.overlaps(&b.accepts) {
                    return Err(Error::Configuration(format!(
                        "detectors `{}` and `{}` accept overlapping modes",
                        a.id, b.id
                    )));
                }
            }
        }
        Ok(CoincidencePattern { detectors })
    }

    pub fn detectors(&self) -> &[DetectorSpec] {
        &self.detectors
    }

    /// Short label such as `[D_A,D_B]`.
    pub fn label(&self) -> String {
        let ids: Vec<&str> = self.detectors.iter().map(|d| d.id.as_str()).collect();
        format!("[{}]", ids.join(","))
    }
}

impl FromStr for CoincidencePattern {
    type Err = Error;

    /// Comma-separated detector specs.
    fn from_str(s: &str) -> Result<Self> {
        let detectors = s
            .split(',')
            .filter(|p| !p.trim().is_empty())
            .map(str::parse)
            .collect::<Result<Vec<DetectorSpec>>>()?;
        Self::new(detectors)
    }
}

impl fmt::Display for CoincidencePattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.detectors.iter().map(ToString::to_string).collect();
        f.write_str(&parts.join(","))
    }
}

/// Probability that every detector in the pattern fires.
///
/// With `absolute = false` this is conditioned on surviving all earlier
/// post-selection; with `absolute = true` it is multiplied by the state's
/// success probability.
pub fn outcome_probability(
    state: &PhotonicState,
    pattern: &CoincidencePattern,
    absolute: bool,
) -> f64 {
    let mut total = 0.0;
    for (basis, amp) in state.terms() {
        let fires = pattern.detectors.iter().all(|d| {
            let n: u32 = basis
                .iter()
                .filter(|(m, _)| d.accepts.accepts(m))
                .map(|(_, n)| n)
                .sum();
            d.fires(n)
        });
        if fires {
            total += amp.norm_sqr();
        }
    }
    if absolute {
        total * state.success_probability()
    } else {
        total
    }
}

/// One row of a counts file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountRecord {
    pub setting: String,
    pub pattern: String,
    pub counts: u64,
    pub shots: u64,
    pub seed: u64,
}

impl CountRecord {
    pub fn new(setting: &str, pattern: &str, counts: u64, shots: u64, seed: u64) -> Self {
        CountRecord {
            setting: setting.to_owned(),
            pattern: pattern.to_owned(),
            counts,
            shots,
            seed,
        }
    }
}

/// Writes records as CSV with header `setting,pattern,counts,shots,seed`.
pub fn write_counts_csv<W: Write>(writer: W, records: &[CountRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in records {
        w.serialize(r)?;
    }
    if records.is_empty() {
        w.write_record(["setting", "pattern", "counts", "shots", "seed"])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_counts_csv<R: Read>(reader: R) -> Result<Vec<CountRecord>> {
    let mut r = csv::Reader::from_reader(reader);
    let headers = r.headers()?.clone();
    let expected = ["setting", "pattern", "counts", "shots", "seed"];
    if headers.iter().collect::<Vec<_>>() != expected {
        return Err(Error::Schema {
            location: "counts header".into(),
            reason: format!(
                "expected `{}`, got `{}`",
                expected.join(","),
                headers.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }
    let mut out = Vec::new();
    for (i, row) in r.deserialize().enumerate() {
        let rec: CountRecord = row.map_err(|e| Error::Schema {
            location: format!("counts row {}", i + 2),
            reason: e.to_string(),
        })?;
        if rec.counts > rec.shots {
            return Err(Error::Schema {
                location: format!("counts row {}", i + 2),
                reason: format!("counts {} exceed shots {}", rec.counts, rec.shots),
            });
        }
        out.push(rec);
    }
    if out.is_empty() {
        return Err(Error::Data("counts file has no records".into()));
    }
    Ok(out)
}

/// Multinomial draw of `shots` events over `probabilities`, with the
/// remainder `1 − Σp` as an undetected category that is not returned.
pub fn sample_multinomial(
    probabilities: &[f64],
    shots: u64,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<u64>> {
    let mut remaining_p = 1.0;
    for &p in probabilities {
        if p < 0.0 || !p.is_finite() {
            return Err(Error::Data(format!("invalid probability {p}")));
        }
        remaining_p -= p;
    }
    if remaining_p < -1e-9 {
        return Err(Error::Data(format!(
            "probabilities sum to {} > 1",
            1.0 - remaining_p
        )));
    }
    let mut left = shots;
    let mut mass = 1.0;
    let mut out = Vec::with_capacity(probabilities.len());
    for &p in probabilities {
        if left == 0 || mass <= 0.0 {
            out.push(0);
            continue;
        }
        let q = (p / mass).clamp(0.0, 1.0);
        let k = Binomial::new(left, q)
            .map_err(|e| Error::Data(e.to_string()))?
            .sample(rng);
        out.push(k);
        left -= k;
        mass -= p;
    }
    Ok(out)
}

/// Samples counts for labelled outcome probabilities of one setting.
pub fn sample_counts(
    setting: &str,
    probabilities: &[(String, f64)],
    shots: u64,
    seed: u64,
) -> Result<Vec<CountRecord>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_counts_with(setting, probabilities, shots, seed, &mut rng)
}

/// As [`sample_counts`], drawing from a caller-owned generator.
pub fn sample_counts_with(
    setting: &str,
    probabilities: &[(String, f64)],
    shots: u64,
    seed: u64,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<CountRecord>> {
    let p: Vec<f64> = probabilities.iter().map(|(_, p)| *p).collect();
    let counts = sample_multinomial(&p, shots, rng)?;
    Ok(probabilities
        .iter()
        .zip(counts)
        .map(|((label, _), n)| CountRecord::new(setting, label, n, shots, seed))
        .collect())
}

/// Assignment of a single photon's modes to a polarization ⊗ OAM register.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QubitMap {
    pub pol_encoding: PolEncoding,
    /// OAM values for computational 0 and 1.
    pub oam_values: [i32; 2],
    /// Restrict to one path; `None` accepts all non-loss paths.
    pub path: Option<String>,
}

impl Default for QubitMap {
    /// `R → 0`, `L → 1`; `+2 → 0`, `−2 → 1`.
    fn default() -> Self {
        QubitMap {
            pol_encoding: PolEncoding::Circular,
            oam_values: [2, -2],
            path: None,
        }
    }
}

/// Density matrix on the mapped subspace plus the population outside it.
#[derive(Debug, Clone)]
pub struct Reduced {
    pub rho: DensityMatrix,
    pub leakage: f64,
}

/// Per-environment amplitude vectors of a single photon, where the
/// environment is everything the register does not record (path and
/// wavepacket). Returns `(vectors, captured population)`.
fn register_vectors(
    state: &PhotonicState,
    path: Option<&str>,
    encoding: PolEncoding,
    oam_slots: &[i32],
    keep_pol: bool,
) -> Result<Vec<Vec<C64>>> {
    if state.photon_number() != 1 {
        return Err(Error::Domain(format!(
            "reduced density matrices need a single photon, state has {}",
            state.photon_number()
        )));
    }
    let pol_dim = if keep_pol { 2 } else { 1 };
    let dim = pol_dim * oam_slots.len();
    let mut env: BTreeMap<(String, u32, Option<Pol>), Vec<C64>> = BTreeMap::new();
    for (basis, amp) in state.terms() {
        let (mode, _) = basis.iter().next().expect("one photon");
        if mode.is_loss() || path.is_some_and(|p| p != mode.path) {
            continue;
        }
        let Some(slot) = oam_slots.iter().position(|&l| l == mode.oam) else {
            continue;
        };
        // Tracing polarization keeps it in the environment label.
        let key = (
            mode.path.clone(),
            mode.wavepacket,
            if keep_pol { None } else { Some(mode.pol) },
        );
        let v = env.entry(key).or_insert_with(|| vec![c(0.0, 0.0); dim]);
        if keep_pol {
            let mut hv = [c(0.0, 0.0); 2];
            hv[mode.pol.index()] = amp;
            let q = encode_pol(hv, encoding);
            v[slot] += q[0];
            v[oam_slots.len() + slot] += q[1];
        } else {
            v[slot] += amp;
        }
    }
    Ok(env.into_values().collect())
}

fn density_from_vectors(vectors: &[Vec<C64>], dim: usize) -> Result<(CMatrix, f64)> {
    let mut m = CMatrix::zeros(dim, dim);
    for v in vectors {
        for i in 0..dim {
            for j in 0..dim {
                m[(i, j)] += v[i] * v[j].conj();
            }
        }
    }
    let captured = m.trace().re;
    Ok((m, captured))
}

fn normalize(m: CMatrix, captured: f64) -> Result<DensityMatrix> {
    if captured <= 1e-300 {
        return Err(Error::Data("no population in the qubit subspace".into()));
    }
    DensityMatrix::new(m / c(captured, 0.0))
}

/// Polarization ⊗ OAM density matrix, basis order |00⟩, |01⟩, |10⟩, |11⟩
/// with the polarization qubit first.
pub fn reduced_two_qubit_dm(state: &PhotonicState, map: &QubitMap) -> Result<Reduced> {
    let vectors = register_vectors(
        state,
        map.path.as_deref(),
        map.pol_encoding,
        &map.oam_values,
        true,
    )?;
    // Vectors are stored (pol-major over slots): index pol*2 + oam.
    let (m, captured) = density_from_vectors(&vectors, 4)?;
    Ok(Reduced {
        leakage: (1.0 - captured).max(0.0),
        rho: normalize(m, captured)?,
    })
}

/// Polarization qubit with OAM, path and wavepacket traced out.
pub fn reduced_pol_dm(
    state: &PhotonicState,
    encoding: PolEncoding,
    path: Option<&str>,
) -> Result<Reduced> {
    if state.photon_number() != 1 {
        return Err(Error::Domain(
            "reduced density matrices need a single photon".into(),
        ));
    }
    let mut env: BTreeMap<(String, i32, u32), [C64; 2]> = BTreeMap::new();
    for (basis, amp) in state.terms() {
        let (mode, _) = basis.iter().next().expect("one photon");
        if mode.is_loss() || path.is_some_and(|p| p != mode.path) {
            continue;
        }
        env.entry((mode.path.clone(), mode.oam, mode.wavepacket))
            .or_insert([c(0.0, 0.0); 2])[mode.pol.index()] += amp;
    }
    let vectors: Vec<Vec<C64>> = env
        .into_values()
        .map(|hv| encode_pol(hv, encoding).to_vec())
        .collect();
    let (m, captured) = density_from_vectors(&vectors, 2)?;
    Ok(Reduced {
        leakage: (1.0 - captured).max(0.0),
        rho: normalize(m, captured)?,
    })
}

/// OAM qubit on `oam_values` with polarization, path and wavepacket traced out.
pub fn reduced_oam_dm(
    state: &PhotonicState,
    oam_values: [i32; 2],
    path: Option<&str>,
) -> Result<Reduced> {
    let vectors = register_vectors(state, path, PolEncoding::Linear, &oam_values, false)?;
    let (m, captured) = density_from_vectors(&vectors, 2)?;
    Ok(Reduced {
        leakage: (1.0 - captured).max(0.0),
        rho: normalize(m, captured)?,
    })
}

/// Computational-basis vector of a polarization state under an encoding.
pub fn pol_qubit(state: PolState, encoding: PolEncoding) -> [C64; 2] {
    encode_pol(state.jones_vector(), encoding)
}

/// Distinct detector ids across patterns, for reporting.
pub fn detector_ids(patterns: &[CoincidencePattern]) -> BTreeSet<String> {
    patterns
        .iter()
        .flat_map(|p| p.detectors.iter().map(|d| d.id.clone()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optics::{LinearElement, QPlateParams};
    use crate::tomography::concurrence;
    use approx::assert_abs_diff_eq;

    fn h_photon() -> PhotonicState {
        PhotonicState::from_modes(4, &[ModeKey::new("a", Pol::H, 0, 0)]).unwrap()
    }

    #[test]
    fn overlapping_detectors_rejected() {
        let err = "D_A=kA,D_B=kA".parse::<CoincidencePattern>().unwrap_err();
        assert!(matches!(err, Error::Configuration(_)));
        assert!("D_A=kA:H,D_B=kA:V".parse::<CoincidencePattern>().is_ok());
        assert!("D_A=kA:+2,D_B=kA:-2".parse::<CoincidencePattern>().is_ok());
    }

    #[test]
    fn detector_round_trip() {
        let d: DetectorSpec = "D1=a:H:+2:n2".parse().unwrap();
        assert_eq!(d.to_string(), "D1=a:H:+2:n2");
        assert_eq!(d.resolve, Some(2));
    }

    #[test]
    fn absolute_vs_conditional() {
        let s = LinearElement::polarizer(PolState::D, "a").apply(&h_photon());
        let p: CoincidencePattern = "D=a".parse().unwrap();
        assert_abs_diff_eq!(outcome_probability(&s, &p, false), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(outcome_probability(&s, &p, true), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn loss_modes_are_invisible() {
        let qp = LinearElement::qplate(QPlateParams::measured(), "a").unwrap();
        let s = qp.apply(&h_photon());
        let p: CoincidencePattern = "D=a".parse().unwrap();
        assert_abs_diff_eq!(outcome_probability(&s, &p, false), 0.9, epsilon = 1e-12);
    }

    #[test]
    fn sampler_is_reproducible() {
        let probs = vec![("a".to_string(), 0.3), ("b".to_string(), 0.5)];
        let a = sample_counts("s", &probs, 10_000, 7).unwrap();
        let b = sample_counts("s", &probs, 10_000, 7).unwrap();
        assert_eq!(a, b);
        assert!(a[0].counts + a[1].counts <= 10_000);
        let certain = sample_counts("s", &[("x".into(), 1.0)], 1000, 1).unwrap();
        assert_eq!(certain[0].counts, 1000);
    }

    #[test]
    fn sampler_law_of_large_numbers() {
        let probs = vec![("a".to_string(), 0.5), ("b".to_string(), 0.5)];
        let n = 100_000u64;
        let r = sample_counts("s", &probs, n, 3).unwrap();
        let sigma = (n as f64 * 0.25).sqrt();
        assert!((r[0].counts as f64 - n as f64 / 2.0).abs() < 5.0 * sigma);
        assert_eq!(r[0].counts + r[1].counts, n);
    }

    #[test]
    fn sampler_rejects_bad_distributions() {
        assert!(sample_counts("s", &[("a".into(), 0.7), ("b".into(), 0.7)], 10, 0).is_err());
        assert!(sample_counts("s", &[("a".into(), -0.1)], 10, 0).is_err());
        assert!(sample_counts("s", &[("a".into(), f64::NAN)], 10, 0).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let recs = vec![CountRecord::new("HV|pm2", "H|+2", 5, 10, 1)];
        let mut buf = Vec::new();
        write_counts_csv(&mut buf, &recs).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("setting,pattern,counts,shots,seed\n"));
        assert_eq!(read_counts_csv(buf.as_slice()).unwrap(), recs);
        assert!(matches!(
            read_counts_csv("".as_bytes()),
            Err(Error::Schema { .. }) | Err(Error::Data(_)) | Err(Error::Csv(_))
        ));
    }

    #[test]
    fn product_state_dm() {
        let r = pol_qubit(PolState::R, PolEncoding::Linear);
        let s = PhotonicState::single_photon(
            4,
            &[
                (ModeKey::new("a", Pol::H, 2, 0), r[0]),
                (ModeKey::new("a", Pol::V, 2, 0), r[1]),
            ],
        )
        .unwrap();
        let red = reduced_two_qubit_dm(&s, &QubitMap::default()).unwrap();
        assert_abs_diff_eq!(red.rho.matrix()[(0, 0)].re, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(red.leakage, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn qplate_output_is_maximally_entangled() {
        let qp = LinearElement::qplate(QPlateParams::ideal(), "a").unwrap();
        let red = reduced_two_qubit_dm(&qp.apply(&h_photon()), &QubitMap::default()).unwrap();
        let m = red.rho.matrix();
        // |R,+2⟩ and |L,−2⟩ are |00⟩ and |11⟩.
        for (i, j) in [(0, 0), (0, 3), (3, 0), (3, 3)] {
            assert_abs_diff_eq!(m[(i, j)].norm(), 0.5, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(concurrence(&red.rho).unwrap(), 1.0, epsilon = 1e-9);
    }

    #[test]
    fn leakage_reports_unconverted_light() {
        let params = QPlateParams {
            eta: 0.85,
            ..QPlateParams::ideal()
        };
        let qp = LinearElement::qplate(params, "a").unwrap();
        let red = reduced_two_qubit_dm(&qp.apply(&h_photon()), &QubitMap::default()).unwrap();
        assert_abs_diff_eq!(red.leakage, 0.15, epsilon = 1e-12);
    }

    #[test]
    fn multi_photon_is_domain_error() {
        let s = PhotonicState::from_modes(
            4,
            &[
                ModeKey::new("a", Pol::H, 0, 0),
                ModeKey::new("a", Pol::V, 0, 0),
            ],
        )
        .unwrap();
        assert!(matches!(
            reduced_two_qubit_dm(&s, &QubitMap::default()),
            Err(Error::Domain(_))
        ));
    }
}
