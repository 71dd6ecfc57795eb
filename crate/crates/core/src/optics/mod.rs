// Copyright 2026 Spinorbit Contributors
// SPDX-License-Identifier: Apache-2.0

//! Passive optical elements as linear maps on creation operators.
//!
//! Each element sends `a†_in` to `Σ_k U_kj a†_out,k`; modes the element does
//! not address pass through unchanged. Elements that discard light (fibers,
//! polarizers, beam blocks, hologram projectors) are sub-unitary, and the
//! discarded norm becomes a drop in the state's success probability. The
//! q-plate's transmission loss goes instead into a dedicated loss-reservoir
//! mode on the same path, which detectors never see.
//!
//! Conventions: the PBS transmits H and reflects V with no reflection phase;
//! the 50/50 splitter maps `a†_in → (a†_a + a†_b)/√2`.

pub mod circuit;
pub mod jones;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{wavepacket_decompose, ModeImage, ModeKey, PhotonicState, Pol, C64};
use jones::{Jones, PolState, FRAC_1_SQRT_2};

pub use circuit::{Circuit, CircuitSpec, CircuitStep};

/// Tolerance on ‖U‖₂ ≤ 1.
pub const NORM_TOLERANCE: f64 = 1e-12;
/// Tolerance for flagging an element as lossless.
pub const UNITARY_TOLERANCE: f64 = 1e-10;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Q-plate parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QPlateParams {
    /// Topological charge; only q = 1 is modelled.
    pub q_charge: i32,
    /// Birefringent retardation, radians. Recorded; conversion is set by `eta`.
    pub delta: f64,
    /// Fraction of each photon converted to l ± 2.
    pub eta: f64,
    /// Power transmittance; the rest is routed to the loss reservoir.
    pub transmittance: f64,
}

impl QPlateParams {
    /// Tuned, lossless plate.
    pub fn ideal() -> Self {
        QPlateParams {
            q_charge: 1,
            delta: std::f64::consts::PI,
            eta: 1.0,
            transmittance: 1.0,
        }
    }

    /// Conversion efficiency and transmittance measured for the real device.
    pub fn measured() -> Self {
        QPlateParams {
            eta: 0.85,
            transmittance: 0.90,
            ..Self::ideal()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.q_charge != 1 {
            return Err(Error::param(
                "q_charge",
                format!("only q = 1 plates are modelled, got {}", self.q_charge),
            ));
        }
        if !(0.0..=1.0).contains(&self.eta) {
            return Err(Error::param(
                "eta",
                format!("{} is outside [0, 1]", self.eta),
            ));
        }
        if !(0.0..=1.0).contains(&self.transmittance) {
            return Err(Error::param(
                "transmittance",
                format!("{} is outside [0, 1]", self.transmittance),
            ));
        }
        if !self.delta.is_finite() {
            return Err(Error::param("delta", "must be finite"));
        }
        Ok(())
    }
}

impl Default for QPlateParams {
    fn default() -> Self {
        Self::ideal()
    }
}

/// Which analysis hologram is modelled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HologramVariant {
    /// Double fork: first orders shift l by ∓Δ.
    ForkPm2,
    DPlus,
    DMinus,
    #[serde(rename = "d_R")]
    DR,
    #[serde(rename = "d_L")]
    DL,
}

impl HologramVariant {
    /// Components (⟨+Δ|d⟩, ⟨−Δ|d⟩) of the analysed superposition state.
    /// `d_± = (|+⟩ ± |−⟩)/√2`, `d_L = (|+⟩ + i|−⟩)/√2`, `d_R = (|+⟩ − i|−⟩)/√2`.
    pub fn superposition(self) -> Option<[C64; 2]> {
        let s = FRAC_1_SQRT_2;
        match self {
            HologramVariant::ForkPm2 => None,
            HologramVariant::DPlus => Some([c(s, 0.0), c(s, 0.0)]),
            HologramVariant::DMinus => Some([c(s, 0.0), c(-s, 0.0)]),
            HologramVariant::DL => Some([c(s, 0.0), c(0.0, s)]),
            HologramVariant::DR => Some([c(s, 0.0), c(0.0, -s)]),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            HologramVariant::ForkPm2 => "fork_pm2",
            HologramVariant::DPlus => "d_plus",
            HologramVariant::DMinus => "d_minus",
            HologramVariant::DR => "d_R",
            HologramVariant::DL => "d_L",
        }
    }
}

impl FromStr for HologramVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "fork_pm2" => Ok(HologramVariant::ForkPm2),
            "d_plus" => Ok(HologramVariant::DPlus),
            "d_minus" => Ok(HologramVariant::DMinus),
            "d_R" => Ok(HologramVariant::DR),
            "d_L" => Ok(HologramVariant::DL),
            other => Err(format!(
                "unknown hologram variant `{other}` (expected fork_pm2, d_plus, d_minus, d_R or d_L)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HologramParams {
    pub delta_l_per_order: i32,
    pub first_order_efficiency: f64,
    pub variant: HologramVariant,
}

impl HologramParams {
    pub fn new(variant: HologramVariant) -> Self {
        HologramParams {
            delta_l_per_order: 2,
            first_order_efficiency: 0.10,
            variant,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=0.5).contains(&self.first_order_efficiency) {
            return Err(Error::param(
                "first_order_efficiency",
                format!("{} is outside [0, 0.5]", self.first_order_efficiency),
            ));
        }
        if self.delta_l_per_order <= 0 {
            return Err(Error::param("delta_l_per_order", "must be positive"));
        }
        Ok(())
    }
}

impl Default for HologramParams {
    fn default() -> Self {
        Self::new(HologramVariant::ForkPm2)
    }
}

/// Where a Jones element came from, kept for round-tripping to circuit files.
#[derive(Debug, Clone, PartialEq)]
enum JonesSource {
    QuarterWave { theta_deg: f64 },
    HalfWave { theta_deg: f64 },
    Polarizer { direction: PolState },
    Custom,
}

#[derive(Debug, Clone, PartialEq)]
enum Kind {
    Jones {
        path: String,
        matrix: Jones,
        source: JonesSource,
    },
    QPlate {
        path: String,
        params: QPlateParams,
    },
    Pbs {
        input: String,
        transmitted: String,
        reflected: String,
    },
    Hologram {
        params: HologramParams,
        input: String,
        plus: String,
        zero: String,
        minus: String,
    },
    SmfFilter {
        path: String,
    },
    Block {
        path: String,
    },
    BeamSplitter {
        input: String,
        a: String,
        b: String,
    },
    Delay {
        path: String,
        pol: Pol,
        overlap: f64,
    },
    OamPhase {
        path: String,
        phi: f64,
    },
    Matrix {
        in_modes: Vec<ModeKey>,
        out_modes: Vec<ModeKey>,
        matrix: DMatrix<C64>,
    },
}

/// A passive linear optical element.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearElement {
    name: String,
    kind: Kind,
}

/// Finite matrix form of an element restricted to a set of input modes.
#[derive(Debug, Clone)]
pub struct ModeMatrix {
    pub name: String,
    pub in_modes: Vec<ModeKey>,
    pub out_modes: Vec<ModeKey>,
    /// |out| × |in|, column j is the image of `in_modes[j]`.
    pub matrix: DMatrix<C64>,
}

impl ModeMatrix {
    pub fn spectral_norm(&self) -> f64 {
        if self.matrix.is_empty() {
            return 0.0;
        }
        self.matrix
            .clone()
            .singular_values()
            .iter()
            .cloned()
            .fold(0.0, f64::max)
    }

    pub fn is_physical(&self) -> bool {
        self.spectral_norm() <= 1.0 + NORM_TOLERANCE
    }

    /// U†U = I within tolerance (square or isometric).
    pub fn is_lossless(&self) -> bool {
        let gram = self.matrix.adjoint() * &self.matrix;
        let n = gram.nrows();
        (0..n).all(|i| {
            (0..n).all(|j| {
                let target = if i == j { 1.0 } else { 0.0 };
                (gram[(i, j)] - c(target, 0.0)).norm() <= UNITARY_TOLERANCE
            })
        })
    }
}

fn distinct(paths: &[&str]) -> Result<()> {
    let set: BTreeSet<&&str> = paths.iter().collect();
    if set.len() != paths.len() {
        return Err(Error::Configuration(format!(
            "element paths must be distinct, got {paths:?}"
        )));
    }
    Ok(())
}

impl LinearElement {
    fn new(name: &str, kind: Kind) -> Self {
        LinearElement {
            name: name.to_owned(),
            kind,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Arbitrary Jones matrix on one path; must satisfy ‖J‖₂ ≤ 1.
    pub fn jones(path: &str, matrix: Jones) -> Result<Self> {
        let e = Self::new(
            "jones",
            Kind::Jones {
                path: path.to_owned(),
                matrix,
                source: JonesSource::Custom,
            },
        );
        e.check_physical()?;
        Ok(e)
    }

    /// Quarter-wave plate, fast axis at `theta_deg` degrees.
    pub fn quarter_wave(theta_deg: f64, path: &str) -> Self {
        Self::new(
            "quarter_wave",
            Kind::Jones {
                path: path.to_owned(),
                matrix: jones::quarter_wave(theta_deg.to_radians()),
                source: JonesSource::QuarterWave { theta_deg },
            },
        )
    }

    /// Half-wave plate, fast axis at `theta_deg` degrees.
    pub fn half_wave(theta_deg: f64, path: &str) -> Self {
        Self::new(
            "half_wave",
            Kind::Jones {
                path: path.to_owned(),
                matrix: jones::half_wave(theta_deg.to_radians()),
                source: JonesSource::HalfWave { theta_deg },
            },
        )
    }

    /// Ideal polarizer passing `direction`.
    pub fn polarizer(direction: PolState, path: &str) -> Self {
        Self::new(
            "polarizer",
            Kind::Jones {
                path: path.to_owned(),
                matrix: jones::projector(direction),
                source: JonesSource::Polarizer { direction },
            },
        )
    }

    /// Q-plate: `a†_{L,l} → √T(√η a†_{R,l+2} − i√(1−η) a†_{L,l})`,
    /// `a†_{R,l} → √T(√η a†_{L,l−2} − i√(1−η) a†_{R,l})`, remainder `√(1−T)`
    /// to the loss reservoir.
    ///
    /// The `−i` on the unconverted part is the detuned-retardation phase
    /// (`η = sin²(δ/2)` up to a global phase). Without it the map is not
    /// unitary once neighbouring OAM orders are populated.
    pub fn qplate(params: QPlateParams, path: &str) -> Result<Self> {
        params.validate()?;
        Ok(Self::new(
            "qplate",
            Kind::QPlate {
                path: path.to_owned(),
                params,
            },
        ))
    }

    /// Polarizing beam splitter: H to `transmitted`, V to `reflected`.
    pub fn pbs(input: &str, transmitted: &str, reflected: &str) -> Result<Self> {
        distinct(&[input, transmitted, reflected])?;
        Ok(Self::new(
            "pbs",
            Kind::Pbs {
                input: input.to_owned(),
                transmitted: transmitted.to_owned(),
                reflected: reflected.to_owned(),
            },
        ))
    }

    /// Computer-generated hologram with three output orders.
    ///
    /// The double-fork variant sends `l` to `l − Δ` on `plus`, `l` on `zero`
    /// and `l + Δ` on `minus` with amplitudes √ε, √(1−2ε), √ε. The
    /// superposition variants project the ±Δ subspace onto `|d_x⟩` and emit it
    /// at l = 0 on `plus` with amplitude √ε; the zero order keeps √(1−ε).
    pub fn hologram(
        params: HologramParams,
        input: &str,
        plus: &str,
        zero: &str,
        minus: &str,
    ) -> Result<Self> {
        params.validate()?;
        distinct(&[input, plus, zero, minus])?;
        Ok(Self::new(
            "hologram",
            Kind::Hologram {
                params,
                input: input.to_owned(),
                plus: plus.to_owned(),
                zero: zero.to_owned(),
                minus: minus.to_owned(),
            },
        ))
    }

    /// Single-mode fiber: only l = 0 couples.
    pub fn smf_filter(path: &str) -> Self {
        Self::new(
            "smf_filter",
            Kind::SmfFilter {
                path: path.to_owned(),
            },
        )
    }

    /// Beam block: nothing on `path` survives.
    pub fn block(path: &str) -> Self {
        Self::new(
            "block",
            Kind::Block {
                path: path.to_owned(),
            },
        )
    }

    /// Balanced beam splitter fed on one port.
    pub fn beamsplitter_5050(input: &str, a: &str, b: &str) -> Result<Self> {
        distinct(&[input, a, b])?;
        Ok(Self::new(
            "beamsplitter",
            Kind::BeamSplitter {
                input: input.to_owned(),
                a: a.to_owned(),
                b: b.to_owned(),
            },
        ))
    }

    /// Temporal delay of one polarization, expressed on the two-mode
    /// wavepacket basis with the Gaussian overlap of [`wavepacket_decompose`].
    pub fn delay(t_d: f64, pol: Pol, path: &str, tau_c: f64) -> Result<Self> {
        let (gamma, _) = wavepacket_decompose(t_d, tau_c)?;
        Self::delay_with_overlap(gamma.re, pol, path)
    }

    /// Delay specified directly by the wavepacket overlap γ ∈ [0, 1]:
    /// `w₀ → γ w₀ + √(1−γ²) w₁`, `w₁ → −√(1−γ²) w₀ + γ w₁`.
    pub fn delay_with_overlap(overlap: f64, pol: Pol, path: &str) -> Result<Self> {
        if !(0.0..=1.0).contains(&overlap) {
            return Err(Error::param(
                "overlap",
                format!("{overlap} is outside [0, 1]"),
            ));
        }
        Ok(Self::new(
            "delay",
            Kind::Delay {
                path: path.to_owned(),
                pol,
                overlap,
            },
        ))
    }

    /// Relative phase φ between positive and negative OAM on a path:
    /// `a†_l → e^{±iφ/2} a†_l` for `l ≷ 0`.
    pub fn oam_phase(phi: f64, path: &str) -> Self {
        Self::new(
            "oam_phase",
            Kind::OamPhase {
                path: path.to_owned(),
                phi,
            },
        )
    }

    /// Explicit matrix on listed modes, `|out| × |in|`.
    pub fn matrix(
        in_modes: Vec<ModeKey>,
        out_modes: Vec<ModeKey>,
        matrix: DMatrix<C64>,
    ) -> Result<Self> {
        if matrix.nrows() != out_modes.len() || matrix.ncols() != in_modes.len() {
            return Err(Error::Configuration(format!(
                "matrix is {}×{} but {} output and {} input modes were given",
                matrix.nrows(),
                matrix.ncols(),
                out_modes.len(),
                in_modes.len()
            )));
        }
        let unique: BTreeSet<&ModeKey> = in_modes.iter().collect();
        if unique.len() != in_modes.len() {
            return Err(Error::Configuration("input modes must be distinct".into()));
        }
        let e = Self::new(
            "matrix",
            Kind::Matrix {
                in_modes,
                out_modes,
                matrix,
            },
        );
        e.check_physical()?;
        Ok(e)
    }

    fn check_physical(&self) -> Result<()> {
        let probe: Vec<ModeKey> = match &self.kind {
            Kind::Matrix { in_modes, .. } => in_modes.clone(),
            _ => {
                let path = self.input_paths()[0].clone();
                Pol::BOTH
                    .iter()
                    .map(|&p| ModeKey::new(path.clone(), p, 0, 0))
                    .collect()
            }
        };
        let m = self.restrict(&probe);
        let norm = m.spectral_norm();
        if norm > 1.0 + NORM_TOLERANCE {
            return Err(Error::Domain(format!(
                "element `{}` is not passive: spectral norm {norm}",
                self.name
            )));
        }
        Ok(())
    }

    /// Paths whose modes this element acts on.
    pub fn input_paths(&self) -> Vec<String> {
        match &self.kind {
            Kind::Jones { path, .. }
            | Kind::QPlate { path, .. }
            | Kind::SmfFilter { path }
            | Kind::Block { path }
            | Kind::Delay { path, .. }
            | Kind::OamPhase { path, .. } => vec![path.clone()],
            Kind::Pbs { input, .. }
            | Kind::Hologram { input, .. }
            | Kind::BeamSplitter { input, .. } => {
                vec![input.clone()]
            }
            Kind::Matrix { in_modes, .. } => {
                let set: BTreeSet<String> = in_modes.iter().map(|m| m.path.clone()).collect();
                set.into_iter().collect()
            }
        }
    }

    /// Paths this element can put light on.
    pub fn output_paths(&self) -> Vec<String> {
        match &self.kind {
            Kind::Jones { path, .. }
            | Kind::SmfFilter { path }
            | Kind::Block { path }
            | Kind::Delay { path, .. }
            | Kind::OamPhase { path, .. } => vec![path.clone()],
            Kind::QPlate { path, .. } => {
                vec![path.clone(), format!("{path}{}", crate::fock::LOSS_SUFFIX)]
            }
            Kind::Pbs {
                transmitted,
                reflected,
                ..
            } => vec![transmitted.clone(), reflected.clone()],
            Kind::Hologram {
                plus, zero, minus, ..
            } => vec![plus.clone(), zero.clone(), minus.clone()],
            Kind::BeamSplitter { a, b, .. } => vec![a.clone(), b.clone()],
            Kind::Matrix { out_modes, .. } => {
                let set: BTreeSet<String> = out_modes.iter().map(|m| m.path.clone()).collect();
                set.into_iter().collect()
            }
        }
    }

    /// Image of `a†_mode`; `None` for modes the element does not address.
    pub fn image(&self, mode: &ModeKey) -> ModeImage {
        match &self.kind {
            Kind::Jones { path, matrix, .. } => {
                if &mode.path != path {
                    return None;
                }
                let col = mode.pol.index();
                Some(
                    Pol::BOTH
                        .iter()
                        .map(|&p| (mode.with_pol(p), matrix[p.index()][col]))
                        .filter(|(_, u)| u.norm() > 0.0)
                        .collect(),
                )
            }
            Kind::QPlate { path, params } => {
                (&mode.path == path).then(|| qplate_image(mode, params))
            }
            Kind::Pbs {
                input,
                transmitted,
                reflected,
            } => (&mode.path == input).then(|| {
                let out = match mode.pol {
                    Pol::H => transmitted,
                    Pol::V => reflected,
                };
                vec![(mode.on_path(out), c(1.0, 0.0))]
            }),
            Kind::Hologram {
                params,
                input,
                plus,
                zero,
                minus,
            } => (&mode.path == input).then(|| hologram_image(mode, params, plus, zero, minus)),
            Kind::SmfFilter { path } => (&mode.path == path && mode.oam != 0).then(Vec::new),
            Kind::Block { path } => (&mode.path == path).then(Vec::new),
            Kind::BeamSplitter { input, a, b } => (&mode.path == input).then(|| {
                vec![
                    (mode.on_path(a), c(FRAC_1_SQRT_2, 0.0)),
                    (mode.on_path(b), c(FRAC_1_SQRT_2, 0.0)),
                ]
            }),
            Kind::Delay { path, pol, overlap } => {
                if &mode.path != path || mode.pol != *pol || mode.wavepacket > 1 {
                    return None;
                }
                let rest = (1.0 - overlap * overlap).max(0.0).sqrt();
                let (w0, w1) = if mode.wavepacket == 0 {
                    (*overlap, rest)
                } else {
                    (-rest, *overlap)
                };
                Some(
                    [
                        (mode.with_wavepacket(0), c(w0, 0.0)),
                        (mode.with_wavepacket(1), c(w1, 0.0)),
                    ]
                    .into_iter()
                    .filter(|(_, u)| u.norm() > 0.0)
                    .collect(),
                )
            }
            Kind::OamPhase { path, phi } => {
                if &mode.path != path || mode.oam == 0 {
                    return None;
                }
                let sign = f64::from(mode.oam.signum());
                Some(vec![(mode.clone(), C64::from_polar(1.0, sign * phi / 2.0))])
            }
            Kind::Matrix {
                in_modes,
                out_modes,
                matrix,
            } => {
                let j = in_modes.iter().position(|m| m == mode)?;
                Some(
                    out_modes
                        .iter()
                        .enumerate()
                        .map(|(k, m)| (m.clone(), matrix[(k, j)]))
                        .filter(|(_, u)| u.norm() > 0.0)
                        .collect(),
                )
            }
        }
    }

    /// Matrix of this element on the given input modes. Output modes are the
    /// sorted union of all images.
    pub fn restrict(&self, in_modes: &[ModeKey]) -> ModeMatrix {
        let images: Vec<Vec<(ModeKey, C64)>> = in_modes
            .iter()
            .map(|m| {
                self.image(m)
                    .unwrap_or_else(|| vec![(m.clone(), c(1.0, 0.0))])
            })
            .collect();
        let out: BTreeSet<ModeKey> = images
            .iter()
            .flat_map(|img| img.iter().map(|(m, _)| m.clone()))
            .collect();
        let out_modes: Vec<ModeKey> = out.into_iter().collect();
        let mut matrix = DMatrix::from_element(out_modes.len(), in_modes.len(), c(0.0, 0.0));
        for (j, img) in images.iter().enumerate() {
            for (m, u) in img {
                let k = out_modes.binary_search(m).expect("output mode collected");
                matrix[(k, j)] += u;
            }
        }
        ModeMatrix {
            name: self.name.clone(),
            in_modes: in_modes.to_vec(),
            out_modes,
            matrix,
        }
    }

    /// Applies the element to a state.
    pub fn apply(&self, state: &PhotonicState) -> PhotonicState {
        state.substitute(|m| self.image(m))
    }

    /// Circuit-file step that rebuilds this element.
    pub fn to_step(&self) -> CircuitStep {
        use serde_json::json;
        let (params, paths) = match &self.kind {
            Kind::Jones {
                path,
                matrix,
                source,
            } => {
                let params = match source {
                    JonesSource::QuarterWave { theta_deg }
                    | JonesSource::HalfWave { theta_deg } => {
                        json!({ "theta_deg": theta_deg })
                    }
                    JonesSource::Polarizer { direction } => json!({ "direction": direction }),
                    JonesSource::Custom => json!({
                        "matrix": matrix
                            .iter()
                            .map(|row| row.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>())
                            .collect::<Vec<_>>()
                    }),
                };
                (params, vec![path.clone()])
            }
            Kind::QPlate { path, params } => (
                serde_json::to_value(params).unwrap_or_default(),
                vec![path.clone()],
            ),
            Kind::Pbs {
                input,
                transmitted,
                reflected,
            } => (
                json!({}),
                vec![input.clone(), transmitted.clone(), reflected.clone()],
            ),
            Kind::Hologram {
                params,
                input,
                plus,
                zero,
                minus,
            } => (
                serde_json::to_value(params).unwrap_or_default(),
                vec![input.clone(), plus.clone(), zero.clone(), minus.clone()],
            ),
            Kind::SmfFilter { path } | Kind::Block { path } => (json!({}), vec![path.clone()]),
            Kind::BeamSplitter { input, a, b } => {
                (json!({}), vec![input.clone(), a.clone(), b.clone()])
            }
            Kind::Delay { path, pol, overlap } => (
                json!({ "pol": pol, "overlap": overlap }),
                vec![path.clone()],
            ),
            Kind::OamPhase { path, phi } => (json!({ "phi": phi }), vec![path.clone()]),
            Kind::Matrix {
                in_modes,
                out_modes,
                matrix,
            } => {
                let rows: Vec<Vec<[f64; 2]>> = (0..matrix.nrows())
                    .map(|i| {
                        (0..matrix.ncols())
                            .map(|j| [matrix[(i, j)].re, matrix[(i, j)].im])
                            .collect()
                    })
                    .collect();
                (
                    json!({ "in_modes": in_modes, "out_modes": out_modes, "matrix": rows }),
                    Vec::new(),
                )
            }
        };
        CircuitStep {
            element: self.name.clone(),
            params: match params {
                serde_json::Value::Object(map) => map,
                _ => serde_json::Map::new(),
            },
            paths,
        }
    }
}

impl fmt::Display for LinearElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{:?}", self.name, self.input_paths())
    }
}

fn qplate_image(mode: &ModeKey, params: &QPlateParams) -> Vec<(ModeKey, C64)> {
    // H/V closed form of the circular-basis rule:
    //   H,l → (√(Tη)/2)[H,l+2 − iV,l+2 + H,l−2 + iV,l−2] − i√(T(1−η)) H,l
    //   V,l → (√(Tη)/2)[−iH,l+2 − V,l+2 + iH,l−2 − V,l−2] − i√(T(1−η)) V,l
    let t = params.transmittance.sqrt();
    let conv = 0.5 * t * params.eta.sqrt();
    let keep = t * (1.0 - params.eta).sqrt();
    let lost = (1.0 - params.transmittance).sqrt();
    let up = mode.with_oam(mode.oam + 2);
    let down = mode.with_oam(mode.oam - 2);
    let mut out = match mode.pol {
        Pol::H => vec![
            (up.with_pol(Pol::H), c(conv, 0.0)),
            (up.with_pol(Pol::V), c(0.0, -conv)),
            (down.with_pol(Pol::H), c(conv, 0.0)),
            (down.with_pol(Pol::V), c(0.0, conv)),
        ],
        Pol::V => vec![
            (up.with_pol(Pol::H), c(0.0, -conv)),
            (up.with_pol(Pol::V), c(-conv, 0.0)),
            (down.with_pol(Pol::H), c(0.0, conv)),
            (down.with_pol(Pol::V), c(-conv, 0.0)),
        ],
    };
    out.push((mode.clone(), c(0.0, -keep)));
    out.push((mode.loss_mode(), c(lost, 0.0)));
    out.retain(|(_, u)| u.norm() > 0.0);
    out
}

fn hologram_image(
    mode: &ModeKey,
    params: &HologramParams,
    plus: &str,
    zero: &str,
    minus: &str,
) -> Vec<(ModeKey, C64)> {
    let eps = params.first_order_efficiency;
    let dl = params.delta_l_per_order;
    let mut out = match params.variant.superposition() {
        None => vec![
            (
                mode.on_path(plus).with_oam(mode.oam - dl),
                c(eps.sqrt(), 0.0),
            ),
            (mode.on_path(zero), c((1.0 - 2.0 * eps).sqrt(), 0.0)),
            (
                mode.on_path(minus).with_oam(mode.oam + dl),
                c(eps.sqrt(), 0.0),
            ),
        ],
        Some(d) => {
            let mut v = vec![(mode.on_path(zero), c((1.0 - eps).sqrt(), 0.0))];
            let component = if mode.oam == dl {
                Some(d[0].conj())
            } else if mode.oam == -dl {
                Some(d[1].conj())
            } else {
                None
            };
            if let Some(amp) = component {
                v.push((mode.on_path(plus).with_oam(0), amp * eps.sqrt()));
            }
            v
        }
    };
    out.retain(|(_, u)| u.norm() > 0.0);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::FockBasisState;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    const N: usize = 4;

    fn photon(path: &str, pol: PolState, oam: i32) -> PhotonicState {
        let v = pol.jones_vector();
        PhotonicState::single_photon(
            N,
            &[
                (ModeKey::new(path, Pol::H, oam, 0), v[0]),
                (ModeKey::new(path, Pol::V, oam, 0), v[1]),
            ],
        )
        .unwrap()
    }

    /// Probability that the single photon sits in polarization `pol` with OAM `oam` on `path`.
    fn weight(state: &PhotonicState, path: &str, pol: PolState, oam: i32) -> f64 {
        let e = pol.jones_vector();
        let amp: C64 = Pol::BOTH
            .iter()
            .map(|&p| {
                let b = FockBasisState::single(ModeKey::new(path, p, oam, 0));
                e[p.index()].conj() * state.amplitude(&b)
            })
            .sum();
        amp.norm_sqr()
    }

    #[test]
    fn ideal_qplate_left_to_right_plus_two() {
        let qp = LinearElement::qplate(QPlateParams::ideal(), "a").unwrap();
        let out = qp.apply(&photon("a", PolState::L, 0));
        assert_abs_diff_eq!(weight(&out, "a", PolState::R, 2), 1.0, epsilon = 1e-12);
        let out = qp.apply(&photon("a", PolState::R, 0));
        assert_abs_diff_eq!(weight(&out, "a", PolState::L, -2), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn ideal_qplate_entangles_h_and_v() {
        let qp = LinearElement::qplate(QPlateParams::ideal(), "a").unwrap();
        let s = FRAC_1_SQRT_2;
        let l = PolState::L.jones_vector();
        let r = PolState::R.jones_vector();
        for (input, sign) in [(PolState::H, 1.0), (PolState::V, -1.0)] {
            let out = qp.apply(&photon("a", input, 0));
            let mut terms = Vec::new();
            for p in Pol::BOTH {
                terms.push((ModeKey::new("a", p, -2, 0), l[p.index()] * s));
                terms.push((ModeKey::new("a", p, 2, 0), r[p.index()] * s * sign));
            }
            let expected = PhotonicState::single_photon(N, &terms).unwrap();
            assert_abs_diff_eq!(
                out.inner_product(&expected).norm_sqr(),
                1.0,
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn partial_conversion_split() {
        let params = QPlateParams {
            eta: 0.85,
            ..QPlateParams::ideal()
        };
        let out = LinearElement::qplate(params, "a")
            .unwrap()
            .apply(&photon("a", PolState::L, 0));
        assert_abs_diff_eq!(weight(&out, "a", PolState::R, 2), 0.85, epsilon = 1e-12);
        assert_abs_diff_eq!(weight(&out, "a", PolState::L, 0), 0.15, epsilon = 1e-12);
        assert_abs_diff_eq!(out.success_probability(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn transmission_loss_goes_to_reservoir() {
        let out = LinearElement::qplate(QPlateParams::measured(), "a")
            .unwrap()
            .apply(&photon("a", PolState::H, 0));
        let lost: f64 = out
            .terms()
            .filter(|(b, _)| b.iter().any(|(m, _)| m.is_loss()))
            .map(|(_, a)| a.norm_sqr())
            .sum();
        assert_abs_diff_eq!(lost, 0.10, epsilon = 1e-12);
        assert_abs_diff_eq!(out.success_probability(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn qplate_twice_is_identity_on_every_l() {
        let qp = LinearElement::qplate(QPlateParams::ideal(), "a").unwrap();
        for l in -4..=4 {
            for pol in Pol::BOTH {
                let m = ModeKey::new("a", pol, l, 0);
                let s = PhotonicState::from_modes(N, &[m]).unwrap();
                let twice = qp.apply(&qp.apply(&s));
                assert_abs_diff_eq!(twice.inner_product(&s).re, 1.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn qplate_matches_circular_definition() {
        // Circular-basis rule conjugated by the H/V ↔ L/R change of basis.
        let params = QPlateParams {
            eta: 0.7,
            transmittance: 0.8,
            ..QPlateParams::ideal()
        };
        let qp = LinearElement::qplate(params, "a").unwrap();
        let l_vec = PolState::L.jones_vector();
        let r_vec = PolState::R.jones_vector();
        // a†_H = (a†_L + a†_R)/√2, a†_V = −i(a†_L − a†_R)/√2
        let s = FRAC_1_SQRT_2;
        let to_circ = |pol: Pol| -> [(bool, C64); 2] {
            match pol {
                Pol::H => [(true, c(s, 0.0)), (false, c(s, 0.0))],
                Pol::V => [(true, c(0.0, -s)), (false, c(0.0, s))],
            }
        };
        for l in -2..=2 {
            for pol in Pol::BOTH {
                let input = ModeKey::new("a", pol, l, 0);
                let mut expected: std::collections::BTreeMap<ModeKey, C64> = Default::default();
                for (is_left, coeff) in to_circ(pol) {
                    let t = params.transmittance.sqrt();
                    let (conv_vec, conv_l, keep_vec) = if is_left {
                        (r_vec, l + 2, l_vec)
                    } else {
                        (l_vec, l - 2, r_vec)
                    };
                    for p in Pol::BOTH {
                        let k = p.index();
                        *expected.entry(ModeKey::new("a", p, conv_l, 0)).or_default() +=
                            coeff * t * params.eta.sqrt() * conv_vec[k];
                        *expected.entry(ModeKey::new("a", p, l, 0)).or_default() +=
                            coeff * t * c(0.0, -(1.0 - params.eta).sqrt()) * keep_vec[k];
                        *expected.entry(ModeKey::new("a~loss", p, l, 0)).or_default() +=
                            coeff * (1.0 - params.transmittance).sqrt() * keep_vec[k];
                    }
                }
                let image: std::collections::BTreeMap<ModeKey, C64> =
                    qp.image(&input).unwrap().into_iter().collect();
                for (m, z) in &expected {
                    let got = image.get(m).copied().unwrap_or_default();
                    assert!((got - z).norm() < 1e-12, "{m}: {got} vs {z}");
                }
                for (m, z) in &image {
                    assert!(expected.contains_key(m) || z.norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn pbs_routes_by_polarization() {
        let pbs = LinearElement::pbs("in", "t", "r").unwrap();
        let out = pbs.apply(&photon("in", PolState::H, 0));
        assert_abs_diff_eq!(weight(&out, "t", PolState::H, 0), 1.0);
        let out = pbs.apply(&photon("in", PolState::V, 0));
        assert_abs_diff_eq!(weight(&out, "r", PolState::V, 0), 1.0);
        let out = pbs.apply(&photon("in", PolState::D, 0));
        assert_abs_diff_eq!(weight(&out, "t", PolState::H, 0), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(weight(&out, "r", PolState::V, 0), 0.5, epsilon = 1e-15);
        assert!(LinearElement::pbs("x", "x", "y").is_err());
    }

    #[test]
    fn polarizer_post_selects() {
        let pol = LinearElement::polarizer(PolState::H, "a");
        let out = pol.apply(&photon("a", PolState::H, 0));
        assert_abs_diff_eq!(out.success_probability(), 1.0, epsilon = 1e-15);
        let out = pol.apply(&photon("a", PolState::V, 0));
        assert!(out.is_absorbed());
        assert_eq!(out.photon_number(), 0);
    }

    #[test]
    fn fork_hologram_orders() {
        let eps = 0.10;
        let holo = LinearElement::hologram(HologramParams::default(), "in", "p", "z", "m").unwrap();
        let out = holo.apply(&photon("in", PolState::H, 2));
        assert_abs_diff_eq!(weight(&out, "p", PolState::H, 0), eps, epsilon = 1e-12);
        let out = holo.apply(&photon("in", PolState::H, 0));
        assert_abs_diff_eq!(
            weight(&out, "z", PolState::H, 0),
            1.0 - 2.0 * eps,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(weight(&out, "p", PolState::H, 0), 0.0);
        assert_abs_diff_eq!(weight(&out, "m", PolState::H, 0), 0.0);
    }

    #[test]
    fn superposition_hologram_projects() {
        let holo = LinearElement::hologram(
            HologramParams::new(HologramVariant::DPlus),
            "in",
            "p",
            "z",
            "m",
        )
        .unwrap();
        let s = FRAC_1_SQRT_2;
        for (sign, expected) in [(1.0, 0.10), (-1.0, 0.0)] {
            let input = PhotonicState::single_photon(
                N,
                &[
                    (ModeKey::new("in", Pol::H, 2, 0), c(s, 0.0)),
                    (ModeKey::new("in", Pol::H, -2, 0), c(sign * s, 0.0)),
                ],
            )
            .unwrap();
            let out = holo.apply(&input);
            assert_abs_diff_eq!(weight(&out, "p", PolState::H, 0), expected, epsilon = 1e-12);
        }
    }

    #[test]
    fn smf_filter_keeps_only_l0() {
        let f = LinearElement::smf_filter("a");
        assert_abs_diff_eq!(
            f.apply(&photon("a", PolState::H, 0)).success_probability(),
            1.0
        );
        assert!(f.apply(&photon("a", PolState::H, 2)).is_absorbed());
        let params = QPlateParams {
            eta: 0.85,
            ..QPlateParams::ideal()
        };
        let qp = LinearElement::qplate(params, "a").unwrap();
        let out = f.apply(&qp.apply(&photon("a", PolState::L, 0)));
        assert_abs_diff_eq!(out.success_probability(), 0.15, epsilon = 1e-12);
        assert_abs_diff_eq!(weight(&out, "a", PolState::L, 0), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn delay_limits() {
        let d0 = LinearElement::delay(0.0, Pol::V, "a", 0.35).unwrap();
        let s = PhotonicState::from_modes(N, &[ModeKey::new("a", Pol::V, 0, 0)]).unwrap();
        assert_abs_diff_eq!(d0.apply(&s).inner_product(&s).re, 1.0);
        let dinf = LinearElement::delay(100.0, Pol::V, "a", 0.35).unwrap();
        let moved = PhotonicState::from_modes(N, &[ModeKey::new("a", Pol::V, 0, 1)]).unwrap();
        assert_abs_diff_eq!(dinf.apply(&s).inner_product(&moved).re, 1.0);
        assert!(LinearElement::delay(0.1, Pol::V, "a", 0.0).is_err());
    }

    #[test]
    fn matrix_element_rejects_gain() {
        let m = DMatrix::from_element(1, 1, c(1.5, 0.0));
        let e = LinearElement::matrix(
            vec![ModeKey::new("a", Pol::H, 0, 0)],
            vec![ModeKey::new("b", Pol::H, 0, 0)],
            m,
        );
        assert!(e.is_err());
    }

    fn all_elements() -> Vec<LinearElement> {
        let params = QPlateParams {
            eta: 0.8,
            transmittance: 0.9,
            ..QPlateParams::ideal()
        };
        let mut v = vec![
            LinearElement::qplate(QPlateParams::ideal(), "a").unwrap(),
            LinearElement::qplate(params, "a").unwrap(),
            LinearElement::quarter_wave(30.0, "a"),
            LinearElement::half_wave(10.0, "a"),
            LinearElement::polarizer(PolState::D, "a"),
            LinearElement::pbs("a", "t", "r").unwrap(),
            LinearElement::smf_filter("a"),
            LinearElement::block("a"),
            LinearElement::beamsplitter_5050("a", "x", "y").unwrap(),
            LinearElement::delay_with_overlap(0.3, Pol::H, "a").unwrap(),
            LinearElement::oam_phase(0.7, "a"),
        ];
        for variant in [
            HologramVariant::ForkPm2,
            HologramVariant::DPlus,
            HologramVariant::DMinus,
            HologramVariant::DR,
            HologramVariant::DL,
        ] {
            v.push(
                LinearElement::hologram(HologramParams::new(variant), "a", "p", "z", "m").unwrap(),
            );
        }
        v
    }

    fn probe_modes() -> Vec<ModeKey> {
        let mut modes = Vec::new();
        for pol in Pol::BOTH {
            for l in [-4, -2, 0, 2, 4] {
                for w in 0..2 {
                    modes.push(ModeKey::new("a", pol, l, w));
                }
            }
        }
        modes
    }

    #[test]
    fn every_element_is_passive() {
        let modes = probe_modes();
        for e in all_elements() {
            let m = e.restrict(&modes);
            assert!(
                m.is_physical(),
                "{} has norm {}",
                e.name(),
                m.spectral_norm()
            );
        }
    }

    #[test]
    fn lossless_elements_are_unitary() {
        let modes = probe_modes();
        for e in all_elements() {
            let lossless = matches!(
                e.name(),
                "quarter_wave" | "half_wave" | "pbs" | "beamsplitter" | "delay" | "oam_phase"
            ) || (e.name() == "qplate");
            if lossless {
                assert!(e.restrict(&modes).is_lossless(), "{e}");
            }
        }
        assert!(!LinearElement::smf_filter("a")
            .restrict(&modes)
            .is_lossless());
    }

    proptest! {
        #[test]
        fn step_round_trip_rebuilds_element(idx in 0usize..16) {
            let e = all_elements()[idx].clone();
            let rebuilt = e.to_step().build(0).unwrap();
            let modes = probe_modes();
            let a = e.restrict(&modes).matrix;
            let b = rebuilt.restrict(&modes).matrix;
            prop_assert!((a - b).norm() < 1e-12);
        }
    }
}
