// Copyright 2026 Spinorbit Contributors
// SPDX-License-Identifier: Apache-2.0

//! Canned experiments: single-photon entanglement, the two transferrers and
//! their composition, and the two-photon coalescence measurements.
//!
//! Every scenario has an exact path (`shots = None`), which reports
//! probabilities and metrics computed directly from the simulated state, and
//! a sampled path, which draws counts and reconstructs from them.
//!
//! Noise is injected as classical ensembles over circuits:
//! - depolarizing `p`: Pauli Jones errors on the polarization with weights
//!   `(1 − 3p/4, p/4, p/4, p/4)`, right after the last q-plate of a
//!   single-photon scenario;
//! - OAM dephasing `q`: a relative phase `±φ₀` between positive and negative
//!   OAM with `cos φ₀ = 1 − q`, after the first q-plate (before the last one
//!   when the qubit is transferred back to polarization);
//! - distinguishability `ε`: the delayed photon's overlap is scaled by
//!   `√(1 − ε)`.
//!
//! The two-photon scenarios do not use `depolarizing_p`.

mod presets;
mod single;
mod two_photon;

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::constants::default_coherence_time_ps;
use crate::error::{Error, Result};
use crate::fock::{PhotonicState, C64};
use crate::measurement::CountRecord;
use crate::optics::jones::{self, PolState};
use crate::optics::{Circuit, CircuitSpec, LinearElement, QPlateParams};
use crate::tomography::MatrixDoc;

pub use presets::{bisect, paper_2009, preset_target, ERASURE_DIP_TARGET};
pub use single::{
    run_double_transfer, run_entanglement_gen, run_transferrer_l_to_pi, run_transferrer_pi_to_l,
    QubitInput,
};
pub use two_photon::{
    biphoton_input, run_coalescence_enhancement, run_erasure_correlations, run_hom_scan,
    uniform_scan, ErasureBasis,
};

/// How the unconverted fraction of a non-ideal q-plate is modelled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QPlateModel {
    /// Converted and unconverted amplitudes add coherently.
    #[default]
    Coherent,
    /// Each photon is either fully converted (weight η) or untouched.
    Incoherent,
}

/// Imperfections applied on top of ideal optics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseParams {
    pub depolarizing_p: f64,
    pub oam_dephasing: f64,
    pub distinguishability_eps: f64,
    pub qplate: QPlateParams,
    pub qplate_model: QPlateModel,
}

impl Default for NoiseParams {
    fn default() -> Self {
        Self::ideal()
    }
}

impl NoiseParams {
    pub fn ideal() -> Self {
        NoiseParams {
            depolarizing_p: 0.0,
            oam_dephasing: 0.0,
            distinguishability_eps: 0.0,
            qplate: QPlateParams::ideal(),
            qplate_model: QPlateModel::Coherent,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("depolarizing_p", self.depolarizing_p),
            ("oam_dephasing", self.oam_dephasing),
            ("distinguishability_eps", self.distinguishability_eps),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::param(name, format!("{v} is outside [0, 1]")));
            }
        }
        self.qplate.validate()
    }

    /// Sets one knob by name, as used by `--noise key=value`.
    pub fn set(&mut self, key: &str, value: f64) -> Result<()> {
        match key {
            "depolarizing_p" | "p" => self.depolarizing_p = value,
            "oam_dephasing" | "q" => self.oam_dephasing = value,
            "distinguishability_eps" | "eps" => self.distinguishability_eps = value,
            "eta" => self.qplate.eta = value,
            "transmittance" | "T" => self.qplate.transmittance = value,
            "delta" => self.qplate.delta = value,
            other => {
                return Err(Error::Configuration(format!(
                    "unknown noise key `{other}` (expected depolarizing_p, oam_dephasing, distinguishability_eps, eta, transmittance, delta)"
                )))
            }
        }
        self.validate()
    }
}

/// Fixed apparatus constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Apparatus {
    pub tau_c_ps: f64,
    pub hologram_efficiency: f64,
    pub n_max: usize,
}

impl Default for Apparatus {
    fn default() -> Self {
        Apparatus {
            tau_c_ps: default_coherence_time_ps(),
            hologram_efficiency: 0.10,
            n_max: crate::fock::DEFAULT_N_MAX,
        }
    }
}

/// Everything a scenario run needs besides its own inputs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub noise: NoiseParams,
    pub apparatus: Apparatus,
    /// `None` selects the exact path.
    pub shots: Option<u64>,
    pub seed: u64,
}

impl RunConfig {
    pub fn exact(noise: NoiseParams) -> Self {
        RunConfig {
            noise,
            apparatus: Apparatus::default(),
            shots: None,
            seed: DEFAULT_SEED,
        }
    }

    pub fn ideal() -> Self {
        Self::exact(NoiseParams::ideal())
    }

    pub fn sampled(noise: NoiseParams, shots: u64, seed: u64) -> Self {
        RunConfig {
            shots: Some(shots),
            seed,
            ..Self::exact(noise)
        }
    }
}

/// Seed used when none is given.
pub const DEFAULT_SEED: u64 = 2009;

/// The scenario catalogue.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ScenarioKind {
    #[serde(rename = "entanglement")]
    Entanglement,
    #[serde(rename = "transferrer-pi-l")]
    TransferrerPiL,
    #[serde(rename = "transferrer-l-pi")]
    TransferrerLPi,
    #[serde(rename = "double-transfer")]
    DoubleTransfer,
    #[serde(rename = "hom-scan")]
    HomScan,
    #[serde(rename = "coalescence")]
    Coalescence,
    #[serde(rename = "erasure")]
    Erasure,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 7] = [
        ScenarioKind::Entanglement,
        ScenarioKind::TransferrerPiL,
        ScenarioKind::TransferrerLPi,
        ScenarioKind::DoubleTransfer,
        ScenarioKind::HomScan,
        ScenarioKind::Coalescence,
        ScenarioKind::Erasure,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::Entanglement => "entanglement",
            ScenarioKind::TransferrerPiL => "transferrer-pi-l",
            ScenarioKind::TransferrerLPi => "transferrer-l-pi",
            ScenarioKind::DoubleTransfer => "double-transfer",
            ScenarioKind::HomScan => "hom-scan",
            ScenarioKind::Coalescence => "coalescence",
            ScenarioKind::Erasure => "erasure",
        }
    }

    /// Short symbol and metric key of the figure of merit.
    pub fn headline(self) -> (&'static str, &'static str) {
        match self {
            ScenarioKind::Entanglement => ("C", "concurrence"),
            ScenarioKind::TransferrerPiL | ScenarioKind::TransferrerLPi => ("F", "fidelity"),
            ScenarioKind::DoubleTransfer => ("chi_II", "chi_II"),
            ScenarioKind::HomScan | ScenarioKind::Erasure => ("V", "visibility"),
            ScenarioKind::Coalescence => ("Gamma", "gamma"),
        }
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScenarioKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = Self::ALL.iter().map(|k| k.name()).collect();
                Error::Configuration(format!(
                    "unknown scenario `{s}`; available: {}",
                    names.join(", ")
                ))
            })
    }
}

/// A labelled outcome probability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Probability {
    pub setting: String,
    pub outcome: String,
    pub probability: f64,
}

/// One point of a delay scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanPoint {
    pub t_d_ps: f64,
    pub coincidence_prob: f64,
    pub counts: Option<u64>,
    pub shots: Option<u64>,
}

/// Structured outcome of one scenario run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioResult {
    pub scenario: String,
    pub parameters: serde_json::Value,
    pub probabilities: Vec<Probability>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counts: Option<Vec<CountRecord>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub matrices: BTreeMap<String, MatrixDoc>,
    pub metrics: BTreeMap<String, f64>,
    pub success_probability: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scan: Option<Vec<ScanPoint>>,
}

impl ScenarioResult {
    fn new(kind: ScenarioKind, parameters: serde_json::Value) -> Self {
        ScenarioResult {
            scenario: kind.name().to_owned(),
            parameters,
            probabilities: Vec::new(),
            counts: None,
            matrices: BTreeMap::new(),
            metrics: BTreeMap::new(),
            success_probability: 0.0,
            scan: None,
        }
    }

    pub fn metric(&self, name: &str) -> Result<f64> {
        self.metrics.get(name).copied().ok_or_else(|| {
            Error::Data(format!(
                "scenario `{}` has no metric `{name}`",
                self.scenario
            ))
        })
    }

    /// One line, `name: k=v k=v …`, with six decimals.
    pub fn summary(&self) -> String {
        let parts: Vec<String> = self
            .metrics
            .iter()
            .map(|(k, v)| format!("{k}={v:.6}"))
            .collect();
        let head = self
            .scenario
            .parse::<ScenarioKind>()
            .ok()
            .and_then(|k| {
                let (symbol, metric) = k.headline();
                (symbol != metric).then(|| {
                    self.metrics
                        .get(metric)
                        .map(|v| format!("{symbol}={v:.6} | "))
                })
            })
            .flatten()
            .unwrap_or_default();
        format!("{}: {head}{}", self.scenario, parts.join(" "))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Writes the scan as CSV `t_d_ps,coincidence_prob,counts,shots`.
    pub fn write_scan_csv<W: Write>(&self, writer: W) -> Result<()> {
        let scan = self
            .scan
            .as_ref()
            .ok_or_else(|| Error::Data(format!("scenario `{}` has no scan", self.scenario)))?;
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["t_d_ps", "coincidence_prob", "counts", "shots"])?;
        for p in scan {
            w.write_record([
                format!("{}", p.t_d_ps),
                format!("{}", p.coincidence_prob),
                p.counts.map(|c| c.to_string()).unwrap_or_default(),
                p.shots.map(|c| c.to_string()).unwrap_or_default(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// A point in a scenario pipeline.
#[derive(Debug, Clone)]
enum Stage {
    Element(LinearElement),
    /// A q-plate honouring the configured coherence model.
    QPlate {
        path: String,
    },
    Depolarize {
        path: String,
    },
    Dephase {
        path: String,
    },
}

/// One member of a noise ensemble, after propagation.
#[derive(Debug, Clone)]
struct Branch {
    weight: f64,
    state: PhotonicState,
}

impl Branch {
    /// Weight times survival probability.
    fn absolute(&self) -> f64 {
        self.weight * self.state.success_probability()
    }

    /// Weight times the probability that no photon was absorbed into a loss
    /// reservoir; the normalization of conditional rates.
    fn surviving(&self) -> f64 {
        let kept: f64 = self
            .state
            .terms()
            .filter(|(basis, _)| basis.iter().all(|(m, _)| !m.is_loss()))
            .map(|(_, a)| a.norm_sqr())
            .sum();
        self.absolute() * kept
    }
}

fn stage_options(stage: &Stage, noise: &NoiseParams) -> Result<Vec<(f64, LinearElement)>> {
    Ok(match stage {
        Stage::Element(e) => vec![(1.0, e.clone())],
        Stage::QPlate { path } => match noise.qplate_model {
            QPlateModel::Coherent => vec![(1.0, LinearElement::qplate(noise.qplate, path)?)],
            QPlateModel::Incoherent => {
                let full = QPlateParams {
                    eta: 1.0,
                    ..noise.qplate
                };
                let none = QPlateParams {
                    eta: 0.0,
                    ..noise.qplate
                };
                vec![
                    (noise.qplate.eta, LinearElement::qplate(full, path)?),
                    (1.0 - noise.qplate.eta, LinearElement::qplate(none, path)?),
                ]
            }
        },
        Stage::Depolarize { path } => {
            let p = noise.depolarizing_p;
            let weights = [1.0 - 0.75 * p, 0.25 * p, 0.25 * p, 0.25 * p];
            jones::paulis()
                .into_iter()
                .zip(weights)
                .map(|(m, w)| Ok((w, LinearElement::jones(path, m)?)))
                .collect::<Result<_>>()?
        }
        Stage::Dephase { path } => {
            let phi = (1.0 - noise.oam_dephasing).clamp(-1.0, 1.0).acos();
            if phi == 0.0 {
                vec![(1.0, LinearElement::oam_phase(0.0, path))]
            } else {
                vec![
                    (0.5, LinearElement::oam_phase(phi, path)),
                    (0.5, LinearElement::oam_phase(-phi, path)),
                ]
            }
        }
    })
}

/// Propagates `input` through every ensemble member; zero-weight members
/// are dropped.
fn propagate(input: &PhotonicState, stages: &[Stage], noise: &NoiseParams) -> Result<Vec<Branch>> {
    let mut branches = vec![Branch {
        weight: 1.0,
        state: input.clone(),
    }];
    for stage in stages {
        let options = stage_options(stage, noise)?;
        let mut next = Vec::with_capacity(branches.len() * options.len());
        for b in &branches {
            for (w, e) in &options {
                if *w <= 0.0 {
                    continue;
                }
                next.push(Branch {
                    weight: b.weight * w,
                    state: e.apply(&b.state),
                });
            }
        }
        branches = next;
    }
    Ok(branches)
}

/// Nominal circuit of a pipeline (noise stages dropped), for emission.
fn nominal_circuit(stages: &[Stage], noise: &NoiseParams) -> Result<Circuit> {
    let mut elements = Vec::new();
    for s in stages {
        match s {
            Stage::Element(e) => elements.push(e.clone()),
            Stage::QPlate { path } => elements.push(LinearElement::qplate(noise.qplate, path)?),
            Stage::Depolarize { .. } | Stage::Dephase { .. } => {}
        }
    }
    Ok(Circuit::new(elements))
}

/// Per-run choices that are not noise: the input state, the delay grid and
/// the erasure basis. Unset fields take the scenario default.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScenarioOptions {
    /// Cardinal label or `re,im;re,im`; entanglement takes polarizations only.
    pub input: Option<String>,
    pub delays_ps: Option<Vec<f64>>,
    pub basis: Option<ErasureBasis>,
}

/// Default delay grid of the scanned scenarios, ps.
pub fn default_delays(kind: ScenarioKind) -> Vec<f64> {
    match kind {
        ScenarioKind::Coalescence => vec![0.0],
        _ => uniform_scan(-1.5, 1.5, 61),
    }
}

/// Runs one scenario by name.
pub fn run_scenario(
    kind: ScenarioKind,
    opts: &ScenarioOptions,
    config: &RunConfig,
) -> Result<ScenarioResult> {
    let input =
        |default: &str| -> Result<QubitInput> { opts.input.as_deref().unwrap_or(default).parse() };
    let delays = || {
        opts.delays_ps
            .clone()
            .unwrap_or_else(|| default_delays(kind))
    };
    match kind {
        ScenarioKind::Entanglement => {
            let label = opts.input.as_deref().unwrap_or("H");
            let p: PolState = label
                .parse()
                .map_err(|reason| Error::param("input", reason))?;
            run_entanglement_gen(p, config)
        }
        ScenarioKind::TransferrerPiL => run_transferrer_pi_to_l(&input("H")?, config),
        ScenarioKind::TransferrerLPi => run_transferrer_l_to_pi(&input("+2")?, config),
        ScenarioKind::DoubleTransfer => run_double_transfer(config),
        ScenarioKind::HomScan => run_hom_scan(&delays(), config),
        ScenarioKind::Coalescence => run_coalescence_enhancement(&delays(), config),
        ScenarioKind::Erasure => {
            run_erasure_correlations(opts.basis.unwrap_or(ErasureBasis::DRL), config)
        }
    }
}

/// Circuit files for every scenario under its nominal (noise-free) settings.
pub fn scenario_circuits(config: &RunConfig) -> Result<Vec<(String, CircuitSpec)>> {
    let noise = &config.noise;
    let mut out = vec![
        (
            "entanglement".to_owned(),
            nominal_circuit(&single::entanglement_stages(), noise)?.to_spec(),
        ),
        (
            "transferrer-pi-l".to_owned(),
            nominal_circuit(&single::pi_to_l_stages()?, noise)?.to_spec(),
        ),
        (
            "transferrer-l-pi".to_owned(),
            nominal_circuit(&single::l_to_pi_stages("a"), noise)?.to_spec(),
        ),
        (
            "double-transfer".to_owned(),
            nominal_circuit(&single::double_transfer_stages()?, noise)?.to_spec(),
        ),
    ];
    for (name, stages) in two_photon::named_stages(config)? {
        out.push((name, nominal_circuit(&stages, noise)?.to_spec()));
    }
    Ok(out)
}

fn normalized(v: [C64; 2]) -> Result<[C64; 2]> {
    let n = (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
    if n <= 0.0 || !n.is_finite() {
        return Err(Error::param(
            "input",
            "qubit amplitudes must be finite and not both zero",
        ));
    }
    Ok([v[0] / n, v[1] / n])
}

/// Amplitudes of a cardinal state under the linear encoding.
fn cardinal(state: PolState) -> [C64; 2] {
    state.jones_vector()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalogue_round_trip() {
        for k in ScenarioKind::ALL {
            assert_eq!(k.name().parse::<ScenarioKind>().unwrap(), k);
        }
        let err = "nope".parse::<ScenarioKind>().unwrap_err().to_string();
        assert!(err.contains("hom-scan"));
    }

    #[test]
    fn noise_keys() {
        let mut n = NoiseParams::ideal();
        n.set("eps", 0.05).unwrap();
        n.set("eta", 0.85).unwrap();
        assert_eq!(n.distinguishability_eps, 0.05);
        assert_eq!(n.qplate.eta, 0.85);
        assert!(n.set("eps", 1.5).is_err());
        assert!(n.set("bogus", 0.1).is_err());
    }

    #[test]
    fn ensemble_weights_sum_to_one() {
        let noise = NoiseParams {
            depolarizing_p: 0.2,
            oam_dephasing: 0.3,
            ..NoiseParams::ideal()
        };
        let stages = single::entanglement_stages();
        let input = single::photon_on("a", cardinal(PolState::H), 0, 4).unwrap();
        let branches = propagate(&input, &stages, &noise).unwrap();
        assert_eq!(branches.len(), 8);
        let total: f64 = branches.iter().map(|b| b.weight).sum();
        assert!((total - 1.0).abs() < 1e-15);
    }
}
