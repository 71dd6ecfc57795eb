// Copyright 2026 Spinorbit Contributors
// SPDX-License-Identifier: Apache-2.0

//! Single-photon scenarios.

use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use super::{
    cardinal, normalized, propagate, Branch, Probability, RunConfig, ScenarioKind, ScenarioResult,
    Stage,
};
use crate::error::{Error, Result};
use crate::fock::{ModeKey, PhotonicState, Pol, C64};
use crate::measurement::{
    reduced_oam_dm, reduced_pol_dm, reduced_two_qubit_dm, sample_counts_with, CountRecord,
    QubitMap, Reduced,
};
use crate::optics::jones::{PolState, FRAC_1_SQRT_2};
use crate::optics::LinearElement;
use crate::tomography::linalg::{c, CMatrix};
use crate::tomography::settings::{full_settings, outcome_vector, projector, OAM_BASES, POL_BASES};
use crate::tomography::{
    concurrence, mle_state_tomo, process_tomo, pure_state_fidelity, stokes_reconstruct,
    DensityMatrix, PolEncoding, QubitKind, TomoSettings,
};

/// A qubit to be encoded, either in polarization (`|0⟩ = H`) or in OAM
/// (`|0⟩ = +2`).
#[derive(Debug, Clone, PartialEq)]
pub struct QubitInput {
    pub label: String,
    pub amplitudes: [C64; 2],
}

impl QubitInput {
    pub fn new(label: &str, amplitudes: [C64; 2]) -> Result<Self> {
        Ok(QubitInput {
            label: label.to_owned(),
            amplitudes: normalized(amplitudes)?,
        })
    }

    /// Cardinal polarization state.
    pub fn pol(state: PolState) -> Self {
        QubitInput {
            label: state.to_string(),
            amplitudes: cardinal(state),
        }
    }

    /// Cardinal OAM state with the same Bloch vector as `state`.
    pub fn oam(state: PolState) -> Self {
        QubitInput {
            label: oam_label(state).to_owned(),
            amplitudes: cardinal(state),
        }
    }
}

fn oam_label(state: PolState) -> &'static str {
    match state {
        PolState::H => "+2",
        PolState::V => "-2",
        PolState::D => "d+",
        PolState::A => "d-",
        PolState::L => "dL",
        PolState::R => "dR",
    }
}

impl FromStr for QubitInput {
    type Err = Error;

    /// Accepts `H V D A L R`, `+2 -2 d+ d- dL dR`, or `re,im;re,im`.
    fn from_str(s: &str) -> Result<Self> {
        if let Ok(p) = s.parse::<PolState>() {
            return Ok(Self::pol(p));
        }
        if let Some(p) = PolState::ALL.into_iter().find(|&p| oam_label(p) == s) {
            return Ok(Self::oam(p));
        }
        let parts: Vec<&str> = s.split(';').collect();
        let parse = |t: &str| -> Option<C64> {
            let (re, im) = t.split_once(',')?;
            Some(c(re.trim().parse().ok()?, im.trim().parse().ok()?))
        };
        match parts.as_slice() {
            [a, b] => match (parse(a), parse(b)) {
                (Some(a), Some(b)) => Self::new(s, [a, b]),
                _ => Err(bad_input(s)),
            },
            _ => Err(bad_input(s)),
        }
    }
}

fn bad_input(s: &str) -> Error {
    Error::param(
        "input",
        format!("`{s}` is not a cardinal state (H V D A L R, +2 -2 d+ d- dL dR) or `re,im;re,im`"),
    )
}

/// One photon on `path` with OAM `oam` and Jones vector `hv`.
pub(super) fn photon_on(path: &str, hv: [C64; 2], oam: i32, n_max: usize) -> Result<PhotonicState> {
    let terms: Vec<(ModeKey, C64)> = Pol::BOTH
        .iter()
        .map(|&p| (ModeKey::new(path, p, oam, 0), hv[p.index()]))
        .filter(|(_, a)| a.norm() > 0.0)
        .collect();
    PhotonicState::single_photon(n_max, &terms)
}

/// H-polarized photon carrying `amps` on `±2`.
fn oam_photon(path: &str, amps: [C64; 2], n_max: usize) -> Result<PhotonicState> {
    let terms: Vec<(ModeKey, C64)> = [(2, amps[0]), (-2, amps[1])]
        .into_iter()
        .filter(|(_, a)| a.norm() > 0.0)
        .map(|(l, a)| (ModeKey::new(path, Pol::H, l, 0), a))
        .collect();
    PhotonicState::single_photon(n_max, &terms)
}

pub(super) fn entanglement_stages() -> Vec<Stage> {
    vec![
        Stage::QPlate { path: "a".into() },
        Stage::Dephase { path: "a".into() },
        Stage::Depolarize { path: "a".into() },
    ]
}

/// H → L and V → R with equal phases.
fn pol_to_circular(path: &str) -> [Stage; 2] {
    [
        Stage::Element(LinearElement::quarter_wave(0.0, path)),
        Stage::Element(LinearElement::quarter_wave(45.0, path)),
    ]
}

/// L → H and R → V with equal phases.
fn circular_to_pol(path: &str) -> [Stage; 2] {
    [
        Stage::Element(LinearElement::quarter_wave(135.0, path)),
        Stage::Element(LinearElement::quarter_wave(90.0, path)),
    ]
}

pub(super) fn pi_to_l_stages() -> Result<Vec<Stage>> {
    let mut s: Vec<Stage> = pol_to_circular("a").into();
    s.extend(entanglement_stages());
    s.push(Stage::Element(LinearElement::pbs("a", "t", "r")?));
    s.push(Stage::Element(LinearElement::block("r")));
    Ok(s)
}

pub(super) fn l_to_pi_stages(path: &str) -> Vec<Stage> {
    let mut s = vec![
        Stage::Dephase { path: path.into() },
        Stage::QPlate { path: path.into() },
        Stage::Depolarize { path: path.into() },
    ];
    s.extend(circular_to_pol(path));
    s.push(Stage::Element(LinearElement::smf_filter(path)));
    s
}

pub(super) fn double_transfer_stages() -> Result<Vec<Stage>> {
    let mut s: Vec<Stage> = pol_to_circular("a").into();
    s.push(Stage::QPlate { path: "a".into() });
    s.push(Stage::Element(LinearElement::pbs("a", "t", "r")?));
    s.push(Stage::Element(LinearElement::block("r")));
    s.extend(l_to_pi_stages("t"));
    Ok(s)
}

/// Ensemble-averaged register state.
struct Mixed {
    rho: DensityMatrix,
    /// Probability that the photon survives and lands in the register.
    captured: f64,
    /// Probability that the photon survives at all.
    transmitted: f64,
}

fn mix<F>(branches: &[Branch], reduce: F) -> Result<Mixed>
where
    F: Fn(&PhotonicState) -> Result<Reduced>,
{
    let mut sum: Option<CMatrix> = None;
    let mut captured = 0.0;
    let mut transmitted = 0.0;
    for b in branches {
        let abs = b.absolute();
        transmitted += abs;
        if b.state.photon_number() != 1 || abs <= 0.0 {
            continue;
        }
        let r = match reduce(&b.state) {
            Ok(r) => r,
            // The branch put nothing in the register.
            Err(Error::Data(_)) => continue,
            Err(e) => return Err(e),
        };
        let w = abs * (1.0 - r.leakage);
        captured += w;
        let term = r.rho.matrix() * c(w, 0.0);
        sum = Some(match sum {
            Some(s) => s + term,
            None => term,
        });
    }
    let sum = sum
        .filter(|_| captured > 0.0)
        .ok_or_else(|| Error::Data("no population reaches the measured qubit".into()))?;
    Ok(Mixed {
        rho: DensityMatrix::new(sum / c(captured, 0.0))?,
        captured,
        transmitted,
    })
}

fn common_parameters(config: &RunConfig) -> serde_json::Value {
    json!({
        "noise": config.noise,
        "apparatus": config.apparatus,
        "shots": config.shots,
        "seed": config.seed,
    })
}

fn with_input(config: &RunConfig, input: &QubitInput) -> serde_json::Value {
    let mut v = common_parameters(config);
    v["input"] = json!({
        "label": input.label,
        "amplitudes": input.amplitudes.iter().map(|a| [a.re, a.im]).collect::<Vec<_>>(),
    });
    v
}

fn expect(rho: &DensityMatrix, v: &[C64; 2]) -> f64 {
    let m = rho.matrix();
    let mut s = c(0.0, 0.0);
    for i in 0..2 {
        for j in 0..2 {
            s += v[i].conj() * m[(i, j)] * v[j];
        }
    }
    s.re.max(0.0)
}

/// Absolute probabilities of the six single-qubit cardinal outcomes.
fn qubit_probabilities(rho: &DensityMatrix, captured: f64, kind: QubitKind) -> Vec<Probability> {
    let bases = match kind {
        QubitKind::Pol => POL_BASES,
        QubitKind::Oam => OAM_BASES,
    };
    let mut out = Vec::with_capacity(6);
    for (setting, outcomes) in bases {
        for o in outcomes {
            let (_, v) = outcome_vector(o, PolEncoding::Linear).expect("known outcome label");
            out.push(Probability {
                setting: setting.to_owned(),
                outcome: o.to_owned(),
                probability: captured * expect(rho, &v),
            });
        }
    }
    out
}

fn sample(
    probabilities: &[Probability],
    shots: u64,
    seed: u64,
    rng: &mut ChaCha8Rng,
    prefix: &str,
) -> Result<Vec<CountRecord>> {
    let mut out = Vec::with_capacity(probabilities.len());
    let mut i = 0;
    while i < probabilities.len() {
        let setting = &probabilities[i].setting;
        let group: Vec<(String, f64)> = probabilities[i..]
            .iter()
            .take_while(|p| &p.setting == setting)
            .map(|p| (p.outcome.clone(), p.probability))
            .collect();
        i += group.len();
        out.extend(sample_counts_with(
            &format!("{prefix}{setting}"),
            &group,
            shots,
            seed,
            rng,
        )?);
    }
    Ok(out)
}

/// Ideal output of the q-plate for `αH + βV`: `αΦ⁺ − iβΦ⁻` with circular
/// polarization (R = 0) and OAM (+2 = 0).
fn entangled_target(amps: [C64; 2]) -> [C64; 4] {
    let s = FRAC_1_SQRT_2;
    let phi_plus = [c(s, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(s, 0.0)];
    let phi_minus = [c(s, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-s, 0.0)];
    let k = c(0.0, -1.0) * amps[1];
    std::array::from_fn(|i| amps[0] * phi_plus[i] + k * phi_minus[i])
}

/// Single-photon spin-orbit entanglement from an H or V (or any) input.
///
/// Metrics: `concurrence`, `fidelity`, `purity`, `circular_purity` (share of
/// R in the +2 arm), `leakage` and `success_probability`.
pub fn run_entanglement_gen(input: PolState, config: &RunConfig) -> Result<ScenarioResult> {
    config.noise.validate()?;
    let amps = cardinal(input);
    let state = photon_on("a", amps, 0, config.apparatus.n_max)?;
    let branches = propagate(&state, &entanglement_stages(), &config.noise)?;
    let map = QubitMap::default();
    let mixed = mix(&branches, |s| reduced_two_qubit_dm(s, &map))?;

    let mut result = ScenarioResult::new(
        ScenarioKind::Entanglement,
        with_input(config, &QubitInput::pol(input)),
    );
    for (setting, outcomes) in full_settings(&[QubitKind::Pol, QubitKind::Oam]) {
        for o in outcomes {
            let p = mixed
                .rho
                .expectation(&projector(&setting, &o, PolEncoding::Circular)?);
            result.probabilities.push(Probability {
                setting: setting.clone(),
                outcome: o,
                probability: mixed.captured * p.max(0.0),
            });
        }
    }

    let rho = match config.shots {
        None => mixed.rho.clone(),
        Some(shots) => {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            let counts = sample(&result.probabilities, shots, config.seed, &mut rng, "")?;
            let settings = TomoSettings {
                seed: config.seed,
                ..TomoSettings::two_qubit()
            };
            let mle = mle_state_tomo(&counts, &settings)?;
            result.counts = Some(counts);
            result
                .metrics
                .insert("mle_converged".into(), f64::from(u8::from(mle.converged)));
            result
                .metrics
                .insert("log_likelihood".into(), mle.log_likelihood);
            mle.rho
        }
    };

    let m = rho.matrix();
    let plus_r = m[(0, 0)].re;
    let plus_l = m[(2, 2)].re;
    let target = entangled_target(amps);
    result
        .metrics
        .insert("concurrence".into(), concurrence(&rho)?);
    result
        .metrics
        .insert("fidelity".into(), pure_state_fidelity(&rho, &target)?);
    result.metrics.insert("purity".into(), rho.purity());
    if plus_r + plus_l > 0.0 {
        result
            .metrics
            .insert("circular_purity".into(), plus_r / (plus_r + plus_l));
    }
    result.metrics.insert(
        "leakage".into(),
        1.0 - mixed.captured / mixed.transmitted.max(f64::MIN_POSITIVE),
    );
    result
        .metrics
        .insert("success_probability".into(), mixed.captured);
    result.success_probability = mixed.captured;
    result.matrices.insert("rho".into(), rho.to_doc());
    result
        .matrices
        .insert("rho_exact".into(), mixed.rho.to_doc());
    Ok(result)
}

/// Shared tail of the two transferrers: probabilities, optional sampling and
/// Stokes reconstruction, fidelity.
fn finish_transfer(
    mut result: ScenarioResult,
    mixed: Mixed,
    kind: QubitKind,
    target: [C64; 2],
    config: &RunConfig,
) -> Result<ScenarioResult> {
    result.probabilities = qubit_probabilities(&mixed.rho, mixed.captured, kind);
    let rho = match config.shots {
        None => mixed.rho.clone(),
        Some(shots) => {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            let counts = sample(&result.probabilities, shots, config.seed, &mut rng, "")?;
            let s = stokes_reconstruct(&counts)?;
            result.counts = Some(counts);
            result
                .metrics
                .insert("clipped".into(), f64::from(u8::from(s.clipped)));
            s.rho
        }
    };
    result
        .metrics
        .insert("fidelity".into(), pure_state_fidelity(&rho, &target)?);
    result.metrics.insert("purity".into(), rho.purity());
    result
        .metrics
        .insert("success_probability".into(), mixed.captured);
    result.success_probability = mixed.captured;
    result.matrices.insert("rho".into(), rho.to_doc());
    result
        .matrices
        .insert("rho_exact".into(), mixed.rho.to_doc());
    Ok(result)
}

/// Polarization qubit `αH + βV` onto the OAM qubit `α|+2⟩ + β|−2⟩`,
/// heralded on the transmitted PBS port (success 1/2 when ideal).
pub fn run_transferrer_pi_to_l(input: &QubitInput, config: &RunConfig) -> Result<ScenarioResult> {
    config.noise.validate()?;
    let amps = normalized(input.amplitudes)?;
    let state = photon_on("a", amps, 0, config.apparatus.n_max)?;
    let branches = propagate(&state, &pi_to_l_stages()?, &config.noise)?;
    let mixed = mix(&branches, |s| reduced_oam_dm(s, [2, -2], Some("t")))?;
    let result = ScenarioResult::new(ScenarioKind::TransferrerPiL, with_input(config, input));
    finish_transfer(result, mixed, QubitKind::Oam, amps, config)
}

/// OAM qubit `α|+2⟩ + β|−2⟩` on an H photon onto `αH + βV`, heralded on
/// coupling into the single-mode fiber (success 1/2 when ideal).
pub fn run_transferrer_l_to_pi(input: &QubitInput, config: &RunConfig) -> Result<ScenarioResult> {
    config.noise.validate()?;
    let amps = normalized(input.amplitudes)?;
    let state = oam_photon("a", amps, config.apparatus.n_max)?;
    let branches = propagate(&state, &l_to_pi_stages("a"), &config.noise)?;
    let mixed = mix(&branches, |s| {
        reduced_pol_dm(s, PolEncoding::Linear, Some("a"))
    })?;
    let result = ScenarioResult::new(ScenarioKind::TransferrerLPi, with_input(config, input));
    finish_transfer(result, mixed, QubitKind::Pol, amps, config)
}

/// Inputs used for process tomography.
pub const PROCESS_INPUTS: [PolState; 4] = [PolState::H, PolState::V, PolState::D, PolState::L];

/// π → l → π round trip characterized by process tomography on the inputs
/// H, V, D and L.
///
/// Metrics: `chi_II`, `max_imag_chi`, `mean_fidelity`, `projection_distance`,
/// `success_probability` (mean over inputs, 1/4 when ideal).
pub fn run_double_transfer(config: &RunConfig) -> Result<ScenarioResult> {
    config.noise.validate()?;
    let stages = double_transfer_stages()?;
    let mut result = ScenarioResult::new(ScenarioKind::DoubleTransfer, common_parameters(config));
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut counts = Vec::new();
    let mut inputs = Vec::new();
    let mut outputs = Vec::new();
    let mut success = 0.0;
    let mut fidelity = 0.0;
    for p in PROCESS_INPUTS {
        let amps = cardinal(p);
        let state = photon_on("a", amps, 0, config.apparatus.n_max)?;
        let branches = propagate(&state, &stages, &config.noise)?;
        let mixed = mix(&branches, |s| {
            reduced_pol_dm(s, PolEncoding::Linear, Some("t"))
        })?;
        let mut probs = qubit_probabilities(&mixed.rho, mixed.captured, QubitKind::Pol);
        let rho = match config.shots {
            None => mixed.rho.clone(),
            Some(shots) => {
                let prefix = format!("in={p}:");
                let recs = sample(&probs, shots, config.seed, &mut rng, &prefix)?;
                let s = stokes_reconstruct(&recs)?;
                counts.extend(recs);
                s.rho
            }
        };
        for pr in &mut probs {
            pr.setting = format!("in={p}:{}", pr.setting);
        }
        result.probabilities.extend(probs);
        success += mixed.captured / PROCESS_INPUTS.len() as f64;
        fidelity += pure_state_fidelity(&rho, &amps)? / PROCESS_INPUTS.len() as f64;
        result.matrices.insert(format!("rho_out_{p}"), rho.to_doc());
        inputs.push(DensityMatrix::pure(&amps)?);
        outputs.push(rho);
    }
    let process = process_tomo(&inputs, &outputs)?;
    let chi = process.chi.matrix();
    let max_imag = chi.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    result.metrics.insert("chi_II".into(), process.chi.chi_ii());
    result.metrics.insert("max_imag_chi".into(), max_imag);
    result.metrics.insert("mean_fidelity".into(), fidelity);
    result
        .metrics
        .insert("projection_distance".into(), process.projection_distance);
    result.metrics.insert("success_probability".into(), success);
    result.success_probability = success;
    result.matrices.insert("chi".into(), process.chi.to_doc());
    if config.shots.is_some() {
        result.counts = Some(counts);
    }
    Ok(result)
}

/// Mean fidelity of a transferrer over the six cardinal inputs.
pub(super) fn mean_cardinal_fidelity(
    run: fn(&QubitInput, &RunConfig) -> Result<ScenarioResult>,
    pol_inputs: bool,
    config: &RunConfig,
) -> Result<f64> {
    let mut total = 0.0;
    for p in PolState::ALL {
        let input = if pol_inputs {
            QubitInput::pol(p)
        } else {
            QubitInput::oam(p)
        };
        total += run(&input, config)?.metric("fidelity")?;
    }
    Ok(total / PolState::ALL.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optics::QPlateParams;
    use crate::scenarios::NoiseParams;
    use approx::assert_abs_diff_eq;

    #[test]
    fn ideal_entanglement() {
        for p in [PolState::H, PolState::V, PolState::D, PolState::L] {
            let r = run_entanglement_gen(p, &RunConfig::ideal()).unwrap();
            assert_abs_diff_eq!(r.metric("fidelity").unwrap(), 1.0, epsilon = 1e-12);
            assert_abs_diff_eq!(r.success_probability, 1.0, epsilon = 1e-12);
            if matches!(p, PolState::H | PolState::V) {
                assert_abs_diff_eq!(r.metric("concurrence").unwrap(), 1.0, epsilon = 1e-9);
                assert_abs_diff_eq!(r.metric("circular_purity").unwrap(), 1.0, epsilon = 1e-12);
            }
            assert_eq!(r.probabilities.len(), 36);
        }
    }

    #[test]
    fn leakage_does_not_touch_the_register() {
        let noise = NoiseParams {
            qplate: QPlateParams::measured(),
            ..NoiseParams::ideal()
        };
        let r = run_entanglement_gen(PolState::H, &RunConfig::exact(noise)).unwrap();
        assert_abs_diff_eq!(r.metric("concurrence").unwrap(), 1.0, epsilon = 1e-9);
        // Unconverted and absorbed photons both sit outside the register.
        assert_abs_diff_eq!(
            r.metric("leakage").unwrap(),
            1.0 - 0.9 * 0.85,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(r.success_probability, 0.9 * 0.85, epsilon = 1e-12);
    }

    #[test]
    fn depolarizing_gives_werner_concurrence() {
        for p in [0.0, 0.1, 0.3] {
            let noise = NoiseParams {
                depolarizing_p: p,
                ..NoiseParams::ideal()
            };
            // Pauli noise on one half of a Bell pair makes a Werner state.
            let r = run_entanglement_gen(PolState::H, &RunConfig::exact(noise)).unwrap();
            assert_abs_diff_eq!(
                r.metric("concurrence").unwrap(),
                1.0 - 1.5 * p,
                epsilon = 1e-9
            );
        }
    }

    #[test]
    fn transferrers_are_ideal_on_cardinals() {
        for p in PolState::ALL {
            let r = run_transferrer_pi_to_l(&QubitInput::pol(p), &RunConfig::ideal()).unwrap();
            assert_abs_diff_eq!(r.metric("fidelity").unwrap(), 1.0, epsilon = 1e-12);
            assert_abs_diff_eq!(r.success_probability, 0.5, epsilon = 1e-12);
            let r = run_transferrer_l_to_pi(&QubitInput::oam(p), &RunConfig::ideal()).unwrap();
            assert_abs_diff_eq!(r.metric("fidelity").unwrap(), 1.0, epsilon = 1e-12);
            assert_abs_diff_eq!(r.success_probability, 0.5, epsilon = 1e-12);
        }
    }

    #[test]
    fn arbitrary_amplitudes_transfer() {
        let input = QubitInput::new("x", [c(0.3, 0.1), c(-0.2, 0.9)]).unwrap();
        for run in [run_transferrer_pi_to_l, run_transferrer_l_to_pi] {
            let r = run(&input, &RunConfig::ideal()).unwrap();
            assert_abs_diff_eq!(r.metric("fidelity").unwrap(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn double_transfer_is_identity() {
        let r = run_double_transfer(&RunConfig::ideal()).unwrap();
        assert_abs_diff_eq!(r.metric("chi_II").unwrap(), 1.0, epsilon = 1e-9);
        assert!(r.metric("max_imag_chi").unwrap() < 1e-9);
        assert_abs_diff_eq!(r.success_probability, 0.25, epsilon = 1e-12);
    }

    #[test]
    fn double_transfer_depolarizing() {
        let noise = NoiseParams {
            depolarizing_p: 0.2,
            ..NoiseParams::ideal()
        };
        let r = run_double_transfer(&RunConfig::exact(noise)).unwrap();
        assert_abs_diff_eq!(
            r.metric("chi_II").unwrap(),
            1.0 - 0.75 * 0.2,
            epsilon = 1e-9
        );
    }

    #[test]
    fn dephasing_shrinks_equator() {
        let noise = NoiseParams {
            oam_dephasing: 0.2,
            ..NoiseParams::ideal()
        };
        let config = RunConfig::exact(noise);
        let d = run_transferrer_pi_to_l(&QubitInput::pol(PolState::D), &config).unwrap();
        assert_abs_diff_eq!(
            d.metric("fidelity").unwrap(),
            0.5 * (1.0 + 0.8),
            epsilon = 1e-12
        );
        let h = run_transferrer_pi_to_l(&QubitInput::pol(PolState::H), &config).unwrap();
        assert_abs_diff_eq!(h.metric("fidelity").unwrap(), 1.0, epsilon = 1e-12);
        let d = run_transferrer_l_to_pi(&QubitInput::oam(PolState::D), &config).unwrap();
        assert_abs_diff_eq!(
            d.metric("fidelity").unwrap(),
            0.5 * (1.0 + 0.8),
            epsilon = 1e-12
        );
    }

    #[test]
    fn sampled_paths_are_deterministic() {
        let config = RunConfig::sampled(NoiseParams::ideal(), 2000, 7);
        let a = run_transferrer_pi_to_l(&QubitInput::pol(PolState::D), &config).unwrap();
        let b = run_transferrer_pi_to_l(&QubitInput::pol(PolState::D), &config).unwrap();
        assert_eq!(a.counts, b.counts);
        assert!(a.metric("fidelity").unwrap() > 0.99);
        let e = run_entanglement_gen(
            PolState::H,
            &RunConfig::sampled(NoiseParams::ideal(), 5000, 3),
        )
        .unwrap();
        assert!(e.metric("concurrence").unwrap() > 0.95);
        assert_eq!(e.counts.as_ref().unwrap().len(), 36);
    }

    #[test]
    fn input_parsing() {
        assert_eq!("dL".parse::<QubitInput>().unwrap().label, "dL");
        assert_eq!(
            "H".parse::<QubitInput>().unwrap().amplitudes,
            cardinal(PolState::H)
        );
        let q: QubitInput = "1,0;0,1".parse().unwrap();
        assert_abs_diff_eq!(q.amplitudes[1].im, FRAC_1_SQRT_2, epsilon = 1e-15);
        assert!("0,0;0,0".parse::<QubitInput>().is_err());
        assert!("Q".parse::<QubitInput>().is_err());
    }
}
