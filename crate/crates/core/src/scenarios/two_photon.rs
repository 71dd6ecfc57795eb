// Copyright 2026 Spinorbit Contributors
// SPDX-License-Identifier: Apache-2.0

//! Two-photon coalescence scenarios. An H and a V photon share one path;
//! the V photon is delayed by `t_d`, both cross the q-plate, and the OAM
//! content is analysed with fork or superposition holograms.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{propagate, Probability, RunConfig, ScanPoint, ScenarioKind, ScenarioResult, Stage};
use crate::error::{Error, Result};
use crate::fock::{wavepacket_decompose, ModeKey, PhotonicState, Pol};
use crate::measurement::{
    outcome_probability, sample_counts_with, CoincidencePattern, CountRecord, DetectorSpec,
};
use crate::optics::jones::PolState;
use crate::optics::{HologramParams, HologramVariant, LinearElement};
use crate::tomography::metrics::{correlation_visibility, dip_visibility};

/// `|1⟩_{H,0} |1⟩_{V,0}` on path `a`, both in the undelayed wavepacket.
pub fn biphoton_input(n_max: usize) -> Result<PhotonicState> {
    PhotonicState::from_modes(
        n_max,
        &[
            ModeKey::new("a", Pol::H, 0, 0),
            ModeKey::new("a", Pol::V, 0, 0),
        ],
    )
}

/// `n` evenly spaced delays from `start` to `stop` inclusive.
pub fn uniform_scan(start: f64, stop: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![start],
        _ => (0..n)
            .map(|i| start + (stop - start) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

/// Analysis basis of the erasure measurement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ErasureBasis {
    /// Fork hologram, `[D_A, D_B]` coincidences between +2 and −2.
    #[serde(rename = "pm2")]
    Pm2,
    /// Same-state coincidences in d+ and d−.
    #[serde(rename = "d_plus_minus")]
    DPlusMinus,
    /// Same-state coincidences in dR and dL.
    #[serde(rename = "d_RL")]
    DRL,
}

impl ErasureBasis {
    pub const ALL: [ErasureBasis; 3] = [
        ErasureBasis::Pm2,
        ErasureBasis::DPlusMinus,
        ErasureBasis::DRL,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ErasureBasis::Pm2 => "pm2",
            ErasureBasis::DPlusMinus => "d_plus_minus",
            ErasureBasis::DRL => "d_RL",
        }
    }
}

impl fmt::Display for ErasureBasis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ErasureBasis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pm2" => Ok(ErasureBasis::Pm2),
            "d_plus_minus" | "dpm" => Ok(ErasureBasis::DPlusMinus),
            "d_RL" | "dRL" => Ok(ErasureBasis::DRL),
            _ => Err(Error::Configuration(format!(
                "unknown erasure basis `{s}`; available: pm2, d_plus_minus, d_RL"
            ))),
        }
    }
}

/// Overlap of the delayed wavepacket including the distinguishability floor.
fn overlap(t_d: f64, config: &RunConfig) -> Result<f64> {
    let (gamma, _) = wavepacket_decompose(t_d, config.apparatus.tau_c_ps)?;
    Ok((1.0 - config.noise.distinguishability_eps).sqrt() * gamma.re)
}

fn source(overlap: f64) -> Result<Vec<Stage>> {
    Ok(vec![
        Stage::Element(LinearElement::delay_with_overlap(overlap, Pol::V, "a")?),
        Stage::QPlate { path: "a".into() },
        Stage::Dephase { path: "a".into() },
    ])
}

fn hologram(variant: HologramVariant, config: &RunConfig) -> Result<LinearElement> {
    let params = HologramParams {
        first_order_efficiency: config.apparatus.hologram_efficiency,
        ..HologramParams::new(variant)
    };
    LinearElement::hologram(params, "a", "kA", "k0", "kB")
}

/// Fork analysis: first orders into fibers, zero order blocked.
fn fork_analysis(config: &RunConfig) -> Result<Vec<Stage>> {
    Ok(vec![
        Stage::Element(hologram(HologramVariant::ForkPm2, config)?),
        Stage::Element(LinearElement::smf_filter("kA")),
        Stage::Element(LinearElement::smf_filter("kB")),
        Stage::Element(LinearElement::block("k0")),
    ])
}

/// One hologram order split on a beam splitter for same-state coincidences.
fn same_state_analysis(variant: HologramVariant, config: &RunConfig) -> Result<Vec<Stage>> {
    let mut s = vec![
        Stage::Element(hologram(variant, config)?),
        Stage::Element(LinearElement::smf_filter("kA")),
        Stage::Element(LinearElement::block("k0")),
    ];
    if variant == HologramVariant::ForkPm2 {
        s.push(Stage::Element(LinearElement::block("kB")));
    }
    s.push(Stage::Element(LinearElement::beamsplitter_5050(
        "kA", "kA1", "kA2",
    )?));
    Ok(s)
}

fn fork_pattern() -> Result<CoincidencePattern> {
    CoincidencePattern::new(vec![
        DetectorSpec::bucket("D_A", "kA"),
        DetectorSpec::bucket("D_B", "kB"),
    ])
}

fn same_state_pattern() -> Result<CoincidencePattern> {
    CoincidencePattern::new(vec![
        DetectorSpec::bucket("D_A", "kA1"),
        DetectorSpec::bucket("D_A'", "kA2"),
    ])
}

/// Absolute and conditional probability of `pattern`, ensemble-averaged.
struct Rate {
    absolute: f64,
    conditional: f64,
}

fn rate(stages: &[Stage], pattern: &CoincidencePattern, config: &RunConfig) -> Result<Rate> {
    let input = biphoton_input(config.apparatus.n_max)?;
    let branches = propagate(&input, stages, &config.noise)?;
    let mut absolute = 0.0;
    let mut transmitted = 0.0;
    for b in &branches {
        absolute += b.weight * outcome_probability(&b.state, pattern, true);
        transmitted += b.surviving();
    }
    let conditional = if transmitted > 0.0 {
        absolute / transmitted
    } else {
        0.0
    };
    Ok(Rate {
        absolute,
        conditional,
    })
}

fn concat(mut a: Vec<Stage>, b: Vec<Stage>) -> Vec<Stage> {
    a.extend(b);
    a
}

fn hom_stages(overlap: f64, config: &RunConfig) -> Result<Vec<Stage>> {
    Ok(concat(source(overlap)?, fork_analysis(config)?))
}

fn coalescence_stages(overlap: f64, config: &RunConfig) -> Result<Vec<Stage>> {
    Ok(concat(
        source(overlap)?,
        same_state_analysis(HologramVariant::ForkPm2, config)?,
    ))
}

fn erasure_stages(
    overlap: f64,
    variant: HologramVariant,
    config: &RunConfig,
) -> Result<Vec<Stage>> {
    let mut s = source(overlap)?;
    s.push(Stage::Element(LinearElement::polarizer(PolState::H, "a")));
    s.extend(if variant == HologramVariant::ForkPm2 {
        fork_analysis(config)?
    } else {
        same_state_analysis(variant, config)?
    });
    Ok(s)
}

/// Nominal pipelines at zero delay, keyed by circuit file name.
pub(super) fn named_stages(config: &RunConfig) -> Result<Vec<(String, Vec<Stage>)>> {
    let o = overlap(0.0, config)?;
    let mut out = vec![
        ("hom-scan".to_owned(), hom_stages(o, config)?),
        ("coalescence".to_owned(), coalescence_stages(o, config)?),
    ];
    for v in [
        HologramVariant::ForkPm2,
        HologramVariant::DPlus,
        HologramVariant::DR,
    ] {
        out.push((
            format!("erasure-{}", v.as_str()),
            erasure_stages(o, v, config)?,
        ));
    }
    Ok(out)
}

fn parameters(config: &RunConfig, extra: serde_json::Value) -> serde_json::Value {
    let mut v = json!({
        "noise": config.noise,
        "apparatus": config.apparatus,
        "shots": config.shots,
        "seed": config.seed,
    });
    if let (Some(obj), serde_json::Value::Object(more)) = (v.as_object_mut(), extra) {
        obj.extend(more);
    }
    v
}

fn draw(
    setting: &str,
    label: &str,
    p: f64,
    config: &RunConfig,
    rng: &mut ChaCha8Rng,
) -> Result<Option<CountRecord>> {
    let Some(shots) = config.shots else {
        return Ok(None);
    };
    let mut recs = sample_counts_with(setting, &[(label.to_owned(), p)], shots, config.seed, rng)?;
    Ok(recs.pop())
}

/// Hong–Ou–Mandel dip in `[D_A, D_B]` over a delay scan.
///
/// Coincidence probabilities are conditioned on both photons surviving the
/// analysis optics, so the plateau is 1/2. Metrics: `c_inf`, `c_min`,
/// `visibility`, plus `visibility_exact` on the sampled path.
pub fn run_hom_scan(t_d_ps: &[f64], config: &RunConfig) -> Result<ScenarioResult> {
    config.noise.validate()?;
    if t_d_ps.is_empty() {
        return Err(Error::param("t_d", "scan needs at least one delay"));
    }
    let pattern = fork_pattern()?;
    let label = pattern.label();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut result = ScenarioResult::new(
        ScenarioKind::HomScan,
        parameters(config, json!({ "t_d_ps": t_d_ps })),
    );
    let mut points = Vec::with_capacity(t_d_ps.len());
    let mut counts = Vec::new();
    let mut success = 0.0;
    for &t in t_d_ps {
        let stages = hom_stages(overlap(t, config)?, config)?;
        let r = rate(&stages, &pattern, config)?;
        success += r.absolute / t_d_ps.len() as f64;
        let setting = format!("t_d={t}");
        result.probabilities.push(Probability {
            setting: setting.clone(),
            outcome: label.clone(),
            probability: r.conditional,
        });
        let rec = draw(&setting, &label, r.conditional, config, &mut rng)?;
        points.push(ScanPoint {
            t_d_ps: t,
            coincidence_prob: r.conditional,
            counts: rec.as_ref().map(|r| r.counts),
            shots: rec.as_ref().map(|r| r.shots),
        });
        counts.extend(rec);
    }
    let tau_c = config.apparatus.tau_c_ps;
    let exact: Vec<(f64, f64)> = points
        .iter()
        .map(|p| (p.t_d_ps, p.coincidence_prob))
        .collect();
    let (c_inf, c_min, v) = match config.shots {
        None => dip_visibility(&exact, tau_c)?,
        Some(shots) => {
            let sampled: Vec<(f64, f64)> = points
                .iter()
                .map(|p| (p.t_d_ps, p.counts.unwrap_or(0) as f64 / shots.max(1) as f64))
                .collect();
            let (_, _, v_exact) = dip_visibility(&exact, tau_c)?;
            result.metrics.insert("visibility_exact".into(), v_exact);
            result.counts = Some(counts);
            dip_visibility(&sampled, tau_c)?
        }
    };
    result.metrics.insert("c_inf".into(), c_inf);
    result.metrics.insert("c_min".into(), c_min);
    result.metrics.insert("visibility".into(), v);
    result.metrics.insert("success_probability".into(), success);
    result.success_probability = success;
    result.scan = Some(points);
    Ok(result)
}

/// Coalescence enhancement Γ: two photons in the same +2 order, split on a
/// beam splitter, relative to the fully distinguishable case.
///
/// The scan holds absolute `[D_A, D_A']` probabilities. Metric `gamma` is the
/// largest ratio over the scan, `gamma_at_zero` the ratio nearest `t_d = 0`.
pub fn run_coalescence_enhancement(t_d_ps: &[f64], config: &RunConfig) -> Result<ScenarioResult> {
    config.noise.validate()?;
    if t_d_ps.is_empty() {
        return Err(Error::param("t_d", "scan needs at least one delay"));
    }
    let pattern = same_state_pattern()?;
    let label = pattern.label();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut result = ScenarioResult::new(
        ScenarioKind::Coalescence,
        parameters(config, json!({ "t_d_ps": t_d_ps })),
    );
    let base = rate(&coalescence_stages(0.0, config)?, &pattern, config)?.absolute;
    if base <= 0.0 {
        return Err(Error::Data(
            "distinguishable baseline has no coincidences".into(),
        ));
    }
    let base_rec = draw("baseline", &label, base, config, &mut rng)?;
    result.probabilities.push(Probability {
        setting: "baseline".into(),
        outcome: label.clone(),
        probability: base,
    });
    let mut points = Vec::with_capacity(t_d_ps.len());
    let mut counts: Vec<CountRecord> = base_rec.iter().cloned().collect();
    for &t in t_d_ps {
        let r = rate(
            &coalescence_stages(overlap(t, config)?, config)?,
            &pattern,
            config,
        )?;
        let setting = format!("t_d={t}");
        result.probabilities.push(Probability {
            setting: setting.clone(),
            outcome: label.clone(),
            probability: r.absolute,
        });
        let rec = draw(&setting, &label, r.absolute, config, &mut rng)?;
        points.push(ScanPoint {
            t_d_ps: t,
            coincidence_prob: r.absolute,
            counts: rec.as_ref().map(|r| r.counts),
            shots: rec.as_ref().map(|r| r.shots),
        });
        counts.extend(rec);
    }
    let ratios: Vec<f64> = match &base_rec {
        None => points.iter().map(|p| p.coincidence_prob / base).collect(),
        Some(b) => {
            if b.counts == 0 {
                return Err(Error::Data(
                    "no baseline coincidences sampled; increase shots".into(),
                ));
            }
            result.counts = Some(counts);
            points
                .iter()
                .map(|p| p.counts.unwrap_or(0) as f64 / b.counts as f64)
                .collect()
        }
    };
    let nearest = points
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.t_d_ps.abs().total_cmp(&b.1.t_d_ps.abs()))
        .map(|(i, _)| i)
        .expect("non-empty scan");
    result.metrics.insert(
        "gamma".into(),
        ratios.iter().copied().fold(f64::MIN, f64::max),
    );
    result
        .metrics
        .insert("gamma_at_zero".into(), ratios[nearest]);
    result.metrics.insert("baseline".into(), base);
    result.metrics.insert(
        "success_probability".into(),
        points[nearest].coincidence_prob,
    );
    result.success_probability = points[nearest].coincidence_prob;
    result.scan = Some(points);
    Ok(result)
}

const SAME_STATE: [HologramVariant; 4] = [
    HologramVariant::DPlus,
    HologramVariant::DMinus,
    HologramVariant::DR,
    HologramVariant::DL,
];

/// Quantum erasure: an H polarizer after the q-plate removes the spin
/// label, and the OAM pair is analysed at zero delay.
///
/// Metrics:
/// - `dip_visibility`: fork `[D_A, D_B]` dip, conditional rates, against the
///   distinguishable baseline;
/// - `rate_<variant>` and `baseline_<variant>`: absolute same-state rates;
/// - `enhancement_d_R`, `enhancement_d_L`: rate over baseline;
/// - `correlation_visibility`: (dR + dL − d+ − d−)/(dR + dL + d+ + d−);
/// - `visibility`: the figure for the requested basis.
///
/// Sampled runs draw counts for every variant and recompute the metrics
/// from them.
pub fn run_erasure_correlations(basis: ErasureBasis, config: &RunConfig) -> Result<ScenarioResult> {
    config.noise.validate()?;
    let o = overlap(0.0, config)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut result = ScenarioResult::new(
        ScenarioKind::Erasure,
        parameters(config, json!({ "basis": basis })),
    );
    let mut counts = Vec::new();
    let mut estimate =
        |setting: String, label: String, p: f64, result: &mut ScenarioResult| -> Result<f64> {
            result.probabilities.push(Probability {
                setting: setting.clone(),
                outcome: label.clone(),
                probability: p,
            });
            Ok(match draw(&setting, &label, p, config, &mut rng)? {
                None => p,
                Some(rec) => {
                    let f = rec.counts as f64 / rec.shots.max(1) as f64;
                    counts.push(rec);
                    f
                }
            })
        };

    let fork = fork_pattern()?;
    let fork_label = fork.label();
    let dip = rate(
        &erasure_stages(o, HologramVariant::ForkPm2, config)?,
        &fork,
        config,
    )?
    .conditional;
    let dip_base = rate(
        &erasure_stages(0.0, HologramVariant::ForkPm2, config)?,
        &fork,
        config,
    )?
    .conditional;
    let dip = estimate("fork_pm2".into(), fork_label.clone(), dip, &mut result)?;
    let dip_base = estimate(
        "fork_pm2:baseline".into(),
        fork_label,
        dip_base,
        &mut result,
    )?;
    if dip_base > 0.0 {
        result
            .metrics
            .insert("dip_visibility".into(), (dip_base - dip) / dip_base);
    }

    let same = same_state_pattern()?;
    let same_label = same.label();
    let mut rates = [0.0; 4];
    for (i, v) in SAME_STATE.into_iter().enumerate() {
        let r = rate(&erasure_stages(o, v, config)?, &same, config)?.absolute;
        let b = rate(&erasure_stages(0.0, v, config)?, &same, config)?.absolute;
        let r = estimate(v.as_str().to_owned(), same_label.clone(), r, &mut result)?;
        let b = estimate(
            format!("{}:baseline", v.as_str()),
            same_label.clone(),
            b,
            &mut result,
        )?;
        rates[i] = r;
        result.metrics.insert(format!("rate_{}", v.as_str()), r);
        result.metrics.insert(format!("baseline_{}", v.as_str()), b);
        if matches!(v, HologramVariant::DR | HologramVariant::DL) && b > 0.0 {
            result
                .metrics
                .insert(format!("enhancement_{}", v.as_str()), r / b);
        }
    }
    let v_corr = correlation_visibility(&rates[2..], &rates[..2])?;
    result
        .metrics
        .insert("correlation_visibility".into(), v_corr);
    let headline = match basis {
        ErasureBasis::Pm2 => result.metrics.get("dip_visibility").copied(),
        ErasureBasis::DPlusMinus | ErasureBasis::DRL => Some(v_corr),
    };
    if let Some(v) = headline {
        result.metrics.insert("visibility".into(), v);
    }
    result.success_probability = rates.iter().sum();
    result
        .metrics
        .insert("success_probability".into(), result.success_probability);
    if config.shots.is_some() {
        result.counts = Some(counts);
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenarios::NoiseParams;
    use approx::assert_abs_diff_eq;

    fn scan() -> Vec<f64> {
        uniform_scan(-3.0, 3.0, 61)
    }

    #[test]
    fn ideal_dip_is_complete() {
        let r = run_hom_scan(&scan(), &RunConfig::ideal()).unwrap();
        assert_abs_diff_eq!(r.metric("visibility").unwrap(), 1.0, epsilon = 1e-12);
        // Points just past 3τ_c still carry γ² ~ 1e-4.
        assert_abs_diff_eq!(r.metric("c_inf").unwrap(), 0.5, epsilon = 1e-5);
        let tau = RunConfig::ideal().apparatus.tau_c_ps;
        for p in r.scan.unwrap() {
            let g = (-0.5 * (p.t_d_ps / tau).powi(2)).exp();
            assert_abs_diff_eq!(p.coincidence_prob, 0.5 * (1.0 - g * g), epsilon = 1e-12);
        }
    }

    #[test]
    fn distinguishability_lowers_visibility() {
        let noise = NoiseParams {
            distinguishability_eps: 0.05,
            ..NoiseParams::ideal()
        };
        let r = run_hom_scan(&scan(), &RunConfig::exact(noise)).unwrap();
        assert_abs_diff_eq!(r.metric("visibility").unwrap(), 0.95, epsilon = 1e-5);
    }

    #[test]
    fn absorption_does_not_shift_the_plateau() {
        let noise = NoiseParams {
            qplate: crate::optics::QPlateParams::measured(),
            ..NoiseParams::ideal()
        };
        let r = run_hom_scan(&scan(), &RunConfig::exact(noise)).unwrap();
        assert_abs_diff_eq!(r.metric("c_inf").unwrap(), 0.5, epsilon = 1e-5);
    }

    #[test]
    fn narrow_scan_has_no_plateau() {
        let err = run_hom_scan(&[0.0, 0.1], &RunConfig::ideal()).unwrap_err();
        assert!(matches!(err, Error::Data(_)));
    }

    #[test]
    fn coalescence_doubles() {
        let r = run_coalescence_enhancement(&[0.0], &RunConfig::ideal()).unwrap();
        assert_abs_diff_eq!(r.metric("gamma").unwrap(), 2.0, epsilon = 1e-9);
        let noise = NoiseParams {
            distinguishability_eps: 0.06,
            ..NoiseParams::ideal()
        };
        let r = run_coalescence_enhancement(&[0.0], &RunConfig::exact(noise)).unwrap();
        assert_abs_diff_eq!(r.metric("gamma").unwrap(), 1.94, epsilon = 1e-9);
    }

    #[test]
    fn erasure_ideal_correlations() {
        let r = run_erasure_correlations(ErasureBasis::DRL, &RunConfig::ideal()).unwrap();
        assert_abs_diff_eq!(r.metric("rate_d_plus").unwrap(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.metric("rate_d_minus").unwrap(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.metric("enhancement_d_R").unwrap(), 2.0, epsilon = 1e-9);
        assert_abs_diff_eq!(r.metric("enhancement_d_L").unwrap(), 2.0, epsilon = 1e-9);
        assert_abs_diff_eq!(
            r.metric("correlation_visibility").unwrap(),
            1.0,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(r.metric("dip_visibility").unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn dephasing_drives_correlations_only() {
        let noise = NoiseParams {
            oam_dephasing: 0.1,
            ..NoiseParams::ideal()
        };
        let r =
            run_erasure_correlations(ErasureBasis::DPlusMinus, &RunConfig::exact(noise)).unwrap();
        assert!(r.metric("correlation_visibility").unwrap() < 0.99);
        assert_abs_diff_eq!(r.metric("dip_visibility").unwrap(), 1.0, epsilon = 1e-12);
        let noise = NoiseParams {
            distinguishability_eps: 0.2,
            ..NoiseParams::ideal()
        };
        let r = run_erasure_correlations(ErasureBasis::Pm2, &RunConfig::exact(noise)).unwrap();
        assert_abs_diff_eq!(
            r.metric("correlation_visibility").unwrap(),
            1.0,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(r.metric("visibility").unwrap(), 0.8, epsilon = 1e-9);
    }

    #[test]
    fn sampled_scan_is_reproducible() {
        let config = RunConfig::sampled(NoiseParams::ideal(), 10_000, 11);
        let a = run_hom_scan(&scan(), &config).unwrap();
        let b = run_hom_scan(&scan(), &config).unwrap();
        assert_eq!(a.scan, b.scan);
        assert!(a.metric("visibility").unwrap() >= 0.99);
        let mut csv = Vec::new();
        a.write_scan_csv(&mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert!(text.starts_with("t_d_ps,coincidence_prob,counts,shots\n"));
        assert_eq!(text.lines().count(), 62);
    }
}
