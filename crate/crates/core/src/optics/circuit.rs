// Copyright 2026 Spinorbit Contributors
// SPDX-License-Identifier: Apache-2.0

//! Circuit files: a JSON array of `{element, params, paths}` steps applied in
//! order.
//!
//! Path conventions per element:
//! - single-path elements (`qplate`, `quarter_wave`, `half_wave`, `polarizer`,
//!   `smf_filter`, `block`, `delay`, `oam_phase`, `jones`): `[path]`
//! - `pbs`: `[in, transmitted, reflected]`
//! - `beamsplitter`: `[in, a, b]`
//! - `hologram`: `[in, plus, zero, minus]`
//! - `matrix`: no paths, modes are listed in `params`

use std::collections::BTreeSet;

use nalgebra::DMatrix;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::jones::{Jones, PolState};
use super::{HologramParams, HologramVariant, LinearElement, QPlateParams};
use crate::constants::default_coherence_time_ps;
use crate::error::{Error, Result};
use crate::fock::{wavepacket_decompose, ModeKey, PhotonicState, Pol, C64};

/// One step of a circuit file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircuitStep {
    pub element: String,
    #[serde(default)]
    pub params: Map<String, Value>,
    #[serde(default)]
    pub paths: Vec<String>,
}

/// Parsed circuit file.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CircuitSpec(pub Vec<CircuitStep>);

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Empty {}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Angle {
    theta_deg: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PolarizerParams {
    direction: PolState,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct QPlateDoc {
    #[serde(default = "one")]
    q_charge: i32,
    #[serde(default = "pi")]
    delta: f64,
    #[serde(default = "unit")]
    eta: f64,
    #[serde(default = "unit")]
    transmittance: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct HologramDoc {
    #[serde(default = "two")]
    delta_l_per_order: i32,
    #[serde(default = "tenth")]
    first_order_efficiency: f64,
    #[serde(default = "fork")]
    variant: HologramVariant,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DelayDoc {
    #[serde(default = "vertical")]
    pol: Pol,
    overlap: Option<f64>,
    t_d_ps: Option<f64>,
    tau_c_ps: Option<f64>,
    #[serde(default)]
    residual_mismatch: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PhaseDoc {
    phi: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct JonesDoc {
    matrix: [[[f64; 2]; 2]; 2],
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MatrixDoc {
    in_modes: Vec<ModeKey>,
    out_modes: Vec<ModeKey>,
    matrix: Vec<Vec<[f64; 2]>>,
}

fn one() -> i32 {
    1
}
fn two() -> i32 {
    2
}
fn pi() -> f64 {
    std::f64::consts::PI
}
fn unit() -> f64 {
    1.0
}
fn tenth() -> f64 {
    0.10
}
fn fork() -> HologramVariant {
    HologramVariant::ForkPm2
}
fn vertical() -> Pol {
    Pol::V
}

impl CircuitStep {
    fn schema(&self, index: usize, reason: impl Into<String>) -> Error {
        Error::Schema {
            location: format!("circuit step {index} ({})", self.element),
            reason: reason.into(),
        }
    }

    fn params_as<T: DeserializeOwned>(&self, index: usize) -> Result<T> {
        serde_json::from_value(Value::Object(self.params.clone()))
            .map_err(|e| self.schema(index, e.to_string()))
    }

    fn paths_n(&self, index: usize, n: usize) -> Result<&[String]> {
        if self.paths.len() != n {
            return Err(self.schema(
                index,
                format!("expected {n} path(s), got {}", self.paths.len()),
            ));
        }
        Ok(&self.paths)
    }

    /// Builds the element; `index` is used only for error messages.
    pub fn build(&self, index: usize) -> Result<LinearElement> {
        let locate = |e: Error| match e {
            Error::Parameter { name, reason } => self.schema(index, format!("`{name}`: {reason}")),
            Error::Configuration(reason) | Error::Domain(reason) => self.schema(index, reason),
            other => other,
        };
        let element = match self.element.as_str() {
            "qplate" => {
                let p: QPlateDoc = self.params_as(index)?;
                let path = &self.paths_n(index, 1)?[0];
                LinearElement::qplate(
                    QPlateParams {
                        q_charge: p.q_charge,
                        delta: p.delta,
                        eta: p.eta,
                        transmittance: p.transmittance,
                    },
                    path,
                )
            }
            "quarter_wave" => {
                let p: Angle = self.params_as(index)?;
                Ok(LinearElement::quarter_wave(
                    p.theta_deg,
                    &self.paths_n(index, 1)?[0],
                ))
            }
            "half_wave" => {
                let p: Angle = self.params_as(index)?;
                Ok(LinearElement::half_wave(
                    p.theta_deg,
                    &self.paths_n(index, 1)?[0],
                ))
            }
            "polarizer" => {
                let p: PolarizerParams = self.params_as(index)?;
                Ok(LinearElement::polarizer(
                    p.direction,
                    &self.paths_n(index, 1)?[0],
                ))
            }
            "pbs" => {
                let _: Empty = self.params_as(index)?;
                let p = self.paths_n(index, 3)?;
                LinearElement::pbs(&p[0], &p[1], &p[2])
            }
            "beamsplitter" => {
                let _: Empty = self.params_as(index)?;
                let p = self.paths_n(index, 3)?;
                LinearElement::beamsplitter_5050(&p[0], &p[1], &p[2])
            }
            "hologram" => {
                let h: HologramDoc = self.params_as(index)?;
                let p = self.paths_n(index, 4)?;
                LinearElement::hologram(
                    HologramParams {
                        delta_l_per_order: h.delta_l_per_order,
                        first_order_efficiency: h.first_order_efficiency,
                        variant: h.variant,
                    },
                    &p[0],
                    &p[1],
                    &p[2],
                    &p[3],
                )
            }
            "smf_filter" => {
                let _: Empty = self.params_as(index)?;
                Ok(LinearElement::smf_filter(&self.paths_n(index, 1)?[0]))
            }
            "block" => {
                let _: Empty = self.params_as(index)?;
                Ok(LinearElement::block(&self.paths_n(index, 1)?[0]))
            }
            "delay" => {
                let d: DelayDoc = self.params_as(index)?;
                let path = &self.paths_n(index, 1)?[0];
                let gamma = match (d.overlap, d.t_d_ps) {
                    (Some(g), None) => Ok(g),
                    (None, Some(t)) => {
                        let tau = d.tau_c_ps.unwrap_or_else(default_coherence_time_ps);
                        wavepacket_decompose(t, tau).map(|(g, _)| g.re)
                    }
                    _ => Err(self.schema(index, "give exactly one of `overlap` or `t_d_ps`")),
                }
                .map_err(locate)?;
                if !(0.0..=1.0).contains(&d.residual_mismatch) {
                    return Err(self.schema(index, "`residual_mismatch` must lie in [0, 1]"));
                }
                LinearElement::delay_with_overlap(
                    gamma * (1.0 - d.residual_mismatch).sqrt(),
                    d.pol,
                    path,
                )
            }
            "oam_phase" => {
                let p: PhaseDoc = self.params_as(index)?;
                Ok(LinearElement::oam_phase(p.phi, &self.paths_n(index, 1)?[0]))
            }
            "jones" => {
                let j: JonesDoc = self.params_as(index)?;
                let m: Jones = j.matrix.map(|row| row.map(|[re, im]| C64::new(re, im)));
                LinearElement::jones(&self.paths_n(index, 1)?[0], m)
            }
            "matrix" => {
                let m: MatrixDoc = self.params_as(index)?;
                self.paths_n(index, 0)?;
                let rows = m.matrix.len();
                let cols = m.matrix.first().map_or(0, Vec::len);
                if m.matrix.iter().any(|r| r.len() != cols) {
                    return Err(self.schema(index, "matrix rows have different lengths"));
                }
                let data = DMatrix::from_fn(rows, cols, |i, j| {
                    C64::new(m.matrix[i][j][0], m.matrix[i][j][1])
                });
                LinearElement::matrix(m.in_modes, m.out_modes, data)
            }
            other => {
                return Err(self.schema(index, format!("unknown element `{other}`")));
            }
        };
        element.map_err(locate)
    }
}

impl CircuitSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Schema {
            location: format!("line {} column {}", e.line(), e.column()),
            reason: e.to_string(),
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn build(&self) -> Result<Circuit> {
        let elements = self
            .0
            .iter()
            .enumerate()
            .map(|(i, s)| s.build(i))
            .collect::<Result<Vec<_>>>()?;
        Ok(Circuit { elements })
    }
}

/// An ordered list of elements.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Circuit {
    elements: Vec<LinearElement>,
}

impl Circuit {
    pub fn new(elements: Vec<LinearElement>) -> Self {
        Circuit { elements }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        CircuitSpec::from_json(text)?.build()
    }

    pub fn push(&mut self, element: LinearElement) -> &mut Self {
        self.elements.push(element);
        self
    }

    pub fn elements(&self) -> &[LinearElement] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn to_spec(&self) -> CircuitSpec {
        CircuitSpec(self.elements.iter().map(LinearElement::to_step).collect())
    }

    /// Checks that every step reads only paths that exist by then.
    pub fn validate_paths<'a>(&self, inputs: impl IntoIterator<Item = &'a str>) -> Result<()> {
        let mut known: BTreeSet<String> = inputs.into_iter().map(str::to_owned).collect();
        for (index, e) in self.elements.iter().enumerate() {
            for path in e.input_paths() {
                if !known.contains(&path) {
                    return Err(Error::UnknownPath { index, path });
                }
            }
            known.extend(e.output_paths());
        }
        Ok(())
    }

    /// Runs the state through every element after checking paths.
    pub fn apply(&self, state: &PhotonicState) -> Result<PhotonicState> {
        let paths = state.paths();
        self.validate_paths(paths.iter().map(String::as_str))?;
        Ok(self.elements.iter().fold(state.clone(), |s, e| e.apply(&s)))
    }
}

impl FromIterator<LinearElement> for Circuit {
    fn from_iter<I: IntoIterator<Item = LinearElement>>(iter: I) -> Self {
        Circuit {
            elements: iter.into_iter().collect(),
        }
    }
}
