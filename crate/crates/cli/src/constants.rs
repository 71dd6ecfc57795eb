// Copyright 2026 Spinorbit Contributors
// SPDX-License-Identifier: Apache-2.0

//! Physical constants file. Defaults live in `docs/constants.toml`; flags
//! override file values.

use std::path::Path;

use serde::Deserialize;
use spinorbit::constants::{coherence_time_ps, FILTER_BANDWIDTH_NM, WAVELENGTH_NM};
use spinorbit::scenarios::Apparatus;
use spinorbit::{Error, Result};

use crate::output::read_text;
use crate::GlobalArgs;

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Constants {
    pub wavelength_nm: f64,
    pub bandwidth_nm: f64,
    pub hologram_efficiency: f64,
    pub n_max: usize,
}

impl Default for Constants {
    fn default() -> Self {
        let a = Apparatus::default();
        Constants {
            wavelength_nm: WAVELENGTH_NM,
            bandwidth_nm: FILTER_BANDWIDTH_NM,
            hologram_efficiency: a.hologram_efficiency,
            n_max: a.n_max,
        }
    }
}

impl Constants {
    pub fn from_toml(text: &str, origin: &Path) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Configuration(format!("{}: {e}", origin.display())))
    }

    pub fn apparatus(&self) -> Result<Apparatus> {
        if !(self.wavelength_nm > 0.0 && self.bandwidth_nm > 0.0) {
            return Err(Error::Configuration(
                "wavelength_nm and bandwidth_nm must be positive".into(),
            ));
        }
        if !(0.0..=0.5).contains(&self.hologram_efficiency) {
            return Err(Error::Configuration(
                "hologram_efficiency must lie in [0, 0.5]".into(),
            ));
        }
        Ok(Apparatus {
            tau_c_ps: coherence_time_ps(self.wavelength_nm, self.bandwidth_nm),
            hologram_efficiency: self.hologram_efficiency,
            n_max: self.n_max,
        })
    }
}

/// Apparatus after applying the constants file and flag overrides.
pub fn load(global: &GlobalArgs) -> Result<Apparatus> {
    let mut c = match &global.constants {
        Some(path) => Constants::from_toml(&read_text(path)?, path)?,
        None => Constants::default(),
    };
    if let Some(w) = global.wavelength_nm {
        c.wavelength_nm = w;
    }
    if let Some(b) = global.bandwidth_nm {
        c.bandwidth_nm = b;
    }
    c.apparatus()
}
