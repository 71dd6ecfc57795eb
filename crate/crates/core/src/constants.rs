// Copyright 2026 Spinorbit Contributors
// SPDX-License-Identifier: Apache-2.0

//! Physical constants of the two-photon source.
//!
//! Delays and coherence times are carried in picoseconds throughout the
//! scenarios. The coherence time follows from the down-converted wavelength
//! and the interference-filter bandwidth as `tau_c = lambda^2 / (c * dlambda)`.

/// Down-converted photon wavelength, nm.
pub const WAVELENGTH_NM: f64 = 795.0;

/// Interference filter bandwidth (FWHM), nm.
pub const FILTER_BANDWIDTH_NM: f64 = 6.0;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Coherence time in picoseconds for the given wavelength and bandwidth (both nm).
pub fn coherence_time_ps(wavelength_nm: f64, bandwidth_nm: f64) -> f64 {
    let lambda = wavelength_nm * 1e-9;
    let dlambda = bandwidth_nm * 1e-9;
    lambda * lambda / (SPEED_OF_LIGHT * dlambda) * 1e12
}

/// Coherence time of the default source, ≈ 0.351 ps.
pub fn default_coherence_time_ps() -> f64 {
    coherence_time_ps(WAVELENGTH_NM, FILTER_BANDWIDTH_NM)
}
