// Copyright 2026 Spinorbit Contributors
// SPDX-License-Identifier: Apache-2.0

//! Photonic states carrying polarization and orbital angular momentum,
//! the q-plate spin-orbit interface, two-photon coalescence, and the
//! tomography needed to read the results back out.
//!
//! States are exact superpositions of multimode Fock states
//! ([`PhotonicState`]). Optical elements ([`LinearElement`]) act on creation
//! operators; lossy ones fold the discarded norm into the state's success
//! probability. [`measurement`] turns states into coincidence probabilities
//! and counts, [`tomography`] turns counts back into density matrices, and
//! [`scenarios`] strings everything together into the standard experiments.

pub mod constants;
pub mod error;
pub mod fock;
pub mod measurement;
pub mod optics;
pub mod scenarios;
pub mod tomography;

pub use error::{Error, Result};
pub use fock::{FockBasisState, ModeKey, PhotonicState, Pol, C64};
pub use measurement::{CoincidencePattern, CountRecord, DetectorSpec};
pub use optics::jones::PolState;
pub use optics::{
    Circuit, CircuitSpec, HologramParams, HologramVariant, LinearElement, QPlateParams,
};
pub use tomography::{ChiMatrix, DensityMatrix, TomoSettings};
