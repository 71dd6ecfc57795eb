// Copyright 2026 Spinorbit Contributors
// SPDX-License-Identifier: Apache-2.0

//! Jones calculus on the stored {H, V} basis.
//!
//! Conventions:
//! - `L = (H + iV)/√2`, `R = (H − iV)/√2`.
//! - A retarder with fast axis at angle θ (counter-clockwise from H) and
//!   retardance φ is `Rot(θ) · diag(1, e^{−iφ}) · Rot(θ)ᵀ`.
//!
//! Under these conventions a quarter-wave plate at 45° maps H to L and a
//! half-wave plate at 22.5° maps H to D, each up to a global phase.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::fock::C64;

/// 2×2 Jones matrix, `m[row][col]`, acting on column vectors (H, V).
pub type Jones = [[C64; 2]; 2];

pub(crate) const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// The six cardinal polarization states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PolState {
    H,
    V,
    D,
    A,
    L,
    R,
}

impl PolState {
    pub const ALL: [PolState; 6] = [
        PolState::H,
        PolState::V,
        PolState::D,
        PolState::A,
        PolState::L,
        PolState::R,
    ];

    /// Jones vector (H, V) components.
    pub fn jones_vector(self) -> [C64; 2] {
        let s = FRAC_1_SQRT_2;
        match self {
            PolState::H => [c(1.0, 0.0), c(0.0, 0.0)],
            PolState::V => [c(0.0, 0.0), c(1.0, 0.0)],
            PolState::D => [c(s, 0.0), c(s, 0.0)],
            PolState::A => [c(s, 0.0), c(-s, 0.0)],
            PolState::L => [c(s, 0.0), c(0.0, s)],
            PolState::R => [c(s, 0.0), c(0.0, -s)],
        }
    }
}

impl fmt::Display for PolState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

impl FromStr for PolState {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "H" | "h" => Ok(PolState::H),
            "V" | "v" => Ok(PolState::V),
            "D" | "d" => Ok(PolState::D),
            "A" | "a" => Ok(PolState::A),
            "L" | "l" => Ok(PolState::L),
            "R" | "r" => Ok(PolState::R),
            other => Err(format!(
                "unknown polarization `{other}` (expected H, V, D, A, L or R)"
            )),
        }
    }
}

pub fn identity() -> Jones {
    [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(1.0, 0.0)]]
}

pub fn mul(a: &Jones, b: &Jones) -> Jones {
    let mut out = [[c(0.0, 0.0); 2]; 2];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, entry) in row.iter_mut().enumerate() {
            *entry = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

pub fn adjoint(a: &Jones) -> Jones {
    [
        [a[0][0].conj(), a[1][0].conj()],
        [a[0][1].conj(), a[1][1].conj()],
    ]
}

pub fn apply(m: &Jones, v: &[C64; 2]) -> [C64; 2] {
    [
        m[0][0] * v[0] + m[0][1] * v[1],
        m[1][0] * v[0] + m[1][1] * v[1],
    ]
}

/// General linear retarder.
pub fn retarder(theta_rad: f64, retardance: f64) -> Jones {
    let (s, co) = theta_rad.sin_cos();
    let rot = [[c(co, 0.0), c(-s, 0.0)], [c(s, 0.0), c(co, 0.0)]];
    let rot_t = [[c(co, 0.0), c(s, 0.0)], [c(-s, 0.0), c(co, 0.0)]];
    let phase = C64::from_polar(1.0, -retardance);
    let d = [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), phase]];
    mul(&mul(&rot, &d), &rot_t)
}

pub fn quarter_wave(theta_rad: f64) -> Jones {
    retarder(theta_rad, std::f64::consts::FRAC_PI_2)
}

pub fn half_wave(theta_rad: f64) -> Jones {
    retarder(theta_rad, std::f64::consts::PI)
}

/// Projector |e⟩⟨e| onto a polarization state.
pub fn projector(state: PolState) -> Jones {
    let e = state.jones_vector();
    [
        [e[0] * e[0].conj(), e[0] * e[1].conj()],
        [e[1] * e[0].conj(), e[1] * e[1].conj()],
    ]
}

/// Pauli matrices on the {H, V} basis, in the order I, X, Y, Z.
pub fn paulis() -> [Jones; 4] {
    [
        identity(),
        [[c(0.0, 0.0), c(1.0, 0.0)], [c(1.0, 0.0), c(0.0, 0.0)]],
        [[c(0.0, 0.0), c(0.0, -1.0)], [c(0.0, 1.0), c(0.0, 0.0)]],
        [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(-1.0, 0.0)]],
    ]
}

/// |⟨a|b⟩|² for normalized Jones vectors.
pub fn overlap_sqr(a: &[C64; 2], b: &[C64; 2]) -> f64 {
    (a[0].conj() * b[0] + a[1].conj() * b[1]).norm_sqr()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn deg(x: f64) -> f64 {
        x.to_radians()
    }

    #[test]
    fn quarter_wave_45_makes_left_circular() {
        let out = apply(&quarter_wave(deg(45.0)), &PolState::H.jones_vector());
        assert_abs_diff_eq!(
            overlap_sqr(&out, &PolState::L.jones_vector()),
            1.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn half_wave_22_5_makes_diagonal() {
        let out = apply(&half_wave(deg(22.5)), &PolState::H.jones_vector());
        assert_abs_diff_eq!(
            overlap_sqr(&out, &PolState::D.jones_vector()),
            1.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn quarter_wave_0_leaves_h() {
        let out = apply(&quarter_wave(0.0), &PolState::H.jones_vector());
        assert_abs_diff_eq!(
            overlap_sqr(&out, &PolState::H.jones_vector()),
            1.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn projector_is_idempotent() {
        for s in PolState::ALL {
            let p = projector(s);
            let pp = mul(&p, &p);
            for i in 0..2 {
                for j in 0..2 {
                    assert_abs_diff_eq!((pp[i][j] - p[i][j]).norm(), 0.0, epsilon = 1e-15);
                }
            }
        }
    }

    proptest! {
        #[test]
        fn retarders_are_unitary(theta in -3.2f64..3.2, phi in 0.0f64..6.3) {
            let j = retarder(theta, phi);
            let u = mul(&adjoint(&j), &j);
            prop_assert!((u[0][0] - 1.0).norm() < 1e-12);
            prop_assert!((u[1][1] - 1.0).norm() < 1e-12);
            prop_assert!(u[0][1].norm() < 1e-12);
        }
    }
}
