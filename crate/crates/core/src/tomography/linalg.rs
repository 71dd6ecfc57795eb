// Copyright 2026 Spinorbit Contributors
// SPDX-License-Identifier: Apache-2.0

//! Small dense helpers on complex matrices.

use nalgebra::{DMatrix, DVector};

use crate::fock::C64;

pub type CMatrix = DMatrix<C64>;

pub(crate) fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// `(A + A†)/2`.
pub fn hermitize(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * c(0.5, 0.0)
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
pub fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let eig = hermitize(m).symmetric_eigen();
    let n = m.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(n, n, |r, k| eig.eigenvectors[(r, order[k])]);
    (values, vectors)
}

/// `V f(Λ) V†` for a Hermitian input.
pub fn hermitian_map(m: &CMatrix, f: impl Fn(f64) -> f64) -> CMatrix {
    let (values, vectors) = hermitian_eigen(m);
    let d = DVector::from_iterator(values.len(), values.iter().map(|&x| c(f(x), 0.0)));
    let out = &vectors * CMatrix::from_diagonal(&d) * vectors.adjoint();
    hermitize(&out)
}

/// Principal square root of a Hermitian PSD matrix; small negative
/// eigenvalues are clipped.
pub fn psd_sqrt(m: &CMatrix) -> CMatrix {
    hermitian_map(m, |x| x.max(0.0).sqrt())
}

pub fn trace(m: &CMatrix) -> C64 {
    m.diagonal().iter().sum()
}

pub fn min_eigenvalue(m: &CMatrix) -> f64 {
    hermitian_eigen(m).0.first().copied().unwrap_or(0.0)
}

/// Closest unit-trace PSD matrix in Frobenius norm: project the spectrum of
/// the Hermitian part onto the probability simplex.
pub fn project_density(m: &CMatrix) -> CMatrix {
    let (values, vectors) = hermitian_eigen(m);
    let projected = simplex_projection(&values);
    let d = DVector::from_iterator(projected.len(), projected.iter().map(|&x| c(x, 0.0)));
    hermitize(&(&vectors * CMatrix::from_diagonal(&d) * vectors.adjoint()))
}

/// Euclidean projection of `v` onto {x ≥ 0, Σx = 1}.
fn simplex_projection(v: &[f64]) -> Vec<f64> {
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut shift = 0.0;
    for (k, &x) in sorted.iter().enumerate() {
        cumulative += x;
        let candidate = (cumulative - 1.0) / (k as f64 + 1.0);
        if x - candidate > 0.0 {
            shift = candidate;
        }
    }
    v.iter().map(|&x| (x - shift).max(0.0)).collect()
}

/// Projection onto the PSD cone (no trace constraint).
pub fn project_psd(m: &CMatrix) -> CMatrix {
    hermitian_map(m, |x| x.max(0.0))
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Column vector from amplitudes.
pub fn ket(v: &[C64]) -> DVector<C64> {
    DVector::from_column_slice(v)
}

/// `|v⟩⟨v|`.
pub fn outer(v: &DVector<C64>) -> CMatrix {
    v * v.adjoint()
}

/// Pauli matrices I, X, Y, Z.
pub fn paulis() -> [CMatrix; 4] {
    crate::optics::jones::paulis().map(|p| CMatrix::from_fn(2, 2, |i, j| p[i][j]))
}

/// Lower-triangular `L` with `L L† = A` for Hermitian PSD `A`. Columns whose
/// pivot vanishes are zeroed instead of failing.
pub fn cholesky_psd(a: &CMatrix) -> CMatrix {
    let n = a.nrows();
    let mut l = CMatrix::zeros(n, n);
    let scale = a
        .diagonal()
        .iter()
        .map(|z| z.re.abs())
        .fold(0.0, f64::max)
        .max(1.0);
    for j in 0..n {
        let mut d = a[(j, j)].re;
        for k in 0..j {
            d -= l[(j, k)].norm_sqr();
        }
        if d <= 1e-14 * scale {
            continue;
        }
        let pivot = d.sqrt();
        l[(j, j)] = c(pivot, 0.0);
        for i in j + 1..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = s / pivot;
        }
    }
    l
}

/// Numerical rank by singular values relative to the largest.
pub fn rank(m: &CMatrix, rel_tol: f64) -> usize {
    let sv = m.clone().singular_values();
    let max = sv.iter().cloned().fold(0.0, f64::max);
    if max == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * max).count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn simplex_projection_fixes_valid_spectrum() {
        let v = [0.1, 0.2, 0.3, 0.4];
        let p = simplex_projection(&v);
        for (a, b) in v.iter().zip(&p) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-15);
        }
        let p = simplex_projection(&[-0.2, 0.1, 0.3, 0.8]);
        assert_abs_diff_eq!(p.iter().sum::<f64>(), 1.0, epsilon = 1e-15);
        assert!(p.iter().all(|&x| x >= 0.0));
        assert_eq!(p[0], 0.0);
    }

    #[test]
    fn cholesky_reconstructs_rank_deficient() {
        let v = ket(&[c(0.5, 0.0), c(0.0, 0.5), c(0.5, 0.0), c(-0.5, 0.0)]);
        let a = outer(&v);
        let l = cholesky_psd(&a);
        assert!((&l * l.adjoint() - &a).norm() < 1e-12);
        for i in 0..4 {
            for j in i + 1..4 {
                assert_eq!(l[(i, j)], c(0.0, 0.0));
            }
        }
    }

    #[test]
    fn psd_sqrt_squares_back() {
        let m =
            CMatrix::from_row_slice(2, 2, &[c(2.0, 0.0), c(0.0, 1.0), c(0.0, -1.0), c(2.0, 0.0)]);
        let s = psd_sqrt(&m);
        assert!((&s * &s - &m).norm() < 1e-12);
    }
}
