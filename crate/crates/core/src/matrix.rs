//! Dense complex matrix helpers shared by every module.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

#[inline]
pub fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Square, finite-entry check.
pub fn check_operator(m: &CMatrix) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            let z = m[(i, j)];
            if !z.re.is_finite() || !z.im.is_finite() {
                return Err(Error::NonFinite { row: i, col: j });
            }
        }
    }
    Ok(())
}

pub fn check_dim(m: &CMatrix, dim: usize) -> Result<()> {
    if m.nrows() != dim || m.ncols() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: m.nrows().max(m.ncols()),
        });
    }
    Ok(())
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm_sqr())).sqrt()
}

/// max |m_ij - conj(m_ji)|
pub fn hermiticity_residual(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for j in 0..n {
        for i in 0..=j {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * c(0.5)
}

/// True when every off-diagonal entry is exactly zero.
pub fn is_diagonal(m: &CMatrix) -> bool {
    let n = m.nrows();
    (0..n).all(|j| (0..n).all(|i| i == j || m[(i, j)] == ZERO))
}

/// Tr[a b] without forming the product.
pub fn trace_product(a: &CMatrix, b: &CMatrix) -> Complex64 {
    a.iter().zip(b.transpose().iter()).map(|(x, y)| x * y).sum()
}

/// `y += a x`, elementwise over equal-shaped matrices.
pub fn axpy(y: &mut CMatrix, a: Complex64, x: &CMatrix) {
    debug_assert_eq!(y.shape(), x.shape());
    for (yi, xi) in y.as_mut_slice().iter_mut().zip(x.as_slice()) {
        *yi += a * xi;
    }
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

/// Eigendecomposition of a Hermitian matrix, returned as (eigenvalues, eigenvectors as columns).
///
/// The matrix is split into the connected components of its nonzero pattern
/// first, so block-diagonal inputs (dephased states, Dicke-like blocks) are
/// diagonalized block by block. Eigenvectors never mix components.
pub fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = m.nrows();
    let components = connected_components(m);
    let mut values = vec![0.0; n];
    let mut vectors = CMatrix::zeros(n, n);
    let mut col = 0;
    for comp in components {
        let k = comp.len();
        if k == 1 {
            values[col] = m[(comp[0], comp[0])].re;
            vectors[(comp[0], col)] = ONE;
            col += 1;
            continue;
        }
        let sub = CMatrix::from_fn(k, k, |i, j| {
            0.5 * (m[(comp[i], comp[j])] + m[(comp[j], comp[i])].conj())
        });
        let eig = sub.symmetric_eigen();
        for e in 0..k {
            values[col] = eig.eigenvalues[e];
            for (i, &row) in comp.iter().enumerate() {
                vectors[(row, col)] = eig.eigenvectors[(i, e)];
            }
            col += 1;
        }
    }
    (values, vectors)
}

fn connected_components(m: &CMatrix) -> Vec<Vec<usize>> {
    let n = m.nrows();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for j in 0..n {
        for i in 0..j {
            if m[(i, j)] != ZERO || m[(j, i)] != ZERO {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; n];
    for i in 0..n {
        let r = find(&mut parent, i);
        if slot[r] == usize::MAX {
            slot[r] = groups.len();
            groups.push(Vec::new());
        }
        groups[slot[r]].push(i);
    }
    groups
}

pub fn min_eigenvalue(m: &CMatrix) -> f64 {
    hermitian_eigen(m).0.into_iter().fold(f64::INFINITY, f64::min)
}

/// Whether the Hermitian part of `m` has all eigenvalues above `-slack`.
///
/// Attempts a Cholesky factorization of `m + slack * I`, which is much cheaper
/// than a full eigendecomposition at the dimensions of the collective models.
/// Pivots are checked on their real part since the complex square root never
/// fails.
pub fn is_psd_within(m: &CMatrix, slack: f64) -> bool {
    let n = m.nrows();
    let mut a = hermitian_part(m);
    for i in 0..n {
        a[(i, i)] += c(slack);
    }
    // upper factor U (A = U†U) overwrites the upper triangle; columns stay contiguous
    for j in 0..n {
        let col_j = a.column(j);
        let pivot = a[(j, j)].re - col_j.rows(0, j).norm_squared();
        if !(pivot > 0.0) {
            return false;
        }
        let root = pivot.sqrt();
        a[(j, j)] = c(root);
        for i in (j + 1)..n {
            let dot = a.column(j).rows(0, j).dotc(&a.column(i).rows(0, j));
            a[(j, i)] = (a[(j, i)] - dot) / root;
        }
    }
    true
}

/// Half the trace norm of `a - b`.
pub fn trace_distance(a: &CMatrix, b: &CMatrix) -> f64 {
    let diff = a - b;
    0.5 * hermitian_eigen(&diff).0.iter().map(|v| v.abs()).sum::<f64>()
}

/// Von Neumann entropy -Tr[ρ log ρ] with the 0 log 0 = 0 convention.
pub fn von_neumann_entropy(rho: &CMatrix) -> f64 {
    hermitian_eigen(rho)
        .0
        .into_iter()
        .filter(|&p| p > 0.0)
        .map(|p| -p * p.ln())
        .sum()
}

/// |psi><phi|
pub fn outer(psi: &CVector, phi: &CVector) -> CMatrix {
    psi * phi.adjoint()
}

pub fn basis_vector(dim: usize, k: usize) -> CVector {
    let mut v = CVector::zeros(dim);
    v[k] = ONE;
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blocked_eigen_matches_dense() {
        let mut m = CMatrix::zeros(5, 5);
        m[(0, 0)] = c(1.0);
        m[(0, 3)] = Complex64::new(0.2, 0.1);
        m[(3, 0)] = Complex64::new(0.2, -0.1);
        m[(3, 3)] = c(0.5);
        m[(1, 1)] = c(-0.3);
        m[(2, 4)] = c(0.7);
        m[(4, 2)] = c(0.7);
        let (vals, vecs) = hermitian_eigen(&m);
        let recon =
            &vecs * CMatrix::from_diagonal(&CVector::from_iterator(5, vals.iter().map(|&v| c(v)))) * vecs.adjoint();
        assert!(max_abs(&(recon - &m)) < 1e-14);
        let mut dense: Vec<f64> = m.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
        let mut ours = vals.clone();
        dense.sort_by(f64::total_cmp);
        ours.sort_by(f64::total_cmp);
        for (a, b) in dense.iter().zip(&ours) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn psd_check_uses_slack() {
        let m = CMatrix::from_diagonal(&CVector::from_vec(vec![c(1.0), c(-1e-9)]));
        assert!(!is_psd_within(&m, 1e-10));
        assert!(is_psd_within(&m, 1e-8));
    }

    #[test]
    fn trace_product_matches_product_trace() {
        let a = CMatrix::from_fn(3, 3, |i, j| Complex64::new(i as f64 + 0.5, j as f64 - 1.0));
        let b = CMatrix::from_fn(3, 3, |i, j| Complex64::new((i * j) as f64, 1.0));
        assert!((trace_product(&a, &b) - (&a * &b).trace()).norm() < 1e-12);
    }
}
