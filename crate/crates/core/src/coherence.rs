//! Energy-basis bookkeeping and coherence quantities: the dephasing maps
//! ρ_bd and ρ_sd, the l1 coherence, the operator `X = Σ γ (ħω)² L†L`, `C_X`,
//! `A_cl` and `A_qm`.

use crate::error::{Error, Result};
use crate::lindblad::{DensityMatrix, LindbladModel};
use crate::matrix::{c, check_dim, hermitian_eigen, is_diagonal, CMatrix, CVector, ZERO};

pub const DEFAULT_DEGENERACY_TOL: f64 = 1e-9;
const ORTHONORMAL_TOL: f64 = 1e-10;
const EIGENVECTOR_TOL: f64 = 1e-9;

/// One energy level and the indices of its basis vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct Level {
    pub energy: f64,
    pub states: Vec<usize>,
}

/// A fixed orthonormal eigenbasis `|e,j⟩` of the Hamiltonian, grouped into levels.
#[derive(Debug, Clone)]
pub struct EnergyBasis {
    /// Columns are the basis vectors; `None` means the computational basis.
    vectors: Option<CMatrix>,
    energies: Vec<f64>,
    levels: Vec<Level>,
    level_of: Vec<usize>,
    degeneracy_tol: f64,
}

impl EnergyBasis {
    fn build(vectors: Option<CMatrix>, energies: Vec<f64>, degeneracy_tol: f64) -> Self {
        let mut order: Vec<usize> = (0..energies.len()).collect();
        order.sort_by(|&a, &b| energies[a].total_cmp(&energies[b]).then(a.cmp(&b)));
        let mut levels: Vec<Level> = Vec::new();
        let mut level_of = vec![0; energies.len()];
        for k in order {
            let e = energies[k];
            match levels.last_mut() {
                Some(level) if (e - level.energy).abs() <= degeneracy_tol => level.states.push(k),
                _ => levels.push(Level {
                    energy: e,
                    states: vec![k],
                }),
            }
            level_of[k] = levels.len() - 1;
        }
        for level in &mut levels {
            level.states.sort_unstable();
        }
        Self {
            vectors,
            energies,
            levels,
            level_of,
            degeneracy_tol,
        }
    }

    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    pub fn levels(&self) -> &[Level] {
        &self.levels
    }

    /// Level index of basis vector `k`.
    pub fn level_of(&self, k: usize) -> usize {
        self.level_of[k]
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn degeneracy_tol(&self) -> f64 {
        self.degeneracy_tol
    }

    pub fn is_computational(&self) -> bool {
        self.vectors.is_none()
    }

    pub fn is_degenerate(&self) -> bool {
        self.levels.iter().any(|l| l.states.len() > 1)
    }

    /// Basis vectors as columns.
    pub fn vectors(&self) -> CMatrix {
        self.vectors
            .clone()
            .unwrap_or_else(|| CMatrix::identity(self.dim(), self.dim()))
    }

    /// Projector `Π_e` onto level `level`.
    pub fn projector(&self, level: usize) -> CMatrix {
        let v = self.vectors();
        let mut p = CMatrix::zeros(self.dim(), self.dim());
        for &k in &self.levels[level].states {
            let col = v.column(k);
            p += col * col.adjoint();
        }
        p
    }

    /// Matrix elements `⟨k|m|l⟩` in this basis.
    pub fn to_frame(&self, m: &CMatrix) -> CMatrix {
        match &self.vectors {
            None => m.clone(),
            Some(v) => v.adjoint() * m * v,
        }
    }

    /// Inverse of [`EnergyBasis::to_frame`].
    pub fn from_frame(&self, m: CMatrix) -> CMatrix {
        match &self.vectors {
            None => m,
            Some(v) => v * m * v.adjoint(),
        }
    }

    /// Maps column vectors given in basis coordinates to the original space.
    pub fn from_frame_vectors(&self, coords: CMatrix) -> CMatrix {
        match &self.vectors {
            None => coords,
            Some(v) => v * coords,
        }
    }

    fn same_level(&self, i: usize, j: usize) -> bool {
        self.level_of[i] == self.level_of[j]
    }
}

/// Energy basis with the default degeneracy tolerance.
///
/// A preferred basis is used verbatim once it passes the orthonormality and
/// eigenvector checks. Otherwise an exactly diagonal Hamiltonian yields the
/// computational basis and anything else is diagonalized.
pub fn energy_basis(model: &LindbladModel, preferred: Option<&[CVector]>) -> Result<EnergyBasis> {
    energy_basis_with_tol(model, preferred, DEFAULT_DEGENERACY_TOL)
}

pub fn energy_basis_with_tol(
    model: &LindbladModel,
    preferred: Option<&[CVector]>,
    degeneracy_tol: f64,
) -> Result<EnergyBasis> {
    let h = model.hamiltonian();
    let d = model.dim();
    if let Some(vs) = preferred {
        if vs.len() != d || vs.iter().any(|v| v.len() != d) {
            return Err(Error::InvalidBasis(format!("expected {d} vectors of length {d}")));
        }
        let v = CMatrix::from_columns(vs);
        let gram = v.adjoint() * &v;
        let gram_err = (gram - CMatrix::identity(d, d))
            .iter()
            .fold(0.0_f64, |acc, z| acc.max(z.norm()));
        if gram_err > ORTHONORMAL_TOL {
            return Err(Error::InvalidBasis(format!(
                "vectors are not orthonormal (Gram residual {gram_err:e})"
            )));
        }
        let hv = h * &v;
        let mut energies = Vec::with_capacity(d);
        for k in 0..d {
            let e = v.column(k).dotc(&hv.column(k)).re;
            let defect = (hv.column(k) - v.column(k) * c(e)).norm();
            if defect > EIGENVECTOR_TOL {
                return Err(Error::InvalidBasis(format!(
                    "vector {k} is not an eigenvector (residual {defect:e})"
                )));
            }
            energies.push(e);
        }
        let vectors = (v != CMatrix::identity(d, d)).then_some(v);
        return Ok(EnergyBasis::build(vectors, energies, degeneracy_tol));
    }
    if is_diagonal(h) {
        let energies = (0..d).map(|k| h[(k, k)].re).collect();
        return Ok(EnergyBasis::build(None, energies, degeneracy_tol));
    }
    let (vals, vecs) = hermitian_eigen(h);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
    let sorted = CMatrix::from_columns(&order.iter().map(|&k| vecs.column(k)).collect::<Vec<_>>());
    let energies = order.iter().map(|&k| vals[k]).collect();
    Ok(EnergyBasis::build(Some(sorted), energies, degeneracy_tol))
}

/// `Σ_e Π_e ρ Π_e` for an arbitrary square matrix.
pub fn block_diagonalize_matrix(m: &CMatrix, basis: &EnergyBasis) -> Result<CMatrix> {
    check_dim(m, basis.dim())?;
    let mut f = basis.to_frame(m);
    let d = basis.dim();
    for j in 0..d {
        for i in 0..d {
            if !basis.same_level(i, j) {
                f[(i, j)] = ZERO;
            }
        }
    }
    Ok(basis.from_frame(f))
}

/// `Σ_{e,j} Π_{e,j} ρ Π_{e,j}` for an arbitrary square matrix.
pub fn strict_diagonalize_matrix(m: &CMatrix, basis: &EnergyBasis) -> Result<CMatrix> {
    check_dim(m, basis.dim())?;
    let d = basis.dim();
    let diag: Vec<_> = match &basis.vectors {
        None => (0..d).map(|k| m[(k, k)]).collect(),
        Some(v) => {
            let mv = m * v;
            (0..d).map(|k| v.column(k).dotc(&mv.column(k))).collect()
        }
    };
    let f = CMatrix::from_diagonal(&CVector::from_vec(diag));
    Ok(basis.from_frame(f))
}

/// ρ_bd: removes coherence between different energy levels.
pub fn block_diagonalize(rho: &DensityMatrix, basis: &EnergyBasis) -> Result<DensityMatrix> {
    Ok(DensityMatrix::from_trusted(block_diagonalize_matrix(
        rho.matrix(),
        basis,
    )?))
}

/// ρ_sd: removes all coherence in the fixed basis.
pub fn strict_diagonalize(rho: &DensityMatrix, basis: &EnergyBasis) -> Result<DensityMatrix> {
    Ok(DensityMatrix::from_trusted(strict_diagonalize_matrix(
        rho.matrix(),
        basis,
    )?))
}

/// Sum of absolute off-diagonal elements in the basis.
pub fn l1_coherence(rho: &CMatrix, basis: &EnergyBasis) -> Result<f64> {
    check_dim(rho, basis.dim())?;
    let f = basis.to_frame(rho);
    let d = basis.dim();
    let mut total = 0.0;
    for j in 0..d {
        for i in 0..d {
            if i != j {
                total += f[(i, j)].norm();
            }
        }
    }
    Ok(total)
}

/// `X = Σ_{a,ω} γ_a(ω) (ħω)² L†L`.
pub fn x_operator(model: &LindbladModel) -> CMatrix {
    let mut x = CMatrix::zeros(model.dim(), model.dim());
    for bath in model.baths() {
        for ch in bath.channels() {
            let e = model.hbar() * ch.omega();
            let w = ch.rate() * e * e;
            if w != 0.0 {
                x += ch.op_dag_op() * c(w);
            }
        }
    }
    x
}

/// Largest `|⟨e,j|X|e,j'⟩|` with `j ≠ j'`; zero without degeneracy.
pub fn c_x(x: &CMatrix, basis: &EnergyBasis) -> Result<f64> {
    check_dim(x, basis.dim())?;
    if !basis.is_degenerate() {
        return Ok(0.0);
    }
    let f = basis.to_frame(x);
    let mut best = 0.0_f64;
    for level in basis.levels() {
        for &i in &level.states {
            for &j in &level.states {
                if i != j {
                    best = best.max(f[(i, j)].norm());
                }
            }
        }
    }
    Ok(best)
}

/// Coherence quantities of one state.
///
/// `c_l1` is the l1 coherence of ρ_bd, so `a_qm == c_x * c_l1` holds exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct CoherenceReport {
    pub c_l1: f64,
    pub x_op: CMatrix,
    pub c_x: f64,
    pub a_cl: f64,
    pub a_qm: f64,
}

impl CoherenceReport {
    pub const CSV_HEADER: &'static str = "c_l1,c_x,a_cl,a_qm";

    pub fn csv_row(&self) -> String {
        format!("{:?},{:?},{:?},{:?}", self.c_l1, self.c_x, self.a_cl, self.a_qm)
    }
}

/// `A_cl = Tr[X ρ_sd]` and `A_qm = C_X C_l1(ρ_bd)`, with `X` and `C_X` supplied.
pub fn coherence_terms(x: &CMatrix, cx: f64, rho: &CMatrix, basis: &EnergyBasis) -> Result<(f64, f64, f64)> {
    check_dim(rho, basis.dim())?;
    let d = basis.dim();
    let (xf, rf) = (basis.to_frame(x), basis.to_frame(rho));
    let a_cl: f64 = (0..d).map(|k| xf[(k, k)].re * rf[(k, k)].re).sum();
    let mut c_l1_bd = 0.0;
    for j in 0..d {
        for i in 0..d {
            if i != j && basis.same_level(i, j) {
                c_l1_bd += rf[(i, j)].norm();
            }
        }
    }
    Ok((a_cl, cx * c_l1_bd, c_l1_bd))
}

pub fn coherence_report(model: &LindbladModel, rho: &CMatrix, basis: &EnergyBasis) -> Result<CoherenceReport> {
    check_dim(rho, model.dim())?;
    let x = x_operator(model);
    let cx = c_x(&x, basis)?;
    let (a_cl, a_qm, c_l1) = coherence_terms(&x, cx, rho, basis)?;
    Ok(CoherenceReport {
        c_l1,
        x_op: x,
        c_x: cx,
        a_cl,
        a_qm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lindblad::{Bath, JumpChannel};
    use crate::matrix::{basis_vector, max_abs, ONE};
    use num_complex::Complex64;

    fn diag_model(energies: &[f64]) -> LindbladModel {
        let h = CMatrix::from_diagonal(&CVector::from_iterator(energies.len(), energies.iter().map(|&e| c(e))));
        LindbladModel::new(h, vec![]).unwrap()
    }

    fn sample_state(d: usize) -> CMatrix {
        let a = CMatrix::from_fn(d, d, |i, j| {
            Complex64::new(((i * 7 + j * 3) % 5) as f64 * 0.1, (i as f64 - j as f64) * 0.05)
        });
        let m = &a * a.adjoint();
        let t = m.trace();
        m / t
    }

    #[test]
    fn computational_basis_for_diagonal_h() {
        let basis = energy_basis(&diag_model(&[0.0, 0.0, 1.0, 1.0]), None).unwrap();
        assert!(basis.is_computational());
        assert_eq!(basis.levels().len(), 2);
        assert_eq!(basis.levels()[1].states, vec![2, 3]);
    }

    #[test]
    fn zero_hamiltonian_is_one_level() {
        let basis = energy_basis(&diag_model(&[0.0; 3]), None).unwrap();
        assert_eq!(basis.levels().len(), 1);
        assert_eq!(basis.levels()[0].states.len(), 3);
    }

    #[test]
    fn non_diagonal_h_is_diagonalized() {
        let mut h = CMatrix::zeros(2, 2);
        h[(0, 1)] = ONE;
        h[(1, 0)] = ONE;
        let model = LindbladModel::new(h.clone(), vec![]).unwrap();
        let basis = energy_basis(&model, None).unwrap();
        assert_eq!(basis.energies().len(), 2);
        assert!((basis.energies()[0] + 1.0).abs() < 1e-14);
        let f = basis.to_frame(&h);
        assert!(f[(0, 1)].norm() < 1e-14);
    }

    #[test]
    fn rejects_non_eigenvector_basis() {
        let model = diag_model(&[0.0, 1.0]);
        let s = 0.5_f64.sqrt();
        let vs = [
            CVector::from_vec(vec![c(s), c(s)]),
            CVector::from_vec(vec![c(s), c(-s)]),
        ];
        assert!(matches!(energy_basis(&model, Some(&vs)), Err(Error::InvalidBasis(_))));
    }

    #[test]
    fn rejects_non_orthonormal_basis() {
        let model = diag_model(&[0.0, 0.0]);
        let vs = [basis_vector(2, 0), basis_vector(2, 0)];
        assert!(matches!(energy_basis(&model, Some(&vs)), Err(Error::InvalidBasis(_))));
    }

    #[test]
    fn rotated_degenerate_basis_changes_strict_dephasing() {
        let model = diag_model(&[0.0, 0.0]);
        let s = 0.5_f64.sqrt();
        let vs = [
            CVector::from_vec(vec![c(s), c(s)]),
            CVector::from_vec(vec![c(s), c(-s)]),
        ];
        let basis = energy_basis(&model, Some(&vs)).unwrap();
        assert!(!basis.is_computational());
        let mut rho = CMatrix::zeros(2, 2);
        rho[(0, 0)] = ONE;
        let sd = strict_diagonalize_matrix(&rho, &basis).unwrap();
        assert!(max_abs(&(sd - CMatrix::identity(2, 2) * c(0.5))) < 1e-15);
    }

    #[test]
    fn cross_block_entry_removed() {
        // basis order g1, g2, e1, e2
        let basis = energy_basis(&diag_model(&[0.0, 0.0, 1.0, 1.0]), None).unwrap();
        let mut rho = CMatrix::identity(4, 4) * c(0.25);
        rho[(0, 2)] = c(0.1);
        rho[(2, 0)] = c(0.1);
        rho[(0, 1)] = c(0.05);
        rho[(1, 0)] = c(0.05);
        let bd = block_diagonalize_matrix(&rho, &basis).unwrap();
        assert_eq!(bd[(0, 2)], ZERO);
        assert_eq!(bd[(2, 0)], ZERO);
        assert_eq!(bd[(0, 1)], c(0.05));
        assert!((l1_coherence(&rho, &basis).unwrap() - 0.3).abs() < 1e-15);
    }

    #[test]
    fn dephasing_maps_are_idempotent_and_nested() {
        let basis = energy_basis(&diag_model(&[0.0, 0.0, 1.0, 1.0, 2.0]), None).unwrap();
        let rho = sample_state(5);
        let bd = block_diagonalize_matrix(&rho, &basis).unwrap();
        let sd = strict_diagonalize_matrix(&rho, &basis).unwrap();
        assert_eq!(block_diagonalize_matrix(&bd, &basis).unwrap(), bd);
        assert_eq!(strict_diagonalize_matrix(&sd, &basis).unwrap(), sd);
        assert_eq!(strict_diagonalize_matrix(&bd, &basis).unwrap(), sd);
        assert_eq!(l1_coherence(&sd, &basis).unwrap(), 0.0);
        assert!(l1_coherence(&bd, &basis).unwrap() <= l1_coherence(&rho, &basis).unwrap());
    }

    #[test]
    fn nondegenerate_maps_coincide() {
        let basis = energy_basis(&diag_model(&[0.0, 0.3, 1.0]), None).unwrap();
        let rho = sample_state(3);
        assert_eq!(
            block_diagonalize_matrix(&rho, &basis).unwrap(),
            strict_diagonalize_matrix(&rho, &basis).unwrap()
        );
    }

    #[test]
    fn x_and_cx_for_collective_qubit_pair() {
        // H = diag(0, 1, 1), L = |0><1| + |0><2| at ω = 1, rate 2
        let h = CMatrix::from_diagonal(&CVector::from_vec(vec![c(0.0), c(1.0), c(1.0)]));
        let mut l = CMatrix::zeros(3, 3);
        l[(0, 1)] = ONE;
        l[(0, 2)] = ONE;
        let bath = Bath::new(
            "B",
            1.0,
            0.0,
            vec![
                JumpChannel::new(1.0, 2.0, l.clone()).unwrap(),
                JumpChannel::new(-1.0, 2.0 * (-1.0_f64).exp(), l.adjoint()).unwrap(),
            ],
        )
        .unwrap();
        let model = LindbladModel::new(h, vec![bath]).unwrap();
        let basis = energy_basis(&model, None).unwrap();
        let x = x_operator(&model);
        // oracle: X = 2 L†L + 2e^{-1} L L†, L†L = all-ones on {1,2}, L L† = 2|0><0|
        assert!((x[(1, 2)].re - 2.0).abs() < 1e-15);
        assert!((x[(0, 0)].re - 4.0 * (-1.0_f64).exp()).abs() < 1e-15);
        assert_eq!(c_x(&x, &basis).unwrap(), 2.0);
        let rho = sample_state(3);
        let report = coherence_report(&model, &rho, &basis).unwrap();
        assert_eq!(report.a_qm, report.c_x * report.c_l1);
        let a_cl = 4.0 * (-1.0_f64).exp() * rho[(0, 0)].re + 2.0 * (rho[(1, 1)].re + rho[(2, 2)].re);
        assert!((report.a_cl - a_cl).abs() < 1e-14);
        assert!((report.c_l1 - 2.0 * rho[(1, 2)].norm()).abs() < 1e-15);
    }

    #[test]
    fn csv_row_order() {
        let r = CoherenceReport {
            c_l1: 1.0,
            x_op: CMatrix::zeros(1, 1),
            c_x: 2.0,
            a_cl: 3.0,
            a_qm: 4.0,
        };
        assert_eq!(r.csv_row(), "1.0,2.0,3.0,4.0");
    }
}
