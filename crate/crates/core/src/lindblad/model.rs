use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::matrix::{c, check_dim, check_operator, is_diagonal, CMatrix, I, ONE};

/// Rank-revealing factorisation `op = left * right†` with orthonormal `left` columns.
#[derive(Debug, Clone)]
struct LowRank {
    left: CMatrix,
    right: CMatrix,
}

impl LowRank {
    /// Returns a factorisation when the rank is small enough to beat dense products.
    fn try_factor(op: &CMatrix) -> Option<Self> {
        let d = op.nrows();
        if d < 8 {
            return None;
        }
        let scale = (0..d).map(|j| op.column(j).norm()).fold(0.0_f64, f64::max);
        if scale == 0.0 {
            return None;
        }
        let tol = 64.0 * f64::EPSILON * scale;
        let max_rank = d / 4;
        let mut basis: Vec<nalgebra::DVector<Complex64>> = Vec::new();
        for j in 0..d {
            let mut v = op.column(j).into_owned();
            // two Gram-Schmidt passes
            for _ in 0..2 {
                for q in &basis {
                    let proj = q.dotc(&v);
                    v.axpy(-proj, q, ONE);
                }
            }
            let norm = v.norm();
            if norm > tol {
                if basis.len() == max_rank {
                    return None;
                }
                basis.push(v.unscale(norm));
            }
        }
        let left = CMatrix::from_columns(&basis);
        let right = op.ad_mul(&left);
        let recon = &left * right.adjoint();
        let err = recon
            .iter()
            .zip(op.iter())
            .fold(0.0_f64, |acc, (a, b)| acc.max((a - b).norm()));
        if err > 1e-13 * scale.max(1.0) {
            return None;
        }
        Some(Self { left, right })
    }
}

/// `a * b` for square `a` and thin `b`, by column axpys.
fn mul_thin(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let d = a.nrows();
    let mut out = CMatrix::zeros(d, b.ncols());
    let src = a.as_slice();
    for (k, ocol) in out.as_mut_slice().chunks_exact_mut(d).enumerate() {
        for (j, acol) in src.chunks_exact(d).enumerate() {
            let s = b[(j, k)];
            if s != Complex64::new(0.0, 0.0) {
                for (o, x) in ocol.iter_mut().zip(acol) {
                    *o += x * s;
                }
            }
        }
    }
    out
}

/// `b† a` for square `a` and thin `b`, by column dot products.
fn ad_mul_thin(b: &CMatrix, a: &CMatrix) -> CMatrix {
    let d = a.nrows();
    let r = b.ncols();
    let bs = b.as_slice();
    let mut out = CMatrix::zeros(r, d);
    for (j, acol) in a.as_slice().chunks_exact(d).enumerate() {
        for k in 0..r {
            out[(k, j)] = bs[k * d..(k + 1) * d].iter().zip(acol).map(|(x, y)| x.conj() * y).sum();
        }
    }
    out
}

/// A jump operator `L_ω` with its rate `γ(ω)`.
///
/// `omega` is the angular frequency of the transition with the eigenoperator
/// convention `[L_ω, H] = ħω L_ω`: applying `L_ω` lowers the system energy by
/// `ħω`, so decay channels carry positive `omega`.
#[derive(Debug, Clone)]
pub struct JumpChannel {
    omega: f64,
    rate: f64,
    op: CMatrix,
    op_dag: CMatrix,
    op_dag_op: CMatrix,
    low_rank: Option<LowRank>,
}

impl JumpChannel {
    pub fn new(omega: f64, rate: f64, op: CMatrix) -> Result<Self> {
        check_operator(&op)?;
        if !omega.is_finite() || !rate.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "channel frequency and rate must be finite (omega = {omega}, rate = {rate})"
            )));
        }
        let op_dag = op.adjoint();
        let op_dag_op = &op_dag * &op;
        let low_rank = LowRank::try_factor(&op);
        Ok(Self {
            omega,
            rate,
            op,
            op_dag,
            op_dag_op,
            low_rank,
        })
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn op(&self) -> &CMatrix {
        &self.op
    }

    pub fn op_dag(&self) -> &CMatrix {
        &self.op_dag
    }

    /// Precomputed `L†L`.
    pub fn op_dag_op(&self) -> &CMatrix {
        &self.op_dag_op
    }

    pub fn dim(&self) -> usize {
        self.op.nrows()
    }

    /// `Tr[L†L ρ]`.
    pub fn dag_op_expectation(&self, rho: &CMatrix) -> Complex64 {
        match &self.low_rank {
            // L†L = right right† since left has orthonormal columns
            Some(lr) => lr.right.ad_mul(&mul_thin(rho, &lr.right)).trace(),
            None => crate::matrix::trace_product(&self.op_dag_op, rho),
        }
    }

    /// Copy of this channel with a different rate.
    pub fn with_rate(&self, rate: f64) -> Self {
        Self { rate, ..self.clone() }
    }

    /// Adds `scale * (L ρ L† - ½{L†L, ρ})` into `out`.
    fn accumulate(&self, rho: &CMatrix, scale: f64, out: &mut CMatrix) {
        if scale == 0.0 {
            return;
        }
        let g = c(scale);
        let half = c(-0.5 * scale);
        match &self.low_rank {
            Some(lr) => {
                let p = mul_thin(rho, &lr.right);
                let am = &lr.left * lr.right.ad_mul(&p);
                let q = ad_mul_thin(&lr.right, rho);
                let d = rho.nrows();
                let r = lr.left.ncols();
                let (am, p, q) = (am.as_slice(), p.as_slice(), q.as_slice());
                let (left, right) = (lr.left.as_slice(), lr.right.as_slice());
                // out[:, j] += Σ_k am[:, k] g conj(left[j, k]) + right[:, k] half q[k, j] + p[:, k] half conj(right[j, k])
                for (j, col) in out.as_mut_slice().chunks_exact_mut(d).enumerate() {
                    for k in 0..r {
                        let a = g * left[k * d + j].conj();
                        let b = half * q[j * r + k];
                        let cc = half * right[k * d + j].conj();
                        let (amk, rk, pk) = (
                            &am[k * d..(k + 1) * d],
                            &right[k * d..(k + 1) * d],
                            &p[k * d..(k + 1) * d],
                        );
                        for i in 0..d {
                            col[i] += amk[i] * a + rk[i] * b + pk[i] * cc;
                        }
                    }
                }
            }
            None => {
                let lr = &self.op * rho;
                out.gemm(g, &lr, &self.op_dag, ONE);
                out.gemm(half, &self.op_dag_op, rho, ONE);
                out.gemm(half, rho, &self.op_dag_op, ONE);
            }
        }
    }
}

/// One heat (or particle) reservoir and the jump channels it drives.
#[derive(Debug, Clone)]
pub struct Bath {
    label: String,
    beta: f64,
    mu: f64,
    channels: Vec<JumpChannel>,
}

impl Bath {
    pub fn new(label: impl Into<String>, beta: f64, mu: f64, channels: Vec<JumpChannel>) -> Result<Self> {
        let label = label.into();
        if label.is_empty() || label.chars().any(char::is_whitespace) {
            return Err(Error::InvalidParameter(format!(
                "bath label `{label}` must be non-empty without whitespace"
            )));
        }
        if !beta.is_finite() || !mu.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "bath `{label}` needs finite beta and mu"
            )));
        }
        if let Some(first) = channels.first() {
            let d = first.dim();
            for ch in &channels {
                check_dim(ch.op(), d)?;
            }
        }
        Ok(Self {
            label,
            beta,
            mu,
            channels,
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn channels(&self) -> &[JumpChannel] {
        &self.channels
    }

    /// Index of the channel at `-ω` whose operator is the adjoint of channel `k`.
    pub fn partner_of(&self, k: usize) -> Option<usize> {
        let ch = &self.channels[k];
        let tol = 1e-9;
        self.channels.iter().position(|other| {
            (other.omega + ch.omega).abs() <= 1e-12 * ch.omega.abs().max(1.0)
                && other
                    .op
                    .iter()
                    .zip(ch.op_dag.iter())
                    .all(|(a, b)| (a - b).norm() <= tol)
        })
    }

    pub(crate) fn accumulate(&self, rho: &CMatrix, out: &mut CMatrix) {
        for ch in &self.channels {
            ch.accumulate(rho, ch.rate, out);
        }
    }
}

/// Hamiltonian plus baths, the data of the master equation.
#[derive(Debug, Clone)]
pub struct LindbladModel {
    hbar: f64,
    hamiltonian: CMatrix,
    baths: Vec<Bath>,
    diagonal_energies: Option<Vec<f64>>,
}

impl LindbladModel {
    /// Model in units with ħ = 1.
    pub fn new(hamiltonian: CMatrix, baths: Vec<Bath>) -> Result<Self> {
        Self::with_hbar(1.0, hamiltonian, baths)
    }

    pub fn with_hbar(hbar: f64, hamiltonian: CMatrix, baths: Vec<Bath>) -> Result<Self> {
        if !(hbar > 0.0 && hbar.is_finite()) {
            return Err(Error::InvalidParameter(format!("hbar must be positive, got {hbar}")));
        }
        check_operator(&hamiltonian)?;
        let d = hamiltonian.nrows();
        if d == 0 {
            return Err(Error::InvalidParameter("empty Hamiltonian".into()));
        }
        for (i, bath) in baths.iter().enumerate() {
            for ch in bath.channels() {
                check_dim(ch.op(), d)?;
            }
            if baths[..i].iter().any(|b| b.label == bath.label) {
                return Err(Error::InvalidParameter(format!(
                    "duplicate bath label `{}`",
                    bath.label
                )));
            }
        }
        let diagonal_energies = is_diagonal(&hamiltonian).then(|| (0..d).map(|k| hamiltonian[(k, k)].re).collect());
        Ok(Self {
            hbar,
            hamiltonian,
            baths,
            diagonal_energies,
        })
    }

    pub fn dim(&self) -> usize {
        self.hamiltonian.nrows()
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn hamiltonian(&self) -> &CMatrix {
        &self.hamiltonian
    }

    pub fn baths(&self) -> &[Bath] {
        &self.baths
    }

    pub fn bath(&self, label: &str) -> Result<&Bath> {
        self.baths
            .iter()
            .find(|b| b.label == label)
            .ok_or_else(|| Error::UnknownBath(label.to_string()))
    }

    /// Baths selected by an optional label filter.
    pub fn select_baths(&self, filter: Option<&str>) -> Result<Vec<&Bath>> {
        match filter {
            None => Ok(self.baths.iter().collect()),
            Some(label) => Ok(vec![self.bath(label)?]),
        }
    }

    pub fn dissipator(&self, rho: &CMatrix, bath: Option<&str>) -> Result<CMatrix> {
        check_dim(rho, self.dim())?;
        let selected = self.select_baths(bath)?;
        let mut out = CMatrix::zeros(self.dim(), self.dim());
        for b in selected {
            b.accumulate(rho, &mut out);
        }
        Ok(out)
    }

    pub fn generator(&self, rho: &CMatrix) -> Result<CMatrix> {
        check_dim(rho, self.dim())?;
        Ok(self.generator_unchecked(rho))
    }

    pub(crate) fn generator_unchecked(&self, rho: &CMatrix) -> CMatrix {
        let d = self.dim();
        let mut out = CMatrix::zeros(d, d);
        self.add_unitary_part(rho, &mut out);
        for b in &self.baths {
            b.accumulate(rho, &mut out);
        }
        out
    }

    /// Adds `-(i/ħ)[H, ρ]` into `out`.
    fn add_unitary_part(&self, rho: &CMatrix, out: &mut CMatrix) {
        let d = self.dim();
        let factor = -I / self.hbar;
        match &self.diagonal_energies {
            Some(e) => {
                let src = rho.as_slice();
                for (j, col) in out.as_mut_slice().chunks_exact_mut(d).enumerate() {
                    let rcol = &src[j * d..(j + 1) * d];
                    for i in 0..d {
                        let gap = e[i] - e[j];
                        if gap != 0.0 {
                            col[i] += factor * gap * rcol[i];
                        }
                    }
                }
            }
            None => {
                out.gemm(factor, &self.hamiltonian, rho, ONE);
                out.gemm(-factor, rho, &self.hamiltonian, ONE);
            }
        }
    }

    /// Same baths with a different Hamiltonian (used for quenched cycles).
    pub fn with_hamiltonian(&self, hamiltonian: CMatrix) -> Result<Self> {
        Self::with_hbar(self.hbar, hamiltonian, self.baths.clone())
    }
}

/// `Σ γ (L ρ L† - ½{L†L, ρ})` over all baths, or only over `bath_filter`.
pub fn apply_dissipator(model: &LindbladModel, rho: &CMatrix, bath_filter: Option<&str>) -> Result<CMatrix> {
    model.dissipator(rho, bath_filter)
}

/// The full generator `-(i/ħ)[H, ρ] + D[ρ]`.
pub fn apply_generator(model: &LindbladModel, rho: &CMatrix) -> Result<CMatrix> {
    model.generator(rho)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{max_abs, ZERO};

    fn rank_one(d: usize) -> CMatrix {
        CMatrix::from_fn(d, d, |i, j| if i < d / 2 && j >= d / 2 { ONE } else { ZERO })
    }

    #[test]
    fn low_rank_path_matches_dense_products() {
        let d = 12;
        let op = rank_one(d);
        let ch = JumpChannel::new(1.0, 0.7, op.clone()).unwrap();
        assert!(ch.low_rank.is_some());
        let rho = CMatrix::from_fn(d, d, |i, j| {
            Complex64::new((i + j) as f64 * 0.01, (i as f64 - j as f64) * 0.003)
        });
        let mut fast = CMatrix::zeros(d, d);
        ch.accumulate(&rho, 0.7, &mut fast);
        let dense =
            (&op * &rho * op.adjoint() - (op.adjoint() * &op * &rho + &rho * op.adjoint() * &op) * c(0.5)) * c(0.7);
        assert!(max_abs(&(fast - dense)) < 1e-13);
    }

    #[test]
    fn full_rank_operator_stays_dense() {
        let op = CMatrix::identity(10, 10);
        let ch = JumpChannel::new(0.0, 1.0, op).unwrap();
        assert!(ch.low_rank.is_none());
    }

    #[test]
    fn unknown_bath_is_an_error() {
        let model = LindbladModel::new(CMatrix::identity(2, 2), vec![]).unwrap();
        let rho = CMatrix::identity(2, 2) * c(0.5);
        assert!(matches!(model.dissipator(&rho, Some("X")), Err(Error::UnknownBath(_))));
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let model = LindbladModel::new(CMatrix::identity(2, 2), vec![]).unwrap();
        let rho = CMatrix::identity(3, 3);
        assert!(matches!(model.generator(&rho), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn non_diagonal_hamiltonian_uses_dense_commutator() {
        let mut h = CMatrix::zeros(2, 2);
        h[(0, 1)] = ONE;
        h[(1, 0)] = ONE;
        let model = LindbladModel::new(h.clone(), vec![]).unwrap();
        let mut rho = CMatrix::zeros(2, 2);
        rho[(0, 0)] = ONE;
        let g = model.generator(&rho).unwrap();
        let expect = (&h * &rho - &rho * &h) * (-I);
        assert!(max_abs(&(g - expect)) < 1e-15);
    }
}
