//! Seeded random models and states for property runs. Case `k` under seed `s`
//! draws from ChaCha8 stream `k` of seed `s`, so any single case replays alone.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::coherence::{block_diagonalize_matrix, energy_basis, EnergyBasis};
use crate::error::Result;
use crate::lindblad::{DensityMatrix, LindbladModel};
use crate::matrix::{c, CMatrix, CVector};
use crate::models::{build_two_qubit_model, two_n_bath, two_n_hamiltonian, TwoQubitSpec, DEFAULT_BATH};

pub fn case_rng(seed: u64, case: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(case);
    rng
}

fn uniform_complex(rng: &mut impl Rng) -> num_complex::Complex64 {
    num_complex::Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
}

/// `G G† / Tr` for a matrix `G` with uniform complex entries; full rank almost surely.
pub fn random_mixed(rng: &mut impl Rng, d: usize) -> CMatrix {
    let g = CMatrix::from_fn(d, d, |_, _| uniform_complex(rng));
    let m = &g * g.adjoint();
    let tr = m.trace();
    m / tr
}

/// `(1 - ε) |ψ⟩⟨ψ| + ε M` with `M` from [`random_mixed`] and `ε ∈ [1e-3, 1]`
/// log-uniform: spans near-pure to well-mixed states, always full support.
pub fn random_state(rng: &mut impl Rng, d: usize) -> DensityMatrix {
    let psi = CVector::from_fn(d, |_, _| uniform_complex(rng)).normalize();
    let eps = 10f64.powf(rng.random_range(-3.0..0.0));
    let m = &psi * psi.adjoint() * c(1.0 - eps) + random_mixed(rng, d) * c(eps);
    DensityMatrix::from_trusted(crate::matrix::hermitian_part(&m))
}

/// Block-diagonal part of a [`random_state`]; full support is kept.
pub fn random_block_diagonal(rng: &mut impl Rng, basis: &EnergyBasis) -> Result<DensityMatrix> {
    let rho = random_state(rng, basis.dim());
    Ok(DensityMatrix::from_trusted(block_diagonalize_matrix(
        rho.matrix(),
        basis,
    )?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    TwoN(usize),
    TwoQubit,
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Family::TwoN(n) => write!(f, "2N(N={n})"),
            Family::TwoQubit => f.write_str("two-qubit"),
        }
    }
}

/// A random single-bath model with detailed-balance rates and its energy basis.
#[derive(Debug, Clone)]
pub struct RandomModel {
    pub family: Family,
    pub model: LindbladModel,
    pub basis: EnergyBasis,
}

/// 2N model with `N ∈ 1..=max_n` (about half the draws) or the two-qubit model.
/// The 2N bath gets a nonzero chemical potential in a third of its draws.
pub fn random_model(rng: &mut impl Rng, max_n: usize) -> Result<RandomModel> {
    let omega: f64 = rng.random_range(0.3..3.0);
    let beta: f64 = rng.random_range(0.1..3.0);
    if max_n >= 1 && rng.random_bool(0.5) {
        let n = rng.random_range(1..=max_n);
        let down = rng.random_range(0.1..2.0);
        let mu = if rng.random_bool(1.0 / 3.0) {
            rng.random_range(-1.0..0.5 * omega)
        } else {
            0.0
        };
        let up = down * (-beta * (omega - mu)).exp();
        let bath = two_n_bath(n, omega, DEFAULT_BATH, beta, mu, down, up)?;
        let model = LindbladModel::new(two_n_hamiltonian(n, 1.0, omega), vec![bath])?;
        let basis = energy_basis(&model, None)?;
        Ok(RandomModel {
            family: Family::TwoN(n),
            model,
            basis,
        })
    } else {
        let spec = TwoQubitSpec::new(omega, beta, rng.random_range(0.2..2.0));
        let (model, basis) = build_two_qubit_model(&spec)?;
        Ok(RandomModel {
            family: Family::TwoQubit,
            model,
            basis,
        })
    }
}

/// One replayable (model, state) draw.
#[derive(Debug, Clone)]
pub struct RandomCase {
    pub seed: u64,
    pub case: u64,
    pub model: RandomModel,
    pub rho: DensityMatrix,
}

pub fn random_case(seed: u64, case: u64, max_n: usize) -> Result<RandomCase> {
    let mut rng = case_rng(seed, case);
    let model = random_model(&mut rng, max_n)?;
    let rho = random_state(&mut rng, model.model.dim());
    Ok(RandomCase { seed, case, model, rho })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{is_psd_within, max_abs};

    #[test]
    fn replay_is_exact() {
        let a = random_case(7, 3, 8).unwrap();
        let b = random_case(7, 3, 8).unwrap();
        assert_eq!(a.model.family, b.model.family);
        assert_eq!(a.rho.matrix(), b.rho.matrix());
        let other = random_case(7, 4, 8).unwrap();
        assert!(other.rho.dim() != a.rho.dim() || max_abs(&(other.rho.matrix() - a.rho.matrix())) > 0.0);
    }

    #[test]
    fn states_are_valid_and_full_rank() {
        let mut rng = case_rng(1, 0);
        for d in [1, 2, 5, 16] {
            let rho = random_state(&mut rng, d);
            assert!(DensityMatrix::new(rho.matrix().clone()).is_ok());
            assert!(crate::matrix::min_eigenvalue(rho.matrix()) > 0.0);
            assert!(is_psd_within(rho.matrix(), 0.0));
        }
    }

    #[test]
    fn random_models_validate() {
        let mut rng = case_rng(2, 0);
        for _ in 0..20 {
            let m = random_model(&mut rng, 4).unwrap();
            assert!(crate::lindblad::validate_model(&m.model).all_passed());
        }
    }
}
