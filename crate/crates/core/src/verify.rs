//! Randomized check battery over seeded (model, state) cases.

use std::fmt;

use crate::coherence::block_diagonalize_matrix;
use crate::engine::par_map;
use crate::error::Result;
use crate::lindblad::apply_generator;
use crate::sampling::{random_case, Family, RandomCase};
use crate::thermo::{
    entropy_production_rate, heat_current_channels, pauli_entropy_production, tradeoff_check, SECOND_LAW_SLACK,
};

/// Tolerance for `J(ρ) = J(ρ_bd)`.
pub const CURRENT_INVARIANCE_TOL: f64 = 1e-10;
/// Tolerance for the definitional vs Pauli entropy production.
pub const PAULI_AGREEMENT_TOL: f64 = 1e-8;

/// A check that failed on one case.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub seed: u64,
    pub case: u64,
    pub family: Family,
    pub check: &'static str,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} failed on case {} ({}), replay with --seed {} --case {}: {}",
            self.check, self.case, self.family, self.seed, self.case, self.detail
        )
    }
}

/// Names of the checks run on every case, in order.
pub const CHECKS: [&str; 8] = [
    "ineq2_dephasing_ratio",
    "ineq3_classical_bound",
    "ineq4_quantum_bound",
    "current_dephasing_invariance",
    "dissipation_dephasing_monotone",
    "second_law",
    "pauli_agreement",
    "trace_preservation",
];

/// Runs [`CHECKS`] on one case; returns the failures.
pub fn verify_case(case: &RandomCase) -> Result<Vec<Violation>> {
    let m = &case.model.model;
    let basis = &case.model.basis;
    let rho = case.rho.matrix();
    let bd = block_diagonalize_matrix(rho, basis)?;
    let t = tradeoff_check(m, rho, basis)?;
    let j_rho = heat_current_channels(m, rho, None)?;
    let j_bd = heat_current_channels(m, &bd, None)?;
    let s_rho = entropy_production_rate(m, rho)?.value;
    let s_bd = entropy_production_rate(m, &bd)?.value;
    let s_pauli = pauli_entropy_production(m, &bd, basis)?.value;
    let tr = apply_generator(m, rho)?.trace().norm();
    let results = [
        (
            t.ineq2_ok,
            format!(
                "J(rho)^2/sigma(rho) = {} vs J(bd)^2/sigma(bd) = {}",
                t.ratio_rho, t.ratio_bd
            ),
        ),
        (
            t.ineq3_ok,
            format!("J(sd)^2/sigma(sd) = {} vs A_cl/2 = {}", t.ratio_sd, t.bound_cl),
        ),
        (
            t.ineq4_ok,
            format!("J(bd)^2/sigma(bd) = {} vs (A_cl+A_qm)/2 = {}", t.ratio_bd, t.bound_q),
        ),
        (
            (j_rho - j_bd).abs() <= CURRENT_INVARIANCE_TOL * j_rho.abs().max(1.0),
            format!("J(rho) = {j_rho}, J(bd) = {j_bd}"),
        ),
        (
            s_rho >= s_bd - SECOND_LAW_SLACK * s_bd.abs().max(1.0),
            format!("sigma(rho) = {s_rho} < sigma(bd) = {s_bd}"),
        ),
        (s_rho >= -SECOND_LAW_SLACK, format!("sigma(rho) = {s_rho}")),
        (
            (s_bd - s_pauli).abs() <= PAULI_AGREEMENT_TOL * s_bd.abs().max(1.0),
            format!("definitional {s_bd} vs Pauli {s_pauli}"),
        ),
        (tr <= 1e-12, format!("|Tr L(rho)| = {tr:e}")),
    ];
    Ok(results
        .into_iter()
        .zip(CHECKS)
        .filter(|((ok, _), _)| !ok)
        .map(|((_, detail), check)| Violation {
            seed: case.seed,
            case: case.case,
            family: case.model.family,
            check,
            detail,
        })
        .collect())
}

/// Replays case `case` under `seed`.
pub fn random_case_checks(seed: u64, case: u64, max_n: usize) -> Result<Vec<Violation>> {
    verify_case(&random_case(seed, case, max_n)?)
}

/// Aggregate of a randomized run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct VerifySummary {
    pub seed: u64,
    pub cases: u64,
    /// `cases * CHECKS.len()`.
    pub checked: u64,
    pub two_n_cases: u64,
    pub two_qubit_cases: u64,
    pub violations: Vec<Violation>,
}

/// Runs cases `0..cases` under `seed` with 2N sizes up to `max_n`.
pub fn run_verify(seed: u64, cases: u64, max_n: usize) -> Result<VerifySummary> {
    let ids: Vec<u64> = (0..cases).collect();
    let outcomes = par_map(&ids, |&k| -> Result<(Family, Vec<Violation>)> {
        let case = random_case(seed, k, max_n)?;
        Ok((case.model.family, verify_case(&case)?))
    });
    let mut summary = VerifySummary {
        seed,
        cases,
        checked: cases * CHECKS.len() as u64,
        ..VerifySummary::default()
    };
    for outcome in outcomes {
        let (family, violations): (Family, Vec<Violation>) = outcome?;
        match family {
            Family::TwoN(_) => summary.two_n_cases += 1,
            Family::TwoQubit => summary.two_qubit_cases += 1,
        }
        summary.violations.extend(violations);
    }
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_cases_is_empty() {
        let s = run_verify(7, 0, 8).unwrap();
        assert_eq!(s.checked, 0);
        assert!(s.violations.is_empty());
    }

    #[test]
    fn small_run_is_clean() {
        let s = run_verify(11, 40, 4).unwrap();
        assert!(s.violations.is_empty(), "{:?}", s.violations);
        assert!(s.two_n_cases > 0 && s.two_qubit_cases > 0);
    }
}
