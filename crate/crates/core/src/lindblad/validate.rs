use std::fmt;

use crate::matrix::{c, hermiticity_residual, max_abs};

use super::model::LindbladModel;

/// Outcome of one named check.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub residual: f64,
    pub tolerance: f64,
}

impl CheckResult {
    fn new(name: String, residual: f64, tolerance: f64) -> Self {
        Self {
            passed: residual <= tolerance,
            name,
            residual,
            tolerance,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub checks: Vec<CheckResult>,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn get(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for check in &self.checks {
            writeln!(
                f,
                "{} {} residual={:e} tol={:e}",
                if check.passed { "PASS" } else { "FAIL" },
                check.name,
                check.residual,
                check.tolerance
            )?;
        }
        Ok(())
    }
}

const HERMITIAN_TOL: f64 = 1e-10;
const EIGENOP_TOL: f64 = 1e-9;
const PAIRING_TOL: f64 = 1e-9;
const BALANCE_TOL: f64 = 1e-9;

/// Runs every structural check on the model. Failures are reported, never raised.
///
/// Check names: `hamiltonian_hermitian`, and per channel `eigenoperator[B/k]`,
/// `adjoint_pairing[B/k]`, `rate_nonnegative[B/k]`, `detailed_balance[B/k]`
/// where `B` is the bath label and `k` the channel index. Detailed balance is
/// reported on the channel with `ω > 0` (or `ω = 0` with a distinct partner)
/// as `|γ(ω) / (γ(-ω) e^{β(ħω - μ sgn ω)}) - 1|`.
pub fn validate_model(model: &LindbladModel) -> ValidationReport {
    let mut checks = Vec::new();
    let h = model.hamiltonian();
    let hbar = model.hbar();
    checks.push(CheckResult::new(
        "hamiltonian_hermitian".into(),
        hermiticity_residual(h),
        HERMITIAN_TOL,
    ));
    let h_scale = max_abs(h).max(1.0);
    for bath in model.baths() {
        for (k, ch) in bath.channels().iter().enumerate() {
            let tag = format!("{}/{}", bath.label(), k);
            let op = ch.op();
            let defect = op * h - h * op - op * c(hbar * ch.omega());
            let scale = (max_abs(op) * h_scale).max(1.0);
            checks.push(CheckResult::new(
                format!("eigenoperator[{tag}]"),
                max_abs(&defect) / scale,
                EIGENOP_TOL,
            ));
            let partner = bath.partner_of(k);
            checks.push(CheckResult::new(
                format!("adjoint_pairing[{tag}]"),
                if partner.is_some() { 0.0 } else { f64::INFINITY },
                PAIRING_TOL,
            ));
            checks.push(CheckResult::new(
                format!("rate_nonnegative[{tag}]"),
                (-ch.rate()).max(0.0),
                0.0,
            ));
            let Some(p) = partner else { continue };
            if ch.omega() < 0.0 || (ch.omega() == 0.0 && p == k) {
                continue;
            }
            let forward = ch.rate();
            let backward = bath.channels()[p].rate();
            let sign = if ch.omega() > 0.0 { 1.0 } else { 0.0 };
            let expected = (bath.beta() * (hbar * ch.omega() - bath.mu() * sign)).exp();
            let residual = if forward == 0.0 && backward == 0.0 {
                0.0
            } else {
                (forward / (backward * expected) - 1.0).abs()
            };
            checks.push(CheckResult::new(
                format!("detailed_balance[{tag}]"),
                if residual.is_nan() { f64::INFINITY } else { residual },
                BALANCE_TOL,
            ));
        }
    }
    ValidationReport { checks }
}
