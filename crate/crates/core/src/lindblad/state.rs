use crate::error::{Error, Result};
use crate::matrix::{check_operator, hermiticity_residual, is_psd_within, CMatrix};

/// Tolerances for the density-matrix checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateTolerances {
    pub hermiticity: f64,
    pub trace: f64,
    pub positivity: f64,
}

impl StateTolerances {
    /// Used for user-supplied states.
    pub const STRICT: Self = Self {
        hermiticity: 1e-10,
        trace: 1e-10,
        positivity: 1e-10,
    };

    /// Used for states emitted by the integrator; RK4 is not CPTP per step.
    pub const TRAJECTORY: Self = Self {
        hermiticity: 1e-10,
        trace: 1e-8,
        positivity: 1e-8,
    };
}

impl Default for StateTolerances {
    fn default() -> Self {
        Self::STRICT
    }
}

/// A Hermitian, unit-trace, positive semidefinite matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    mat: CMatrix,
}

impl DensityMatrix {
    pub fn new(mat: CMatrix) -> Result<Self> {
        Self::with_tolerances(mat, StateTolerances::STRICT)
    }

    pub fn with_tolerances(mat: CMatrix, tol: StateTolerances) -> Result<Self> {
        check_operator(&mat)?;
        let herm = hermiticity_residual(&mat);
        if herm > tol.hermiticity {
            return Err(Error::InvalidState(format!("not Hermitian (residual {herm:e})")));
        }
        let tr = mat.trace().re;
        if (tr - 1.0).abs() > tol.trace {
            return Err(Error::InvalidState(format!("trace is {tr}, not 1")));
        }
        if !is_psd_within(&mat, tol.positivity) {
            return Err(Error::InvalidState(format!("eigenvalue below -{:e}", tol.positivity)));
        }
        Ok(Self { mat })
    }

    /// Wraps a matrix without any checks. The caller guarantees validity.
    pub(crate) fn from_trusted(mat: CMatrix) -> Self {
        Self { mat }
    }

    /// Maximally mixed state I/d.
    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            mat: CMatrix::identity(dim, dim) / crate::matrix::c(dim as f64),
        }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> CMatrix {
        self.mat
    }

    /// Real diagonal entries.
    pub fn populations(&self) -> Vec<f64> {
        (0..self.dim()).map(|k| self.mat[(k, k)].re).collect()
    }
}

impl AsRef<CMatrix> for DensityMatrix {
    fn as_ref(&self) -> &CMatrix {
        &self.mat
    }
}
