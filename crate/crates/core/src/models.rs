//! Constructors and closed-form references for the collective-decay models:
//! the 2N-state model with its ρ⁺ states, the two-qubit superradiant model and
//! the two-bath steady-current variants.

use crate::coherence::{energy_basis, EnergyBasis};
use crate::error::{Error, Result};
use crate::lindblad::{Bath, DensityMatrix, JumpChannel, LindbladModel};
use crate::matrix::{c, hermitian_eigen, CMatrix, CVector, ONE};

/// Default bath label for single-bath constructors.
pub const DEFAULT_BATH: &str = "B";

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "{name} must be positive and finite, got {v}"
        )))
    }
}

fn finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be finite, got {v}")))
    }
}

/// `e^{-βH} / Z`.
pub fn gibbs_state(hamiltonian: &CMatrix, beta: f64) -> Result<DensityMatrix> {
    finite("beta", beta)?;
    let (vals, vecs) = hermitian_eigen(hamiltonian);
    let e0 = vals.iter().copied().fold(f64::INFINITY, f64::min);
    let weights: Vec<f64> = vals.iter().map(|&e| (-beta * (e - e0)).exp()).collect();
    let z: f64 = weights.iter().sum();
    let d = CVector::from_iterator(vals.len(), weights.iter().map(|&w| c(w / z)));
    let rho = &vecs * CMatrix::from_diagonal(&d) * vecs.adjoint();
    DensityMatrix::new(rho)
}

/// The 2N-state model: N ground states at 0, N excited states at ħω₀.
///
/// Basis order is `|g,1⟩..|g,N⟩, |e,1⟩..|e,N⟩`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoNModelSpec {
    pub n: usize,
    pub omega0: f64,
    pub gamma_down: f64,
    pub beta: f64,
    pub hbar: f64,
}

impl TwoNModelSpec {
    pub fn new(n: usize, omega0: f64, gamma_down: f64, beta: f64) -> Self {
        Self {
            n,
            omega0,
            gamma_down,
            beta,
            hbar: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidParameter("N must be at least 1".into()));
        }
        positive("omega0", self.omega0)?;
        positive("gamma_down", self.gamma_down)?;
        positive("hbar", self.hbar)?;
        finite("beta", self.beta)
    }

    /// `Γ↑ = Γ↓ e^{-βħω₀}`.
    pub fn gamma_up(&self) -> f64 {
        self.gamma_down * (-self.beta * self.hbar * self.omega0).exp()
    }

    pub fn dim(&self) -> usize {
        2 * self.n
    }
}

/// `H = ħω₀ Σ_j |e,j⟩⟨e,j|`.
pub fn two_n_hamiltonian(n: usize, hbar: f64, omega0: f64) -> CMatrix {
    let d = 2 * n;
    CMatrix::from_fn(d, d, |i, j| if i == j && i >= n { c(hbar * omega0) } else { c(0.0) })
}

/// `L = Σ_{j,j'} |g,j⟩⟨e,j'|`.
pub fn two_n_lowering(n: usize) -> CMatrix {
    let d = 2 * n;
    CMatrix::from_fn(d, d, |i, j| if i < n && j >= n { ONE } else { c(0.0) })
}

/// Decay at `+ω₀` with rate `gamma_down`, excitation at `-ω₀` with `gamma_up`.
pub fn two_n_bath(
    n: usize,
    omega0: f64,
    label: &str,
    beta: f64,
    mu: f64,
    gamma_down: f64,
    gamma_up: f64,
) -> Result<Bath> {
    let l = two_n_lowering(n);
    let ld = l.adjoint();
    Bath::new(
        label,
        beta,
        mu,
        vec![
            JumpChannel::new(omega0, gamma_down, l)?,
            JumpChannel::new(-omega0, gamma_up, ld)?,
        ],
    )
}

/// Single-bath 2N model and its computational energy basis.
pub fn build_2n_model(spec: &TwoNModelSpec) -> Result<(LindbladModel, EnergyBasis)> {
    spec.validate()?;
    let bath = two_n_bath(
        spec.n,
        spec.omega0,
        DEFAULT_BATH,
        spec.beta,
        0.0,
        spec.gamma_down,
        spec.gamma_up(),
    )?;
    let model = LindbladModel::with_hbar(spec.hbar, two_n_hamiltonian(spec.n, spec.hbar, spec.omega0), vec![bath])?;
    let basis = energy_basis(&model, None)?;
    Ok((model, basis))
}

/// ρ⁺ with `p_g / p_e = (1 + a_N) e^{βħω₀}` and `p_g + p_e = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlusStateSpec {
    pub n: usize,
    pub a_n: f64,
    pub beta: f64,
    pub omega0: f64,
    pub hbar: f64,
}

impl PlusStateSpec {
    pub fn for_model(model: &TwoNModelSpec, a_n: f64) -> Self {
        Self {
            n: model.n,
            a_n,
            beta: model.beta,
            omega0: model.omega0,
            hbar: model.hbar,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidParameter("N must be at least 1".into()));
        }
        finite("beta", self.beta)?;
        finite("omega0", self.omega0)?;
        if !(self.a_n > -1.0 && self.a_n.is_finite()) {
            return Err(Error::InvalidParameter(format!("a_N must exceed -1, got {}", self.a_n)));
        }
        let (pg, pe) = self.populations();
        if !(pg > 0.0 && pg < 1.0 && pe > 0.0 && pe < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "populations ({pg}, {pe}) are not inside (0, 1)"
            )));
        }
        Ok(())
    }

    /// `(p_g, p_e)`.
    pub fn populations(&self) -> (f64, f64) {
        let r = (1.0 + self.a_n) * (self.beta * self.hbar * self.omega0).exp();
        (r / (1.0 + r), 1.0 / (1.0 + r))
    }
}

/// `p_g |g,+⟩⟨g,+| + p_e |e,+⟩⟨e,+|` with `|x,+⟩ = N^{-1/2} Σ_j |x,j⟩`.
pub fn plus_state(n: usize, p_g: f64, p_e: f64) -> CMatrix {
    let d = 2 * n;
    let inv = 1.0 / n as f64;
    CMatrix::from_fn(d, d, |i, j| match (i < n, j < n) {
        (true, true) => c(p_g * inv),
        (false, false) => c(p_e * inv),
        _ => c(0.0),
    })
}

pub fn build_plus_state(spec: &PlusStateSpec) -> Result<DensityMatrix> {
    spec.validate()?;
    let (pg, pe) = spec.populations();
    DensityMatrix::new(plus_state(spec.n, pg, pe))
}

/// Closed-form current and entropy production of the 2N model at ρ⁺.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoNObservables {
    pub j: f64,
    pub sigma_dot: f64,
    pub p_g: f64,
    pub p_e: f64,
}

/// `J = N² a_N Γ↓ p_e ħω₀` and `σ̇ = N² a_N ln(1 + a_N) Γ↓ p_e`.
pub fn analytic_2n_observables(spec: &TwoNModelSpec, plus: &PlusStateSpec) -> TwoNObservables {
    let (p_g, p_e) = plus.populations();
    let n2 = (spec.n * spec.n) as f64;
    let a = plus.a_n;
    TwoNObservables {
        j: n2 * a * spec.gamma_down * p_e * spec.hbar * spec.omega0,
        sigma_dot: n2 * a * a.ln_1p() * spec.gamma_down * p_e,
        p_g,
        p_e,
    }
}

/// Two qubits with collective decay; basis `|0⟩, |1⟩, |2⟩, |3⟩` with energies `0, ħω, ħω, 2ħω`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoQubitSpec {
    pub omega: f64,
    pub beta: f64,
    pub gamma0: f64,
    pub hbar: f64,
}

impl TwoQubitSpec {
    pub fn new(omega: f64, beta: f64, gamma0: f64) -> Self {
        Self {
            omega,
            beta,
            gamma0,
            hbar: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        positive("omega", self.omega)?;
        positive("gamma0", self.gamma0)?;
        positive("hbar", self.hbar)?;
        finite("beta", self.beta)
    }

    /// `Γ↓ = Γ₀ / (1 + e^{-βħω})`.
    pub fn gamma_down(&self) -> f64 {
        self.gamma0 / (1.0 + (-self.beta * self.hbar * self.omega).exp())
    }

    /// `Γ↑ = Γ₀ / (1 + e^{βħω})`.
    pub fn gamma_up(&self) -> f64 {
        self.gamma0 / (1.0 + (self.beta * self.hbar * self.omega).exp())
    }
}

pub fn two_qubit_hamiltonian(hbar: f64, omega: f64) -> CMatrix {
    let e = hbar * omega;
    CMatrix::from_diagonal(&CVector::from_vec(vec![c(0.0), c(e), c(e), c(2.0 * e)]))
}

/// `|0⟩⟨1| + |0⟩⟨2| + |1⟩⟨3| + |2⟩⟨3|`.
pub fn two_qubit_lowering() -> CMatrix {
    let mut l = CMatrix::zeros(4, 4);
    for (i, j) in [(0, 1), (0, 2), (1, 3), (2, 3)] {
        l[(i, j)] = ONE;
    }
    l
}

pub fn two_qubit_bath(spec: &TwoQubitSpec, label: &str) -> Result<Bath> {
    spec.validate()?;
    let l = two_qubit_lowering();
    let ld = l.adjoint();
    Bath::new(
        label,
        spec.beta,
        0.0,
        vec![
            JumpChannel::new(spec.omega, spec.gamma_down(), l)?,
            JumpChannel::new(-spec.omega, spec.gamma_up(), ld)?,
        ],
    )
}

pub fn build_two_qubit_model(spec: &TwoQubitSpec) -> Result<(LindbladModel, EnergyBasis)> {
    build_two_qubit_model_labeled(spec, DEFAULT_BATH)
}

pub fn build_two_qubit_model_labeled(spec: &TwoQubitSpec, label: &str) -> Result<(LindbladModel, EnergyBasis)> {
    let bath = two_qubit_bath(spec, label)?;
    let model = LindbladModel::with_hbar(spec.hbar, two_qubit_hamiltonian(spec.hbar, spec.omega), vec![bath])?;
    let basis = energy_basis(&model, None)?;
    Ok((model, basis))
}

/// Stationary state of the two-qubit model with the given weight on the
/// dark singlet `(|1⟩ - |2⟩)/√2`, whose population the dynamics conserves.
///
/// The remaining weight is Gibbs-distributed over `|0⟩`, the triplet
/// `(|1⟩ + |2⟩)/√2` and `|3⟩`.
pub fn two_qubit_stationary(spec: &TwoQubitSpec, singlet_weight: f64) -> Result<DensityMatrix> {
    spec.validate()?;
    if !(0.0..=1.0).contains(&singlet_weight) {
        return Err(Error::InvalidParameter(format!(
            "singlet weight must lie in [0, 1], got {singlet_weight}"
        )));
    }
    let x = (-spec.beta * spec.hbar * spec.omega).exp();
    let z = 1.0 + x + x * x;
    let rest = 1.0 - singlet_weight;
    let (p0, pt, p3) = (rest / z, rest * x / z, rest * x * x / z);
    let mut rho = CMatrix::zeros(4, 4);
    rho[(0, 0)] = c(p0);
    rho[(3, 3)] = c(p3);
    // triplet and singlet share the |1>,|2> block
    rho[(1, 1)] = c(0.5 * (pt + singlet_weight));
    rho[(2, 2)] = c(0.5 * (pt + singlet_weight));
    rho[(1, 2)] = c(0.5 * (pt - singlet_weight));
    rho[(2, 1)] = c(0.5 * (pt - singlet_weight));
    DensityMatrix::new(rho)
}

/// Which bath parameter carries the bias in the two-bath 2N model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TwoBathVariant {
    /// Baths `H` and `C` at different temperatures, `μ = 0`.
    Temperature { beta_mid: f64 },
    /// Baths `L` and `R` at a shared `β` with different chemical potentials.
    Chemical { beta: f64, mu_mid: f64 },
}

/// Two baths with a common decay rate, biased so that
/// `(1 + 1/N) Γ↓ ρ_ee = Γ↑^{hot} ρ_gg` and `(1 - 1/N) Γ↓ ρ_ee = Γ↑^{cold} ρ_gg`.
///
/// The bath parameters are placed symmetrically in log space around the
/// midpoint so that `ρ_gg / ρ_ee = e^{β_mid ħω}` (or `e^{β(ħω - μ_mid)}`)
/// for every N:
/// `β_{H,C} = β_mid - ln(1 ± 1/N)/(ħω)` and `μ_{L,R} = μ_mid + ln(1 ± 1/N)/β`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoBathTwoNSpec {
    pub n: usize,
    pub omega: f64,
    pub gamma_down_common: f64,
    pub variant: TwoBathVariant,
    pub hbar: f64,
}

/// Parameters of one bath in the two-bath model.
#[derive(Debug, Clone, PartialEq)]
pub struct BathParams {
    pub label: String,
    pub beta: f64,
    pub mu: f64,
    pub gamma_down: f64,
    pub gamma_up: f64,
}

impl TwoBathTwoNSpec {
    pub fn new(n: usize, omega: f64, gamma_down_common: f64, variant: TwoBathVariant) -> Self {
        Self {
            n,
            omega,
            gamma_down_common,
            variant,
            hbar: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidParameter(format!(
                "the two-bath model needs N >= 2 (1 - 1/N vanishes at N = 1), got {}",
                self.n
            )));
        }
        positive("omega", self.omega)?;
        positive("gamma_down_common", self.gamma_down_common)?;
        positive("hbar", self.hbar)?;
        let [hot, cold] = self.bath_params();
        for b in [&hot, &cold] {
            positive(&format!("beta of bath {}", b.label), b.beta)?;
            finite(&format!("mu of bath {}", b.label), b.mu)?;
        }
        Ok(())
    }

    /// `[hot, cold]`.
    pub fn bath_params(&self) -> [BathParams; 2] {
        let e = self.hbar * self.omega;
        let n = self.n as f64;
        let (up, down) = ((1.0 / n).ln_1p(), (-1.0 / n).ln_1p());
        let g = self.gamma_down_common;
        let make = |label: &str, beta: f64, mu: f64| BathParams {
            label: label.to_string(),
            beta,
            mu,
            gamma_down: g,
            gamma_up: g * (-beta * (e - mu)).exp(),
        };
        match self.variant {
            TwoBathVariant::Temperature { beta_mid } => {
                [make("H", beta_mid - up / e, 0.0), make("C", beta_mid - down / e, 0.0)]
            }
            TwoBathVariant::Chemical { beta, mu_mid } => [
                make("L", beta, mu_mid + up / beta),
                make("R", beta, mu_mid + down / beta),
            ],
        }
    }

    /// `ln ρ_gg/ρ_ee` of the analytic steady state.
    fn log_population_ratio(&self) -> f64 {
        let e = self.hbar * self.omega;
        match self.variant {
            TwoBathVariant::Temperature { beta_mid } => beta_mid * e,
            TwoBathVariant::Chemical { beta, mu_mid } => beta * (e - mu_mid),
        }
    }

    /// `(ρ_gg, ρ_ee)` with `ρ_gg + ρ_ee = 1`.
    pub fn steady_populations(&self) -> (f64, f64) {
        let r = self.log_population_ratio().exp();
        (r / (1.0 + r), 1.0 / (1.0 + r))
    }
}

/// Two-bath model, its analytic steady state and references.
#[derive(Debug, Clone)]
pub struct TwoBathSystem {
    pub model: LindbladModel,
    pub basis: EnergyBasis,
    pub steady_state: DensityMatrix,
    pub hot: BathParams,
    pub cold: BathParams,
    pub rho_gg: f64,
    pub rho_ee: f64,
}

impl TwoBathSystem {
    /// `J_hot = N ħω Γ↓ ρ_ee`.
    pub fn analytic_hot_current(&self, spec: &TwoBathTwoNSpec) -> f64 {
        spec.n as f64 * spec.hbar * spec.omega * spec.gamma_down_common * self.rho_ee
    }

    /// `σ̇ = N Γ↓ ρ_ee [ln(1 + 1/N) - ln(1 - 1/N)]`.
    pub fn analytic_entropy_production(&self, spec: &TwoBathTwoNSpec) -> f64 {
        let n = spec.n as f64;
        n * spec.gamma_down_common * self.rho_ee * ((1.0 / n).ln_1p() - (-1.0 / n).ln_1p())
    }
}

pub fn build_two_bath_2n(spec: &TwoBathTwoNSpec) -> Result<TwoBathSystem> {
    spec.validate()?;
    let [hot, cold] = spec.bath_params();
    let baths = [&hot, &cold]
        .iter()
        .map(|p| two_n_bath(spec.n, spec.omega, &p.label, p.beta, p.mu, p.gamma_down, p.gamma_up))
        .collect::<Result<Vec<_>>>()?;
    let model = LindbladModel::with_hbar(spec.hbar, two_n_hamiltonian(spec.n, spec.hbar, spec.omega), baths)?;
    let basis = energy_basis(&model, None)?;
    let (rho_gg, rho_ee) = spec.steady_populations();
    let steady_state = DensityMatrix::new(plus_state(spec.n, rho_gg, rho_ee))?;
    Ok(TwoBathSystem {
        model,
        basis,
        steady_state,
        hot,
        cold,
        rho_gg,
        rho_ee,
    })
}
