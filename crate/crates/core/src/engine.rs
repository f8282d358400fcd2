//! Four-stroke quench/contact heat engines: the generic cycle with
//! per-cycle accounting and the performance indicator `P`, its dephased
//! classical reference, and the anchored near-Carnot cycle of the 2N model.

use std::fmt;

use crate::coherence::{coherence_terms, strict_diagonalize_matrix, EnergyBasis};
use crate::error::{Error, Result};
use crate::lindblad::dynamics::{check_trajectory_state, warn_if_unstable};
use crate::lindblad::{DensityMatrix, LindbladModel, Propagator};
use crate::matrix::{is_psd_within, trace_distance, CMatrix};
use crate::models::{
    build_two_qubit_model_labeled, gibbs_state, plus_state, two_n_bath, two_n_hamiltonian, two_qubit_stationary,
    TwoQubitSpec,
};
use crate::thermo::{heat_current_channels, thermo_sample, ThermoSample, TradeoffContext};

pub const HOT: &str = "H";
pub const COLD: &str = "C";

/// Working medium of the generic cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EngineSystem {
    TwoQubit,
    /// The 2N-state model with the given N.
    TwoN(usize),
}

/// Parameters of the generic four-stroke cycle.
///
/// Rates follow `Γ↓ = Γ₀/(1 + e^{-βħω})`, `Γ↑ = Γ₀/(1 + e^{βħω})` for both media.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CycleSpec {
    pub system: EngineSystem,
    pub omega_h: f64,
    pub omega_c: f64,
    pub beta_h: f64,
    pub beta_c: f64,
    pub tau_h: f64,
    pub tau_c: f64,
    pub gamma0: f64,
    pub hbar: f64,
    pub dt: f64,
    /// Trace distance between successive cycle-start states that counts as stationary.
    pub stationarity_tol: f64,
}

impl Default for CycleSpec {
    /// Two-qubit medium at `ω_H = 2, ω_C = 1, β_H = 0.6, β_C = 1.5, τ_H = 0.5, τ_C = 1`.
    fn default() -> Self {
        Self {
            system: EngineSystem::TwoQubit,
            omega_h: 2.0,
            omega_c: 1.0,
            beta_h: 0.6,
            beta_c: 1.5,
            tau_h: 0.5,
            tau_c: 1.0,
            gamma0: 1.0,
            hbar: 1.0,
            dt: 0.002,
            stationarity_tol: 1e-10,
        }
    }
}

fn invalid(msg: String) -> Error {
    Error::InvalidParameter(msg)
}

impl CycleSpec {
    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.omega_h,
            self.omega_c,
            self.beta_h,
            self.beta_c,
            self.tau_h,
            self.tau_c,
            self.gamma0,
            self.hbar,
            self.dt,
            self.stationarity_tol,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(invalid("cycle parameters must be finite".into()));
        }
        if !(self.omega_h > self.omega_c && self.omega_c > 0.0) {
            return Err(invalid(format!(
                "need omega_h > omega_c > 0, got {} and {}",
                self.omega_h, self.omega_c
            )));
        }
        if !(self.beta_c > self.beta_h && self.beta_h > 0.0) {
            return Err(invalid(format!(
                "need beta_c > beta_h > 0, got {} and {}",
                self.beta_c, self.beta_h
            )));
        }
        if !(self.tau_h > 0.0 && self.tau_c > 0.0) {
            return Err(invalid("contact durations must be positive".into()));
        }
        if !(self.gamma0 > 0.0 && self.hbar > 0.0 && self.dt > 0.0 && self.stationarity_tol > 0.0) {
            return Err(invalid("gamma0, hbar, dt and stationarity_tol must be positive".into()));
        }
        if let EngineSystem::TwoN(0) = self.system {
            return Err(invalid("N must be at least 1".into()));
        }
        Ok(())
    }

    /// `1 - β_H/β_C`.
    pub fn eta_car(&self) -> f64 {
        1.0 - self.beta_h / self.beta_c
    }

    fn contact_model(&self, omega: f64, beta: f64, label: &str) -> Result<(LindbladModel, EnergyBasis)> {
        let q = TwoQubitSpec {
            omega,
            beta,
            gamma0: self.gamma0,
            hbar: self.hbar,
        };
        match self.system {
            EngineSystem::TwoQubit => build_two_qubit_model_labeled(&q, label),
            EngineSystem::TwoN(n) => {
                q.validate()?;
                let bath = two_n_bath(n, omega, label, beta, 0.0, q.gamma_down(), q.gamma_up())?;
                let model = LindbladModel::with_hbar(self.hbar, two_n_hamiltonian(n, self.hbar, omega), vec![bath])?;
                let basis = crate::coherence::energy_basis(&model, None)?;
                Ok((model, basis))
            }
        }
    }

    /// Model attached to the hot bath, gap `ħω_H`.
    pub fn hot_model(&self) -> Result<(LindbladModel, EnergyBasis)> {
        self.contact_model(self.omega_h, self.beta_h, HOT)
    }

    /// Model attached to the cold bath, gap `ħω_C`.
    pub fn cold_model(&self) -> Result<(LindbladModel, EnergyBasis)> {
        self.contact_model(self.omega_c, self.beta_c, COLD)
    }

    /// Gibbs state of the cold Hamiltonian at `β_C`.
    pub fn cold_gibbs(&self) -> Result<DensityMatrix> {
        let (model, _) = self.cold_model()?;
        gibbs_state(model.hamiltonian(), self.beta_c)
    }

    /// Stationary state of the cold contact reached from the ground state:
    /// Gibbs weights on the bright sector, dark states empty. Block-diagonal.
    pub fn initial_state(&self) -> Result<DensityMatrix> {
        match self.system {
            EngineSystem::TwoQubit => two_qubit_stationary(
                &TwoQubitSpec {
                    omega: self.omega_c,
                    beta: self.beta_c,
                    gamma0: self.gamma0,
                    hbar: self.hbar,
                },
                0.0,
            ),
            EngineSystem::TwoN(n) => {
                self.validate()?;
                let p_e = 1.0 / (1.0 + (self.beta_c * self.hbar * self.omega_c).exp());
                DensityMatrix::new(plus_state(n, 1.0 - p_e, p_e))
            }
        }
    }

    fn steps(tau: f64, dt: f64) -> usize {
        ((tau / dt).round() as usize).max(1)
    }
}

/// Accounting for one cycle.
#[derive(Debug, Clone, PartialEq)]
pub struct CycleRecord {
    pub cycle_index: usize,
    /// `Q_H - Q_C`.
    pub w: f64,
    /// `∫ J_H dt` over the hot contact.
    pub q_h: f64,
    /// `-∫ J_C dt` over the cold contact.
    pub q_c: f64,
    pub tau: f64,
    /// `W / Q_H`.
    pub eta: f64,
    pub eta_car: f64,
    pub p: f64,
    pub abar_cl: f64,
    pub abar_qm: f64,
    pub converged: bool,
    /// `β_C Q_C - β_H Q_H`.
    pub sigma: f64,
    /// Work from the two quenches, `Tr[(H_H - H_C)(ρ_after_hot - ρ_after_cold)]`.
    pub quench_work: f64,
    /// `|quench_work - (ΔE_hot - ΔE_cold)|` with contact heats taken as energy changes;
    /// vanishes on an exactly closed cycle.
    pub energy_residual: f64,
}

impl CycleRecord {
    pub const CSV_HEADER: &'static str = "cycle_index,W,Q_H,Q_C,tau,eta,eta_car,P,Abar_cl,Abar_qm,converged";

    pub fn csv_row(&self) -> String {
        format!(
            "{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?}",
            self.cycle_index,
            self.w,
            self.q_h,
            self.q_c,
            self.tau,
            self.eta,
            self.eta_car,
            self.p,
            self.abar_cl,
            self.abar_qm,
            self.converged
        )
    }

    /// `|W - (Q_H - Q_C)|`.
    pub fn first_law_residual(&self) -> f64 {
        (self.w - (self.q_h - self.q_c)).abs()
    }

    /// `Ā = Ā_cl + Ā_qm`.
    pub fn abar(&self) -> f64 {
        self.abar_cl + self.abar_qm
    }

    /// Whether `Q_H + Q_C ≤ sqrt(τ Ā σ / 2)` holds with slack `1e-9 max(1, rhs)`.
    pub fn integrated_bound_holds(&self, abar: f64) -> bool {
        let rhs = (0.5 * self.tau * abar * self.sigma.max(0.0)).sqrt();
        self.q_h + self.q_c <= rhs + 1e-9 * rhs.max(1.0)
    }
}

/// Diagnostic bits from [`performance`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PerformanceFlags {
    /// `W ≤ 0`: the cycle is not an engine.
    pub not_engine: bool,
    /// `η ≤ 0` or `η ≥ η_Car`; `P` is undefined.
    pub eta_out_of_range: bool,
    /// `η` within `1e-12` of `η_Car` with `W > 0`.
    pub divergent: bool,
}

impl PerformanceFlags {
    pub fn valid(&self) -> bool {
        !(self.not_engine || self.eta_out_of_range || self.divergent)
    }
}

impl fmt::Display for PerformanceFlags {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names = [
            (self.not_engine, "not_engine"),
            (self.eta_out_of_range, "eta_out_of_range"),
            (self.divergent, "divergent"),
        ];
        let set: Vec<&str> = names.iter().filter(|(on, _)| *on).map(|(_, n)| *n).collect();
        f.write_str(if set.is_empty() { "ok" } else { "" })?;
        f.write_str(&set.join("|"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Performance {
    /// `(W/τ) 2(2-η)² / (β_C η (η_Car - η))`; zero for `W = 0`, NaN when undefined.
    pub p: f64,
    pub flags: PerformanceFlags,
}

impl Performance {
    /// `P ≤ bound` with slack `1e-9 max(1, bound)`; vacuous when `P` is undefined.
    pub fn within(&self, bound: f64) -> bool {
        !self.flags.valid() || self.p <= bound + 1e-9 * bound.abs().max(1.0)
    }
}

/// Performance indicator `P` of a cycle record.
pub fn performance(record: &CycleRecord, beta_c: f64) -> Performance {
    let mut flags = PerformanceFlags::default();
    if record.w == 0.0 {
        return Performance { p: 0.0, flags };
    }
    if record.w < 0.0 {
        flags.not_engine = true;
        return Performance { p: f64::NAN, flags };
    }
    let eta = record.eta;
    let gap = record.eta_car - eta;
    if gap.abs() <= 1e-12 {
        flags.divergent = true;
        return Performance {
            p: f64::INFINITY,
            flags,
        };
    }
    if !(eta > 0.0 && gap > 0.0) {
        flags.eta_out_of_range = true;
        return Performance { p: f64::NAN, flags };
    }
    let p = record.w / record.tau * 2.0 * (2.0 - eta).powi(2) / (beta_c * eta * gap);
    Performance { p, flags }
}

/// Conservation diagnostics gathered along a run.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ConservationStats {
    pub max_trace_drift: f64,
    /// Every checked state passed the positivity test with slack `1e-8`.
    pub positivity_ok: bool,
    pub states_checked: usize,
}

/// Options for [`run_cycle_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CycleOptions {
    pub max_cycles: usize,
    /// Strict-diagonalize after every integrator step.
    pub dephase: bool,
    /// Record a [`ThermoSample`] every k-th step of the stationary cycle; 0 disables sampling.
    pub sample_every: usize,
    /// Keep the states of the stationary cycle's hot contact.
    pub keep_states: bool,
}

impl Default for CycleOptions {
    fn default() -> Self {
        Self {
            max_cycles: 200,
            dephase: false,
            sample_every: 1,
            keep_states: false,
        }
    }
}

/// Output of a generic cycle run.
#[derive(Debug, Clone)]
pub struct CycleRun {
    /// Record of the recording cycle run after stationarity (or after `max_cycles`).
    pub record: CycleRecord,
    pub performance: Performance,
    /// Number of cycles run before the recording cycle.
    pub cycles: usize,
    /// Samples during the hot contact, `t` measured from its start.
    pub hot_samples: Vec<ThermoSample>,
    /// Samples during the cold contact, `t` measured from the cycle start.
    pub cold_samples: Vec<ThermoSample>,
    /// States of the recording cycle's hot contact when requested.
    pub hot_states: Vec<CMatrix>,
    pub cycle_start: DensityMatrix,
    pub stats: ConservationStats,
}

struct Contact<'a> {
    model: &'a LindbladModel,
    basis: &'a EnergyBasis,
    ctx: TradeoffContext,
    steps: usize,
}

#[derive(Default)]
struct ContactTotals {
    heat: f64,
    a_cl: f64,
    a_qm: f64,
}

struct CycleDriver<'a> {
    hot: Contact<'a>,
    cold: Contact<'a>,
    dt: f64,
    opts: CycleOptions,
    trace0: f64,
    stats: ConservationStats,
}

impl CycleDriver<'_> {
    fn observe(&self, c: &Contact<'_>, rho: &CMatrix) -> Result<(f64, f64, f64)> {
        let j = heat_current_channels(c.model, rho, None)?;
        let (a_cl, a_qm, _) = coherence_terms(&c.ctx.x, c.ctx.c_x, rho, c.basis)?;
        Ok((j, a_cl, a_qm))
    }

    fn run_contact(
        &mut self,
        hot: bool,
        rho: &mut CMatrix,
        t0: f64,
        mut samples: Option<&mut Vec<ThermoSample>>,
        mut states: Option<&mut Vec<CMatrix>>,
    ) -> Result<ContactTotals> {
        let c = if hot { &self.hot } else { &self.cold };
        let mut prop = Propagator::new(c.model, self.dt);
        let mut totals = ContactTotals::default();
        let mut prev = self.observe(c, rho)?;
        let sample_every = self.opts.sample_every;
        let record = |k: usize, rho: &CMatrix, samples: &mut Option<&mut Vec<ThermoSample>>| -> Result<()> {
            if let Some(out) = samples.as_deref_mut() {
                if sample_every > 0 && (k.is_multiple_of(sample_every) || k == c.steps) {
                    out.push(thermo_sample(c.model, rho, c.basis, &c.ctx, t0 + k as f64 * self.dt)?);
                }
            }
            Ok(())
        };
        record(0, rho, &mut samples)?;
        if let Some(s) = states.as_deref_mut() {
            s.push(rho.clone());
        }
        let mut max_drift = self.stats.max_trace_drift;
        let mut checked = 0;
        let mut positivity_ok = true;
        for k in 1..=c.steps {
            let mut next = prop.step(rho);
            if self.opts.dephase {
                next = strict_diagonalize_matrix(&next, c.basis)?;
            }
            let t = t0 + k as f64 * self.dt;
            max_drift = max_drift.max(check_trajectory_state(&next, self.trace0, t, false)?);
            if !is_psd_within(&next, 1e-8) {
                positivity_ok = false;
            }
            checked += 1;
            let obs = self.observe(c, &next)?;
            totals.heat += 0.5 * self.dt * (prev.0 + obs.0);
            totals.a_cl += 0.5 * self.dt * (prev.1 + obs.1);
            totals.a_qm += 0.5 * self.dt * (prev.2 + obs.2);
            prev = obs;
            *rho = next;
            record(k, rho, &mut samples)?;
            if let Some(s) = states.as_deref_mut() {
                s.push(rho.clone());
            }
        }
        self.stats.max_trace_drift = max_drift;
        self.stats.states_checked += checked;
        self.stats.positivity_ok &= positivity_ok;
        Ok(totals)
    }
}

/// Generic cycle from `rho0` with default options and `max_cycles`.
pub fn run_cycle(spec: &CycleSpec, rho0: &DensityMatrix, max_cycles: usize) -> Result<CycleRun> {
    run_cycle_with(
        spec,
        rho0,
        &CycleOptions {
            max_cycles,
            ..CycleOptions::default()
        },
    )
}

/// The same protocol with the state strict-diagonalized after every step.
pub fn run_dephased_cycle(spec: &CycleSpec, rho0: &DensityMatrix, max_cycles: usize) -> Result<CycleRun> {
    run_cycle_with(
        spec,
        rho0,
        &CycleOptions {
            max_cycles,
            dephase: true,
            ..CycleOptions::default()
        },
    )
}

/// Iterates hot contact, quench, cold contact, quench until the cycle-start
/// state repeats within `spec.stationarity_tol` (trace distance), then runs
/// one recording cycle that yields the record and samples.
pub fn run_cycle_with(spec: &CycleSpec, rho0: &DensityMatrix, opts: &CycleOptions) -> Result<CycleRun> {
    spec.validate()?;
    let (hot_model, hot_basis) = spec.hot_model()?;
    let (cold_model, cold_basis) = spec.cold_model()?;
    crate::matrix::check_dim(rho0.matrix(), hot_model.dim())?;
    warn_if_unstable(&hot_model, spec.dt);
    warn_if_unstable(&cold_model, spec.dt);
    let mut driver = CycleDriver {
        hot: Contact {
            ctx: TradeoffContext::new(&hot_model, &hot_basis)?,
            model: &hot_model,
            basis: &hot_basis,
            steps: CycleSpec::steps(spec.tau_h, spec.dt),
        },
        cold: Contact {
            ctx: TradeoffContext::new(&cold_model, &cold_basis)?,
            model: &cold_model,
            basis: &cold_basis,
            steps: CycleSpec::steps(spec.tau_c, spec.dt),
        },
        dt: spec.dt,
        opts: *opts,
        trace0: rho0.matrix().trace().re,
        stats: ConservationStats {
            positivity_ok: true,
            ..ConservationStats::default()
        },
    };
    let mut rho = rho0.matrix().clone();
    if opts.dephase {
        rho = strict_diagonalize_matrix(&rho, &cold_basis)?;
    }
    let mut converged = false;
    let mut cycles = 0;
    while cycles < opts.max_cycles {
        let start = rho.clone();
        driver.run_contact(true, &mut rho, 0.0, None, None)?;
        driver.run_contact(false, &mut rho, 0.0, None, None)?;
        cycles += 1;
        if trace_distance(&start, &rho) < spec.stationarity_tol {
            converged = true;
            break;
        }
    }
    let cycle_start = DensityMatrix::from_trusted(rho.clone());
    let sampling = opts.sample_every > 0;
    let mut hot_samples = Vec::new();
    let mut cold_samples = Vec::new();
    let mut hot_states = Vec::new();
    let hot = driver.run_contact(
        true,
        &mut rho,
        0.0,
        sampling.then_some(&mut hot_samples),
        opts.keep_states.then_some(&mut hot_states),
    )?;
    let after_hot = rho.clone();
    let tau_h = driver.hot.steps as f64 * spec.dt;
    let cold = driver.run_contact(false, &mut rho, tau_h, sampling.then_some(&mut cold_samples), None)?;
    let tau = tau_h + driver.cold.steps as f64 * spec.dt;
    let dh = hot_model.hamiltonian() - cold_model.hamiltonian();
    let quench_work = crate::matrix::trace_product(&dh, &(&after_hot - &rho)).re;
    let de_hot = crate::matrix::trace_product(hot_model.hamiltonian(), &(&after_hot - cycle_start.matrix())).re;
    let de_cold = crate::matrix::trace_product(cold_model.hamiltonian(), &(&rho - &after_hot)).re;
    let energy_residual = (quench_work - (de_hot + de_cold)).abs();
    let (q_h, q_c) = (hot.heat, -cold.heat);
    let w = q_h - q_c;
    let mut record = CycleRecord {
        cycle_index: cycles,
        w,
        q_h,
        q_c,
        tau,
        eta: if q_h != 0.0 { w / q_h } else { f64::NAN },
        eta_car: spec.eta_car(),
        p: 0.0,
        abar_cl: (hot.a_cl + cold.a_cl) / tau,
        abar_qm: (hot.a_qm + cold.a_qm) / tau,
        converged,
        sigma: spec.beta_c * q_c - spec.beta_h * q_h,
        quench_work,
        energy_residual,
    };
    let perf = performance(&record, spec.beta_c);
    record.p = perf.p;
    Ok(CycleRun {
        record,
        performance: perf,
        cycles,
        hot_samples,
        cold_samples,
        hot_states,
        cycle_start,
        stats: driver.stats,
    })
}

/// How `ω_H^(N)` follows from the control parameter `a_N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GapRelation {
    /// `ħ(β_C ω_C - β_H ω_H) = a_N`; makes `η = η_Car - a_N/(β_C ħ ω_H)` exact.
    Linear,
    /// `ħ(β_C ω_C - β_H ω_H) = ln(1 + a_N)`.
    Logarithmic,
}

/// The anchored near-Carnot cycle of the 2N model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CarnotCycleSpec {
    pub n: usize,
    pub omega_c: f64,
    pub a_n: f64,
    pub beta_h: f64,
    pub beta_c: f64,
    pub gamma_down_h: f64,
    pub gamma_down_c: f64,
    pub hbar: f64,
    pub gap_relation: GapRelation,
    /// Anchor offset `s` in `Γ↑ρ_gg = (1 + s a_N)^{±1} Γ↓ρ_ee`; 0.45 by default.
    pub anchor: f64,
    /// Integrator steps per contact, sized from the analytic contact time.
    pub steps_per_contact: usize,
}

impl CarnotCycleSpec {
    /// `a_N = 1/N`, `ω_C = 1`, `β_H = 1`, `β_C = 2`, unit decay rates.
    pub fn new(n: usize) -> Self {
        Self {
            n,
            omega_c: 1.0,
            a_n: 1.0 / n as f64,
            beta_h: 1.0,
            beta_c: 2.0,
            gamma_down_h: 1.0,
            gamma_down_c: 1.0,
            hbar: 1.0,
            gap_relation: GapRelation::Linear,
            anchor: 0.45,
            steps_per_contact: 300,
        }
    }

    /// `ħ(β_C ω_C - β_H ω_H)`.
    pub fn gap_parameter(&self) -> f64 {
        match self.gap_relation {
            GapRelation::Linear => self.a_n,
            GapRelation::Logarithmic => self.a_n.ln_1p(),
        }
    }

    pub fn omega_h(&self) -> f64 {
        (self.beta_c * self.omega_c - self.gap_parameter() / self.hbar) / self.beta_h
    }

    pub fn eta_car(&self) -> f64 {
        1.0 - self.beta_h / self.beta_c
    }

    /// `η_Car - κ/(β_C ħ ω_H)` with `κ` the gap parameter (`a_N` for the linear relation).
    pub fn analytic_eta(&self) -> f64 {
        self.eta_car() - self.gap_parameter() / (self.beta_c * self.hbar * self.omega_h())
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(invalid(format!("the Carnot cycle needs N >= 2, got {}", self.n)));
        }
        let vals = [
            self.omega_c,
            self.a_n,
            self.beta_h,
            self.beta_c,
            self.gamma_down_h,
            self.gamma_down_c,
            self.hbar,
            self.anchor,
        ];
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(invalid("Carnot parameters must be finite".into()));
        }
        if !(self.a_n > 0.0) {
            return Err(invalid(format!("a_N must be positive, got {}", self.a_n)));
        }
        if !(self.beta_c > self.beta_h && self.beta_h > 0.0) {
            return Err(invalid("need beta_c > beta_h > 0".into()));
        }
        if !(self.omega_c > 0.0 && self.gamma_down_h > 0.0 && self.gamma_down_c > 0.0 && self.hbar > 0.0) {
            return Err(invalid("omega_c, rates and hbar must be positive".into()));
        }
        if !(self.omega_h() > 0.0) {
            return Err(invalid(format!("derived omega_h = {} is not positive", self.omega_h())));
        }
        if !(self.anchor > 0.0) || self.steps_per_contact < 10 {
            return Err(invalid(
                "anchor must be positive and steps_per_contact at least 10".into(),
            ));
        }
        let k = 1.0 + self.anchor * self.a_n;
        if self.gap_parameter().exp() <= k * k {
            return Err(invalid(format!(
                "anchors cross: e^gap = {} must exceed (1 + s a_N)^2 = {}",
                self.gap_parameter().exp(),
                k * k
            )));
        }
        Ok(())
    }

    fn rates(&self, omega: f64, beta: f64, down: f64) -> (f64, f64) {
        (down, down * (-beta * self.hbar * omega).exp())
    }

    /// `ρ_ee` of ρ'_C, where `Γ↑^C ρ_gg = Γ↓^C ρ_ee / (1 + s a_N)`.
    pub fn anchor_cold_ee(&self) -> f64 {
        let r = (self.beta_c * self.hbar * self.omega_c).exp() / (1.0 + self.anchor * self.a_n);
        1.0 / (1.0 + r)
    }

    /// `ρ_ee` of ρ'_H, where `Γ↑^H ρ_gg = (1 + s a_N) Γ↓^H ρ_ee`.
    pub fn anchor_hot_ee(&self) -> f64 {
        let r = (1.0 + self.anchor * self.a_n) * (self.beta_h * self.hbar * self.omega_h()).exp();
        1.0 / (1.0 + r)
    }
}

/// Result of [`run_carnot_2n`].
#[derive(Debug, Clone, PartialEq)]
pub struct CarnotRecord {
    pub n: usize,
    pub a_n: f64,
    pub omega_h: f64,
    /// `W / Q_H` from the integrated heats.
    pub eta: f64,
    pub eta_analytic: f64,
    pub eta_car: f64,
    pub w: f64,
    pub q_h: f64,
    pub q_c: f64,
    /// `W / cycle_time`.
    pub power: f64,
    pub cycle_time: f64,
    pub t_hot: f64,
    pub t_cold: f64,
    /// `1/(N²(Γ↑ + Γ↓))` of each contact.
    pub relax_hot: f64,
    pub relax_cold: f64,
    /// `max(t_hot/relax_hot, t_cold/relax_cold)`.
    pub relaxation_ratio: f64,
    /// `β_C Q_C - β_H Q_H`.
    pub entropy_production: f64,
    /// `max |ρ_end - ρ'_C|` after the cold contact.
    pub closure: f64,
    pub stats: ConservationStats,
}

impl CarnotRecord {
    pub const CSV_HEADER: &'static str =
        "N,a_N,omega_H,eta,eta_analytic,eta_car,W,Q_H,Q_C,power,cycle_time,relaxation_ratio,entropy_production";

    pub fn csv_row(&self) -> String {
        format!(
            "{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?}",
            self.n,
            self.a_n,
            self.omega_h,
            self.eta,
            self.eta_analytic,
            self.eta_car,
            self.w,
            self.q_h,
            self.q_c,
            self.power,
            self.cycle_time,
            self.relaxation_ratio,
            self.entropy_production
        )
    }
}

/// `⟨g,+|ρ|g,+⟩` and `⟨e,+|ρ|e,+⟩`.
fn plus_populations(rho: &CMatrix, n: usize) -> (f64, f64) {
    let block = |off: usize| {
        let mut s = 0.0;
        for j in 0..n {
            for i in 0..n {
                s += rho[(off + i, off + j)].re;
            }
        }
        s / n as f64
    };
    (block(0), block(n))
}

struct AnchoredContact<'a> {
    model: &'a LindbladModel,
    up: f64,
    down: f64,
    /// Target is `up ρ_gg = factor · down ρ_ee`.
    factor: f64,
    n: usize,
}

impl AnchoredContact<'_> {
    fn residual(&self, rho: &CMatrix) -> f64 {
        let (gg, ee) = plus_populations(rho, self.n);
        self.up * gg - self.factor * self.down * ee
    }

    /// Integrates until the anchor condition holds; returns `(duration, ∫J dt)`.
    fn run(
        &self,
        rho: &mut CMatrix,
        dt: f64,
        max_steps: usize,
        trace0: f64,
        stats: &mut ConservationStats,
    ) -> Result<(f64, f64)> {
        let mut prop = Propagator::new(self.model, dt);
        let mut t = 0.0;
        let mut heat = 0.0;
        let mut j_prev = heat_current_channels(self.model, rho, None)?;
        let f0 = self.residual(rho);
        let check_every = (max_steps / 8).max(1);
        for k in 1..=max_steps {
            let next = prop.step(rho);
            let f1 = self.residual(&next);
            if f1 == 0.0 || f1.signum() != f0.signum() {
                // Illinois iteration on the partial step length
                let (mut lo, mut hi) = (0.0, dt);
                let (mut f_lo, mut f_hi) = (self.residual(rho), f1);
                let mut side = 0;
                let mut h = dt;
                let mut state = next;
                for _ in 0..100 {
                    h = (lo * f_hi - hi * f_lo) / (f_hi - f_lo);
                    state = prop.step_with(rho, h);
                    let fh = self.residual(&state);
                    if fh == 0.0 || (hi - lo) < 1e-15 * dt {
                        break;
                    }
                    if fh.signum() == f_hi.signum() {
                        hi = h;
                        f_hi = fh;
                        if side == -1 {
                            f_lo *= 0.5;
                        }
                        side = -1;
                    } else {
                        lo = h;
                        f_lo = fh;
                        if side == 1 {
                            f_hi *= 0.5;
                        }
                        side = 1;
                    }
                    if fh.abs() <= 1e-15 * self.down.max(self.up) {
                        break;
                    }
                }
                let j = heat_current_channels(self.model, &state, None)?;
                heat += 0.5 * h * (j_prev + j);
                t += h;
                stats.max_trace_drift = stats
                    .max_trace_drift
                    .max(check_trajectory_state(&state, trace0, t, false)?);
                stats.positivity_ok &= is_psd_within(&state, 1e-8);
                stats.states_checked += 1;
                *rho = state;
                return Ok((t, heat));
            }
            let j = heat_current_channels(self.model, &next, None)?;
            heat += 0.5 * dt * (j_prev + j);
            j_prev = j;
            t += dt;
            stats.max_trace_drift = stats
                .max_trace_drift
                .max(check_trajectory_state(&next, trace0, t, false)?);
            if k % check_every == 0 {
                stats.positivity_ok &= is_psd_within(&next, 1e-8);
                stats.states_checked += 1;
            }
            *rho = next;
        }
        Err(Error::NotConverged {
            max_time: t,
            residual: self.residual(rho).abs(),
        })
    }
}

/// Runs the anchored cycle: start at ρ'_C, hot contact until ρ'_H, quench,
/// cold contact back to ρ'_C, quench.
pub fn run_carnot_2n(spec: &CarnotCycleSpec) -> Result<CarnotRecord> {
    spec.validate()?;
    let n = spec.n;
    let omega_h = spec.omega_h();
    let (down_h, up_h) = spec.rates(omega_h, spec.beta_h, spec.gamma_down_h);
    let (down_c, up_c) = spec.rates(spec.omega_c, spec.beta_c, spec.gamma_down_c);
    let hot_model = LindbladModel::with_hbar(
        spec.hbar,
        two_n_hamiltonian(n, spec.hbar, omega_h),
        vec![two_n_bath(n, omega_h, HOT, spec.beta_h, 0.0, down_h, up_h)?],
    )?;
    let cold_model = LindbladModel::with_hbar(
        spec.hbar,
        two_n_hamiltonian(n, spec.hbar, spec.omega_c),
        vec![two_n_bath(n, spec.omega_c, COLD, spec.beta_c, 0.0, down_c, up_c)?],
    )?;
    let k = 1.0 + spec.anchor * spec.a_n;
    let (ee_c, ee_h) = (spec.anchor_cold_ee(), spec.anchor_hot_ee());
    let n2 = (n * n) as f64;
    let relax_hot = 1.0 / (n2 * (up_h + down_h));
    let relax_cold = 1.0 / (n2 * (up_c + down_c));
    // analytic contact durations from exponential relaxation of ρ_ee, used only to size dt
    let est = |relax: f64, eq: f64, from: f64, to: f64| relax * ((eq - from) / (eq - to)).abs().ln();
    let t_est_h = est(relax_hot, up_h / (up_h + down_h), ee_c, ee_h);
    let t_est_c = est(relax_cold, up_c / (up_c + down_c), ee_h, ee_c);
    let steps = spec.steps_per_contact;
    let mut rho = plus_state(n, 1.0 - ee_c, ee_c);
    let start = rho.clone();
    let trace0 = rho.trace().re;
    let mut stats = ConservationStats {
        positivity_ok: is_psd_within(&rho, 1e-8),
        states_checked: 1,
        ..ConservationStats::default()
    };
    let hot = AnchoredContact {
        model: &hot_model,
        up: up_h,
        down: down_h,
        factor: k,
        n,
    };
    let (t_hot, heat_h) = hot.run(&mut rho, t_est_h / steps as f64, 4 * steps, trace0, &mut stats)?;
    let cold = AnchoredContact {
        model: &cold_model,
        up: up_c,
        down: down_c,
        factor: 1.0 / k,
        n,
    };
    let (t_cold, heat_c) = cold.run(&mut rho, t_est_c / steps as f64, 4 * steps, trace0, &mut stats)?;
    let closure = crate::matrix::max_abs(&(&rho - &start));
    let (q_h, q_c) = (heat_h, -heat_c);
    let w = q_h - q_c;
    let cycle_time = t_hot + t_cold;
    Ok(CarnotRecord {
        n,
        a_n: spec.a_n,
        omega_h,
        eta: w / q_h,
        eta_analytic: spec.analytic_eta(),
        eta_car: spec.eta_car(),
        w,
        q_h,
        q_c,
        power: w / cycle_time,
        cycle_time,
        t_hot,
        t_cold,
        relax_hot,
        relax_cold,
        relaxation_ratio: (t_hot / relax_hot).max(t_cold / relax_cold),
        entropy_production: spec.beta_c * q_c - spec.beta_h * q_h,
        closure,
        stats,
    })
}

/// Parameter varied by a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    TauC,
    TauH,
    N,
    AN,
    OmegaH,
    OmegaC,
}

impl std::str::FromStr for SweepParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "tau_c" => Self::TauC,
            "tau_h" => Self::TauH,
            "n" => Self::N,
            "a_n" => Self::AN,
            "omega_h" => Self::OmegaH,
            "omega_c" => Self::OmegaC,
            other => return Err(invalid(format!("unknown sweep parameter `{other}`"))),
        })
    }
}

fn as_count(v: f64) -> Result<usize> {
    if v >= 1.0 && v.fract() == 0.0 && v.is_finite() {
        Ok(v as usize)
    } else {
        Err(invalid(format!("N must be a positive integer, got {v}")))
    }
}

impl CycleSpec {
    /// Copy with one parameter replaced.
    pub fn with_param(&self, param: SweepParam, value: f64) -> Result<Self> {
        let mut s = *self;
        match param {
            SweepParam::TauC => s.tau_c = value,
            SweepParam::TauH => s.tau_h = value,
            SweepParam::OmegaH => s.omega_h = value,
            SweepParam::OmegaC => s.omega_c = value,
            SweepParam::N => s.system = EngineSystem::TwoN(as_count(value)?),
            SweepParam::AN => return Err(invalid("a_n applies to the Carnot cycle only".into())),
        }
        Ok(s)
    }
}

impl CarnotCycleSpec {
    /// Copy with one parameter replaced. Changing N rescales `a_N` so that `N a_N` is kept.
    pub fn with_param(&self, param: SweepParam, value: f64) -> Result<Self> {
        let mut s = *self;
        match param {
            SweepParam::N => {
                let n = as_count(value)?;
                s.a_n = self.a_n * self.n as f64 / n as f64;
                s.n = n;
            }
            SweepParam::AN => s.a_n = value,
            SweepParam::OmegaC => s.omega_c = value,
            other => return Err(invalid(format!("{other:?} does not apply to the Carnot cycle"))),
        }
        Ok(s)
    }
}

/// Evaluates `f` on every value, in parallel when more than one core is available.
/// Output order matches input order.
pub fn par_map<T: Sync, R: Send>(values: &[T], f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let workers = std::thread::available_parallelism()
        .map_or(1, |n| n.get())
        .min(values.len());
    if workers <= 1 {
        return values.iter().map(&f).collect();
    }
    let f = &f;
    let mut slots: Vec<Option<R>> = (0..values.len()).map(|_| None).collect();
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                scope.spawn(move || {
                    values
                        .iter()
                        .enumerate()
                        .skip(w)
                        .step_by(workers)
                        .map(|(i, v)| (i, f(v)))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        for h in handles {
            for (i, r) in h.join().expect("sweep worker panicked") {
                slots[i] = Some(r);
            }
        }
    });
    slots.into_iter().map(|s| s.expect("every index filled")).collect()
}

/// One row of a cycle sweep.
#[derive(Debug)]
pub struct SweepRow<T> {
    pub value: f64,
    pub result: Result<T>,
}

/// Independent generic-cycle runs, one per value; each starts from [`CycleSpec::initial_state`].
pub fn sweep(template: &CycleSpec, param: SweepParam, values: &[f64], opts: &CycleOptions) -> Vec<SweepRow<CycleRun>> {
    par_map(values, |&v| SweepRow {
        value: v,
        result: template
            .with_param(param, v)
            .and_then(|spec| run_cycle_with(&spec, &spec.initial_state()?, opts)),
    })
}

/// Independent Carnot-cycle runs, one per value.
pub fn sweep_carnot(template: &CarnotCycleSpec, param: SweepParam, values: &[f64]) -> Vec<SweepRow<CarnotRecord>> {
    par_map(values, |&v| SweepRow {
        value: v,
        result: template.with_param(param, v).and_then(|s| run_carnot_2n(&s)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick() -> CycleOptions {
        CycleOptions {
            max_cycles: 100,
            sample_every: 0,
            ..CycleOptions::default()
        }
    }

    #[test]
    fn performance_edge_cases() {
        let mut r = CycleRecord {
            cycle_index: 0,
            w: 0.0,
            q_h: 1.0,
            q_c: 1.0,
            tau: 1.0,
            eta: 0.0,
            eta_car: 0.5,
            p: 0.0,
            abar_cl: 0.0,
            abar_qm: 0.0,
            converged: true,
            sigma: 0.0,
            quench_work: 0.0,
            energy_residual: 0.0,
        };
        assert_eq!(performance(&r, 2.0).p, 0.0);
        r.w = 0.5;
        r.eta = 0.5;
        assert!(performance(&r, 2.0).flags.divergent);
        r.eta = 0.25;
        let p = performance(&r, 2.0);
        // oracle: 0.5 * 2 * 1.75^2 / (2 * 0.25 * 0.25)
        assert!((p.p - 24.5).abs() < 1e-12);
        r.w = -0.1;
        assert!(performance(&r, 2.0).flags.not_engine);
    }

    #[test]
    fn tiny_contacts_exchange_little_heat() {
        let spec = CycleSpec {
            tau_h: 0.002,
            tau_c: 0.002,
            ..CycleSpec::default()
        };
        let run = run_cycle_with(&spec, &spec.initial_state().unwrap(), &quick()).unwrap();
        assert!(run.record.q_h.abs() < 1e-2);
        assert!(run.record.w.abs() < 1e-3);
    }

    #[test]
    fn nondegenerate_medium_unaffected_by_dephasing() {
        let spec = CycleSpec {
            system: EngineSystem::TwoN(1),
            ..CycleSpec::default()
        };
        let rho0 = spec.initial_state().unwrap();
        assert!(crate::matrix::max_abs(&(rho0.matrix() - spec.cold_gibbs().unwrap().matrix())) < 1e-15);
        let a = run_cycle_with(&spec, &rho0, &quick()).unwrap();
        let b = run_cycle_with(
            &spec,
            &rho0,
            &CycleOptions {
                dephase: true,
                ..quick()
            },
        )
        .unwrap();
        assert!((a.record.w - b.record.w).abs() < 1e-9);
        assert!((a.record.q_h - b.record.q_h).abs() < 1e-9);
        assert!(a.record.converged);
        assert!(a.record.energy_residual < 1e-9);
    }

    #[test]
    fn carnot_spec_derivations() {
        let s = CarnotCycleSpec::new(8);
        // β_C ω_C - β_H ω_H = a_N
        assert!((s.beta_c * s.omega_c - s.beta_h * s.omega_h() - 0.125).abs() < 1e-15);
        let eta_direct = 1.0 - s.omega_c / s.omega_h();
        assert!((eta_direct - s.analytic_eta()).abs() < 1e-15);
        let log = CarnotCycleSpec {
            gap_relation: GapRelation::Logarithmic,
            ..s
        };
        assert!((log.beta_c * log.omega_c - log.beta_h * log.omega_h() - 1.125_f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn carnot_rejects_crossing_anchors() {
        let s = CarnotCycleSpec {
            a_n: 5.0,
            gap_relation: GapRelation::Logarithmic,
            anchor: 0.9,
            ..CarnotCycleSpec::new(2)
        };
        assert!(run_carnot_2n(&s).is_err());
    }

    #[test]
    fn sweep_keeps_order_and_errors() {
        let rows = sweep(
            &CycleSpec::default(),
            SweepParam::TauC,
            &[0.2, -1.0, 0.4],
            &CycleOptions {
                max_cycles: 3,
                sample_every: 0,
                ..CycleOptions::default()
            },
        );
        assert_eq!(rows.len(), 3);
        assert!(rows[0].result.is_ok());
        assert!(rows[1].result.is_err());
        assert_eq!(rows[2].value, 0.4);
        assert!(sweep(&CycleSpec::default(), SweepParam::TauC, &[], &quick()).is_empty());
    }
}
