//! Heat and particle currents, entropy rates, entropy production in its
//! definitional and transition-rate forms, and the current-dissipation
//! trade-off checks.

use std::fmt;

use nalgebra::DMatrix;

use crate::coherence::{
    block_diagonalize_matrix, c_x, coherence_terms, strict_diagonalize_matrix, x_operator, EnergyBasis,
};
use crate::error::{Error, Result};
use crate::lindblad::{Bath, LindbladModel};
use crate::matrix::{check_dim, hermitian_eigen, trace_product, CMatrix};

/// Eigenvalues at or below this are excluded from `log ρ`.
pub const EIGENVALUE_FLOOR: f64 = 1e-12;
/// Generator weight on the excluded subspace above this flags divergence.
pub const LEAK_TOL: f64 = 1e-9;
/// Pauli-form terms with both fluxes below this are skipped.
pub const FLUX_FLOOR: f64 = 1e-14;

/// A rate that may be flagged as divergent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlaggedRate {
    pub value: f64,
    pub divergent: bool,
}

fn selected<'m>(model: &'m LindbladModel, bath: Option<&str>) -> Result<Vec<&'m Bath>> {
    model.select_baths(bath)
}

/// `J = Tr[H D[ρ]]`, the energy flow from the selected bath(s) into the system.
pub fn heat_current(model: &LindbladModel, rho: &CMatrix, bath: Option<&str>) -> Result<f64> {
    let d = model.dissipator(rho, bath)?;
    Ok(trace_product(model.hamiltonian(), &d).re)
}

/// `J = -Σ ħω γ Tr[L†L ρ]`; equal to [`heat_current`] for eigenoperator channels.
pub fn heat_current_channels(model: &LindbladModel, rho: &CMatrix, bath: Option<&str>) -> Result<f64> {
    check_dim(rho, model.dim())?;
    let mut j = 0.0;
    for b in selected(model, bath)? {
        for ch in b.channels() {
            if ch.rate() != 0.0 && ch.omega() != 0.0 {
                j -= model.hbar() * ch.omega() * ch.rate() * ch.dag_op_expectation(rho).re;
            }
        }
    }
    Ok(j)
}

/// Excitations entering the system per unit time, `-Σ sgn(ω) γ Tr[L†L ρ]`.
pub fn particle_current(model: &LindbladModel, rho: &CMatrix, bath: Option<&str>) -> Result<f64> {
    check_dim(rho, model.dim())?;
    let mut n = 0.0;
    for b in selected(model, bath)? {
        for ch in b.channels() {
            if ch.rate() != 0.0 && ch.omega() != 0.0 {
                n -= ch.omega().signum() * ch.rate() * ch.dag_op_expectation(rho).re;
            }
        }
    }
    Ok(n)
}

/// Eigendecomposition of ρ reused by every `-Tr[G log ρ]` evaluation.
struct LogState {
    values: Vec<f64>,
    vectors: CMatrix,
}

impl LogState {
    fn new(rho: &CMatrix) -> Self {
        let (values, vectors) = hermitian_eigen(rho);
        Self { values, vectors }
    }

    /// `-Tr[g log ρ]` on the support of ρ.
    fn rate(&self, g: &CMatrix) -> FlaggedRate {
        let gu = g * &self.vectors;
        let mut value = 0.0;
        let mut divergent = false;
        for (k, &p) in self.values.iter().enumerate() {
            let w = self.vectors.column(k).dotc(&gu.column(k)).re;
            if p > EIGENVALUE_FLOOR {
                value -= w * p.ln();
            } else if w > LEAK_TOL {
                divergent = true;
            }
        }
        FlaggedRate { value, divergent }
    }
}

/// `Ṡ = -Tr[∂_t ρ log ρ]`.
pub fn entropy_rate(model: &LindbladModel, rho: &CMatrix) -> Result<FlaggedRate> {
    let g = model.generator(rho)?;
    Ok(LogState::new(rho).rate(&g))
}

fn entropy_production_with(
    model: &LindbladModel,
    rho: &CMatrix,
    log_state: &LogState,
    bath: Option<&str>,
) -> Result<FlaggedRate> {
    let d = model.dissipator(rho, bath)?;
    let mut s = log_state.rate(&d);
    for b in selected(model, bath)? {
        let label = Some(b.label());
        let j = heat_current_channels(model, rho, label)?;
        let flow = if b.mu() == 0.0 {
            j
        } else {
            j - b.mu() * particle_current(model, rho, label)?
        };
        s.value -= b.beta() * flow;
    }
    Ok(s)
}

/// `σ̇ = -Tr[D[ρ] log ρ] - Σ_a β_a (J_a - μ_a Ṅ_a)` over the selected bath(s).
///
/// The unitary part drops out because `[ρ, log ρ] = 0`, so with no filter this
/// is `Ṡ - Σ_a β_a (J_a - μ_a Ṅ_a)`.
pub fn entropy_production_rate(model: &LindbladModel, rho: &CMatrix) -> Result<FlaggedRate> {
    entropy_production_rate_bath(model, rho, None)
}

pub fn entropy_production_rate_bath(model: &LindbladModel, rho: &CMatrix, bath: Option<&str>) -> Result<FlaggedRate> {
    check_dim(rho, model.dim())?;
    entropy_production_with(model, rho, &LogState::new(rho), bath)
}

/// Rates for one channel in the eigenbasis of ρ_bd.
#[derive(Debug, Clone)]
pub struct ChannelRates {
    pub bath: usize,
    pub channel: usize,
    pub partner: usize,
    pub omega: f64,
    /// `W_{mn} = γ |⟨m|L|n⟩|²`.
    pub rates: DMatrix<f64>,
}

/// Transition rates between eigenstates of a block-diagonal state.
#[derive(Debug, Clone)]
pub struct TransitionRateTable {
    pub populations: Vec<f64>,
    /// Columns are the eigenvectors `|n⟩`, each inside one energy level.
    pub states: CMatrix,
    pub channels: Vec<ChannelRates>,
}

impl TransitionRateTable {
    /// Diagonalizes ρ_bd level by level so every `|n⟩` is an energy eigenstate.
    pub fn new(model: &LindbladModel, rho_bd: &CMatrix, basis: &EnergyBasis) -> Result<Self> {
        check_dim(rho_bd, model.dim())?;
        let d = model.dim();
        let frame = basis.to_frame(rho_bd);
        let mut populations = vec![0.0; d];
        let mut local = CMatrix::zeros(d, d);
        for level in basis.levels() {
            let k = level.states.len();
            let sub = CMatrix::from_fn(k, k, |i, j| frame[(level.states[i], level.states[j])]);
            let (vals, vecs) = hermitian_eigen(&sub);
            for (col, &p) in vals.iter().enumerate() {
                let n = level.states[col];
                populations[n] = p;
                for (row, &m) in level.states.iter().enumerate() {
                    local[(m, n)] = vecs[(row, col)];
                }
            }
        }
        let states = basis.from_frame_vectors(local);
        let mut channels = Vec::new();
        for (bi, bath) in model.baths().iter().enumerate() {
            for (ci, ch) in bath.channels().iter().enumerate() {
                let partner = bath.partner_of(ci).ok_or_else(|| Error::MissingPartner {
                    bath: bath.label().to_string(),
                    channel: ci,
                })?;
                let elems = states.adjoint() * ch.op() * &states;
                let rates = DMatrix::from_fn(d, d, |m, n| ch.rate() * elems[(m, n)].norm_sqr());
                channels.push(ChannelRates {
                    bath: bi,
                    channel: ci,
                    partner,
                    omega: ch.omega(),
                    rates,
                });
            }
        }
        Ok(Self {
            populations,
            states,
            channels,
        })
    }

    fn partner_rates(&self, entry: &ChannelRates) -> &DMatrix<f64> {
        &self
            .channels
            .iter()
            .find(|c| c.bath == entry.bath && c.channel == entry.partner)
            .expect("partner indexed from the same model")
            .rates
    }

    /// Largest `|W^{ω}_{mn} - e^{β(ħω - μ sgn ω)} W^{-ω}_{nm}|` relative to `W^{ω}_{mn}`.
    pub fn detailed_balance_residual(&self, model: &LindbladModel) -> f64 {
        let mut worst = 0.0_f64;
        for entry in &self.channels {
            let bath = &model.baths()[entry.bath];
            let factor = (bath.beta() * (model.hbar() * entry.omega - bath.mu() * entry.omega.signum())).exp();
            let back = self.partner_rates(entry);
            let d = entry.rates.nrows();
            for n in 0..d {
                for m in 0..d {
                    let w = entry.rates[(m, n)];
                    let scale = w.abs().max(factor * back[(n, m)]).max(f64::MIN_POSITIVE);
                    if scale > FLUX_FLOOR {
                        worst = worst.max((w - factor * back[(n, m)]).abs() / scale);
                    }
                }
            }
        }
        worst
    }

    /// `Σ' W p_n log(W p_n / (W' p_m))`, skipping `ω = 0, m = n`.
    pub fn entropy_production(&self) -> FlaggedRate {
        let mut value = 0.0;
        let mut divergent = false;
        let p = &self.populations;
        for entry in &self.channels {
            let back = self.partner_rates(entry);
            let d = entry.rates.nrows();
            for n in 0..d {
                for m in 0..d {
                    if entry.omega == 0.0 && m == n {
                        continue;
                    }
                    let forward = entry.rates[(m, n)] * p[n].max(0.0);
                    let backward = back[(n, m)] * p[m].max(0.0);
                    if forward <= FLUX_FLOOR && backward <= FLUX_FLOOR {
                        continue;
                    }
                    if forward == 0.0 {
                        continue;
                    }
                    if backward == 0.0 {
                        divergent = true;
                        continue;
                    }
                    value += forward * (forward / backward).ln();
                }
            }
        }
        FlaggedRate { value, divergent }
    }
}

/// Entropy production of a block-diagonal state from transition rates.
pub fn pauli_entropy_production(model: &LindbladModel, rho_bd: &CMatrix, basis: &EnergyBasis) -> Result<FlaggedRate> {
    Ok(TransitionRateTable::new(model, rho_bd, basis)?.entropy_production())
}

/// Outcome of the three current-dissipation inequalities for one state.
///
/// The inequalities are evaluated cross-multiplied:
/// `J(ρ)² σ̇(ρ_bd) ≤ J(ρ_bd)² σ̇(ρ)`, `2 J(ρ_sd)² ≤ A_cl σ̇(ρ_sd)` and
/// `2 J(ρ_bd)² ≤ (A_cl + A_qm) σ̇(ρ_bd)`, each with slack `1e-9 max(1, |rhs|)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TradeoffCheck {
    pub j_rho: f64,
    pub j_bd: f64,
    pub j_sd: f64,
    pub sigma_rho: f64,
    pub sigma_bd: f64,
    pub sigma_sd: f64,
    pub ratio_rho: f64,
    pub ratio_bd: f64,
    pub ratio_sd: f64,
    pub a_cl: f64,
    pub a_qm: f64,
    /// `A_cl / 2`.
    pub bound_cl: f64,
    /// `(A_cl + A_qm) / 2`.
    pub bound_q: f64,
    pub ineq2_ok: bool,
    pub ineq3_ok: bool,
    pub ineq4_ok: bool,
    /// Some ratio has `σ̇ = 0` with `J ≠ 0`, or an entropy term diverged.
    pub divergent: bool,
}

impl TradeoffCheck {
    pub fn all_ok(&self) -> bool {
        self.ineq2_ok && self.ineq3_ok && self.ineq4_ok
    }
}

pub const TRADEOFF_SLACK: f64 = 1e-9;

fn holds(lhs: f64, rhs: f64) -> bool {
    lhs <= rhs + TRADEOFF_SLACK * rhs.abs().max(1.0)
}

/// `J²/σ̇`, zero for `J = σ̇ = 0` and infinite (flagged) for `σ̇ ≤ 0 < |J|`.
pub fn current_ratio(j: f64, sigma: f64) -> (f64, bool) {
    if sigma > 0.0 {
        (j * j / sigma, false)
    } else if j == 0.0 {
        (0.0, false)
    } else {
        (f64::INFINITY, true)
    }
}

/// Precomputed `X` and `C_X` for repeated trade-off checks on one model.
#[derive(Debug, Clone)]
pub struct TradeoffContext {
    pub x: CMatrix,
    pub c_x: f64,
}

impl TradeoffContext {
    pub fn new(model: &LindbladModel, basis: &EnergyBasis) -> Result<Self> {
        let x = x_operator(model);
        let c_x = c_x(&x, basis)?;
        Ok(Self { x, c_x })
    }
}

pub fn tradeoff_check(model: &LindbladModel, rho: &CMatrix, basis: &EnergyBasis) -> Result<TradeoffCheck> {
    let ctx = TradeoffContext::new(model, basis)?;
    tradeoff_check_with(model, rho, basis, &ctx)
}

pub fn tradeoff_check_with(
    model: &LindbladModel,
    rho: &CMatrix,
    basis: &EnergyBasis,
    ctx: &TradeoffContext,
) -> Result<TradeoffCheck> {
    check_dim(rho, model.dim())?;
    let bd = block_diagonalize_matrix(rho, basis)?;
    let sd = strict_diagonalize_matrix(rho, basis)?;
    let j_rho = heat_current_channels(model, rho, None)?;
    let j_bd = heat_current_channels(model, &bd, None)?;
    let j_sd = heat_current_channels(model, &sd, None)?;
    let s_rho = entropy_production_rate(model, rho)?;
    let s_bd = entropy_production_rate(model, &bd)?;
    let s_sd = entropy_production_rate(model, &sd)?;
    let (a_cl, a_qm, _) = coherence_terms(&ctx.x, ctx.c_x, rho, basis)?;
    let (ratio_rho, d1) = current_ratio(j_rho, s_rho.value);
    let (ratio_bd, d2) = current_ratio(j_bd, s_bd.value);
    let (ratio_sd, d3) = current_ratio(j_sd, s_sd.value);
    Ok(TradeoffCheck {
        ineq2_ok: holds(j_rho * j_rho * s_bd.value, j_bd * j_bd * s_rho.value),
        ineq3_ok: holds(2.0 * j_sd * j_sd, a_cl * s_sd.value),
        ineq4_ok: holds(2.0 * j_bd * j_bd, (a_cl + a_qm) * s_bd.value),
        divergent: d1 || d2 || d3 || s_rho.divergent || s_bd.divergent || s_sd.divergent,
        j_rho,
        j_bd,
        j_sd,
        sigma_rho: s_rho.value,
        sigma_bd: s_bd.value,
        sigma_sd: s_sd.value,
        ratio_rho,
        ratio_bd,
        ratio_sd,
        a_cl,
        a_qm,
        bound_cl: 0.5 * a_cl,
        bound_q: 0.5 * (a_cl + a_qm),
    })
}

/// Status bits attached to a [`ThermoSample`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SampleFlags {
    pub divergent: bool,
    pub second_law: bool,
    pub ineq2: bool,
    pub ineq3: bool,
    pub ineq4: bool,
}

impl SampleFlags {
    pub fn any(&self) -> bool {
        self.divergent || self.second_law || self.ineq2 || self.ineq3 || self.ineq4
    }

    /// Any flag other than divergence, which is informational.
    pub fn violation(&self) -> bool {
        self.second_law || self.ineq2 || self.ineq3 || self.ineq4
    }
}

impl fmt::Display for SampleFlags {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names = [
            (self.divergent, "divergent"),
            (self.second_law, "second_law"),
            (self.ineq2, "ineq2"),
            (self.ineq3, "ineq3"),
            (self.ineq4, "ineq4"),
        ];
        let set: Vec<&str> = names.iter().filter(|(on, _)| *on).map(|(_, n)| *n).collect();
        if set.is_empty() {
            f.write_str("ok")
        } else {
            f.write_str(&set.join("|"))
        }
    }
}

/// Second-law slack on σ̇.
pub const SECOND_LAW_SLACK: f64 = 1e-9;

/// Thermodynamic snapshot of one state.
#[derive(Debug, Clone, PartialEq)]
pub struct ThermoSample {
    pub t: f64,
    pub j_per_bath: Vec<(String, f64)>,
    pub entropy_rate: f64,
    pub sigma_dot: f64,
    /// `J²/σ̇` of the full state, `J` summed over baths.
    pub ratio: f64,
    pub a_cl: f64,
    pub a_qm: f64,
    pub c_l1: f64,
    pub check: TradeoffCheck,
    pub flags: SampleFlags,
}

impl ThermoSample {
    pub const CSV_HEADER: &'static str = "t,J_H,J_C,S_dot,sigma_dot,ratio,a_cl,a_qm,flags";

    /// Heat current of bath `label`, zero when the bath is absent.
    pub fn current(&self, label: &str) -> f64 {
        self.j_per_bath
            .iter()
            .find(|(l, _)| l == label)
            .map_or(0.0, |(_, j)| *j)
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{}",
            self.t,
            self.current("H"),
            self.current("C"),
            self.entropy_rate,
            self.sigma_dot,
            self.ratio,
            self.a_cl,
            self.a_qm,
            self.flags
        )
    }
}

/// Computes every observable of `rho` at time `t`.
pub fn thermo_sample(
    model: &LindbladModel,
    rho: &CMatrix,
    basis: &EnergyBasis,
    ctx: &TradeoffContext,
    t: f64,
) -> Result<ThermoSample> {
    check_dim(rho, model.dim())?;
    let mut j_per_bath = Vec::with_capacity(model.baths().len());
    for b in model.baths() {
        j_per_bath.push((
            b.label().to_string(),
            heat_current_channels(model, rho, Some(b.label()))?,
        ));
    }
    let s_dot = entropy_rate(model, rho)?;
    let check = tradeoff_check_with(model, rho, basis, ctx)?;
    let (_, _, c_l1) = coherence_terms(&ctx.x, ctx.c_x, rho, basis)?;
    let flags = SampleFlags {
        divergent: check.divergent || s_dot.divergent,
        second_law: check.sigma_rho < -SECOND_LAW_SLACK,
        ineq2: !check.ineq2_ok,
        ineq3: !check.ineq3_ok,
        ineq4: !check.ineq4_ok,
    };
    Ok(ThermoSample {
        t,
        j_per_bath,
        entropy_rate: s_dot.value,
        sigma_dot: check.sigma_rho,
        ratio: check.ratio_rho,
        a_cl: check.a_cl,
        a_qm: check.a_qm,
        c_l1,
        check,
        flags,
    })
}
