//! Scenario runner behind the `qthermo` binary: resolves parameters, runs one
//! numerical experiment and renders a self-describing CSV.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::path::PathBuf;
use std::str::FromStr;

use crate::engine::{
    run_cycle_with, sweep_carnot, CarnotCycleSpec, CarnotRecord, CycleOptions, CycleRecord, CycleSpec, EngineSystem,
    GapRelation, SweepParam,
};
use crate::error::{Error, Result};
use crate::lindblad::{apply_generator, text::directives};
use crate::matrix::max_abs;
use crate::models::{
    analytic_2n_observables, build_2n_model, build_plus_state, build_two_bath_2n, PlusStateSpec, TwoBathTwoNSpec,
    TwoBathVariant, TwoNModelSpec,
};
use crate::thermo::{entropy_production_rate, heat_current_channels, tradeoff_check, ThermoSample};
use crate::verify::{random_case_checks, run_verify, CHECKS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Scenario {
    Fig2,
    Fig3,
    Scaling2n,
    Carnot2n,
    SteadyTemp,
    SteadyChem,
    Verify,
}

impl Scenario {
    pub const ALL: [Scenario; 7] = [
        Scenario::Fig2,
        Scenario::Fig3,
        Scenario::Scaling2n,
        Scenario::Carnot2n,
        Scenario::SteadyTemp,
        Scenario::SteadyChem,
        Scenario::Verify,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Fig2 => "fig2",
            Scenario::Fig3 => "fig3",
            Scenario::Scaling2n => "scaling2n",
            Scenario::Carnot2n => "carnot2n",
            Scenario::SteadyTemp => "steady_temp",
            Scenario::SteadyChem => "steady_chem",
            Scenario::Verify => "verify",
        }
    }

    /// Override keys accepted by this scenario.
    pub fn keys(self) -> &'static [&'static str] {
        match self {
            Scenario::Fig2 => &[
                "system",
                "n",
                "omega_h",
                "omega_c",
                "beta_h",
                "beta_c",
                "tau_h",
                "tau_c",
                "gamma0",
                "dt",
                "stationarity_tol",
                "max_cycles",
                "init",
                "sample_every",
            ],
            Scenario::Fig3 => &[
                "system",
                "n",
                "omega_h",
                "omega_c",
                "beta_h",
                "beta_c",
                "tau_h",
                "gamma0",
                "dt",
                "stationarity_tol",
                "max_cycles",
                "init",
                "tau_c_min",
                "tau_c_max",
                "tau_c_step",
            ],
            Scenario::Scaling2n => &["n", "omega0", "gamma_down", "beta", "a_n_scale"],
            Scenario::Carnot2n => &[
                "n",
                "omega_c",
                "beta_h",
                "beta_c",
                "gamma_down_h",
                "gamma_down_c",
                "a_n_scale",
                "gap",
                "anchor",
                "steps",
            ],
            Scenario::SteadyTemp => &["n", "omega", "gamma_down", "beta_mid"],
            Scenario::SteadyChem => &["n", "omega", "gamma_down", "beta", "mu_mid"],
            Scenario::Verify => &["cases", "case", "max_n"],
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scenario::ALL.into_iter().find(|sc| sc.name() == s).ok_or_else(|| {
            let names: Vec<&str> = Scenario::ALL.iter().map(|s| s.name()).collect();
            Error::InvalidParameter(format!("unknown scenario `{s}`; expected one of {}", names.join(", ")))
        })
    }
}

/// A scenario plus flat key-value overrides.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    pub overrides: BTreeMap<String, String>,
    pub out: Option<PathBuf>,
    pub seed: u64,
}

impl ScenarioConfig {
    pub fn new(scenario: Scenario) -> Self {
        Self {
            scenario,
            overrides: BTreeMap::new(),
            out: None,
            seed: 0,
        }
    }

    /// Parses `key value` lines; `scenario`, `out` and `seed` are reserved keys,
    /// everything else is an override. `#` starts a comment.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut scenario = None;
        let mut out = None;
        let mut seed = 0;
        let mut overrides = BTreeMap::new();
        for d in directives(text) {
            let value = match d.args.as_slice() {
                [v] => v.to_string(),
                _ => {
                    return Err(Error::Parse {
                        line: d.line,
                        msg: format!("`{}` takes exactly one value", d.key),
                    })
                }
            };
            let parse_err = |msg: String| Error::Parse { line: d.line, msg };
            match d.key.as_str() {
                "scenario" => scenario = Some(value.parse::<Scenario>().map_err(|e| parse_err(e.to_string()))?),
                "out" => out = Some(PathBuf::from(value)),
                "seed" => {
                    seed = value
                        .parse()
                        .map_err(|_| parse_err(format!("seed `{value}` is not an integer")))?
                }
                key => {
                    overrides.insert(key.to_string(), value);
                }
            }
        }
        let scenario = scenario.ok_or_else(|| Error::Parse {
            line: 0,
            msg: "missing `scenario` line".into(),
        })?;
        Ok(Self {
            scenario,
            overrides,
            out,
            seed,
        })
    }

    /// Rejects overrides the scenario does not know.
    pub fn check_keys(&self) -> Result<()> {
        let keys = self.scenario.keys();
        for k in self.overrides.keys() {
            if !keys.contains(&k.as_str()) {
                return Err(Error::InvalidParameter(format!(
                    "`{k}` does not apply to scenario {}; accepted: {}",
                    self.scenario,
                    keys.join(", ")
                )));
            }
        }
        Ok(())
    }
}

/// Metadata rendering of a resolved value.
trait Echo {
    fn echo(&self) -> String;
}

impl Echo for f64 {
    fn echo(&self) -> String {
        format!("{self:?}")
    }
}

macro_rules! echo_display {
    ($($t:ty),*) => {$(
        impl Echo for $t {
            fn echo(&self) -> String {
                self.to_string()
            }
        }
    )*};
}
echo_display!(usize, u64, String);

/// Typed access to overrides; every value read (or defaulted) is echoed in the metadata.
struct Params<'a> {
    raw: &'a BTreeMap<String, String>,
    resolved: BTreeMap<&'static str, String>,
    /// τ_C is swept, so neither it nor sampling is read.
    sweeping: bool,
}

impl<'a> Params<'a> {
    fn new(raw: &'a BTreeMap<String, String>) -> Self {
        Self {
            raw,
            resolved: BTreeMap::new(),
            sweeping: false,
        }
    }

    fn get<T: FromStr + Echo>(&mut self, key: &'static str, default: T) -> Result<T> {
        let v = match self.raw.get(key) {
            Some(s) => s
                .parse::<T>()
                .map_err(|_| Error::InvalidParameter(format!("`{key}` has invalid value `{s}`")))?,
            None => default,
        };
        self.resolved.insert(key, v.echo());
        Ok(v)
    }

    fn list<T: FromStr + Echo + Clone>(&mut self, key: &'static str, default: &[T]) -> Result<Vec<T>> {
        let v = match self.raw.get(key) {
            Some(s) => s
                .split(',')
                .map(|p| {
                    p.trim()
                        .parse::<T>()
                        .map_err(|_| Error::InvalidParameter(format!("`{key}` has invalid entry `{p}`")))
                })
                .collect::<Result<Vec<T>>>()?,
            None => default.to_vec(),
        };
        let shown: Vec<String> = v.iter().map(Echo::echo).collect();
        self.resolved.insert(key, shown.join(","));
        Ok(v)
    }

    fn has(&self, key: &str) -> bool {
        self.raw.contains_key(key)
    }
}

/// Rendered output of a scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioOutput {
    pub csv: String,
    /// Failed physics checks, each naming the check.
    pub violations: Vec<String>,
}

impl ScenarioOutput {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

struct Table {
    header: &'static str,
    rows: Vec<String>,
    notes: Vec<(String, String)>,
    violations: Vec<String>,
}

impl Table {
    fn new(header: &'static str) -> Self {
        Self {
            header,
            rows: Vec::new(),
            notes: Vec::new(),
            violations: Vec::new(),
        }
    }

    fn note(&mut self, key: &str, value: impl fmt::Display) {
        self.notes.push((key.to_string(), value.to_string()));
    }

    fn require(&mut self, ok: bool, msg: impl FnOnce() -> String) {
        if !ok {
            self.violations.push(msg());
        }
    }
}

/// Runs the configured scenario.
pub fn run_scenario(config: &ScenarioConfig) -> Result<ScenarioOutput> {
    config.check_keys()?;
    let mut p = Params::new(&config.overrides);
    let table = match config.scenario {
        Scenario::Fig2 => fig2(&mut p)?,
        Scenario::Fig3 => fig3(&mut p)?,
        Scenario::Scaling2n => scaling2n(&mut p)?,
        Scenario::Carnot2n => carnot2n(&mut p)?,
        Scenario::SteadyTemp => steady(&mut p, false)?,
        Scenario::SteadyChem => steady(&mut p, true)?,
        Scenario::Verify => verify(&mut p, config.seed)?,
    };
    let mut csv = String::new();
    let _ = writeln!(csv, "# qthermo {}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(csv, "# scenario {}", config.scenario);
    if config.scenario == Scenario::Verify {
        let _ = writeln!(csv, "# seed {}", config.seed);
    }
    for (k, v) in &p.resolved {
        let _ = writeln!(csv, "# {k} {v}");
    }
    for (k, v) in &table.notes {
        let _ = writeln!(csv, "# {k} {v}");
    }
    let _ = writeln!(csv, "# violations {}", table.violations.len());
    let _ = writeln!(csv, "{}", table.header);
    for r in &table.rows {
        let _ = writeln!(csv, "{r}");
    }
    Ok(ScenarioOutput {
        csv,
        violations: table.violations,
    })
}

fn cycle_spec(p: &mut Params) -> Result<(CycleSpec, CycleOptions, bool)> {
    let d = CycleSpec::default();
    let system = p.get("system", "two_qubit".to_string())?;
    let system = match system.as_str() {
        "two_qubit" => EngineSystem::TwoQubit,
        "2n" => EngineSystem::TwoN(p.get("n", 2usize)?),
        other => {
            return Err(Error::InvalidParameter(format!(
                "system must be two_qubit or 2n, got `{other}`"
            )))
        }
    };
    if system == EngineSystem::TwoQubit && p.has("n") {
        return Err(Error::InvalidParameter("`n` needs `system 2n`".into()));
    }
    let spec = CycleSpec {
        system,
        omega_h: p.get("omega_h", d.omega_h)?,
        omega_c: p.get("omega_c", d.omega_c)?,
        beta_h: p.get("beta_h", d.beta_h)?,
        beta_c: p.get("beta_c", d.beta_c)?,
        tau_h: p.get("tau_h", d.tau_h)?,
        tau_c: if p.sweeping { d.tau_c } else { p.get("tau_c", d.tau_c)? },
        gamma0: p.get("gamma0", d.gamma0)?,
        hbar: 1.0,
        dt: p.get("dt", d.dt)?,
        stationarity_tol: p.get("stationarity_tol", d.stationarity_tol)?,
    };
    spec.validate()?;
    let opts = CycleOptions {
        max_cycles: p.get("max_cycles", 500usize)?,
        sample_every: if p.sweeping { 0 } else { p.get("sample_every", 1usize)? },
        ..CycleOptions::default()
    };
    let gibbs = match p.get("init", "bright".to_string())?.as_str() {
        "bright" => false,
        "gibbs" => true,
        other => {
            return Err(Error::InvalidParameter(format!(
                "init must be bright or gibbs, got `{other}`"
            )))
        }
    };
    Ok((spec, opts, gibbs))
}

fn initial(spec: &CycleSpec, gibbs: bool) -> Result<crate::lindblad::DensityMatrix> {
    if gibbs {
        spec.cold_gibbs()
    } else {
        spec.initial_state()
    }
}

fn check_cycle(t: &mut Table, label: &str, r: &CycleRecord, bound: f64, bound_name: &str) {
    let scale = r.q_h.abs().max(1.0);
    t.require(r.converged, || format!("{label}: stationary_cycle not reached"));
    t.require(r.first_law_residual() <= 1e-9 * scale, || {
        format!("{label}: first_law residual {}", r.first_law_residual())
    });
    t.require(r.energy_residual <= 1e-9 * scale, || {
        format!("{label}: energy_balance residual {}", r.energy_residual)
    });
    t.require(r.sigma >= -1e-9, || format!("{label}: second_law sigma = {}", r.sigma));
    t.require(r.integrated_bound_holds(bound), || {
        format!(
            "{label}: integrated_bound Q_H + Q_C = {} exceeds sqrt(tau {bound_name} sigma/2)",
            r.q_h + r.q_c
        )
    });
    let valid = r.w > 0.0 && r.eta > 0.0 && r.eta < r.eta_car;
    t.require(!valid || r.p <= bound + 1e-9 * bound.max(1.0), || {
        format!("{label}: performance_bound P = {} exceeds {bound_name} = {bound}", r.p)
    });
}

fn fig2(p: &mut Params) -> Result<Table> {
    let (spec, opts, gibbs) = cycle_spec(p)?;
    let run = run_cycle_with(&spec, &initial(&spec, gibbs)?, &opts)?;
    let mut t = Table::new(ThermoSample::CSV_HEADER);
    check_cycle(&mut t, "fig2", &run.record, run.record.abar(), "Abar_cl + Abar_qm");
    let mut excess = f64::NEG_INFINITY;
    for s in &run.hot_samples {
        excess = excess.max(s.ratio - 0.5 * s.a_cl);
        let ts = s.t;
        let flags = s.flags;
        t.require(!flags.violation(), || format!("fig2: sample t = {ts} flagged {flags}"));
        t.rows.push(s.csv_row());
    }
    t.note("cycles", run.cycles);
    t.note("max_ratio_minus_classical_bound", excess);
    Ok(t)
}

fn fig3(p: &mut Params) -> Result<Table> {
    p.sweeping = true;
    let (spec, opts, gibbs) = cycle_spec(p)?;
    let lo: f64 = p.get("tau_c_min", 0.2)?;
    let hi: f64 = p.get("tau_c_max", 3.0)?;
    let step: f64 = p.get("tau_c_step", 0.1)?;
    if !(step > 0.0 && lo > 0.0 && hi >= lo) {
        return Err(Error::InvalidParameter(
            "need 0 < tau_c_min <= tau_c_max and tau_c_step > 0".into(),
        ));
    }
    let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
    // rounded so grid points print without accumulated float noise
    let values: Vec<f64> = (0..count)
        .map(|k| ((lo + k as f64 * step) * 1e12).round() / 1e12)
        .collect();
    let rows = crate::engine::par_map(&values, |&tc| -> Result<(CycleRecord, CycleRecord)> {
        let s = spec.with_param(SweepParam::TauC, tc)?;
        let rho0 = initial(&s, gibbs)?;
        let q = run_cycle_with(&s, &rho0, &opts)?;
        let cl = run_cycle_with(&s, &rho0, &CycleOptions { dephase: true, ..opts })?;
        Ok((q.record, cl.record))
    });
    const HEADER: &str =
        "cycle_index,W,Q_H,Q_C,tau,eta,eta_car,P,Abar_cl,Abar_qm,converged,tau_c,P_cl,Abar_cl_dephased";
    let mut t = Table::new(HEADER);
    let mut above = 0;
    for (tc, row) in values.iter().zip(rows) {
        let (q, cl) = row?;
        check_cycle(&mut t, &format!("fig3 tau_c = {tc}"), &q, q.abar(), "Abar_cl + Abar_qm");
        check_cycle(
            &mut t,
            &format!("fig3 dephased tau_c = {tc}"),
            &cl,
            cl.abar_cl,
            "Abar_cl",
        );
        if q.p > q.abar_cl {
            above += 1;
        }
        t.rows
            .push(format!("{},{tc:?},{:?},{:?}", q.csv_row(), cl.p, cl.abar_cl));
    }
    t.note("points_with_P_above_Abar_cl", above);
    Ok(t)
}

fn scaling2n(p: &mut Params) -> Result<Table> {
    let ns = p.list("n", &[1usize, 2, 4, 8, 16, 32, 64, 128])?;
    let omega0 = p.get("omega0", 1.0)?;
    let gamma_down = p.get("gamma_down", 1.0)?;
    let beta = p.get("beta", 1.0)?;
    let scale = p.get("a_n_scale", 1.0)?;
    const HEADER: &str = "N,a_N,p_e,J,J_analytic,sigma_dot,sigma_dot_analytic,J_sd,A_cl,A_qm,ratio,ratio_sd";
    let rows = crate::engine::par_map(&ns, |&n| -> Result<String> {
        let model_spec = TwoNModelSpec::new(n, omega0, gamma_down, beta);
        let (model, basis) = build_2n_model(&model_spec)?;
        let plus = PlusStateSpec::for_model(&model_spec, scale / n as f64);
        let rho = build_plus_state(&plus)?;
        let an = analytic_2n_observables(&model_spec, &plus);
        let j = heat_current_channels(&model, rho.matrix(), None)?;
        let s = entropy_production_rate(&model, rho.matrix())?.value;
        let chk = tradeoff_check(&model, rho.matrix(), &basis)?;
        let rel = |x: f64, y: f64| (x - y).abs() / y.abs().max(f64::MIN_POSITIVE);
        let (ej, es) = (rel(j, an.j), rel(s, an.sigma_dot));
        if ej >= 1e-8 || es >= 1e-8 || !chk.all_ok() {
            return Err(Error::InvalidState(format!(
                "analytic_agreement N = {n}: J rel err {ej:e}, sigma rel err {es:e}, inequalities ok = {}",
                chk.all_ok()
            )));
        }
        Ok(format!(
            "{n},{:?},{:?},{j:?},{:?},{s:?},{:?},{:?},{:?},{:?},{:?},{:?}",
            plus.a_n, an.p_e, an.j, an.sigma_dot, chk.j_sd, chk.a_cl, chk.a_qm, chk.ratio_rho, chk.ratio_sd
        ))
    });
    let mut t = Table::new(HEADER);
    for r in rows {
        match r {
            Ok(row) => t.rows.push(row),
            Err(Error::InvalidState(msg)) => t.violations.push(format!("scaling2n: {msg}")),
            Err(e) => return Err(e),
        }
    }
    Ok(t)
}

fn carnot2n(p: &mut Params) -> Result<Table> {
    let ns = p.list("n", &[8usize, 16, 32, 64, 128, 256])?;
    let base = CarnotCycleSpec::new(2);
    let scale = p.get("a_n_scale", 1.0)?;
    let gap = match p.get("gap", "linear".to_string())?.as_str() {
        "linear" => GapRelation::Linear,
        "log" => GapRelation::Logarithmic,
        other => {
            return Err(Error::InvalidParameter(format!(
                "gap must be linear or log, got `{other}`"
            )))
        }
    };
    let template = CarnotCycleSpec {
        omega_c: p.get("omega_c", base.omega_c)?,
        beta_h: p.get("beta_h", base.beta_h)?,
        beta_c: p.get("beta_c", base.beta_c)?,
        gamma_down_h: p.get("gamma_down_h", base.gamma_down_h)?,
        gamma_down_c: p.get("gamma_down_c", base.gamma_down_c)?,
        anchor: p.get("anchor", base.anchor)?,
        steps_per_contact: p.get("steps", base.steps_per_contact)?,
        gap_relation: gap,
        a_n: scale,
        n: 1,
        ..base
    };
    let values: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
    let mut t = Table::new(CarnotRecord::CSV_HEADER);
    for row in sweep_carnot(&template, SweepParam::N, &values) {
        let r = row.result?;
        let n = r.n;
        let rel = ((r.eta - r.eta_analytic) / r.eta_analytic).abs();
        t.require(rel < 1e-6, || {
            format!("carnot2n N = {n}: efficiency_match rel err {rel:e}")
        });
        t.require(r.relaxation_ratio < 0.5, || {
            format!(
                "carnot2n N = {n}: relaxation_ratio {} not below 0.5",
                r.relaxation_ratio
            )
        });
        t.require(r.entropy_production >= -1e-9, || {
            format!("carnot2n N = {n}: second_law sigma = {}", r.entropy_production)
        });
        t.require(r.stats.positivity_ok, || format!("carnot2n N = {n}: positivity"));
        t.rows.push(r.csv_row());
    }
    Ok(t)
}

fn steady(p: &mut Params, chemical: bool) -> Result<Table> {
    let ns = p.list("n", &[2usize, 8, 32, 64])?;
    let omega = p.get("omega", 1.0)?;
    let gamma = p.get("gamma_down", 1.0)?;
    let variant = if chemical {
        TwoBathVariant::Chemical {
            beta: p.get("beta", 1.0)?,
            mu_mid: p.get("mu_mid", 0.0)?,
        }
    } else {
        TwoBathVariant::Temperature {
            beta_mid: p.get("beta_mid", 1.0)?,
        }
    };
    const HEADER: &str = "N,residual,J_hot,J_cold,J_sum,J_hot_analytic,sigma_dot,sigma_dot_analytic,A_cl,A_qm,rho_ee";
    let mut t = Table::new(HEADER);
    for &n in &ns {
        let spec = TwoBathTwoNSpec::new(n, omega, gamma, variant);
        let sys = build_two_bath_2n(&spec)?;
        let rho = sys.steady_state.matrix();
        let residual = max_abs(&apply_generator(&sys.model, rho)?);
        let jh = heat_current_channels(&sys.model, rho, Some(&sys.hot.label))?;
        let jc = heat_current_channels(&sys.model, rho, Some(&sys.cold.label))?;
        let s = entropy_production_rate(&sys.model, rho)?.value;
        let s_an = sys.analytic_entropy_production(&spec);
        let j_an = sys.analytic_hot_current(&spec);
        let chk = tradeoff_check(&sys.model, rho, &sys.basis)?;
        t.require(residual < 1e-10, || {
            format!("steady N = {n}: stationarity residual {residual:e}")
        });
        t.require((jh + jc).abs() < 1e-10, || {
            format!("steady N = {n}: current_balance J_hot + J_cold = {:e}", jh + jc)
        });
        t.require((s - s_an).abs() <= 1e-9 * s_an.abs().max(1.0), || {
            format!("steady N = {n}: entropy_production {s} vs closed form {s_an}")
        });
        t.require(chk.all_ok(), || format!("steady N = {n}: tradeoff inequalities"));
        t.rows.push(format!(
            "{n},{residual:?},{jh:?},{jc:?},{:?},{j_an:?},{s:?},{s_an:?},{:?},{:?},{:?}",
            jh + jc,
            chk.a_cl,
            chk.a_qm,
            sys.rho_ee
        ));
    }
    Ok(t)
}

fn verify(p: &mut Params, seed: u64) -> Result<Table> {
    let max_n = p.get("max_n", 8usize)?;
    let mut t = Table::new("check,checked,violated");
    let (cases, violations) = if p.has("case") {
        let case = p.get("case", 0u64)?;
        (1, random_case_checks(seed, case, max_n)?)
    } else {
        let cases = p.get("cases", 500u64)?;
        let s = run_verify(seed, cases, max_n)?;
        t.note("two_n_cases", s.two_n_cases);
        t.note("two_qubit_cases", s.two_qubit_cases);
        (cases, s.violations)
    };
    for check in CHECKS {
        let bad = violations.iter().filter(|v| v.check == check).count();
        t.rows.push(format!("{check},{cases},{bad}"));
    }
    t.violations = violations.iter().map(|v| v.to_string()).collect();
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(text: &str) -> ScenarioConfig {
        ScenarioConfig::from_text(text).unwrap()
    }

    #[test]
    fn config_text_round() {
        let c = config("# fig\nscenario fig3\nout a.csv\ntau_c_step 0.5\nseed 3\n");
        assert_eq!(c.scenario, Scenario::Fig3);
        assert_eq!(c.seed, 3);
        assert_eq!(c.overrides["tau_c_step"], "0.5");
        assert!(ScenarioConfig::from_text("tau_c 1").is_err());
        assert!(matches!(
            ScenarioConfig::from_text("scenario fig9"),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn unknown_or_bad_override_rejected() {
        let mut c = ScenarioConfig::new(Scenario::Verify);
        c.overrides.insert("tau_c".into(), "1".into());
        assert!(run_scenario(&c).is_err());
        let mut c = ScenarioConfig::new(Scenario::Verify);
        c.overrides.insert("cases".into(), "many".into());
        assert!(run_scenario(&c).is_err());
    }

    #[test]
    fn verify_zero_cases() {
        let mut c = ScenarioConfig::new(Scenario::Verify);
        c.seed = 7;
        c.overrides.insert("cases".into(), "0".into());
        let out = run_scenario(&c).unwrap();
        assert!(out.passed());
        assert!(out.csv.contains("ineq3_classical_bound,0,0"));
    }

    #[test]
    fn scaling_single_n_is_classical() {
        let mut c = ScenarioConfig::new(Scenario::Scaling2n);
        c.overrides.insert("n".into(), "1".into());
        let out = run_scenario(&c).unwrap();
        assert!(out.passed(), "{:?}", out.violations);
        let row = out.csv.lines().last().unwrap();
        let cols: Vec<f64> = row.split(',').map(|x| x.parse().unwrap()).collect();
        // J_sd equals J and A_qm vanishes without degeneracy
        assert!((cols[7] - cols[3]).abs() < 1e-15);
        assert_eq!(cols[9], 0.0);
    }

    #[test]
    fn steady_runs_are_deterministic() {
        let mut c = ScenarioConfig::new(Scenario::SteadyChem);
        c.overrides.insert("n".into(), "2,4".into());
        let a = run_scenario(&c).unwrap();
        let b = run_scenario(&c).unwrap();
        assert!(a.passed(), "{:?}", a.violations);
        assert_eq!(a.csv, b.csv);
        assert!(a.csv.contains("# n 2,4"));
    }
}
