//! Cycle-level laws of the quantum Otto engine and the 2N Carnot cycle.

use qthermo::engine::{
    performance, run_carnot_2n, run_cycle_with, sweep, sweep_carnot, CarnotCycleSpec, CycleOptions, CycleSpec,
    EngineSystem, SweepParam,
};
use qthermo::matrix::max_abs;

fn opts(dephase: bool) -> CycleOptions {
    CycleOptions {
        max_cycles: 200,
        dephase,
        sample_every: 0,
        keep_states: false,
    }
}

fn spec(tau_c: f64) -> CycleSpec {
    CycleSpec {
        tau_c,
        dt: 0.005,
        ..CycleSpec::default()
    }
}

#[test]
fn stationary_cycle_obeys_both_laws() {
    for tau_c in [0.3, 1.0, 2.5] {
        let s = spec(tau_c);
        let run = run_cycle_with(&s, &s.initial_state().unwrap(), &opts(false)).unwrap();
        let r = &run.record;
        assert!(r.converged, "tau_c = {tau_c}");
        assert!(r.first_law_residual() < 1e-12);
        assert!(r.energy_residual < 1e-9, "energy residual {}", r.energy_residual);
        assert!(r.sigma >= -1e-12);
        assert!(r.integrated_bound_holds(r.abar()));
        assert!(run.performance.within(r.abar()));
        assert!(run.stats.positivity_ok);
        assert!(run.stats.max_trace_drift < 1e-10);
        assert!((run.cycle_start.matrix().trace().re - 1.0).abs() < 1e-10);
    }
}

#[test]
fn dephased_cycle_is_bounded_by_classical_term() {
    for tau_c in [0.3, 1.0, 2.5] {
        let s = spec(tau_c);
        let run = run_cycle_with(&s, &s.initial_state().unwrap(), &opts(true)).unwrap();
        assert!(run.performance.within(run.record.abar_cl));
        assert!(run.record.abar_qm.abs() < 1e-12);
    }
}

#[test]
fn coherence_develops_only_without_dephasing() {
    let s = spec(1.0);
    let rho0 = s.cold_gibbs().unwrap();
    let full = run_cycle_with(&s, &rho0, &opts(false)).unwrap();
    let deph = run_cycle_with(&s, &rho0, &opts(true)).unwrap();
    let coh = |m: &qthermo::matrix::CMatrix| m[(1, 2)].norm();
    assert!(coh(full.cycle_start.matrix()) > 1e-4);
    assert!(coh(deph.cycle_start.matrix()) < 1e-14);
    assert!((full.record.w - deph.record.w).abs() > 1e-6);
}

#[test]
fn performance_matches_its_definition() {
    let s = spec(1.0);
    let run = run_cycle_with(&s, &s.initial_state().unwrap(), &opts(false)).unwrap();
    let r = &run.record;
    let want = (r.w / r.tau) * 2.0 * (2.0 - r.eta).powi(2) / (s.beta_c * r.eta * (r.eta_car - r.eta));
    let got = performance(r, s.beta_c);
    assert!(got.flags.valid());
    assert!((got.p - want).abs() <= 1e-12 * want.abs());
    assert_eq!(r.eta_car, 1.0 - s.beta_h / s.beta_c);
}

#[test]
fn generic_two_n_system_runs() {
    let s = CycleSpec {
        system: EngineSystem::TwoN(3),
        ..spec(1.0)
    };
    let run = run_cycle_with(&s, &s.initial_state().unwrap(), &opts(false)).unwrap();
    assert!(run.record.converged);
    assert!(run.record.first_law_residual() < 1e-12);
    assert!(run.record.sigma >= -1e-12);
    assert!(run.record.integrated_bound_holds(run.record.abar()));
}

#[test]
fn carnot_cycle_closes_and_balances() {
    let s = CarnotCycleSpec::new(8);
    let r = run_carnot_2n(&s).unwrap();
    assert!(r.closure < 1e-6, "closure {}", r.closure);
    assert!(((r.eta - r.eta_analytic) / r.eta_analytic).abs() < 1e-6);
    assert!((r.w - (r.q_h - r.q_c)).abs() < 1e-12);
    assert!((r.power - r.w / r.cycle_time).abs() < 1e-12 * r.power.abs().max(1.0));
    assert!(r.eta < r.eta_car);
    assert!(r.entropy_production > 0.0);
    assert!(r.stats.positivity_ok);
}

#[test]
fn sweeps_keep_order_and_accept_empty_input() {
    assert!(sweep(&spec(1.0), SweepParam::TauC, &[], &opts(false)).is_empty());
    assert!(sweep_carnot(&CarnotCycleSpec::new(4), SweepParam::N, &[]).is_empty());
    let values = [0.5, 1.5, 0.8];
    let rows = sweep(&spec(1.0), SweepParam::TauC, &values, &opts(false));
    let got: Vec<f64> = rows.iter().map(|r| r.value).collect();
    assert_eq!(got, values);
    for row in &rows {
        let run = row.result.as_ref().unwrap();
        assert!((run.record.tau - (0.5 + row.value)).abs() < 1e-12);
    }
    assert!(sweep(&spec(1.0), SweepParam::TauC, &[-1.0], &opts(false))[0]
        .result
        .is_err());
}

#[test]
fn cycle_is_insensitive_to_initial_state_within_bright_sector() {
    let s = spec(1.0);
    let a = run_cycle_with(&s, &s.initial_state().unwrap(), &opts(false)).unwrap();
    let hot_start =
        qthermo::models::two_qubit_stationary(&qthermo::models::TwoQubitSpec::new(s.omega_h, s.beta_h, s.gamma0), 0.0)
            .unwrap();
    let b = run_cycle_with(&s, &hot_start, &opts(false)).unwrap();
    assert!(max_abs(&(a.cycle_start.matrix() - b.cycle_start.matrix())) < 1e-8);
    assert!((a.record.w - b.record.w).abs() < 1e-8);
}
