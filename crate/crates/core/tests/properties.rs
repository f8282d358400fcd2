//! Invariants of the generator, the dephasing maps and the thermodynamic
//! quantities over randomly drawn models and states.

use num_complex::Complex64;
use proptest::prelude::*;
use qthermo::coherence::{
    block_diagonalize_matrix, coherence_report, l1_coherence, strict_diagonalize_matrix, x_operator,
};
use qthermo::lindblad::{apply_generator, evolve, text, validate_model, DensityMatrix, EvolutionConfig, LindbladModel};
use qthermo::matrix::{c, commutator, hermiticity_residual, max_abs, min_eigenvalue, CMatrix};
use qthermo::models::{
    build_2n_model, build_plus_state, build_two_bath_2n, build_two_qubit_model, gibbs_state, PlusStateSpec,
    TwoBathTwoNSpec, TwoBathVariant, TwoNModelSpec, TwoQubitSpec,
};
use qthermo::sampling::{case_rng, random_block_diagonal, random_model, random_state, RandomModel};
use qthermo::thermo::{
    entropy_production_rate, heat_current_channels, pauli_entropy_production, tradeoff_check, TransitionRateTable,
};

/// A random single-bath model (2N up to N = 6, or the two-qubit model) and a seed for states.
fn model_and_seed() -> impl Strategy<Value = (RandomModel, u64)> {
    (any::<u64>(), any::<u64>()).prop_map(|(ms, ss)| (random_model(&mut case_rng(ms, 0), 6).unwrap(), ss))
}

fn state(m: &RandomModel, seed: u64, k: u64) -> DensityMatrix {
    random_state(&mut case_rng(seed, k), m.model.dim())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn generator_preserves_trace_and_hermiticity((m, s) in model_and_seed()) {
        let rho = state(&m, s, 0);
        let g = apply_generator(&m.model, rho.matrix()).unwrap();
        prop_assert!(g.trace().norm() < 1e-12 * m.model.dim() as f64);
        prop_assert!(hermiticity_residual(&g) < 1e-12);
    }

    #[test]
    fn generator_is_linear((m, s) in model_and_seed(), alpha in 0.0..1.0f64) {
        let (r1, r2) = (state(&m, s, 0), state(&m, s, 1));
        let mix = r1.matrix() * c(alpha) + r2.matrix() * c(1.0 - alpha);
        let lhs = apply_generator(&m.model, &mix).unwrap();
        let rhs = apply_generator(&m.model, r1.matrix()).unwrap() * c(alpha)
            + apply_generator(&m.model, r2.matrix()).unwrap() * c(1.0 - alpha);
        prop_assert!(max_abs(&(lhs - rhs)) < 1e-12);
    }

    #[test]
    fn constructors_validate((m, _s) in model_and_seed()) {
        let report = validate_model(&m.model);
        prop_assert!(report.all_passed(), "{}", report);
    }

    #[test]
    fn dephasing_maps_nest_and_preserve((m, s) in model_and_seed()) {
        let rho = state(&m, s, 0);
        let b = &m.basis;
        let bd = block_diagonalize_matrix(rho.matrix(), b).unwrap();
        let sd = strict_diagonalize_matrix(rho.matrix(), b).unwrap();
        prop_assert_eq!(&block_diagonalize_matrix(&bd, b).unwrap(), &bd);
        prop_assert_eq!(&strict_diagonalize_matrix(&sd, b).unwrap(), &sd);
        prop_assert_eq!(&strict_diagonalize_matrix(&bd, b).unwrap(), &sd);
        for m2 in [&bd, &sd] {
            prop_assert!((m2.trace() - rho.matrix().trace()).norm() < 1e-12);
            prop_assert!(min_eigenvalue(m2) >= -1e-10);
        }
        prop_assert_eq!(l1_coherence(&sd, b).unwrap(), 0.0);
        prop_assert!(l1_coherence(&bd, b).unwrap() <= l1_coherence(rho.matrix(), b).unwrap() + 1e-15);
    }

    #[test]
    fn coherence_terms_nonnegative_and_x_commutes((m, s) in model_and_seed()) {
        let rho = state(&m, s, 0);
        let r = coherence_report(&m.model, rho.matrix(), &m.basis).unwrap();
        prop_assert!(r.a_cl >= 0.0 && r.a_qm >= 0.0 && r.c_x >= 0.0);
        let x = x_operator(&m.model);
        prop_assert!(max_abs(&commutator(&x, m.model.hamiltonian())) < 1e-9);
    }

    #[test]
    fn thermodynamic_inequalities((m, s) in model_and_seed()) {
        let rho = state(&m, s, 0);
        let b = &m.basis;
        let t = tradeoff_check(&m.model, rho.matrix(), b).unwrap();
        prop_assert!(t.sigma_rho >= -1e-9 && t.sigma_bd >= -1e-9 && t.sigma_sd >= -1e-9);
        prop_assert!((t.j_rho - t.j_bd).abs() <= 1e-10 * t.j_rho.abs().max(1.0));
        prop_assert!(t.sigma_bd <= t.sigma_rho + 1e-9 * t.sigma_rho.abs().max(1.0));
        prop_assert!(t.ineq2_ok && t.ineq3_ok && t.ineq4_ok, "{:?}", t);
    }

    #[test]
    fn pauli_form_matches_definition((m, s) in model_and_seed()) {
        let b = &m.basis;
        let bd = random_block_diagonal(&mut case_rng(s, 0), b).unwrap();
        let def = entropy_production_rate(&m.model, bd.matrix()).unwrap().value;
        let pauli = pauli_entropy_production(&m.model, bd.matrix(), b).unwrap().value;
        prop_assert!((def - pauli).abs() <= 1e-8 * def.abs().max(1.0), "{} vs {}", def, pauli);
        let table = TransitionRateTable::new(&m.model, bd.matrix(), b).unwrap();
        prop_assert!(table.detailed_balance_residual(&m.model) < 1e-9);
    }

    #[test]
    fn gibbs_is_fixed_point(omega in 0.2..3.0f64, beta in 0.1..4.0f64, g in 0.1..2.0f64, n in 1usize..6) {
        let spec = TwoNModelSpec::new(n, omega, g, beta);
        let (model, _) = build_2n_model(&spec).unwrap();
        let rho = gibbs_state(model.hamiltonian(), beta).unwrap();
        prop_assert!(max_abs(&apply_generator(&model, rho.matrix()).unwrap()) < 1e-10);
        let q = TwoQubitSpec::new(omega, beta, g);
        let (model, _) = build_two_qubit_model(&q).unwrap();
        let rho = gibbs_state(model.hamiltonian(), beta).unwrap();
        prop_assert!(max_abs(&apply_generator(&model, rho.matrix()).unwrap()) < 1e-10);
    }

    #[test]
    fn model_text_round_trips((m, _s) in model_and_seed()) {
        let txt = text::to_text(&m.model);
        let back = text::from_text(&txt).unwrap();
        prop_assert_eq!(text::to_text(&back), txt);
        prop_assert_eq!(back.hamiltonian(), m.model.hamiltonian());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn evolution_stays_physical((m, s) in model_and_seed()) {
        let rho = state(&m, s, 0);
        let cfg = EvolutionConfig::new(2e-3, 0.2);
        let traj = evolve(&m.model, &rho, &cfg).unwrap();
        prop_assert!(traj.max_trace_drift < 1e-8);
        for st in &traj.states {
            prop_assert!(min_eigenvalue(st.matrix()) >= -1e-8);
        }
    }

    #[test]
    fn plus_manifold_is_closed(n in 2usize..6, a in 0.01..1.0f64, beta in 0.2..2.0f64) {
        let spec = TwoNModelSpec::new(n, 1.0, 1.0, beta);
        let (model, _) = build_2n_model(&spec).unwrap();
        let rho = build_plus_state(&PlusStateSpec::for_model(&spec, a)).unwrap();
        let traj = evolve(&model, &rho, &EvolutionConfig::new(1e-3, 0.3)).unwrap();
        let last = traj.last().unwrap().matrix();
        // every block of a ρ⁺-form state is constant
        let d = 2 * n;
        for i in 0..d {
            for j in 0..d {
                let same_block = (i < n) == (j < n);
                let anchor = if same_block { last[(i / n * n, j / n * n)] } else { c(0.0) };
                prop_assert!((last[(i, j)] - anchor).norm() < 1e-9);
            }
        }
    }
}

/// Dense reference for `-(i/ħ)[H,ρ] + Σ γ(LρL† - ½{L†L,ρ})`.
fn dense_generator(model: &LindbladModel, rho: &CMatrix) -> CMatrix {
    let h = model.hamiltonian();
    let mut out = (h * rho - rho * h) * Complex64::new(0.0, -1.0 / model.hbar());
    for bath in model.baths() {
        for ch in bath.channels() {
            let l = ch.op();
            let ld = l.adjoint();
            let ldl = &ld * l;
            out += (l * rho * &ld - (&ldl * rho + rho * &ldl) * c(0.5)) * c(ch.rate());
        }
    }
    out
}

fn hermitian_basis(d: usize) -> Vec<CMatrix> {
    let mut basis = Vec::new();
    for i in 0..d {
        for j in i..d {
            let mut e = CMatrix::zeros(d, d);
            if i == j {
                e[(i, i)] = c(1.0);
                basis.push(e);
            } else {
                e[(i, j)] = c(1.0);
                e[(j, i)] = c(1.0);
                basis.push(e.clone());
                e[(i, j)] = Complex64::new(0.0, 1.0);
                e[(j, i)] = Complex64::new(0.0, -1.0);
                basis.push(e);
            }
        }
    }
    basis
}

#[test]
fn two_qubit_generator_matches_dense_reference() {
    let (model, _) = build_two_qubit_model(&TwoQubitSpec::new(1.3, 0.7, 0.9)).unwrap();
    let basis = hermitian_basis(4);
    assert_eq!(basis.len(), 16);
    for r in &basis {
        let g = apply_generator(&model, r).unwrap();
        assert!(max_abs(&(g.clone() - dense_generator(&model, r))) < 1e-12, "basis {r}");
        // the singlet (|01⟩ - |10⟩)/√2 is dark
        let singlet = 0.5 * (g[(1, 1)] + g[(2, 2)] - g[(1, 2)] - g[(2, 1)]);
        assert!(singlet.norm() < 1e-12);
    }
}

#[test]
fn low_rank_2n_generator_matches_dense_reference() {
    for n in [1, 2, 5] {
        let (model, _) = build_2n_model(&TwoNModelSpec::new(n, 0.8, 1.1, 0.6)).unwrap();
        for r in hermitian_basis(2 * n) {
            let g = apply_generator(&model, &r).unwrap();
            assert!(max_abs(&(g - dense_generator(&model, &r))) < 1e-12);
        }
    }
}

#[test]
fn two_bath_steady_states_hold_for_both_biases() {
    for variant in [
        TwoBathVariant::Temperature { beta_mid: 0.8 },
        TwoBathVariant::Chemical { beta: 1.2, mu_mid: 0.3 },
    ] {
        for n in [2, 4, 16, 64] {
            let spec = TwoBathTwoNSpec::new(n, 1.0, 0.7, variant);
            let sys = build_two_bath_2n(&spec).unwrap();
            let rho = sys.steady_state.matrix();
            assert!(max_abs(&apply_generator(&sys.model, rho).unwrap()) < 1e-10);
            let jh = heat_current_channels(&sys.model, rho, Some(&sys.hot.label)).unwrap();
            let jc = heat_current_channels(&sys.model, rho, Some(&sys.cold.label)).unwrap();
            assert!((jh + jc).abs() < 1e-10);
            let s = entropy_production_rate(&sys.model, rho).unwrap().value;
            assert!((s - sys.analytic_entropy_production(&spec)).abs() < 1e-9);
        }
    }
}

#[test]
fn gibbs_fixed_point_for_fixture_models() {
    let models: Vec<LindbladModel> = vec![
        build_2n_model(&TwoNModelSpec::new(3, 1.0, 1.0, 1.0)).unwrap().0,
        build_two_qubit_model(&TwoQubitSpec::new(2.0, 0.6, 1.0)).unwrap().0,
    ];
    for (m, beta) in models.iter().zip([1.0, 0.6]) {
        let rho = gibbs_state(m.hamiltonian(), beta).unwrap();
        assert!(max_abs(&apply_generator(m, rho.matrix()).unwrap()) < 1e-10);
    }
}
