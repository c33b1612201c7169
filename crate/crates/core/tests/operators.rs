mod common;

use cgwave_core::operators::{BracketConvention, ConjugateKind, OperatorOptions};
use cgwave_core::trig::coth;
use cgwave_core::verify::check_function;
use cgwave_core::{Discretization, Error, TrigSeries, WaveOperators};
use common::{lambdas, ops, params, test_functions};

#[test]
fn flat_surface_has_unit_wkh() {
    let o = ops(params(0.5, 0.074), 16);
    let wkh = o.wkh(&TrigSeries::zero(16)).unwrap();
    assert!(wkh.values().iter().all(|&v| v == 1.0));
}

#[test]
fn wkh_of_single_mode() {
    let p = params(0.5, 0.074);
    let o = ops(p, 16);
    let eps = 0.1;
    let wkh = o.wkh(&TrigSeries::cosine_mode(16, 1, eps)).unwrap();
    let c = coth(p.kh());
    // nodes 0, 16, 32 of 64 are t = 0, π/2, π
    let expected = [(0, (1.0 + eps * c).powi(2)), (16, eps * eps + 1.0), (32, (1.0 - eps * c).powi(2))];
    for (j, v) in expected {
        assert!((wkh.values()[j] - v).abs() < 1e-14, "node {j}: {} vs {v}", wkh.values()[j]);
    }
}

#[test]
fn bracket_is_constant_without_vorticity_or_wave() {
    let o = ops(params(0.7, 0.074), 16);
    let b = o.bracket(1.3, &TrigSeries::zero(16)).unwrap();
    assert!(b.values().iter().all(|&v| v == 1.3));
    let o = ops(params(0.0, 0.074), 16);
    let w = test_functions(1, 1, 16).remove(0);
    let b = o.bracket(-0.4, &w).unwrap();
    assert!(b.values().iter().all(|&v| v == -0.4));
}

#[test]
fn bracket_of_single_mode() {
    let p = params(1.0, 0.074);
    let o = ops(p, 8);
    let (eps, lambda) = (1e-3, 0.8);
    let b = o.bracket(lambda, &TrigSeries::cosine_mode(8, 1, eps)).unwrap();
    let (c1, c2) = (coth(p.kh()), coth(2.0 * p.kh()));
    for (j, t) in o.collocation().nodes().into_iter().enumerate() {
        let ct = t.cos();
        let inner = eps * eps / (4.0 * p.kh()) + 0.5 * eps * eps * c2 * (2.0 * t).cos() - eps * ct - eps * eps * c1 * ct * ct;
        let expected = lambda + p.gamma / p.k * inner;
        assert!((b.values()[j] - expected).abs() < 1e-15, "node {j}");
    }
}

#[test]
fn laminar_head() {
    let o = ops(params(0.5, 0.074), 16);
    let zero = TrigSeries::zero(16);
    assert!((o.q_value(1.7, &zero).unwrap() - 1.7 * 1.7).abs() <= 8.0 * f64::EPSILON * 1.7 * 1.7);
    assert_eq!(o.q_value(0.0, &zero).unwrap(), 0.0);
}

#[test]
fn laminar_flow_is_a_solution_everywhere() {
    let o = ops(params(0.5, 0.074), 16);
    let zero = TrigSeries::zero(16);
    for lambda in lambdas(3, 100, -10.0, 10.0) {
        let k = o.k_eval(lambda, &zero).unwrap();
        assert!(k.series.max_coeff() <= 1e-14);
        assert!(o.residual_norm(lambda, &zero).unwrap() <= 1e-14);
    }
}

#[test]
fn quotient_identities_on_random_profiles() {
    let p = params(0.8, 0.074);
    let o = ops(p, 32);
    let ls = lambdas(11, 50, -3.0, 3.0);
    for (w, lambda) in test_functions(7, 50, 32).iter().zip(ls) {
        let c = check_function(&o, lambda, w).unwrap();
        assert!(c.second_derivative <= 1e-9, "{c:?}");
        assert!(c.conjugate <= 1e-9, "{c:?}");
        assert!(c.hat_mean <= 1e-10, "{c:?}");
        assert!(c.e_mean <= 1e-10, "{c:?}");
        assert!(c.bed_mean > 0.0);
    }
}

#[test]
fn hat_of_flat_surface_vanishes() {
    let o = ops(params(0.8, 0.074), 16);
    let hat = o.hat_w(&TrigSeries::zero(16)).unwrap();
    assert_eq!(hat.series.max_coeff(), 0.0);
}

#[test]
fn k_derivative_at_laminar_flow() {
    let p = params(0.6, 0.074);
    let o = ops(p, 16);
    let step = 1e-5;
    let lambda = 1.1;
    for n in 1..=4 {
        let plus = o.k_eval(lambda, &TrigSeries::cosine_mode(16, n, step)).unwrap().series;
        let minus = o.k_eval(lambda, &TrigSeries::cosine_mode(16, n, -step)).unwrap().series;
        let d = plus.add_scaled(&minus, -1.0).scaled(0.5 / step);
        let nf = n as f64;
        let expected = (p.g - p.gamma * lambda) / (p.sigma * p.k * p.k)
            - lambda * lambda * nf * coth(nf * p.kh()) / (p.sigma * p.k);
        assert!((d.a(n) - expected).abs() <= 1e-7 * expected.abs().max(1.0), "n={n}: {} vs {expected}", d.a(n));
        for j in (1..=16).filter(|&j| j != n) {
            assert!(d.a(j).abs() <= 1e-7 * expected.abs().max(1.0));
        }
    }
}

#[test]
fn f_gains_two_derivatives() {
    let o = ops(params(0.3, 0.074), 16);
    let w = TrigSeries::cosine_mode(16, 1, 0.02).add_scaled(&TrigSeries::cosine_mode(16, 3, 0.004), 1.0);
    let k = o.k_eval(0.9, &w).unwrap().series;
    let f = o.f_eval(0.9, &w).unwrap();
    for n in 1..=16 {
        let bound = k.a(n).abs() / (n * n) as f64;
        assert!(f.a(n).abs() <= bound);
        assert!((f.a(n).abs() - bound).abs() <= 1e-15 * bound.max(1e-300));
    }
}

#[test]
fn divided_form_on_laminar_flow_and_under_wrong_head() {
    let p = params(0.5, 0.074);
    let o = ops(p, 16);
    let zero = TrigSeries::zero(16);
    let lambda = 2.0;
    let m = p.h * (lambda + p.h * p.gamma / 2.0);
    let r = o.residual_eqn2a(m, lambda * lambda, &zero).unwrap();
    assert!(r.sup_norm() <= 1e-14);
    let r = o.residual_eqn2a(m, lambda * lambda + 1e-3, &zero).unwrap();
    assert!(r.sup_norm() >= 1e-4);
}

#[test]
fn stagnation_floor_refuses_evaluation() {
    let p = params(0.5, 0.074);
    let o = ops(p, 16);
    // Wkh(π) = 0 for amplitude tanh(kh)
    let w = TrigSeries::cosine_mode(16, 1, p.kh().tanh());
    assert!(matches!(o.q_value(1.0, &w), Err(Error::StagnantConfiguration { .. })));
    assert!(matches!(o.k_eval(1.0, &w), Err(Error::StagnantConfiguration { .. })));
}

#[test]
fn truncated_tail_overflow_is_reported() {
    let p = params(0.5, 0.074);
    let o = ops(p, 8);
    let w = TrigSeries::cosine_mode(8, 1, 0.95 * p.kh().tanh());
    assert!(matches!(o.k_eval(2.0, &w), Err(Error::AliasOverflow { .. })));
}

#[test]
fn mutations_are_caught_by_the_identities() {
    let p = params(1.0, 0.074);
    let disc = Discretization::new(32).unwrap();
    let w = test_functions(5, 1, 32).remove(0);
    let wrong_bracket = WaveOperators::with_options(
        p,
        disc,
        OperatorOptions { bracket: BracketConvention::PerWavenumber, ..Default::default() },
    )
    .unwrap();
    let c = check_function(&wrong_bracket, 1.2, &w).unwrap();
    assert!(c.e_mean > 1e-6, "{c:?}");
    let wrong_conjugate = WaveOperators::with_options(
        p,
        disc,
        OperatorOptions { conjugate: ConjugateKind::Neumann, ..Default::default() },
    )
    .unwrap();
    let c = check_function(&wrong_conjugate, 1.2, &w).unwrap();
    assert!(c.second_derivative > 1e-6 || c.conjugate > 1e-6, "{c:?}");
}
