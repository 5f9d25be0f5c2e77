use garnier_core::charts::*;
use garnier_core::exactalg::{check::PointSampler, expr, RationalExpr, Scalar, Var};
use garnier_core::model::{build_system, pi_swap, HamiltonianSystem, ParameterSet};

fn system() -> HamiltonianSystem {
    build_system(&ParameterSet::with_relation(0)).unwrap()
}

#[test]
fn all_charts_holomorphic() {
    let sys = system();
    for c in ChartName::ALL {
        let rep = verify_holomorphy(&sys, &chart_inverse(c));
        assert!(rep.passed(), "{c}: {:?}", rep.witness());
        for h in rep.chart_hamiltonians.iter() {
            let h = h.as_ref().unwrap();
            assert!(h.is_polynomial_in(&chart_inverse(c).vars));
        }
    }
}

#[test]
fn verdict_stable_under_choice_of_eliminated_parameter() {
    for k in [1, 2, 5] {
        let sys = build_system(&ParameterSet::with_relation(k)).unwrap();
        for c in [ChartName::R0, ChartName::R2] {
            assert!(verify_holomorphy(&sys, &chart_inverse(c)).passed(), "eliminating a{k}, chart {c}");
        }
    }
}

#[test]
fn relation_needed_only_where_the_chart_sees_a0() {
    let free = build_system(&ParameterSet::symbolic()).unwrap();
    let r0 = verify_holomorphy(&free, &chart_inverse(ChartName::R0));
    assert!(matches!(r0.h1, Polynomiality::NotDivisible(_)));
    // r2 only involves a2, which the system carries explicitly.
    assert!(verify_holomorphy(&free, &chart_inverse(ChartName::R2)).passed());
}

#[test]
fn perturbation_is_detected() {
    let sys = system();
    let bad = HamiltonianSystem::from_parts(&sys.h1 + &expr("p1^3"), sys.h2.clone(), sys.params.clone());
    let rep = verify_holomorphy(&bad, &chart_inverse(ChartName::R0));
    assert!(matches!(rep.h1, Polynomiality::NotDivisible(_)));
    assert!(rep.h2.holds());
    assert_eq!(rep.symplectic, None);
    assert!(rep.witness().unwrap().starts_with("H1"));
}

#[test]
fn r0_needs_its_correction() {
    let sys = system();
    let r0 = chart_inverse(ChartName::R0);
    assert!(verify_symplectic_identity(&sys, &r0));
    assert!(!verify_symplectic_identity(&sys, &r0.without_correction()));
}

#[test]
fn identity_chart_is_trivial() {
    let sys = system();
    let id = chart_inverse(ChartName::Identity);
    let (h1, h2) = pushforward_hamiltonians(&sys, &id).unwrap();
    assert!(h1.equals(&sys.h1) && h2.equals(&sys.h2));
    assert!(verify_symplectic_identity(&sys, &id));
}

#[test]
fn r0_inverse_of_q1() {
    let r0 = chart_inverse(ChartName::R0);
    assert!(r0.inverse_of(Var::Q1).unwrap().equals(&expr("t + y0*(a0 - z0*w0 - x0*y0)")));
    // Back-substitution oracle at random points: x0 evaluated at the pre-image.
    let mut sampler = PointSampler::new(11);
    let x0 = r0.forward_of(Var::chart(0, 0)).unwrap();
    for _ in 0..20 {
        let mut pt = sampler.point(&[Var::chart(0, 0), Var::chart(0, 1), Var::chart(0, 2), Var::chart(0, 3)]);
        pt.extend(sampler.point(&[Var::T, Var::S, Var::A0]));
        let pre: Vec<(Var, Scalar)> =
            r0.inverse.iter().map(|(v, e)| (*v, e.eval_at(&pt).unwrap())).collect();
        let mut full = pre.clone();
        full.extend(pt[4..].iter().cloned());
        assert_eq!(x0.eval_at(&full).unwrap(), pt[0].1);
    }
}

#[test]
fn r5_mirrors_r2() {
    let r2 = chart_inverse(ChartName::R2);
    let r5 = chart_inverse(ChartName::R5);
    let rename: Vec<(Var, Var)> = Var::chart_vars(2)
        .into_iter()
        .zip([Var::chart(5, 2), Var::chart(5, 3), Var::chart(5, 0), Var::chart(5, 1)])
        .collect();
    let mirror = |e: &RationalExpr| pi_swap(e).rename(&rename);
    for k in 0..4 {
        let mirrored = mirror(&r2.forward[k].1);
        assert!(mirrored.equals(&r5.forward[[2, 3, 0, 1][k]].1), "component {k}");
    }
}

#[test]
fn r0_pushforward_numeric_cross_check() {
    let sys = system();
    let r0 = chart_inverse(ChartName::R0).specialize(&sys.params);
    let (h01, _) = pushforward_hamiltonians(&sys, &r0).unwrap();
    let mut sampler = PointSampler::new(3);
    let mut vars = Var::STATE.to_vec();
    vars.extend([Var::T, Var::S, Var::ETA, Var::A1, Var::A2, Var::A3, Var::A4, Var::A5]);
    for _ in 0..10 {
        let pt = sampler.point(&vars);
        let chart_pt: Vec<(Var, Scalar)> = r0
            .forward
            .iter()
            .map(|(v, e)| (*v, e.eval_at(&pt).unwrap()))
            .chain(pt[4..].iter().cloned())
            .collect();
        let lhs = h01.eval_at(&chart_pt).unwrap();
        let rhs = (&sys.h1 - &expr("p1")).eval_at(&pt).unwrap();
        assert_eq!(lhs, rhs);
    }
}

#[test]
fn r2_with_a2_zero_has_no_extra_pole() {
    let params = ParameterSet::with_relation(0);
    let mut p = params.clone();
    p.alpha[2] = RationalExpr::zero();
    p.alpha[0] = params.apply(&garnier_core::model::relation_solution(0))
        .substitute(&[(Var::A2, RationalExpr::zero())])
        .unwrap();
    let sys = build_system(&p).unwrap();
    let rep = verify_holomorphy(&sys, &chart_inverse(ChartName::R2));
    assert!(rep.passed());
}
