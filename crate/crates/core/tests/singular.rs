use garnier_core::charts::ChartName;
use garnier_core::exactalg::{check::PointSampler, expr, RationalExpr, Scalar, Var};
use garnier_core::model::{build_system, decoupled_twin, vector_field, HamiltonianSystem, ParameterSet};
use garnier_core::singular::*;

// Relation solved for a1, so a0 stays a free symbol in printed entries.
fn system() -> HamiltonianSystem {
    build_system(&ParameterSet::with_relation(1)).unwrap()
}

fn loci(sys: &HamiltonianSystem, name: BoundaryName) -> Vec<SingularLocus> {
    let chart = boundary_chart(name);
    find_accessible_singularities(&to_boundary_chart(sys, &chart), &chart).unwrap()
}

#[test]
fn boundary_charts_are_involutive_and_invert() {
    for name in BoundaryName::ALL {
        let c = boundary_chart(name);
        assert!(c.is_involutive(), "{name}");
        assert!(c.check_round_trip(), "{name}");
    }
}

#[test]
fn dy3_is_chain_rule_on_reciprocal() {
    let sys = system();
    let chart = boundary_chart(BoundaryName::X3);
    let field = to_boundary_chart(&sys, &chart);
    let dp1 = -sys.h1.derivative(Var::Q1);
    let direct = (-(dp1 / expr("p1^2"))).substitute(&chart.inverse).unwrap();
    assert!(field.dt[1].equals(&direct));
}

#[test]
fn boundary_field_poles_lie_on_boundary_or_fixed_times() {
    let sys = system();
    for name in BoundaryName::ALL {
        let chart = boundary_chart(name);
        let field = to_boundary_chart(&sys, &chart);
        for e in field.dt.iter().chain(&field.ds) {
            let den = e.den();
            for v in chart.vars {
                if v != chart.boundary {
                    assert!(!den.contains_var(v), "{name}: pole in {v}: {den}");
                }
            }
        }
    }
}

#[test]
fn boundary_field_matches_direct_evaluation() {
    let sys = system();
    let field = vector_field(&sys);
    let chart = boundary_chart(BoundaryName::X4);
    let pushed = to_boundary_chart(&sys, &chart);
    let mut sampler = PointSampler::new(5);
    let mut vars = vec![Var::Q1, Var::P1, Var::Q2, Var::P2, Var::T, Var::S, Var::ETA];
    vars.extend(Var::alphas());
    let pt = sampler.point(&vars);
    let mut chart_pt: Vec<(Var, Scalar)> = pt[4..].to_vec();
    for (v, f) in &chart.forward {
        chart_pt.push((*v, f.eval_at(&pt).unwrap()));
    }
    // dW4/dt = -(dp2/dt)/p2^2 at the same point.
    let p2 = pt[3].1.clone();
    let dp2 = field.dt[3].eval_at(&pt).unwrap();
    let want = -(&dp2 / &(&p2 * &p2));
    assert_eq!(pushed.dt[3].eval_at(&chart_pt).unwrap(), want);
}

fn assert_four_loci(found: &[SingularLocus], name: BoundaryName) {
    let names: Vec<_> = found.iter().map(|l| l.name).collect();
    assert_eq!(names, LocusName::ALL.map(Some).to_vec(), "{name}: {found:?}");
    for l in found {
        assert_eq!(l.free.len(), 1, "{l}");
    }
}

#[test]
fn four_loci_on_x3() {
    assert_four_loci(&loci(&system(), BoundaryName::X3), BoundaryName::X3);
}

#[test]
fn four_loci_on_x4() {
    assert_four_loci(&loci(&system(), BoundaryName::X4), BoundaryName::X4);
}

#[test]
fn decoupled_twin_gives_product_configuration() {
    let twin = decoupled_twin(&ParameterSet::symbolic());
    let found = loci(&twin, BoundaryName::X3);
    // No line along W3; instead q1 sits at one of its four singular values
    // while q2 is arbitrary.
    assert_eq!(found.len(), 4, "{found:?}");
    for l in &found {
        assert!(l.name.is_none());
        assert_eq!(l.free, vec![Var::Z3], "{l}");
        assert!(l.equations.iter().any(|(v, e)| *v == Var::W3 && e.is_zero()), "{l}");
    }
    let xs: Vec<_> = found.iter().map(|l| l.equations.iter().find(|(v, _)| *v == Var::X3).unwrap().1.clone()).collect();
    for c in ["0", "1", "eta", "t"] {
        assert!(xs.iter().any(|x| x.equals(&expr(c))), "{c}");
    }
}

fn step0_report(locus: LocusName) -> LocalIndexReport {
    let chart = boundary_chart(BoundaryName::X3);
    local_index_at(&to_boundary_chart(&system(), &chart), &chart, locus).unwrap()
}

#[test]
fn step0_matrix_at_c0() {
    let rep = step0_report(LocusName::C0);
    let want = [
        ["2", "-a0", "0", "0"],
        ["0", "1", "0", "0"],
        ["0", "0", "1", "0"],
        ["0", "a5/(t - s)", "0", "0"],
    ];
    for (i, row) in want.iter().enumerate() {
        for (j, w) in row.iter().enumerate() {
            assert!(rep.matrix[i][j].equals(&expr(w)), "({i},{j}): {}", rep.matrix[i][j]);
        }
    }
}

#[test]
fn raw_index_at_c0_needs_no_normalization() {
    let rep = step0_report(LocusName::C0);
    let idx: Vec<_> = rep.index.iter().map(|e| e.as_constant().unwrap()).collect();
    assert_eq!(idx, [2, 1, 1, 0].map(Scalar::from_int));
}

#[test]
fn raw_index_at_c3_is_a_time_dependent_multiple() {
    let rep = step0_report(LocusName::C3);
    assert!(rep.index[1].equals(&expr("-eta/((t - 1)*(t - eta))")), "{}", rep.index[1]);
}

#[test]
fn local_index_is_2110_on_every_locus() {
    for locus in LocusName::ALL {
        let rep = step0_report(locus);
        let idx: Vec<_> = rep.normalized_index.iter().map(|e| e.as_constant().unwrap()).collect();
        assert_eq!(idx, [2, 1, 1, 0].map(Scalar::from_int), "{locus}");
        let ratios: Vec<_> = rep.ratios.iter().map(|e| e.as_constant().unwrap()).collect();
        assert_eq!(ratios, vec![Scalar::one(), Scalar::ratio(1, 2), Scalar::ratio(1, 2), Scalar::zero()]);
        assert_eq!(rep.integral, Some(false));
        // Boundary coordinate first.
        assert_eq!(rep.triangular_order[0], 1);
        assert_eq!(rep.boundary_integral, Some(true));
    }
}

#[test]
fn scaling_field_keeps_ratios() {
    let chart = boundary_chart(BoundaryName::X3);
    let mut field = to_boundary_chart(&system(), &chart);
    let c = Scalar::ratio(-3, 2);
    field.dt = field.dt.map(|e| e.scale(&c));
    // Recentring subtracts dc/dt = 1, which does not scale; use the C3 line
    // where the base point is fixed.
    let rep = local_index_at(&field, &chart, LocusName::C3).unwrap();
    let base = step0_report(LocusName::C3);
    for (a, b) in rep.index.iter().zip(&base.index) {
        assert!(a.equals(&b.scale(&c)));
    }
    for (a, b) in rep.ratios.iter().zip(&base.ratios) {
        assert!(a.equals(b));
    }
}

#[test]
fn not_accessible_off_the_locus() {
    let chart = boundary_chart(BoundaryName::X3);
    let mut field = to_boundary_chart(&system(), &chart);
    // Shifting X3 moves the singular line away from (t, s).
    let shift = [(Var::X3, expr("X3 + 1/3"))];
    field.dt = field.dt.map(|e| e.substitute(&shift).unwrap());
    assert!(matches!(local_index_at(&field, &chart, LocusName::C0), Err(SingularError::NotAccessible(_))));
}

#[test]
fn not_triangularizable_reports_charpoly() {
    let m = vec![vec![expr("0"), expr("1")], vec![expr("-1"), expr("0")]];
    let c = characteristic_polynomial(&m);
    assert!(c[0].equals(&expr("1")) && c[1].is_zero() && c[2].equals(&expr("1")));
}

fn mat(rows: &[&[&str]]) -> Vec<Vec<RationalExpr>> {
    rows.iter().map(|r| r.iter().map(|e| expr(e)).collect()).collect()
}

#[test]
fn alpha_test_generic_diag_2110() {
    let red = alpha_test_solve(&mat(&[
        &["2", "0", "0", "0"],
        &["3", "1", "0", "0"],
        &["-1", "0", "1", "0"],
        &["5", "1", "2", "0"],
    ]))
    .unwrap();
    assert!(red.verifies());
    let r: Vec<_> = red.ratios.iter().map(|e| e.as_constant().unwrap()).collect();
    assert_eq!(r, vec![Scalar::one(), Scalar::ratio(1, 2), Scalar::ratio(1, 2), Scalar::zero()]);
    assert_eq!(red.ratios_integral, Some(false));
    assert_eq!(red.single_valued[1], Some(false));
}

#[test]
fn alpha_test_resonant_with_zero_coupling_is_single_valued() {
    let red = alpha_test_solve(&mat(&[&["1", "0"], &["0", "1"]])).unwrap();
    assert!(red.verifies());
    assert!(!red.solutions[1].has_log());
    assert_eq!(red.all_single_valued(), Some(true));
}

#[test]
fn alpha_test_resonant_with_coupling_has_log() {
    let red = alpha_test_solve(&mat(&[&["1", "0"], &["a1", "1"]])).unwrap();
    assert!(red.verifies());
    let logs = red.solutions[1].log_coefficients();
    assert_eq!(logs.len(), 1);
    assert!(logs[0].equals(&expr("a1")));
    assert_eq!(red.single_valued[1], Some(false));
}

#[test]
fn alpha_test_power_law_display() {
    // X2 = c2 U^2 + a21 U / (a11 - a22) with a11 = 1, a22 = 2, a21 = 4.
    let red = alpha_test_solve(&mat(&[&["1", "0"], &["4", "2"]])).unwrap();
    let x2 = &red.solutions[1];
    let lin = x2.terms.iter().find(|t| t.exponent.equals(&expr("1"))).unwrap();
    assert!(lin.coeff.equals(&expr("-4")));
    let hom = x2.terms.iter().find(|t| t.exponent.equals(&expr("2"))).unwrap();
    assert!(hom.coeff.equals(&expr("c2")));
    // Differentiate in T: X1 dX2/dT = a21 X1 + a22 X2.
    let x1 = red.solutions[0].to_expr(&expr("1")).unwrap();
    let x2 = x2.to_expr(&expr("1")).unwrap();
    let lhs = &x1 * &x2.derivative(Var::T);
    let rhs = &(&x1 * &expr("4")) + &(&x2 * &expr("2"));
    assert!(lhs.equals(&rhs));
}

#[test]
fn alpha_test_symbolic_entries() {
    let red = alpha_test_solve(&mat(&[&["b1", "0"], &["b3", "b2"]])).unwrap();
    assert!(red.verifies());
    let lin = red.solutions[1].terms.iter().find(|t| t.exponent.equals(&expr("1"))).unwrap();
    assert!(lin.coeff.equals(&expr("b3/(b1 - b2)")));
    assert_eq!(red.ratios_integral, None);
}

#[test]
fn alpha_test_rejects_upper_entries() {
    let m = mat(&[&["1", "2"], &["0", "1"]]);
    assert!(matches!(alpha_test_solve(&m), Err(SingularError::NotLowerTriangular)));
}

#[test]
fn alpha_test_on_step0_matrix() {
    let rep = step0_report(LocusName::C0);
    let mut vals = default_times().to_vec();
    vals.extend([(Var::A0, Scalar::ratio(1, 7)), (Var::A5, Scalar::ratio(2, 9))]);
    let red = alpha_test_solve(&rep.reduced_matrix(&vals)).unwrap();
    assert!(red.verifies());
    assert_eq!(red.ratios_integral, Some(true));
}

#[test]
fn blow_up_reconstructs_r0() {
    let rep = blow_up_pipeline(&system(), LocusName::C0).unwrap();
    assert_eq!(rep.composite.name, ChartName::R0);
    assert!(rep.matches_chart);
    assert!(rep.step2_center_singular);
    let x0 = &rep.composite.forward[0].1;
    assert!(x0.equals(&expr("-p1*((q1 - t)*p1 + (q2 - s)*p2 - a0)")));
}

#[test]
fn blow_up_reconstructs_r1_r3_r4() {
    let sys = system();
    for locus in [LocusName::C1, LocusName::C2, LocusName::C3] {
        let rep = blow_up_pipeline(&sys, locus).unwrap();
        assert!(rep.matches_chart, "{locus}");
        assert!(rep.step2_center_singular, "{locus}");
    }
}

#[test]
fn blow_up_with_relation_imposed() {
    let sys = build_system(&ParameterSet::with_relation(1)).unwrap();
    assert!(blow_up_pipeline(&sys, LocusName::C0).unwrap().matches_chart);
}

#[test]
fn wrong_center_leaves_residual_singularity() {
    // Feeding C0's data with the wrong parameter in Step 2.
    let mut params = ParameterSet::symbolic();
    params.alpha[0] = expr("a0 + 1");
    let h = system();
    let sys = HamiltonianSystem::from_parts(h.h1, h.h2, params);
    assert!(matches!(blow_up_pipeline(&sys, LocusName::C0), Err(SingularError::ResidualSingularity(_))));
}

