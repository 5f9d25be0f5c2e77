//! One PASS/FAIL line per acceptance criterion. Runs without the libtest
//! harness so the lines show up under a plain `cargo test`.

use std::process::ExitCode;
use std::thread;
use std::time::Instant;

use garnier_core::backlund::*;
use garnier_core::charts::{chart_inverse, verify_holomorphy, verify_symplectic_identity, ChartName};
use garnier_core::exactalg::{expr, MultiPoly, RationalExpr, Scalar, Var};
use garnier_core::flows::*;
use garnier_core::model::{build_system, frobenius_report, HamiltonianSystem, ParameterSet};
use garnier_core::singular::*;
use num_complex::Complex64 as C;

type Outcome = (bool, String);
type Criterion = (&'static str, fn() -> Outcome);

fn symbolic() -> HamiltonianSystem {
    build_system(&ParameterSet::with_relation(0)).unwrap()
}

// a0 kept symbolic so the printed Step-0 entry can be compared.
fn symbolic_keep_a0() -> HamiltonianSystem {
    build_system(&ParameterSet::with_relation(1)).unwrap()
}

fn holomorphy() -> Outcome {
    let sys = symbolic();
    let mut verdicts = 0;
    let mut bad = Vec::new();
    for name in ChartName::ALL {
        let rep = verify_holomorphy(&sys, &chart_inverse(name));
        verdicts += usize::from(rep.h1.holds()) + usize::from(rep.h2.holds());
        if !(rep.inverse_ok && rep.h1.holds() && rep.h2.holds()) {
            bad.push(format!("{name:?}"));
        }
    }
    (bad.is_empty() && verdicts == 12, format!("{verdicts}/12 polynomial verdicts {bad:?}"))
}

fn symplectic() -> Outcome {
    let sys = symbolic();
    let ok: Vec<bool> = ChartName::ALL.iter().map(|n| verify_symplectic_identity(&sys, &chart_inverse(*n))).collect();
    let control = verify_symplectic_identity(&sys, &chart_inverse(ChartName::R0).without_correction());
    (ok.iter().all(|b| *b) && !control, format!("charts {ok:?}, r0 without correction holds: {control}"))
}

fn backlund() -> Outcome {
    let sys = symbolic();
    let maps: Vec<(MapName, bool)> = thread::scope(|sc| {
        let hs: Vec<_> = MapName::ALL
            .iter()
            .map(|m| {
                let sys = &sys;
                sc.spawn(move || (*m, verify_backlund(&backlund_map(*m), sys).passed()))
            })
            .collect();
        hs.into_iter().map(|h| h.join().unwrap()).collect()
    });
    let relation = MapName::ALL.iter().all(|m| backlund_map(*m).preserves_relation());
    let rels = group_relations();
    let needed = ["s1^2 = id", "s2^2 = id", "pi1^2 = id", "pi4^2 = id", "pi5^2 = id", "pi5.s1.pi5 = s2"];
    let group = needed.iter().all(|n| rels.iter().any(|r| r.relation == *n && r.expected == Some(true) && r.holds));
    let all_maps = maps.iter().all(|(_, p)| *p);
    (all_maps && relation && group, format!("maps {maps:?}, relation preserved {relation}, group relations {group}"))
}

fn divisors() -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    for d in DivisorName::ALL {
        let div = invariant_divisor(d);
        let on = verify_divisor(&div).invariant();
        let off = verify_divisor_lifted(&div);
        let fails = !off.invariant() && off.proportional_to(d.trigger());
        ok &= on && fails;
        lines.push(format!("{d:?}:{on}/{fails}"));
    }
    (ok, lines.join(" "))
}

fn loci() -> Outcome {
    let sys = symbolic_keep_a0();
    let mut ok = true;
    let mut detail = Vec::new();
    for name in BoundaryName::ALL {
        let chart = boundary_chart(name);
        let found = find_accessible_singularities(&to_boundary_chart(&sys, &chart), &chart);
        let names: Vec<_> = found.iter().flatten().map(|l| l.name).collect();
        ok &= names == LocusName::ALL.map(Some).to_vec();
        detail.push(format!("{name}: {names:?}"));
    }
    (ok, detail.join("; "))
}

fn local_index() -> Outcome {
    let sys = symbolic_keep_a0();
    let chart = boundary_chart(BoundaryName::X3);
    let field = to_boundary_chart(&sys, &chart);
    let want: Vec<Scalar> = [2, 1, 1, 0].map(Scalar::from_int).to_vec();
    let mut ok = true;
    let mut detail = Vec::new();
    for locus in LocusName::ALL {
        match local_index_at(&field, &chart, locus) {
            Ok(rep) => {
                let idx: Vec<_> = rep.normalized_index.iter().map(|e| e.as_constant()).collect();
                let hit = idx.iter().cloned().collect::<Option<Vec<_>>>() == Some(want.clone());
                ok &= hit;
                detail.push(format!("{locus}:{hit}"));
                if locus == LocusName::C0 {
                    let m = &rep.matrix;
                    let entries = m[0][0].equals(&expr("2"))
                        && m[0][1].equals(&expr("-a0"))
                        && m[3][1].equals(&expr("a5/(t - s)"));
                    ok &= entries;
                    detail.push(format!("printed entries:{entries}"));
                }
            }
            Err(e) => {
                ok = false;
                detail.push(format!("{locus}: {e}"));
            }
        }
    }
    (ok, detail.join(" "))
}

fn blow_up() -> Outcome {
    let sys = symbolic_keep_a0();
    let mut ok = true;
    let mut detail = Vec::new();
    for locus in LocusName::ALL {
        match blow_up_pipeline(&sys, locus) {
            Ok(rep) => {
                ok &= rep.matches_chart && rep.step2_center_singular;
                detail.push(format!("{locus}->{:?}:{}", rep.composite.name, rep.matches_chart));
            }
            Err(e) => {
                ok = false;
                detail.push(format!("{locus}: {e}"));
            }
        }
    }
    (ok, detail.join(" "))
}

fn mat(rows: &[&[&str]]) -> Vec<Vec<RationalExpr>> {
    rows.iter().map(|r| r.iter().map(|e| expr(e)).collect()).collect()
}

fn alpha_test() -> Outcome {
    // Power law: X2 = c2 U^(a22/a11) + a21/(a11 - a22) U.
    let power = alpha_test_solve(&mat(&[&["b1", "0"], &["b3", "b2"]])).unwrap();
    let lin = power.solutions[1].terms.iter().find(|t| t.exponent.equals(&expr("1")));
    let hom = power.solutions[1].terms.iter().find(|t| t.exponent.equals(&expr("b2/b1")));
    let power_ok = power.verifies()
        && lin.is_some_and(|t| t.coeff.equals(&expr("b3/(b1 - b2)")) && t.log_power == 0)
        && hom.is_some_and(|t| t.coeff.equals(&expr("c2")));
    // Resonant: X2 = (a21/a11) U Log U + c2 U.
    let log = alpha_test_solve(&mat(&[&["b1", "0"], &["b3", "b1"]])).unwrap();
    let log_ok = log.verifies()
        && log.solutions[1]
            .terms
            .iter()
            .any(|t| t.log_power == 1 && t.exponent.equals(&expr("1")) && t.coeff.equals(&expr("b3/b1")));
    // Verdicts: a22/a11 integral, and a21 = 0 in the resonant case.
    let verdict = |m: &[&[&str]]| alpha_test_solve(&mat(m)).unwrap().single_valued[1];
    let verdicts = verdict(&[&["2", "0"], &["3", "1"]]) == Some(false)
        && verdict(&[&["1", "0"], &["3", "2"]]) == Some(true)
        && verdict(&[&["1", "0"], &["3", "1"]]) == Some(false)
        && verdict(&[&["1", "0"], &["0", "1"]]) == Some(true);
    (power_ok && log_ok && verdicts, format!("power law {power_ok}, logarithmic {log_ok}, verdicts {verdicts}"))
}

fn drop_p2_squared_term(h: &RationalExpr) -> RationalExpr {
    let target = h.num().terms().find(|(m, _)| m.exp(Var::P2) == 2).map(|(m, _)| m.clone()).unwrap();
    let kept = MultiPoly::from_terms(h.num().terms().filter(|(m, _)| **m != target).map(|(m, c)| (m.clone(), c.clone())));
    RationalExpr::new(kept, h.den().clone()).unwrap()
}

fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

fn start() -> PhasePoint {
    let (t0, s0) = default_base();
    PhasePoint::new([c(0.3, 0.2), c(0.5, -0.1), c(0.7, 0.1), c(-0.4, 0.3)], t0, s0)
}

fn commutativity() -> Result<(f64, f64), FlowError> {
    let sys = build_system(&generic_parameters()).unwrap();
    let tol = Tolerances::default();
    let good = commutativity_check(&NumericSystem::new(&sys)?, &start(), c(0.05, 0.0), c(0.0, 0.05), &tol)?;
    let bad = HamiltonianSystem::from_parts(sys.h1.clone(), drop_p2_squared_term(&sys.h2), sys.params.clone());
    let control = commutativity_check(&NumericSystem::new(&bad)?, &start(), c(0.05, 0.0), c(0.0, 0.05), &tol)?;
    Ok((good, control))
}

fn numerics() -> Outcome {
    let mut detail = Vec::new();
    let mut ok = true;
    match commutativity() {
        Ok((r, control)) => {
            ok &= r < 1e-8 && control > 1e-3;
            detail.push(format!("commutator {r:.1e} (corrupted {control:.1e})"));
        }
        Err(e) => {
            ok = false;
            detail.push(format!("commutator: {e}"));
        }
    }
    let mut worst: f64 = 0.0;
    for d in DivisorName::ALL {
        let sys = build_system(&triggered_numeric(d.trigger())).unwrap();
        let mut p = start();
        let v = match d {
            DivisorName::F0 => Some((p.t, p.s)),
            DivisorName::F1 => Some((c(2.0, 0.0), c(2.0, 0.0))),
            DivisorName::F3 => Some((c(1.0, 0.0), c(1.0, 0.0))),
            DivisorName::F4 => Some((c(0.0, 0.0), c(0.0, 0.0))),
            _ => None,
        };
        match (d, v) {
            (_, Some((a, b))) => {
                p.state[0] = a;
                p.state[2] = b;
            }
            (DivisorName::F2, None) => p.state[1] = c(0.0, 0.0),
            _ => p.state[3] = c(0.0, 0.0),
        }
        let path = FlowPath { legs: vec![Leg::t(p.t + c(0.0, 0.25)), Leg::s(p.s + c(0.0, -0.25))], tol: Tolerances::default() };
        match NumericSystem::new(&sys).and_then(|n| divisor_drift(&n, &invariant_divisor(d), &p, &path)) {
            Ok(x) => worst = worst.max(x),
            Err(_) => worst = f64::INFINITY,
        }
    }
    ok &= worst < 1e-8;
    detail.push(format!("max divisor drift {worst:.1e}"));
    match decoupled_gap() {
        Ok(gap) => {
            ok &= gap < 1e-8;
            detail.push(format!("decoupled gap {gap:.1e}"));
        }
        Err(e) => {
            ok = false;
            detail.push(format!("decoupled: {e}"));
        }
    }
    (ok, detail.join(", "))
}

fn decoupled_gap() -> Result<f64, FlowError> {
    let b = [Scalar::ratio(1, 7), Scalar::ratio(3, 11), Scalar::ratio(1, 13)];
    let a0 = &(&(&Scalar::one() - &b[0]) - &b[1]) - &b[2];
    let alpha = [a0, b[0].clone(), Scalar::zero(), b[1].clone(), b[2].clone(), Scalar::zero()];
    let sys = build_system(&ParameterSet::numeric(alpha, Scalar::from_int(2)).unwrap()).unwrap();
    let mut p0 = start();
    p0.state[3] = c(0.0, 0.0);
    let dt = c(0.3, 0.2);
    let full = integrate_leg(&NumericSystem::new(&sys)?, &p0, &Leg::t(p0.t + dt), &Tolerances::default())?.end;
    let (b1, b3, b4, eta) = (1.0 / 7.0, 3.0 / 11.0, 1.0 / 13.0, 2.0);
    let len = dt.norm();
    let dir = dt / len;
    let f = |x: f64, y: &[C; 2]| {
        let (t, q, p) = (p0.t + dir * x, y[0], y[1]);
        let n = t * (t - 1.0) * (t - eta);
        let fs = [q, q - 1.0, q - eta, q - t];
        let a = fs[0] * fs[1] * fs[2] * fs[3];
        let da = fs[1] * fs[2] * fs[3] + fs[0] * fs[2] * fs[3] + fs[0] * fs[1] * fs[3] + fs[0] * fs[1] * fs[2];
        let bq = b1 * (t - eta) * q * (q - 1.0) + b3 * (t - 1.0) * q * (q - eta) + b4 * t * (q - 1.0) * (q - eta);
        let dbq = b1 * (t - eta) * (2.0 * q - 1.0) + b3 * (t - 1.0) * (2.0 * q - eta) + b4 * t * (2.0 * q - 1.0 - eta);
        Ok([(2.0 * a * p + bq) / n * dir, -(da * p * p + dbq * p) / n * dir])
    };
    let tol = Tolerances { rtol: 1e-12, atol: 1e-14, ..Tolerances::default() };
    let (y, _, _) = dopri5(f, [p0.state[0], p0.state[1]], len, &tol, |_, _| Ok(true))?;
    Ok((full.state[0] - y[0]).norm().max((full.state[1] - y[1]).norm()))
}

fn frobenius() -> Outcome {
    let rep = frobenius_report(&build_system(&ParameterSet::symbolic()).unwrap());
    let zero = rep.zero_conventions();
    if zero.len() == 1 {
        return (true, format!("zero under convention {:+}", zero[0]));
    }
    // Fallback clause: the numerical commutativity must hold, and the
    // discrepancy is reported.
    match commutativity() {
        Ok((r, _)) => (
            r < 1e-8,
            format!(
                "zero under {} conventions {zero:?} (bracket and time parts vanish separately); commutator {r:.1e}",
                zero.len()
            ),
        ),
        Err(e) => (false, format!("commutativity failed: {e}")),
    }
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("holomorphy", holomorphy),
        ("symplectic identities", symplectic),
        ("Backlund transformations", backlund),
        ("invariant divisors", divisors),
        ("singular loci", loci),
        ("local index", local_index),
        ("blow-up", blow_up),
        ("alpha-test", alpha_test),
        ("numerics", numerics),
        ("Frobenius", frobenius),
    ];
    let results: Vec<(Outcome, f64)> = thread::scope(|sc| {
        let hs: Vec<_> = criteria
            .iter()
            .map(|(_, f)| {
                sc.spawn(move || {
                    let t = Instant::now();
                    let r = f();
                    (r, t.elapsed().as_secs_f64())
                })
            })
            .collect();
        hs.into_iter().map(|h| h.join().unwrap_or_else(|_| ((false, "panicked".into()), 0.0))).collect()
    });
    let mut all = true;
    for (i, ((name, _), ((ok, detail), secs))) in criteria.iter().zip(results).enumerate() {
        all &= ok;
        println!("{} criterion {:>2} {name} [{secs:.1}s]: {detail}", if ok { "PASS" } else { "FAIL" }, i + 1);
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
