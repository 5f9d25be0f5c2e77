use anyhow::{anyhow, Result};
use garnier_core::backlund::{
    backlund_map, group_relations, invariant_divisor, verify_backlund, verify_divisor, verify_divisor_lifted, DivisorName,
    MapName,
};
use garnier_core::charts::{chart_inverse, verify_holomorphy, verify_symplectic_identity, ChartName, Polynomiality};
use garnier_core::exactalg::{expr as parse_expr, RationalExpr, Scalar};
use garnier_core::flows::{commutativity_check, default_base, generic_parameters, NumericSystem, PhasePoint, Tolerances};
use garnier_core::model::{build_system, frobenius_report, HamiltonianSystem};
use garnier_core::singular::{
    alpha_test_solve, blow_up_pipeline, boundary_chart, find_accessible_singularities, local_index_at, to_boundary_chart,
    BoundaryName, LocusName,
};
use num_complex::Complex64;
use rayon::prelude::*;
use serde_json::{json, Map, Value};

use crate::report::{self, Report};

fn polynomiality(p: &Polynomiality) -> Value {
    match p {
        Polynomiality::Polynomial => json!("polynomial"),
        Polynomiality::NotDivisible(m) => json!({ "not_divisible": m.to_string() }),
        Polynomiality::ForeignPole(d) => json!({ "foreign_pole": d }),
    }
}

pub fn holomorphy(sys: &HamiltonianSystem, charts: &[ChartName]) -> Report {
    let reps: Vec<_> = charts.par_iter().map(|c| verify_holomorphy(sys, &chart_inverse(*c))).collect();
    let mut r = Report::new("verify-holomorphy");
    let mut out = Map::new();
    for rep in &reps {
        let ok = rep.passed();
        r.passed &= ok;
        let mut m = Map::new();
        m.insert("passed".into(), json!(ok));
        m.insert("inverse_ok".into(), json!(rep.inverse_ok));
        m.insert("h1".into(), polynomiality(&rep.h1));
        m.insert("h2".into(), polynomiality(&rep.h2));
        m.insert("pole_order".into(), json!(rep.pole_order));
        m.insert("symplectic".into(), json!(rep.symplectic));
        m.insert("witness".into(), json!(rep.witness()));
        out.insert(rep.chart.to_string(), Value::Object(m));
        let w = rep.witness().map(|w| format!(" ({w})")).unwrap_or_default();
        r.line(format!("{}: {}{w}", rep.chart, if ok { "polynomial, symplectic" } else { "FAIL" }));
    }
    r.set("charts", out);
    r
}

/// The correction term of r0 is needed: dropping it must break the identity.
pub fn symplectic_control(sys: &HamiltonianSystem) -> Report {
    let holds = verify_symplectic_identity(sys, &chart_inverse(ChartName::R0).without_correction());
    let mut r = Report::new("symplectic-control");
    r.passed = !holds;
    r.set("r0_without_correction_holds", holds);
    r.line(format!("r0 without its correction: identity {}", if holds { "holds" } else { "fails as expected" }));
    r
}

pub fn backlund(sys: &HamiltonianSystem, maps: &[MapName]) -> Report {
    let reps: Vec<_> = maps.par_iter().map(|m| (*m, verify_backlund(&backlund_map(*m), sys))).collect();
    let mut r = Report::new("verify-backlund");
    let mut out = Map::new();
    for (m, rep) in &reps {
        let ok = rep.passed();
        r.passed &= ok;
        let failures: Vec<String> = rep.failures.iter().map(|(t, v)| format!("d{v}/d{t}")).collect();
        let params: Vec<Value> = backlund_map(*m).params.iter().map(report::expr).collect();
        out.insert(
            m.to_string(),
            json!({
                "passed": ok,
                "relation_preserved": rep.relation_preserved,
                "failures": failures,
                "parameters": params,
            }),
        );
        r.line(format!("{m}: {}", if ok { "symmetry".to_string() } else { format!("FAIL {failures:?}") }));
    }
    r.set("maps", out);
    r
}

pub fn divisors() -> Report {
    let rows: Vec<_> = DivisorName::ALL
        .par_iter()
        .map(|d| {
            let div = invariant_divisor(*d);
            let on = verify_divisor(&div);
            let off = verify_divisor_lifted(&div);
            (*d, on.invariant(), off.invariant(), off.proportional_to(d.trigger()), div.polys)
        })
        .collect();
    let mut r = Report::new("verify-divisors");
    let mut out = Map::new();
    for (d, on, off, prop, polys) in rows {
        let ok = on && !off && prop;
        r.passed &= ok;
        out.insert(
            d.as_str().to_string(),
            json!({
                "passed": ok,
                "trigger": format!("a{} = 0", d.trigger()),
                "polynomials": polys.iter().map(|p| p.to_string()).collect::<Vec<_>>(),
                "invariant_under_trigger": on,
                "invariant_when_lifted": off,
                "obstruction_proportional": prop,
            }),
        );
        r.line(format!("{}: a{} = 0 {}", d.as_str(), d.trigger(), if ok { "invariant; lifted fails" } else { "FAIL" }));
    }
    r.set("divisors", out);
    r
}

pub fn relations() -> Report {
    let mut r = Report::new("group-relations");
    let mut out = Vec::new();
    for c in group_relations() {
        r.passed &= c.consistent();
        let status = match c.expected {
            Some(_) if c.consistent() => "holds",
            Some(_) => "FAIL",
            None => "reported",
        };
        r.line(format!("{}: {} ({status})", c.relation, c.holds));
        out.push(json!({ "relation": c.relation, "holds": c.holds, "asserted": c.expected.is_some() }));
    }
    r.set("relations", out);
    r
}

/// Zero under some sign convention passes. With `numeric`, a result other
/// than exactly one zero convention is backed by the flow commutator.
pub fn frobenius(sys: &HamiltonianSystem, numeric: bool) -> Result<Report> {
    let rep = frobenius_report(sys);
    let zero = rep.zero_conventions();
    let mut r = Report::new("frobenius");
    r.passed = !zero.is_empty();
    r.set("zero_conventions", zero.clone());
    r.set("bracket_zero", rep.bracket.is_zero());
    r.set("time_part_zero", rep.time_part.is_zero());
    r.line(format!("residual zero under conventions {zero:?}"));
    if rep.bracket.is_zero() && rep.time_part.is_zero() {
        r.line("both the bracket and dH1/ds - dH2/dt vanish identically");
    }
    if numeric && zero.len() != 1 {
        let num = NumericSystem::new(&build_system(&generic_parameters())?)?;
        let (t0, s0) = default_base();
        let c = |a, b| Complex64::new(a, b);
        let start = PhasePoint::new([c(0.3, 0.2), c(0.5, -0.1), c(0.7, 0.1), c(-0.4, 0.3)], t0, s0);
        let res = commutativity_check(&num, &start, c(0.05, 0.0), c(0.0, 0.05), &Tolerances::default())?;
        r.passed = res < 1e-8;
        r.set("numeric_commutator", res);
        r.line(format!("numerical commutator on legs of length 0.05: {res:.2e}"));
    }
    Ok(r)
}

pub fn singularities(sys: &HamiltonianSystem, charts: &[BoundaryName]) -> Result<Report> {
    let found: Vec<_> = charts
        .par_iter()
        .map(|name| {
            let chart = boundary_chart(*name);
            (*name, find_accessible_singularities(&to_boundary_chart(sys, &chart), &chart))
        })
        .collect();
    let mut r = Report::new("singularities");
    let mut out = Map::new();
    for (name, loci) in found {
        let loci = loci.map_err(|e| anyhow!("{name}: {e}"))?;
        let names: Vec<_> = loci.iter().map(|l| l.name).collect();
        r.passed &= names == LocusName::ALL.map(Some).to_vec();
        let list: Vec<Value> = loci
            .iter()
            .map(|l| {
                let eqs: Map<String, Value> = l.equations.iter().map(|(v, e)| (v.to_string(), report::expr(e))).collect();
                json!({
                    "name": l.name.map(|n| n.to_string()),
                    "equations": eqs,
                    "free": l.free.iter().map(|v| v.to_string()).collect::<Vec<_>>(),
                })
            })
            .collect();
        for l in &loci {
            r.line(format!("{name}: {l}"));
        }
        out.insert(name.to_string(), Value::Array(list));
    }
    r.set("charts", out);
    Ok(r)
}

pub fn local_index(sys: &HamiltonianSystem, chart: BoundaryName, locus: LocusName) -> Result<Report> {
    let bc = boundary_chart(chart);
    let rep = local_index_at(&to_boundary_chart(sys, &bc), &bc, locus)?;
    let want: Vec<Scalar> = [2, 1, 1, 0].map(Scalar::from_int).to_vec();
    let got: Option<Vec<Scalar>> = rep.normalized_index.iter().map(RationalExpr::as_constant).collect();
    let mut r = Report::new("local-index");
    r.passed = got.as_ref() == Some(&want);
    r.set("locus", locus.to_string());
    r.set("chart", chart.to_string());
    r.set("index", report::exprs(&rep.normalized_index));
    r.set("raw_index", report::exprs(&rep.index));
    r.set("matrix", rep.matrix.iter().map(report::exprs).collect::<Vec<_>>());
    r.set("ratios", report::exprs(&rep.ratios));
    r.set("ratios_integral", json!(rep.integral));
    r.set("triangular_order", json!(rep.triangular_order));
    r.set("boundary_ratios", report::exprs(&rep.boundary_ratios));
    r.set("boundary_ratios_integral", json!(rep.boundary_integral));
    let point: Map<String, Value> = rep.point.iter().map(|(v, e)| (v.to_string(), report::expr(e))).collect();
    r.set("point", point);
    r.line(format!("{locus} on {chart}"));
    for row in &rep.matrix {
        r.line(format!("  [{}]", row.iter().map(|e| e.to_string()).collect::<Vec<_>>().join(", ")));
    }
    let show = |v: &[RationalExpr]| v.iter().map(|e| e.to_string()).collect::<Vec<_>>().join(", ");
    r.line(format!("index ({})", show(&rep.normalized_index)));
    r.line(format!("raw diagonal ({})", show(&rep.index)));
    Ok(r)
}

pub fn blow_up(sys: &HamiltonianSystem, locus: LocusName, emit: bool) -> Result<Report> {
    let rep = blow_up_pipeline(sys, locus)?;
    let mut r = Report::new("blow-up");
    r.passed = rep.matches_chart && rep.step2_center_singular;
    r.set("locus", locus.to_string());
    r.set("chart", rep.composite.name.to_string());
    r.set("matches_chart", rep.matches_chart);
    r.set("step2_center_singular", rep.step2_center_singular);
    r.line(format!(
        "{locus}: composite {} chart {}",
        if rep.matches_chart { "reproduces" } else { "does not reproduce" },
        rep.composite.name
    ));
    if emit {
        let bind = |b: &[(garnier_core::exactalg::Var, RationalExpr)]| -> Map<String, Value> {
            b.iter().map(|(v, e)| (v.to_string(), json!(e.to_string()))).collect()
        };
        r.set("forward", bind(&rep.composite.forward));
        r.set("inverse", bind(&rep.composite.inverse));
        for (v, e) in &rep.composite.forward {
            r.line(format!("  {v} = {e}"));
        }
        for (v, e) in &rep.composite.inverse {
            r.line(format!("  {v} <- {e}"));
        }
    }
    Ok(r)
}

fn mat(rows: &[&[&str]]) -> Vec<Vec<RationalExpr>> {
    rows.iter().map(|row| row.iter().map(|e| parse_expr(e)).collect()).collect()
}

/// Closed forms of the two-dimensional reduced system in symbolic entries.
pub fn alpha_test() -> Result<Report> {
    let mut r = Report::new("alpha-test");
    let generic = alpha_test_solve(&mat(&[&["b1", "0"], &["b3", "b2"]]))?;
    let resonant = alpha_test_solve(&mat(&[&["b1", "0"], &["b3", "b1"]]))?;
    let lin = generic.solutions[1].terms.iter().find(|t| t.exponent.equals(&parse_expr("1")));
    let power_ok = generic.verifies() && lin.is_some_and(|t| t.coeff.equals(&parse_expr("b3/(b1 - b2)")));
    let log_ok = resonant.verifies()
        && resonant.solutions[1].terms.iter().any(|t| t.log_power == 1 && t.coeff.equals(&parse_expr("b3/b1")));
    r.passed = power_ok && log_ok;
    r.set("power_law", json!({ "x2": generic.solutions[1].to_string(), "verified": power_ok }));
    r.set("logarithmic", json!({ "x2": resonant.solutions[1].to_string(), "verified": log_ok }));
    r.line(format!("a22 != a11: X2 = {}", generic.solutions[1]));
    r.line(format!("a22 = a11: X2 = {}", resonant.solutions[1]));
    Ok(r)
}

/// The full symbolic suite, run section by section in parallel.
pub fn verify_all(sys: &HamiltonianSystem) -> Result<Report> {
    type Job<'a> = Box<dyn Fn() -> Result<Vec<Report>> + Send + Sync + 'a>;
    let jobs: Vec<Job> = vec![
        Box::new(|| Ok(vec![holomorphy(sys, &ChartName::ALL)])),
        Box::new(|| Ok(vec![symplectic_control(sys)])),
        Box::new(|| Ok(vec![backlund(sys, &MapName::ALL)])),
        Box::new(|| Ok(vec![relations(), divisors()])),
        Box::new(|| Ok(vec![frobenius(sys, false)?])),
        Box::new(|| Ok(vec![singularities(sys, &BoundaryName::ALL)?])),
        Box::new(|| {
            LocusName::ALL.iter().map(|l| local_index(sys, BoundaryName::X3, *l)).collect::<Result<Vec<_>>>()
        }),
        Box::new(|| LocusName::ALL.iter().map(|l| blow_up(sys, *l, false)).collect::<Result<Vec<_>>>()),
        Box::new(|| Ok(vec![alpha_test()?])),
    ];
    let parts: Vec<Report> =
        jobs.par_iter().map(|j| j()).collect::<Result<Vec<_>>>()?.into_iter().flatten().collect();
    let mut r = Report::new("verify-all");
    let mut sections = Map::new();
    for p in parts {
        r.passed &= p.passed;
        let key = match p.body.get("locus").and_then(Value::as_str) {
            Some(l) => format!("{}/{l}", p.command),
            None => p.command.to_string(),
        };
        r.line(format!("{key}: {}", if p.passed { "PASS" } else { "FAIL" }));
        let mut body = p.body;
        body.insert("passed".into(), json!(p.passed));
        sections.insert(key, Value::Object(body));
    }
    r.set("sections", sections);
    Ok(r)
}
