//! `integrate --config`: a TOML description of parameters, start point,
//! path legs and tolerances.
//!
//! ```toml
//! eta = "2"
//! alpha = ["-8362/153153", "1/7", "2/9", "3/11", "1/13", "1/17"]   # or `trigger = 2`
//! divisor = "F2"   # optional drift report
//!
//! [start]
//! q1 = [0.3, 0.2]
//! p1 = 0.0
//! q2 = [0.7, 0.1]
//! p2 = [-0.4, 0.3]
//!
//! [[legs]]
//! time = "t"
//! to = [2.3333333333333335, 0.25]
//!
//! [pole]
//! to = [2.2, 0.0]
//! threshold = 1e4
//! ```

use std::fmt::Write as _;
use std::str::FromStr;

use anyhow::Result;
use garnier_core::backlund::{invariant_divisor, DivisorName};
use garnier_core::exactalg::{Scalar, Var};
use garnier_core::flows::{
    default_base, generic_parameters, integrate_leg, residue_probe, triggered_numeric, FlowError, Leg, NumericSystem,
    PhasePoint, Tolerances,
};
use garnier_core::model::{build_system, ParameterSet};
use num_complex::Complex64;
use serde::Deserialize;
use serde_json::json;

use crate::report::{self, Report};
use crate::UsageError;

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(untagged)]
pub enum ComplexValue {
    Real(f64),
    Pair([f64; 2]),
}

impl From<ComplexValue> for Complex64 {
    fn from(v: ComplexValue) -> Self {
        match v {
            ComplexValue::Real(x) => Complex64::new(x, 0.0),
            ComplexValue::Pair([a, b]) => Complex64::new(a, b),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StartConfig {
    pub q1: ComplexValue,
    pub p1: ComplexValue,
    pub q2: ComplexValue,
    pub p2: ComplexValue,
    pub t: Option<ComplexValue>,
    pub s: Option<ComplexValue>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LegConfig {
    pub time: String,
    pub to: ComplexValue,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceConfig {
    pub rtol: Option<f64>,
    pub atol: Option<f64>,
    pub max_step: Option<f64>,
    pub margin: Option<f64>,
    pub max_steps: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoleConfig {
    pub to: ComplexValue,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
}

fn default_threshold() -> f64 {
    1e4
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegrateConfig {
    pub eta: Option<String>,
    pub alpha: Option<Vec<String>>,
    pub trigger: Option<usize>,
    pub divisor: Option<String>,
    pub start: StartConfig,
    #[serde(default)]
    pub legs: Vec<LegConfig>,
    #[serde(default)]
    pub tolerances: ToleranceConfig,
    pub pole: Option<PoleConfig>,
}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn parse_scalar(s: &str) -> Result<Scalar> {
    Scalar::from_str(s.trim()).map_err(|e| usage(format!("bad rational `{s}`: {e}")))
}

/// Parameters from the config; the relation is checked before any work.
fn parameters(cfg: &IntegrateConfig) -> Result<ParameterSet> {
    let eta = cfg.eta.as_deref().map(parse_scalar).transpose()?.unwrap_or_else(|| Scalar::from_int(2));
    let base = match (&cfg.alpha, cfg.trigger) {
        (Some(_), Some(_)) => return Err(usage("give either `alpha` or `trigger`, not both")),
        (Some(a), None) => {
            let vals: Vec<Scalar> = a.iter().map(|s| parse_scalar(s)).collect::<Result<_>>()?;
            let arr: [Scalar; 6] = vals.try_into().map_err(|_| usage("`alpha` needs six entries a0..a5"))?;
            return ParameterSet::numeric(arr, eta).map_err(|e| usage(format!("parameters rejected: {e}")));
        }
        (None, Some(i)) if i < 6 => triggered_numeric(i),
        (None, Some(i)) => return Err(usage(format!("trigger {i} is not in 0..=5"))),
        (None, None) => generic_parameters(),
    };
    let alpha = base.alpha.map(|a| a.as_constant().expect("numeric"));
    ParameterSet::numeric(alpha, eta).map_err(|e| usage(format!("parameters rejected: {e}")))
}

fn tolerances(c: &ToleranceConfig) -> Tolerances {
    let d = Tolerances::default();
    Tolerances {
        rtol: c.rtol.unwrap_or(d.rtol),
        atol: c.atol.unwrap_or(d.atol),
        max_step: c.max_step.unwrap_or(d.max_step),
        margin: c.margin.unwrap_or(d.margin),
        max_steps: c.max_steps.unwrap_or(d.max_steps),
    }
}

fn leg(c: &LegConfig) -> Result<Leg> {
    match c.time.as_str() {
        "t" => Ok(Leg::t(c.to.into())),
        "s" => Ok(Leg::s(c.to.into())),
        other => Err(usage(format!("leg time must be `t` or `s`, got `{other}`"))),
    }
}

pub fn load(text: &str) -> Result<IntegrateConfig> {
    toml::from_str(text).map_err(|e| usage(format!("config: {e}")))
}

fn row(out: &mut String, leg: usize, p: &PhasePoint) {
    let _ = write!(out, "{leg}");
    for z in [p.t, p.s, p.state[0], p.state[1], p.state[2], p.state[3]] {
        let _ = write!(out, " {:.17e} {:.17e}", z.re, z.im);
    }
    out.push('\n');
}

pub const TRAJECTORY_HEADER: &str =
    "# leg t_re t_im s_re s_im q1_re q1_im p1_re p1_im q2_re q2_im p2_re p2_im\n";

/// Runs the configured path. Returns the summary and the columnar trajectory.
pub fn run(cfg: &IntegrateConfig) -> Result<(Report, String)> {
    let params = parameters(cfg)?;
    let legs: Vec<Leg> = cfg.legs.iter().map(leg).collect::<Result<_>>()?;
    let divisor = cfg
        .divisor
        .as_deref()
        .map(|d| {
            DivisorName::ALL
                .into_iter()
                .find(|n| n.as_str().eq_ignore_ascii_case(d))
                .ok_or_else(|| usage(format!("unknown divisor `{d}`")))
        })
        .transpose()?;
    let tol = tolerances(&cfg.tolerances);
    let sys = NumericSystem::new(&build_system(&params)?)?;
    let (t0, s0) = default_base();
    let s = &cfg.start;
    let start = PhasePoint::new(
        [s.q1.into(), s.p1.into(), s.q2.into(), s.p2.into()],
        s.t.map_or(t0, Into::into),
        s.s.map_or(s0, Into::into),
    );

    let mut r = Report::new("integrate");
    let mut traj = String::from(TRAJECTORY_HEADER);
    row(&mut traj, 0, &start);
    let mut points = vec![start];
    let mut cur = start;
    let (mut accepted, mut rejected) = (0, 0);
    let mut failure: Option<FlowError> = None;
    for (i, l) in legs.iter().enumerate() {
        match integrate_leg(&sys, &cur, l, &tol) {
            Ok(out) => {
                for p in &out.samples {
                    row(&mut traj, i + 1, p);
                }
                points.extend(out.samples);
                accepted += out.stats.accepted;
                rejected += out.stats.rejected;
                cur = out.end;
            }
            Err(e) => {
                failure = Some(e);
                break;
            }
        }
    }
    let state: serde_json::Map<String, serde_json::Value> = ["q1", "p1", "q2", "p2"]
        .iter()
        .zip(cur.state)
        .map(|(k, z)| (k.to_string(), report::complex(z)))
        .chain([("t".to_string(), report::complex(cur.t)), ("s".to_string(), report::complex(cur.s))])
        .collect();
    r.set("endpoint", state);
    r.set("steps", json!({ "accepted": accepted, "rejected": rejected }));
    r.set("tolerances", json!({ "rtol": tol.rtol, "atol": tol.atol, "max_step": tol.max_step, "margin": tol.margin }));
    r.set("parameters", params.alpha.iter().map(report::expr).collect::<Vec<_>>());
    r.set("eta", report::expr(&params.eta));
    r.line(format!("{} legs, {accepted} accepted and {rejected} rejected steps", legs.len()));
    if let Some(e) = &failure {
        r.passed = false;
        r.set("error", e.to_string());
        r.line(format!("integration stopped: {e}"));
    }

    if let Some(d) = divisor {
        let div = invariant_divisor(d);
        let eta = params.eta.as_constant().expect("numeric").to_complex();
        let mut drift: f64 = 0.0;
        for p in &points {
            for f in &div.polys {
                drift = drift.max(p.eval_with(f, &[(Var::ETA, eta)])?.norm());
            }
        }
        let bound = 100.0 * tol.rtol;
        r.passed &= drift < bound;
        r.set("divisor", json!({ "name": d.as_str(), "drift": drift, "bound": bound }));
        r.line(format!("divisor {} drift {drift:.3e} (bound {bound:.1e})", d.as_str()));
    }

    if let (Some(pc), None) = (&cfg.pole, &failure) {
        // The prediction is recorded next to the fit, not checked against it.
        let prediction = json!({ "a11": 2, "p1_residue_at_c0": 1 });
        match residue_probe(&sys, &cur, pc.to.into(), pc.threshold, &tol) {
            Ok(rep) => {
                r.set(
                    "pole",
                    json!({
                        "t_star": report::complex(rep.fit.t_star),
                        "residue": report::complex(rep.fit.residue),
                        "constant": report::complex(rep.fit.constant),
                        "q_at_pole": [report::complex(rep.q_at_pole[0]), report::complex(rep.q_at_pole[1])],
                        "samples": rep.samples_used,
                        "prediction": prediction,
                    }),
                );
                r.line(format!(
                    "pole of p1 at t* = {:.6}{:+.6}i, residue {:.6}{:+.6}i",
                    rep.fit.t_star.re, rep.fit.t_star.im, rep.fit.residue.re, rep.fit.residue.im
                ));
            }
            Err(e) => {
                r.set("pole", json!({ "error": e.to_string(), "prediction": prediction }));
                r.line(format!("pole probe: {e}"));
            }
        }
    }
    Ok((r, traj))
}
