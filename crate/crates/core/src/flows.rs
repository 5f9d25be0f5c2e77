//! Numerical integration of the two commuting flows along piecewise-linear
//! complex paths in the `(t, s)` base.
//!
//! The integrator is Dormand–Prince 5(4) with the usual embedded error
//! estimate. A leg moves one time at a time, parametrized by arclength.

use alloc::vec::Vec;
use num_complex::Complex64;

use crate::backlund::InvariantDivisor;
use crate::exactalg::{MultiPoly, RationalExpr, Scalar, Var};
use crate::model::{relation_solution, vector_field, HamiltonianSystem, ParameterSet};

type C = Complex64;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FlowError {
    #[error("{time} came within the margin of a singular value at {at}")]
    SingularityApproach { time: Var, at: C },
    #[error("step size collapsed to {step:e} at {at}")]
    StepFailure { at: C, step: f64 },
    #[error("system is not fully numeric: `{0}` is unbound")]
    NotNumeric(Var),
    #[error("no pole detected")]
    NoPoleDetected,
}

/// `(q1, p1, q2, p2)` with the two times.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhasePoint {
    pub state: [C; 4],
    pub t: C,
    pub s: C,
}

impl PhasePoint {
    pub fn new(state: [C; 4], t: C, s: C) -> Self {
        PhasePoint { state, t, s }
    }

    pub fn time(&self, v: Var) -> C {
        if v == Var::S {
            self.s
        } else {
            self.t
        }
    }

    fn value(&self, v: Var) -> Option<C> {
        match v {
            Var::Q1 => Some(self.state[0]),
            Var::P1 => Some(self.state[1]),
            Var::Q2 => Some(self.state[2]),
            Var::P2 => Some(self.state[3]),
            Var::T => Some(self.t),
            Var::S => Some(self.s),
            _ => None,
        }
    }

    /// Evaluates an expression in `(q1, p1, q2, p2, t, s)` at this point.
    pub fn eval(&self, e: &RationalExpr) -> Result<C, FlowError> {
        self.eval_with(e, &[])
    }

    /// As [`PhasePoint::eval`] with extra bindings, e.g. `eta`.
    pub fn eval_with(&self, e: &RationalExpr, extra: &[(Var, C)]) -> Result<C, FlowError> {
        let lookup = |v: Var| self.value(v).or_else(|| extra.iter().find(|(w, _)| *w == v).map(|(_, x)| *x));
        e.eval_complex(&lookup).map_err(|err| match err {
            crate::exactalg::AlgebraError::UnboundVariable(v) => FlowError::NotNumeric(v),
            _ => FlowError::StepFailure { at: self.t, step: 0.0 },
        })
    }

    /// Max-norm distance of the states.
    pub fn distance(&self, other: &PhasePoint) -> f64 {
        self.state.iter().zip(&other.state).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }
}

/// One straight segment moving a single time to `to`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Leg {
    /// `Var::T` (flow of `H1`) or `Var::S` (flow of `H2`).
    pub time: Var,
    pub to: C,
}

impl Leg {
    pub fn t(to: C) -> Self {
        Leg { time: Var::T, to }
    }

    pub fn s(to: C) -> Self {
        Leg { time: Var::S, to }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
    /// Largest step, in units of time.
    pub max_step: f64,
    /// Minimum distance of either time from `{0, 1, eta}` and of `t` from `s`.
    pub margin: f64,
    pub max_steps: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { rtol: 1e-10, atol: 1e-12, max_step: 0.05, margin: 0.05, max_steps: 100_000 }
    }
}

#[derive(Debug, Clone)]
pub struct FlowPath {
    pub legs: Vec<Leg>,
    pub tol: Tolerances,
}

/// A polynomial in `(q1, p1, q2, p2, t, s)` with complex coefficients.
#[derive(Debug, Clone)]
struct DensePoly {
    terms: Vec<(C, [u8; 6])>,
    max_exp: [u8; 6],
}

const ORDER: [Var; 6] = [Var::Q1, Var::P1, Var::Q2, Var::P2, Var::T, Var::S];

impl DensePoly {
    fn compile(p: &MultiPoly) -> Result<Self, FlowError> {
        let mut terms = Vec::with_capacity(p.len());
        let mut max_exp = [0u8; 6];
        for (m, c) in p.terms() {
            let mut e = [0u8; 6];
            for (v, k) in m.support() {
                let i = ORDER.iter().position(|w| *w == v).ok_or(FlowError::NotNumeric(v))?;
                e[i] = k;
                max_exp[i] = max_exp[i].max(k);
            }
            terms.push((c.to_complex(), e));
        }
        Ok(DensePoly { terms, max_exp })
    }

    fn eval(&self, powers: &[Vec<C>; 6]) -> C {
        let mut acc = C::new(0.0, 0.0);
        for (c, e) in &self.terms {
            let mut x = *c;
            for i in 0..6 {
                if e[i] > 0 {
                    x *= powers[i][e[i] as usize];
                }
            }
            acc += x;
        }
        acc
    }
}

#[derive(Debug, Clone)]
struct DenseRational {
    num: DensePoly,
    den: DensePoly,
}

impl DenseRational {
    fn compile(e: &RationalExpr) -> Result<Self, FlowError> {
        Ok(DenseRational { num: DensePoly::compile(e.num())?, den: DensePoly::compile(e.den())? })
    }
}

/// The system's vector field compiled for fast complex evaluation.
#[derive(Debug, Clone)]
pub struct NumericSystem {
    dt: [DenseRational; 4],
    ds: [DenseRational; 4],
    max_exp: [u8; 6],
    pub eta: C,
}

impl NumericSystem {
    /// Requires numeric parameters and `eta`.
    pub fn new(sys: &HamiltonianSystem) -> Result<Self, FlowError> {
        let eta = sys.params.eta.as_constant().ok_or(FlowError::NotNumeric(Var::ETA))?.to_complex();
        let field = vector_field(sys);
        let compile = |comps: &[RationalExpr; 4]| -> Result<[DenseRational; 4], FlowError> {
            let v: Vec<DenseRational> = comps.iter().map(DenseRational::compile).collect::<Result<_, _>>()?;
            Ok(v.try_into().unwrap_or_else(|_| unreachable!()))
        };
        let dt = compile(&field.dt)?;
        let ds = compile(&field.ds)?;
        let mut max_exp = [0u8; 6];
        for r in dt.iter().chain(&ds) {
            for i in 0..6 {
                max_exp[i] = max_exp[i].max(r.num.max_exp[i]).max(r.den.max_exp[i]);
            }
        }
        Ok(NumericSystem { dt, ds, max_exp, eta })
    }

    /// `d(q1, p1, q2, p2)/d(time)` at a point.
    pub fn rhs(&self, time: Var, p: &PhasePoint) -> [C; 4] {
        let vals = [p.state[0], p.state[1], p.state[2], p.state[3], p.t, p.s];
        let powers: [Vec<C>; 6] = core::array::from_fn(|i| {
            let mut v = Vec::with_capacity(self.max_exp[i] as usize + 1);
            let mut x = C::new(1.0, 0.0);
            for _ in 0..=self.max_exp[i] {
                v.push(x);
                x *= vals[i];
            }
            v
        });
        let comps = if time == Var::S { &self.ds } else { &self.dt };
        core::array::from_fn(|k| comps[k].num.eval(&powers) / comps[k].den.eval(&powers))
    }

    fn check_margin(&self, p: &PhasePoint, margin: f64) -> Result<(), FlowError> {
        let bad = [C::new(0.0, 0.0), C::new(1.0, 0.0), self.eta];
        for (v, x) in [(Var::T, p.t), (Var::S, p.s)] {
            if bad.iter().any(|b| (x - b).norm() < margin) {
                return Err(FlowError::SingularityApproach { time: v, at: x });
            }
        }
        if (p.t - p.s).norm() < margin {
            return Err(FlowError::SingularityApproach { time: Var::T, at: p.t });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
}

// Dormand–Prince 5(4) tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn axpy<const N: usize>(y: &[C; N], terms: &[(f64, &[C; N])], h: f64) -> [C; N] {
    core::array::from_fn(|i| y[i] + terms.iter().map(|(a, k)| k[i] * (a * h)).sum::<C>())
}

/// Adaptive Dormand–Prince integration of `dy/dx = f(x, y)` for real `x`
/// from 0 to `length`.
///
/// `observe` sees every accepted step and may stop the integration early by
/// returning `false`.
pub fn dopri5<const N: usize>(
    mut f: impl FnMut(f64, &[C; N]) -> Result<[C; N], FlowError>,
    y0: [C; N],
    length: f64,
    tol: &Tolerances,
    mut observe: impl FnMut(f64, &[C; N]) -> Result<bool, FlowError>,
) -> Result<([C; N], f64, StepStats), FlowError> {
    let mut stats = StepStats::default();
    let mut x = 0.0;
    let mut y = y0;
    if length == 0.0 {
        return Ok((y, x, stats));
    }
    let mut k1 = f(x, &y)?;
    let mut h = tol.max_step.min(length).min(1e-3 * length.max(1.0));
    let h_min = 1e-13 * length.max(1.0);
    while x < length {
        if stats.accepted + stats.rejected >= tol.max_steps {
            return Err(FlowError::StepFailure { at: C::new(x, 0.0), step: h });
        }
        let last = x + h >= length;
        if last {
            h = length - x;
        }
        let k2 = f(x + C2 * h, &axpy(&y, &[(A21, &k1)], h))?;
        let k3 = f(x + C3 * h, &axpy(&y, &[(A31, &k1), (A32, &k2)], h))?;
        let k4 = f(x + C4 * h, &axpy(&y, &[(A41, &k1), (A42, &k2), (A43, &k3)], h))?;
        let k5 = f(x + C5 * h, &axpy(&y, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)], h))?;
        let k6 = f(x + h, &axpy(&y, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)], h))?;
        let y_new = axpy(&y, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)], h);
        let k7 = f(x + h, &y_new)?;
        let mut err = 0.0;
        let mut finite = true;
        for i in 0..N {
            let e = (k1[i] * E1 + k3[i] * E3 + k4[i] * E4 + k5[i] * E5 + k6[i] * E6 + k7[i] * E7) * h;
            let sc = tol.atol + tol.rtol * y[i].norm().max(y_new[i].norm());
            let r = e.norm() / sc;
            finite &= r.is_finite() && y_new[i].re.is_finite() && y_new[i].im.is_finite();
            err += r * r;
        }
        let err = (err / N as f64).sqrt();
        if finite && err <= 1.0 {
            x = if last { length } else { x + h };
            y = y_new;
            k1 = k7;
            stats.accepted += 1;
            if !observe(x, &y)? {
                return Ok((y, x, stats));
            }
            let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            h = (h * fac).min(tol.max_step);
        } else {
            stats.rejected += 1;
            h *= if finite { (0.9 * err.powf(-0.2)).clamp(0.2, 1.0) } else { 0.2 };
        }
        if h < h_min {
            return Err(FlowError::StepFailure { at: C::new(x, 0.0), step: h });
        }
    }
    Ok((y, x, stats))
}

/// Endpoint of one leg plus the accepted intermediate points.
#[derive(Debug, Clone)]
pub struct LegOutcome {
    pub end: PhasePoint,
    pub samples: Vec<PhasePoint>,
    pub stats: StepStats,
    /// True if `stop` ended the leg before its endpoint.
    pub stopped_early: bool,
}

fn point_on_leg(start: &PhasePoint, leg: &Leg, dir: C, x: f64, y: [C; 4]) -> PhasePoint {
    let mut p = PhasePoint { state: y, ..*start };
    let moved = start.time(leg.time) + dir * x;
    if leg.time == Var::S {
        p.s = moved;
    } else {
        p.t = moved;
    }
    p
}

/// Integrates one leg, checking the margin at every stage evaluation.
pub fn integrate_leg(
    sys: &NumericSystem,
    start: &PhasePoint,
    leg: &Leg,
    tol: &Tolerances,
) -> Result<LegOutcome, FlowError> {
    integrate_leg_until(sys, start, leg, tol, |_| false)
}

/// As [`integrate_leg`], stopping at the first accepted point where `stop` holds.
pub fn integrate_leg_until(
    sys: &NumericSystem,
    start: &PhasePoint,
    leg: &Leg,
    tol: &Tolerances,
    mut stop: impl FnMut(&PhasePoint) -> bool,
) -> Result<LegOutcome, FlowError> {
    sys.check_margin(start, tol.margin)?;
    let delta = leg.to - start.time(leg.time);
    let length = delta.norm();
    let mut samples = Vec::new();
    if length == 0.0 {
        return Ok(LegOutcome { end: *start, samples, stats: StepStats::default(), stopped_early: false });
    }
    let dir = delta / length;
    let rhs = |x: f64, y: &[C; 4]| {
        let p = point_on_leg(start, leg, dir, x, *y);
        sys.check_margin(&p, tol.margin)?;
        Ok(sys.rhs(leg.time, &p).map(|d| d * dir))
    };
    let mut stopped = false;
    let observe = |x: f64, y: &[C; 4]| {
        let p = point_on_leg(start, leg, dir, x, *y);
        samples.push(p);
        stopped = stop(&p);
        Ok(!stopped)
    };
    let (y, x, stats) = dopri5(rhs, start.state, length, tol, observe)?;
    let mut end = point_on_leg(start, leg, dir, x, y);
    if !stopped {
        // Land exactly on the requested time.
        if leg.time == Var::S {
            end.s = leg.to;
        } else {
            end.t = leg.to;
        }
    }
    Ok(LegOutcome { end, samples, stats, stopped_early: stopped })
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub points: Vec<PhasePoint>,
    pub end: PhasePoint,
    pub stats: StepStats,
}

pub fn integrate_path(sys: &NumericSystem, start: &PhasePoint, path: &FlowPath) -> Result<Trajectory, FlowError> {
    let mut points = alloc::vec![*start];
    let mut cur = *start;
    let mut stats = StepStats::default();
    for leg in &path.legs {
        let out = integrate_leg(sys, &cur, leg, &path.tol)?;
        points.extend(out.samples);
        stats.accepted += out.stats.accepted;
        stats.rejected += out.stats.rejected;
        cur = out.end;
    }
    Ok(Trajectory { points, end: cur, stats })
}

/// Max-norm distance between "t-leg then s-leg" and "s-leg then t-leg".
pub fn commutativity_check(
    sys: &NumericSystem,
    start: &PhasePoint,
    dt: C,
    ds: C,
    tol: &Tolerances,
) -> Result<f64, FlowError> {
    let (t1, s1) = (start.t + dt, start.s + ds);
    let a = integrate_leg(sys, start, &Leg::t(t1), tol)?.end;
    let a = integrate_leg(sys, &a, &Leg::s(s1), tol)?.end;
    let b = integrate_leg(sys, start, &Leg::s(s1), tol)?.end;
    let b = integrate_leg(sys, &b, &Leg::t(t1), tol)?.end;
    Ok(a.distance(&b))
}

/// Largest absolute value of the divisor's defining polynomials along the path.
pub fn divisor_drift(
    sys: &NumericSystem,
    divisor: &InvariantDivisor,
    start: &PhasePoint,
    path: &FlowPath,
) -> Result<f64, FlowError> {
    let traj = integrate_path(sys, start, path)?;
    let mut drift: f64 = 0.0;
    for p in traj.points.iter().chain(core::iter::once(&traj.end)) {
        for f in &divisor.polys {
            drift = drift.max(p.eval_with(f, &[(Var::ETA, sys.eta)])?.norm());
        }
    }
    Ok(drift)
}

/// `y(t) ~ residue / (t - t_star) + constant`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoleFit {
    pub t_star: C,
    pub residue: C,
    pub constant: C,
}

/// Least-squares fit of a simple pole to samples `(t_i, y_i)`.
///
/// The model `y (t - t*) = a + b (t - t*)` is linear in
/// `(a - b t*, b, t*)` once written as `y t = c0 + b t + t* y`.
pub fn fit_simple_pole(samples: &[(C, C)]) -> Result<PoleFit, FlowError> {
    if samples.len() < 3 {
        return Err(FlowError::NoPoleDetected);
    }
    // Normal equations A^H A x = A^H r with rows (1, t, y) and r = y t.
    let mut m = [[C::new(0.0, 0.0); 3]; 3];
    let mut rhs = [C::new(0.0, 0.0); 3];
    for (t, y) in samples {
        let row = [C::new(1.0, 0.0), *t, *y];
        let r = y * t;
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] += row[i].conj() * row[j];
            }
            rhs[i] += row[i].conj() * r;
        }
    }
    let x = solve3(m, rhs).ok_or(FlowError::NoPoleDetected)?;
    let (c0, b, t_star) = (x[0], x[1], x[2]);
    Ok(PoleFit { t_star, residue: c0 + b * t_star, constant: b })
}

fn solve3(mut m: [[C; 3]; 3], mut r: [C; 3]) -> Option<[C; 3]> {
    for col in 0..3 {
        let piv = (col..3).max_by(|a, b| m[*a][col].norm().total_cmp(&m[*b][col].norm()))?;
        if m[piv][col].norm() == 0.0 {
            return None;
        }
        m.swap(col, piv);
        r.swap(col, piv);
        for row in col + 1..3 {
            let f = m[row][col] / m[col][col];
            for k in col..3 {
                let v = m[col][k];
                m[row][k] -= f * v;
            }
            let v = r[col];
            r[row] -= f * v;
        }
    }
    let mut x = [C::new(0.0, 0.0); 3];
    for i in (0..3).rev() {
        let s: C = (i + 1..3).map(|k| m[i][k] * x[k]).sum();
        x[i] = (r[i] - s) / m[i][i];
    }
    Some(x)
}

/// Pole of `p1` met on a `t`-leg, with the position of the other coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidueReport {
    pub fit: PoleFit,
    /// `q1` and `q2` at the last accepted point before the pole.
    pub q_at_pole: [C; 2],
    pub samples_used: usize,
}

/// Integrates a `t`-leg until `|p1|` exceeds `threshold` or the step size
/// collapses, then fits `p1 ~ a / (t - t*)` to the samples with
/// `|p1| > threshold / 100`.
pub fn residue_probe(
    sys: &NumericSystem,
    start: &PhasePoint,
    to: C,
    threshold: f64,
    tol: &Tolerances,
) -> Result<ResidueReport, FlowError> {
    let leg = Leg::t(to);
    let samples = match integrate_leg_until(sys, start, &leg, tol, |p| p.state[1].norm() > threshold) {
        Ok(out) if out.stopped_early => out.samples,
        Ok(_) => return Err(FlowError::NoPoleDetected),
        Err(FlowError::StepFailure { .. }) => {
            // Step collapse: rerun to collect what was accepted.
            let mut kept = Vec::new();
            let _ = integrate_leg_until(sys, start, &leg, tol, |p| {
                kept.push(*p);
                false
            });
            kept
        }
        Err(e) => return Err(e),
    };
    let near: Vec<&PhasePoint> = samples.iter().filter(|p| p.state[1].norm() > threshold / 100.0).collect();
    let last = near.last().ok_or(FlowError::NoPoleDetected)?;
    let pts: Vec<(C, C)> = near.iter().map(|p| (p.t, p.state[1])).collect();
    let fit = fit_simple_pole(&pts)?;
    Ok(ResidueReport { fit, q_at_pole: [last.state[0], last.state[2]], samples_used: pts.len() })
}

/// Generic rational parameters on the relation: `a1..a5` fixed, `a0` solved.
pub fn generic_parameters() -> ParameterSet {
    let rest = [Scalar::ratio(1, 7), Scalar::ratio(2, 9), Scalar::ratio(3, 11), Scalar::ratio(1, 13), Scalar::ratio(1, 17)];
    let mut alpha = [Scalar::zero(), rest[0].clone(), rest[1].clone(), rest[2].clone(), rest[3].clone(), rest[4].clone()];
    alpha[0] = solve_relation(&alpha, 0);
    ParameterSet::numeric(alpha, Scalar::from_int(2)).expect("on the relation")
}

/// [`generic_parameters`] with `a_i = 0`, the relation restored through `a0`
/// (or `a1` when `i = 0`).
pub fn triggered_numeric(i: usize) -> ParameterSet {
    let mut alpha = generic_parameters().alpha.map(|a| a.as_constant().unwrap());
    alpha[i] = Scalar::zero();
    let k = if i == 0 { 1 } else { 0 };
    alpha[k] = solve_relation(&alpha, k);
    ParameterSet::numeric(alpha, Scalar::from_int(2)).expect("on the relation")
}

fn solve_relation(alpha: &[Scalar; 6], k: usize) -> Scalar {
    let vals: Vec<(Var, Scalar)> = (0..6).filter(|i| *i != k).map(|i| (Var::alpha(i), alpha[i].clone())).collect();
    relation_solution(k).eval_at(&vals).expect("linear in the parameters")
}

/// `t0 = 7/3`, `s0 = 11/5`.
pub fn default_base() -> (C, C) {
    (C::new(7.0 / 3.0, 0.0), C::new(11.0 / 5.0, 0.0))
}
