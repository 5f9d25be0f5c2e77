//! Accessible singularities on the boundary charts, their local index, the
//! α-test closed forms and the blow-ups that resolve the loci `C0..C3`.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::charts::{chart_inverse, ChartMap, ChartName};
use crate::exactalg::{expr, MultiPoly, RationalExpr, Scalar, Var};
use crate::model::{vector_field, HamiltonianSystem, VectorField};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SingularError {
    #[error("zero set is not a union of the expected lines: {0}")]
    NonAlgebraicLocus(String),
    #[error("field is not of logarithmic type along the boundary: {0}")]
    NotLogarithmic(String),
    #[error("point is not an accessible singularity: {0}")]
    NotAccessible(String),
    #[error("no coordinate permutation makes the linear part lower triangular")]
    NotTriangularizable {
        matrix: Vec<Vec<RationalExpr>>,
        /// Coefficients of `det(x I - M)`, constant term first.
        charpoly: Vec<RationalExpr>,
    },
    #[error("matrix is not lower triangular")]
    NotLowerTriangular,
    #[error("leading eigenvalue a11 vanishes")]
    DegenerateLeadingEigenvalue,
    #[error("transformed field still has a pole over the center: {0}")]
    ResidualSingularity(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BoundaryName {
    X3,
    X4,
}

impl BoundaryName {
    pub const ALL: [BoundaryName; 2] = [BoundaryName::X3, BoundaryName::X4];

    pub fn as_str(self) -> &'static str {
        match self {
            BoundaryName::X3 => "X3",
            BoundaryName::X4 => "X4",
        }
    }
}

impl fmt::Display for BoundaryName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown boundary chart `{0}` (expected X3 or X4)")]
pub struct UnknownBoundary(pub String);

impl FromStr for BoundaryName {
    type Err = UnknownBoundary;
    fn from_str(s: &str) -> Result<Self, UnknownBoundary> {
        match s {
            "X3" | "x3" => Ok(BoundaryName::X3),
            "X4" | "x4" => Ok(BoundaryName::X4),
            _ => Err(UnknownBoundary(s.to_string())),
        }
    }
}

/// One of the two affine charts covering the boundary at `p = infinity`.
#[derive(Debug, Clone)]
pub struct BoundaryChart {
    pub name: BoundaryName,
    /// `(X, Y, Z, W)`.
    pub vars: [Var; 4],
    /// Chart coordinates as functions of `(q1, p1, q2, p2)`.
    pub forward: Vec<(Var, RationalExpr)>,
    /// `(q1, p1, q2, p2)` as functions of the chart coordinates.
    pub inverse: Vec<(Var, RationalExpr)>,
    /// The coordinate whose zero set is the boundary (`Y3` or `W4`).
    pub boundary: Var,
    /// The coordinate running along the singular lines (`W3` or `Y4`).
    pub fiber: Var,
}

pub fn boundary_chart(name: BoundaryName) -> BoundaryChart {
    let (vars, fwd, inv, boundary, fiber) = match name {
        BoundaryName::X3 => (
            [Var::X3, Var::Y3, Var::Z3, Var::W3],
            ["q1", "1/p1", "q2", "p2/p1"],
            ["X3", "1/Y3", "Z3", "W3/Y3"],
            Var::Y3,
            Var::W3,
        ),
        BoundaryName::X4 => (
            [Var::X4, Var::Y4, Var::Z4, Var::W4],
            ["q1", "p1/p2", "q2", "1/p2"],
            ["X4", "Y4/W4", "Z4", "1/W4"],
            Var::W4,
            Var::Y4,
        ),
    };
    BoundaryChart {
        name,
        vars,
        forward: vars.iter().zip(fwd).map(|(v, e)| (*v, expr(e))).collect(),
        inverse: Var::STATE.iter().zip(inv).map(|(v, e)| (*v, expr(e))).collect(),
        boundary,
        fiber,
    }
}

impl BoundaryChart {
    /// The change of variables read as a map of `(q1, p1, q2, p2)` to itself,
    /// applied twice, is the identity.
    pub fn is_involutive(&self) -> bool {
        let as_state: Vec<(Var, RationalExpr)> =
            Var::STATE.iter().zip(&self.forward).map(|(v, (_, e))| (*v, e.clone())).collect();
        as_state.iter().zip(Var::STATE).all(|((_, e), v)| {
            e.substitute(&as_state).is_ok_and(|twice| twice.equals(&RationalExpr::var(v)))
        })
    }

    pub fn check_round_trip(&self) -> bool {
        let there = self
            .forward
            .iter()
            .all(|(v, f)| f.substitute(&self.inverse).is_ok_and(|b| b.equals(&RationalExpr::var(*v))));
        let back = self
            .inverse
            .iter()
            .all(|(v, g)| g.substitute(&self.forward).is_ok_and(|b| b.equals(&RationalExpr::var(*v))));
        there && back
    }

    fn position(&self, v: Var) -> usize {
        self.vars.iter().position(|w| *w == v).expect("variable of this chart")
    }
}

/// Pushes a field on `(q1, p1, q2, p2)` through `forward`, expressing the
/// result in `vars` through `inverse`. `forward` may depend on the times.
fn pushforward(
    field: &VectorField,
    vars: [Var; 4],
    forward: &[RationalExpr; 4],
    inverse: &[(Var, RationalExpr)],
) -> VectorField {
    let along = |time: Var| {
        forward.clone().map(|phi| {
            field.lie_derivative(&phi, time).substitute(inverse).expect("chart inverse has nonzero denominators")
        })
    };
    VectorField { vars, dt: along(Var::T), ds: along(Var::S) }
}

/// The system's vector field in boundary-chart coordinates, for both times.
pub fn to_boundary_chart(sys: &HamiltonianSystem, chart: &BoundaryChart) -> VectorField {
    let fwd = core::array::from_fn(|k| chart.forward[k].1.clone());
    pushforward(&vector_field(sys), chart.vars, &fwd, &chart.inverse)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum LocusName {
    C0,
    C1,
    C2,
    C3,
}

impl LocusName {
    pub const ALL: [LocusName; 4] = [LocusName::C0, LocusName::C1, LocusName::C2, LocusName::C3];

    pub fn as_str(self) -> &'static str {
        ["C0", "C1", "C2", "C3"][self as usize]
    }

    /// `(X, Z)` on the boundary.
    pub fn base(self) -> [RationalExpr; 2] {
        let [x, z] = [["t", "s"], ["eta", "eta"], ["1", "1"], ["0", "0"]][self as usize];
        [expr(x), expr(z)]
    }

    /// Index `k` of the parameter `a_k` in the Step-2 center.
    pub fn alpha_index(self) -> usize {
        [0, 1, 3, 4][self as usize]
    }

    /// The canonical chart the blow-up over this locus produces.
    pub fn chart(self) -> ChartName {
        [ChartName::R0, ChartName::R1, ChartName::R3, ChartName::R4][self as usize]
    }
}

impl fmt::Display for LocusName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown locus `{0}` (expected C0..C3)")]
pub struct UnknownLocus(pub String);

impl FromStr for LocusName {
    type Err = UnknownLocus;
    fn from_str(s: &str) -> Result<Self, UnknownLocus> {
        match s {
            "C0" | "c0" => Ok(LocusName::C0),
            "C1" | "c1" => Ok(LocusName::C1),
            "C2" | "c2" => Ok(LocusName::C2),
            "C3" | "c3" => Ok(LocusName::C3),
            _ => Err(UnknownLocus(s.to_string())),
        }
    }
}

/// A component of the accessible-singular set in one boundary chart.
#[derive(Debug, Clone)]
pub struct SingularLocus {
    /// Matching entry of `C0..C3`, if any.
    pub name: Option<LocusName>,
    pub chart: BoundaryName,
    /// `var = value` equations cutting out the locus.
    pub equations: Vec<(Var, RationalExpr)>,
    /// Chart coordinates left free along the locus.
    pub free: Vec<Var>,
}

impl fmt::Display for SingularLocus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let eqs: Vec<String> = self.equations.iter().map(|(v, e)| format!("{v} = {e}")).collect();
        write!(f, "{}", eqs.join(", "))
    }
}

/// Multiplies a component by the boundary variable and checks no pole along
/// the boundary is left.
fn times_boundary(e: &RationalExpr, b: Var) -> Result<RationalExpr, SingularError> {
    let g = e * &RationalExpr::var(b);
    if g.den().contains_var(b) {
        return Err(SingularError::NotLogarithmic(format!("{b}*({e}) still has a pole")));
    }
    Ok(g)
}

/// `g_i = x1 * F_i` restricted to `x1 = 0`, for the non-boundary components of
/// both flows.
fn boundary_numerators(field: &VectorField, b: Var) -> Result<Vec<RationalExpr>, SingularError> {
    let zero = [(b, Scalar::zero())];
    let mut out = Vec::new();
    for comps in [&field.dt, &field.ds] {
        for (v, e) in field.vars.iter().zip(comps) {
            if *v == b {
                continue;
            }
            let g = times_boundary(e, b)?;
            out.push(g.substitute_scalars(&zero).expect("no pole along the boundary"));
        }
    }
    Ok(out)
}

fn candidate_roots() -> [RationalExpr; 5] {
    ["0", "1", "eta", "t", "s"].map(expr)
}

type Assignment = Vec<(Var, RationalExpr)>;

/// Candidate roots of `p` in `u` and the cofactor left after removing them.
fn candidate_factors(p: &MultiPoly, u: Var) -> (Vec<RationalExpr>, MultiPoly) {
    let mut rest = p.clone();
    let mut roots = Vec::new();
    for c in candidate_roots() {
        let factor = &MultiPoly::var(u) - c.num();
        let mut hit = false;
        while let Some(q) = rest.div_exact(&factor) {
            rest = q;
            hit = true;
        }
        if hit {
            roots.push(c);
        }
    }
    (roots, rest)
}

/// Solves polynomial equations for `unknowns`, looking for roots among
/// `0, 1, eta, t, s` of a univariate equation at each stage. Unknowns never
/// constrained are left out of the assignment.
fn solve_candidates(eqs: &[MultiPoly], unknowns: &[Var]) -> Result<Vec<Assignment>, SingularError> {
    let eqs: Vec<&MultiPoly> = eqs.iter().filter(|p| !p.is_zero()).collect();
    if eqs.iter().any(|p| !p.contains_any(unknowns)) {
        return Ok(Vec::new());
    }
    if eqs.is_empty() {
        return Ok(vec![Vec::new()]);
    }
    // A univariate equation whose roots are all candidates bounds the
    // solutions in that unknown; the other equations filter them below.
    let mut univariate: Vec<(Var, &MultiPoly)> = eqs
        .iter()
        .filter_map(|p| {
            let present: Vec<Var> = unknowns.iter().copied().filter(|u| p.contains_var(*u)).collect();
            (present.len() == 1).then(|| (present[0], *p))
        })
        .collect();
    if univariate.is_empty() {
        return Err(SingularError::NonAlgebraicLocus(format!("no univariate equation in {unknowns:?}")));
    }
    univariate.sort_by_key(|(u, p)| p.max_exp(*u));
    let mut chosen = None;
    let mut witness = None;
    for (u, p) in univariate {
        let (roots, rest) = candidate_factors(p, u);
        if rest.contains_var(u) {
            witness.get_or_insert((u, rest));
        } else {
            chosen = Some((u, roots));
            break;
        }
    }
    let Some((u, roots)) = chosen else {
        let (u, rest) = witness.unwrap();
        return Err(SingularError::NonAlgebraicLocus(format!("{u}: factor {rest} has roots outside 0, 1, eta, t, s")));
    };
    let others: Vec<Var> = unknowns.iter().copied().filter(|v| *v != u).collect();
    let mut out = Vec::new();
    for c in roots {
        let bind = [(u, c.clone())];
        let reduced: Vec<MultiPoly> = eqs
            .iter()
            .map(|p| RationalExpr::from_poly((*p).clone()).substitute(&bind).unwrap().into_parts().0)
            .collect();
        for mut sol in solve_candidates(&reduced, &others)? {
            sol.insert(0, (u, c.clone()));
            out.push(sol);
        }
    }
    Ok(out)
}

/// The accessible-singular lines of `field` on the boundary of `chart`:
/// curves in `x1 = 0` along one chart coordinate on which every `g_i`
/// (`i >= 2`) vanishes for both flows. Each non-boundary coordinate is tried
/// as the free direction; isolated points are not searched for.
pub fn find_accessible_singularities(
    field: &VectorField,
    chart: &BoundaryChart,
) -> Result<Vec<SingularLocus>, SingularError> {
    let gs = boundary_numerators(field, chart.boundary)?;
    for g in &gs {
        if g.den().contains_any(&chart.vars) {
            return Err(SingularError::NotLogarithmic(format!("pole {} inside the boundary", g.den())));
        }
    }
    let [x, _, z, _] = chart.vars;
    let mut directions = vec![chart.fiber];
    directions.extend(chart.vars.iter().copied().filter(|v| *v != chart.boundary && *v != chart.fiber));
    let mut loci: Vec<SingularLocus> = Vec::new();
    for dir in directions {
        let eqs: Vec<MultiPoly> = gs.iter().flat_map(|g| g.num().coefficients_in(dir)).collect();
        let unknowns: Vec<Var> = chart.vars.iter().copied().filter(|v| *v != chart.boundary && *v != dir).collect();
        for sol in solve_candidates(&eqs, &unknowns)? {
            let value = |v: Var| sol.iter().find(|(w, _)| *w == v).map(|(_, e)| e.clone());
            let mut equations = Vec::new();
            let mut free = vec![dir];
            for v in &unknowns {
                match value(*v) {
                    Some(e) => equations.push((*v, e)),
                    None => free.push(*v),
                }
            }
            equations.push((chart.boundary, RationalExpr::zero()));
            free.sort();
            let seen = loci.iter().any(|l| {
                l.free == free
                    && l.equations.len() == equations.len()
                    && l.equations.iter().zip(&equations).all(|((v, e), (w, f))| v == w && e.equals(f))
            });
            if seen {
                continue;
            }
            let name = (dir == chart.fiber)
                .then(|| {
                    LocusName::ALL.into_iter().find(|l| {
                        let [bx, bz] = l.base();
                        value(x).is_some_and(|e| e.equals(&bx)) && value(z).is_some_and(|e| e.equals(&bz))
                    })
                })
                .flatten();
            loci.push(SingularLocus { name, chart: chart.name, equations, free });
        }
    }
    loci.sort_by_key(|l| (l.name.is_none(), l.name));
    Ok(loci)
}

/// Linear part of `x1 * field` at a point of a locus.
#[derive(Debug, Clone)]
pub struct LocalIndexReport {
    pub locus: LocusName,
    pub chart: BoundaryName,
    /// The base point in chart coordinates (fiber coordinate at 0).
    pub point: Vec<(Var, RationalExpr)>,
    /// Linear part in the chart order `(X, Y, Z, W)` after recentering.
    pub matrix: Vec<Vec<RationalExpr>>,
    /// A reordering of the coordinates making `matrix` lower triangular,
    /// with the boundary coordinate first when possible.
    pub triangular_order: [usize; 4],
    /// Diagonal in chart order.
    pub index: Vec<RationalExpr>,
    /// `index` divided by the boundary eigenvalue, i.e. for the boundary
    /// coordinate rescaled so that it leaves the boundary at unit speed.
    pub normalized_index: Vec<RationalExpr>,
    /// `index[i] / index[0]`.
    pub ratios: Vec<RationalExpr>,
    /// `Some(true)` iff every ratio is an integer; `None` if some ratio is symbolic.
    pub integral: Option<bool>,
    /// Diagonal in `triangular_order` divided by its first entry.
    pub boundary_ratios: Vec<RationalExpr>,
    pub boundary_integral: Option<bool>,
}

impl LocalIndexReport {
    /// The linear part in `triangular_order`.
    pub fn triangular_matrix(&self) -> Vec<Vec<RationalExpr>> {
        let o = self.triangular_order;
        (0..4).map(|i| (0..4).map(|j| self.matrix[o[i]][o[j]].clone()).collect()).collect()
    }

    /// The triangular matrix with the times and other symbols fixed, as fed
    /// to the α-test.
    pub fn reduced_matrix(&self, vals: &[(Var, Scalar)]) -> Vec<Vec<RationalExpr>> {
        self.triangular_matrix()
            .into_iter()
            .map(|row| row.into_iter().map(|e| e.substitute_scalars(vals).expect("generic point")).collect())
            .collect()
    }
}

/// Generic times for numeric specializations.
pub fn default_times() -> [(Var, Scalar); 2] {
    [(Var::T, Scalar::ratio(7, 3)), (Var::S, Scalar::ratio(11, 5))]
}

fn integral(ratios: &[RationalExpr]) -> Option<bool> {
    let mut all = true;
    for r in ratios {
        all &= r.as_constant()?.is_integer();
    }
    Some(all)
}

/// Cancels the linear factors in `t, s, eta` that the field's denominators
/// are built from, and reduces to a polynomial when the denominator divides.
fn tidy(e: &RationalExpr) -> RationalExpr {
    let hints: Vec<MultiPoly> = ["t", "s", "eta", "t - 1", "s - 1", "eta - 1", "t - eta", "s - eta", "t - s"]
        .map(|h| expr(h).num().clone())
        .to_vec();
    let e = e.cancel_hints(&hints);
    match e.num().div_exact(e.den()) {
        Some(q) => RationalExpr::from_poly(q),
        None => e,
    }
}

fn ratios_of(diag: &[RationalExpr], k: usize) -> Vec<RationalExpr> {
    if diag[k].is_zero() {
        return Vec::new();
    }
    diag.iter().map(|d| tidy(&(d / &diag[k]))).collect()
}

fn permutations4() -> Vec<[usize; 4]> {
    let mut out = Vec::new();
    for a in 0..4 {
        for b in 0..4 {
            for c in 0..4 {
                for d in 0..4 {
                    let p = [a, b, c, d];
                    if (0..4).all(|i| (0..i).all(|j| p[i] != p[j])) {
                        out.push(p);
                    }
                }
            }
        }
    }
    out
}

fn matmul(a: &[Vec<RationalExpr>], b: &[Vec<RationalExpr>]) -> Vec<Vec<RationalExpr>> {
    let n = a.len();
    (0..n)
        .map(|i| {
            (0..n).map(|j| (0..n).fold(RationalExpr::zero(), |acc, k| &acc + &(&a[i][k] * &b[k][j]))).collect()
        })
        .collect()
}

/// Coefficients `c_0..c_n` of `det(x I - M)` by Faddeev–LeVerrier.
pub fn characteristic_polynomial(m: &[Vec<RationalExpr>]) -> Vec<RationalExpr> {
    let n = m.len();
    let mut c = vec![RationalExpr::zero(); n + 1];
    c[n] = RationalExpr::one();
    let mut mk = vec![vec![RationalExpr::zero(); n]; n];
    for k in 1..=n {
        let mut next = matmul(m, &mk);
        for (i, row) in next.iter_mut().enumerate() {
            row[i] = &row[i] + &c[n - k + 1];
        }
        let am = matmul(m, &next);
        let tr = (0..n).fold(RationalExpr::zero(), |acc, i| &acc + &am[i][i]);
        c[n - k] = -tr.scale(&Scalar::ratio(1, k as i64));
        mk = next;
    }
    c
}

/// Local index at the point of `locus` with fiber coordinate 0, along `t`.
pub fn local_index_at(
    field: &VectorField,
    chart: &BoundaryChart,
    locus: LocusName,
) -> Result<LocalIndexReport, SingularError> {
    local_index_along(field, chart, locus, Var::T)
}

pub fn local_index_along(
    field: &VectorField,
    chart: &BoundaryChart,
    locus: LocusName,
    time: Var,
) -> Result<LocalIndexReport, SingularError> {
    let [x, _, z, _] = chart.vars;
    let [cx, cz] = locus.base();
    // Recentre: x' = x - c(t, s), so dx'/dtime = F_x - dc/dtime.
    let shift = [(x, &RationalExpr::var(x) + &cx), (z, &RationalExpr::var(z) + &cz)];
    let comps = field.along(time);
    let origin: Vec<(Var, Scalar)> = chart.vars.iter().map(|v| (*v, Scalar::zero())).collect();
    let mut g = Vec::with_capacity(4);
    for (v, e) in chart.vars.iter().zip(comps) {
        let mut e = e.substitute(&shift).expect("polynomial shift");
        if *v == x {
            e = &e - &cx.derivative(time);
        } else if *v == z {
            e = &e - &cz.derivative(time);
        }
        let gi = times_boundary(&e, chart.boundary)?;
        let at = gi
            .substitute_scalars(&origin)
            .map_err(|_| SingularError::NotLogarithmic(format!("{v} component has a pole at the point")))?;
        if *v != chart.boundary && !at.is_zero() {
            return Err(SingularError::NotAccessible(format!("g for {v} is {at} at the point")));
        }
        g.push(gi);
    }
    let matrix: Vec<Vec<RationalExpr>> = g
        .iter()
        .map(|gi| {
            chart
                .vars
                .iter()
                .map(|v| tidy(&gi.derivative(*v).substitute_scalars(&origin).expect("holomorphic")))
                .collect()
        })
        .collect();

    let b = chart.position(chart.boundary);
    let mut perms = permutations4();
    perms.sort_by_key(|p| p[0] != b);
    let lower = |p: &[usize; 4]| (0..4).all(|i| (i + 1..4).all(|j| matrix[p[i]][p[j]].is_zero()));
    let Some(order) = perms.into_iter().find(lower) else {
        let charpoly = characteristic_polynomial(&matrix);
        return Err(SingularError::NotTriangularizable { matrix, charpoly });
    };
    let index: Vec<RationalExpr> = (0..4).map(|i| matrix[i][i].clone()).collect();
    let ratios = ratios_of(&index, 0);
    let normalized_index = ratios_of(&index, b);
    let tri: Vec<RationalExpr> = order.iter().map(|&i| index[i].clone()).collect();
    let boundary_ratios = ratios_of(&tri, 0);
    let mut point = vec![(x, cx), (z, cz)];
    point.push((chart.boundary, RationalExpr::zero()));
    point.push((chart.fiber, RationalExpr::zero()));
    Ok(LocalIndexReport {
        locus,
        chart: chart.name,
        point,
        integral: if ratios.is_empty() { None } else { integral(&ratios) },
        boundary_integral: if boundary_ratios.is_empty() { None } else { integral(&boundary_ratios) },
        matrix,
        triangular_order: order,
        index,
        normalized_index,
        ratios,
        boundary_ratios,
    })
}

/// `coeff * U^exponent * Log(U)^log_power` with `U = a11 T + c1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PowerLogTerm {
    pub coeff: RationalExpr,
    pub exponent: RationalExpr,
    pub log_power: u32,
}

impl fmt::Display for PowerLogTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})", self.coeff)?;
        if !self.exponent.is_zero() {
            if self.exponent.as_constant().is_some_and(|c| c.is_one()) {
                write!(f, "*U")?;
            } else {
                write!(f, "*U^({})", self.exponent)?;
            }
        }
        match self.log_power {
            0 => Ok(()),
            1 => write!(f, "*Log(U)"),
            k => write!(f, "*Log(U)^{k}"),
        }
    }
}

/// A sum of power-log terms in `U`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ClosedForm {
    pub terms: Vec<PowerLogTerm>,
}

impl ClosedForm {
    fn push(&mut self, coeff: RationalExpr, exponent: &RationalExpr, log_power: u32) {
        if coeff.is_zero() {
            return;
        }
        if let Some(t) =
            self.terms.iter_mut().find(|t| t.log_power == log_power && t.exponent.equals(exponent))
        {
            t.coeff = &t.coeff + &coeff;
        } else {
            self.terms.push(PowerLogTerm { coeff, exponent: exponent.clone(), log_power });
        }
        self.terms.retain(|t| !t.coeff.is_zero());
    }

    fn add_scaled(&mut self, other: &ClosedForm, c: &RationalExpr) {
        for t in &other.terms {
            self.push(&t.coeff * c, &t.exponent, t.log_power);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// `a11 U d/dU` applied termwise.
    fn euler(&self, a11: &RationalExpr) -> ClosedForm {
        let mut out = ClosedForm::default();
        for t in &self.terms {
            out.push(&(&t.coeff * &t.exponent) * a11, &t.exponent, t.log_power);
            if t.log_power > 0 {
                let m = RationalExpr::int(t.log_power as i64);
                out.push(&(&t.coeff * &m) * a11, &t.exponent, t.log_power - 1);
            }
        }
        out
    }

    pub fn has_log(&self) -> bool {
        self.terms.iter().any(|t| t.log_power > 0)
    }

    /// Coefficients of the logarithmic terms; all must vanish for the
    /// component to be single-valued.
    pub fn log_coefficients(&self) -> Vec<RationalExpr> {
        self.terms.iter().filter(|t| t.log_power > 0).map(|t| t.coeff.clone()).collect()
    }

    /// `Some(true)` if free of logarithms with integer exponents only,
    /// `Some(false)` if a log term or a non-integer constant exponent occurs,
    /// `None` if an exponent is symbolic.
    pub fn single_valued(&self) -> Option<bool> {
        let mut verdict = Some(true);
        for t in &self.terms {
            if t.log_power > 0 {
                return Some(false);
            }
            match t.exponent.as_constant() {
                Some(e) if !e.is_integer() => return Some(false),
                Some(_) => {}
                None => verdict = None,
            }
        }
        verdict
    }

    /// As an expression in `T` when every exponent is an integer constant and
    /// no logarithm occurs.
    pub fn to_expr(&self, a11: &RationalExpr) -> Option<RationalExpr> {
        let u = &(a11 * &RationalExpr::var(Var::T)) + &RationalExpr::var(Var::constant(1));
        let mut acc = RationalExpr::zero();
        for t in &self.terms {
            if t.log_power > 0 {
                return None;
            }
            let e = t.exponent.as_constant()?.to_i64()?;
            acc = &acc + &(&t.coeff * &u.pow(e as i32).ok()?);
        }
        Some(acc)
    }
}

impl fmt::Display for ClosedForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        let parts: Vec<String> = self.terms.iter().map(|t| t.to_string()).collect();
        f.write_str(&parts.join(" + "))
    }
}

/// The α-test reduced system `dX/dT = (1/X1) A X` with its closed-form solution.
#[derive(Debug, Clone)]
pub struct ReducedSystem {
    pub matrix: Vec<Vec<RationalExpr>>,
    /// `X_k(T)` in terms of `U = a11 T + c1` and constants `c2, c3, ...`.
    pub solutions: Vec<ClosedForm>,
    /// `a_kk / a11`.
    pub ratios: Vec<RationalExpr>,
    pub ratios_integral: Option<bool>,
    pub single_valued: Vec<Option<bool>>,
}

impl ReducedSystem {
    /// Residuals `a11 U dX_k/dU - sum_j a_kj X_j`; all vanish for a correct solution.
    pub fn residuals(&self) -> Vec<ClosedForm> {
        let a11 = &self.matrix[0][0];
        self.solutions
            .iter()
            .enumerate()
            .map(|(k, x)| {
                let mut r = x.euler(a11);
                for (j, xj) in self.solutions.iter().enumerate().take(k + 1) {
                    r.add_scaled(xj, &-&self.matrix[k][j]);
                }
                r
            })
            .collect()
    }

    pub fn verifies(&self) -> bool {
        self.residuals().iter().all(ClosedForm::is_zero)
    }

    pub fn all_single_valued(&self) -> Option<bool> {
        let mut v = Some(true);
        for s in &self.single_valued {
            match s {
                Some(false) => return Some(false),
                None => v = None,
                _ => {}
            }
        }
        v
    }
}

/// Solves the reduced system by variation of constants, one variable at a time.
///
/// The matrix must be lower triangular of size at most 4 (one integration
/// constant `c_k` per variable) with `a11 != 0`.
pub fn alpha_test_solve(matrix: &[Vec<RationalExpr>]) -> Result<ReducedSystem, SingularError> {
    let n = matrix.len();
    assert!((1..=4).contains(&n), "α-test supports 1 to 4 variables");
    if matrix.iter().enumerate().any(|(i, row)| row.len() != n || row[i + 1..].iter().any(|e| !e.is_zero())) {
        return Err(SingularError::NotLowerTriangular);
    }
    let a11 = matrix[0][0].clone();
    if a11.is_zero() {
        return Err(SingularError::DegenerateLeadingEigenvalue);
    }
    let one = RationalExpr::one();
    let mut solutions: Vec<ClosedForm> = Vec::with_capacity(n);
    let mut x1 = ClosedForm::default();
    x1.push(one.clone(), &one, 0);
    solutions.push(x1);
    for k in 1..n {
        let akk = &matrix[k][k];
        let mut forcing = ClosedForm::default();
        for (j, xj) in solutions.iter().enumerate() {
            forcing.add_scaled(xj, &matrix[k][j]);
        }
        // Group forcing terms by exponent and solve a11 U X' - akk X = f.
        let mut exps: Vec<RationalExpr> = Vec::new();
        for t in &forcing.terms {
            if !exps.iter().any(|e| e.equals(&t.exponent)) {
                exps.push(t.exponent.clone());
            }
        }
        let mut xk = ClosedForm::default();
        for e in &exps {
            let coeff_of = |m: u32| {
                forcing
                    .terms
                    .iter()
                    .find(|t| t.log_power == m && t.exponent.equals(e))
                    .map_or_else(RationalExpr::zero, |t| t.coeff.clone())
            };
            let top = forcing.terms.iter().filter(|t| t.exponent.equals(e)).map(|t| t.log_power).max().unwrap_or(0);
            let lam = &(&a11 * e) - akk;
            if lam.is_zero() {
                // Resonance: each log power climbs by one.
                for m in 0..=top {
                    let c = &coeff_of(m) / &a11.scale(&Scalar::from_int(m as i64 + 1));
                    xk.push(c, e, m + 1);
                }
            } else {
                let mut higher = RationalExpr::zero();
                for m in (0..=top).rev() {
                    let rhs = &coeff_of(m) - &(&(&a11 * &RationalExpr::int(m as i64 + 1)) * &higher);
                    let c = &rhs / &lam;
                    xk.push(c.clone(), e, m);
                    higher = c;
                }
            }
        }
        let hom_exp = akk / &a11;
        xk.push(RationalExpr::var(Var::constant(k + 1)), &hom_exp, 0);
        solutions.push(xk);
    }
    let ratios: Vec<RationalExpr> = (0..n).map(|k| &matrix[k][k] / &a11).collect();
    Ok(ReducedSystem {
        ratios_integral: integral(&ratios),
        single_valued: solutions.iter().map(ClosedForm::single_valued).collect(),
        matrix: matrix.to_vec(),
        solutions,
        ratios,
    })
}

/// Outcome of resolving one locus by Steps 0–2 and the sign flip.
#[derive(Debug, Clone)]
pub struct BlowUpReport {
    pub locus: LocusName,
    /// The composite change of variables, named after the chart it should equal.
    pub composite: ChartMap,
    /// Forward and inverse bindings agree with the canonical chart.
    pub matches_chart: bool,
    /// After Step 1 the field is still singular along the Step-2 center
    /// `X = a - Z W` on `Y = 0`.
    pub step2_center_singular: bool,
}

const PLACE_IN: [Var; 4] = [Var::X3, Var::Y3, Var::Z3, Var::W3];
const PLACE_OUT: [Var; 4] = [Var::X4, Var::Y4, Var::Z4, Var::W4];

/// A coordinate change written in the placeholders `X3..W3` (forward) and
/// `X4..W4` (inverse).
struct Step {
    forward: [RationalExpr; 4],
    inverse: [RationalExpr; 4],
}

fn step(forward: [String; 4], inverse: [String; 4]) -> Step {
    Step { forward: forward.map(|s| expr(&s)), inverse: inverse.map(|s| expr(&s)) }
}

fn blow_up_steps(cx: &RationalExpr, cz: &RationalExpr, a: &RationalExpr) -> [Step; 4] {
    let s = |v: [&str; 4]| v.map(String::from);
    [
        step(
            [format!("X3 - ({cx})"), "Y3".into(), format!("Z3 - ({cz})"), "W3".into()],
            [format!("X4 + ({cx})"), "Y4".into(), format!("Z4 + ({cz})"), "W4".into()],
        ),
        step(s(["X3/Y3", "Y3", "Z3/Y3", "W3"]), s(["X4*Y4", "Y4", "Z4*Y4", "W4"])),
        step(
            [format!("(X3 + Z3*W3 - ({a}))/Y3"), "Y3".into(), "Z3".into(), "W3".into()],
            [format!("X4*Y4 - Z4*W4 + ({a})"), "Y4".into(), "Z4".into(), "W4".into()],
        ),
        step(s(["-X3", "Y3", "Z3", "W3"]), s(["-X4", "Y4", "Z4", "W4"])),
    ]
}

/// Chart in the placeholders: forward in `(q, p, t, s)`, inverse in `X3..W3`.
struct Stage {
    forward: [RationalExpr; 4],
    inverse: Vec<(Var, RationalExpr)>,
}

impl Stage {
    fn then(&self, st: &Step) -> Stage {
        let cur: Vec<(Var, RationalExpr)> = PLACE_IN.iter().copied().zip(self.forward.clone()).collect();
        let forward = st.forward.clone().map(|f| f.substitute(&cur).expect("nonzero denominators"));
        let back: Vec<(Var, RationalExpr)> = PLACE_IN.iter().copied().zip(st.inverse.clone()).collect();
        let rename: Vec<(Var, Var)> = PLACE_OUT.iter().copied().zip(PLACE_IN).collect();
        let inverse = self
            .inverse
            .iter()
            .map(|(v, e)| (*v, e.substitute(&back).expect("nonzero denominators").rename(&rename)))
            .collect();
        Stage { forward, inverse }
    }

    fn field(&self, field: &VectorField) -> VectorField {
        pushforward(field, PLACE_IN, &self.forward, &self.inverse)
    }
}

/// Resolves `locus` by the Step 0–2 blow-ups in the `X3` chart and the flip
/// `x = -X`, and compares the composite with the canonical chart.
pub fn blow_up_pipeline(sys: &HamiltonianSystem, locus: LocusName) -> Result<BlowUpReport, SingularError> {
    let chart = boundary_chart(BoundaryName::X3);
    let field = vector_field(sys);
    let [cx, cz] = locus.base();
    let a = sys.params.alpha[locus.alpha_index()].clone();
    let steps = blow_up_steps(&cx, &cz, &a);
    let mut stage = Stage {
        forward: core::array::from_fn(|k| chart.forward[k].1.clone()),
        inverse: chart.inverse.clone(),
    };
    stage = stage.then(&steps[0]).then(&steps[1]);

    // Singular along X = a - Z W on Y = 0, for both flows.
    let after1 = stage.field(&field);
    let center = [
        (Var::X3, &a - &expr("Z3*W3")),
        (Var::Y3, RationalExpr::zero()),
    ];
    let mut step2_center_singular = true;
    for comps in [&after1.dt, &after1.ds] {
        for (v, e) in PLACE_IN.iter().zip(comps) {
            if *v == Var::Y3 {
                continue;
            }
            let g = times_boundary(e, Var::Y3)?;
            step2_center_singular &= g.substitute(&center).is_ok_and(|r| r.is_zero());
        }
    }

    stage = stage.then(&steps[2]).then(&steps[3]);
    let target_name = locus.chart();
    let target = chart_inverse(target_name).specialize(&sys.params);
    let to_chart: Vec<(Var, Var)> = PLACE_IN.iter().copied().zip(target.vars).collect();
    let composite = ChartMap {
        name: target_name,
        vars: target.vars,
        forward: target.vars.iter().copied().zip(stage.forward.clone()).collect(),
        inverse: stage.inverse.iter().map(|(v, e)| (*v, e.rename(&to_chart))).collect(),
        laurent_var: Some(target.vars[1]),
        correction: target.correction.clone(),
    };
    let same = |a: &[(Var, RationalExpr)], b: &[(Var, RationalExpr)]| {
        a.len() == b.len() && a.iter().zip(b).all(|((v, e), (w, f))| v == w && e.equals(f))
    };
    let matches_chart = same(&composite.forward, &target.forward) && same(&composite.inverse, &target.inverse);

    let last = stage.field(&field);
    for (time, comps) in [("t", &last.dt), ("s", &last.ds)] {
        for (v, e) in PLACE_IN.iter().zip(comps) {
            if !e.is_polynomial_in(&PLACE_IN) {
                let v = to_chart.iter().find(|(p, _)| p == v).unwrap().1;
                return Err(SingularError::ResidualSingularity(format!("d{v}/d{time} has denominator {}", e.den())));
            }
        }
    }
    Ok(BlowUpReport { locus, composite, matches_chart, step2_center_singular })
}
