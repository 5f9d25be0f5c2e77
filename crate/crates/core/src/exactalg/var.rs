use core::fmt;

/// Number of symbols in the fixed variable universe.
pub const NVARS: usize = 53;

static NAMES: [&str; NVARS] = [
    "q1", "p1", "q2", "p2", "t", "s", "eta", //
    "a0", "a1", "a2", "a3", "a4", "a5", //
    "x0", "y0", "z0", "w0", "x1", "y1", "z1", "w1", "x2", "y2", "z2", "w2", //
    "x3", "y3", "z3", "w3", "x4", "y4", "z4", "w4", "x5", "y5", "z5", "w5", //
    "X3", "Y3", "Z3", "W3", "X4", "Y4", "Z4", "W4", //
    "b1", "b2", "b3", "b4", //
    "c1", "c2", "c3", "c4",
];

/// A symbol of the fixed variable universe.
///
/// The index order is the monomial order: a variable with a smaller index
/// dominates in the lexicographic tie-break of the graded order.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var(u8);

impl Var {
    pub const Q1: Var = Var(0);
    pub const P1: Var = Var(1);
    pub const Q2: Var = Var(2);
    pub const P2: Var = Var(3);
    pub const T: Var = Var(4);
    pub const S: Var = Var(5);
    pub const ETA: Var = Var(6);
    pub const A0: Var = Var(7);
    pub const A1: Var = Var(8);
    pub const A2: Var = Var(9);
    pub const A3: Var = Var(10);
    pub const A4: Var = Var(11);
    pub const A5: Var = Var(12);

    pub const X3: Var = Var(37);
    pub const Y3: Var = Var(38);
    pub const Z3: Var = Var(39);
    pub const W3: Var = Var(40);
    pub const X4: Var = Var(41);
    pub const Y4: Var = Var(42);
    pub const Z4: Var = Var(43);
    pub const W4: Var = Var(44);

    /// Phase-space coordinates `(q1, p1, q2, p2)`.
    pub const STATE: [Var; 4] = [Var::Q1, Var::P1, Var::Q2, Var::P2];
    /// The two times `(t, s)`.
    pub const TIMES: [Var; 2] = [Var::T, Var::S];

    /// Parameter symbol `a{i}` for `i` in `0..6`.
    pub fn alpha(i: usize) -> Var {
        assert!(i < 6, "alpha index {i} out of range");
        Var(7 + i as u8)
    }

    pub fn alphas() -> [Var; 6] {
        core::array::from_fn(Var::alpha)
    }

    /// Chart coordinate `k` (0 = x, 1 = y, 2 = z, 3 = w) of chart `r_j`.
    pub fn chart(j: usize, k: usize) -> Var {
        assert!(j < 6 && k < 4);
        Var(13 + (4 * j + k) as u8)
    }

    pub fn chart_vars(j: usize) -> [Var; 4] {
        core::array::from_fn(|k| Var::chart(j, k))
    }

    /// Auxiliary slot `b{i}` for `i` in `1..=4`.
    pub fn beta(i: usize) -> Var {
        assert!((1..=4).contains(&i));
        Var(44 + i as u8)
    }

    /// Integration constant `c{i}` for `i` in `1..=4`.
    pub fn constant(i: usize) -> Var {
        assert!((1..=4).contains(&i));
        Var(48 + i as u8)
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn from_index(i: usize) -> Option<Var> {
        (i < NVARS).then_some(Var(i as u8))
    }

    pub fn name(self) -> &'static str {
        NAMES[self.0 as usize]
    }

    pub fn from_name(name: &str) -> Option<Var> {
        NAMES.iter().position(|n| *n == name).map(|i| Var(i as u8))
    }

    pub fn all() -> impl Iterator<Item = Var> {
        (0..NVARS as u8).map(Var)
    }

    pub fn is_state(self) -> bool {
        self.0 < 4
    }

    /// Chart and boundary coordinates, i.e. every phase-space symbol other
    /// than the original `(q1, p1, q2, p2)`.
    pub fn is_chart(self) -> bool {
        (13..45).contains(&self.0)
    }
}

impl fmt::Debug for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for v in Var::all() {
            assert_eq!(Var::from_name(v.name()), Some(v));
        }
        assert_eq!(Var::alpha(5).name(), "a5");
        assert_eq!(Var::chart(0, 1).name(), "y0");
        assert_eq!(Var::chart(5, 3).name(), "w5");
        assert_eq!(Var::beta(4).name(), "b4");
        assert_eq!(Var::constant(1).name(), "c1");
        assert_eq!(Var::W4.name(), "W4");
    }

    #[test]
    fn chart_classification() {
        assert!(Var::chart(2, 0).is_chart());
        assert!(Var::Y4.is_chart());
        assert!(!Var::Q1.is_chart());
        assert!(!Var::beta(1).is_chart());
    }
}
