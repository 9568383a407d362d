//! Rate-one linear designs for `2^lambda` transmit antennas.
//!
//! A design is first built symbolically: every entry of the matrices produced
//! here is either zero or a single complex variable, possibly conjugated and
//! negated. Two block rules grow a design:
//!
//! * ABBA: `[[A, B], [B, A]]`
//! * doubling: `[[A, -B^H], [B, A^H]]`
//!
//! where `B` is a copy of `A` in fresh variables. Starting from the 1x1 design
//! `[x1]`, ABBA is applied `lambda - 1` times and doubling once. For
//! `lambda = 1` that is just the Alamouti design.
//!
//! Real variables are ordered `[x1I, x1Q, x2I, x2Q, ...]`, i.e. complex
//! variable `x_m` (1-based) is `s_{2m-1} + j s_{2m}`. In code everything is
//! 0-based, so `x_m` lives at real indices `2(m-1)` and `2(m-1) + 1`.

use std::fmt;

use crate::error::{Error, Result};
use crate::numerics::{CMat, Gx, GxMat};

/// Largest supported exponent; keeps matrices at or below 64x64.
pub const MAX_LAMBDA: u32 = 6;

/// A signed, possibly conjugated complex variable.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Term {
    /// 0-based complex variable index.
    pub var: usize,
    pub conj: bool,
    pub neg: bool,
}

impl Term {
    pub fn var(var: usize) -> Self {
        Term {
            var,
            conj: false,
            neg: false,
        }
    }

    fn shifted(self, by: usize) -> Self {
        Term {
            var: self.var + by,
            ..self
        }
    }

    fn conjugated(self) -> Self {
        Term {
            conj: !self.conj,
            ..self
        }
    }

    fn negated(self) -> Self {
        Term {
            neg: !self.neg,
            ..self
        }
    }

    /// Coefficient of the in-phase and quadrature parts of `var` in this entry.
    fn coefficients(self) -> (Gx, Gx) {
        let sign = if self.neg { -1 } else { 1 };
        let q = if self.conj { Gx::new(0, -sign) } else { Gx::new(0, sign) };
        (Gx::new(sign, 0), q)
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}x{}{}",
            if self.neg { "-" } else { "" },
            self.var + 1,
            if self.conj { "*" } else { "" }
        )
    }
}

/// Square design whose entries are zero or a single [`Term`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DesignBlock {
    n: usize,
    vars: usize,
    entries: Vec<Option<Term>>,
}

impl DesignBlock {
    /// The 1x1 design `[x1]`.
    pub fn scalar() -> Self {
        DesignBlock {
            n: 1,
            vars: 1,
            entries: vec![Some(Term::var(0))],
        }
    }

    /// Builds a block from rows; `vars` is one past the largest variable index.
    pub fn from_rows(rows: Vec<Vec<Option<Term>>>) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Dimension("design block must be square".into()));
        }
        let entries: Vec<_> = rows.into_iter().flatten().collect();
        let vars = entries.iter().flatten().map(|t| t.var + 1).max().unwrap_or(0);
        Ok(DesignBlock { n, vars, entries })
    }

    pub fn size(&self) -> usize {
        self.n
    }

    /// Number of complex variables.
    pub fn vars(&self) -> usize {
        self.vars
    }

    pub fn entry(&self, i: usize, j: usize) -> Option<Term> {
        self.entries[i * self.n + j]
    }

    fn map(&self, f: impl Fn(Term) -> Term) -> Self {
        DesignBlock {
            n: self.n,
            vars: self.vars,
            entries: self.entries.iter().map(|e| e.map(&f)).collect(),
        }
    }

    fn herm(&self) -> Self {
        let n = self.n;
        DesignBlock {
            n,
            vars: self.vars,
            entries: (0..n * n)
                .map(|idx| self.entries[(idx % n) * n + idx / n].map(Term::conjugated))
                .collect(),
        }
    }

    fn assemble(tl: &Self, tr: &Self, bl: &Self, br: &Self, vars: usize) -> Self {
        let n = tl.n;
        let mut entries = Vec::with_capacity(4 * n * n);
        for i in 0..2 * n {
            for j in 0..2 * n {
                let blk = match (i < n, j < n) {
                    (true, true) => tl,
                    (true, false) => tr,
                    (false, true) => bl,
                    (false, false) => br,
                };
                entries.push(blk.entry(i % n, j % n));
            }
        }
        DesignBlock {
            n: 2 * n,
            vars,
            entries,
        }
    }

    /// `[[A, B], [B, A]]` with `B` a fresh-variable copy of `A`.
    pub fn abba(&self) -> Self {
        let b = self.map(|t| t.shifted(self.vars));
        Self::assemble(self, &b, &b, self, 2 * self.vars)
    }

    /// `[[A, -B^H], [B, A^H]]` with `B` a fresh-variable copy of `A`.
    pub fn doubling(&self) -> Self {
        let b = self.map(|t| t.shifted(self.vars));
        let minus_bh = b.herm().map(Term::negated);
        Self::assemble(self, &minus_bh, &b, &self.herm(), 2 * self.vars)
    }

    /// Weight matrices in the canonical real-variable order.
    pub fn weight_matrices(&self) -> Vec<GxMat> {
        let n = self.n;
        let mut weights = vec![GxMat::zeros(n, n); 2 * self.vars];
        for i in 0..n {
            for j in 0..n {
                if let Some(t) = self.entry(i, j) {
                    let (ci, cq) = t.coefficients();
                    weights[2 * t.var][(i, j)] += ci;
                    weights[2 * t.var + 1][(i, j)] += cq;
                }
            }
        }
        weights
    }

    /// Cell strings, `"0"` for empty entries.
    pub fn cells(&self) -> Vec<Vec<String>> {
        (0..self.n)
            .map(|i| {
                (0..self.n)
                    .map(|j| self.entry(i, j).map_or_else(|| "0".to_string(), |t| t.to_string()))
                    .collect()
            })
            .collect()
    }
}

impl fmt::Display for DesignBlock {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cells = self.cells();
        let width = cells.iter().flatten().map(String::len).max().unwrap_or(1);
        for row in &cells {
            let line: Vec<String> = row.iter().map(|c| format!("{c:>width$}")).collect();
            writeln!(f, "[ {} ]", line.join("  "))?;
        }
        Ok(())
    }
}

/// Ordered partition of the real-variable indices into equal-size groups.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Grouping {
    groups: Vec<Vec<usize>>,
}

impl Grouping {
    /// Validates that `groups` is a disjoint, exhaustive, equal-size partition
    /// of `0..k`.
    pub fn new(groups: Vec<Vec<usize>>, k: usize) -> Result<Self> {
        let g = groups.len();
        if g == 0 || !k.is_multiple_of(g) {
            return Err(Error::InvalidParameter(format!(
                "{g} groups cannot evenly split {k} variables"
            )));
        }
        let mut seen = vec![false; k];
        for grp in &groups {
            if grp.len() != k / g {
                return Err(Error::InvalidParameter(format!(
                    "group of size {} where {} expected",
                    grp.len(),
                    k / g
                )));
            }
            for &i in grp {
                if i >= k || seen[i] {
                    return Err(Error::InvalidParameter(format!(
                        "variable {i} out of range or repeated"
                    )));
                }
                seen[i] = true;
            }
        }
        Ok(Grouping { groups })
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    pub fn group(&self, k: usize) -> &[usize] {
        &self.groups[k]
    }

    /// Size of each group.
    pub fn group_size(&self) -> usize {
        self.groups[0].len()
    }

    /// Total number of real variables covered.
    pub fn variables(&self) -> usize {
        self.groups.len() * self.group_size()
    }
}

/// A rate-one linear design for `n = 2^lambda` antennas in `k = 2n` real
/// variables, with its weight matrices materialised.
#[derive(Clone, Debug)]
pub struct LinearDesign {
    lambda: u32,
    block: DesignBlock,
    weights: Vec<GxMat>,
}

impl LinearDesign {
    pub fn from_block(lambda: u32, block: DesignBlock) -> Self {
        let weights = block.weight_matrices();
        LinearDesign {
            lambda,
            block,
            weights,
        }
    }

    pub fn lambda(&self) -> u32 {
        self.lambda
    }

    /// Matrix size (number of transmit antennas).
    pub fn n(&self) -> usize {
        self.block.size()
    }

    /// Number of real variables.
    pub fn k(&self) -> usize {
        self.weights.len()
    }

    /// Number of complex symbols.
    pub fn complex_symbols(&self) -> usize {
        self.block.vars()
    }

    pub fn block(&self) -> &DesignBlock {
        &self.block
    }

    pub fn weights(&self) -> &[GxMat] {
        &self.weights
    }

    pub fn weight(&self, i: usize) -> &GxMat {
        &self.weights[i]
    }

    /// Complex symbols per channel use.
    pub fn rate(&self) -> f64 {
        self.complex_symbols() as f64 / self.n() as f64
    }

    /// `sum_i x[i] * A_i`.
    pub fn evaluate(&self, x: &[f64]) -> Result<CMat> {
        if x.len() != self.k() {
            return Err(Error::Dimension(format!(
                "design takes {} real variables, got {}",
                self.k(),
                x.len()
            )));
        }
        let n = self.n();
        let mut out = CMat::zeros(n, n);
        for (w, &s) in self.weights.iter().zip(x) {
            if s != 0.0 {
                out.axpy(s, &w.to_cmat());
            }
        }
        Ok(out)
    }

    /// The four groups: in-phase parts of the first half of the complex
    /// variables, their quadrature parts, then the same for the second half.
    pub fn canonical_grouping(&self) -> Grouping {
        let half = self.complex_symbols() / 2;
        let part = |offset: usize, q: usize| -> Vec<usize> {
            (offset..offset + half).map(|m| 2 * m + q).collect()
        };
        Grouping::new(
            vec![part(0, 0), part(0, 1), part(half, 0), part(half, 1)],
            self.k(),
        )
        .expect("canonical grouping is a partition")
    }

    /// First cross-group pair `(i, j)` whose weight matrices fail
    /// `A_i^H A_j + A_j^H A_i = 0`, checked exactly.
    pub fn find_cross_group_violation(&self, grouping: &Grouping) -> Option<(usize, usize)> {
        if grouping.variables() != self.k() {
            return Some((0, 0));
        }
        let herms: Vec<GxMat> = self.weights.iter().map(GxMat::herm).collect();
        let groups = grouping.groups();
        for (a, ga) in groups.iter().enumerate() {
            for gb in &groups[a + 1..] {
                for &i in ga {
                    for &j in gb {
                        let lhs = herms[i].matmul(&self.weights[j]).expect("square");
                        let rhs = herms[j].matmul(&self.weights[i]).expect("square");
                        if !(&lhs + &rhs).is_zero() {
                            return Some((i, j));
                        }
                    }
                }
            }
        }
        None
    }

    /// Whether every cross-group pair of weight matrices anticommutes in the
    /// `A^H B + B^H A` sense.
    pub fn verify_group_decodable(&self, grouping: &Grouping) -> bool {
        self.find_cross_group_violation(grouping).is_none()
    }
}

/// `[[x1, x2], [x2, x1]]`.
pub fn c1() -> DesignBlock {
    DesignBlock::scalar().abba()
}

/// Builds the design for `2^lambda` antennas.
pub fn construct_design(lambda: u32) -> Result<LinearDesign> {
    if !(1..=MAX_LAMBDA).contains(&lambda) {
        return Err(Error::InvalidParameter(format!(
            "lambda must be in 1..={MAX_LAMBDA}, got {lambda}"
        )));
    }
    let mut block = DesignBlock::scalar();
    for _ in 1..lambda {
        block = block.abba();
    }
    Ok(LinearDesign::from_block(lambda, block.doubling()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cells(rows: &[&[&str]]) -> Vec<Vec<String>> {
        rows.iter()
            .map(|r| r.iter().map(|s| s.to_string()).collect())
            .collect()
    }

    fn real_index(m: usize, quadrature: bool) -> usize {
        2 * (m - 1) + quadrature as usize
    }

    #[test]
    fn abba_of_c1() {
        let d = c1().abba();
        assert_eq!(
            d.cells(),
            cells(&[
                &["x1", "x2", "x3", "x4"],
                &["x2", "x1", "x4", "x3"],
                &["x3", "x4", "x1", "x2"],
                &["x4", "x3", "x2", "x1"],
            ])
        );
        assert_eq!(c1().cells(), cells(&[&["x1", "x2"], &["x2", "x1"]]));
    }

    #[test]
    fn abba_weights_are_block_placed_copies() {
        let a = c1();
        let d = a.abba();
        let wa = a.weight_matrices();
        let wd = d.weight_matrices();
        assert_eq!(wd.len(), 2 * wa.len());
        let z = GxMat::zeros(2, 2);
        for (i, w) in wd.iter().enumerate() {
            let base = &wa[i % wa.len()];
            let (tl, tr) = if i < wa.len() { (base, &z) } else { (&z, base) };
            let expected = GxMat::from_fn(4, 4, |r, c| {
                let blk = if (r < 2) == (c < 2) { tl } else { tr };
                blk[(r % 2, c % 2)]
            });
            assert_eq!(w, &expected, "weight {i}");
        }
    }

    #[test]
    fn doubling_of_scalar_is_alamouti() {
        let d = DesignBlock::scalar().doubling();
        assert_eq!(d.cells(), cells(&[&["x1", "-x2*"], &["x2", "x1*"]]));
        let d1 = construct_design(1).unwrap();
        assert_eq!(d1.block(), &d);
        assert_eq!((d1.n(), d1.k()), (2, 4));
    }

    #[test]
    fn four_antenna_design() {
        let d = construct_design(2).unwrap();
        assert_eq!(
            d.block().cells(),
            cells(&[
                &["x1", "x2", "-x3*", "-x4*"],
                &["x2", "x1", "-x4*", "-x3*"],
                &["x3", "x4", "x1*", "x2*"],
                &["x4", "x3", "x2*", "x1*"],
            ])
        );
        assert_eq!(c1().doubling(), d.block().clone());
    }

    #[test]
    fn sizes_double() {
        for lambda in 1..=5 {
            let d = construct_design(lambda).unwrap();
            assert_eq!(d.n(), 1 << lambda);
            assert_eq!(d.k(), 1 << (lambda + 1));
            assert_eq!(d.rate(), 1.0);
            for w in d.weights() {
                assert!(w.entries().all(|z| matches!((z.re, z.im), (0, 0) | (1, 0) | (-1, 0) | (0, 1) | (0, -1))));
            }
        }
        let d3 = construct_design(3).unwrap();
        assert_eq!((d3.n(), d3.complex_symbols(), d3.k()), (8, 8, 16));
        assert!(construct_design(0).is_err());
        assert!(construct_design(MAX_LAMBDA + 1).is_err());
    }

    #[test]
    fn evaluate_unit_vectors() {
        for lambda in 1..=4 {
            let d = construct_design(lambda).unwrap();
            assert_eq!(d.evaluate(&vec![0.0; d.k()]).unwrap(), CMat::zeros(d.n(), d.n()));
            for i in 0..d.k() {
                let mut e = vec![0.0; d.k()];
                e[i] = 1.0;
                assert_eq!(d.evaluate(&e).unwrap(), d.weight(i).to_cmat());
            }
        }
        let d = construct_design(2).unwrap();
        assert!(d.evaluate(&[1.0; 3]).is_err());
        let mut x = vec![0.0; 8];
        x[real_index(1, false)] = 1.0;
        assert_eq!(d.evaluate(&x).unwrap(), CMat::identity(4));
    }

    #[test]
    fn canonical_groups() {
        let d2 = construct_design(2).unwrap();
        let g = d2.canonical_grouping();
        let expected = vec![
            vec![real_index(1, false), real_index(2, false)],
            vec![real_index(1, true), real_index(2, true)],
            vec![real_index(3, false), real_index(4, false)],
            vec![real_index(3, true), real_index(4, true)],
        ];
        assert_eq!(g.groups(), expected.as_slice());

        let d1 = construct_design(1).unwrap();
        assert_eq!(d1.canonical_grouping().groups(), &[vec![0], vec![1], vec![2], vec![3]]);

        let d3 = construct_design(3).unwrap();
        assert_eq!(d3.canonical_grouping().group_size(), 4);
    }

    #[test]
    fn canonical_grouping_is_decodable() {
        for lambda in 1..=4 {
            let d = construct_design(lambda).unwrap();
            assert!(d.verify_group_decodable(&d.canonical_grouping()), "lambda {lambda}");
        }
    }

    #[test]
    fn alamouti_two_group_split() {
        let d = construct_design(1).unwrap();
        let g = Grouping::new(vec![vec![0, 1], vec![2, 3]], 4).unwrap();
        assert!(d.verify_group_decodable(&g));
    }

    #[test]
    fn wrong_grouping_detected() {
        let d = construct_design(2).unwrap();
        let g = Grouping::new(
            vec![
                vec![real_index(1, false), real_index(2, true)],
                vec![real_index(1, true), real_index(2, false)],
                vec![real_index(3, false), real_index(4, false)],
                vec![real_index(3, true), real_index(4, true)],
            ],
            8,
        )
        .unwrap();
        let (i, j) = d.find_cross_group_violation(&g).expect("a violating pair");
        let anti = d.weight(i).anticommutator_h(d.weight(j)).unwrap();
        assert!(!anti.is_zero());
        assert!(!d.verify_group_decodable(&g));
    }

    #[test]
    fn same_group_pairs_need_not_anticommute() {
        let d = construct_design(2).unwrap();
        let g = d.canonical_grouping();
        let grp = g.group(0);
        let anti = d.weight(grp[0]).anticommutator_h(d.weight(grp[1])).unwrap();
        assert!(!anti.is_zero());
    }

    #[test]
    fn grouping_validation() {
        assert!(Grouping::new(vec![vec![0, 1], vec![1, 2]], 4).is_err());
        assert!(Grouping::new(vec![vec![0], vec![1, 2]], 3).is_err());
        assert!(Grouping::new(vec![vec![0, 4], vec![1, 2]], 4).is_err());
        assert!(Grouping::new(vec![vec![0, 3], vec![1, 2]], 4).is_ok());
    }
}
