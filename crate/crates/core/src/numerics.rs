//! Small dense complex matrices.
//!
//! Two flavours live here: [`CMat`], a row-major `f64` complex matrix used for
//! simulation and numerical checks, and [`GxMat`], a Gaussian-integer matrix
//! used wherever an algebraic identity has to hold exactly (the weight
//! matrices of the constructed designs only have entries in {0, ±1, ±i}).

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use num_complex::Complex;

use crate::error::{Error, Result};

/// Complex scalar used throughout the crate.
pub type Cx = Complex<f64>;

/// Gaussian integer.
pub type Gx = Complex<i64>;

pub const ZERO: Cx = Cx::new(0.0, 0.0);
pub const ONE: Cx = Cx::new(1.0, 0.0);

/// Absolute tolerance for comparisons on exactly representable algebra.
pub const EXACT_TOL: f64 = 1e-12;
/// Absolute tolerance for everything else.
pub const LOOSE_TOL: f64 = 1e-9;
/// Relative threshold on the smallest singular value for a full-rank verdict.
pub const RANK_TOL: f64 = 1e-9;

/// Dense complex matrix, row-major.
#[derive(Clone, PartialEq)]
pub struct CMat {
    rows: usize,
    cols: usize,
    data: Vec<Cx>,
}

impl CMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMat {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn diag(values: &[Cx]) -> Self {
        let mut m = Self::zeros(values.len(), values.len());
        for (i, v) in values.iter().enumerate() {
            m[(i, i)] = *v;
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<Cx>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{} entries for a {}x{} matrix",
                data.len(),
                rows,
                cols
            )));
        }
        Ok(CMat { rows, cols, data })
    }

    /// Builds a matrix from nested rows. Panics on ragged input.
    pub fn from_rows(rows: &[Vec<Cx>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        CMat {
            rows: r,
            cols: c,
            data: rows.iter().flatten().copied().collect(),
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Cx) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        CMat { rows, cols, data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn as_slice(&self) -> &[Cx] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [Cx] {
        &mut self.data
    }

    /// Standard matrix product.
    pub fn matmul(&self, rhs: &CMat) -> Result<CMat> {
        if self.cols != rhs.rows {
            return Err(Error::Dimension(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = CMat::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            let lhs_row = &self.data[i * self.cols..(i + 1) * self.cols];
            let out_row = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
            for (k, a) in lhs_row.iter().enumerate() {
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                let rhs_row = &rhs.data[k * rhs.cols..(k + 1) * rhs.cols];
                for (o, b) in out_row.iter_mut().zip(rhs_row) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// Conjugate transpose.
    pub fn herm(&self) -> CMat {
        CMat::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn scale(&self, s: f64) -> CMat {
        CMat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn scale_cx(&self, s: Cx) -> CMat {
        CMat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    /// `self += s * other`, in place. Shapes must agree.
    pub fn axpy(&mut self, s: f64, other: &CMat) {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b * s;
        }
    }

    /// Sum of squared magnitudes of all entries.
    pub fn fro_norm_sq(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn trace(&self) -> Cx {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    /// Largest entry magnitude.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Copy of the `rows x cols` block starting at `(r0, c0)`.
    pub fn block(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> CMat {
        CMat::from_fn(rows, cols, |i, j| self[(r0 + i, c0 + j)])
    }

    /// Largest absolute entry difference; shapes must agree.
    pub fn max_abs_diff(&self, other: &CMat) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Determinant by LU with partial pivoting.
    pub fn det(&self) -> Result<Cx> {
        if !self.is_square() {
            return Err(Error::Dimension(format!(
                "determinant of non-square {}x{} matrix",
                self.rows, self.cols
            )));
        }
        let n = self.rows;
        let mut a = self.data.clone();
        let mut det = ONE;
        for k in 0..n {
            let pivot = (k..n)
                .max_by(|&i, &j| a[i * n + k].norm().total_cmp(&a[j * n + k].norm()))
                .unwrap_or(k);
            if a[pivot * n + k].norm() == 0.0 {
                return Ok(ZERO);
            }
            if pivot != k {
                for j in 0..n {
                    a.swap(k * n + j, pivot * n + j);
                }
                det = -det;
            }
            let p = a[k * n + k];
            det *= p;
            for i in k + 1..n {
                let f = a[i * n + k] / p;
                if f.re == 0.0 && f.im == 0.0 {
                    continue;
                }
                for j in k + 1..n {
                    let akj = a[k * n + j];
                    a[i * n + j] -= f * akj;
                }
            }
        }
        Ok(det)
    }

    /// Singular values in descending order (one-sided Jacobi).
    pub fn singular_values(&self) -> Vec<f64> {
        let mut sv = jacobi_column_norms(self);
        sv.sort_by(|a, b| b.total_cmp(a));
        sv
    }

    /// Smallest singular value of a square matrix.
    pub fn min_singular_value(&self) -> f64 {
        self.singular_values().last().copied().unwrap_or(0.0)
    }

    /// Full-rank verdict: `sigma_min > RANK_TOL * max(1, sigma_max)`.
    pub fn is_full_rank(&self) -> bool {
        let sv = self.singular_values();
        match (sv.first(), sv.last()) {
            (Some(&hi), Some(&lo)) => lo > RANK_TOL * hi.max(1.0),
            _ => false,
        }
    }

    /// Distance of `self^H self` from `scale_sq * I` in max-entry norm.
    pub fn scaled_unitary_residual(&self, scale_sq: f64) -> f64 {
        let n = self.cols;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                let mut acc = ZERO;
                for k in 0..self.rows {
                    acc += self[(k, i)].conj() * self[(k, j)];
                }
                if i == j {
                    acc -= scale_sq;
                }
                worst = worst.max(acc.norm());
            }
        }
        worst
    }
}

/// One-sided (Hestenes) Jacobi: orthogonalises the columns of a copy of `m`
/// and returns the resulting column norms, which are the singular values.
fn jacobi_column_norms(m: &CMat) -> Vec<f64> {
    // Work on the wider orientation so the number of columns is the rank bound.
    let a = if m.rows >= m.cols { m.clone() } else { m.herm() };
    let (rows, cols) = (a.rows, a.cols);
    // column-major copy
    let mut c: Vec<Vec<Cx>> = (0..cols)
        .map(|j| (0..rows).map(|i| a[(i, j)]).collect())
        .collect();
    const MAX_SWEEPS: usize = 60;
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..cols {
            for q in p + 1..cols {
                let alpha: f64 = c[p].iter().map(|z| z.norm_sqr()).sum();
                let beta: f64 = c[q].iter().map(|z| z.norm_sqr()).sum();
                let gamma: Cx = c[p].iter().zip(&c[q]).map(|(x, y)| x.conj() * y).sum();
                let g = gamma.norm();
                if g == 0.0 || g <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let phase = gamma / g;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = cs * t;
                let (left, right) = c.split_at_mut(q);
                for (x, y) in left[p].iter_mut().zip(right[0].iter_mut()) {
                    let yq = *y * phase.conj();
                    let xp = *x;
                    *x = xp * cs - yq * sn;
                    *y = xp * sn + yq * cs;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    c.iter()
        .map(|col| col.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
        .collect()
}

impl Index<(usize, usize)> for CMat {
    type Output = Cx;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Cx {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for CMat {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Cx {
        &mut self.data[i * self.cols + j]
    }
}

impl Add for &CMat {
    type Output = CMat;
    fn add(self, rhs: &CMat) -> CMat {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        CMat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &CMat {
    type Output = CMat;
    fn sub(self, rhs: &CMat) -> CMat {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        CMat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul for &CMat {
    type Output = CMat;
    /// Panicking product; use [`CMat::matmul`] for a checked one.
    fn mul(self, rhs: &CMat) -> CMat {
        self.matmul(rhs).expect("matrix dimensions")
    }
}

impl fmt::Debug for CMat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMat {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, " ")?;
            for j in 0..self.cols {
                let z = self[(i, j)];
                write!(f, " {:+.6}{:+.6}i", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// Dense Gaussian-integer matrix, row-major. All arithmetic is exact.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct GxMat {
    rows: usize,
    cols: usize,
    data: Vec<Gx>,
}

impl GxMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        GxMat {
            rows,
            cols,
            data: vec![Gx::new(0, 0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Gx::new(1, 0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Gx) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        GxMat { rows, cols, data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn entries(&self) -> impl Iterator<Item = &Gx> {
        self.data.iter()
    }

    pub fn matmul(&self, rhs: &GxMat) -> Result<GxMat> {
        if self.cols != rhs.rows {
            return Err(Error::Dimension(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = GxMat::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a.re == 0 && a.im == 0 {
                    continue;
                }
                for j in 0..rhs.cols {
                    out.data[i * rhs.cols + j] += a * rhs.data[k * rhs.cols + j];
                }
            }
        }
        Ok(out)
    }

    pub fn herm(&self) -> GxMat {
        GxMat::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|z| z.re == 0 && z.im == 0)
    }

    /// `self^H other + other^H self`, exactly.
    pub fn anticommutator_h(&self, other: &GxMat) -> Result<GxMat> {
        let lhs = self.herm().matmul(other)?;
        let rhs = other.herm().matmul(self)?;
        Ok(&lhs + &rhs)
    }

    pub fn to_cmat(&self) -> CMat {
        CMat::from_fn(self.rows, self.cols, |i, j| {
            let z = self[(i, j)];
            Cx::new(z.re as f64, z.im as f64)
        })
    }
}

impl Index<(usize, usize)> for GxMat {
    type Output = Gx;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Gx {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for GxMat {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Gx {
        &mut self.data[i * self.cols + j]
    }
}

impl Add for &GxMat {
    type Output = GxMat;
    fn add(self, rhs: &GxMat) -> GxMat {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        GxMat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Neg for &GxMat {
    type Output = GxMat;
    fn neg(self) -> GxMat {
        GxMat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| -z).collect(),
        }
    }
}

impl fmt::Debug for GxMat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "GxMat {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, " ")?;
            for j in 0..self.cols {
                let z = self[(i, j)];
                write!(f, " {}{:+}i", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Cx {
        Cx::new(re, im)
    }

    fn random_mat(rng: &mut impl Rng, r: usize, k: usize) -> CMat {
        CMat::from_fn(r, k, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
    }

    // Random unitary as a product of complex Givens rotations and phases.
    fn random_unitary(rng: &mut impl Rng, n: usize) -> CMat {
        let mut u = CMat::diag(
            &(0..n)
                .map(|_| Cx::from_polar(1.0, rng.gen_range(0.0..std::f64::consts::TAU)))
                .collect::<Vec<_>>(),
        );
        for _ in 0..3 * n * n {
            let p = rng.gen_range(0..n);
            let q = (p + rng.gen_range(1..n)) % n;
            let theta: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let phi: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let mut g = CMat::identity(n);
            g[(p, p)] = c(theta.cos(), 0.0);
            g[(q, q)] = c(theta.cos(), 0.0);
            g[(p, q)] = -Cx::from_polar(theta.sin(), phi);
            g[(q, p)] = Cx::from_polar(theta.sin(), -phi);
            u = &g * &u;
        }
        u
    }

    // Cofactor expansion, independent of the LU path.
    fn det_cofactor(m: &CMat) -> Cx {
        let n = m.rows();
        if n == 1 {
            return m[(0, 0)];
        }
        (0..n)
            .map(|j| {
                let minor = CMat::from_fn(n - 1, n - 1, |r, k| {
                    m[(r + 1, if k < j { k } else { k + 1 })]
                });
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                m[(0, j)] * det_cofactor(&minor) * sign
            })
            .sum()
    }

    #[test]
    fn matmul_identity_and_permutation() {
        let m = CMat::from_rows(&[vec![c(1.0, 2.0), c(3.0, 0.0)], vec![c(0.0, -1.0), c(5.0, 5.0)]]);
        assert_eq!(&CMat::identity(2) * &m, m);
        let p = CMat::from_rows(&[vec![ZERO, ONE], vec![ONE, ZERO]]);
        assert_eq!(&p * &p, CMat::identity(2));
        assert!(CMat::zeros(2, 3).matmul(&CMat::zeros(2, 3)).is_err());
    }

    #[test]
    fn alamouti_gram_is_scaled_identity() {
        let (x1, x2) = (c(1.0, 1.0), c(1.0, -1.0));
        let s = CMat::from_rows(&[vec![x1, -x2.conj()], vec![x2, x1.conj()]]);
        let g = &s.herm() * &s;
        assert!(g.max_abs_diff(&CMat::identity(2).scale(4.0)) < EXACT_TOL);
    }

    #[test]
    fn herm_basics() {
        let j = CMat::from_rows(&[vec![c(0.0, 1.0)]]);
        assert_eq!(j.herm()[(0, 0)], c(0.0, -1.0));
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_mat(&mut rng, 3, 3);
        let b = random_mat(&mut rng, 3, 3);
        assert_eq!(a.herm().herm(), a);
        let lhs = (&a * &b).herm();
        let rhs = &b.herm() * &a.herm();
        assert!(lhs.max_abs_diff(&rhs) < EXACT_TOL);
    }

    #[test]
    fn fro_norm_examples() {
        assert_eq!(CMat::zeros(3, 3).fro_norm_sq(), 0.0);
        assert_eq!(CMat::identity(5).fro_norm_sq(), 5.0);
        assert_eq!(CMat::from_rows(&[vec![c(3.0, 4.0)]]).fro_norm_sq(), 25.0);
    }

    #[test]
    fn det_examples() {
        for n in 1..6 {
            assert_eq!(CMat::identity(n).det().unwrap(), ONE);
        }
        let d = CMat::diag(&[c(2.0, 0.0), c(3.0, 0.0)]);
        assert!((d.det().unwrap() - c(6.0, 0.0)).norm() < EXACT_TOL);
        assert!(CMat::zeros(2, 3).det().is_err());
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in 1..6 {
            let m = random_mat(&mut rng, n, n);
            let lu = m.det().unwrap();
            let cof = det_cofactor(&m);
            assert!((lu - cof).norm() < 1e-10, "n={n}: {lu} vs {cof}");
        }
    }

    #[test]
    fn unitary_det_has_unit_modulus() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in 2..8 {
            let u = random_unitary(&mut rng, n);
            assert!(u.scaled_unitary_residual(1.0) < 1e-10);
            assert!((u.det().unwrap().norm() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn min_singular_value_examples() {
        for n in 1..6 {
            assert!((CMat::identity(n).min_singular_value() - 1.0).abs() < EXACT_TOL);
        }
        let mut m = CMat::from_fn(4, 4, |i, j| c((i * 4 + j) as f64 + 1.0, (i as f64) - (j as f64)));
        for j in 0..4 {
            m[(2, j)] = ZERO;
        }
        assert!(m.min_singular_value() < 1e-12);
        assert!(!m.is_full_rank());

        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..20 {
            let u = random_unitary(&mut rng, 4);
            let v = random_unitary(&mut rng, 4);
            let sigma: Vec<f64> = (0..4).map(|_| rng.gen_range(0.05..4.0)).collect();
            let s = CMat::diag(&sigma.iter().map(|&x| c(x, 0.0)).collect::<Vec<_>>());
            let a = &(&u * &s) * &v.herm();
            let expected = sigma.iter().copied().fold(f64::INFINITY, f64::min);
            assert!((a.min_singular_value() - expected).abs() < 1e-10);
            let mut sv = sigma.clone();
            sv.sort_by(|x, y| y.total_cmp(x));
            for (got, want) in a.singular_values().iter().zip(&sv) {
                assert!((got - want).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn gx_matches_cmat() {
        let a = GxMat::from_fn(3, 3, |i, j| Gx::new(i as i64 - 1, j as i64 * 2 - 3));
        let b = GxMat::from_fn(3, 3, |i, j| Gx::new((i * j) as i64, 1 - i as i64));
        let exact = a.matmul(&b).unwrap().to_cmat();
        let float = &a.to_cmat() * &b.to_cmat();
        assert_eq!(exact, float);
        assert_eq!(a.herm().to_cmat(), a.to_cmat().herm());
        let anti = a.anticommutator_h(&b).unwrap().to_cmat();
        let f = &(&a.to_cmat().herm() * &b.to_cmat()) + &(&b.to_cmat().herm() * &a.to_cmat());
        assert_eq!(anti, f);
    }

    fn arb_mat(r: usize, k: usize) -> impl Strategy<Value = CMat> {
        proptest::collection::vec((-5.0f64..5.0, -5.0f64..5.0), r * k)
            .prop_map(move |v| CMat::from_vec(r, k, v.into_iter().map(|(a, b)| c(a, b)).collect()).unwrap())
    }

    proptest! {
        #[test]
        fn herm_reverses_products((a, b) in (1usize..5, 1usize..5, 1usize..5)
            .prop_flat_map(|(r, k, q)| (arb_mat(r, k), arb_mat(k, q))))
        {
            let lhs = (&a * &b).herm();
            let rhs = &b.herm() * &a.herm();
            prop_assert!(lhs.max_abs_diff(&rhs) < 1e-12);
        }

        #[test]
        fn fro_norm_is_trace_of_gram(a in (1usize..5, 1usize..5).prop_flat_map(|(r, k)| arb_mat(r, k))) {
            let t = (&a.herm() * &a).trace();
            prop_assert!((a.fro_norm_sq() - t.re).abs() < 1e-12 * (1.0 + t.re));
        }
    }
}
