//! Sparse multivariate polynomials and matrix polynomials in the uncertain
//! parameter vector `theta`.
//!
//! Monomials are ordered graded-descending everywhere: higher total degree
//! first, ties broken lexicographically with `theta_1 > theta_2 > ...`. For a
//! single parameter and half-degree two this gives the power vector
//! `(theta^2, theta, 1)`.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Coefficients with magnitude below this are dropped after arithmetic.
pub const ZERO_TOL: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PolyError {
    #[error("parameter dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("shape mismatch: {left:?} vs {right:?}")]
    ShapeMismatch {
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("matrix polynomial is not symmetric at ({row}, {col})")]
    NotSymmetric { row: usize, col: usize },
    #[error("expected {expected} entries, got {found}")]
    EntryCount { expected: usize, found: usize },
}

/// Exponents of one monomial `theta_1^e_1 * ... * theta_r^e_r`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ExponentVec(Vec<u32>);

impl ExponentVec {
    pub fn new(exponents: Vec<u32>) -> Self {
        Self(exponents)
    }

    pub fn zeros(nvars: usize) -> Self {
        Self(vec![0; nvars])
    }

    /// The monomial `theta_k`.
    pub fn unit(nvars: usize, k: usize) -> Self {
        let mut e = vec![0; nvars];
        e[k] = 1;
        Self(e)
    }

    pub fn nvars(&self) -> usize {
        self.0.len()
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    pub fn is_constant(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    /// Product of two monomials (exponent addition).
    pub fn mul(&self, other: &Self) -> Self {
        debug_assert_eq!(self.0.len(), other.0.len());
        Self(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn eval(&self, theta: &[f64]) -> f64 {
        self.0
            .iter()
            .zip(theta)
            .map(|(&e, &t)| t.powi(e as i32))
            .product()
    }
}

impl Ord for ExponentVec {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for ExponentVec {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for ExponentVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_constant() {
            return write!(f, "1");
        }
        let mut first = true;
        for (k, &e) in self.0.iter().enumerate() {
            if e == 0 {
                continue;
            }
            if !first {
                write!(f, "*")?;
            }
            first = false;
            if e == 1 {
                write!(f, "t{}", k + 1)?;
            } else {
                write!(f, "t{}^{}", k + 1, e)?;
            }
        }
        Ok(())
    }
}

/// All monomials in `nvars` variables of total degree `<= max_degree`, in
/// graded-descending order (constant last).
pub fn monomials_up_to(nvars: usize, max_degree: u32) -> Vec<ExponentVec> {
    if nvars == 0 {
        return vec![ExponentVec(Vec::new())];
    }
    let mut out = Vec::new();
    for deg in (0..=max_degree).rev() {
        let mut of_degree = Vec::new();
        let mut cur = vec![0u32; nvars];
        fill_degree(&mut cur, 0, deg, &mut of_degree);
        // fill_degree emits lexicographically descending already
        out.extend(of_degree);
    }
    out
}

fn fill_degree(cur: &mut Vec<u32>, pos: usize, remaining: u32, out: &mut Vec<ExponentVec>) {
    if pos + 1 == cur.len() {
        cur[pos] = remaining;
        out.push(ExponentVec(cur.clone()));
        return;
    }
    for e in (0..=remaining).rev() {
        cur[pos] = e;
        fill_degree(cur, pos + 1, remaining - e, out);
    }
    cur[pos] = 0;
}

/// Serialized form of one polynomial term inside scenario and certificate files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermRecord {
    pub exponents: Vec<u32>,
    pub coeff: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArithKind {
    Add,
    Sub,
    Mul,
}

/// A real polynomial in `nvars` parameters, stored as a sparse term map with
/// no zero coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    nvars: usize,
    terms: BTreeMap<ExponentVec, f64>,
}

impl Polynomial {
    pub fn zero(nvars: usize) -> Self {
        Self {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(nvars: usize, c: f64) -> Self {
        let mut p = Self::zero(nvars);
        p.add_term(ExponentVec::zeros(nvars), c);
        p
    }

    /// The polynomial `theta_k` (zero-based `k`).
    pub fn var(nvars: usize, k: usize) -> Self {
        let mut p = Self::zero(nvars);
        p.add_term(ExponentVec::unit(nvars, k), 1.0);
        p
    }

    pub fn from_terms<I>(nvars: usize, terms: I) -> Result<Self, PolyError>
    where
        I: IntoIterator<Item = (Vec<u32>, f64)>,
    {
        let mut p = Self::zero(nvars);
        for (e, c) in terms {
            if e.len() != nvars {
                return Err(PolyError::DimensionMismatch {
                    expected: nvars,
                    found: e.len(),
                });
            }
            p.add_term(ExponentVec(e), c);
        }
        Ok(p)
    }

    pub fn from_records(nvars: usize, records: &[TermRecord]) -> Result<Self, PolyError> {
        Self::from_terms(nvars, records.iter().map(|t| (t.exponents.clone(), t.coeff)))
    }

    pub fn to_records(&self) -> Vec<TermRecord> {
        self.terms_desc()
            .map(|(e, &c)| TermRecord {
                exponents: e.0.clone(),
                coeff: c,
            })
            .collect()
    }

    /// Accumulates `c * theta^e`, dropping the term if it cancels.
    pub fn add_term(&mut self, e: ExponentVec, c: f64) {
        debug_assert_eq!(e.nvars(), self.nvars);
        use std::collections::btree_map::Entry;
        match self.terms.entry(e) {
            Entry::Vacant(v) => {
                if c.abs() >= ZERO_TOL {
                    v.insert(c);
                }
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().abs() < ZERO_TOL {
                    o.remove();
                }
            }
        }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    /// Total degree; zero for the zero polynomial.
    pub fn degree(&self) -> u32 {
        self.terms.keys().map(ExponentVec::degree).max().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coeff(&self, e: &ExponentVec) -> f64 {
        self.terms.get(e).copied().unwrap_or(0.0)
    }

    /// Terms in graded-descending monomial order.
    pub fn terms_desc(&self) -> impl Iterator<Item = (&ExponentVec, &f64)> {
        self.terms.iter().rev()
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.terms.values().fold(0.0, |m, c| m.max(c.abs()))
    }

    fn check_dim(&self, other: &Self) -> Result<(), PolyError> {
        if self.nvars != other.nvars {
            return Err(PolyError::DimensionMismatch {
                expected: self.nvars,
                found: other.nvars,
            });
        }
        Ok(())
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self, PolyError> {
        self.check_dim(other)?;
        let mut out = self.clone();
        for (e, &c) in &other.terms {
            out.add_term(e.clone(), c);
        }
        Ok(out)
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self, PolyError> {
        self.check_dim(other)?;
        let mut out = self.clone();
        for (e, &c) in &other.terms {
            out.add_term(e.clone(), -c);
        }
        Ok(out)
    }

    pub fn checked_mul(&self, other: &Self) -> Result<Self, PolyError> {
        self.check_dim(other)?;
        let mut acc: BTreeMap<ExponentVec, f64> = BTreeMap::new();
        for (ea, &ca) in &self.terms {
            for (eb, &cb) in &other.terms {
                *acc.entry(ea.mul(eb)).or_insert(0.0) += ca * cb;
            }
        }
        acc.retain(|_, c| c.abs() >= ZERO_TOL);
        Ok(Self {
            nvars: self.nvars,
            terms: acc,
        })
    }

    pub fn arith(&self, other: &Self, kind: ArithKind) -> Result<Self, PolyError> {
        match kind {
            ArithKind::Add => self.checked_add(other),
            ArithKind::Sub => self.checked_sub(other),
            ArithKind::Mul => self.checked_mul(other),
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut terms = BTreeMap::new();
        for (e, &c) in &self.terms {
            let v = c * s;
            if v.abs() >= ZERO_TOL {
                terms.insert(e.clone(), v);
            }
        }
        Self {
            nvars: self.nvars,
            terms,
        }
    }

    pub fn eval(&self, theta: &[f64]) -> Result<f64, PolyError> {
        if theta.len() != self.nvars {
            return Err(PolyError::DimensionMismatch {
                expected: self.nvars,
                found: theta.len(),
            });
        }
        Ok(self.terms.iter().map(|(e, &c)| c * e.eval(theta)).sum())
    }

    /// Largest coefficient difference over the union of supports.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let mut m: f64 = 0.0;
        for (e, &c) in &self.terms {
            m = m.max((c - other.coeff(e)).abs());
        }
        for (e, &c) in &other.terms {
            if !self.terms.contains_key(e) {
                m = m.max(c.abs());
            }
        }
        m
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        for (k, (e, c)) in self.terms_desc().enumerate() {
            if k > 0 {
                write!(f, " {} ", if *c < 0.0 { '-' } else { '+' })?;
            } else if *c < 0.0 {
                write!(f, "-")?;
            }
            if e.is_constant() {
                write!(f, "{}", c.abs())?;
            } else {
                write!(f, "{}*{}", c.abs(), e)?;
            }
        }
        Ok(())
    }
}

// Operator sugar panics on dimension mismatch; fallible callers use checked_*.
impl Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        self.checked_add(rhs).expect("polynomial dimension mismatch")
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        self.checked_sub(rhs).expect("polynomial dimension mismatch")
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        self.checked_mul(rhs).expect("polynomial dimension mismatch")
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        self.scale(-1.0)
    }
}

/// Dense-shaped matrix whose entries are polynomials in a common parameter
/// vector.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixPolynomial {
    rows: usize,
    cols: usize,
    nvars: usize,
    entries: Vec<Polynomial>,
    symmetric: bool,
}

impl MatrixPolynomial {
    pub fn zeros(rows: usize, cols: usize, nvars: usize) -> Self {
        Self {
            rows,
            cols,
            nvars,
            entries: vec![Polynomial::zero(nvars); rows * cols],
            symmetric: rows == cols,
        }
    }

    pub fn identity(n: usize, nvars: usize) -> Self {
        let mut m = Self::zeros(n, n, nvars);
        for i in 0..n {
            m.entries[i * n + i] = Polynomial::constant(nvars, 1.0);
        }
        m
    }

    pub fn from_constant(a: &DMatrix<f64>, nvars: usize) -> Self {
        let (rows, cols) = a.shape();
        let mut m = Self::zeros(rows, cols, nvars);
        for i in 0..rows {
            for j in 0..cols {
                m.entries[i * cols + j] = Polynomial::constant(nvars, a[(i, j)]);
            }
        }
        m.symmetric = rows == cols && m.check_symmetric(0.0).is_ok();
        m
    }

    /// Row-major entries; the symmetry flag is set when the entries are
    /// coefficientwise symmetric.
    pub fn from_entries(
        rows: usize,
        cols: usize,
        nvars: usize,
        entries: Vec<Polynomial>,
    ) -> Result<Self, PolyError> {
        if entries.len() != rows * cols {
            return Err(PolyError::EntryCount {
                expected: rows * cols,
                found: entries.len(),
            });
        }
        if let Some(p) = entries.iter().find(|p| p.nvars() != nvars) {
            return Err(PolyError::DimensionMismatch {
                expected: nvars,
                found: p.nvars(),
            });
        }
        let mut m = Self {
            rows,
            cols,
            nvars,
            entries,
            symmetric: false,
        };
        m.symmetric = rows == cols && m.check_symmetric(0.0).is_ok();
        Ok(m)
    }

    /// Assembles from per-monomial coefficient matrices.
    pub fn from_coefficient_matrices<'a, I>(
        rows: usize,
        cols: usize,
        nvars: usize,
        coeffs: I,
    ) -> Self
    where
        I: IntoIterator<Item = (&'a ExponentVec, &'a DMatrix<f64>)>,
    {
        let mut m = Self::zeros(rows, cols, nvars);
        for (e, c) in coeffs {
            for i in 0..rows {
                for j in 0..cols {
                    let v = c[(i, j)];
                    if v != 0.0 {
                        m.entries[i * cols + j].add_term(e.clone(), v);
                    }
                }
            }
        }
        m.symmetric = rows == cols && m.check_symmetric(0.0).is_ok();
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn get(&self, i: usize, j: usize) -> &Polynomial {
        &self.entries[i * self.cols + j]
    }

    /// Sets one entry; clears the symmetry flag unless the result is still
    /// symmetric.
    pub fn set(&mut self, i: usize, j: usize, p: Polynomial) {
        assert_eq!(p.nvars(), self.nvars);
        self.entries[i * self.cols + j] = p;
        self.symmetric = self.rows == self.cols
            && self.get(i, j).max_abs_diff(self.get(j, i)) == 0.0
            && (self.symmetric || self.check_symmetric(0.0).is_ok());
    }

    /// Sets entries `(i, j)` and `(j, i)` together.
    pub fn set_symmetric(&mut self, i: usize, j: usize, p: Polynomial) {
        assert_eq!(p.nvars(), self.nvars);
        let keep = self.symmetric;
        self.entries[j * self.cols + i] = p.clone();
        self.entries[i * self.cols + j] = p;
        self.symmetric = keep;
    }

    pub fn entries(&self) -> &[Polynomial] {
        &self.entries
    }

    /// `Deg(M)`: maximum entry degree.
    pub fn degree(&self) -> u32 {
        self.entries.iter().map(Polynomial::degree).max().unwrap_or(0)
    }

    pub fn check_symmetric(&self, tol: f64) -> Result<(), PolyError> {
        if self.rows != self.cols {
            return Err(PolyError::NotSymmetric { row: 0, col: 0 });
        }
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                if self.get(i, j).max_abs_diff(self.get(j, i)) > tol {
                    return Err(PolyError::NotSymmetric { row: i, col: j });
                }
            }
        }
        Ok(())
    }

    fn check_shape(&self, other: &Self) -> Result<(), PolyError> {
        if self.nvars != other.nvars {
            return Err(PolyError::DimensionMismatch {
                expected: self.nvars,
                found: other.nvars,
            });
        }
        if self.rows != other.rows || self.cols != other.cols {
            return Err(PolyError::ShapeMismatch {
                left: (self.rows, self.cols),
                right: (other.rows, other.cols),
            });
        }
        Ok(())
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self, PolyError> {
        self.check_shape(other)?;
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a + b)
            .collect();
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            nvars: self.nvars,
            entries,
            symmetric: self.symmetric && other.symmetric,
        })
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self, PolyError> {
        self.check_shape(other)?;
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a - b)
            .collect();
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            nvars: self.nvars,
            entries,
            symmetric: self.symmetric && other.symmetric,
        })
    }

    /// Matrix product; zero entries are skipped so sparse factors stay cheap.
    pub fn checked_mul(&self, other: &Self) -> Result<Self, PolyError> {
        if self.nvars != other.nvars {
            return Err(PolyError::DimensionMismatch {
                expected: self.nvars,
                found: other.nvars,
            });
        }
        if self.cols != other.rows {
            return Err(PolyError::ShapeMismatch {
                left: (self.rows, self.cols),
                right: (other.rows, other.cols),
            });
        }
        let mut out = Self::zeros(self.rows, other.cols, self.nvars);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = other.get(k, j);
                    if b.is_zero() {
                        continue;
                    }
                    let idx = i * other.cols + j;
                    out.entries[idx] = &out.entries[idx] + &(a * b);
                }
            }
        }
        out.symmetric = out.rows == out.cols && out.check_symmetric(0.0).is_ok();
        Ok(out)
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            nvars: self.nvars,
            entries: self.entries.iter().map(|p| p.scale(s)).collect(),
            symmetric: self.symmetric,
        }
    }

    /// Multiplies every entry by a scalar polynomial.
    pub fn scale_poly(&self, s: &Polynomial) -> Result<Self, PolyError> {
        if s.nvars() != self.nvars {
            return Err(PolyError::DimensionMismatch {
                expected: self.nvars,
                found: s.nvars(),
            });
        }
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            nvars: self.nvars,
            entries: self.entries.iter().map(|p| p * s).collect(),
            symmetric: self.symmetric,
        })
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows, self.nvars);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.entries[j * self.rows + i] = self.get(i, j).clone();
            }
        }
        out.symmetric = self.symmetric;
        out
    }

    /// Entrywise evaluation. Symmetric inputs give exactly symmetric output.
    pub fn eval(&self, theta: &[f64]) -> Result<DMatrix<f64>, PolyError> {
        if theta.len() != self.nvars {
            return Err(PolyError::DimensionMismatch {
                expected: self.nvars,
                found: theta.len(),
            });
        }
        let mut out = DMatrix::zeros(self.rows, self.cols);
        if self.symmetric {
            for i in 0..self.rows {
                for j in i..self.cols {
                    let v = self.get(i, j).eval(theta)?;
                    out[(i, j)] = v;
                    out[(j, i)] = v;
                }
            }
        } else {
            for i in 0..self.rows {
                for j in 0..self.cols {
                    out[(i, j)] = self.get(i, j).eval(theta)?;
                }
            }
        }
        Ok(out)
    }

    /// Splits into `sum_mu C_mu * theta^mu`, monomials in graded-descending order.
    pub fn coefficient_matrices(&self) -> Vec<(ExponentVec, DMatrix<f64>)> {
        let mut map: BTreeMap<ExponentVec, DMatrix<f64>> = BTreeMap::new();
        for i in 0..self.rows {
            for j in 0..self.cols {
                for (e, &c) in self.get(i, j).terms_desc() {
                    map.entry(e.clone())
                        .or_insert_with(|| DMatrix::zeros(self.rows, self.cols))[(i, j)] = c;
                }
            }
        }
        map.into_iter().rev().collect()
    }

    /// `A^T * self * B` for constant matrices.
    pub fn congruence(&self, a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<Self, PolyError> {
        if a.nrows() != self.rows || b.nrows() != self.cols {
            return Err(PolyError::ShapeMismatch {
                left: (self.rows, self.cols),
                right: (a.nrows(), b.nrows()),
            });
        }
        let parts: Vec<(ExponentVec, DMatrix<f64>)> = self
            .coefficient_matrices()
            .into_iter()
            .map(|(e, c)| (e, a.transpose() * c * b))
            .collect();
        let mut out = Self::from_coefficient_matrices(
            a.ncols(),
            b.ncols(),
            self.nvars,
            parts.iter().map(|(e, c)| (e, c)),
        );
        if self.symmetric && a == b {
            out.symmetrize();
        }
        Ok(out)
    }

    /// Replaces `(i, j)` and `(j, i)` by their average, making the flag true.
    pub fn symmetrize(&mut self) {
        assert_eq!(self.rows, self.cols);
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                let avg = (self.get(i, j) + self.get(j, i)).scale(0.5);
                self.entries[i * self.cols + j] = avg.clone();
                self.entries[j * self.cols + i] = avg;
            }
        }
        self.symmetric = true;
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a.max_abs_diff(b))
            .fold(0.0, f64::max)
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.entries
            .iter()
            .map(Polynomial::max_abs_coeff)
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p1(terms: &[(u32, f64)]) -> Polynomial {
        Polynomial::from_terms(1, terms.iter().map(|&(e, c)| (vec![e], c))).unwrap()
    }

    #[test]
    fn difference_of_squares() {
        let t1 = Polynomial::var(2, 0);
        let t2 = Polynomial::var(2, 1);
        let prod = &(&t1 + &t2) * &(&t1 - &t2);
        let expected =
            Polynomial::from_terms(2, vec![(vec![2, 0], 1.0), (vec![0, 2], -1.0)]).unwrap();
        assert_eq!(prod, expected);
    }

    #[test]
    fn add_zero_is_identity() {
        let f = p1(&[(4, 7.0), (3, 2.0), (0, 9.0)]);
        assert_eq!(&f + &Polynomial::zero(1), f);
    }

    #[test]
    fn subtraction_drops_cancelled_terms() {
        let f = p1(&[(4, 7.0), (3, 2.0), (2, 4.0), (1, 6.0), (0, 9.0)]);
        let g = p1(&[(4, 7.0), (3, 2.0)]);
        let d = &f - &g;
        assert_eq!(d, p1(&[(2, 4.0), (1, 6.0), (0, 9.0)]));
        assert_eq!(d.num_terms(), 3);
        assert_eq!(d.degree(), 2);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let a = Polynomial::var(1, 0);
        let b = Polynomial::var(2, 0);
        assert!(matches!(
            a.arith(&b, ArithKind::Mul),
            Err(PolyError::DimensionMismatch { .. })
        ));
        assert!(a.eval(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn evaluation_of_example_polynomial() {
        let f = p1(&[(4, 7.0), (3, 2.0), (2, 4.0), (1, 6.0), (0, 9.0)]);
        assert_eq!(f.eval(&[0.0]).unwrap(), 9.0);
        assert_eq!(f.eval(&[1.0]).unwrap(), 28.0);
        assert_eq!(Polynomial::zero(3).eval(&[0.3, -2.0, 5.0]).unwrap(), 0.0);
    }

    #[test]
    fn monomial_order_is_graded_descending() {
        let m = monomials_up_to(2, 2);
        let shown: Vec<String> = m.iter().map(|e| e.to_string()).collect();
        assert_eq!(shown, ["t1^2", "t1*t2", "t2^2", "t1", "t2", "1"]);
        let m1 = monomials_up_to(1, 2);
        assert_eq!(m1, vec![ExponentVec::new(vec![2]), ExponentVec::new(vec![1]), ExponentVec::new(vec![0])]);
    }

    #[test]
    fn matrix_eval_diag() {
        let mut m = MatrixPolynomial::zeros(2, 2, 1);
        m.set(0, 0, p1(&[(0, 1.0), (1, 1.0)]));
        m.set(1, 1, p1(&[(0, 1.0), (1, -1.0)]));
        let v = m.eval(&[1.0]).unwrap();
        assert_eq!(v, DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 0.0]));
        assert!(m.is_symmetric());
    }

    #[test]
    fn constant_matrix_same_everywhere() {
        let a = DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let m = MatrixPolynomial::from_constant(&a, 2);
        for th in [[0.0, 0.0], [1.0, -3.0], [0.2, 0.7]] {
            assert_eq!(m.eval(&th).unwrap(), a);
        }
    }

    #[test]
    fn multiply_by_identity() {
        let mut a = MatrixPolynomial::zeros(2, 2, 1);
        a.set(0, 1, p1(&[(2, 3.0), (0, 1.0)]));
        a.set(1, 0, p1(&[(1, -1.0)]));
        let prod = a.checked_mul(&MatrixPolynomial::identity(2, 1)).unwrap();
        assert_eq!(prod.max_abs_diff(&a), 0.0);
    }

    #[test]
    fn one_by_one_product_matches_scalar() {
        let f = p1(&[(1, 2.0), (0, 1.0)]);
        let g = p1(&[(2, -1.0), (0, 3.0)]);
        let a = MatrixPolynomial::from_entries(1, 1, 1, vec![f.clone()]).unwrap();
        let b = MatrixPolynomial::from_entries(1, 1, 1, vec![g.clone()]).unwrap();
        assert_eq!(a.checked_mul(&b).unwrap().get(0, 0), &(&f * &g));
    }

    #[test]
    fn shape_mismatch_rejected() {
        let a = MatrixPolynomial::zeros(2, 3, 1);
        let b = MatrixPolynomial::zeros(2, 3, 1);
        assert!(matches!(a.checked_mul(&b), Err(PolyError::ShapeMismatch { .. })));
    }

    #[test]
    fn records_round_trip() {
        let f = Polynomial::from_terms(2, vec![(vec![1, 1], -0.5), (vec![0, 0], 2.0)]).unwrap();
        let g = Polynomial::from_records(2, &f.to_records()).unwrap();
        assert_eq!(f, g);
    }
}
