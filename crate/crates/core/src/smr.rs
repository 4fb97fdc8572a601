//! Square matrix representation (Gram form) of scalar and matrix
//! polynomials.
//!
//! A symmetric `s x s` matrix polynomial `M` of degree at most `2d` is written
//! as `(phi ⊗ I_s)^T G (phi ⊗ I_s)` where `phi` is the power vector of all
//! monomials of degree `<= d`. Gram rows and columns are indexed by
//! `k = a * s + i` with `a` the monomial index and `i` the block row, so
//!
//! ```text
//! M_ij(theta) = sum_{a,b} G[a*s + i, b*s + j] * phi_a(theta) * phi_b(theta)
//! ```
//!
//! `G` is not unique; the family of valid matrices is an affine space
//! `base + span(null_basis)`.

use std::collections::{BTreeMap, HashMap};

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::linalg::{binomial, SymSparse};
use crate::polyalg::{monomials_up_to, ExponentVec, MatrixPolynomial, PolyError, Polynomial};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SmrError {
    #[error("degree {degree} exceeds 2*d = {}", 2 * half_degree)]
    DegreeOverflow { degree: u32, half_degree: u32 },
    #[error("target half-degree {to} is below source half-degree {from}")]
    PadShrink { from: u32, to: u32 },
    #[error("expected {expected} null-space coefficients, got {found}")]
    DeltaLength { expected: usize, found: usize },
    #[error("Gram matrix size {found} does not match l(r,d)*s = {expected}")]
    GramSize { expected: usize, found: usize },
    #[error(transparent)]
    Poly(#[from] PolyError),
}

/// `l(r, d)`: the number of monomials in `r` variables of degree `<= d`.
pub fn monomial_count(r: usize, d: u32) -> usize {
    binomial(r + d as usize, d as usize)
}

/// Ordered monomial list `phi(r, d)`, constant last.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerVector {
    r: usize,
    d: u32,
    monos: Vec<ExponentVec>,
    index: HashMap<ExponentVec, usize>,
}

impl PowerVector {
    pub fn new(r: usize, d: u32) -> Self {
        let monos = monomials_up_to(r, d);
        let index = monos.iter().cloned().enumerate().map(|(k, e)| (e, k)).collect();
        Self { r, d, monos, index }
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn d(&self) -> u32 {
        self.d
    }

    pub fn len(&self) -> usize {
        self.monos.len()
    }

    pub fn is_empty(&self) -> bool {
        self.monos.is_empty()
    }

    pub fn monomials(&self) -> &[ExponentVec] {
        &self.monos
    }

    pub fn index_of(&self, e: &ExponentVec) -> Option<usize> {
        self.index.get(e).copied()
    }

    pub fn eval(&self, theta: &[f64]) -> DVector<f64> {
        DVector::from_iterator(self.len(), self.monos.iter().map(|m| m.eval(theta)))
    }
}

pub fn power_vector(r: usize, d: u32) -> PowerVector {
    PowerVector::new(r, d)
}

/// Product table of a power vector: for every monomial `mu` of degree
/// `<= 2d`, the unordered index pairs `(a, b)`, `a <= b`, with
/// `phi_a * phi_b = mu`.
#[derive(Debug, Clone)]
pub struct GramIndex {
    phi: PowerVector,
    products: BTreeMap<ExponentVec, Vec<(usize, usize)>>,
    pair_mono: Vec<Vec<ExponentVec>>,
}

impl GramIndex {
    pub fn new(r: usize, d: u32) -> Self {
        let phi = PowerVector::new(r, d);
        let l = phi.len();
        let mut products: BTreeMap<ExponentVec, Vec<(usize, usize)>> = BTreeMap::new();
        let mut pair_mono = vec![Vec::with_capacity(l); l];
        for a in 0..l {
            for b in 0..l {
                let mu = phi.monos[a].mul(&phi.monos[b]);
                if a <= b {
                    products.entry(mu.clone()).or_default().push((a, b));
                }
                pair_mono[a].push(mu);
            }
        }
        Self {
            phi,
            products,
            pair_mono,
        }
    }

    pub fn phi(&self) -> &PowerVector {
        &self.phi
    }

    pub fn len(&self) -> usize {
        self.phi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phi.is_empty()
    }

    /// Unordered pairs whose product is `mu`.
    pub fn pairs(&self, mu: &ExponentVec) -> &[(usize, usize)] {
        self.products.get(mu).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Product monomial `phi_a * phi_b`.
    pub fn product(&self, a: usize, b: usize) -> &ExponentVec {
        &self.pair_mono[a][b]
    }

    /// Monomials reachable as products, graded-descending.
    pub fn product_monomials(&self) -> impl Iterator<Item = &ExponentVec> {
        self.products.keys().rev()
    }
}

/// Gram positions (upper-triangle keys) and values that represent
/// `coeff * mu` in output entry `(i, j)` of an `s x s` matrix polynomial,
/// with the coefficient split equally across all contributing positions.
///
/// For `i != j` the mirrored entry `(j, i)` is represented implicitly by the
/// symmetry of the Gram matrix.
pub fn split_coefficient(
    index: &GramIndex,
    s: usize,
    i: usize,
    j: usize,
    mu: &ExponentVec,
    coeff: f64,
    mut emit: impl FnMut(usize, usize, f64),
) -> Result<(), SmrError> {
    let pairs = index.pairs(mu);
    if pairs.is_empty() {
        return Err(SmrError::DegreeOverflow {
            degree: mu.degree(),
            half_degree: index.phi.d,
        });
    }
    let (i, j) = (i.min(j), i.max(j));
    let ordered: usize = pairs.iter().map(|&(a, b)| if a == b { 1 } else { 2 }).sum();
    let v = coeff / ordered as f64;
    for &(a, b) in pairs {
        emit(a * s + i, b * s + j, v);
        if a != b && i != j {
            emit(b * s + i, a * s + j, v);
        }
    }
    Ok(())
}

/// Gram base matrix plus a basis of the homogeneous space whose expansion
/// vanishes identically.
#[derive(Debug, Clone, PartialEq)]
pub struct GramForm {
    pub r: usize,
    pub s: usize,
    pub d: u32,
    pub base: DMatrix<f64>,
    pub null_basis: Vec<SymSparse>,
}

impl GramForm {
    pub fn size(&self) -> usize {
        monomial_count(self.r, self.d) * self.s
    }

    /// `base + sum_k delta_k * B_k`.
    pub fn matrix(&self, delta: &[f64]) -> Result<DMatrix<f64>, SmrError> {
        if delta.len() != self.null_basis.len() {
            return Err(SmrError::DeltaLength {
                expected: self.null_basis.len(),
                found: delta.len(),
            });
        }
        let mut g = self.base.clone();
        for (b, &dk) in self.null_basis.iter().zip(delta) {
            if dk != 0.0 {
                b.add_to_dense(&mut g, dk);
            }
        }
        Ok(g)
    }
}

/// Canonical Gram form of a symmetric matrix polynomial at half-degree `d`.
pub fn gram_canonical(m: &MatrixPolynomial, d: u32) -> Result<GramForm, SmrError> {
    m.check_symmetric(0.0)?;
    let degree = m.degree();
    if degree > 2 * d {
        return Err(SmrError::DegreeOverflow {
            degree,
            half_degree: d,
        });
    }
    let r = m.nvars();
    let s = m.rows();
    let index = GramIndex::new(r, d);
    let n = index.len() * s;
    let mut base = DMatrix::zeros(n, n);
    for i in 0..s {
        for j in i..s {
            for (mu, &c) in m.get(i, j).terms_desc() {
                split_coefficient(&index, s, i, j, mu, c, |p, q, v| {
                    base[(p, q)] += v;
                    if p != q {
                        base[(q, p)] += v;
                    }
                })?;
            }
        }
    }
    Ok(GramForm {
        r,
        s,
        d,
        base,
        null_basis: gram_null_basis_indexed(&index, s),
    })
}

/// Orthonormal basis of `{ B symmetric : (phi ⊗ I_s)^T B (phi ⊗ I_s) = 0 }`.
pub fn gram_null_basis(r: usize, d: u32, s: usize) -> Vec<SymSparse> {
    gram_null_basis_indexed(&GramIndex::new(r, d), s)
}

/// Null basis built group by group. Each symmetric coordinate `(p, q)`,
/// `p <= q`, feeds exactly one output coordinate (monomial, block entry) with
/// weight 2 when `p != q` share a block row, else 1. Within a group, weighted
/// differences against the first member span the kernel; Gram-Schmidt in the
/// Frobenius inner product makes them orthonormal. Groups have disjoint
/// supports, so the full list is orthonormal.
pub fn gram_null_basis_indexed(index: &GramIndex, s: usize) -> Vec<SymSparse> {
    let n = index.len() * s;
    let mut groups: BTreeMap<(ExponentVec, usize, usize), Vec<(usize, usize, f64)>> =
        BTreeMap::new();
    for p in 0..n {
        for q in p..n {
            let (a, i) = (p / s, p % s);
            let (b, j) = (q / s, q % s);
            let w = if p != q && i == j { 2.0 } else { 1.0 };
            groups
                .entry((index.product(a, b).clone(), i.min(j), i.max(j)))
                .or_default()
                .push((p, q, w));
        }
    }
    let mut basis = Vec::new();
    // Deterministic order: descending monomial, then block entry.
    for members in groups.into_values().rev() {
        if members.len() < 2 {
            continue;
        }
        let w0 = members[0].2;
        let norm_sq = |p: usize, q: usize| if p == q { 1.0 } else { 2.0 };
        let mut ortho: Vec<Vec<f64>> = Vec::new();
        let k = members.len();
        for (t, &(_, _, wt)) in members.iter().enumerate().skip(1) {
            let mut v = vec![0.0; k];
            v[t] = w0;
            v[0] = -wt;
            for u in &ortho {
                let dot: f64 = (0..k)
                    .map(|x| v[x] * u[x] * norm_sq(members[x].0, members[x].1))
                    .sum();
                for x in 0..k {
                    v[x] -= dot * u[x];
                }
            }
            let nrm: f64 = (0..k)
                .map(|x| v[x] * v[x] * norm_sq(members[x].0, members[x].1))
                .sum::<f64>()
                .sqrt();
            for x in v.iter_mut() {
                *x /= nrm;
            }
            ortho.push(v);
        }
        for v in ortho {
            let trip = members
                .iter()
                .zip(&v)
                .filter(|(_, &c)| c != 0.0)
                .map(|(&(p, q, _), &c)| (p, q, c));
            basis.push(SymSparse::from_triplets(n, trip));
        }
    }
    basis
}

/// Expands a Gram matrix at half-degree `d` into an `s x s` matrix polynomial.
pub fn expand_gram(g: &DMatrix<f64>, r: usize, d: u32, s: usize) -> Result<MatrixPolynomial, SmrError> {
    let index = GramIndex::new(r, d);
    let l = index.len();
    if g.nrows() != l * s || g.ncols() != l * s {
        return Err(SmrError::GramSize {
            expected: l * s,
            found: g.nrows(),
        });
    }
    let mut entries = vec![Polynomial::zero(r); s * s];
    for i in 0..s {
        for j in i..s {
            let mut acc: BTreeMap<ExponentVec, f64> = BTreeMap::new();
            for a in 0..l {
                for b in 0..l {
                    let v = g[(a * s + i, b * s + j)];
                    if v != 0.0 {
                        *acc.entry(index.product(a, b).clone()).or_insert(0.0) += v;
                    }
                }
            }
            let p = Polynomial::from_terms(r, acc.into_iter().map(|(e, c)| (e.as_slice().to_vec(), c)))?;
            entries[j * s + i] = p.clone();
            entries[i * s + j] = p;
        }
    }
    Ok(MatrixPolynomial::from_entries(s, s, r, entries)?)
}

/// Expands `base + sum delta_k B_k`.
pub fn gram_expand(g: &GramForm, delta: &[f64]) -> Result<MatrixPolynomial, SmrError> {
    expand_gram(&g.matrix(delta)?, g.r, g.d, g.s)
}

/// Embeds a Gram matrix at half-degree `d_from` into the larger Gram space of
/// half-degree `d_to`; the expansion is unchanged.
pub fn gram_pad(
    a: &DMatrix<f64>,
    r: usize,
    d_from: u32,
    d_to: u32,
    s: usize,
) -> Result<DMatrix<f64>, SmrError> {
    if d_to < d_from {
        return Err(SmrError::PadShrink {
            from: d_from,
            to: d_to,
        });
    }
    let map = pad_map(r, d_from, d_to);
    let l_from = map.len();
    if a.nrows() != l_from * s {
        return Err(SmrError::GramSize {
            expected: l_from * s,
            found: a.nrows(),
        });
    }
    let n_to = monomial_count(r, d_to) * s;
    let mut out = DMatrix::zeros(n_to, n_to);
    for p in 0..a.nrows() {
        for q in 0..a.ncols() {
            out[(map[p / s] * s + p % s, map[q / s] * s + q % s)] = a[(p, q)];
        }
    }
    Ok(out)
}

/// Position of each `phi(r, d_from)` monomial inside `phi(r, d_to)`.
pub fn pad_map(r: usize, d_from: u32, d_to: u32) -> Vec<usize> {
    let to = PowerVector::new(r, d_to);
    PowerVector::new(r, d_from)
        .monomials()
        .iter()
        .map(|e| to.index_of(e).expect("lower-degree monomial present"))
        .collect()
}
