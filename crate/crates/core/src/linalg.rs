//! Small dense/sparse helpers shared by the SMR, SDP and certifier code.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, SymmetricEigen};

/// Symmetric matrix stored as its upper-triangle nonzeros `(i, j, v)` with
/// `i <= j`, sorted and unique. The full matrix has `v` at both `(i, j)` and
/// `(j, i)`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SymSparse {
    n: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl SymSparse {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            entries: Vec::new(),
        }
    }

    /// Accumulates triplets; lower-triangle keys are folded onto the upper
    /// triangle and exact zeros are dropped.
    pub fn from_triplets<I>(n: usize, triplets: I) -> Self
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut map: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for (i, j, v) in triplets {
            assert!(i < n && j < n, "index ({i}, {j}) out of range {n}");
            *map.entry((i.min(j), i.max(j))).or_insert(0.0) += v;
        }
        Self::from_map(n, map)
    }

    pub fn from_map(n: usize, map: BTreeMap<(usize, usize), f64>) -> Self {
        let entries = map
            .into_iter()
            .filter(|(_, v)| *v != 0.0)
            .map(|((i, j), v)| (i, j, v))
            .collect();
        Self { n, entries }
    }

    /// Reads the upper triangle of a dense matrix, keeping `|v| > tol`.
    pub fn from_dense(a: &DMatrix<f64>, tol: f64) -> Self {
        let n = a.nrows();
        let mut entries = Vec::new();
        for j in 0..n {
            for i in 0..=j {
                let v = a[(i, j)];
                if v.abs() > tol {
                    entries.push((i, j, v));
                }
            }
        }
        entries.sort_by_key(|&(i, j, _)| (i, j));
        Self { n, entries }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[(usize, usize, f64)] {
        &self.entries
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut a = DMatrix::zeros(self.n, self.n);
        self.add_to_dense(&mut a, 1.0);
        a
    }

    /// `a += alpha * self`.
    pub fn add_to_dense(&self, a: &mut DMatrix<f64>, alpha: f64) {
        for &(i, j, v) in &self.entries {
            a[(i, j)] += alpha * v;
            if i != j {
                a[(j, i)] += alpha * v;
            }
        }
    }

    /// Frobenius inner product with a dense symmetric matrix.
    pub fn dot_dense(&self, a: &DMatrix<f64>) -> f64 {
        self.entries
            .iter()
            .map(|&(i, j, v)| if i == j { v * a[(i, i)] } else { v * (a[(i, j)] + a[(j, i)]) })
            .sum()
    }

    /// Frobenius inner product of two sparse symmetric matrices.
    pub fn dot(&self, other: &Self) -> f64 {
        let (mut p, mut q) = (0, 0);
        let mut s = 0.0;
        while p < self.entries.len() && q < other.entries.len() {
            let (i, j, v) = self.entries[p];
            let (k, l, w) = other.entries[q];
            match (i, j).cmp(&(k, l)) {
                std::cmp::Ordering::Less => p += 1,
                std::cmp::Ordering::Greater => q += 1,
                std::cmp::Ordering::Equal => {
                    s += if i == j { v * w } else { 2.0 * v * w };
                    p += 1;
                    q += 1;
                }
            }
        }
        s
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn scale(&self, alpha: f64) -> Self {
        Self {
            n: self.n,
            entries: self.entries.iter().map(|&(i, j, v)| (i, j, alpha * v)).collect(),
        }
    }

    /// Places this matrix as a diagonal block at `offset` inside an
    /// `n_total`-sized matrix.
    pub fn shifted(&self, offset: usize, n_total: usize) -> Self {
        assert!(offset + self.n <= n_total);
        Self {
            n: n_total,
            entries: self
                .entries
                .iter()
                .map(|&(i, j, v)| (i + offset, j + offset, v))
                .collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().fold(0.0, |m, e| m.max(e.2.abs()))
    }
}

/// Smallest eigenvalue of a symmetric matrix (0 for the empty matrix).
pub fn min_eigenvalue(a: &DMatrix<f64>) -> f64 {
    if a.nrows() == 0 {
        return 0.0;
    }
    let sym = (a + a.transpose()) * 0.5;
    SymmetricEigen::new(sym)
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min)
}

/// Eigenvalues of a symmetric matrix in ascending order.
pub fn sorted_eigenvalues(a: &DMatrix<f64>) -> Vec<f64> {
    let sym = (a + a.transpose()) * 0.5;
    let mut ev: Vec<f64> = SymmetricEigen::new(sym).eigenvalues.iter().cloned().collect();
    ev.sort_by(|x, y| x.total_cmp(y));
    ev
}

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}
