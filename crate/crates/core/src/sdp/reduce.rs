//! Equality elimination and conversion to block-diagonal dual form.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::DVector;

use super::ipm::{StdBlock, StdForm};
use super::{Lmi, SdpProblem, VarId};
use crate::linalg::SymSparse;

pub(crate) struct Inconsistent;

type SparseMap = BTreeMap<(usize, usize), f64>;

/// A pivot variable expressed through the remaining ones:
/// `x_p = rhs - sum_f a_f x_f`.
struct Pivot {
    var: VarId,
    rhs: f64,
    coeffs: Vec<(VarId, f64)>,
}

pub(crate) struct Reduction {
    pub std: StdForm,
    nvars: usize,
    kept: Vec<VarId>,
    pivots: Vec<Pivot>,
    /// A variable that appears in no LMI carries objective weight.
    pub unbounded_if_feasible: bool,
}

impl Reduction {
    /// Maps the reduced multipliers back to a full assignment.
    pub fn recover(&self, y: &DVector<f64>) -> Vec<f64> {
        let mut x = vec![0.0; self.nvars];
        for (k, &v) in self.kept.iter().enumerate() {
            x[v] = y[k];
        }
        for p in &self.pivots {
            x[p.var] = p.rhs - p.coeffs.iter().map(|(f, a)| a * x[*f]).sum::<f64>();
        }
        x
    }
}

fn rref(p: &SdpProblem) -> Result<Vec<Pivot>, Inconsistent> {
    let mut rows: Vec<(BTreeMap<VarId, f64>, f64, f64)> = p
        .equalities()
        .iter()
        .map(|e| {
            let mut m = BTreeMap::new();
            for &(v, c) in &e.terms {
                *m.entry(v).or_insert(0.0) += c;
            }
            let scale = m.values().fold(e.rhs.abs(), |a: f64, c: &f64| a.max(c.abs())).max(1.0);
            (m, e.rhs, scale)
        })
        .collect();
    let mut pivot_rows: Vec<(VarId, usize)> = Vec::new();
    for r in 0..rows.len() {
        let (row, rhs, scale) = &rows[r];
        let best = row
            .iter()
            .filter(|(_, c)| c.abs() > 1e-12 * scale)
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()).then(b.0.cmp(a.0)))
            .map(|(v, c)| (*v, *c));
        let Some((pv, pc)) = best else {
            if rhs.abs() > 1e-9 * scale {
                return Err(Inconsistent);
            }
            rows[r].0.clear();
            rows[r].1 = 0.0;
            continue;
        };
        for c in rows[r].0.values_mut() {
            *c /= pc;
        }
        rows[r].1 /= pc;
        let (prow, prhs, _) = rows[r].clone();
        for (k, (row, rhs, _)) in rows.iter_mut().enumerate() {
            if k == r {
                continue;
            }
            let Some(a) = row.get(&pv).copied() else { continue };
            for (&v, &c) in &prow {
                *row.entry(v).or_insert(0.0) -= a * c;
            }
            row.retain(|_, c| c.abs() > 1e-15);
            row.remove(&pv);
            *rhs -= a * prhs;
        }
        pivot_rows.push((pv, r));
    }
    Ok(pivot_rows
        .into_iter()
        .map(|(var, r)| {
            let (row, rhs, _) = &rows[r];
            Pivot {
                var,
                rhs: *rhs,
                coeffs: row.iter().filter(|(v, _)| **v != var).map(|(v, c)| (*v, *c)).collect(),
            }
        })
        .collect())
}

fn add_into(dst: &mut SparseMap, src: &SparseMap, alpha: f64) {
    for (&k, &v) in src {
        *dst.entry(k).or_insert(0.0) += alpha * v;
    }
}

pub(crate) fn reduce(p: &SdpProblem, lmis: &[Lmi]) -> Result<Reduction, Inconsistent> {
    let pivots = rref(p)?;
    let pivot_set: BTreeSet<VarId> = pivots.iter().map(|q| q.var).collect();

    let mut objective: BTreeMap<VarId, f64> = BTreeMap::new();
    for &(v, c) in p.objective() {
        *objective.entry(v).or_insert(0.0) += c;
    }
    for q in &pivots {
        if let Some(cp) = objective.remove(&q.var) {
            for &(f, a) in &q.coeffs {
                *objective.entry(f).or_insert(0.0) -= cp * a;
            }
        }
    }

    let mut reduced: Vec<(usize, SparseMap, BTreeMap<VarId, SparseMap>)> = Vec::new();
    for lmi in lmis.iter().filter(|l| l.size > 0) {
        let mut f0: SparseMap = lmi.constant.entries().iter().map(|&(i, j, v)| ((i, j), v)).collect();
        let mut terms: BTreeMap<VarId, SparseMap> = BTreeMap::new();
        for (v, f) in &lmi.terms {
            let t = terms.entry(*v).or_default();
            for &(i, j, c) in f.entries() {
                *t.entry((i, j)).or_insert(0.0) += c;
            }
        }
        for q in &pivots {
            let Some(fp) = terms.remove(&q.var) else { continue };
            add_into(&mut f0, &fp, q.rhs);
            for &(f, a) in &q.coeffs {
                add_into(terms.entry(f).or_default(), &fp, -a);
            }
        }
        for t in terms.values_mut() {
            t.retain(|_, c| c.abs() > 1e-15);
        }
        terms.retain(|_, t| !t.is_empty());
        reduced.push((lmi.size, f0, terms));
    }

    let active: BTreeSet<VarId> = reduced.iter().flat_map(|r| r.2.keys().copied()).collect();
    let kept: Vec<VarId> = (0..p.nvars()).filter(|v| !pivot_set.contains(v) && active.contains(v)).collect();
    let unbounded_if_feasible = objective
        .iter()
        .any(|(v, c)| *c != 0.0 && !pivot_set.contains(v) && !active.contains(v));
    let index: BTreeMap<VarId, usize> = kept.iter().enumerate().map(|(k, v)| (*v, k)).collect();

    let blocks = reduced
        .into_iter()
        .map(|(n, f0, terms)| StdBlock {
            n,
            c: SymSparse::from_map(n, f0).to_dense(),
            a: terms
                .into_iter()
                .map(|(v, t)| (index[&v], SymSparse::from_map(n, t).scale(-1.0)))
                .collect(),
        })
        .collect();
    let b = DVector::from_iterator(kept.len(), kept.iter().map(|v| objective.get(v).copied().unwrap_or(0.0)));
    Ok(Reduction {
        std: StdForm {
            m: kept.len(),
            b,
            blocks,
        },
        nvars: p.nvars(),
        kept,
        pivots,
        unbounded_if_feasible,
    })
}
