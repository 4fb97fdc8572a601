//! Primal-dual interior-point core for `max b^T y  s.t.  C - sum y_k A_k ⪰ 0`
//! with its companion `min <C, X>  s.t.  <A_k, X> = b_k, X ⪰ 0`.

use faer::{Mat, Side};
use nalgebra::{DMatrix, DVector};

use super::{SdpStatus, SolverConfig};
use crate::linalg::{min_eigenvalue, SymSparse};

pub(crate) struct StdBlock {
    pub n: usize,
    pub c: DMatrix<f64>,
    /// `(multiplier index, A_k restricted to this block)`.
    pub a: Vec<(usize, SymSparse)>,
}

pub(crate) struct StdForm {
    pub m: usize,
    pub b: DVector<f64>,
    pub blocks: Vec<StdBlock>,
}

impl StdForm {
    fn a_op(&self, x: &[DMatrix<f64>]) -> DVector<f64> {
        let mut out = DVector::zeros(self.m);
        for (blk, xb) in self.blocks.iter().zip(x) {
            for (k, a) in &blk.a {
                out[*k] += a.dot_dense(xb);
            }
        }
        out
    }

    fn a_adj(&self, y: &DVector<f64>) -> Vec<DMatrix<f64>> {
        self.blocks
            .iter()
            .map(|blk| {
                let mut s = DMatrix::zeros(blk.n, blk.n);
                for (k, a) in &blk.a {
                    if y[*k] != 0.0 {
                        a.add_to_dense(&mut s, y[*k]);
                    }
                }
                s
            })
            .collect()
    }
}

pub(crate) struct IpmOutput {
    pub status: SdpStatus,
    pub y: DVector<f64>,
    pub iterations: usize,
    pub rel_gap: f64,
    pub pinf: f64,
    pub dinf: f64,
}

/// Nesterov-Todd scaling of one block: `G^{-1} X G^{-T} = G^T Z G = diag(d)`.
struct Nt {
    g: DMatrix<f64>,
    ginv: DMatrix<f64>,
    w: DMatrix<f64>,
    d: DVector<f64>,
}

fn nt_scaling(x: &DMatrix<f64>, z: &DMatrix<f64>) -> Option<Nt> {
    let n = x.nrows();
    let lx = x.clone().cholesky()?.l();
    let lz = z.clone().cholesky()?.l();
    let svd = (lz.transpose() * &lx).svd(false, true);
    let vt = svd.v_t?;
    let d = svd.singular_values;
    if d.iter().any(|s| !(*s > 0.0) || !s.is_finite()) {
        return None;
    }
    let mut g = &lx * vt.transpose();
    for (j, mut col) in g.column_iter_mut().enumerate() {
        col /= d[j].sqrt();
    }
    let lx_inv = lx.solve_lower_triangular(&DMatrix::identity(n, n))?;
    let mut ginv = vt * lx_inv;
    for (i, mut row) in ginv.row_iter_mut().enumerate() {
        row *= d[i].sqrt();
    }
    let w = &g * g.transpose();
    Some(Nt { g, ginv, w, d })
}

fn sym(a: DMatrix<f64>) -> DMatrix<f64> {
    (&a + a.transpose()) * 0.5
}

fn inner(a: &[DMatrix<f64>], b: &[DMatrix<f64>]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.dot(y)).sum()
}

fn fro(a: &[DMatrix<f64>]) -> f64 {
    a.iter().map(|x| x.norm_squared()).sum::<f64>().sqrt()
}

/// Largest step keeping `diag(d) + alpha * delta` PSD.
fn max_step(d: &DVector<f64>, delta: &DMatrix<f64>) -> f64 {
    let s = DMatrix::from_fn(d.len(), d.len(), |i, j| delta[(i, j)] / (d[i] * d[j]).sqrt());
    let lam = min_eigenvalue(&s);
    if lam >= 0.0 {
        f64::INFINITY
    } else {
        -1.0 / lam
    }
}

/// Full symmetric triplets of a sparse matrix.
fn full_triplets(a: &SymSparse) -> Vec<(u32, u32, f64)> {
    let mut t = Vec::with_capacity(2 * a.nnz());
    for &(i, j, v) in a.entries() {
        t.push((i as u32, j as u32, v));
        if i != j {
            t.push((j as u32, i as u32, v));
        }
    }
    t
}

struct BlockPattern {
    full: Vec<Vec<(u32, u32, f64)>>,
    dense: Vec<usize>,
    sparse: Vec<usize>,
}

fn patterns(std: &StdForm) -> Vec<BlockPattern> {
    std.blocks
        .iter()
        .map(|blk| {
            let full: Vec<_> = blk.a.iter().map(|(_, a)| full_triplets(a)).collect();
            let n3 = (blk.n as f64).powi(3);
            let mut order: Vec<usize> = (0..full.len()).collect();
            order.sort_by_key(|&p| std::cmp::Reverse(full[p].len()));
            let mut dense = Vec::new();
            let mut rest: f64 = full.iter().map(|f| f.len() as f64).sum();
            for &p in &order {
                let nnz = full[p].len() as f64;
                rest -= nnz;
                if nnz * rest > 2.0 * n3 {
                    dense.push(p);
                } else {
                    break;
                }
            }
            let is_dense: Vec<bool> = {
                let mut v = vec![false; full.len()];
                for &p in &dense {
                    v[p] = true;
                }
                v
            };
            let sparse = (0..full.len()).filter(|p| !is_dense[*p]).collect();
            BlockPattern { full, dense, sparse }
        })
        .collect()
}

/// Schur complement `M_ij = <A_i, W A_j W>` summed over blocks.
fn schur(std: &StdForm, pats: &[BlockPattern], nts: &[Nt]) -> Mat<f64> {
    let mut m = Mat::<f64>::zeros(std.m, std.m);
    for ((blk, pat), nt) in std.blocks.iter().zip(pats).zip(nts) {
        let w = &nt.w;
        let n = blk.n;
        let mut rank = vec![usize::MAX; blk.a.len()];
        for (r, &p) in pat.dense.iter().enumerate() {
            rank[p] = r;
        }
        for (r, &pj) in pat.dense.iter().enumerate() {
            let mut wa = DMatrix::<f64>::zeros(n, n);
            for &(k, l, v) in &pat.full[pj] {
                let (k, l) = (k as usize, l as usize);
                let mut col = wa.column_mut(l);
                col.axpy(v, &w.column(k), 1.0);
            }
            let bj = &wa * w;
            let kj = blk.a[pj].0;
            for (pi, (ki, ai)) in blk.a.iter().enumerate() {
                if rank[pi] != usize::MAX && rank[pi] > r {
                    continue;
                }
                let v = ai.dot_dense(&bj);
                m[(*ki, kj)] += v;
                if *ki != kj {
                    m[(kj, *ki)] += v;
                }
            }
        }
        for (s, &pi) in pat.sparse.iter().enumerate() {
            let ki = blk.a[pi].0;
            let fi = &pat.full[pi];
            for &pj in &pat.sparse[s..] {
                let kj = blk.a[pj].0;
                let mut v = 0.0;
                for &(k, l, a) in fi {
                    for &(p, q, b) in &pat.full[pj] {
                        v += a * b * w[(l as usize, p as usize)] * w[(q as usize, k as usize)];
                    }
                }
                m[(ki, kj)] += v;
                if ki != kj {
                    m[(kj, ki)] += v;
                }
            }
        }
    }
    m
}

enum Factor {
    Llt(faer::linalg::solvers::Llt<f64>),
    Lblt(faer::linalg::solvers::Lblt<f64>),
}

impl Factor {
    fn new(mut m: Mat<f64>) -> Self {
        if let Ok(f) = m.llt(Side::Lower) {
            return Factor::Llt(f);
        }
        let scale = (0..m.nrows()).map(|i| m[(i, i)].abs()).fold(0.0, f64::max).max(1e-300);
        for i in 0..m.nrows() {
            m[(i, i)] += 1e-12 * scale;
        }
        match m.llt(Side::Lower) {
            Ok(f) => Factor::Llt(f),
            Err(_) => Factor::Lblt(m.lblt(Side::Lower)),
        }
    }

    fn solve(&self, rhs: &DVector<f64>) -> DVector<f64> {
        use faer::prelude::Solve;
        let r = Mat::from_fn(rhs.len(), 1, |i, _| rhs[i]);
        let s = match self {
            Factor::Llt(f) => f.solve(&r),
            Factor::Lblt(f) => f.solve(&r),
        };
        DVector::from_fn(rhs.len(), |i, _| s[(i, 0)])
    }
}

struct Direction {
    dy: DVector<f64>,
    dx: Vec<DMatrix<f64>>,
    dz: Vec<DMatrix<f64>>,
}

fn direction(
    std: &StdForm,
    nts: &[Nt],
    factor: &Factor,
    rp: &DVector<f64>,
    rd: &[DMatrix<f64>],
    rc: &[DMatrix<f64>],
) -> Option<Direction> {
    let wrdw: Vec<DMatrix<f64>> = nts.iter().zip(rd).map(|(nt, r)| &nt.w * r * &nt.w).collect();
    let rhs = rp - std.a_op(rc) + std.a_op(&wrdw);
    let mut dy = factor.solve(&rhs);
    let build = |dy: &DVector<f64>| {
        let ady = std.a_adj(dy);
        let dz: Vec<DMatrix<f64>> = rd.iter().zip(&ady).map(|(r, a)| r - a).collect();
        let dx: Vec<DMatrix<f64>> = rc
            .iter()
            .zip(&dz)
            .zip(nts)
            .map(|((c, z), nt)| sym(c - &nt.w * z * &nt.w))
            .collect();
        (dx, dz)
    };
    let (mut dx, mut dz) = build(&dy);
    // iterative refinement against the operator form of the Schur system
    for _ in 0..2 {
        if dy.iter().any(|v| !v.is_finite()) {
            return None;
        }
        let res = rp - std.a_op(&dx);
        if res.norm() <= 1e-15 * (1.0 + rp.norm()) {
            break;
        }
        dy += factor.solve(&res);
        (dx, dz) = build(&dy);
    }
    if dy.iter().any(|v| !v.is_finite()) {
        return None;
    }
    Some(Direction { dy, dx, dz })
}

/// Step bounds and scaled directions for each block.
fn steps(nts: &[Nt], dir: &Direction) -> (f64, f64, Vec<DMatrix<f64>>, Vec<DMatrix<f64>>) {
    let mut ap = f64::INFINITY;
    let mut ad = f64::INFINITY;
    let mut sx = Vec::with_capacity(nts.len());
    let mut sz = Vec::with_capacity(nts.len());
    for ((nt, dx), dz) in nts.iter().zip(&dir.dx).zip(&dir.dz) {
        let tx = sym(&nt.ginv * dx * nt.ginv.transpose());
        let tz = sym(nt.g.transpose() * dz * &nt.g);
        ap = ap.min(max_step(&nt.d, &tx));
        ad = ad.min(max_step(&nt.d, &tz));
        sx.push(tx);
        sz.push(tz);
    }
    (ap, ad, sx, sz)
}

fn initial_point(std: &StdForm) -> (Vec<DMatrix<f64>>, Vec<DMatrix<f64>>) {
    let mut x = Vec::new();
    let mut z = Vec::new();
    for blk in &std.blocks {
        let n = blk.n as f64;
        let mut xi = 10f64.max(n.sqrt());
        let mut eta = 10f64.max(n.sqrt()).max(blk.c.norm());
        for (k, a) in &blk.a {
            let na = a.frobenius_norm();
            xi = xi.max(n * (1.0 + std.b[*k].abs()) / (1.0 + na));
            eta = eta.max(na);
        }
        x.push(DMatrix::identity(blk.n, blk.n) * xi);
        z.push(DMatrix::identity(blk.n, blk.n) * eta);
    }
    (x, z)
}

pub(crate) fn run(std: &StdForm, cfg: &SolverConfig) -> IpmOutput {
    let tol = cfg.tol;
    if std.m == 0 {
        let ok = std.blocks.iter().all(|b| min_eigenvalue(&b.c) >= -10.0 * tol);
        return IpmOutput {
            status: if ok { SdpStatus::Optimal } else { SdpStatus::Infeasible },
            y: DVector::zeros(0),
            iterations: 0,
            rel_gap: 0.0,
            pinf: 0.0,
            dinf: 0.0,
        };
    }
    let n_total: usize = std.blocks.iter().map(|b| b.n).sum();
    let bnorm = std.b.norm();
    let cnorm = std.blocks.iter().map(|b| b.c.norm_squared()).sum::<f64>().sqrt();
    let pats = patterns(std);
    let (mut x, mut z) = initial_point(std);
    let mut y = DVector::zeros(std.m);
    let mut stalls = 0;
    let mut out = IpmOutput {
        status: SdpStatus::MaxIter,
        y: y.clone(),
        iterations: 0,
        rel_gap: f64::INFINITY,
        pinf: f64::INFINITY,
        dinf: f64::INFINITY,
    };

    for iter in 0..=cfg.max_iter {
        let rp = &std.b - std.a_op(&x);
        let aty = std.a_adj(&y);
        let rd: Vec<DMatrix<f64>> = std
            .blocks
            .iter()
            .zip(&z)
            .zip(&aty)
            .map(|((blk, zb), a)| &blk.c - zb - a)
            .collect();
        let pobj: f64 = std.blocks.iter().zip(&x).map(|(b, xb)| b.c.dot(xb)).sum();
        let dobj = std.b.dot(&y);
        let xz = inner(&x, &z);
        let mu = xz / n_total as f64;
        let pinf = rp.norm() / (1.0 + bnorm);
        let dinf = fro(&rd) / (1.0 + cnorm);
        let gap = (pobj - dobj).abs().max(xz) / (1.0 + pobj.abs() + dobj.abs());
        out.y.copy_from(&y);
        out.iterations = iter;
        out.rel_gap = gap;
        out.pinf = pinf;
        out.dinf = dinf;
        if cfg.verbose {
            eprintln!("sdp {iter:3} pobj {pobj:+.8e} dobj {dobj:+.8e} gap {gap:.2e} pinf {pinf:.2e} dinf {dinf:.2e}");
        }
        if pinf <= tol && dinf <= tol && gap <= tol {
            let slack_ok = std
                .blocks
                .iter()
                .zip(&aty)
                .all(|(b, a)| min_eigenvalue(&(&b.c - a)) >= -10.0 * tol);
            if slack_ok {
                out.status = SdpStatus::Optimal;
                return out;
            }
        }
        let xnorm = fro(&x);
        if xnorm > cfg.divergence_bound && pobj < 0.0 && (&rp - &std.b).norm() <= 1e-6 * pobj.abs() {
            out.status = SdpStatus::Infeasible;
            return out;
        }
        let ynorm = y.norm();
        if ynorm > cfg.divergence_bound && dobj > 1e-6 * ynorm && dinf * (1.0 + cnorm) <= 1e-6 * dobj {
            out.status = SdpStatus::Unbounded;
            return out;
        }
        if iter == cfg.max_iter {
            break;
        }

        let Some(nts) = x.iter().zip(&z).map(|(a, b)| nt_scaling(a, b)).collect::<Option<Vec<_>>>() else {
            out.status = SdpStatus::NumericalFailure;
            return out;
        };
        let factor = Factor::new(schur(std, &pats, &nts));

        let rc_aff: Vec<DMatrix<f64>> = x.iter().map(|xb| -xb).collect();
        let Some(aff) = direction(std, &nts, &factor, &rp, &rd, &rc_aff) else {
            out.status = SdpStatus::NumericalFailure;
            return out;
        };
        let (ap_max, ad_max, sx, sz) = steps(&nts, &aff);
        let ap = ap_max.min(1.0);
        let ad = ad_max.min(1.0);
        let mut xz_aff = 0.0;
        for b in 0..x.len() {
            let xa = &x[b] + &aff.dx[b] * ap;
            let za = &z[b] + &aff.dz[b] * ad;
            xz_aff += xa.dot(&za);
        }
        let sigma = (xz_aff.max(0.0) / xz).powi(3).clamp(0.0, 1.0);

        let rc: Vec<DMatrix<f64>> = nts
            .iter()
            .zip(sx.iter().zip(&sz))
            .map(|(nt, (tx, tz))| {
                let corr = tx * tz + tz * tx;
                let n = nt.d.len();
                let rt = DMatrix::from_fn(n, n, |i, j| {
                    let mut v = -corr[(i, j)];
                    if i == j {
                        v += 2.0 * sigma * mu - 2.0 * nt.d[i] * nt.d[i];
                    }
                    v / (nt.d[i] + nt.d[j])
                });
                sym(&nt.g * rt * nt.g.transpose())
            })
            .collect();
        let Some(dir) = direction(std, &nts, &factor, &rp, &rd, &rc) else {
            out.status = SdpStatus::NumericalFailure;
            return out;
        };
        let (ap_max, ad_max, _, _) = steps(&nts, &dir);
        let gamma = 0.9 + 0.09 * ap.min(ad);
        let ap = (gamma * ap_max).min(1.0);
        let ad = (gamma * ad_max).min(1.0);
        for b in 0..x.len() {
            x[b] += &dir.dx[b] * ap;
            z[b] = sym(&z[b] + &dir.dz[b] * ad);
            x[b] = sym(std::mem::take(&mut x[b]));
        }
        y += &dir.dy * ad;
        if ap < 1e-10 && ad < 1e-10 {
            stalls += 1;
            if stalls >= 3 {
                out.status = SdpStatus::NumericalFailure;
                return out;
            }
        } else {
            stalls = 0;
        }
    }
    out.status = SdpStatus::MaxIter;
    out
}
