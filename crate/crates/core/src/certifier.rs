//! Robust connectedness certificates.
//!
//! For a reduced Laplacian `L̂(θ)` and a parameter set `Ω = {θ : s_i(θ) >= 0}`
//! the certifier searches for a Gram-represented `P(θ) ⪰ 0` and SOS
//! multipliers `R_i(θ)` such that
//! `H(θ) = P L̂ + L̂ P - Σ R_i s_i` has a Gram matrix exceeding `c I`.
//! A positive optimal `c` proves `L̂(θ) ≻ 0`, hence connectedness, on all
//! of `Ω`. The converse does not hold: a non-positive `c` is inconclusive.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{min_eigenvalue, sorted_eigenvalues, SymSparse};
use crate::netgraph::{reduced_basis, reduced_laplacian, GraphError, UncertainAdjacency};
use crate::polyalg::{ExponentVec, MatrixPolynomial, PolyError, Polynomial};
use crate::sdp::{self, Equality, Lmi, SdpProblem, SdpStatus, SolverConfig, VarId};
use crate::smr::{gram_null_basis_indexed, monomial_count, power_vector, split_coefficient, GramIndex, SmrError};

pub const DEFAULT_THRESHOLD: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CertifyError {
    #[error("degree plan: {0}")]
    Plan(String),
    #[error("reduced Laplacian is not symmetric")]
    NotSymmetric,
    #[error("solver stopped with status {status}; best c = {best_c}")]
    Solver { status: SdpStatus, best_c: f64 },
    #[error("inconclusive: c* = {c_star} is not above {threshold}")]
    Inconclusive { c_star: f64, threshold: f64 },
    #[error("parameter-set sampling failed: acceptance {accepted}/{drawn}")]
    Sampling { accepted: usize, drawn: usize },
    #[error("bounding box has {found} intervals, expected {expected}")]
    BoxDimension { expected: usize, found: usize },
    #[error(transparent)]
    Sdp(#[from] sdp::SdpError),
    #[error(transparent)]
    Smr(#[from] SmrError),
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Half-degrees of `P`, each `R_i`, and the aggregate constraint.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DegreePlan {
    pub d_p: u32,
    pub d_r: Vec<u32>,
    pub d_h: u32,
}

impl DegreePlan {
    /// Smallest consistent plan for the given `d_P`.
    pub fn default_for(l_hat: &MatrixPolynomial, omega: &[Polynomial], d_p: u32) -> Self {
        let mut d_h = (l_hat.degree() + 2 * d_p).div_ceil(2);
        for s in omega {
            d_h = d_h.max(s.degree().div_ceil(2));
        }
        let d_r = omega.iter().map(|s| (2 * d_h - s.degree()) / 2).collect();
        Self { d_p, d_r, d_h }
    }

    pub fn check(&self, l_hat: &MatrixPolynomial, omega: &[Polynomial]) -> Result<(), CertifyError> {
        if self.d_r.len() != omega.len() {
            return Err(CertifyError::Plan(format!(
                "{} multiplier degrees for {} constraints",
                self.d_r.len(),
                omega.len()
            )));
        }
        if 2 * self.d_h < l_hat.degree() + 2 * self.d_p {
            return Err(CertifyError::Plan(format!(
                "2 d_H = {} below Deg(P L + L P) <= {}",
                2 * self.d_h,
                l_hat.degree() + 2 * self.d_p
            )));
        }
        for (k, (s, d)) in omega.iter().zip(&self.d_r).enumerate() {
            if 2 * self.d_h < 2 * d + s.degree() {
                return Err(CertifyError::Plan(format!(
                    "2 d_H = {} below Deg(R_{k} s_{k}) = {}",
                    2 * self.d_h,
                    2 * d + s.degree()
                )));
            }
        }
        Ok(())
    }
}

/// Assembled program with handles to its variables.
#[derive(Debug, Clone)]
pub struct Assembled {
    pub problem: SdpProblem,
    pub plan: DegreePlan,
    pub r: usize,
    pub s: usize,
    pub c: VarId,
    pub delta: Vec<VarId>,
    pub p_block: usize,
    pub r_blocks: Vec<usize>,
    /// Basis matrices multiplying `delta`.
    pub null_basis: Vec<SymSparse>,
}

/// Canonical Gram image of an upper-triangle polynomial matrix.
fn gram_image(
    h_index: &GramIndex,
    s: usize,
    poly_entries: HashMap<(usize, usize), HashMap<ExponentVec, f64>>,
) -> Result<SymSparse, SmrError> {
    let n = h_index.len() * s;
    let mut trip = Vec::new();
    let mut keys: Vec<_> = poly_entries.into_iter().collect();
    keys.sort_by(|a, b| a.0.cmp(&b.0));
    for ((i, j), terms) in keys {
        let mut terms: Vec<_> = terms.into_iter().filter(|(_, c)| *c != 0.0).collect();
        terms.sort_by(|a, b| a.0.cmp(&b.0));
        for (mu, c) in terms {
            split_coefficient(h_index, s, i, j, &mu, c, |p, q, v| trip.push((p, q, v)))?;
        }
    }
    Ok(SymSparse::from_triplets(n, trip))
}

/// Splits Gram positions into `(monomial a, row i, monomial b, col j)`.
fn block_pattern(s: usize, alpha: usize, beta: usize) -> (usize, usize, usize, usize) {
    (alpha / s, alpha % s, beta / s, beta % s)
}

pub fn assemble(l_hat: &MatrixPolynomial, omega: &[Polynomial], plan: &DegreePlan) -> Result<Assembled, CertifyError> {
    if l_hat.rows() != l_hat.cols() || !l_hat.is_symmetric() {
        return Err(CertifyError::NotSymmetric);
    }
    l_hat.check_symmetric(1e-12).map_err(|_| CertifyError::NotSymmetric)?;
    plan.check(l_hat, omega)?;
    let r = l_hat.nvars();
    let s = l_hat.rows();
    let h_index = GramIndex::new(r, plan.d_h);
    let nh = h_index.len() * s;

    let mut p = SdpProblem::new();
    let c = p.add_free("c");
    let null_basis = gram_null_basis_indexed(&h_index, s);
    let delta: Vec<VarId> = (0..null_basis.len()).map(|k| p.add_free(format!("delta{k}"))).collect();
    let phi_p = power_vector(r, plan.d_p);
    let p_block = p.add_psd_block("P", phi_p.len() * s);
    let r_blocks: Vec<usize> = plan
        .d_r
        .iter()
        .enumerate()
        .map(|(k, &d)| p.add_psd_block(format!("R{k}"), monomial_count(r, d) * s))
        .collect();
    p.add_equality(Equality {
        name: "trace(P)".into(),
        terms: (0..p.block(p_block).size).map(|i| (p.block_var(p_block, i, i), 1.0)).collect(),
        rhs: 1.0,
    })?;
    p.set_objective(vec![(c, 1.0)]);

    let mut terms: Vec<(VarId, SymSparse)> = Vec::new();
    terms.push((c, SymSparse::from_triplets(nh, (0..nh).map(|i| (i, i, -1.0)))));
    for (v, b) in delta.iter().zip(&null_basis) {
        terms.push((*v, b.clone()));
    }

    // P ↦ Gram(P L̂ + L̂ P)
    let l_entries: Vec<Vec<Vec<(ExponentVec, f64)>>> = (0..s)
        .map(|i| {
            (0..s)
                .map(|j| l_hat.get(i, j).terms_desc().map(|(e, c)| (e.clone(), *c)).collect())
                .collect()
        })
        .collect();
    let np = p.block(p_block).size;
    for beta in 0..np {
        for alpha in 0..=beta {
            let (a, i, b, j) = block_pattern(s, alpha, beta);
            let m = phi_p.monomials()[a].mul(&phi_p.monomials()[b]);
            let set: &[(usize, usize)] = if alpha == beta { &[(i, i)] } else { &[(i, j), (j, i)] };
            // G = P L̂ as sparse rows
            let mut g: HashMap<(usize, usize), HashMap<ExponentVec, f64>> = HashMap::new();
            for &(u, v) in set {
                for (q, row) in l_entries[v].iter().enumerate() {
                    for (mu, cf) in row {
                        *g.entry((u, q)).or_default().entry(m.mul(mu)).or_insert(0.0) += cf;
                    }
                }
            }
            // H = G + G^T, upper triangle
            let mut h: HashMap<(usize, usize), HashMap<ExponentVec, f64>> = HashMap::new();
            for ((u, q), poly) in g {
                let key = (u.min(q), u.max(q));
                let w = if u == q { 2.0 } else { 1.0 };
                let e = h.entry(key).or_default();
                for (mu, cf) in poly {
                    *e.entry(mu).or_insert(0.0) += w * cf;
                }
            }
            let img = gram_image(&h_index, s, h)?;
            if !img.is_empty() {
                terms.push((p.block_var(p_block, alpha, beta), img));
            }
        }
    }

    // R_k ↦ -Gram(R_k s_k)
    for (k, (&blk, sk)) in r_blocks.iter().zip(omega).enumerate() {
        let phi_r = power_vector(r, plan.d_r[k]);
        let nr = p.block(blk).size;
        let s_terms: Vec<(ExponentVec, f64)> = sk.terms_desc().map(|(e, c)| (e.clone(), *c)).collect();
        for beta in 0..nr {
            for alpha in 0..=beta {
                let (a, i, b, j) = block_pattern(s, alpha, beta);
                let m = phi_r.monomials()[a].mul(&phi_r.monomials()[b]);
                let w = if alpha != beta && i == j { 2.0 } else { 1.0 };
                let mut h: HashMap<(usize, usize), HashMap<ExponentVec, f64>> = HashMap::new();
                let e = h.entry((i.min(j), i.max(j))).or_default();
                for (mu, cf) in &s_terms {
                    *e.entry(m.mul(mu)).or_insert(0.0) -= w * cf;
                }
                let img = gram_image(&h_index, s, h)?;
                if !img.is_empty() {
                    terms.push((p.block_var(blk, alpha, beta), img));
                }
            }
        }
    }

    p.add_lmi(Lmi {
        name: "H".into(),
        size: nh,
        constant: SymSparse::zeros(nh),
        terms,
    })?;
    Ok(Assembled {
        problem: p,
        plan: plan.clone(),
        r,
        s,
        c,
        delta,
        p_block,
        r_blocks,
        null_basis,
    })
}

fn matrix_rows(a: &DMatrix<f64>) -> Vec<Vec<f64>> {
    a.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn rows_matrix(rows: &[Vec<f64>]) -> DMatrix<f64> {
    let n = rows.len();
    DMatrix::from_fn(n, n, |i, j| rows[i][j])
}

/// Connectedness certificate; matrices are stored row by row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub c_star: f64,
    pub degree_plan: DegreePlan,
    #[serde(rename = "P_bar")]
    pub p_bar: Vec<Vec<f64>>,
    #[serde(rename = "R_bars")]
    pub r_bars: Vec<Vec<Vec<f64>>>,
    pub delta: Vec<f64>,
}

impl Certificate {
    pub fn p_matrix(&self) -> DMatrix<f64> {
        rows_matrix(&self.p_bar)
    }

    pub fn r_matrices(&self) -> Vec<DMatrix<f64>> {
        self.r_bars.iter().map(|r| rows_matrix(r)).collect()
    }

    pub fn trace_p(&self) -> f64 {
        self.p_matrix().trace()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CertifyConfig {
    pub solver: SolverConfig,
    pub threshold: f64,
}

impl Default for CertifyConfig {
    fn default() -> Self {
        Self {
            solver: SolverConfig::default(),
            threshold: DEFAULT_THRESHOLD,
        }
    }
}

/// Reduced Laplacian `M^T L(θ) M` of an uncertain graph.
pub fn reduced_laplacian_of(g: &UncertainAdjacency) -> Result<MatrixPolynomial, CertifyError> {
    let m = reduced_basis(g.n());
    Ok(reduced_laplacian(&g.laplacian(), &m)?)
}

/// Solves the program for a fixed plan and extracts the certificate
/// regardless of the sign of `c*`.
pub fn solve_plan(l_hat: &MatrixPolynomial, omega: &[Polynomial], plan: &DegreePlan, cfg: &SolverConfig) -> Result<(Certificate, SdpStatus), CertifyError> {
    let asm = assemble(l_hat, omega, plan)?;
    let sol = sdp::solve_with(&asm.problem, cfg)?;
    let p = &asm.problem;
    let sym = |b: usize| {
        let m = p.block_matrix(b, &sol.values);
        matrix_rows(&m)
    };
    let cert = Certificate {
        c_star: sol.value(asm.c),
        degree_plan: plan.clone(),
        p_bar: sym(asm.p_block),
        r_bars: asm.r_blocks.iter().map(|&b| sym(b)).collect(),
        delta: asm.delta.iter().map(|&v| sol.value(v)).collect(),
    };
    Ok((cert, sol.status))
}

pub fn certify(g: &UncertainAdjacency, plan: &DegreePlan, cfg: &CertifyConfig) -> Result<Certificate, CertifyError> {
    let l_hat = reduced_laplacian_of(g)?;
    let (cert, status) = solve_plan(&l_hat, g.omega(), plan, &cfg.solver)?;
    if status != SdpStatus::Optimal {
        return Err(CertifyError::Solver {
            status,
            best_c: cert.c_star,
        });
    }
    if !(cert.c_star > cfg.threshold) {
        return Err(CertifyError::Inconclusive {
            c_star: cert.c_star,
            threshold: cfg.threshold,
        });
    }
    Ok(cert)
}

/// Default plan for a graph at the given `d_P`.
pub fn default_plan(g: &UncertainAdjacency, d_p: u32) -> Result<DegreePlan, CertifyError> {
    let l_hat = reduced_laplacian_of(g)?;
    Ok(DegreePlan::default_for(&l_hat, g.omega(), d_p))
}

/// Deterministic rejection sampler over `Ω ∩ box`.
pub struct OmegaSampler<'a> {
    omega: &'a [Polynomial],
    bbox: &'a [(f64, f64)],
    rng: ChaCha8Rng,
    drawn: usize,
    accepted: usize,
}

impl<'a> OmegaSampler<'a> {
    pub fn new(omega: &'a [Polynomial], bbox: &'a [(f64, f64)], nvars: usize, seed: u64) -> Result<Self, CertifyError> {
        if bbox.len() != nvars {
            return Err(CertifyError::BoxDimension {
                expected: nvars,
                found: bbox.len(),
            });
        }
        Ok(Self {
            omega,
            bbox,
            rng: ChaCha8Rng::seed_from_u64(seed),
            drawn: 0,
            accepted: 0,
        })
    }

    pub fn next_sample(&mut self) -> Result<Vec<f64>, CertifyError> {
        loop {
            if self.drawn >= 1000 && (self.accepted as f64) < 1e-3 * self.drawn as f64 {
                return Err(CertifyError::Sampling {
                    accepted: self.accepted,
                    drawn: self.drawn,
                });
            }
            self.drawn += 1;
            let theta: Vec<f64> = self
                .bbox
                .iter()
                .map(|&(lo, hi)| if hi > lo { self.rng.random_range(lo..=hi) } else { lo })
                .collect();
            let mut inside = true;
            for s in self.omega {
                if s.eval(&theta)? < 0.0 {
                    inside = false;
                    break;
                }
            }
            if inside {
                self.accepted += 1;
                return Ok(theta);
            }
        }
    }
}

/// Sampled minimum of `λ₂(L(θ))` over `Ω` and its location.
pub fn sample_lambda2(g: &UncertainAdjacency, bbox: &[(f64, f64)], n_samples: usize, seed: u64) -> Result<(f64, Vec<f64>), CertifyError> {
    let lap = g.laplacian();
    let mut sampler = OmegaSampler::new(g.omega(), bbox, g.nvars(), seed)?;
    let count = if g.nvars() == 0 { 1 } else { n_samples.max(1) };
    let mut best = (f64::INFINITY, Vec::new());
    for _ in 0..count {
        let theta = sampler.next_sample()?;
        let ev = sorted_eigenvalues(&lap.eval(&theta)?);
        let l2 = ev.get(1).copied().unwrap_or(0.0);
        if l2 < best.0 {
            best = (l2, theta);
        }
    }
    Ok(best)
}

/// Worst sampled margins of a certificate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub samples: usize,
    /// `min λ_min(P(θ))`.
    pub p_margin: f64,
    /// `min λ_min(H(θ) - c* φᵀφ I)`.
    pub h_margin: f64,
    /// `min λ_min(P L̂ + L̂ P)`.
    pub lyapunov_margin: f64,
    pub worst_theta: Vec<f64>,
    pub trace_error: f64,
    pub passed: bool,
}

/// `(φ ⊗ I_s)` evaluated at `θ`.
fn phi_kron(phi: &DVector<f64>, s: usize) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(phi.len() * s, s);
    for (a, &v) in phi.iter().enumerate() {
        for i in 0..s {
            out[(a * s + i, i)] = v;
        }
    }
    out
}

fn gram_eval(g: &DMatrix<f64>, r: usize, d: u32, s: usize, theta: &[f64]) -> (DMatrix<f64>, f64) {
    let phi = power_vector(r, d).eval(theta);
    let k = phi_kron(&phi, s);
    (k.transpose() * g * &k, phi.norm_squared())
}

pub fn verify_certificate(
    cert: &Certificate,
    l_hat: &MatrixPolynomial,
    omega: &[Polynomial],
    bbox: &[(f64, f64)],
    n_samples: usize,
    seed: u64,
) -> Result<VerifyReport, CertifyError> {
    let plan = &cert.degree_plan;
    plan.check(l_hat, omega)?;
    let r = l_hat.nvars();
    let s = l_hat.rows();
    let p_bar = cert.p_matrix();
    let r_bars = cert.r_matrices();
    let mut sampler = OmegaSampler::new(omega, bbox, r, seed)?;
    let count = if r == 0 { 1 } else { n_samples.max(1) };
    let mut rep = VerifyReport {
        samples: count,
        p_margin: f64::INFINITY,
        h_margin: f64::INFINITY,
        lyapunov_margin: f64::INFINITY,
        worst_theta: Vec::new(),
        trace_error: (p_bar.trace() - 1.0).abs(),
        passed: false,
    };
    for _ in 0..count {
        let theta = sampler.next_sample()?;
        let (pm, _) = gram_eval(&p_bar, r, plan.d_p, s, &theta);
        let l = l_hat.eval(&theta)?;
        let lyap = &pm * &l + &l * &pm;
        let mut h = lyap.clone();
        for (k, (rb, sk)) in r_bars.iter().zip(omega).enumerate() {
            let (rm, _) = gram_eval(rb, r, plan.d_r[k], s, &theta);
            h -= rm * sk.eval(&theta)?;
        }
        let phi_sq = power_vector(r, plan.d_h).eval(&theta).norm_squared();
        for i in 0..s {
            h[(i, i)] -= cert.c_star * phi_sq;
        }
        let hm = min_eigenvalue(&h);
        if hm < rep.h_margin {
            rep.worst_theta = theta.clone();
        }
        rep.p_margin = rep.p_margin.min(min_eigenvalue(&pm));
        rep.h_margin = rep.h_margin.min(hm);
        rep.lyapunov_margin = rep.lyapunov_margin.min(min_eigenvalue(&lyap));
    }
    rep.passed = rep.p_margin > 0.0 && rep.h_margin >= -1e-6 && rep.lyapunov_margin > 0.0 && rep.trace_error <= 1e-8;
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netgraph::pair;

    fn constant_graph(n: usize, edges: &[(usize, usize, f64)]) -> UncertainAdjacency {
        let w: Vec<_> = edges.iter().map(|&(i, j, v)| (pair(i, j), Polynomial::constant(0, v))).collect();
        UncertainAdjacency::from_pairs(n, 0, &w, vec![]).unwrap()
    }

    fn disk(r: usize) -> Polynomial {
        let mut s = Polynomial::constant(r, 1.0);
        for k in 0..r {
            let v = Polynomial::var(r, k);
            s = &s - &(&v * &v);
        }
        s
    }

    #[test]
    fn two_agent_hand_reduction() {
        let l_hat = MatrixPolynomial::from_constant(&DMatrix::from_element(1, 1, 2.0), 0);
        let plan = DegreePlan { d_p: 0, d_r: vec![], d_h: 0 };
        let asm = assemble(&l_hat, &[], &plan).unwrap();
        assert_eq!(asm.problem.psd_blocks()[0].size, 1);
        let s = sdp::solve(&asm.problem, 1e-9, 100).unwrap();
        assert_eq!(s.status, SdpStatus::Optimal);
        assert!((s.value(asm.c) - 4.0).abs() < 1e-8);
    }

    #[test]
    fn sizes_follow_monomial_counts() {
        let g = UncertainAdjacency::from_pairs(
            4,
            2,
            &[
                (pair(0, 1), &Polynomial::constant(2, 1.0) + &Polynomial::var(2, 0)),
                (pair(1, 2), Polynomial::constant(2, 1.0)),
                (pair(2, 3), &Polynomial::constant(2, 1.0) + &Polynomial::var(2, 1)),
            ],
            vec![disk(2)],
        )
        .unwrap();
        let l_hat = reduced_laplacian_of(&g).unwrap();
        let plan = DegreePlan::default_for(&l_hat, g.omega(), 1);
        assert_eq!(plan, DegreePlan { d_p: 1, d_r: vec![1], d_h: 2 });
        let asm = assemble(&l_hat, g.omega(), &plan).unwrap();
        assert_eq!(asm.problem.lmis()[0].size, monomial_count(2, 2) * 3);
        assert_eq!(asm.problem.block(asm.p_block).size, monomial_count(2, 1) * 3);
        assert_eq!(asm.problem.block(asm.r_blocks[0]).size, monomial_count(2, 1) * 3);
    }

    #[test]
    fn plan_violation_rejected() {
        let l_hat = MatrixPolynomial::identity(2, 1).scale_poly(&Polynomial::var(1, 0)).unwrap();
        let plan = DegreePlan { d_p: 1, d_r: vec![], d_h: 0 };
        assert!(matches!(assemble(&l_hat, &[], &plan), Err(CertifyError::Plan(_))));
    }

    #[test]
    fn path_graph_certified() {
        let g = constant_graph(3, &[(0, 1, 1.0), (1, 2, 1.0)]);
        let plan = default_plan(&g, 0).unwrap();
        let cert = certify(&g, &plan, &CertifyConfig::default()).unwrap();
        assert!(cert.c_star > 1e-3);
        let (l2, _) = sample_lambda2(&g, &[], 10, 0).unwrap();
        assert!((l2 - 1.0).abs() < 1e-12);
        let rep = verify_certificate(&cert, &reduced_laplacian_of(&g).unwrap(), &[], &[], 10, 0).unwrap();
        assert_eq!(rep.samples, 1);
        assert!(rep.passed, "{rep:?}");
        let mut doubled = cert.clone();
        doubled.c_star *= 2.0;
        let rep = verify_certificate(&doubled, &reduced_laplacian_of(&g).unwrap(), &[], &[], 10, 0).unwrap();
        assert!(rep.h_margin < -1e-6);
    }

    #[test]
    fn two_components_inconclusive() {
        let g = constant_graph(4, &[(0, 1, 1.0), (2, 3, 1.0)]);
        let plan = default_plan(&g, 0).unwrap();
        match certify(&g, &plan, &CertifyConfig::default()) {
            Err(CertifyError::Inconclusive { c_star, .. }) => assert!(c_star.abs() < 1e-6),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn uncertain_pair_certified() {
        let w = &Polynomial::constant(1, 1.0) + &Polynomial::var(1, 0).scale(0.5);
        let g = UncertainAdjacency::from_pairs(2, 1, &[(pair(0, 1), w)], vec![disk(1)]).unwrap();
        let plan = default_plan(&g, 0).unwrap();
        let cert = certify(&g, &plan, &CertifyConfig::default()).unwrap();
        assert!(cert.c_star > 1e-3);
        let (l2, arg) = sample_lambda2(&g, &[(-1.0, 1.0)], 2000, 7).unwrap();
        assert!(l2 >= 1.0 && l2 < 1.01, "{l2}");
        assert!(arg[0] < -0.99);
        let rep = verify_certificate(&cert, &reduced_laplacian_of(&g).unwrap(), g.omega(), &[(-1.0, 1.0)], 500, 1).unwrap();
        assert!(rep.passed, "{rep:?}");
    }

    #[test]
    fn vanishing_weight_not_certified() {
        let g = UncertainAdjacency::from_pairs(2, 1, &[(pair(0, 1), Polynomial::var(1, 0))], vec![disk(1)]).unwrap();
        let plan = default_plan(&g, 0).unwrap();
        assert!(certify(&g, &plan, &CertifyConfig::default()).is_err());
    }

    #[test]
    fn complete_graph_lambda2() {
        let edges: Vec<_> = (0..4).flat_map(|i| (i + 1..4).map(move |j| (i, j, 1.0))).collect();
        let g = constant_graph(4, &edges);
        let (l2, _) = sample_lambda2(&g, &[], 1, 0).unwrap();
        assert!((l2 - 4.0).abs() < 1e-12);
    }

    #[test]
    fn certificate_json_round_trip() {
        let g = constant_graph(3, &[(0, 1, 1.0), (1, 2, 2.0)]);
        let cert = certify(&g, &default_plan(&g, 0).unwrap(), &CertifyConfig::default()).unwrap();
        let text = serde_json::to_string(&cert).unwrap();
        assert!(text.contains("\"P_bar\"") && text.contains("\"c_star\""));
        let back: Certificate = serde_json::from_str(&text).unwrap();
        assert_eq!(back, cert);
        assert!((back.trace_p() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn thin_omega_fails_sampling() {
        let s = &Polynomial::constant(1, 1e-8) - &(&Polynomial::var(1, 0) * &Polynomial::var(1, 0));
        let g = UncertainAdjacency::from_pairs(2, 1, &[(pair(0, 1), Polynomial::constant(1, 1.0))], vec![s]).unwrap();
        assert!(matches!(sample_lambda2(&g, &[(-1.0, 1.0)], 10, 0), Err(CertifyError::Sampling { .. })));
    }
}
