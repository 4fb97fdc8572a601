//! A dense semidefinite-programming solver.
//!
//! Problems are stated over a flat vector of scalar variables: named free
//! scalars plus the upper-triangle entries of PSD matrix blocks. The solver
//! maximizes a linear objective subject to affine LMIs
//! `F0 + sum_k x_k F_k ⪰ 0`, affine equalities, and the implicit constraint
//! that every PSD block is positive semidefinite.
//!
//! Internally, equalities are eliminated by substitution, the remaining
//! variables become the free multipliers `y` of a block-diagonal dual-form
//! SDP `max b^T y  s.t.  C - sum_k y_k A_k ⪰ 0`, and that is solved with an
//! infeasible-start primal-dual path-following method using
//! Nesterov-Todd scaling and Mehrotra predictor-corrector steps.

pub mod dump;
mod ipm;
pub mod planted;
mod reduce;

use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{min_eigenvalue, SymSparse};

pub type VarId = usize;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SdpError {
    #[error("malformed problem: {0}")]
    Malformed(String),
    #[error("tolerance {0} outside (1e-12, 1e-2)")]
    Tolerance(f64),
}

/// PSD matrix variable occupying `size*(size+1)/2` consecutive scalar ids.
#[derive(Debug, Clone, PartialEq)]
pub struct PsdBlock {
    pub name: String,
    pub size: usize,
    pub offset: VarId,
}

impl PsdBlock {
    /// Scalar id of entry `(i, j)`; symmetric in its arguments.
    pub fn var(&self, i: usize, j: usize) -> VarId {
        let (i, j) = (i.min(j), i.max(j));
        assert!(j < self.size, "block index out of range");
        self.offset + j * (j + 1) / 2 + i
    }

    pub fn num_vars(&self) -> usize {
        self.size * (self.size + 1) / 2
    }

    /// Inverse of [`PsdBlock::var`] for ids inside this block.
    pub fn entry_of(&self, v: VarId) -> Option<(usize, usize)> {
        if v < self.offset || v >= self.offset + self.num_vars() {
            return None;
        }
        let k = v - self.offset;
        let mut j = ((((8 * k + 1) as f64).sqrt() - 1.0) / 2.0) as usize;
        while j * (j + 1) / 2 > k {
            j -= 1;
        }
        while (j + 1) * (j + 2) / 2 <= k {
            j += 1;
        }
        Some((k - j * (j + 1) / 2, j))
    }
}

/// Affine matrix inequality `constant + sum_k x_k * terms_k ⪰ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Lmi {
    pub name: String,
    pub size: usize,
    pub constant: SymSparse,
    pub terms: Vec<(VarId, SymSparse)>,
}

/// Affine equality `sum_k a_k x_k = rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Equality {
    pub name: String,
    pub terms: Vec<(VarId, f64)>,
    pub rhs: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SdpProblem {
    free_vars: Vec<(String, VarId)>,
    psd_blocks: Vec<PsdBlock>,
    nvars: usize,
    objective: Vec<(VarId, f64)>,
    lmis: Vec<Lmi>,
    equalities: Vec<Equality>,
}

impl SdpProblem {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_free(&mut self, name: impl Into<String>) -> VarId {
        let id = self.nvars;
        self.free_vars.push((name.into(), id));
        self.nvars += 1;
        id
    }

    /// Adds a PSD block and returns its index.
    pub fn add_psd_block(&mut self, name: impl Into<String>, size: usize) -> usize {
        let b = PsdBlock {
            name: name.into(),
            size,
            offset: self.nvars,
        };
        self.nvars += b.num_vars();
        self.psd_blocks.push(b);
        self.psd_blocks.len() - 1
    }

    pub fn block(&self, b: usize) -> &PsdBlock {
        &self.psd_blocks[b]
    }

    pub fn block_var(&self, b: usize, i: usize, j: usize) -> VarId {
        self.psd_blocks[b].var(i, j)
    }

    pub fn psd_blocks(&self) -> &[PsdBlock] {
        &self.psd_blocks
    }

    pub fn free_vars(&self) -> &[(String, VarId)] {
        &self.free_vars
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn objective(&self) -> &[(VarId, f64)] {
        &self.objective
    }

    pub fn lmis(&self) -> &[Lmi] {
        &self.lmis
    }

    pub fn equalities(&self) -> &[Equality] {
        &self.equalities
    }

    /// Sets the objective to maximize.
    pub fn set_objective(&mut self, terms: Vec<(VarId, f64)>) {
        self.objective = terms;
    }

    pub fn add_lmi(&mut self, lmi: Lmi) -> Result<(), SdpError> {
        if lmi.constant.n() != lmi.size {
            return Err(SdpError::Malformed(format!(
                "LMI {}: constant has size {} not {}",
                lmi.name,
                lmi.constant.n(),
                lmi.size
            )));
        }
        for (v, f) in &lmi.terms {
            if *v >= self.nvars {
                return Err(SdpError::Malformed(format!("LMI {}: unknown variable {v}", lmi.name)));
            }
            if f.n() != lmi.size {
                return Err(SdpError::Malformed(format!(
                    "LMI {}: term for variable {v} has size {} not {}",
                    lmi.name,
                    f.n(),
                    lmi.size
                )));
            }
        }
        self.lmis.push(lmi);
        Ok(())
    }

    pub fn add_equality(&mut self, eq: Equality) -> Result<(), SdpError> {
        if let Some((v, _)) = eq.terms.iter().find(|(v, _)| *v >= self.nvars) {
            return Err(SdpError::Malformed(format!("equality {}: unknown variable {v}", eq.name)));
        }
        self.equalities.push(eq);
        Ok(())
    }

    /// `trace(block) = rhs`.
    pub fn add_trace_equality(&mut self, b: usize, rhs: f64) {
        let blk = &self.psd_blocks[b];
        let terms = (0..blk.size).map(|i| (blk.var(i, i), 1.0)).collect();
        let name = format!("trace({})", blk.name);
        self.equalities.push(Equality { name, terms, rhs });
    }

    /// User LMIs followed by one LMI per PSD block.
    pub fn all_lmis(&self) -> Vec<Lmi> {
        let mut out = self.lmis.clone();
        for blk in &self.psd_blocks {
            let mut terms = Vec::with_capacity(blk.num_vars());
            for j in 0..blk.size {
                for i in 0..=j {
                    terms.push((blk.var(i, j), SymSparse::from_triplets(blk.size, [(i, j, 1.0)])));
                }
            }
            out.push(Lmi {
                name: blk.name.clone(),
                size: blk.size,
                constant: SymSparse::zeros(blk.size),
                terms,
            });
        }
        out
    }

    /// Evaluates an LMI at a variable assignment.
    pub fn lmi_value(lmi: &Lmi, values: &[f64]) -> DMatrix<f64> {
        let mut m = lmi.constant.to_dense();
        for (v, f) in &lmi.terms {
            if values[*v] != 0.0 {
                f.add_to_dense(&mut m, values[*v]);
            }
        }
        m
    }

    /// Dense matrix of a PSD block from a variable assignment.
    pub fn block_matrix(&self, b: usize, values: &[f64]) -> DMatrix<f64> {
        let blk = &self.psd_blocks[b];
        DMatrix::from_fn(blk.size, blk.size, |i, j| values[blk.var(i, j)])
    }

    pub fn objective_value(&self, values: &[f64]) -> f64 {
        self.objective.iter().map(|(v, c)| c * values[*v]).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SdpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    MaxIter,
    NumericalFailure,
}

impl fmt::Display for SdpStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::Optimal => "optimal",
            Self::Infeasible => "infeasible",
            Self::Unbounded => "unbounded",
            Self::MaxIter => "max_iter",
            Self::NumericalFailure => "numerical_failure",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub tol: f64,
    pub max_iter: usize,
    /// Iterate norm beyond which divergence is diagnosed.
    pub divergence_bound: f64,
    pub verbose: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 200,
            divergence_bound: 1e8,
            verbose: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdpSolution {
    pub status: SdpStatus,
    pub objective_value: f64,
    pub values: Vec<f64>,
    /// Relative gap between the two objective bounds.
    pub duality_gap: f64,
    /// Relative residual of the LMI slack equation.
    pub slack_residual: f64,
    /// Relative residual of the multiplier equation.
    pub multiplier_residual: f64,
    /// Smallest eigenvalue of every LMI (user LMIs, then PSD blocks).
    pub min_eigenvalues: Vec<(String, f64)>,
    pub iterations: usize,
}

impl SdpSolution {
    pub fn value(&self, v: VarId) -> f64 {
        self.values[v]
    }
}

/// Solves with the given tolerance and iteration cap.
pub fn solve(p: &SdpProblem, tol: f64, max_iter: usize) -> Result<SdpSolution, SdpError> {
    solve_with(
        p,
        &SolverConfig {
            tol,
            max_iter,
            ..SolverConfig::default()
        },
    )
}

pub fn solve_with(p: &SdpProblem, cfg: &SolverConfig) -> Result<SdpSolution, SdpError> {
    if !(cfg.tol > 1e-12 && cfg.tol < 1e-2) {
        return Err(SdpError::Tolerance(cfg.tol));
    }
    let lmis = p.all_lmis();
    let red = match reduce::reduce(p, &lmis) {
        Ok(r) => r,
        Err(reduce::Inconsistent) => {
            return Ok(finish(p, &lmis, SdpStatus::Infeasible, vec![0.0; p.nvars()], 0, f64::NAN, f64::NAN, f64::NAN));
        }
    };
    let out = ipm::run(&red.std, cfg);
    let values = red.recover(&out.y);
    let mut status = out.status;
    if status == SdpStatus::Optimal && red.unbounded_if_feasible {
        status = SdpStatus::Unbounded;
    }
    Ok(finish(p, &lmis, status, values, out.iterations, out.rel_gap, out.dinf, out.pinf))
}

#[allow(clippy::too_many_arguments)]
fn finish(
    p: &SdpProblem,
    lmis: &[Lmi],
    status: SdpStatus,
    values: Vec<f64>,
    iterations: usize,
    gap: f64,
    slack_residual: f64,
    multiplier_residual: f64,
) -> SdpSolution {
    let min_eigenvalues = lmis
        .iter()
        .map(|l| (l.name.clone(), min_eigenvalue(&SdpProblem::lmi_value(l, &values))))
        .collect();
    SdpSolution {
        status,
        objective_value: p.objective_value(&values),
        values,
        duality_gap: gap,
        slack_residual,
        multiplier_residual,
        min_eigenvalues,
        iterations,
    }
}

/// Independent feasibility report for a candidate assignment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualReport {
    pub lmi_min_eigenvalues: Vec<(String, f64)>,
    pub equality_violations: Vec<(String, f64)>,
    pub objective: f64,
}

impl ResidualReport {
    pub fn worst_eigenvalue(&self) -> f64 {
        self.lmi_min_eigenvalues.iter().map(|x| x.1).fold(f64::INFINITY, f64::min)
    }

    pub fn worst_equality(&self) -> f64 {
        self.equality_violations.iter().map(|x| x.1.abs()).fold(0.0, f64::max)
    }
}

pub fn residuals(p: &SdpProblem, s: &SdpSolution) -> ResidualReport {
    residuals_at(p, &s.values)
}

pub fn residuals_at(p: &SdpProblem, values: &[f64]) -> ResidualReport {
    let lmi_min_eigenvalues = p
        .all_lmis()
        .iter()
        .map(|l| (l.name.clone(), min_eigenvalue(&SdpProblem::lmi_value(l, values))))
        .collect();
    let equality_violations = p
        .equalities
        .iter()
        .map(|e| {
            let lhs: f64 = e.terms.iter().map(|(v, c)| c * values[*v]).sum();
            (e.name.clone(), lhs - e.rhs)
        })
        .collect();
    ResidualReport {
        lmi_min_eigenvalues,
        equality_violations,
        objective: p.objective_value(values),
    }
}
