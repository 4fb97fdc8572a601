//! Barrier potentials for connectivity and collision avoidance, the energy
//! function `W`, and tuning of the barrier caps.
//!
//! `Ψᵉ(q) = q² / (r̂_s − q + r̂_s²/μ₁)` grows from 0 at `q = 0` to exactly
//! `μ₁` at `q = r̂_s`; `Ψᶜ(p) = (p − ‖τ‖)² / (p − d_s + (d_s − ‖τ‖)²/μ₂)`
//! vanishes at the desired distance and reaches `μ₂` at `p = d_s`. Keeping
//! `W` below both caps keeps formation edges intact and agents apart.

use std::collections::BTreeSet;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::netgraph::{neighbor_sets, AgentGeometry, Pair, TopologyState};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BarrierError {
    #[error("{barrier} barrier outside its domain (denominator {denominator:e})")]
    Domain { barrier: &'static str, denominator: f64 },
    #[error("collision barrier gradient undefined at zero distance")]
    Singular,
    #[error("mu tuning did not converge after {iterations} iterations: {trace:?}")]
    NoConvergence { iterations: usize, trace: Vec<f64> },
    #[error("geometry: {0}")]
    Geometry(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BarrierParams {
    pub mu1: f64,
    pub mu2: f64,
    pub eps_hat: f64,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

fn psi_e_denominator(q: f64, r_hat_s: f64, mu1: f64) -> Result<f64, BarrierError> {
    let d = r_hat_s - q + r_hat_s * r_hat_s / mu1;
    if d > 0.0 {
        Ok(d)
    } else {
        Err(BarrierError::Domain {
            barrier: "connectivity",
            denominator: d,
        })
    }
}

pub fn psi_e(q: f64, r_hat_s: f64, mu1: f64) -> Result<f64, BarrierError> {
    let d = psi_e_denominator(q, r_hat_s, mu1)?;
    Ok(q * q / d)
}

/// Gradient of `Ψᵉ` with respect to `y_i`.
pub fn grad_psi_e(y_ij: &[f64], r_hat_s: f64, mu1: f64) -> Result<Vec<f64>, BarrierError> {
    let q = norm(y_ij);
    let d = psi_e_denominator(q, r_hat_s, mu1)?;
    let f = (2.0 * d + q) / (d * d);
    Ok(y_ij.iter().map(|v| f * v).collect())
}

fn psi_c_denominator(p: f64, tau_norm: f64, d_s: f64, mu2: f64) -> Result<f64, BarrierError> {
    let a = d_s - tau_norm;
    let d = p - d_s + a * a / mu2;
    if d > 0.0 {
        Ok(d)
    } else {
        Err(BarrierError::Domain {
            barrier: "collision",
            denominator: d,
        })
    }
}

pub fn psi_c(p: f64, tau_norm: f64, d_s: f64, mu2: f64) -> Result<f64, BarrierError> {
    let d = psi_c_denominator(p, tau_norm, d_s, mu2)?;
    Ok((p - tau_norm).powi(2) / d)
}

/// `dΨᶜ/dp`.
pub fn dpsi_c_dp(p: f64, tau_norm: f64, d_s: f64, mu2: f64) -> Result<f64, BarrierError> {
    let d = psi_c_denominator(p, tau_norm, d_s, mu2)?;
    let e = p - tau_norm;
    Ok((2.0 * e * d - e * e) / (d * d))
}

/// Gradient of `Ψᶜ` with respect to `y_i`, through `p = ‖y_ij + τ_ij‖`.
pub fn grad_psi_c(y_ij: &[f64], tau_ij: &[f64], d_s: f64, mu2: f64) -> Result<Vec<f64>, BarrierError> {
    let x: Vec<f64> = y_ij.iter().zip(tau_ij).map(|(a, b)| a + b).collect();
    let p = norm(&x);
    let tau_norm = norm(tau_ij);
    let g = dpsi_c_dp(p, tau_norm, d_s, mu2)?;
    if g == 0.0 {
        return Ok(vec![0.0; x.len()]);
    }
    if p == 0.0 {
        return Err(BarrierError::Singular);
    }
    Ok(x.iter().map(|v| g * v / p).collect())
}

/// Positions, velocities and formation offsets, each stacked `N * dim`.
#[derive(Debug, Clone, Copy)]
pub struct AgentState<'a> {
    pub dim: usize,
    pub x: &'a [f64],
    pub rho: &'a [f64],
    pub tau: &'a [f64],
}

impl AgentState<'_> {
    pub fn n(&self) -> usize {
        self.x.len() / self.dim
    }

    pub fn at<'b>(&self, v: &'b [f64], i: usize) -> &'b [f64] {
        &v[i * self.dim..(i + 1) * self.dim]
    }

    /// `y_ij = (x_i − τ_i) − (x_j − τ_j)`.
    pub fn y_ij(&self, i: usize, j: usize) -> Vec<f64> {
        (0..self.dim)
            .map(|k| {
                let a = i * self.dim + k;
                let b = j * self.dim + k;
                (self.x[a] - self.tau[a]) - (self.x[b] - self.tau[b])
            })
            .collect()
    }

    pub fn tau_ij(&self, i: usize, j: usize) -> Vec<f64> {
        (0..self.dim)
            .map(|k| self.tau[i * self.dim + k] - self.tau[j * self.dim + k])
            .collect()
    }
}

/// `½ Σ_i (Σ_{N_sf} Ψᵉ + Σ_{N_sz} Ψᶜ + y_iᵀ Σ_{N_s} G_ij y_ij + ρ_iᵀρ_i)`.
pub fn energy_w(
    s: &AgentState,
    topo: &TopologyState,
    weights: &DMatrix<f64>,
    geom: &AgentGeometry,
    params: &BarrierParams,
) -> Result<f64, BarrierError> {
    let dim = s.dim;
    let mut w = 0.0;
    for i in 0..s.n() {
        let nb = neighbor_sets(i, s.x, dim, topo, geom);
        for &j in &nb.sf {
            let tau = norm(&s.tau_ij(i, j));
            w += psi_e(norm(&s.y_ij(i, j)), geom.r_s - tau, params.mu1)?;
        }
        for &j in &nb.sz {
            let tau = norm(&s.tau_ij(i, j));
            let p = norm(&sub(s.at(s.x, i), s.at(s.x, j)));
            w += psi_c(p, tau, geom.d_s, params.mu2)?;
        }
        let yi: Vec<f64> = (0..dim).map(|k| s.x[i * dim + k] - s.tau[i * dim + k]).collect();
        for &j in &nb.s {
            let yij = s.y_ij(i, j);
            w += weights[(i, j)] * yi.iter().zip(&yij).map(|(a, b)| a * b).sum::<f64>();
        }
        w += s.at(s.rho, i).iter().map(|v| v * v).sum::<f64>();
    }
    Ok(0.5 * w)
}

pub(crate) fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Largest `Ψᶜ(r_z)` over all agent pairs.
pub fn worst_entry_barrier(tau: &[f64], dim: usize, geom: &AgentGeometry, mu2: f64) -> Result<f64, BarrierError> {
    let n = tau.len() / dim;
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            let t = norm(&sub(&tau[i * dim..(i + 1) * dim], &tau[j * dim..(j + 1) * dim]));
            worst = worst.max(psi_c(geom.r_z, t, geom.d_s, mu2)?);
        }
    }
    Ok(worst)
}

/// `ε̂`: half the admissible bound, or `ε/2` when `d_s = 2 r_c` closes it.
pub fn eps_hat(geom: &AgentGeometry) -> f64 {
    let bound = (0.5 * geom.d_s - geom.r_c).min(geom.eps);
    if bound > 0.0 {
        0.5 * bound
    } else {
        0.5 * geom.eps
    }
}

/// Result of [`tune_mu`] with its iteration trace.
#[derive(Debug, Clone, PartialEq)]
pub struct TunedMu {
    pub params: BarrierParams,
    pub mu_safe: f64,
    pub iterations: usize,
    pub trace: Vec<f64>,
}

/// Fixed point `μ = max(1, 1.1 · mu_safe(μ))` with
/// `mu_safe(μ) = max_θ W(t₀; μ, μ) + ½N(N−1) · max_pair Ψᶜ(r_z; μ)`,
/// where `weight_samples` holds the concrete weight matrix at each sampled θ.
pub fn tune_mu(
    s: &AgentState,
    topo: &TopologyState,
    weight_samples: &[DMatrix<f64>],
    geom: &AgentGeometry,
) -> Result<TunedMu, BarrierError> {
    if geom.d_s < 2.0 * geom.r_c {
        return Err(BarrierError::Geometry(format!(
            "d_s = {} below 2 r_c = {}",
            geom.d_s,
            2.0 * geom.r_c
        )));
    }
    if weight_samples.is_empty() {
        return Err(BarrierError::Geometry("no weight samples".into()));
    }
    let eh = eps_hat(geom);
    let n = s.n() as f64;
    let pairs = 0.5 * n * (n - 1.0);
    let mu_safe = |mu: f64| -> Result<f64, BarrierError> {
        let params = BarrierParams {
            mu1: mu,
            mu2: mu,
            eps_hat: eh,
        };
        let mut w0 = f64::NEG_INFINITY;
        for g in weight_samples {
            w0 = w0.max(energy_w(s, topo, g, geom, &params)?);
        }
        Ok(w0 + pairs * worst_entry_barrier(s.tau, s.dim, geom, mu)?)
    };
    let mut mu = (1.1 * mu_safe(f64::INFINITY)?).max(1.0);
    let mut trace = vec![mu];
    for it in 1..=100 {
        let next = (1.1 * mu_safe(mu)?).max(1.0);
        trace.push(next);
        let done = (next - mu).abs() <= 1e-9 * mu.max(1.0);
        mu = next;
        if done {
            let safe = mu_safe(mu)?;
            return Ok(TunedMu {
                params: BarrierParams {
                    mu1: mu,
                    mu2: mu,
                    eps_hat: eh,
                },
                mu_safe: safe,
                iterations: it,
                trace,
            });
        }
    }
    Err(BarrierError::NoConvergence { iterations: 100, trace })
}

/// Formation pairs whose `Ψᵉ(r̂_s − ε̂)` is not below `μ₁`.
pub fn cap_violations(
    tau: &[f64],
    dim: usize,
    formation: &BTreeSet<Pair>,
    geom: &AgentGeometry,
    params: &BarrierParams,
) -> Vec<Pair> {
    formation
        .iter()
        .copied()
        .filter(|&(i, j)| {
            let t = norm(&sub(&tau[i * dim..(i + 1) * dim], &tau[j * dim..(j + 1) * dim]));
            let r_hat = geom.r_s - t;
            !matches!(psi_e(r_hat - params.eps_hat, r_hat, params.mu1), Ok(v) if v < params.mu1)
        })
        .collect()
}
