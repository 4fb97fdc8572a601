//! Closed-loop double-integrator simulation under the distributed barrier
//! controller, with topology switching and runtime invariant monitoring.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::barrier::{dpsi_c_dp, energy_w, grad_psi_c, grad_psi_e, psi_c, psi_e, AgentState, BarrierError, BarrierParams};
use crate::netgraph::{distance, is_connected, neighbor_sets, pair, update_edges, AgentGeometry, EdgeAction, EdgeEvent, NeighborSets, Pair, TopologyState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    #[default]
    Rk4,
    Euler,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub dt: f64,
    pub t_end: f64,
    pub integrator: Integrator,
    pub record_every: usize,
    /// Time by which formation error plus velocity disagreement must be
    /// below `convergence_tol`; unchecked when `t_end` is shorter.
    pub convergence_horizon: Option<f64>,
    pub convergence_tol: f64,
    /// Allowed energy increase per unit time over a switch-free step.
    pub energy_tol: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            t_end: 40.0,
            integrator: Integrator::Rk4,
            record_every: 100,
            convergence_horizon: None,
            convergence_tol: 1e-2,
            energy_tol: 1e-4,
        }
    }
}

/// Fixed data of one closed-loop run.
#[derive(Debug, Clone, PartialEq)]
pub struct SimProblem {
    pub dim: usize,
    pub tau: Vec<f64>,
    pub geom: AgentGeometry,
    pub params: BarrierParams,
    pub formation_edges: BTreeSet<Pair>,
    /// Edge weights `G_ij(θ*)`; pairs not listed get weight 1 when sensed.
    pub weights: BTreeMap<Pair, f64>,
    pub theta_star: Vec<f64>,
}

impl SimProblem {
    pub fn n(&self) -> usize {
        self.tau.len() / self.dim
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights.get(&pair(i, j)).copied().unwrap_or(1.0)
    }

    /// Concrete weighted adjacency of the current edge set.
    pub fn weight_matrix(&self, topo: &TopologyState) -> DMatrix<f64> {
        let n = self.n();
        let mut g = DMatrix::zeros(n, n);
        for &(i, j) in &topo.edges {
            let w = self.weight(i, j);
            g[(i, j)] = w;
            g[(j, i)] = w;
        }
        g
    }

    fn agent_state<'a>(&'a self, x: &'a [f64], rho: &'a [f64]) -> AgentState<'a> {
        AgentState {
            dim: self.dim,
            x,
            rho,
            tau: &self.tau,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub t: f64,
    pub x: Vec<f64>,
    pub rho: Vec<f64>,
    pub topo: TopologyState,
}

impl SimState {
    pub fn new(x: Vec<f64>, rho: Vec<f64>, prob: &SimProblem) -> Self {
        let topo = TopologyState::initial(&x, prob.dim, &prob.formation_edges, &prob.geom);
        Self { t: 0.0, x, rho, topo }
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

pub fn all_neighbor_sets(x: &[f64], prob: &SimProblem, topo: &TopologyState) -> Vec<NeighborSets> {
    (0..prob.n()).map(|i| neighbor_sets(i, x, prob.dim, topo, &prob.geom)).collect()
}

/// Control input of agent `i`; reads only agent `i` and its neighbours.
pub fn control_input(
    i: usize,
    x: &[f64],
    rho: &[f64],
    prob: &SimProblem,
    sets: &NeighborSets,
) -> Result<Vec<f64>, BarrierError> {
    let dim = prob.dim;
    let s = prob.agent_state(x, rho);
    let mut u = vec![0.0; dim];
    for &j in &sets.sf {
        let tau = norm(&s.tau_ij(i, j));
        let g = grad_psi_e(&s.y_ij(i, j), prob.geom.r_s - tau, prob.params.mu1)?;
        for k in 0..dim {
            u[k] -= g[k];
        }
    }
    for &j in &sets.sz {
        let g = grad_psi_c(&s.y_ij(i, j), &s.tau_ij(i, j), prob.geom.d_s, prob.params.mu2)?;
        for k in 0..dim {
            u[k] -= g[k];
        }
    }
    for &j in &sets.s {
        let w = prob.weight(i, j);
        let y = s.y_ij(i, j);
        for k in 0..dim {
            u[k] -= w * (y[k] + rho[i * dim + k] - rho[j * dim + k]);
        }
    }
    Ok(u)
}

pub fn control_all(x: &[f64], rho: &[f64], prob: &SimProblem, sets: &[NeighborSets]) -> Result<Vec<f64>, BarrierError> {
    let mut u = Vec::with_capacity(x.len());
    for (i, s) in sets.iter().enumerate() {
        u.extend(control_input(i, x, rho, prob, s)?);
    }
    Ok(u)
}

/// `W` with neighbour sets held fixed.
fn energy_frozen(x: &[f64], rho: &[f64], prob: &SimProblem, sets: &[NeighborSets]) -> Result<f64, BarrierError> {
    let s = prob.agent_state(x, rho);
    let dim = prob.dim;
    let mut w = 0.0;
    for (i, nb) in sets.iter().enumerate() {
        for &j in &nb.sf {
            let tau = norm(&s.tau_ij(i, j));
            w += psi_e(norm(&s.y_ij(i, j)), prob.geom.r_s - tau, prob.params.mu1)?;
        }
        for &j in &nb.sz {
            let tau = norm(&s.tau_ij(i, j));
            w += psi_c(distance(x, dim, i, j), tau, prob.geom.d_s, prob.params.mu2)?;
        }
        for &j in &nb.s {
            let y = s.y_ij(i, j);
            let yi = (0..dim).map(|k| x[i * dim + k] - prob.tau[i * dim + k]);
            w += prob.weight(i, j) * yi.zip(&y).map(|(a, b)| a * b).sum::<f64>();
        }
        w += s.at(rho, i).iter().map(|v| v * v).sum::<f64>();
    }
    Ok(0.5 * w)
}

/// `W` at the current state and topology.
pub fn energy(state: &SimState, prob: &SimProblem) -> Result<f64, BarrierError> {
    let g = prob.weight_matrix(&state.topo);
    energy_w(&prob.agent_state(&state.x, &state.rho), &state.topo, &g, &prob.geom, &prob.params)
}

fn axpy(a: &[f64], h: f64, b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + h * y).collect()
}

/// Advances positions and velocities by `dt` with the neighbour sets fixed.
pub fn integrate(
    x: &[f64],
    rho: &[f64],
    dt: f64,
    integrator: Integrator,
    prob: &SimProblem,
    sets: &[NeighborSets],
) -> Result<(Vec<f64>, Vec<f64>), BarrierError> {
    match integrator {
        Integrator::Euler => {
            let u = control_all(x, rho, prob, sets)?;
            let rho1 = axpy(rho, dt, &u);
            let x1 = axpy(x, dt, &rho1);
            Ok((x1, rho1))
        }
        Integrator::Rk4 => {
            let k1u = control_all(x, rho, prob, sets)?;
            let k1x = rho.to_vec();
            let x2 = axpy(x, 0.5 * dt, &k1x);
            let r2 = axpy(rho, 0.5 * dt, &k1u);
            let k2u = control_all(&x2, &r2, prob, sets)?;
            let k2x = r2;
            let x3 = axpy(x, 0.5 * dt, &k2x);
            let r3 = axpy(rho, 0.5 * dt, &k2u);
            let k3u = control_all(&x3, &r3, prob, sets)?;
            let k3x = r3;
            let x4 = axpy(x, dt, &k3x);
            let r4 = axpy(rho, dt, &k3u);
            let k4u = control_all(&x4, &r4, prob, sets)?;
            let k4x = r4;
            let comb = |v: &[f64], a: &[f64], b: &[f64], c: &[f64], d: &[f64]| -> Vec<f64> {
                (0..v.len())
                    .map(|k| v[k] + dt / 6.0 * (a[k] + 2.0 * b[k] + 2.0 * c[k] + d[k]))
                    .collect()
            };
            Ok((comb(x, &k1x, &k2x, &k3x, &k4x), comb(rho, &k1u, &k2u, &k3u, &k4u)))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureKind {
    Collision,
    FormationBreak,
    Disconnected,
    EnergyIncrease,
    NoConvergence,
    Domain,
    NonFinite,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimFailure {
    pub kind: FailureKind,
    pub t: f64,
    pub pair: Option<Pair>,
    pub detail: String,
}

impl SimFailure {
    /// 5 for barrier-domain and non-finite failures, 4 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self.kind {
            FailureKind::Domain | FailureKind::NonFinite => 5,
            _ => 4,
        }
    }
}

/// Result of one step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepInfo {
    pub events: Vec<EdgeEvent>,
    /// `W` after the flow with the pre-step neighbour sets, minus `W` before.
    pub flow_drift: f64,
    /// `W` after the topology update minus `W` after the flow.
    pub jump: f64,
    /// Upper bound on `jump` implied by the switches of this step.
    pub jump_bound: f64,
    pub w: f64,
}

fn sets_key(sets: &[NeighborSets]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for (i, s) in sets.iter().enumerate() {
        for &j in &s.sz {
            if i < j {
                out.push((i, j));
            }
        }
    }
    out
}

/// One integration step followed by the topology update.
pub fn step(state: &mut SimState, dt: f64, integrator: Integrator, prob: &SimProblem) -> Result<StepInfo, SimFailure> {
    let t1 = state.t + dt;
    let domain = |e: BarrierError, t: f64| SimFailure {
        kind: FailureKind::Domain,
        t,
        pair: None,
        detail: e.to_string(),
    };
    let sets = all_neighbor_sets(&state.x, prob, &state.topo);
    let w0 = energy_frozen(&state.x, &state.rho, prob, &sets).map_err(|e| domain(e, state.t))?;
    let (x1, rho1) = integrate(&state.x, &state.rho, dt, integrator, prob, &sets).map_err(|e| domain(e, state.t))?;
    if x1.iter().chain(&rho1).any(|v| !v.is_finite()) {
        return Err(SimFailure {
            kind: FailureKind::NonFinite,
            t: t1,
            pair: None,
            detail: "state is not finite".into(),
        });
    }
    let w_flow = energy_frozen(&x1, &rho1, prob, &sets).map_err(|e| domain(e, t1))?;
    state.x = x1;
    state.rho = rho1;
    state.t = t1;
    let events = update_edges(&state.x, prob.dim, &mut state.topo, &prob.geom, t1);
    let new_sets = all_neighbor_sets(&state.x, prob, &state.topo);
    let w1 = energy_frozen(&state.x, &state.rho, prob, &new_sets).map_err(|e| domain(e, t1))?;

    let mut bound = 1e-9;
    let s = prob.agent_state(&state.x, &state.rho);
    for ev in events.iter().filter(|e| e.action == EdgeAction::Add) {
        let (i, j) = ev.pair;
        bound += 0.5 * prob.weight(i, j) * norm(&s.y_ij(i, j)).powi(2);
    }
    let before: BTreeSet<_> = sets_key(&sets).into_iter().collect();
    for (i, j) in sets_key(&new_sets) {
        if before.contains(&(i, j)) {
            continue;
        }
        let tau = norm(&s.tau_ij(i, j));
        let p = distance(&state.x, prob.dim, i, j);
        let g = &prob.geom;
        let at_rz = psi_c(g.r_z, tau, g.d_s, prob.params.mu2).map_err(|e| domain(e, t1))?;
        let slope = dpsi_c_dp(p, tau, g.d_s, prob.params.mu2).map_err(|e| domain(e, t1))?;
        bound += at_rz + slope.abs() * (g.r_z - p).max(0.0);
    }
    Ok(StepInfo {
        events,
        flow_drift: w_flow - w0,
        jump: w1 - w_flow,
        jump_bound: bound,
        w: w1,
    })
}

/// Smallest pairwise distance and the pair attaining it.
pub fn min_pair_distance(x: &[f64], dim: usize) -> (f64, Option<Pair>) {
    let n = x.len() / dim;
    let mut best = (f64::INFINITY, None);
    for i in 0..n {
        for j in i + 1..n {
            let d = distance(x, dim, i, j);
            if d < best.0 {
                best = (d, Some((i, j)));
            }
        }
    }
    best
}

pub fn formation_error(x: &[f64], prob: &SimProblem) -> f64 {
    let s = prob.agent_state(x, x);
    prob.formation_edges
        .iter()
        .map(|&(i, j)| norm(&s.y_ij(i, j)))
        .fold(0.0, f64::max)
}

pub fn velocity_disagreement(rho: &[f64], dim: usize) -> f64 {
    let n = rho.len() / dim;
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            worst = worst.max(distance(rho, dim, i, j));
        }
    }
    worst
}

/// One logged sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub t: f64,
    pub x: Vec<f64>,
    pub rho: Vec<f64>,
    pub u: Vec<f64>,
    pub w: f64,
    pub min_distance: f64,
    pub formation_error: f64,
    pub velocity_disagreement: f64,
    pub edges: Vec<Pair>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrajectoryLog {
    pub n: usize,
    pub dim: usize,
    pub records: Vec<Record>,
    pub events: Vec<EdgeEvent>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub t_final: f64,
    pub steps: usize,
    pub formation_error: f64,
    pub velocity_disagreement: f64,
    pub min_distance: f64,
    pub min_distance_pair: Option<Pair>,
    pub edge_switches: usize,
    pub final_w: f64,
    pub max_flow_drift_rate: f64,
    pub max_jump_excess: f64,
    pub converged: Option<bool>,
    pub failure: Option<SimFailure>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimOutcome {
    pub log: TrajectoryLog,
    pub metrics: Metrics,
    pub final_state: SimState,
}

impl SimOutcome {
    pub fn exit_code(&self) -> i32 {
        self.metrics.failure.as_ref().map_or(0, SimFailure::exit_code)
    }
}

fn record(state: &SimState, prob: &SimProblem) -> Result<Record, BarrierError> {
    let sets = all_neighbor_sets(&state.x, prob, &state.topo);
    Ok(Record {
        t: state.t,
        u: control_all(&state.x, &state.rho, prob, &sets)?,
        w: energy_frozen(&state.x, &state.rho, prob, &sets)?,
        min_distance: min_pair_distance(&state.x, prob.dim).0,
        formation_error: formation_error(&state.x, prob),
        velocity_disagreement: velocity_disagreement(&state.rho, prob.dim),
        edges: state.topo.edges.iter().copied().collect(),
        x: state.x.clone(),
        rho: state.rho.clone(),
    })
}

/// Checks the pointwise invariants at the current state.
pub fn check_invariants(state: &SimState, prob: &SimProblem) -> Result<(), SimFailure> {
    let (d, p) = min_pair_distance(&state.x, prob.dim);
    if d <= prob.geom.d_s {
        return Err(SimFailure {
            kind: FailureKind::Collision,
            t: state.t,
            pair: p,
            detail: format!("distance {d:.6} <= d_s = {}", prob.geom.d_s),
        });
    }
    for &(i, j) in &prob.formation_edges {
        let d = distance(&state.x, prob.dim, i, j);
        if d >= prob.geom.r_s || !state.topo.has_edge(i, j) {
            return Err(SimFailure {
                kind: FailureKind::FormationBreak,
                t: state.t,
                pair: Some((i, j)),
                detail: format!("formation distance {d:.6} >= r_s = {}", prob.geom.r_s),
            });
        }
    }
    if !is_connected(prob.n(), state.topo.edges.iter().copied()) {
        return Err(SimFailure {
            kind: FailureKind::Disconnected,
            t: state.t,
            pair: None,
            detail: format!("{} edges, graph disconnected", state.topo.edges.len()),
        });
    }
    Ok(())
}

/// Runs from `state` until `cfg.t_end` or the first invariant violation.
pub fn run(prob: &SimProblem, mut state: SimState, cfg: &SimConfig) -> SimOutcome {
    let steps = (cfg.t_end / cfg.dt).round() as usize;
    let record_every = cfg.record_every.max(1);
    let horizon_step = cfg
        .convergence_horizon
        .filter(|h| *h <= cfg.t_end + 0.5 * cfg.dt)
        .map(|h| (h / cfg.dt).round() as usize);
    let mut log = TrajectoryLog {
        n: prob.n(),
        dim: prob.dim,
        records: Vec::new(),
        events: Vec::new(),
    };
    let mut failure = check_invariants(&state, prob).err();
    let mut max_drift: f64 = f64::NEG_INFINITY;
    let mut max_excess: f64 = f64::NEG_INFINITY;
    let mut global_min = min_pair_distance(&state.x, prob.dim);
    let mut converged = None;
    let mut done = 0;
    let push = |state: &SimState, log: &mut TrajectoryLog| -> Result<(), SimFailure> {
        record(state, prob).map(|r| log.records.push(r)).map_err(|e| SimFailure {
            kind: FailureKind::Domain,
            t: state.t,
            pair: None,
            detail: e.to_string(),
        })
    };
    if steps > 0 && failure.is_none() {
        failure = push(&state, &mut log).err();
    }
    let t0 = state.t;
    while failure.is_none() && done < steps {
        let info = match step(&mut state, cfg.dt, cfg.integrator, prob) {
            Ok(info) => info,
            Err(f) => {
                failure = Some(f);
                break;
            }
        };
        done += 1;
        state.t = t0 + done as f64 * cfg.dt;
        log.events.extend(info.events.iter().cloned().map(|mut e| {
            e.t = state.t;
            e
        }));
        max_drift = max_drift.max(info.flow_drift / cfg.dt);
        max_excess = max_excess.max(info.jump - info.jump_bound);
        let m = min_pair_distance(&state.x, prob.dim);
        if m.0 < global_min.0 {
            global_min = m;
        }
        if let Err(f) = check_invariants(&state, prob) {
            failure = Some(f);
        } else if info.flow_drift > cfg.energy_tol * cfg.dt {
            failure = Some(SimFailure {
                kind: FailureKind::EnergyIncrease,
                t: state.t,
                pair: None,
                detail: format!("W rose by {:.3e} over a switch-free flow of dt = {}", info.flow_drift, cfg.dt),
            });
        } else if info.jump > info.jump_bound {
            failure = Some(SimFailure {
                kind: FailureKind::EnergyIncrease,
                t: state.t,
                pair: info.events.first().map(|e| e.pair),
                detail: format!("W jumped by {:.3e} > bound {:.3e} at a switch", info.jump, info.jump_bound),
            });
        }
        if Some(done) == horizon_step && failure.is_none() {
            let fe = formation_error(&state.x, prob);
            let vd = velocity_disagreement(&state.rho, prob.dim);
            let ok = fe + vd <= cfg.convergence_tol;
            converged = Some(ok);
            if !ok {
                failure = Some(SimFailure {
                    kind: FailureKind::NoConvergence,
                    t: state.t,
                    pair: None,
                    detail: format!("formation error {fe:.3e} + velocity disagreement {vd:.3e} > {}", cfg.convergence_tol),
                });
            }
        }
        if done % record_every == 0 || done == steps || failure.is_some() {
            if let Err(f) = push(&state, &mut log) {
                failure.get_or_insert(f);
            }
        }
    }
    let final_w = energy(&state, prob).unwrap_or(f64::NAN);
    let metrics = Metrics {
        t_final: state.t,
        steps: done,
        formation_error: formation_error(&state.x, prob),
        velocity_disagreement: velocity_disagreement(&state.rho, prob.dim),
        min_distance: global_min.0,
        min_distance_pair: global_min.1,
        edge_switches: log.events.len(),
        final_w,
        max_flow_drift_rate: if done > 0 { max_drift } else { 0.0 },
        max_jump_excess: if done > 0 { max_excess } else { 0.0 },
        converged,
        failure,
    };
    SimOutcome {
        log,
        metrics,
        final_state: state,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn geom() -> AgentGeometry {
        AgentGeometry {
            r_a: 0.75,
            r_c: 0.9375,
            r_z: 2.5,
            r_s: 8.0,
            d_s: 1.875,
            eps: 0.1,
        }
    }

    fn pair_problem(mu: f64) -> SimProblem {
        SimProblem {
            dim: 2,
            tau: vec![0.0, 0.0, 3.0, 0.0],
            geom: geom(),
            params: BarrierParams {
                mu1: mu,
                mu2: mu,
                eps_hat: 0.05,
            },
            formation_edges: [(0, 1)].into_iter().collect(),
            weights: BTreeMap::new(),
            theta_star: vec![],
        }
    }

    #[test]
    fn equilibrium_is_at_rest() {
        let prob = pair_problem(50.0);
        let state = SimState::new(vec![1.0, 1.0, 4.0, 1.0], vec![0.5, 0.0, 0.5, 0.0], &prob);
        let sets = all_neighbor_sets(&state.x, &prob, &state.topo);
        assert_eq!(control_all(&state.x, &state.rho, &prob, &sets).unwrap(), vec![0.0; 4]);
        let out = run(&prob, state, &SimConfig { t_end: 1.0, ..SimConfig::default() });
        assert!(out.metrics.failure.is_none());
        assert!(out.metrics.formation_error < 1e-12);
        assert!((out.final_state.x[0] - 1.5).abs() < 1e-9);
    }

    #[test]
    fn pair_forces_are_antisymmetric() {
        let prob = pair_problem(50.0);
        let x = vec![0.0, 0.0, 3.2, 0.1];
        let rho = vec![0.0; 4];
        let topo = TopologyState::initial(&x, 2, &prob.formation_edges, &prob.geom);
        let sets = all_neighbor_sets(&x, &prob, &topo);
        let u = control_all(&x, &rho, &prob, &sets).unwrap();
        assert!((u[0] + u[2]).abs() < 1e-14 && (u[1] + u[3]).abs() < 1e-14);
        assert!(u[0] > 0.0);
    }

    #[test]
    fn free_motion_euler_exact() {
        let mut prob = pair_problem(50.0);
        prob.formation_edges.clear();
        prob.tau = vec![0.0, 0.0, 100.0, 0.0];
        let x = vec![0.0, 0.0, 100.0, 0.0];
        let rho = vec![1.0, 2.0, 1.0, 2.0];
        let mut state = SimState::new(x, rho, &prob);
        state.topo.edges.clear();
        step(&mut state, 0.01, Integrator::Euler, &prob).unwrap();
        assert_eq!(state.x, vec![0.01, 0.02, 100.01, 0.02]);
    }

    #[test]
    fn zero_horizon_logs_nothing() {
        let prob = pair_problem(50.0);
        let state = SimState::new(vec![0.0, 0.0, 3.0, 0.0], vec![0.0; 4], &prob);
        let out = run(&prob, state, &SimConfig { t_end: 0.0, ..SimConfig::default() });
        assert!(out.log.records.is_empty());
        assert_eq!(out.exit_code(), 0);
    }

    #[test]
    fn barrier_holds_a_fast_separating_pair() {
        let prob = pair_problem(0.05);
        let state = SimState::new(vec![0.0, 0.0, 3.0, 0.0], vec![-4.0, 0.0, 4.0, 0.0], &prob);
        let out = run(&prob, state, &SimConfig { t_end: 5.0, ..SimConfig::default() });
        assert!(out.metrics.failure.is_none(), "{:?}", out.metrics.failure);
        let widest = out.log.records.iter().map(|r| distance(&r.x, 2, 0, 1)).fold(0.0, f64::max);
        assert!(widest > 3.5 && widest < prob.geom.r_s, "{widest}");
        assert!(out.metrics.max_flow_drift_rate <= 0.0);
    }
}
