//! Scenario files: JSON problem data for one multi-agent setup.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use robform::barrier::BarrierParams;
use robform::certifier::{CertifyError, DegreePlan, OmegaSampler};
use robform::netgraph::{pair, AgentGeometry, Pair, UncertainAdjacency};
use robform::polyalg::{Polynomial, TermRecord};
use robform::simulate::{Integrator, SimConfig};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}:{line}:{column}: {msg}")]
    Parse { path: String, line: usize, column: usize, msg: String },
    #[error("{path}: {msg}")]
    Invalid { path: String, msg: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialSpec {
    /// Positions and velocities given per agent.
    Explicit { positions: Vec<Vec<f64>>, velocities: Vec<Vec<f64>> },
    /// `x_i = τ_i + offset + U[-spread, spread]^n`, `ρ_i ~ U[lo, hi]^n`.
    Perturbed {
        spread: f64,
        velocity: (f64, f64),
        #[serde(default)]
        offset: Option<Vec<f64>>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightSpec {
    pub pair: Pair,
    pub terms: Vec<TermRecord>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UncertaintySpec {
    pub nvars: usize,
    /// Constraint polynomials `s_i(θ) >= 0`.
    #[serde(default)]
    pub omega: Vec<Vec<TermRecord>>,
    /// Sampling box, one interval per parameter.
    #[serde(rename = "box", default)]
    pub bbox: Vec<(f64, f64)>,
    /// Formation-edge weights; unlisted formation edges weigh 1.
    #[serde(default)]
    pub weights: Vec<WeightSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DegreePlanSpec {
    #[serde(default)]
    pub d_p: u32,
    #[serde(default)]
    pub d_r: Option<Vec<u32>>,
    #[serde(default)]
    pub d_h: Option<u32>,
}

fn default_dt() -> f64 {
    1e-3
}
fn default_t_end() -> f64 {
    40.0
}
fn default_record_every() -> usize {
    100
}
fn default_conv_tol() -> f64 {
    1e-2
}
fn default_tune_samples() -> usize {
    64
}
fn default_samples() -> usize {
    10_000
}
fn default_tol() -> f64 {
    1e-8
}
fn default_seed() -> u64 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSpec {
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_t_end")]
    pub t_end: f64,
    #[serde(default)]
    pub integrator: Integrator,
    #[serde(default = "default_record_every")]
    pub record_every: usize,
    #[serde(default)]
    pub convergence_horizon: Option<f64>,
    #[serde(default = "default_conv_tol")]
    pub convergence_tol: f64,
    /// Parameter samples used when tuning the barrier gains.
    #[serde(default = "default_tune_samples")]
    pub tune_samples: usize,
}

impl Default for SimSpec {
    fn default() -> Self {
        serde_json::from_str("{}").expect("defaults")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertifySpec {
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
}

impl Default for CertifySpec {
    fn default() -> Self {
        serde_json::from_str("{}").expect("defaults")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub name: String,
    pub n_agents: usize,
    pub dim: usize,
    pub geometry: AgentGeometry,
    pub tau: Vec<Vec<f64>>,
    pub formation_edges: Vec<Pair>,
    pub initial: InitialSpec,
    #[serde(default)]
    pub uncertainty: UncertaintySpec,
    #[serde(default)]
    pub degree_plan: Option<DegreePlanSpec>,
    #[serde(default)]
    pub sim: SimSpec,
    #[serde(default)]
    pub certify: CertifySpec,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Assumption names ("A1", "A2", "A3", "separation") reported but not enforced.
    #[serde(default)]
    pub waived_assumptions: Vec<String>,
    /// Certificate file, relative to the scenario file.
    #[serde(default)]
    pub certificate: Option<String>,
    /// Barrier gains used instead of the tuned ones; only honoured in unsafe mode.
    #[serde(default)]
    pub barrier_override: Option<BarrierParams>,
}

/// A parsed and validated scenario.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub spec: ScenarioSpec,
    pub path: PathBuf,
    pub hash: String,
    pub tau: Vec<f64>,
    pub formation: BTreeSet<Pair>,
    pub omega: Vec<Polynomial>,
    pub weights: BTreeMap<Pair, Polynomial>,
}

fn flatten(rows: &[Vec<f64>], n: usize, dim: usize, what: &str) -> Result<Vec<f64>, String> {
    if rows.len() != n {
        return Err(format!("{what}: {} rows, expected {n}", rows.len()));
    }
    let mut out = Vec::with_capacity(n * dim);
    for (i, r) in rows.iter().enumerate() {
        if r.len() != dim {
            return Err(format!("{what}[{i}]: length {}, expected {dim}", r.len()));
        }
        if r.iter().any(|v| !v.is_finite()) {
            return Err(format!("{what}[{i}]: non-finite entry"));
        }
        out.extend(r);
    }
    Ok(out)
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        let p = path.display().to_string();
        let bytes = std::fs::read(path).map_err(|source| ScenarioError::Io { path: p.clone(), source })?;
        Self::parse(&bytes, path)
    }

    pub fn parse(bytes: &[u8], path: &Path) -> Result<Self, ScenarioError> {
        let p = path.display().to_string();
        let spec: ScenarioSpec = serde_json::from_slice(bytes).map_err(|e| ScenarioError::Parse {
            path: p.clone(),
            line: e.line(),
            column: e.column(),
            msg: {
                let m = e.to_string();
                m.rfind(" at line ").map_or(m.clone(), |k| m[..k].to_string())
            },
        })?;
        let invalid = |msg: String| ScenarioError::Invalid { path: p.clone(), msg };
        let (n, dim) = (spec.n_agents, spec.dim);
        if n < 2 || dim == 0 {
            return Err(invalid(format!("need at least 2 agents and dim >= 1, got {n} and {dim}")));
        }
        let tau = flatten(&spec.tau, n, dim, "tau").map_err(invalid)?;
        let mut formation = BTreeSet::new();
        for &(i, j) in &spec.formation_edges {
            if i >= n || j >= n || i == j {
                return Err(invalid(format!("formation edge ({i}, {j}) invalid for {n} agents")));
            }
            formation.insert(pair(i, j));
        }
        let u = &spec.uncertainty;
        let poly = |terms: &[TermRecord], what: String| {
            Polynomial::from_records(u.nvars, terms).map_err(|e| invalid(format!("{what}: {e}")))
        };
        let omega = u
            .omega
            .iter()
            .enumerate()
            .map(|(k, t)| poly(t, format!("omega[{k}]")))
            .collect::<Result<Vec<_>, _>>()?;
        if u.bbox.len() != u.nvars {
            return Err(invalid(format!("box has {} intervals, expected {}", u.bbox.len(), u.nvars)));
        }
        if u.bbox.iter().any(|&(lo, hi)| !(lo <= hi) || !lo.is_finite() || !hi.is_finite()) {
            return Err(invalid("box intervals must be finite with lo <= hi".into()));
        }
        let mut weights = BTreeMap::new();
        for &e in &formation {
            weights.insert(e, Polynomial::constant(u.nvars, 1.0));
        }
        for w in &u.weights {
            let e = pair(w.pair.0, w.pair.1);
            if !formation.contains(&e) {
                return Err(invalid(format!("weight given for ({}, {}), which is not a formation edge", e.0, e.1)));
            }
            weights.insert(e, poly(&w.terms, format!("weight ({}, {})", e.0, e.1))?);
        }
        if let InitialSpec::Explicit { positions, velocities } = &spec.initial {
            flatten(positions, n, dim, "initial positions").map_err(invalid)?;
            flatten(velocities, n, dim, "initial velocities").map_err(invalid)?;
        }
        if let InitialSpec::Perturbed { offset: Some(o), .. } = &spec.initial {
            if o.len() != dim {
                return Err(invalid(format!("initial offset has length {}, expected {dim}", o.len())));
            }
        }
        let s = &spec.sim;
        if !(s.dt > 0.0 && s.t_end >= 0.0) {
            return Err(invalid("sim.dt must be positive and sim.t_end nonnegative".into()));
        }
        Ok(Self {
            hash: hex::encode(Sha256::digest(bytes)),
            path: path.to_path_buf(),
            spec,
            tau,
            formation,
            omega,
            weights,
        })
    }

    pub fn n(&self) -> usize {
        self.spec.n_agents
    }

    pub fn dim(&self) -> usize {
        self.spec.dim
    }

    pub fn nvars(&self) -> usize {
        self.spec.uncertainty.nvars
    }

    pub fn bbox(&self) -> &[(f64, f64)] {
        &self.spec.uncertainty.bbox
    }

    pub fn geometry(&self) -> AgentGeometry {
        self.spec.geometry
    }

    /// Uncertain adjacency on the formation edges.
    pub fn adjacency(&self) -> Result<UncertainAdjacency, CertifyError> {
        let w: Vec<_> = self.weights.iter().map(|(&p, q)| (p, q.clone())).collect();
        Ok(UncertainAdjacency::from_pairs(self.n(), self.nvars(), &w, self.omega.clone())?)
    }

    /// Digest of the data the certificate depends on.
    pub fn graph_hash(&self) -> String {
        let doc = serde_json::json!({
            "n": self.n(),
            "nvars": self.nvars(),
            "weights": self.weights.iter().map(|(p, q)| (p, q.to_records())).collect::<Vec<_>>(),
            "omega": self.omega.iter().map(Polynomial::to_records).collect::<Vec<_>>(),
        });
        hex::encode(Sha256::digest(doc.to_string().as_bytes()))
    }

    pub fn degree_plan(&self, d_p: Option<u32>) -> Result<DegreePlan, CertifyError> {
        let g = self.adjacency()?;
        let spec = self.spec.degree_plan.clone();
        let dp = d_p.or(spec.as_ref().map(|s| s.d_p)).unwrap_or(0);
        let mut plan = robform::certifier::default_plan(&g, dp)?;
        if d_p.is_none() {
            if let Some(s) = spec {
                if let Some(d_r) = s.d_r {
                    plan.d_r = d_r;
                }
                if let Some(d_h) = s.d_h {
                    plan.d_h = d_h;
                }
            }
        }
        Ok(plan)
    }

    /// Initial positions and velocities for `seed`.
    pub fn initial_state(&self, seed: u64) -> (Vec<f64>, Vec<f64>) {
        let (n, dim) = (self.n(), self.dim());
        match &self.spec.initial {
            InitialSpec::Explicit { positions, velocities } => (positions.concat(), velocities.concat()),
            InitialSpec::Perturbed { spread, velocity, offset } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let off = offset.clone().unwrap_or_else(|| vec![0.0; dim]);
                let mut x = Vec::with_capacity(n * dim);
                for i in 0..n {
                    for k in 0..dim {
                        let d = if *spread > 0.0 { rng.random_range(-spread..=*spread) } else { 0.0 };
                        x.push(self.tau[i * dim + k] + off[k] + d);
                    }
                }
                let (lo, hi) = *velocity;
                let rho = (0..n * dim)
                    .map(|_| if hi > lo { rng.random_range(lo..=hi) } else { lo })
                    .collect();
                (x, rho)
            }
        }
    }

    /// Parameter point held for a whole run.
    pub fn theta_star(&self, seed: u64) -> Result<Vec<f64>, CertifyError> {
        OmegaSampler::new(&self.omega, self.bbox(), self.nvars(), seed ^ 0x7468_6574_61)?.next_sample()
    }

    pub fn weights_at(&self, theta: &[f64]) -> Result<BTreeMap<Pair, f64>, CertifyError> {
        self.weights
            .iter()
            .map(|(&p, q)| Ok((p, q.eval(theta)?)))
            .collect()
    }

    pub fn sim_config(&self, t_end: Option<f64>, dt: Option<f64>) -> SimConfig {
        let s = &self.spec.sim;
        SimConfig {
            dt: dt.unwrap_or(s.dt),
            t_end: t_end.unwrap_or(s.t_end),
            integrator: s.integrator,
            record_every: s.record_every,
            convergence_horizon: s.convergence_horizon,
            convergence_tol: s.convergence_tol,
            energy_tol: 1e-4,
        }
    }

    /// Resolves the scenario's certificate path.
    pub fn certificate_path(&self) -> Option<PathBuf> {
        let c = self.spec.certificate.as_ref()?;
        let base = self.path.parent().unwrap_or(Path::new("."));
        Some(base.join(c))
    }

    pub fn waived(&self, name: &str) -> bool {
        self.spec.waived_assumptions.iter().any(|w| w == name)
    }

    /// Points just outside the sampling box that lie in `Ω`; nonempty means
    /// the box does not contain `Ω`.
    pub fn box_leaks(&self, samples: usize, seed: u64) -> Result<Vec<Vec<f64>>, CertifyError> {
        let r = self.nvars();
        if r == 0 {
            return Ok(Vec::new());
        }
        let grown: Vec<(f64, f64)> = self
            .bbox()
            .iter()
            .map(|&(lo, hi)| {
                let m = 1e-3 * (hi - lo).abs().max(1.0);
                (lo - m, hi + m)
            })
            .collect();
        let mut probes = Vec::new();
        if r <= 12 {
            for mask in 0..(1usize << r) {
                probes.push((0..r).map(|k| if mask >> k & 1 == 1 { grown[k].1 } else { grown[k].0 }).collect::<Vec<_>>());
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..samples {
            let face = rng.random_range(0..r);
            let upper = rng.random_bool(0.5);
            let p: Vec<f64> = (0..r)
                .map(|k| {
                    if k == face {
                        if upper { grown[k].1 } else { grown[k].0 }
                    } else if grown[k].1 > grown[k].0 {
                        rng.random_range(grown[k].0..=grown[k].1)
                    } else {
                        grown[k].0
                    }
                })
                .collect();
            probes.push(p);
        }
        let mut leaks = Vec::new();
        for p in probes {
            let mut inside = true;
            for s in &self.omega {
                if s.eval(&p)? < 0.0 {
                    inside = false;
                    break;
                }
            }
            if inside {
                leaks.push(p);
            }
        }
        Ok(leaks)
    }
}
