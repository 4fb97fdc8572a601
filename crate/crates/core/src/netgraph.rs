//! Graphs over agents: uncertain Laplacians, the reduced Laplacian, neighbour
//! sets and hysteresis edge switching.
//!
//! Positions are flat `f64` slices of length `N * dim`; agent `i` occupies
//! `x[i*dim .. (i+1)*dim]`. Pairs are stored as `(i, j)` with `i < j`.

use std::collections::BTreeSet;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::polyalg::{MatrixPolynomial, PolyError, Polynomial};

pub type Pair = (usize, usize);

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GraphError {
    #[error("adjacency is not symmetric at ({0}, {1})")]
    Asymmetric(usize, usize),
    #[error("adjacency has a nonzero diagonal entry at {0}")]
    SelfLoop(usize),
    #[error("size mismatch: {0}")]
    Size(String),
    #[error("invalid geometry: {0}")]
    Geometry(String),
    #[error(transparent)]
    Poly(#[from] PolyError),
}

pub fn pair(i: usize, j: usize) -> Pair {
    (i.min(j), i.max(j))
}

/// Radii and margins of a single agent model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentGeometry {
    pub r_a: f64,
    pub r_c: f64,
    pub r_z: f64,
    pub r_s: f64,
    pub d_s: f64,
    pub eps: f64,
}

impl AgentGeometry {
    /// Checks `0 < r_a <= r_c < r_z < r_s`, `d_s >= 2 r_c` and
    /// `0 <= eps <= r_s - r_z`.
    pub fn validate(&self) -> Result<(), GraphError> {
        let g = self;
        let bad = |m: &str| Err(GraphError::Geometry(m.to_string()));
        if !(g.r_a > 0.0 && g.r_a <= g.r_c && g.r_c < g.r_z && g.r_z < g.r_s) {
            return bad("need 0 < r_a <= r_c < r_z < r_s");
        }
        if g.d_s < 2.0 * g.r_c {
            return bad("need d_s >= 2 r_c");
        }
        if g.d_s >= g.r_z {
            return bad("need d_s < r_z");
        }
        if !(g.eps >= 0.0 && g.eps <= g.r_s - g.r_z) {
            return bad("need 0 <= eps <= r_s - r_z");
        }
        Ok(())
    }
}

/// Symmetric weighted adjacency with polynomial entries and the constraint
/// polynomials `s_i(theta) >= 0` describing the parameter set.
#[derive(Debug, Clone, PartialEq)]
pub struct UncertainAdjacency {
    entries: MatrixPolynomial,
    omega: Vec<Polynomial>,
}

impl UncertainAdjacency {
    pub fn new(entries: MatrixPolynomial, omega: Vec<Polynomial>) -> Result<Self, GraphError> {
        let n = entries.rows();
        if entries.cols() != n {
            return Err(GraphError::Size("adjacency must be square".into()));
        }
        for i in 0..n {
            if !entries.get(i, i).is_zero() {
                return Err(GraphError::SelfLoop(i));
            }
        }
        if let Err(PolyError::NotSymmetric { row, col }) = entries.check_symmetric(0.0) {
            return Err(GraphError::Asymmetric(row, col));
        }
        if let Some(s) = omega.iter().find(|s| s.nvars() != entries.nvars()) {
            return Err(GraphError::Poly(PolyError::DimensionMismatch {
                expected: entries.nvars(),
                found: s.nvars(),
            }));
        }
        Ok(Self { entries, omega })
    }

    /// Builds from a list of weighted pairs.
    pub fn from_pairs(
        n: usize,
        r: usize,
        weights: &[(Pair, Polynomial)],
        omega: Vec<Polynomial>,
    ) -> Result<Self, GraphError> {
        let mut m = MatrixPolynomial::zeros(n, n, r);
        for ((i, j), w) in weights {
            if *i >= n || *j >= n {
                return Err(GraphError::Size(format!("pair ({i}, {j}) out of range {n}")));
            }
            if i == j {
                return Err(GraphError::SelfLoop(*i));
            }
            m.set_symmetric(*i, *j, w.clone());
        }
        Self::new(m, omega)
    }

    pub fn n(&self) -> usize {
        self.entries.rows()
    }

    pub fn nvars(&self) -> usize {
        self.entries.nvars()
    }

    pub fn entries(&self) -> &MatrixPolynomial {
        &self.entries
    }

    pub fn omega(&self) -> &[Polynomial] {
        &self.omega
    }

    /// True when every constraint polynomial is nonnegative at `theta`.
    pub fn in_omega(&self, theta: &[f64]) -> Result<bool, GraphError> {
        for s in &self.omega {
            if s.eval(theta)? < 0.0 {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Keeps only the listed pairs.
    pub fn masked(&self, keep: &BTreeSet<Pair>) -> Self {
        let n = self.n();
        let mut m = MatrixPolynomial::zeros(n, n, self.nvars());
        for &(i, j) in keep {
            m.set_symmetric(i, j, self.entries.get(i, j).clone());
        }
        Self {
            entries: m,
            omega: self.omega.clone(),
        }
    }

    pub fn laplacian(&self) -> MatrixPolynomial {
        laplacian_poly(&self.entries).expect("validated adjacency")
    }
}

/// `L = diag(G 1) - G` for a polynomial adjacency.
pub fn laplacian_poly(g: &MatrixPolynomial) -> Result<MatrixPolynomial, GraphError> {
    let n = g.rows();
    if let Err(PolyError::NotSymmetric { row, col }) = g.check_symmetric(0.0) {
        return Err(GraphError::Asymmetric(row, col));
    }
    let mut l = MatrixPolynomial::zeros(n, n, g.nvars());
    for i in 0..n {
        if !g.get(i, i).is_zero() {
            return Err(GraphError::SelfLoop(i));
        }
        let mut deg = Polynomial::zero(g.nvars());
        for j in 0..n {
            if j != i {
                deg = &deg + g.get(i, j);
                if j > i {
                    l.set_symmetric(i, j, -g.get(i, j));
                }
            }
        }
        l.set_symmetric(i, i, deg);
    }
    Ok(l)
}

/// `L = diag(G 1) - G` for a concrete adjacency.
pub fn laplacian(g: &DMatrix<f64>) -> Result<DMatrix<f64>, GraphError> {
    let n = g.nrows();
    if g.ncols() != n {
        return Err(GraphError::Size("adjacency must be square".into()));
    }
    for i in 0..n {
        if g[(i, i)] != 0.0 {
            return Err(GraphError::SelfLoop(i));
        }
        for j in (i + 1)..n {
            if g[(i, j)] != g[(j, i)] {
                return Err(GraphError::Asymmetric(i, j));
            }
        }
    }
    let mut l = -g.clone();
    for i in 0..n {
        l[(i, i)] = g.row(i).sum();
    }
    Ok(l)
}

/// Orthonormal `N x (N-1)` basis of the complement of the all-ones vector,
/// from Gram-Schmidt on the leading columns of `I - 11^T/N`.
pub fn reduced_basis(n: usize) -> DMatrix<f64> {
    assert!(n >= 2, "reduced basis needs N >= 2");
    let proj = DMatrix::<f64>::identity(n, n) - DMatrix::from_element(n, n, 1.0 / n as f64);
    let mut m = DMatrix::zeros(n, n - 1);
    for k in 0..n - 1 {
        let mut v = proj.column(k).into_owned();
        for _ in 0..2 {
            for c in 0..k {
                let u = m.column(c);
                let d = u.dot(&v);
                v -= u * d;
            }
        }
        let nrm = v.norm();
        m.set_column(k, &(v / nrm));
    }
    m
}

/// `M^T L M`, computed per monomial coefficient matrix.
pub fn reduced_laplacian(l: &MatrixPolynomial, m: &DMatrix<f64>) -> Result<MatrixPolynomial, GraphError> {
    if l.rows() != m.nrows() || l.cols() != m.nrows() {
        return Err(GraphError::Size(format!(
            "Laplacian {}x{} vs basis {}x{}",
            l.rows(),
            l.cols(),
            m.nrows(),
            m.ncols()
        )));
    }
    if let Err(PolyError::NotSymmetric { row, col }) = l.check_symmetric(0.0) {
        return Err(GraphError::Asymmetric(row, col));
    }
    Ok(l.congruence(m, m)?)
}

/// Union-find connectivity of an undirected graph on `n` nodes.
pub fn is_connected(n: usize, edges: impl IntoIterator<Item = Pair>) -> bool {
    if n <= 1 {
        return true;
    }
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    let mut comps = n;
    for (i, j) in edges {
        let (a, b) = (find(&mut parent, i), find(&mut parent, j));
        if a != b {
            parent[a] = b;
            comps -= 1;
        }
    }
    comps == 1
}

pub fn distance(x: &[f64], dim: usize, i: usize, j: usize) -> f64 {
    let (a, b) = (&x[i * dim..(i + 1) * dim], &x[j * dim..(j + 1) * dim]);
    a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeAction {
    Add,
    Remove,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeEvent {
    pub t: f64,
    pub pair: Pair,
    pub action: EdgeAction,
}

/// Current edge set with the formation edges that must never drop.
#[derive(Debug, Clone, PartialEq)]
pub struct TopologyState {
    pub edges: BTreeSet<Pair>,
    pub formation_edges: BTreeSet<Pair>,
    pub last_switch_time: f64,
}

impl TopologyState {
    /// Initial topology: every pair within `r_s - eps`.
    pub fn initial(x: &[f64], dim: usize, formation_edges: &BTreeSet<Pair>, geom: &AgentGeometry) -> Self {
        let n = x.len() / dim;
        let mut edges = BTreeSet::new();
        for i in 0..n {
            for j in (i + 1)..n {
                if distance(x, dim, i, j) <= geom.r_s - geom.eps {
                    edges.insert((i, j));
                }
            }
        }
        Self {
            edges,
            formation_edges: formation_edges.clone(),
            last_switch_time: 0.0,
        }
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.edges.contains(&pair(i, j))
    }

    /// Formation edges missing from the edge set.
    pub fn broken_formation_edges(&self) -> Vec<Pair> {
        self.formation_edges.difference(&self.edges).cloned().collect()
    }
}

/// Hysteresis switching: add at `<= r_s - eps`, drop non-formation edges at
/// `> r_s`. Returns the events in pair order.
pub fn update_edges(
    x: &[f64],
    dim: usize,
    topo: &mut TopologyState,
    geom: &AgentGeometry,
    t: f64,
) -> Vec<EdgeEvent> {
    let n = x.len() / dim;
    let mut events = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let d = distance(x, dim, i, j);
            let p = (i, j);
            if topo.edges.contains(&p) {
                if d > geom.r_s && !topo.formation_edges.contains(&p) {
                    topo.edges.remove(&p);
                    events.push(EdgeEvent {
                        t,
                        pair: p,
                        action: EdgeAction::Remove,
                    });
                }
            } else if d <= geom.r_s - geom.eps {
                topo.edges.insert(p);
                events.push(EdgeEvent {
                    t,
                    pair: p,
                    action: EdgeAction::Add,
                });
            }
        }
    }
    if !events.is_empty() {
        topo.last_switch_time = t;
    }
    events
}

/// Neighbour sets of one agent: sensed, sensed formation, sensed within `r_z`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NeighborSets {
    pub s: Vec<usize>,
    pub sf: Vec<usize>,
    pub sz: Vec<usize>,
}

pub fn neighbor_sets(i: usize, x: &[f64], dim: usize, topo: &TopologyState, geom: &AgentGeometry) -> NeighborSets {
    let n = x.len() / dim;
    let mut out = NeighborSets::default();
    for j in 0..n {
        if j == i || !topo.has_edge(i, j) {
            continue;
        }
        out.s.push(j);
        if topo.formation_edges.contains(&pair(i, j)) {
            out.sf.push(j);
        }
        if distance(x, dim, i, j) < geom.r_z {
            out.sz.push(j);
        }
    }
    out
}

/// One named assumption and the pairs that violate it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionCheck {
    pub name: String,
    pub description: String,
    pub violations: Vec<Violation>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub pair: Pair,
    pub detail: String,
}

impl AssumptionCheck {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks the formation assumptions on offsets `tau` and initial positions
/// `x0`, plus collision-free initial spacing.
pub fn validate_assumptions(
    tau: &[f64],
    x0: &[f64],
    dim: usize,
    formation_edges: &BTreeSet<Pair>,
    geom: &AgentGeometry,
) -> Vec<AssumptionCheck> {
    let n = tau.len() / dim;
    let mut a1 = Vec::new();
    for &(i, j) in formation_edges {
        let d = distance(tau, dim, i, j);
        if d < geom.r_z || d > geom.r_s - geom.eps {
            a1.push(Violation {
                pair: (i, j),
                detail: format!(
                    "|tau_ij| = {d:.6} outside [r_z, r_s - eps] = [{}, {}]",
                    geom.r_z,
                    geom.r_s - geom.eps
                ),
            });
        }
    }
    let mut a2 = Vec::new();
    for &(i, j) in formation_edges {
        let d = distance(x0, dim, i, j);
        if d > geom.r_s - geom.eps {
            a2.push(Violation {
                pair: (i, j),
                detail: format!("initial distance {d:.6} > r_s - eps = {}", geom.r_s - geom.eps),
            });
        }
    }
    let mut a3 = Vec::new();
    let mut sep = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let d = distance(tau, dim, i, j);
            if geom.r_s - d <= geom.d_s + d {
                a3.push(Violation {
                    pair: (i, j),
                    detail: format!(
                        "r_s - |tau_ij| = {:.6} <= d_s + |tau_ij| = {:.6}",
                        geom.r_s - d,
                        geom.d_s + d
                    ),
                });
            }
            let d0 = distance(x0, dim, i, j);
            if d0 <= geom.d_s {
                sep.push(Violation {
                    pair: (i, j),
                    detail: format!("initial distance {d0:.6} <= d_s = {}", geom.d_s),
                });
            }
        }
    }
    vec![
        AssumptionCheck {
            name: "A1".into(),
            description: "formation distances within [r_z, r_s - eps]".into(),
            violations: a1,
        },
        AssumptionCheck {
            name: "A2".into(),
            description: "formation edges present in the initial graph".into(),
            violations: a2,
        },
        AssumptionCheck {
            name: "A3".into(),
            description: "r_s - |tau_ij| > d_s + |tau_ij| for all pairs".into(),
            violations: a3,
        },
        AssumptionCheck {
            name: "S0".into(),
            description: "initial pairwise distances exceed d_s".into(),
            violations: sep,
        },
    ]
}
