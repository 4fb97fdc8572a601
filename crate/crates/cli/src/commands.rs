//! The `check`, `certify`, `simulate` and `plot` commands.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use robform::barrier::{cap_violations, tune_mu, AgentState, BarrierParams};
use robform::certifier::{
    reduced_laplacian_of, sample_lambda2, solve_plan, verify_certificate, Certificate, CertifyError, OmegaSampler,
    DEFAULT_THRESHOLD,
};
use robform::netgraph::{validate_assumptions, AgentGeometry, TopologyState};
use robform::sdp::{SdpStatus, SolverConfig};
use robform::simulate::{run, SimOutcome, SimProblem, SimState};
use serde::{Deserialize, Serialize};

use crate::plot::{line_chart, trajectory_chart, Series};
use crate::scenario::Scenario;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Exit status and human-readable report of one command.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub code: i32,
    pub report: String,
}

impl Outcome {
    fn new(code: i32, report: impl Into<String>) -> Self {
        Self {
            code,
            report: report.into(),
        }
    }
}

/// Certificate as written by `certify`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateFile {
    pub scenario: String,
    pub graph_hash: String,
    pub threshold: f64,
    pub solver_status: SdpStatus,
    pub sampled_min_lambda2: f64,
    pub sampled_argmin: Vec<f64>,
    pub samples: usize,
    pub certificate: Certificate,
}

/// Everything needed to replay a simulation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub scenario: String,
    pub scenario_name: String,
    pub scenario_hash: String,
    pub graph_hash: String,
    pub seed: u64,
    pub t_end: f64,
    pub dt: f64,
    pub unsafe_mode: bool,
    pub theta_star: Vec<f64>,
    pub barrier: BarrierParams,
    pub barrier_source: String,
    pub mu_safe: Option<f64>,
    pub certificate: Option<String>,
    pub c_star: Option<f64>,
    pub geometry: AgentGeometry,
    pub n_agents: usize,
    pub dim: usize,
    pub outputs: Vec<String>,
    pub exit_code: i32,
    pub created_unix: u64,
}

fn load(path: &Path) -> Result<Scenario, Outcome> {
    Scenario::load(path).map_err(|e| Outcome::new(2, format!("error: {e}\n")))
}

/// Assumption report; the flag is false when any non-waived check fails.
fn assumptions(sc: &Scenario, seed: u64) -> (bool, String) {
    let mut ok = true;
    let mut out = String::new();
    let geom = sc.geometry();
    match geom.validate() {
        Ok(()) => out.push_str("geometry: ok\n"),
        Err(e) => {
            ok = false;
            let _ = writeln!(out, "geometry: FAIL: {e}");
        }
    }
    let (x0, _) = sc.initial_state(seed);
    for c in validate_assumptions(&sc.tau, &x0, sc.dim(), &sc.formation, &geom) {
        let waived = sc.waived(&c.name);
        let state = match (c.passed(), waived) {
            (true, _) => "ok",
            (false, true) => "WAIVED",
            (false, false) => "FAIL",
        };
        let _ = writeln!(out, "{} ({}): {state}", c.name, c.description);
        for v in c.violations.iter().take(10) {
            let _ = writeln!(out, "  pair ({}, {}): {}", v.pair.0, v.pair.1, v.detail);
        }
        if c.violations.len() > 10 {
            let _ = writeln!(out, "  ... {} more", c.violations.len() - 10);
        }
        ok &= c.passed() || waived;
    }
    match sc.box_leaks(256, seed) {
        Ok(l) if l.is_empty() => out.push_str("box: ok (no boundary probe lies in the parameter set)\n"),
        Ok(l) => {
            ok = false;
            let _ = writeln!(out, "box: FAIL: parameter set reaches outside the box, e.g. at {:?}", l[0]);
        }
        Err(e) => {
            ok = false;
            let _ = writeln!(out, "box: FAIL: {e}");
        }
    }
    (ok, out)
}

/// Exit 0 iff every assumption holds; waived ones still count as failures here.
pub fn cmd_check(path: &Path) -> Outcome {
    let sc = match load(path) {
        Ok(s) => s,
        Err(o) => return o,
    };
    let (ok, mut report) = assumptions(&sc, sc.spec.seed);
    let waived_fail = report.contains("WAIVED");
    let pass = ok && !waived_fail;
    let _ = writeln!(report, "{}: {}", sc.spec.name, if pass { "all assumptions hold" } else { "assumptions violated" });
    Outcome::new(if pass { 0 } else { 1 }, report)
}

#[derive(Debug, Clone, Default)]
pub struct CertifyOpts {
    pub d_p: Option<u32>,
    pub tol: Option<f64>,
    pub samples: Option<usize>,
    pub seed: Option<u64>,
    pub out: PathBuf,
}

pub fn certificate_file_name(sc: &Scenario) -> String {
    format!("{}.certificate.json", sc.spec.name)
}

pub fn cmd_certify(path: &Path, opts: &CertifyOpts) -> Outcome {
    let sc = match load(path) {
        Ok(s) => s,
        Err(o) => return o,
    };
    let seed = opts.seed.unwrap_or(sc.spec.seed);
    let (ok, mut report) = assumptions(&sc, seed);
    if !ok {
        report.push_str("certify: scenario fails its assumption checks\n");
        return Outcome::new(1, report);
    }
    let fail = |code: i32, report: &mut String, e: &dyn std::fmt::Display| {
        let _ = writeln!(report, "error: {e}");
        Outcome::new(code, std::mem::take(report))
    };
    let plan = match sc.degree_plan(opts.d_p) {
        Ok(p) => p,
        Err(e) => return fail(2, &mut report, &e),
    };
    let g = match sc.adjacency() {
        Ok(g) => g,
        Err(e) => return fail(2, &mut report, &e),
    };
    let l_hat = match reduced_laplacian_of(&g) {
        Ok(l) => l,
        Err(e) => return fail(3, &mut report, &e),
    };
    let solver = SolverConfig {
        tol: opts.tol.unwrap_or(sc.spec.certify.tol),
        ..SolverConfig::default()
    };
    let _ = writeln!(report, "degree plan: d_P = {}, d_R = {:?}, d_H = {}", plan.d_p, plan.d_r, plan.d_h);
    let (cert, status) = match solve_plan(&l_hat, g.omega(), &plan, &solver) {
        Ok(r) => r,
        Err(e @ CertifyError::Plan(_)) => return fail(2, &mut report, &e),
        Err(e) => return fail(3, &mut report, &e),
    };
    if status != SdpStatus::Optimal {
        let _ = writeln!(report, "solver status {status}; best c = {:.6e}", cert.c_star);
        return Outcome::new(3, report);
    }
    let samples = if sc.nvars() == 0 { 1 } else { opts.samples.unwrap_or(sc.spec.certify.samples) };
    let (lambda2, argmin) = match sample_lambda2(&g, sc.bbox(), samples, seed) {
        Ok(r) => r,
        Err(e) => return fail(3, &mut report, &e),
    };
    let _ = writeln!(report, "c* = {:.6e}", cert.c_star);
    let _ = writeln!(report, "sampled min lambda2 = {lambda2:.6e} over {samples} samples at theta = {argmin:?}");
    let file = CertificateFile {
        scenario: sc.spec.name.clone(),
        graph_hash: sc.graph_hash(),
        threshold: DEFAULT_THRESHOLD,
        solver_status: status,
        sampled_min_lambda2: lambda2,
        sampled_argmin: argmin,
        samples,
        certificate: cert.clone(),
    };
    let target = opts.out.join(certificate_file_name(&sc));
    if let Err(e) = fs::create_dir_all(&opts.out).and_then(|_| write_json(&target, &file)) {
        return fail(3, &mut report, &e);
    }
    let _ = writeln!(report, "certificate written to {}", target.display());
    if cert.c_star > DEFAULT_THRESHOLD && lambda2 > 0.0 {
        report.push_str("certified: the initial graph is connected for every parameter in the set\n");
        Outcome::new(0, report)
    } else if cert.c_star > DEFAULT_THRESHOLD {
        report.push_str("contradiction: positive certificate but a sampled parameter disconnects the graph\n");
        Outcome::new(1, report)
    } else {
        let _ = writeln!(
            report,
            "inconclusive: c* <= {DEFAULT_THRESHOLD:e}; retry with a richer certificate, e.g. --dP {}",
            plan.d_p + 1
        );
        Outcome::new(1, report)
    }
}

fn write_json<T: Serialize>(path: &Path, v: &T) -> std::io::Result<()> {
    let mut s = serde_json::to_string_pretty(v).map_err(std::io::Error::other)?;
    s.push('\n');
    fs::write(path, s)
}

#[derive(Debug, Clone, Default)]
pub struct SimulateOpts {
    pub seed: Option<u64>,
    pub t_end: Option<f64>,
    pub dt: Option<f64>,
    pub unsafe_mode: bool,
    pub out: PathBuf,
}

pub fn run_dir_name(sc: &Scenario, seed: u64) -> String {
    format!("{}-seed{seed}", sc.spec.name)
}

/// Loads and checks the certificate; returns its path and `c*`.
fn accepted_certificate(sc: &Scenario, out: &Path, seed: u64) -> Result<(PathBuf, f64), String> {
    let path = sc.certificate_path().unwrap_or_else(|| out.join(certificate_file_name(sc)));
    let text = fs::read_to_string(&path)
        .map_err(|e| format!("no certificate at {} ({e}); run certify first or pass --unsafe", path.display()))?;
    let file: CertificateFile =
        serde_json::from_str(&text).map_err(|e| format!("certificate {}: {e}", path.display()))?;
    if file.graph_hash != sc.graph_hash() {
        return Err(format!("certificate {} was issued for a different graph", path.display()));
    }
    let c = file.certificate.c_star;
    if !(c > file.threshold.max(DEFAULT_THRESHOLD)) {
        return Err(format!("certificate c* = {c:e} is not positive; refusing without --unsafe"));
    }
    let l_hat = sc.adjacency().and_then(|g| reduced_laplacian_of(&g)).map_err(|e| e.to_string())?;
    let rep = verify_certificate(&file.certificate, &l_hat, &sc.omega, sc.bbox(), 256, seed).map_err(|e| e.to_string())?;
    if !rep.passed {
        return Err(format!(
            "certificate {} fails sampled verification (P margin {:e}, H margin {:e})",
            path.display(),
            rep.p_margin,
            rep.h_margin
        ));
    }
    Ok((path, c))
}

/// Everything `simulate` needs before the integration starts.
pub struct Prepared {
    pub problem: SimProblem,
    pub state: SimState,
    pub barrier_source: String,
    pub mu_safe: Option<f64>,
}

/// Builds the closed-loop problem for `seed`; barrier gains come from the
/// override when `use_override` is set, otherwise from tuning.
pub fn prepare(sc: &Scenario, seed: u64, use_override: bool) -> Result<Prepared, (i32, String)> {
    let theta = sc.theta_star(seed).map_err(|e| (3, e.to_string()))?;
    let weights = sc.weights_at(&theta).map_err(|e| (3, e.to_string()))?;
    let geom = sc.geometry();
    let (x0, rho0) = sc.initial_state(seed);
    let mut problem = SimProblem {
        dim: sc.dim(),
        tau: sc.tau.clone(),
        geom,
        params: BarrierParams {
            mu1: 1.0,
            mu2: 1.0,
            eps_hat: robform::barrier::eps_hat(&geom),
        },
        formation_edges: sc.formation.clone(),
        weights,
        theta_star: theta.clone(),
    };
    let state = SimState::new(x0, rho0, &problem);
    if let (true, Some(p)) = (use_override, sc.spec.barrier_override) {
        problem.params = p;
        return Ok(Prepared {
            problem,
            state,
            barrier_source: "override".into(),
            mu_safe: None,
        });
    }
    let mut samples = vec![problem.weight_matrix(&state.topo)];
    let mut sampler = OmegaSampler::new(&sc.omega, sc.bbox(), sc.nvars(), seed.wrapping_add(1)).map_err(|e| (3, e.to_string()))?;
    let count = if sc.nvars() == 0 { 0 } else { sc.spec.sim.tune_samples };
    for _ in 0..count {
        let th = sampler.next_sample().map_err(|e| (3, e.to_string()))?;
        let mut p = problem.clone();
        p.weights = sc.weights_at(&th).map_err(|e| (3, e.to_string()))?;
        samples.push(p.weight_matrix(&state.topo));
    }
    let agents = AgentState {
        dim: sc.dim(),
        x: &state.x,
        rho: &state.rho,
        tau: &sc.tau,
    };
    let tuned = tune_mu(&agents, &state.topo, &samples, &geom).map_err(|e| (5, format!("barrier tuning: {e}")))?;
    problem.params = tuned.params;
    let caps = cap_violations(&sc.tau, sc.dim(), &sc.formation, &geom, &problem.params);
    if !caps.is_empty() {
        return Err((5, format!("barrier caps not met on formation pairs {caps:?}")));
    }
    Ok(Prepared {
        problem,
        state,
        barrier_source: "tuned".into(),
        mu_safe: Some(tuned.mu_safe),
    })
}

pub fn cmd_simulate(path: &Path, opts: &SimulateOpts) -> Outcome {
    let sc = match load(path) {
        Ok(s) => s,
        Err(o) => return o,
    };
    let seed = opts.seed.unwrap_or(sc.spec.seed);
    let (ok, mut report) = assumptions(&sc, seed);
    if !ok {
        report.push_str("simulate: scenario fails its assumption checks\n");
        return Outcome::new(1, report);
    }
    let cert = if opts.unsafe_mode {
        report.push_str("unsafe mode: certificate not required\n");
        None
    } else {
        match accepted_certificate(&sc, &opts.out, seed) {
            Ok(c) => Some(c),
            Err(e) => {
                let _ = writeln!(report, "error: {e}");
                return Outcome::new(1, report);
            }
        }
    };
    if sc.spec.barrier_override.is_some() && !opts.unsafe_mode {
        report.push_str("barrier_override ignored outside unsafe mode\n");
    }
    let prep = match prepare(&sc, seed, opts.unsafe_mode) {
        Ok(p) => p,
        Err((code, e)) => {
            let _ = writeln!(report, "error: {e}");
            return Outcome::new(code, report);
        }
    };
    let cfg = sc.sim_config(opts.t_end, opts.dt);
    let _ = writeln!(
        report,
        "barrier gains ({}): mu1 = {:.6e}, mu2 = {:.6e}, eps_hat = {}",
        prep.barrier_source, prep.problem.params.mu1, prep.problem.params.mu2, prep.problem.params.eps_hat
    );
    let outcome = run(&prep.problem, prep.state.clone(), &cfg);
    let code = outcome.exit_code();
    let dir = opts.out.join(run_dir_name(&sc, seed));
    let manifest = RunManifest {
        tool_version: VERSION.into(),
        scenario: sc.path.display().to_string(),
        scenario_name: sc.spec.name.clone(),
        scenario_hash: sc.hash.clone(),
        graph_hash: sc.graph_hash(),
        seed,
        t_end: cfg.t_end,
        dt: cfg.dt,
        unsafe_mode: opts.unsafe_mode,
        theta_star: prep.problem.theta_star.clone(),
        barrier: prep.problem.params,
        barrier_source: prep.barrier_source.clone(),
        mu_safe: prep.mu_safe,
        certificate: cert.as_ref().map(|c| c.0.display().to_string()),
        c_star: cert.as_ref().map(|c| c.1),
        geometry: sc.geometry(),
        n_agents: sc.n(),
        dim: sc.dim(),
        outputs: OUTPUTS.iter().map(|s| s.to_string()).collect(),
        exit_code: code,
        created_unix: std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map_or(0, |d| d.as_secs()),
    };
    if let Err(e) = write_run(&dir, &outcome, &manifest) {
        let _ = writeln!(report, "error: writing {}: {e}", dir.display());
        return Outcome::new(5, report);
    }
    let m = &outcome.metrics;
    let _ = writeln!(report, "run directory: {}", dir.display());
    let _ = writeln!(
        report,
        "t = {}, steps = {}, min distance = {:.6} (d_s = {}), formation error = {:.3e}, velocity disagreement = {:.3e}, switches = {}, final W = {:.6e}",
        m.t_final, m.steps, m.min_distance, sc.geometry().d_s, m.formation_error, m.velocity_disagreement, m.edge_switches, m.final_w
    );
    if let Some(f) = &m.failure {
        let who = f.pair.map(|p| format!(" pair ({}, {})", p.0, p.1)).unwrap_or_default();
        let _ = writeln!(report, "violation {:?} at t = {}{who}: {}", f.kind, f.t, f.detail);
    } else {
        report.push_str("all runtime invariants held\n");
    }
    Outcome::new(code, report)
}

pub const OUTPUTS: [&str; 6] = [
    "trajectory.csv",
    "series.csv",
    "topology.jsonl",
    "events.jsonl",
    "metrics.json",
    "manifest.json",
];

fn write_run(dir: &Path, out: &SimOutcome, manifest: &RunManifest) -> std::io::Result<()> {
    fs::create_dir_all(dir)?;
    let log = &out.log;
    let dim = log.dim;
    let mut traj = String::from("t,agent");
    for prefix in ["x", "v", "u"] {
        for k in 0..dim {
            let _ = write!(traj, ",{prefix}{k}");
        }
    }
    traj.push('\n');
    let mut series = String::from("t,w,min_distance,formation_error,velocity_disagreement,edges\n");
    let mut topo = String::new();
    for r in &log.records {
        for i in 0..log.n {
            let _ = write!(traj, "{},{i}", r.t);
            for v in [&r.x, &r.rho, &r.u] {
                for k in 0..dim {
                    let _ = write!(traj, ",{}", v[i * dim + k]);
                }
            }
            traj.push('\n');
        }
        let _ = writeln!(
            series,
            "{},{},{},{},{},{}",
            r.t,
            r.w,
            r.min_distance,
            r.formation_error,
            r.velocity_disagreement,
            r.edges.len()
        );
        let _ = writeln!(topo, "{}", serde_json::json!({ "t": r.t, "edges": r.edges }));
    }
    let mut events = String::new();
    for e in &log.events {
        let _ = writeln!(events, "{}", serde_json::to_string(e).map_err(std::io::Error::other)?);
    }
    fs::write(dir.join("trajectory.csv"), traj)?;
    fs::write(dir.join("series.csv"), series)?;
    fs::write(dir.join("topology.jsonl"), topo)?;
    fs::write(dir.join("events.jsonl"), events)?;
    write_json(&dir.join("metrics.json"), &out.metrics)?;
    write_json(&dir.join("manifest.json"), manifest)
}

fn parse_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>), String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let mut lines = text.lines();
    let head: Vec<String> = lines
        .next()
        .ok_or_else(|| format!("{}: empty file", path.display()))?
        .split(',')
        .map(str::to_string)
        .collect();
    let mut rows = Vec::new();
    for (k, line) in lines.enumerate() {
        let row = line
            .split(',')
            .map(|v| v.parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| format!("{}:{}: {e}", path.display(), k + 2))?;
        if row.len() != head.len() {
            return Err(format!("{}:{}: {} fields, expected {}", path.display(), k + 2, row.len(), head.len()));
        }
        rows.push(row);
    }
    Ok((head, rows))
}

#[derive(Deserialize)]
struct TopoLine {
    t: f64,
    edges: Vec<(usize, usize)>,
}

fn column(head: &[String], name: &str) -> Result<usize, String> {
    head.iter().position(|h| h == name).ok_or_else(|| format!("missing column {name}"))
}

fn plot_files(dir: &Path) -> Result<Vec<(String, String)>, String> {
    let manifest: RunManifest = serde_json::from_str(
        &fs::read_to_string(dir.join("manifest.json")).map_err(|e| format!("manifest.json: {e}"))?,
    )
    .map_err(|e| format!("manifest.json: {e}"))?;
    let (th, traj) = parse_csv(&dir.join("trajectory.csv"))?;
    let (sh, series) = parse_csv(&dir.join("series.csv"))?;
    let topo_text = fs::read_to_string(dir.join("topology.jsonl")).map_err(|e| format!("topology.jsonl: {e}"))?;
    let topo = topo_text
        .lines()
        .map(serde_json::from_str::<TopoLine>)
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| format!("topology.jsonl: {e}"))?;
    let n = manifest.n_agents;
    let (tc, ac, xc) = (column(&th, "t")?, column(&th, "agent")?, column(&th, "x0")?);
    let yc = if manifest.dim > 1 { Some(column(&th, "x1")?) } else { None };
    let mut paths = vec![Vec::new(); n];
    let mut frames: Vec<(f64, Vec<(f64, f64)>)> = Vec::new();
    for row in &traj {
        let a = row[ac] as usize;
        if a >= n {
            return Err(format!("trajectory.csv: agent {a} out of range"));
        }
        let p = (row[xc], yc.map_or(0.0, |c| row[c]));
        paths[a].push(p);
        if frames.last().is_none_or(|f| f.0 != row[tc]) {
            frames.push((row[tc], vec![(f64::NAN, f64::NAN); n]));
        }
        frames.last_mut().expect("frame").1[a] = p;
    }
    let picks: Vec<usize> = if frames.is_empty() {
        Vec::new()
    } else {
        let mut v = vec![0, frames.len() / 2, frames.len() - 1];
        v.dedup();
        v
    };
    let snapshots: Vec<_> = picks
        .iter()
        .map(|&k| {
            let edges = topo.iter().find(|l| l.t == frames[k].0).map(|l| l.edges.clone()).unwrap_or_default();
            (frames[k].1.clone(), edges)
        })
        .collect();
    let col = |name: &str| -> Result<Vec<(f64, f64)>, String> {
        let (t, c) = (column(&sh, "t")?, column(&sh, name)?);
        Ok(series.iter().map(|r| (r[t], r[c])).collect())
    };
    let one = |label: &str, name: &str| -> Result<Vec<Series>, String> {
        Ok(vec![Series {
            label: label.into(),
            points: col(name)?,
        }])
    };
    let title = &manifest.scenario_name;
    Ok(vec![
        (
            "trajectories.svg".into(),
            trajectory_chart(&format!("{title}: agent paths"), &paths, &snapshots),
        ),
        (
            "min_distance.svg".into(),
            line_chart(
                &format!("{title}: minimal distance between agents"),
                "t",
                "min distance",
                &one("min distance", "min_distance")?,
                &[("d_s".into(), manifest.geometry.d_s)],
            ),
        ),
        (
            "velocity_diff.svg".into(),
            line_chart(
                &format!("{title}: velocity differences"),
                "t",
                "max |v_i - v_j|",
                &one("velocity disagreement", "velocity_disagreement")?,
                &[],
            ),
        ),
        (
            "energy.svg".into(),
            line_chart(&format!("{title}: energy"), "t", "W", &one("W", "w")?, &[]),
        ),
    ])
}

pub fn cmd_plot(dir: &Path) -> Outcome {
    match plot_files(dir) {
        Ok(files) => {
            let mut report = String::new();
            for (name, svg) in files {
                let p = dir.join(&name);
                if let Err(e) = fs::File::create(&p).and_then(|mut f| f.write_all(svg.as_bytes())) {
                    return Outcome::new(2, format!("error: {}: {e}\n", p.display()));
                }
                let _ = writeln!(report, "wrote {}", p.display());
            }
            Outcome::new(0, report)
        }
        Err(e) => Outcome::new(2, format!("error: {e}\n")),
    }
}

/// Topology at `t0` for `seed`, for callers that want to inspect it.
pub fn initial_topology(sc: &Scenario, seed: u64) -> TopologyState {
    let (x0, _) = sc.initial_state(seed);
    TopologyState::initial(&x0, sc.dim(), &sc.formation, &sc.geometry())
}
