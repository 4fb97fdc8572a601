//! End-to-end acceptance suite. Prints one `criterion N: PASS|FAIL` line per criterion.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use robform::barrier::{dpsi_c_dp, grad_psi_c, grad_psi_e, psi_c, psi_e};
use robform::certifier::{certify, default_plan, sample_lambda2, CertifyConfig, CertifyError};
use robform::linalg::{sorted_eigenvalues, SymSparse};
use robform::netgraph::{laplacian, Pair, UncertainAdjacency};
use robform::polyalg::{monomials_up_to, MatrixPolynomial, Polynomial};
use robform::sdp::planted::random_planted_instance;
use robform::sdp::{solve, Lmi, SdpProblem, SdpStatus};
use robform::smr::{expand_gram, gram_canonical, gram_expand, gram_null_basis};
use robform_cli::{cmd_certify, cmd_simulate, CertifyOpts, SimulateOpts};

static REPORTED: AtomicBool = AtomicBool::new(false);

fn verdict(n: u32, name: &str, pass: bool, elapsed: Duration, limit: Duration, detail: &str) {
    REPORTED.store(true, Ordering::SeqCst);
    let ok = pass && elapsed <= limit;
    println!(
        "criterion {n}: {} - {name} ({detail}; {:.2}s of {:.0}s)",
        if ok { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64(),
        limit.as_secs_f64()
    );
    assert!(pass, "criterion {n} failed: {detail}");
    assert!(elapsed <= limit, "criterion {n} exceeded its time budget");
}

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

fn metrics(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("metrics.json")).unwrap()).unwrap()
}

fn poly1(terms: &[(u32, f64)]) -> Polynomial {
    Polynomial::from_terms(1, terms.iter().map(|&(e, c)| (vec![e], c))).unwrap()
}

fn criterion_1_smr_example_fidelity() {
    let start = Instant::now();
    let f1 = poly1(&[(4, 7.0), (3, 2.0), (2, 4.0), (1, 6.0), (0, 9.0)]);
    let f_bar = DMatrix::from_row_slice(3, 3, &[7.0, 1.0, 0.0, 1.0, 4.0, 3.0, 0.0, 3.0, 9.0]);
    let c1 = |d: f64| DMatrix::from_row_slice(3, 3, &[0.0, 0.0, -d, 0.0, 2.0 * d, 0.0, -d, 0.0, 0.0]);
    let mut worst: f64 = 0.0;
    for delta in [-1.0, 0.0, 2.5] {
        let m = expand_gram(&(&f_bar + c1(delta)), 1, 2, 1).unwrap();
        worst = worst.max(m.get(0, 0).max_abs_diff(&f1));
    }
    let form = gram_canonical(&MatrixPolynomial::from_entries(1, 1, 1, vec![f1]).unwrap(), 2).unwrap();
    let basis = gram_null_basis(1, 2, 1);
    let b = basis[0].to_dense();
    let diff = &f_bar - &form.base;
    let k = diff.dot(&b) / b.dot(&b);
    let off_family = (&diff - &b * k).abs().max();
    let pattern = c1(1.0);
    let kp = pattern.dot(&b) / b.dot(&b);
    let off_pattern = (&pattern - &b * kp).abs().max();
    let pass = worst < 1e-12 && basis.len() == 1 && off_family < 1e-12 && off_pattern < 1e-12;
    verdict(
        1,
        "SMR example fidelity",
        pass,
        start.elapsed(),
        Duration::from_secs(1),
        &format!("coefficient error {worst:.1e}, family residual {off_family:.1e}, basis size {}", basis.len()),
    );
}

fn random_matrix_poly(rng: &mut ChaCha8Rng) -> MatrixPolynomial {
    let r = rng.random_range(1..=3);
    let deg = rng.random_range(0..=6);
    let s = rng.random_range(1..=4);
    let monos = monomials_up_to(r, deg);
    let mut entries = vec![Polynomial::zero(r); s * s];
    for i in 0..s {
        for j in i..s {
            let mut p = Polynomial::zero(r);
            for m in &monos {
                if rng.random_bool(0.5) {
                    p.add_term(m.clone(), rng.random_range(-1.0..1.0));
                }
            }
            entries[i * s + j] = p.clone();
            entries[j * s + i] = p;
        }
    }
    MatrixPolynomial::from_entries(s, s, r, entries).unwrap()
}

fn criterion_2_gram_round_trip() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut round, mut null): (f64, f64) = (0.0, 0.0);
    for _ in 0..500 {
        let m = random_matrix_poly(&mut rng);
        let d = m.degree().div_ceil(2);
        let g = gram_canonical(&m, d).unwrap();
        let back = gram_expand(&g, &vec![0.0; g.null_basis.len()]).unwrap();
        for i in 0..m.rows() {
            for j in 0..m.cols() {
                round = round.max(back.get(i, j).max_abs_diff(m.get(i, j)));
            }
        }
        for b in &g.null_basis {
            let z = expand_gram(&b.to_dense(), m.nvars(), d, m.rows()).unwrap();
            for i in 0..m.rows() {
                for j in 0..m.cols() {
                    null = null.max(z.get(i, j).max_abs_coeff());
                }
            }
        }
    }
    verdict(
        2,
        "Gram round trip",
        round < 1e-10 && null < 1e-12,
        start.elapsed(),
        Duration::from_secs(30),
        &format!("round-trip error {round:.1e}, null expansion {null:.1e}"),
    );
}

/// Random graph on `n` nodes; connected ones get a random spanning tree plus extras,
/// disconnected ones only have edges inside two fixed groups.
fn random_graph(rng: &mut ChaCha8Rng, connected: bool) -> (usize, Vec<(Pair, f64)>) {
    let n = rng.random_range(2..=8);
    let mut edges = BTreeSet::new();
    if connected {
        for v in 1..n {
            let u = rng.random_range(0..v);
            edges.insert((u, v));
        }
        for i in 0..n {
            for j in i + 1..n {
                if rng.random_bool(0.2) {
                    edges.insert((i, j));
                }
            }
        }
    } else {
        let cut = rng.random_range(1..n);
        for i in 0..n {
            for j in i + 1..n {
                if (i < cut) == (j < cut) && rng.random_bool(0.6) {
                    edges.insert((i, j));
                }
            }
        }
    }
    (n, edges.into_iter().map(|e| (e, rng.random_range(0.1..=2.0))).collect())
}

fn criterion_3_certifier_matches_eigen_oracle() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut disagreements = Vec::new();
    let mut disconnected = 0;
    for k in 0..200 {
        let (n, edges) = random_graph(&mut rng, k % 2 == 0);
        let mut a = DMatrix::zeros(n, n);
        for &((i, j), w) in &edges {
            a[(i, j)] = w;
            a[(j, i)] = w;
        }
        let lambda2 = sorted_eigenvalues(&laplacian(&a).unwrap())[1];
        disconnected += usize::from(lambda2 <= 1e-3);
        let pairs: Vec<_> = edges.iter().map(|&(p, w)| (p, Polynomial::constant(0, w))).collect();
        let g = UncertainAdjacency::from_pairs(n, 0, &pairs, vec![]).unwrap();
        let plan = default_plan(&g, 0).unwrap();
        let positive = match certify(&g, &plan, &CertifyConfig::default()) {
            Ok(c) => c.c_star > 1e-6,
            Err(CertifyError::Inconclusive { .. }) => false,
            Err(e) => panic!("graph {k}: {e}"),
        };
        if positive != (lambda2 > 1e-3) {
            disagreements.push((k, lambda2));
        }
    }
    verdict(
        3,
        "certifier vs eigendecomposition",
        disagreements.is_empty(),
        start.elapsed(),
        Duration::from_secs(120),
        &format!("200 graphs, {disconnected} disconnected, disagreements {disagreements:?}"),
    );
}

fn lin2(c: f64, a: f64, b: f64) -> Polynomial {
    Polynomial::from_terms(2, [(vec![0, 0], c), (vec![1, 0], a), (vec![0, 1], b)]).unwrap()
}

fn unit_disk() -> Polynomial {
    Polynomial::from_terms(2, [(vec![0, 0], 1.0), (vec![2, 0], -1.0), (vec![0, 2], -1.0)]).unwrap()
}

/// Parametric graph over the unit disk. Fragile graphs contain a bridge whose
/// weight vanishes or turns negative somewhere in the disk.
fn parametric_graph(rng: &mut ChaCha8Rng, fragile: bool) -> UncertainAdjacency {
    let n = rng.random_range(3..=6);
    let mut edges: Vec<(Pair, Polynomial)> = Vec::new();
    let bridge = rng.random_range(1..n);
    for v in 1..n {
        let u = rng.random_range(0..v);
        let w = if fragile && v == bridge {
            match rng.random_range(0..3) {
                0 => lin2(0.5, 0.5, 0.0),
                1 => lin2(0.3, 0.0, 1.0),
                _ => Polynomial::from_terms(2, [(vec![2, 0], 1.0), (vec![0, 2], 1.0)]).unwrap(),
            }
        } else {
            let c = rng.random_range(0.6..1.5);
            let lim = 0.4 * c;
            lin2(c, rng.random_range(-lim..lim), rng.random_range(-lim..lim))
        };
        edges.push(((u, v), w));
    }
    if !fragile {
        for i in 0..n {
            for j in i + 1..n {
                if rng.random_bool(0.25) && !edges.iter().any(|(p, _)| *p == (i, j)) {
                    edges.push(((i, j), lin2(rng.random_range(0.2..1.0), 0.1, -0.1)));
                }
            }
        }
    }
    UncertainAdjacency::from_pairs(n, 2, &edges, vec![unit_disk()]).unwrap()
}

fn criterion_4_robust_soundness() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let bbox = [(-1.0, 1.0), (-1.0, 1.0)];
    let (mut positive, mut unsound, mut fragile_certified, mut fragile_total) = (0, 0, 0, 0);
    let mut worst_sampled = f64::INFINITY;
    for k in 0..20 {
        let fragile = k % 3 == 0;
        let g = parametric_graph(&mut rng, fragile);
        fragile_total += usize::from(fragile);
        let plan = default_plan(&g, 0).unwrap();
        let certified = match certify(&g, &plan, &CertifyConfig::default()) {
            Ok(c) => c.c_star > 1e-6,
            Err(CertifyError::Inconclusive { .. }) | Err(CertifyError::Solver { .. }) => false,
            Err(e) => panic!("scenario {k}: {e}"),
        };
        if certified {
            positive += 1;
            let (l2, _) = sample_lambda2(&g, &bbox, 10_000, k).unwrap();
            worst_sampled = worst_sampled.min(l2);
            unsound += usize::from(!(l2 > 0.0));
            fragile_certified += usize::from(fragile);
        }
    }
    let pass = unsound == 0 && fragile_total >= 3 && fragile_certified == 0 && positive > 0;
    verdict(
        4,
        "robust soundness",
        pass,
        start.elapsed(),
        Duration::from_secs(300),
        &format!(
            "{positive} positive certificates, min sampled lambda2 {worst_sampled:.3e}, {fragile_total} fragile graphs, {fragile_certified} of them certified"
        ),
    );
}

fn rel(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let den: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-8);
    num / den
}

fn criterion_5_barrier_caps_and_gradients() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut cap_err: f64 = 0.0;
    for _ in 0..200 {
        let mu = 10f64.powf(rng.random_range(-1.0..4.0));
        let r_hat = rng.random_range(0.5..6.0);
        cap_err = cap_err.max((psi_e(r_hat, r_hat, mu).unwrap() - mu).abs() / mu.max(1.0));
        let d_s = rng.random_range(1.0..2.5);
        let tau = d_s + rng.random_range(0.1..4.0);
        cap_err = cap_err.max((psi_c(d_s, tau, d_s, mu).unwrap() - mu).abs() / mu.max(1.0));
    }
    let mut grad_err: f64 = 0.0;
    for k in 0..200 {
        let dim = rng.random_range(1..=3);
        let mu = 10f64.powf(rng.random_range(0.0..3.0));
        let h = 1e-5;
        let fd = |f: &dyn Fn(&[f64]) -> f64, y: &[f64]| -> Vec<f64> {
            (0..y.len())
                .map(|i| {
                    let (mut a, mut b) = (y.to_vec(), y.to_vec());
                    a[i] += h;
                    b[i] -= h;
                    (f(&a) - f(&b)) / (2.0 * h)
                })
                .collect()
        };
        let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if k % 2 == 0 {
            let r_hat = rng.random_range(1.0..5.0);
            let y: Vec<f64> = (0..dim).map(|_| rng.random_range(-0.5..0.5) * r_hat / (dim as f64).sqrt()).collect();
            let f = |v: &[f64]| psi_e(norm(v), r_hat, mu).unwrap();
            grad_err = grad_err.max(rel(&grad_psi_e(&y, r_hat, mu).unwrap(), &fd(&f, &y)));
        } else {
            let d_s = 1.875;
            let tau: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
            let t = norm(&tau);
            let tau: Vec<f64> = tau.iter().map(|v| v / t * rng.random_range(2.0..3.0)).collect();
            let t = norm(&tau);
            let mut y: Vec<f64>;
            loop {
                y = (0..dim).map(|_| rng.random_range(-0.6..0.6)).collect();
                let p = norm(&y.iter().zip(&tau).map(|(a, b)| a + b).collect::<Vec<_>>());
                if p > d_s + 0.05 {
                    break;
                }
            }
            let f = |v: &[f64]| {
                let p = norm(&v.iter().zip(&tau).map(|(a, b)| a + b).collect::<Vec<_>>());
                psi_c(p, t, d_s, mu).unwrap()
            };
            grad_err = grad_err.max(rel(&grad_psi_c(&y, &tau, d_s, mu).unwrap(), &fd(&f, &y)));
            let p = norm(&y.iter().zip(&tau).map(|(a, b)| a + b).collect::<Vec<_>>());
            let g1 = dpsi_c_dp(p, t, d_s, mu).unwrap();
            let n1 = (psi_c(p + h, t, d_s, mu).unwrap() - psi_c(p - h, t, d_s, mu).unwrap()) / (2.0 * h);
            grad_err = grad_err.max((g1 - n1).abs() / g1.abs().max(1e-8));
        }
    }
    verdict(
        5,
        "barrier caps and gradients",
        cap_err < 1e-12 && grad_err <= 1e-6,
        start.elapsed(),
        Duration::from_secs(10),
        &format!("cap error {cap_err:.1e}, worst gradient relative error {grad_err:.1e}"),
    );
}

fn criterion_6_six_agent_closed_loop() {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let path = scenario("prism6.json");
    let cert = cmd_certify(
        &path,
        &CertifyOpts {
            out: dir.path().to_path_buf(),
            ..CertifyOpts::default()
        },
    );
    assert_eq!(cert.code, 0, "{}", cert.report);
    let mut failures = Vec::new();
    let (mut worst_fe, mut worst_vd, mut min_d, mut drift): (f64, f64, f64, f64) = (0.0, 0.0, f64::INFINITY, f64::NEG_INFINITY);
    for seed in 1..=10 {
        let out = cmd_simulate(
            &path,
            &SimulateOpts {
                seed: Some(seed),
                out: dir.path().to_path_buf(),
                ..SimulateOpts::default()
            },
        );
        let m = metrics(&dir.path().join(format!("prism6-seed{seed}")));
        let fe = m["formation_error"].as_f64().unwrap();
        let vd = m["velocity_disagreement"].as_f64().unwrap();
        worst_fe = worst_fe.max(fe);
        worst_vd = worst_vd.max(vd);
        min_d = min_d.min(m["min_distance"].as_f64().unwrap());
        drift = drift.max(m["max_flow_drift_rate"].as_f64().unwrap());
        if out.code != 0 || fe + vd > 1e-2 || m["t_final"].as_f64() != Some(40.0) {
            failures.push((seed, out.code, out.report));
        }
    }
    verdict(
        6,
        "six-agent closed loop",
        failures.is_empty() && min_d > 1.875,
        start.elapsed(),
        Duration::from_secs(120),
        &format!(
            "10 seeds, min distance {min_d:.4}, formation error {worst_fe:.1e}, velocity disagreement {worst_vd:.1e}, max dW/dt drift {drift:.1e}, failures {failures:?}"
        ),
    );
}

fn criterion_7_fifty_agent_circle() {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let out = cmd_simulate(
        &scenario("circle50.json"),
        &SimulateOpts {
            out: dir.path().to_path_buf(),
            ..SimulateOpts::default()
        },
    );
    let m = metrics(&dir.path().join("circle50-seed1"));
    let fe = m["formation_error"].as_f64().unwrap();
    let vd = m["velocity_disagreement"].as_f64().unwrap();
    let min_d = m["min_distance"].as_f64().unwrap();
    verdict(
        7,
        "fifty-agent circle",
        out.code == 0 && fe + vd <= 1e-2 && min_d > 1.875,
        start.elapsed(),
        Duration::from_secs(600),
        &format!("exit {}, min distance {min_d:.4}, formation error {fe:.1e}, velocity disagreement {vd:.1e}", out.code),
    );
}

fn criterion_8_monitor_catches_detuned_barriers() {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let path = scenario("adversarial_pair.json");
    let out = cmd_simulate(
        &path,
        &SimulateOpts {
            unsafe_mode: true,
            out: dir.path().to_path_buf(),
            ..SimulateOpts::default()
        },
    );
    let m = metrics(&dir.path().join("adversarial_pair-seed1"));
    let kind = m["failure"]["kind"].as_str().unwrap_or("none").to_string();
    let caught = out.code == 4 && (kind == "formation_break" || kind == "collision");
    verdict(
        8,
        "monitor catches detuned barriers",
        caught,
        start.elapsed(),
        Duration::from_secs(60),
        &format!("exit {}, failure {kind} at t = {}", out.code, m["failure"]["t"]),
    );
}

fn criterion_9_sdp_solver() {
    let start = Instant::now();
    let mut worst_obj: f64 = 0.0;
    let mut worst_gap: f64 = 0.0;
    let mut bad = Vec::new();
    for seed in 0..100 {
        let inst = random_planted_instance(seed);
        let s = solve(&inst.problem, 1e-9, 200).unwrap();
        worst_obj = worst_obj.max((s.objective_value - inst.optimum).abs());
        worst_gap = worst_gap.max(s.duality_gap);
        if s.status != SdpStatus::Optimal {
            bad.push(seed);
        }
    }
    let diag = |v: &[f64]| SymSparse::from_triplets(v.len(), v.iter().enumerate().map(|(i, &x)| (i, i, x)));
    let mut p = SdpProblem::new();
    let c = p.add_free("c");
    p.set_objective(vec![(c, 1.0)]);
    p.add_lmi(Lmi {
        name: "eig".into(),
        size: 2,
        constant: diag(&[2.0, 5.0]),
        terms: vec![(c, diag(&[-1.0, -1.0]))],
    })
    .unwrap();
    let s1 = solve(&p, 1e-10, 200).unwrap();
    let mut q = SdpProblem::new();
    let c2 = q.add_free("c");
    let b = q.add_psd_block("P", 1);
    let x = q.block_var(b, 0, 0);
    q.add_trace_equality(b, 1.0);
    q.set_objective(vec![(c2, 1.0)]);
    q.add_lmi(Lmi {
        name: "H".into(),
        size: 1,
        constant: SymSparse::zeros(1),
        terms: vec![(x, diag(&[2.0])), (c2, diag(&[-1.0]))],
    })
    .unwrap();
    let s2 = solve(&q, 1e-10, 200).unwrap();
    let analytic = (s1.value(c) - 2.0).abs().max((s2.value(c2) - 2.0).abs());
    let pass = bad.is_empty()
        && worst_obj <= 1e-7
        && worst_gap <= 1e-8
        && s1.status == SdpStatus::Optimal
        && s2.status == SdpStatus::Optimal
        && analytic <= 1e-9;
    verdict(
        9,
        "SDP solver",
        pass,
        start.elapsed(),
        Duration::from_secs(60),
        &format!(
            "100 planted instances: objective error {worst_obj:.1e}, duality gap {worst_gap:.1e}, non-optimal {bad:?}; analytic error {analytic:.1e}"
        ),
    );
}

fn main() {
    let criteria: [(u32, fn()); 9] = [
        (1, criterion_1_smr_example_fidelity),
        (2, criterion_2_gram_round_trip),
        (3, criterion_3_certifier_matches_eigen_oracle),
        (4, criterion_4_robust_soundness),
        (5, criterion_5_barrier_caps_and_gradients),
        (6, criterion_6_six_agent_closed_loop),
        (7, criterion_7_fifty_agent_circle),
        (8, criterion_8_monitor_catches_detuned_barriers),
        (9, criterion_9_sdp_solver),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = Vec::new();
    for (n, f) in criteria {
        if !filter.is_empty() && !filter.iter().any(|p| format!("criterion_{n}").contains(p.as_str())) {
            continue;
        }
        REPORTED.store(false, Ordering::SeqCst);
        if std::panic::catch_unwind(f).is_err() {
            if !REPORTED.load(Ordering::SeqCst) {
                println!("criterion {n}: FAIL - aborted before a verdict");
            }
            failed.push(n);
        }
    }
    if !failed.is_empty() {
        println!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
