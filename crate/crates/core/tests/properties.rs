use std::collections::{BTreeMap, BTreeSet};

use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use robform::barrier::{grad_psi_c, grad_psi_e, psi_c, psi_e, BarrierParams};
use robform::linalg::sorted_eigenvalues;
use robform::netgraph::{laplacian, reduced_basis, update_edges, AgentGeometry, TopologyState};
use robform::polyalg::{monomials_up_to, MatrixPolynomial, Polynomial};
use robform::sdp::planted::random_planted_instance;
use robform::sdp::{solve, Lmi, SdpProblem};
use robform::simulate::{all_neighbor_sets, control_all, control_input, integrate, Integrator, SimProblem, SimState};
use robform::smr::{expand_gram, gram_canonical, gram_expand, gram_pad, monomial_count};

fn random_poly(rng: &mut ChaCha8Rng, r: usize, deg: u32) -> Polynomial {
    let mut p = Polynomial::zero(r);
    for m in monomials_up_to(r, deg) {
        if rng.random_bool(0.6) {
            p.add_term(m, rng.random_range(-2.0..2.0));
        }
    }
    p
}

fn random_sym_poly(rng: &mut ChaCha8Rng, r: usize, deg: u32, s: usize) -> MatrixPolynomial {
    let mut m = MatrixPolynomial::zeros(s, s, r);
    for i in 0..s {
        for j in i..s {
            m.set_symmetric(i, j, random_poly(rng, r, deg));
        }
    }
    m
}

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

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn product_evaluates_to_product_of_values(seed in any::<u64>(), r in 1usize..4, t in prop::collection::vec(-1.5f64..1.5, 3)) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = random_poly(&mut rng, r, 3);
        let q = random_poly(&mut rng, r, 2);
        let th = &t[..r];
        let pq = p.checked_mul(&q).unwrap();
        let lhs = pq.eval(th).unwrap();
        let rhs = p.eval(th).unwrap() * q.eval(th).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + rhs.abs()));
        prop_assert_eq!(p.checked_add(&q).unwrap(), q.checked_add(&p).unwrap());
    }

    #[test]
    fn gram_round_trip_is_independent_of_delta(seed in any::<u64>(), r in 1usize..3, deg in 0u32..5, s in 1usize..3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random_sym_poly(&mut rng, r, deg, s);
        let d = deg.div_ceil(2);
        let g = gram_canonical(&m, d).unwrap();
        let delta: Vec<f64> = (0..g.null_basis.len()).map(|_| rng.random_range(-3.0..3.0)).collect();
        prop_assert!(gram_expand(&g, &delta).unwrap().max_abs_diff(&m) < 1e-10);
    }

    #[test]
    fn padding_preserves_expansion(seed in any::<u64>(), r in 1usize..3, d in 0u32..3, extra in 0u32..2, s in 1usize..3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = monomial_count(r, d) * s;
        let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        let a = (&a + a.transpose()) * 0.5;
        let padded = gram_pad(&a, r, d, d + extra, s).unwrap();
        let lhs = expand_gram(&padded, r, d + extra, s).unwrap();
        let rhs = expand_gram(&a, r, d, s).unwrap();
        prop_assert!(lhs.max_abs_diff(&rhs) < 1e-12);
    }

    #[test]
    fn reduced_laplacian_keeps_nonzero_spectrum(seed in any::<u64>(), n in 2usize..8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut g = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i + 1..n {
                if rng.random_bool(0.5) {
                    let w = rng.random_range(0.1..2.0);
                    g[(i, j)] = w;
                    g[(j, i)] = w;
                }
            }
        }
        let l = laplacian(&g).unwrap();
        for i in 0..n {
            prop_assert!(l.row(i).sum().abs() < 1e-12);
        }
        let m = reduced_basis(n);
        let full = sorted_eigenvalues(&l);
        let reduced = sorted_eigenvalues(&(m.transpose() * &l * &m));
        prop_assert!(full[0].abs() < 1e-10);
        for (a, b) in full[1..].iter().zip(&reduced) {
            prop_assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn formation_edges_survive_switching(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = 5;
        let x: Vec<f64> = (0..2 * n).map(|_| rng.random_range(-6.0..6.0)).collect();
        let formation: BTreeSet<_> = [(0, 1), (1, 2)].into_iter().collect();
        let mut topo = TopologyState::initial(&x, 2, &formation, &geom());
        topo.edges.extend(formation.iter().copied());
        let far: Vec<f64> = x.iter().map(|v| v * 10.0).collect();
        update_edges(&far, 2, &mut topo, &geom(), 1.0);
        prop_assert!(formation.is_subset(&topo.edges));
    }

    #[test]
    fn barrier_values_are_nonnegative_and_capped(q in 0.0f64..1.0, r_hat in 0.5f64..5.0, mu in 0.5f64..1e3) {
        let v = psi_e(q * r_hat, r_hat, mu).unwrap();
        prop_assert!(v >= 0.0 && v <= mu * (1.0 + 1e-12));
        let tau = 2.5;
        let p = 1.875 + q * (tau - 1.875);
        let c = psi_c(p, tau, 1.875, mu).unwrap();
        prop_assert!(c >= 0.0 && c <= mu * (1.0 + 1e-12));
    }

    #[test]
    fn barrier_gradients_match_differences(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let y = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
        let r_hat = 3.0;
        let mu = rng.random_range(1.0..100.0);
        let nrm = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
        let g = grad_psi_e(&y, r_hat, mu).unwrap();
        let tau = [2.7, 0.3];
        let p0 = nrm(&[y[0] + tau[0], y[1] + tau[1]]);
        let gc = if p0 > 1.9 { grad_psi_c(&y, &tau, 1.875, mu).unwrap() } else { vec![0.0; 2] };
        let h = 1e-6;
        for k in 0..2 {
            let (mut a, mut b) = (y, y);
            a[k] += h;
            b[k] -= h;
            let fd = (psi_e(nrm(&a), r_hat, mu).unwrap() - psi_e(nrm(&b), r_hat, mu).unwrap()) / (2.0 * h);
            prop_assert!((fd - g[k]).abs() <= 1e-5 * (1.0 + g[k].abs()));
            let pa = nrm(&[a[0] + tau[0], a[1] + tau[1]]);
            let pb = nrm(&[b[0] + tau[0], b[1] + tau[1]]);
            if p0 > 1.9 && pa.min(pb) > 1.9 {
                let fd = (psi_c(pa, nrm(&tau), 1.875, mu).unwrap() - psi_c(pb, nrm(&tau), 1.875, mu).unwrap()) / (2.0 * h);
                prop_assert!((fd - gc[k]).abs() <= 1e-5 * (1.0 + gc[k].abs()));
            }
        }
    }
}

fn ring_problem(n: usize, radius: f64) -> SimProblem {
    let tau: Vec<f64> = (0..n)
        .flat_map(|i| {
            let a = std::f64::consts::TAU * i as f64 / n as f64;
            [radius * a.cos(), radius * a.sin()]
        })
        .collect();
    let formation: BTreeSet<_> = (0..n).map(|i| robform::netgraph::pair(i, (i + 1) % n)).collect();
    let weights: BTreeMap<_, _> = formation.iter().map(|&p| (p, 1.0 + 0.1 * p.0 as f64)).collect();
    SimProblem {
        dim: 2,
        tau,
        geom: AgentGeometry { r_s: 5.0, ..geom() },
        params: BarrierParams {
            mu1: 100.0,
            mu2: 100.0,
            eps_hat: 0.05,
        },
        formation_edges: formation,
        weights,
        theta_star: vec![],
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn controls_sum_to_zero_and_are_local(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let prob = ring_problem(12, 6.0);
        let x: Vec<f64> = prob.tau.iter().map(|t| t + rng.random_range(-0.3..0.3)).collect();
        let rho: Vec<f64> = (0..24).map(|_| rng.random_range(-1.0..1.0)).collect();
        let state = SimState::new(x.clone(), rho.clone(), &prob);
        let sets = all_neighbor_sets(&x, &prob, &state.topo);
        let u = control_all(&x, &rho, &prob, &sets).unwrap();
        for k in 0..2 {
            let total: f64 = (0..12).map(|i| u[2 * i + k]).sum();
            prop_assert!(total.abs() < 1e-10);
        }
        let ui = control_input(0, &x, &rho, &prob, &sets[0]).unwrap();
        let (mut x2, mut rho2) = (x.clone(), rho.clone());
        for j in 4..8 {
            x2[2 * j] += rng.random_range(-0.2..0.2);
            rho2[2 * j + 1] += rng.random_range(-5.0..5.0);
        }
        prop_assert_eq!(ui, control_input(0, &x2, &rho2, &prob, &sets[0]).unwrap());
    }

    #[test]
    fn energy_does_not_grow_over_a_step(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let prob = ring_problem(8, 4.0);
        let x: Vec<f64> = prob.tau.iter().map(|t| t + rng.random_range(-0.2..0.2)).collect();
        let rho: Vec<f64> = (0..16).map(|_| rng.random_range(-0.5..0.5)).collect();
        let mut state = SimState::new(x, rho, &prob);
        let before = robform::simulate::energy(&state, &prob).unwrap();
        let sets = all_neighbor_sets(&state.x, &prob, &state.topo);
        let (x1, r1) = integrate(&state.x, &state.rho, 1e-3, Integrator::Rk4, &prob, &sets).unwrap();
        state.x = x1;
        state.rho = r1;
        if all_neighbor_sets(&state.x, &prob, &state.topo) == sets {
            let after = robform::simulate::energy(&state, &prob).unwrap();
            prop_assert!(after - before <= 1e-4 * 1e-3, "{} -> {}", before, after);
        }
    }
}

#[test]
fn euler_drift_halves_with_dt() {
    let prob = ring_problem(6, 3.0);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let x: Vec<f64> = prob.tau.iter().map(|t| t + rng.random_range(-0.2..0.2)).collect();
    let rho: Vec<f64> = (0..12).map(|_| rng.random_range(-0.5..0.5)).collect();
    let state = SimState::new(x, rho, &prob);
    let sets = all_neighbor_sets(&state.x, &prob, &state.topo);
    let exact = |dt: f64| {
        let steps = (0.1 / dt).round() as usize;
        let (mut x, mut r) = (state.x.clone(), state.rho.clone());
        for _ in 0..steps {
            (x, r) = integrate(&x, &r, dt, Integrator::Rk4, &prob, &sets).unwrap();
        }
        x
    };
    let euler = |dt: f64| {
        let steps = (0.1 / dt).round() as usize;
        let (mut x, mut r) = (state.x.clone(), state.rho.clone());
        for _ in 0..steps {
            (x, r) = integrate(&x, &r, dt, Integrator::Euler, &prob, &sets).unwrap();
        }
        x
    };
    let reference = exact(1e-4);
    let err = |v: Vec<f64>| v.iter().zip(&reference).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let (e1, e2) = (err(euler(2e-3)), err(euler(1e-3)));
    let ratio = e1 / e2;
    assert!((1.6..2.4).contains(&ratio), "error ratio {ratio}");
}

#[test]
fn sdp_is_deterministic_and_scale_equivariant() {
    let inst = random_planted_instance(17);
    let a = solve(&inst.problem, 1e-9, 200).unwrap();
    let b = solve(&inst.problem, 1e-9, 200).unwrap();
    assert_eq!(a.status, b.status);
    assert_eq!(a.objective_value.to_bits(), b.objective_value.to_bits());

    let mut scaled = SdpProblem::new();
    let ids: Vec<_> = (0..inst.problem.nvars()).map(|k| scaled.add_free(&format!("y{k}"))).collect();
    scaled.set_objective(inst.problem.objective().to_vec());
    for l in inst.problem.lmis() {
        scaled
            .add_lmi(Lmi {
                name: l.name.clone(),
                size: l.size,
                constant: l.constant.scale(3.5),
                terms: l.terms.iter().map(|(v, m)| (ids[*v], m.scale(3.5))).collect(),
            })
            .unwrap();
    }
    let c = solve(&scaled, 1e-9, 200).unwrap();
    assert!((c.objective_value - a.objective_value).abs() < 1e-6);
    for &v in &inst.vars {
        assert!((c.value(v) - a.value(v)).abs() < 1e-6);
    }
}

#[test]
fn tighter_tolerance_never_widens_the_gap() {
    for seed in 0..5 {
        let inst = random_planted_instance(seed);
        let loose = solve(&inst.problem, 1e-6, 200).unwrap();
        let tight = solve(&inst.problem, 1e-9, 200).unwrap();
        assert!(tight.duality_gap <= loose.duality_gap, "seed {seed}");
    }
}
