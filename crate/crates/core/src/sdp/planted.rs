//! Random SDP instances with a known optimum.
//!
//! A strictly complementary pair `X*, Z*` is built from a shared random
//! orthogonal basis, multipliers `y*` are drawn at random, and the data is
//! chosen so that `(X*, y*, Z*)` satisfies the optimality conditions:
//! `C = Z* + sum y*_k A_k`, `b_k = <A_k, X*>`. The optimum is `b^T y*`.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Lmi, SdpProblem, VarId};
use crate::linalg::SymSparse;

#[derive(Debug, Clone)]
pub struct PlantedInstance {
    pub problem: SdpProblem,
    pub vars: Vec<VarId>,
    pub optimum: f64,
    pub y_star: Vec<f64>,
}

fn random_sym(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    (&a + a.transpose()) * 0.5
}

fn random_orthogonal(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    a.qr().q()
}

/// Instance with `num_vars` free variables and LMI blocks of the given sizes.
pub fn planted_instance(seed: u64, num_vars: usize, block_sizes: &[usize]) -> PlantedInstance {
    assert!(num_vars > 0 && !block_sizes.is_empty());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let y_star: Vec<f64> = (0..num_vars).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mut problem = SdpProblem::new();
    let vars: Vec<VarId> = (0..num_vars).map(|k| problem.add_free(format!("y{k}"))).collect();
    let mut b = DVector::<f64>::zeros(num_vars);
    for (bi, &n) in block_sizes.iter().enumerate() {
        let q = random_orthogonal(&mut rng, n);
        let rank = if n == 1 { rng.random_range(0..=1) } else { rng.random_range(1..n) };
        let lam = DVector::from_fn(n, |i, _| {
            let v = rng.random_range(0.5..2.0);
            if i < rank {
                v
            } else {
                0.0
            }
        });
        let omega = DVector::from_fn(n, |i, _| {
            let v = rng.random_range(0.5..2.0);
            if i < rank {
                0.0
            } else {
                v
            }
        });
        let x_star = &q * DMatrix::from_diagonal(&lam) * q.transpose();
        let z_star = &q * DMatrix::from_diagonal(&omega) * q.transpose();
        let mut c = z_star;
        let mut terms = Vec::with_capacity(num_vars);
        for (k, &v) in vars.iter().enumerate() {
            let a = random_sym(&mut rng, n);
            c += &a * y_star[k];
            b[k] += a.dot(&x_star);
            terms.push((v, SymSparse::from_dense(&(-a), 0.0)));
        }
        problem
            .add_lmi(Lmi {
                name: format!("B{bi}"),
                size: n,
                constant: SymSparse::from_dense(&c, 0.0),
                terms,
            })
            .expect("well-formed planted LMI");
    }
    problem.set_objective(vars.iter().zip(b.iter()).map(|(v, c)| (*v, *c)).collect());
    let optimum = b.iter().zip(&y_star).map(|(a, c)| a * c).sum();
    PlantedInstance {
        problem,
        vars,
        optimum,
        y_star,
    }
}

/// Instance whose sizes are themselves drawn from the seed.
pub fn random_planted_instance(seed: u64) -> PlantedInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_0f_5d9);
    let nblocks = rng.random_range(1..=3);
    let sizes: Vec<usize> = (0..nblocks).map(|_| rng.random_range(2..=8)).collect();
    let num_vars = rng.random_range(1..=12);
    planted_instance(seed, num_vars, &sizes)
}
