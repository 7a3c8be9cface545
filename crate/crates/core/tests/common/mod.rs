#![allow(dead_code)]

use gprank::graph::Graph;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

pub fn complete(n: usize) -> Graph {
    let edges = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v)));
    Graph::from_edges(n, edges).unwrap()
}

pub fn cycle(n: usize) -> Graph {
    Graph::from_edges(n, (0..n).map(|v| (v, (v + 1) % n))).unwrap()
}

pub fn star(leaves: usize) -> Graph {
    Graph::from_edges(leaves + 1, (1..=leaves).map(|v| (0, v))).unwrap()
}

/// G(n, p) plus a random Hamiltonian path, so no vertex is isolated.
pub fn random_connected(n: usize, p: f64, seed: u64) -> Graph {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        order.swap(i, rng.random_range(0..=i));
    }
    let mut edges: Vec<(usize, usize)> = order.windows(2).map(|w| (w[0], w[1])).collect();
    for u in 0..n {
        for v in u + 1..n {
            if rng.random::<f64>() < p {
                edges.push((u, v));
            }
        }
    }
    Graph::from_edges(n, edges).unwrap()
}

/// Walk matrix `W = A D^-1` as a dense column-stochastic matrix.
pub fn dense_walk(g: &Graph) -> DMatrix<f64> {
    let n = g.n();
    let mut w = DMatrix::zeros(n, n);
    for v in 0..n {
        let d = g.degree(v) as f64;
        for &u in g.neighbors(v) {
            w[(u, v)] += 1.0 / d;
        }
    }
    w
}

/// `max(|lambda_2|, |lambda_n|)` of the walk matrix from a dense symmetric
/// eigendecomposition of `D^-1/2 A D^-1/2`.
pub fn dense_lambda_sub(g: &Graph) -> f64 {
    let n = g.n();
    let mut r = DMatrix::<f64>::zeros(n, n);
    for v in 0..n {
        for &u in g.neighbors(v) {
            r[(u, v)] += 1.0 / ((g.degree(u) * g.degree(v)) as f64).sqrt();
        }
    }
    let mut mags: Vec<f64> = r.symmetric_eigen().eigenvalues.iter().map(|l: &f64| l.abs()).collect();
    mags.sort_by(|a, b| b.total_cmp(a));
    // The top eigenvalue 1 belongs to sqrt(d); for a disconnected graph a
    // second 1 remains and is the answer.
    if n < 2 {
        0.0
    } else {
        mags[1]
    }
}
