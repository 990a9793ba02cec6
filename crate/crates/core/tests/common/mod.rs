//! Oracles and random instance generators shared by the integration tests.
//! Nothing here calls into the code paths it is used to check.

#![allow(dead_code)]

use langprop_core::content_model::Example;
use langprop_core::{SparseVector, Tweet};
use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random connected undirected graph as symmetric adjacency lists, plus seeds.
pub struct RandomGraph {
    pub adj: Vec<Vec<(usize, f64)>>,
    pub seeds: Vec<Option<Vec<f64>>>,
    pub num_labels: usize,
}

pub fn random_graph(rng: &mut impl Rng, max_nodes: usize, max_labels: usize) -> RandomGraph {
    let n = rng.random_range(2..=max_nodes);
    let num_labels = rng.random_range(1..=max_labels);
    let mut w = vec![vec![0.0; n]; n];
    // random spanning tree keeps it connected
    for v in 1..n {
        let u = rng.random_range(0..v);
        let x = rng.random_range(0.05..3.0);
        w[u][v] = x;
        w[v][u] = x;
    }
    let extra = rng.random_range(0..=2 * n);
    for _ in 0..extra {
        let (a, b) = (rng.random_range(0..n), rng.random_range(0..n));
        if a != b {
            let x = rng.random_range(0.05..3.0);
            w[a][b] = x;
            w[b][a] = x;
        }
    }
    let adj = (0..n)
        .map(|v| (0..n).filter(|&u| w[v][u] > 0.0).map(|u| (u, w[v][u])).collect())
        .collect();

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let n_seeds = rng.random_range(1..=n.div_ceil(2));
    let mut seeds = vec![None; n];
    for &v in &order[..n_seeds] {
        let mut y: Vec<f64> = (0..num_labels).map(|_| rng.random_range(0.0..1.0)).collect();
        let s: f64 = y.iter().sum();
        y.iter_mut().for_each(|x| *x /= s);
        seeds[v] = Some(y);
    }
    RandomGraph { adj, seeds, num_labels }
}

/// Walk probabilities straight from the entropy formulas.
pub fn oracle_walk_probs(weights: &[f64], seeded: bool, beta: f64) -> (f64, f64, f64) {
    let total: f64 = weights.iter().sum();
    let h: f64 = weights.iter().map(|w| w / total).map(|p| -p * p.ln()).sum();
    let c = beta.log10() / (beta + h.exp()).log10();
    let d = if seeded { (1.0 - c) * h.sqrt() } else { 0.0 };
    let z = f64::max(c + d, 1.0);
    (d / z, c / z, 1.0 - c / z - d / z)
}

/// Solves the MAD fixed point `A Y = B` directly with an LU factorization.
/// Returns rows of `num_labels + 1` scores, dummy last.
pub fn dense_mad(g: &RandomGraph, mu1: f64, mu2: f64, mu3: f64, beta: f64) -> Vec<Vec<f64>> {
    let n = g.adj.len();
    let width = g.num_labels + 1;
    let mut w = DMatrix::<f64>::zeros(n, n);
    for (v, list) in g.adj.iter().enumerate() {
        for &(u, x) in list {
            w[(v, u)] = x;
        }
    }
    let probs: Vec<(f64, f64, f64)> = (0..n)
        .map(|v| {
            let ws: Vec<f64> = (0..n).map(|u| w[(v, u)]).filter(|&x| x > 0.0).collect();
            oracle_walk_probs(&ws, g.seeds[v].is_some(), beta)
        })
        .collect();
    let mut wp = DMatrix::<f64>::zeros(n, n);
    for v in 0..n {
        for u in 0..n {
            wp[(v, u)] = probs[v].1 * w[(v, u)] + probs[u].1 * w[(u, v)];
        }
    }
    let mut a = DMatrix::<f64>::zeros(n, n);
    let mut b = DMatrix::<f64>::zeros(n, width);
    for v in 0..n {
        let m = mu1 * probs[v].0 + mu2 * wp.row(v).sum() + mu3;
        a[(v, v)] = m;
        for u in 0..n {
            a[(v, u)] -= mu2 * wp[(v, u)];
        }
        if let Some(y) = &g.seeds[v] {
            for (l, &yl) in y.iter().enumerate() {
                b[(v, l)] = mu1 * probs[v].0 * yl;
            }
        }
        b[(v, g.num_labels)] = mu3 * probs[v].2;
    }
    let x = a.lu().solve(&b).expect("diagonally dominant system is nonsingular");
    (0..n).map(|v| (0..width).map(|l| x[(v, l)]).collect()).collect()
}

/// Random sparse logistic-regression batch.
pub fn random_batch(rng: &mut impl Rng, dim: usize, n: usize) -> Vec<Example> {
    (0..n)
        .map(|_| {
            let nnz = rng.random_range(0..=dim.min(6));
            let pairs: Vec<(u32, f64)> = (0..nnz)
                .map(|_| (rng.random_range(0..dim) as u32, rng.random_range(1..4) as f64))
                .collect();
            Example {
                x: SparseVector::from_pairs(pairs),
                y: if rng.random_bool(0.5) { 1.0 } else { -1.0 },
            }
        })
        .collect()
}

/// Central finite differences of `f` at `theta`.
pub fn finite_difference(f: impl Fn(&[f64]) -> f64, theta: &[f64], eps: f64) -> Vec<f64> {
    let mut x = theta.to_vec();
    (0..theta.len())
        .map(|i| {
            x[i] = theta[i] + eps;
            let up = f(&x);
            x[i] = theta[i] - eps;
            let down = f(&x);
            x[i] = theta[i];
            (up - down) / (2.0 * eps)
        })
        .collect()
}

/// Exhaustive all-pairs kNN over unigram counts, the definition spelled out.
/// Returns `(neighbor position, cosine)` lists.
pub fn brute_force_knn(tweets: &[Tweet], k: usize) -> Vec<Vec<(usize, f64)>> {
    use std::collections::HashMap;
    let bags: Vec<HashMap<&str, f64>> = tweets
        .iter()
        .map(|t| {
            let mut m = HashMap::new();
            for w in t.text.split_whitespace() {
                *m.entry(w).or_insert(0.0) += 1.0;
            }
            m
        })
        .collect();
    let norm = |b: &HashMap<&str, f64>| b.values().map(|x| x * x).sum::<f64>().sqrt();
    (0..tweets.len())
        .map(|a| {
            let mut all: Vec<(usize, f64)> = (0..tweets.len())
                .filter(|&b| b != a)
                .map(|b| {
                    let dot: f64 = bags[a].iter().map(|(w, x)| x * bags[b].get(w).unwrap_or(&0.0)).sum();
                    let (na, nb) = (norm(&bags[a]), norm(&bags[b]));
                    // cosine is bounded by 1; rounding in na * nb can push it one ulp over
                    let sim = if na == 0.0 || nb == 0.0 { 0.0 } else { (dot / (na * nb)).min(1.0) };
                    (b, sim)
                })
                .filter(|&(_, s)| s > 0.0)
                .collect();
            all.sort_by(|x, y| {
                y.1.partial_cmp(&x.1)
                    .unwrap()
                    .then_with(|| tweets[x.0].id.cmp(&tweets[y.0].id))
            });
            all.truncate(k);
            all
        })
        .collect()
}

/// Random corpus of short tweets over a tiny vocabulary, so ties are common.
pub fn random_corpus(rng: &mut impl Rng, n: usize) -> Vec<Tweet> {
    const WORDS: [&str; 12] = ["a", "b", "c", "d", "e", "f", "g", "hola", "bon", "dia", "que", "tal"];
    let mut ids: Vec<usize> = (0..n).collect();
    ids.shuffle(rng);
    ids.into_iter()
        .map(|i| {
            let len = rng.random_range(0..6);
            let text: Vec<&str> = (0..len).map(|_| WORDS[rng.random_range(0..WORDS.len())]).collect();
            Tweet::new(format!("t{i:03}"), format!("u{}", i % 7), text.join(" "))
        })
        .collect()
}
