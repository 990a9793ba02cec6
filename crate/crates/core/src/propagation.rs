//! Modified Adsorption (MAD) label propagation.
//!
//! Every node splits its random-walk behaviour into injection (return its
//! seed), continuation (take a neighbour's labels) and abandonment (emit the
//! dummy label). The probabilities come from the entropy of the node's
//! transition distribution. Labels are then found by Jacobi iteration on
//!
//! ```text
//! Y'_v = (mu1 p_inj(v) Y_v + mu2 sum_u W'(v,u) Y'_u + mu3 p_abnd(v) r) / M_v
//! W'(v,u) = p_cont(v) W(v,u) + p_cont(u) W(u,v)
//! M_v = mu1 p_inj(v) + mu2 sum_u W'(v,u) + mu3
//! ```
//!
//! where `r` is the indicator of the dummy label.

use std::collections::HashMap;
use std::io::{Read, Write};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{NodeId, NodeKind, SocialGraph};
use crate::lang::{Lang, LabelDistribution, NUM_LANGS};

pub const DUMMY_LABEL: &str = "__DUMMY__";

#[derive(Debug, Clone, PartialEq)]
pub struct MadConfig {
    pub mu1: f64,
    pub mu2: f64,
    pub mu3: f64,
    pub beta: f64,
    pub max_iters: usize,
    /// Convergence threshold on the largest absolute score change per sweep.
    pub tol: f64,
}

impl Default for MadConfig {
    fn default() -> Self {
        MadConfig {
            mu1: 1.0,
            mu2: 0.01,
            mu3: 0.01,
            beta: 2.0,
            max_iters: 100,
            tol: 1e-6,
        }
    }
}

impl MadConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("mu1", self.mu1), ("mu2", self.mu2), ("mu3", self.mu3), ("tol", self.tol)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.beta > 1.0 && self.beta.is_finite()) {
            return Err(Error::Config(format!("beta must exceed 1, got {}", self.beta)));
        }
        if self.max_iters == 0 {
            return Err(Error::Config("max_iters must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WalkProbs {
    pub p_inj: f64,
    pub p_cont: f64,
    pub p_abnd: f64,
}

/// Walk probabilities of one node from its incident edge weights.
///
/// Returns `None` for a node without edges.
pub fn walk_probs(weights: impl IntoIterator<Item = f64> + Clone, seeded: bool, beta: f64) -> Option<WalkProbs> {
    let total: f64 = weights.clone().into_iter().sum();
    if !(total > 0.0) {
        return None;
    }
    let entropy: f64 = weights
        .into_iter()
        .map(|w| w / total)
        .filter(|&p| p > 0.0)
        .map(|p| -p * p.ln())
        .sum::<f64>()
        .max(0.0);
    let c = beta.ln() / (beta + entropy.exp()).ln();
    let d = if seeded { (1.0 - c) * entropy.sqrt() } else { 0.0 };
    let z = (c + d).max(1.0);
    let p_cont = c / z;
    let p_inj = d / z;
    let p_abnd = (1.0 - p_cont - p_inj).max(0.0);
    Some(WalkProbs { p_inj, p_cont, p_abnd })
}

/// Walk probabilities for every node of a symmetric adjacency structure.
pub fn compute_walk_probs_adj(adj: &[Vec<(usize, f64)>], seeded: &[bool], beta: f64) -> Result<Vec<WalkProbs>> {
    adj.iter()
        .zip(seeded)
        .enumerate()
        .map(|(v, (list, &s))| {
            walk_probs(list.iter().map(|&(_, w)| w), s, beta).ok_or_else(|| Error::IsolatedNode(format!("#{v}")))
        })
        .collect()
}

fn check_no_isolated(graph: &SocialGraph, adj: &[Vec<(usize, f64)>]) -> Result<()> {
    match adj.iter().position(Vec::is_empty) {
        Some(v) => Err(Error::IsolatedNode(graph.nodes()[v].to_string())),
        None => Ok(()),
    }
}

pub fn compute_walk_probs(graph: &SocialGraph, cfg: &MadConfig) -> Result<Vec<WalkProbs>> {
    let adj = graph.adjacency();
    check_no_isolated(graph, &adj)?;
    let seeded: Vec<bool> = (0..graph.node_count()).map(|v| graph.seed(v).is_some()).collect();
    compute_walk_probs_adj(&adj, &seeded, cfg.beta)
}

/// Label scores for `n` nodes over `num_labels` real labels plus the dummy
/// label, stored row-major with the dummy in the last column.
#[derive(Debug, Clone, PartialEq)]
pub struct MadSolution {
    pub num_labels: usize,
    pub scores: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Largest absolute change in the final sweep.
    pub last_delta: f64,
}

impl MadSolution {
    pub fn width(&self) -> usize {
        self.num_labels + 1
    }

    pub fn row(&self, v: usize) -> &[f64] {
        let w = self.width();
        &self.scores[v * w..(v + 1) * w]
    }

    pub fn dummy(&self, v: usize) -> f64 {
        self.row(v)[self.num_labels]
    }
}

/// The fixed linear operator behind the MAD updates.
#[derive(Debug, Clone)]
pub struct MadSystem {
    pub num_labels: usize,
    pub probs: Vec<WalkProbs>,
    /// `(u, W'(v,u))` per node.
    pub coupling: Vec<Vec<(usize, f64)>>,
    /// `M_v` per node.
    pub normalizer: Vec<f64>,
    /// Constant term `mu1 p_inj(v) Y_v + mu3 p_abnd(v) r` per node, row-major.
    pub injection: Vec<f64>,
    pub mu2: f64,
}

impl MadSystem {
    /// `seeds[v]` is a length-`num_labels` vector for seeded nodes.
    pub fn new(
        adj: &[Vec<(usize, f64)>],
        seeds: &[Option<Vec<f64>>],
        num_labels: usize,
        cfg: &MadConfig,
    ) -> Result<Self> {
        cfg.validate()?;
        if adj.len() != seeds.len() {
            return Err(Error::Config("seed list length differs from node count".into()));
        }
        if seeds.iter().all(Option::is_none) {
            return Err(Error::NoSeeds);
        }
        let seeded: Vec<bool> = seeds.iter().map(Option::is_some).collect();
        let probs = compute_walk_probs_adj(adj, &seeded, cfg.beta)?;
        let width = num_labels + 1;

        let coupling: Vec<Vec<(usize, f64)>> = adj
            .iter()
            .enumerate()
            .map(|(v, list)| {
                list.iter()
                    .map(|&(u, w)| (u, probs[v].p_cont * w + probs[u].p_cont * w))
                    .collect()
            })
            .collect();
        let normalizer: Vec<f64> = (0..adj.len())
            .map(|v| {
                let wsum: f64 = coupling[v].iter().map(|&(_, w)| w).sum();
                cfg.mu1 * probs[v].p_inj + cfg.mu2 * wsum + cfg.mu3
            })
            .collect();
        let mut injection = vec![0.0; adj.len() * width];
        for (v, seed) in seeds.iter().enumerate() {
            let row = &mut injection[v * width..(v + 1) * width];
            if let Some(y) = seed {
                if y.len() != num_labels {
                    return Err(Error::Config(format!(
                        "seed of node {v} has {} labels, expected {num_labels}",
                        y.len()
                    )));
                }
                for (r, &yl) in row.iter_mut().zip(y) {
                    *r = cfg.mu1 * probs[v].p_inj * yl;
                }
            }
            row[num_labels] = cfg.mu3 * probs[v].p_abnd;
        }
        Ok(MadSystem {
            num_labels,
            probs,
            coupling,
            normalizer,
            injection,
            mu2: cfg.mu2,
        })
    }

    pub fn node_count(&self) -> usize {
        self.normalizer.len()
    }

    /// One Jacobi sweep from `prev` into `next`; returns the largest change.
    pub fn sweep(&self, prev: &[f64], next: &mut [f64]) -> f64 {
        let width = self.num_labels + 1;
        next.par_chunks_mut(width)
            .enumerate()
            .map(|(v, row)| {
                row.copy_from_slice(&self.injection[v * width..(v + 1) * width]);
                for &(u, w) in &self.coupling[v] {
                    let scale = self.mu2 * w;
                    let src = &prev[u * width..(u + 1) * width];
                    row.iter_mut().zip(src).for_each(|(r, s)| *r += scale * s);
                }
                let m = self.normalizer[v];
                let old = &prev[v * width..(v + 1) * width];
                row.iter_mut()
                    .zip(old)
                    .map(|(r, o)| {
                        *r /= m;
                        (*r - o).abs()
                    })
                    .fold(0.0, f64::max)
            })
            .reduce(|| 0.0, f64::max)
    }

    /// Iterates from all-zero scores until the change drops below `tol`.
    pub fn solve(&self, max_iters: usize, tol: f64) -> MadSolution {
        let width = self.num_labels + 1;
        let mut cur = vec![0.0; self.node_count() * width];
        let mut next = cur.clone();
        let mut iterations = 0;
        let mut delta = f64::INFINITY;
        while iterations < max_iters {
            delta = self.sweep(&cur, &mut next);
            std::mem::swap(&mut cur, &mut next);
            iterations += 1;
            if delta < tol {
                break;
            }
        }
        MadSolution {
            num_labels: self.num_labels,
            scores: cur,
            iterations,
            converged: delta < tol,
            last_delta: delta,
        }
    }
}

/// Runs MAD on a generic symmetric adjacency structure.
pub fn mad(
    adj: &[Vec<(usize, f64)>],
    seeds: &[Option<Vec<f64>>],
    num_labels: usize,
    cfg: &MadConfig,
) -> Result<MadSolution> {
    let system = MadSystem::new(adj, seeds, num_labels, cfg)?;
    Ok(system.solve(cfg.max_iters, cfg.tol))
}

/// Propagated scores over the six languages plus the dummy label.
#[derive(Debug, Clone, PartialEq)]
pub struct PropagationResult {
    nodes: Vec<NodeId>,
    index: HashMap<NodeId, usize>,
    pub solution: MadSolution,
}

impl PropagationResult {
    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    pub fn iterations(&self) -> usize {
        self.solution.iterations
    }

    pub fn converged(&self) -> bool {
        self.solution.converged
    }

    /// Raw scores for a node: six languages then the dummy label.
    pub fn scores(&self, node: &NodeId) -> Option<&[f64]> {
        self.index.get(node).map(|&v| self.solution.row(v))
    }

    /// Writes `kind, key, lang:score,...,__DUMMY__:score` with six decimals.
    pub fn write_tsv(&self, mut w: impl Write) -> Result<()> {
        for (v, node) in self.nodes.iter().enumerate() {
            let row = self.solution.row(v);
            let mut fields: Vec<String> = Lang::ALL
                .iter()
                .map(|l| format!("{l}:{:.6}", row[l.index()]))
                .collect();
            fields.push(format!("{DUMMY_LABEL}:{:.6}", row[NUM_LANGS]));
            writeln!(w, "{}\t{}\t{}", node.kind.as_str(), node.key, fields.join(","))?;
        }
        Ok(())
    }

    /// Reads a dump written by [`write_tsv`](Self::write_tsv). Iteration
    /// metadata is not stored in the dump and reads back as zero.
    pub fn read_tsv(mut r: impl Read) -> Result<Self> {
        let mut buf = String::new();
        r.read_to_string(&mut buf)?;
        let mut nodes = Vec::new();
        let mut scores = Vec::new();
        for (lineno, line) in buf.split('\n').enumerate() {
            let lineno = lineno + 1;
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            let [kind, key, labels] = fields[..] else {
                return Err(Error::parse(lineno, "expected `kind<TAB>key<TAB>scores`"));
            };
            let kind = match kind {
                "tweet" => NodeKind::Tweet,
                "user" => NodeKind::User,
                "world" => NodeKind::World,
                other => return Err(Error::parse(lineno, format!("unknown node kind `{other}`"))),
            };
            let mut row = [0.0; NUM_LANGS + 1];
            for part in labels.split(',').filter(|p| !p.is_empty()) {
                let (label, value) = part
                    .split_once(':')
                    .ok_or_else(|| Error::parse(lineno, format!("bad entry `{part}`")))?;
                let value: f64 = value
                    .parse()
                    .map_err(|_| Error::parse(lineno, format!("bad score `{value}`")))?;
                let slot = if label == DUMMY_LABEL {
                    NUM_LANGS
                } else {
                    label
                        .parse::<Lang>()
                        .map_err(|e| Error::parse(lineno, e.to_string()))?
                        .index()
                };
                row[slot] = value;
            }
            nodes.push(NodeId { kind, key: key.to_string() });
            scores.extend_from_slice(&row);
        }
        let index = nodes.iter().cloned().enumerate().map(|(i, n)| (n, i)).collect();
        Ok(PropagationResult {
            nodes,
            index,
            solution: MadSolution {
                num_labels: NUM_LANGS,
                scores,
                iterations: 0,
                converged: false,
                last_delta: f64::NAN,
            },
        })
    }
}

/// Runs MAD over the social graph with its seeds.
pub fn propagate(graph: &SocialGraph, cfg: &MadConfig) -> Result<PropagationResult> {
    cfg.validate()?;
    if graph.seeds().is_empty() {
        return Err(Error::NoSeeds);
    }
    let seeds: Vec<Option<Vec<f64>>> = (0..graph.node_count())
        .map(|v| graph.seed(v).map(|d| d.as_array().to_vec()))
        .collect();
    let adj = graph.adjacency();
    check_no_isolated(graph, &adj)?;
    let system = MadSystem::new(&adj, &seeds, NUM_LANGS, cfg)?;
    let solution = system.solve(cfg.max_iters, cfg.tol);
    if !solution.converged {
        log::warn!(
            "label propagation stopped after {} sweeps (last change {:.3e})",
            solution.iterations,
            solution.last_delta
        );
    }
    let nodes = graph.nodes().to_vec();
    let index = nodes.iter().cloned().enumerate().map(|(i, n)| (n, i)).collect();
    Ok(PropagationResult { nodes, index, solution })
}

/// Drops the dummy label and rescales the language scores to sum to one.
/// A node with no language mass gets the uniform distribution.
pub fn renormalize(result: &PropagationResult, node: &NodeId) -> Result<LabelDistribution> {
    let row = result
        .scores(node)
        .ok_or_else(|| Error::MissingScores(node.key.clone()))?;
    let mut langs = [0.0; NUM_LANGS];
    langs.copy_from_slice(&row[..NUM_LANGS]);
    Ok(LabelDistribution::from_array(langs).normalized())
}
