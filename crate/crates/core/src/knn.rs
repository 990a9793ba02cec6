//! Exact top-k cosine neighbors over word-unigram count vectors.
//!
//! Candidates come from an inverted index (word -> tweets containing it), so
//! tweet pairs without a shared word are never scored. Such pairs have cosine
//! zero and are excluded from neighbor lists anyway, so the result is exact.

use std::cmp::Ordering;
use std::io::Write;

use rayon::prelude::*;

use crate::corpus::Tweet;
use crate::error::{Error, Result};
use crate::features::{build_feature_space, vectorize, word_unigrams, SparseVector};

#[derive(Debug, Clone, PartialEq)]
pub struct KnnConfig {
    pub k_fraction: f64,
    pub k_max: Option<usize>,
}

impl Default for KnnConfig {
    fn default() -> Self {
        KnnConfig {
            k_fraction: 0.25,
            k_max: None,
        }
    }
}

impl KnnConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.k_fraction > 0.0 && self.k_fraction <= 1.0) {
            return Err(Error::Config(format!(
                "k_fraction must be in (0, 1], got {}",
                self.k_fraction
            )));
        }
        if self.k_max == Some(0) {
            return Err(Error::Config("k_max must be at least 1".into()));
        }
        Ok(())
    }

    /// `max(1, floor(k_fraction * n))`, capped by `k_max`.
    pub fn k_for(&self, n_tweets: usize) -> usize {
        // the epsilon absorbs products such as 0.7 * 10 = 7.000000000000001 and 0.29 * 100 = 28.999999999999996
        let k = ((self.k_fraction * n_tweets as f64) + 1e-9).floor() as usize;
        let k = k.max(1);
        match self.k_max {
            Some(cap) => k.min(cap),
            None => k,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    /// Position of the neighbor in the input tweet list.
    pub index: usize,
    pub similarity: f64,
}

/// Per-tweet neighbors, descending by similarity then ascending by tweet id.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborList {
    pub k: usize,
    pub lists: Vec<Vec<Neighbor>>,
}

impl NeighborList {
    /// TSV `tweet_id, neighbor_id, similarity` with six decimals.
    pub fn write_tsv(&self, mut w: impl Write, tweets: &[Tweet]) -> Result<()> {
        for (i, list) in self.lists.iter().enumerate() {
            for n in list {
                writeln!(w, "{}\t{}\t{:.6}", tweets[i].id, tweets[n.index].id, n.similarity)?;
            }
        }
        Ok(())
    }
}

fn cosine_from_parts(dot: f64, norm_a: f64, norm_b: f64) -> f64 {
    if norm_a == 0.0 || norm_b == 0.0 {
        return 0.0;
    }
    (dot / (norm_a * norm_b)).clamp(0.0, 1.0)
}

/// Cosine similarity of non-negative vectors; 0 if either is empty.
pub fn cosine(a: &SparseVector, b: &SparseVector) -> f64 {
    cosine_from_parts(a.dot(b), a.norm(), b.norm())
}

/// Word-unigram count vectors for every tweet over a shared vocabulary.
pub fn unigram_vectors(tweets: &[Tweet]) -> Vec<SparseVector> {
    let docs: Vec<Vec<String>> = tweets.iter().map(|t| word_unigrams(&t.text)).collect();
    match build_feature_space(&docs, 1) {
        Ok(space) => docs.iter().map(|d| vectorize(d, &space)).collect(),
        // every text is empty
        Err(_) => vec![SparseVector::default(); tweets.len()],
    }
}

/// Orders by similarity descending, then by tweet id ascending.
fn neighbor_order(tweets: &[Tweet]) -> impl Fn(&Neighbor, &Neighbor) -> Ordering + '_ {
    move |a, b| {
        b.similarity
            .total_cmp(&a.similarity)
            .then_with(|| tweets[a.index].id.cmp(&tweets[b.index].id))
    }
}

pub fn top_k_neighbors(tweets: &[Tweet], cfg: &KnnConfig) -> NeighborList {
    let vectors = unigram_vectors(tweets);
    top_k_from_vectors(tweets, &vectors, cfg)
}

pub fn top_k_from_vectors(tweets: &[Tweet], vectors: &[SparseVector], cfg: &KnnConfig) -> NeighborList {
    let n = tweets.len();
    let k = cfg.k_for(n);
    if n < 2 {
        return NeighborList {
            k,
            lists: vec![Vec::new(); n],
        };
    }

    let dim = vectors
        .iter()
        .flat_map(|v| v.entries().iter().map(|&(i, _)| i as usize + 1))
        .max()
        .unwrap_or(0);
    let mut postings: Vec<Vec<(usize, f64)>> = vec![Vec::new(); dim];
    for (t, v) in vectors.iter().enumerate() {
        for &(i, w) in v.entries() {
            postings[i as usize].push((t, w));
        }
    }
    let norms: Vec<f64> = vectors.iter().map(SparseVector::norm).collect();
    let order = neighbor_order(tweets);

    let lists = (0..n)
        .into_par_iter()
        .map(|a| {
            let mut dots = vec![0.0; n];
            let mut touched = Vec::new();
            for &(i, wa) in vectors[a].entries() {
                for &(b, wb) in &postings[i as usize] {
                    if b == a {
                        continue;
                    }
                    if dots[b] == 0.0 {
                        touched.push(b);
                    }
                    dots[b] += wa * wb;
                }
            }
            let mut cands: Vec<Neighbor> = touched
                .into_iter()
                .map(|b| Neighbor {
                    index: b,
                    similarity: cosine_from_parts(dots[b], norms[a], norms[b]),
                })
                .filter(|nb| nb.similarity > 0.0)
                .collect();
            cands.sort_by(&order);
            cands.truncate(k);
            cands
        })
        .collect();
    NeighborList { k, lists }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn tweets(texts: &[&str]) -> Vec<Tweet> {
        texts
            .iter()
            .enumerate()
            .map(|(i, t)| Tweet::new(format!("t{i:02}"), "u", *t))
            .collect()
    }

    #[test]
    fn cosine_examples() {
        let v = unigram_vectors(&tweets(&["a b c", "a b d", "x y", "a b c"]));
        assert_eq!(cosine(&v[0], &v[3]), 1.0);
        assert_eq!(cosine(&v[0], &v[2]), 0.0);
        assert_abs_diff_eq!(cosine(&v[0], &v[1]), 2.0 / 3.0, epsilon = 1e-15);
        assert_eq!(cosine(&v[0], &SparseVector::default()), 0.0);
    }

    #[test]
    fn k_arithmetic() {
        let cfg = KnnConfig::default();
        assert_eq!(cfg.k_for(4), 1);
        assert_eq!(cfg.k_for(3), 1);
        assert_eq!(cfg.k_for(1000), 250);
        let cfg = KnnConfig { k_fraction: 0.1, k_max: None };
        assert_eq!(cfg.k_for(30), 3);
        let cfg = KnnConfig { k_fraction: 0.7, k_max: Some(5) };
        assert_eq!(cfg.k_for(10), 5);
        assert!(KnnConfig { k_fraction: 0.0, k_max: None }.validate().is_err());
        assert!(KnnConfig { k_fraction: 1.5, k_max: None }.validate().is_err());
    }

    #[test]
    fn identical_tweets_get_one_neighbor() {
        let t = tweets(&["hola que tal"; 4]);
        let nl = top_k_neighbors(&t, &KnnConfig::default());
        assert_eq!(nl.k, 1);
        for (i, list) in nl.lists.iter().enumerate() {
            assert_eq!(list.len(), 1);
            assert_eq!(list[0].similarity, 1.0);
            assert_ne!(list[0].index, i);
        }
        // ties resolve to the smallest id
        assert_eq!(nl.lists[0][0].index, 1);
        assert_eq!(nl.lists[1][0].index, 0);
    }

    #[test]
    fn isolated_tweet_has_no_neighbors() {
        let t = tweets(&["a b", "a c", "zzz"]);
        let nl = top_k_neighbors(&t, &KnnConfig { k_fraction: 1.0, k_max: None });
        assert!(nl.lists[2].is_empty());
        assert_eq!(nl.lists[0].len(), 1);
    }

    #[test]
    fn single_tweet_has_no_neighbors() {
        let nl = top_k_neighbors(&tweets(&["a"]), &KnnConfig::default());
        assert_eq!(nl.lists, vec![Vec::new()]);
    }

    #[test]
    fn dump_format() {
        let t = tweets(&["a b", "a b"]);
        let nl = top_k_neighbors(&t, &KnnConfig::default());
        let mut buf = Vec::new();
        nl.write_tsv(&mut buf, &t).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "t00\tt01\t1.000000\nt01\tt00\t1.000000\n");
    }
}
