mod common;

use std::collections::{BTreeSet, HashSet, VecDeque};

use common::{brute_force_knn, random_corpus, rng};
use langprop_core::corpus::FollowPair;
use langprop_core::graph::build_graph;
use langprop_core::knn::{cosine, top_k_neighbors, unigram_vectors};
use langprop_core::{Dataset, GraphConfig, KnnConfig, NodeId, NodeKind};
use rand::Rng;

#[test]
fn index_matches_all_pairs() {
    let mut r = rng(17);
    for _ in 0..30 {
        let n = r.random_range(2..120);
        let tweets = random_corpus(&mut r, n);
        let cfg = KnnConfig { k_fraction: r.random_range(0.01..1.0), k_max: None };
        let got = top_k_neighbors(&tweets, &cfg);
        let want = brute_force_knn(&tweets, cfg.k_for(n));
        for (a, (g, w)) in got.lists.iter().zip(&want).enumerate() {
            let g: Vec<(usize, f64)> = g.iter().map(|x| (x.index, x.similarity)).collect();
            assert_eq!(&g, w, "tweet {a}");
        }
    }
}

#[test]
fn listed_similarity_is_the_cosine() {
    let mut r = rng(2);
    let tweets = random_corpus(&mut r, 80);
    let vectors = unigram_vectors(&tweets);
    let nl = top_k_neighbors(&tweets, &KnnConfig::default());
    for (a, list) in nl.lists.iter().enumerate() {
        assert!(list.len() <= nl.k);
        assert!(list.windows(2).all(|p| p[0].similarity >= p[1].similarity));
        for nb in list {
            assert_ne!(nb.index, a);
            assert!(nb.similarity > 0.0 && nb.similarity <= 1.0);
            assert_eq!(nb.similarity, cosine(&vectors[a], &vectors[nb.index]));
        }
    }
}

fn random_dataset(r: &mut impl Rng, n: usize) -> Dataset {
    let tweets = random_corpus(r, n);
    let follows: BTreeSet<FollowPair> = (0..r.random_range(0..10))
        .filter_map(|_| FollowPair::new(&format!("u{}", r.random_range(0..9)), &format!("u{}", r.random_range(0..9))))
        .collect();
    Dataset::new(tweets, follows).unwrap()
}

#[test]
fn edge_count_identity_and_connectivity() {
    let mut r = rng(23);
    for _ in 0..25 {
        let n = r.random_range(1..60);
        let ds = random_dataset(&mut r, n);
        let nl = top_k_neighbors(&ds.tweets, &KnnConfig { k_fraction: r.random_range(0.05..1.0), k_max: None });
        let g = build_graph(&ds, &nl, &GraphConfig::default()).unwrap();

        let tt: HashSet<(usize, usize)> = nl
            .lists
            .iter()
            .enumerate()
            .flat_map(|(a, l)| l.iter().map(move |nb| (a.min(nb.index), a.max(nb.index))))
            .collect();
        let users = g.nodes().iter().filter(|n| n.kind == NodeKind::User).count();
        assert_eq!(g.edge_count(), tt.len() + ds.tweets.len() + ds.follows.len() + users);
        assert_eq!(g.nodes().iter().filter(|n| n.kind == NodeKind::World).count(), 1);

        // every node reaches the world node
        let adj = g.adjacency();
        let world = g.position(&NodeId::world()).unwrap();
        let mut seen = vec![false; g.node_count()];
        let mut queue = VecDeque::from([world]);
        seen[world] = true;
        while let Some(v) = queue.pop_front() {
            for &(u, w) in &adj[v] {
                assert!(w > 0.0);
                if !seen[u] {
                    seen[u] = true;
                    queue.push_back(u);
                }
            }
        }
        assert!(seen.iter().all(|&s| s));
        assert!(g.is_connected());

        let again = build_graph(&ds, &nl, &GraphConfig::default()).unwrap();
        assert_eq!(again, g);
    }
}
