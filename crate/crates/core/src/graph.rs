//! The tweet / user / world graph and its seed distributions.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fmt;
use std::io::{Read, Write};

use crate::corpus::{seed_distribution, Dataset, Tweet};
use crate::error::{Error, Result};
use crate::knn::NeighborList;
use crate::lang::LabelDistribution;
use crate::numfmt::format_sig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NodeKind {
    Tweet,
    User,
    World,
}

impl NodeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            NodeKind::Tweet => "tweet",
            NodeKind::User => "user",
            NodeKind::World => "world",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "tweet" => Some(NodeKind::Tweet),
            "user" => Some(NodeKind::User),
            "world" => Some(NodeKind::World),
            _ => None,
        }
    }
}

pub const WORLD_KEY: &str = "world";

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId {
    pub kind: NodeKind,
    pub key: String,
}

impl NodeId {
    pub fn tweet(id: impl Into<String>) -> Self {
        NodeId { kind: NodeKind::Tweet, key: id.into() }
    }

    pub fn user(id: impl Into<String>) -> Self {
        NodeId { kind: NodeKind::User, key: id.into() }
    }

    pub fn world() -> Self {
        NodeId { kind: NodeKind::World, key: WORLD_KEY.to_string() }
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.kind.as_str(), self.key)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphConfig {
    pub tweet_user_weight: f64,
    pub user_user_weight: f64,
    pub user_world_weight: f64,
}

impl Default for GraphConfig {
    fn default() -> Self {
        GraphConfig {
            tweet_user_weight: 100.0,
            user_user_weight: 1.0,
            user_world_weight: 0.001,
        }
    }
}

impl GraphConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, w) in [
            ("tweet_user_weight", self.tweet_user_weight),
            ("user_user_weight", self.user_user_weight),
            ("user_world_weight", self.user_world_weight),
        ] {
            if !(w > 0.0 && w.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {w}")));
            }
        }
        Ok(())
    }
}

/// Undirected weighted graph with one stored entry per unordered node pair.
///
/// Node order is deterministic: tweets in dataset order, then users in order
/// of first appearance (authors, then follow pairs), then the world node.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SocialGraph {
    nodes: Vec<NodeId>,
    index: HashMap<NodeId, usize>,
    /// Keyed by `(lo, hi)` node positions with `lo < hi`.
    edges: BTreeMap<(usize, usize), f64>,
    seeds: BTreeMap<usize, LabelDistribution>,
}

impl SocialGraph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a node if absent and returns its position.
    pub fn add_node(&mut self, id: NodeId) -> usize {
        if let Some(&i) = self.index.get(&id) {
            return i;
        }
        let i = self.nodes.len();
        self.index.insert(id.clone(), i);
        self.nodes.push(id);
        i
    }

    /// Sets the weight of an undirected edge. Self-loops and non-positive
    /// weights are rejected.
    pub fn set_edge(&mut self, a: usize, b: usize, weight: f64) -> Result<()> {
        if a == b {
            return Err(Error::Config(format!("self-loop on {}", self.nodes[a])));
        }
        if !(weight > 0.0 && weight.is_finite()) {
            return Err(Error::Config(format!("edge weight must be positive, got {weight}")));
        }
        self.edges.insert((a.min(b), a.max(b)), weight);
        Ok(())
    }

    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn position(&self, id: &NodeId) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn weight(&self, a: usize, b: usize) -> Option<f64> {
        self.edges.get(&(a.min(b), a.max(b))).copied()
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.edges.iter().map(|(&(a, b), &w)| (a, b, w))
    }

    pub fn seeds(&self) -> &BTreeMap<usize, LabelDistribution> {
        &self.seeds
    }

    pub fn seed(&self, node: usize) -> Option<&LabelDistribution> {
        self.seeds.get(&node)
    }

    pub fn set_seed(&mut self, id: &NodeId, dist: LabelDistribution) -> Result<()> {
        let i = self.position(id).ok_or_else(|| Error::MissingNode(id.to_string()))?;
        if id.kind != NodeKind::Tweet {
            return Err(Error::Config(format!("only tweet nodes can be seeded, not {id}")));
        }
        self.seeds.insert(i, dist);
        Ok(())
    }

    /// Symmetric adjacency lists, neighbors in ascending position order.
    pub fn adjacency(&self) -> Vec<Vec<(usize, f64)>> {
        let mut adj = vec![Vec::new(); self.nodes.len()];
        for (&(a, b), &w) in &self.edges {
            adj[a].push((b, w));
            adj[b].push((a, w));
        }
        for list in &mut adj {
            list.sort_by_key(|&(n, _)| n);
        }
        adj
    }

    /// Every node reaches the world node (or the graph is empty).
    pub fn is_connected(&self) -> bool {
        if self.nodes.is_empty() {
            return true;
        }
        let adj = self.adjacency();
        let mut seen = vec![false; self.nodes.len()];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        while let Some(v) = queue.pop_front() {
            for &(u, _) in &adj[v] {
                if !seen[u] {
                    seen[u] = true;
                    queue.push_back(u);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    /// Writes the `#nodes` / `#edges` / `#seeds` text format. Edge weights
    /// carry nine significant digits.
    pub fn write(&self, mut w: impl Write) -> Result<()> {
        writeln!(w, "#nodes")?;
        for n in &self.nodes {
            writeln!(w, "{}\t{}", n.kind.as_str(), n.key)?;
        }
        writeln!(w, "#edges")?;
        for (&(a, b), &wt) in &self.edges {
            let (na, nb) = (&self.nodes[a], &self.nodes[b]);
            writeln!(
                w,
                "{}\t{}\t{}\t{}\t{}",
                na.kind.as_str(),
                na.key,
                nb.kind.as_str(),
                nb.key,
                format_sig(wt, 9)
            )?;
        }
        writeln!(w, "#seeds")?;
        for (&i, dist) in &self.seeds {
            writeln!(w, "{}\t{}", self.nodes[i].key, dist.to_field())?;
        }
        Ok(())
    }

    pub fn read(mut r: impl Read) -> Result<Self> {
        let mut buf = String::new();
        r.read_to_string(&mut buf)?;
        let mut g = SocialGraph::new();
        let mut section = "";
        for (lineno, line) in buf.split('\n').enumerate() {
            let lineno = lineno + 1;
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('#') {
                if !matches!(name, "nodes" | "edges" | "seeds") {
                    return Err(Error::parse(lineno, format!("unknown section `{line}`")));
                }
                section = name;
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            let node = |kind: &str, key: &str| -> Result<NodeId> {
                let kind = NodeKind::parse(kind)
                    .ok_or_else(|| Error::parse(lineno, format!("unknown node kind `{kind}`")))?;
                Ok(NodeId { kind, key: key.to_string() })
            };
            let lookup = |g: &SocialGraph, id: &NodeId| -> Result<usize> {
                g.position(id)
                    .ok_or_else(|| Error::parse(lineno, format!("edge references unknown node {id}")))
            };
            match (section, fields.as_slice()) {
                ("nodes", [kind, key]) => {
                    let id = node(kind, key)?;
                    if g.position(&id).is_some() {
                        return Err(Error::parse(lineno, format!("duplicate node {id}")));
                    }
                    g.add_node(id);
                }
                ("edges", [ka, a, kb, b, wt]) => {
                    let ia = lookup(&g, &node(ka, a)?)?;
                    let ib = lookup(&g, &node(kb, b)?)?;
                    let wt: f64 = wt
                        .parse()
                        .map_err(|_| Error::parse(lineno, format!("bad weight `{wt}`")))?;
                    g.set_edge(ia, ib, wt).map_err(|e| Error::parse(lineno, e.to_string()))?;
                }
                ("seeds", [key, dist]) => {
                    let dist = LabelDistribution::parse_field(dist)
                        .map_err(|e| Error::parse(lineno, e.to_string()))?;
                    g.set_seed(&NodeId::tweet(*key), dist)
                        .map_err(|e| Error::parse(lineno, e.to_string()))?;
                }
                ("", _) => return Err(Error::parse(lineno, "content before the first section")),
                _ => return Err(Error::parse(lineno, format!("malformed `{section}` line"))),
            }
        }
        Ok(g)
    }
}

/// Builds the unseeded graph over all tweets in `dataset`. `neighbors` must
/// be computed over the same tweet list.
pub fn build_graph(dataset: &Dataset, neighbors: &NeighborList, cfg: &GraphConfig) -> Result<SocialGraph> {
    cfg.validate()?;
    if neighbors.lists.len() != dataset.tweets.len() {
        return Err(Error::Config(format!(
            "neighbor lists cover {} tweets but the dataset has {}",
            neighbors.lists.len(),
            dataset.tweets.len()
        )));
    }
    let mut g = SocialGraph::new();
    let tweet_nodes: Vec<usize> = dataset
        .tweets
        .iter()
        .map(|t| g.add_node(NodeId::tweet(&t.id)))
        .collect();
    let author_nodes: Vec<usize> = dataset
        .tweets
        .iter()
        .map(|t| g.add_node(NodeId::user(&t.author)))
        .collect();
    for pair in &dataset.follows {
        let (a, b) = pair.users();
        g.add_node(NodeId::user(a));
        g.add_node(NodeId::user(b));
    }
    let world = g.add_node(NodeId::world());

    // union symmetrization: both directions write the same cosine weight
    for (a, list) in neighbors.lists.iter().enumerate() {
        for nb in list {
            g.set_edge(tweet_nodes[a], tweet_nodes[nb.index], nb.similarity)?;
        }
    }
    for (&t, &u) in tweet_nodes.iter().zip(&author_nodes) {
        g.set_edge(t, u, cfg.tweet_user_weight)?;
    }
    for pair in &dataset.follows {
        let (a, b) = pair.users();
        let ia = g.position(&NodeId::user(a)).expect("added above");
        let ib = g.position(&NodeId::user(b)).expect("added above");
        g.set_edge(ia, ib, cfg.user_user_weight)?;
    }
    let users: Vec<usize> = (0..g.node_count())
        .filter(|&i| g.nodes()[i].kind == NodeKind::User)
        .collect();
    for u in users {
        g.set_edge(u, world, cfg.user_world_weight)?;
    }
    Ok(g)
}

/// Seeds every labeled training tweet with its gold distribution.
pub fn inject_seeds<'a>(
    graph: &mut SocialGraph,
    train: impl IntoIterator<Item = &'a Tweet>,
) -> Result<usize> {
    let mut count = 0;
    for t in train {
        if let Some(gold) = &t.gold {
            graph.set_seed(&NodeId::tweet(&t.id), seed_distribution(gold))?;
            count += 1;
        }
    }
    Ok(count)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{FollowPair, GoldLabel};
    use crate::knn::{top_k_neighbors, KnnConfig};
    use crate::lang::Lang;
    use std::collections::BTreeSet;

    fn build(tweets: Vec<Tweet>, follows: &[(&str, &str)]) -> SocialGraph {
        let follows: BTreeSet<FollowPair> =
            follows.iter().filter_map(|(a, b)| FollowPair::new(a, b)).collect();
        let ds = Dataset::new(tweets, follows).unwrap();
        let nl = top_k_neighbors(&ds.tweets, &KnnConfig { k_fraction: 1.0, k_max: None });
        build_graph(&ds, &nl, &GraphConfig::default()).unwrap()
    }

    #[test]
    fn one_tweet_one_user() {
        let g = build(vec![Tweet::new("1", "u1", "hola")], &[]);
        assert_eq!(g.node_count(), 3);
        assert_eq!(g.edge_count(), 2);
        let t = g.position(&NodeId::tweet("1")).unwrap();
        let u = g.position(&NodeId::user("u1")).unwrap();
        let w = g.position(&NodeId::world()).unwrap();
        assert_eq!(g.weight(t, u), Some(100.0));
        assert_eq!(g.weight(u, w), Some(0.001));
        assert!(g.is_connected());
    }

    #[test]
    fn same_author_similar_tweets() {
        // bags {a,b,c,d} and {a,b,x,y}: cosine 2/4
        let g = build(
            vec![Tweet::new("1", "u1", "a b c d"), Tweet::new("2", "u1", "a b x y")],
            &[],
        );
        assert_eq!(g.node_count(), 4);
        assert_eq!(g.edge_count(), 4);
        let (t1, t2) = (g.position(&NodeId::tweet("1")).unwrap(), g.position(&NodeId::tweet("2")).unwrap());
        assert_eq!(g.weight(t1, t2), Some(0.5));
    }

    #[test]
    fn follow_only_users_are_nodes() {
        let g = build(vec![Tweet::new("1", "u1", "x")], &[("u1", "u2"), ("u3", "u2")]);
        assert_eq!(g.node_count(), 5);
        // 1 T-U + 2 U-U + 3 U-W
        assert_eq!(g.edge_count(), 6);
        assert!(g.is_connected());
    }

    #[test]
    fn seeds_follow_gold() {
        let train = vec![
            Tweet::new("1", "u1", "x").with_gold(GoldLabel::Single(Lang::Pt)),
            Tweet::new("2", "u1", "y").with_gold(GoldLabel::ambiguous([Lang::Es, Lang::Ca]).unwrap()),
        ];
        let test = vec![Tweet::new("3", "u2", "z")];
        let mut all = train.clone();
        all.extend(test.clone());
        let mut g = build(all, &[]);
        assert_eq!(inject_seeds(&mut g, &train).unwrap(), 2);
        let s1 = g.seed(g.position(&NodeId::tweet("1")).unwrap()).unwrap();
        assert_eq!(*s1, LabelDistribution::point(Lang::Pt));
        let s2 = g.seed(g.position(&NodeId::tweet("2")).unwrap()).unwrap();
        assert_eq!((s2.get(Lang::Es), s2.get(Lang::Ca)), (0.5, 0.5));
        assert!(g.seed(g.position(&NodeId::tweet("3")).unwrap()).is_none());

        let ghost = [Tweet::new("9", "u1", "q").with_gold(GoldLabel::Single(Lang::Es))];
        assert!(matches!(inject_seeds(&mut g, &ghost), Err(Error::MissingNode(_))));
    }

    #[test]
    fn file_round_trip() {
        let train = vec![Tweet::new("1", "u1", "a b c").with_gold(GoldLabel::Single(Lang::Es))];
        let mut all = train.clone();
        all.push(Tweet::new("2", "u2", "a b d"));
        let mut g = build(all, &[("u1", "u2")]);
        inject_seeds(&mut g, &train).unwrap();
        let mut buf = Vec::new();
        g.write(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.contains("tweet\t1\ttweet\t2\t0.666666667\n"), "{text}");
        let back = SocialGraph::read(&buf[..]).unwrap();
        assert_eq!(back.nodes(), g.nodes());
        assert_eq!(back.seeds(), g.seeds());
        assert_eq!(back.edge_count(), g.edge_count());
        for (a, b, w) in g.edges() {
            assert!((back.weight(a, b).unwrap() - w).abs() <= 1e-9 * w);
        }
    }

    #[test]
    fn rejects_bad_edges() {
        let mut g = SocialGraph::new();
        let a = g.add_node(NodeId::user("a"));
        assert!(g.set_edge(a, a, 1.0).is_err());
        let b = g.add_node(NodeId::user("b"));
        assert!(g.set_edge(a, b, 0.0).is_err());
        assert!(GraphConfig { user_world_weight: -1.0, ..Default::default() }.validate().is_err());
    }
}
