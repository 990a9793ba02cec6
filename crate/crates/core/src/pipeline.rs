//! End-to-end runs: content model, social graph, propagation and the hybrid
//! decision, all in memory.

use std::collections::{BTreeSet, HashSet};

use crate::content_model::{train, ContentModel, FitReport, TrainConfig};
use crate::corpus::{Dataset, FollowPair, GoldLabel, Prediction, Tweet};
use crate::error::{Error, Result};
use crate::eval::{score_predictions, EvaluationReport};
use crate::features::{Featurizer, NgramRange};
use crate::graph::{build_graph, inject_seeds, GraphConfig, NodeId, SocialGraph};
use crate::hybrid::{combine, decide, HybridConfig, PredictionRecord};
use crate::knn::{top_k_neighbors, KnnConfig};
use crate::lang::{Lang, LabelDistribution};
use crate::propagation::{propagate, renormalize, MadConfig, PropagationResult};

#[derive(Debug, Clone, PartialEq)]
pub struct ContentConfig {
    pub ngrams: NgramRange,
    pub min_df: usize,
    /// Languages to train; `None` means those seen in the training labels.
    pub languages: Option<Vec<Lang>>,
    pub train: TrainConfig,
}

impl Default for ContentConfig {
    fn default() -> Self {
        ContentConfig {
            ngrams: NgramRange::default(),
            min_df: 1,
            languages: None,
            train: TrainConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PipelineConfig {
    pub content: ContentConfig,
    pub knn: KnnConfig,
    pub graph: GraphConfig,
    pub mad: MadConfig,
    pub hybrid: HybridConfig,
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.content.ngrams.validate()?;
        self.knn.validate()?;
        self.graph.validate()?;
        self.mad.validate()?;
        self.hybrid.validate()
    }
}

/// Concrete languages named by any single or ambiguous training label.
pub fn observed_languages(tweets: &[Tweet]) -> Vec<Lang> {
    let set: BTreeSet<Lang> = tweets
        .iter()
        .filter_map(|t| t.gold.as_ref())
        .flat_map(GoldLabel::members)
        .collect();
    set.into_iter().collect()
}

pub fn train_content(train_tweets: &[Tweet], cfg: &ContentConfig) -> Result<(ContentModel, Vec<FitReport>)> {
    let labeled: Vec<Tweet> = train_tweets.iter().filter(|t| t.gold.is_some()).cloned().collect();
    if labeled.is_empty() {
        return Err(Error::Config("no labeled training tweets".into()));
    }
    let featurizer = Featurizer::fit(labeled.iter().map(|t| t.text.as_str()), cfg.ngrams, cfg.min_df)?;
    let languages = match &cfg.languages {
        Some(l) => l.clone(),
        None => observed_languages(&labeled),
    };
    let train_cfg = TrainConfig { languages, ..cfg.train.clone() };
    train(&labeled, featurizer, &train_cfg)
}

/// Graph over train and test tweets with the labeled training tweets seeded.
pub fn build_seeded_graph(
    train_tweets: &[Tweet],
    test_tweets: &[Tweet],
    follows: &BTreeSet<FollowPair>,
    knn: &KnnConfig,
    graph_cfg: &GraphConfig,
) -> Result<SocialGraph> {
    knn.validate()?;
    let dataset = Dataset::from_parts(&[train_tweets, test_tweets], follows.clone())?;
    let neighbors = top_k_neighbors(&dataset.tweets, knn);
    let mut graph = build_graph(&dataset, &neighbors, graph_cfg)?;
    inject_seeds(&mut graph, train_tweets)?;
    Ok(graph)
}

/// Content and social distributions combined into decisions, one per tweet.
pub fn predict(
    model: &ContentModel,
    social: Option<&PropagationResult>,
    tweets: &[Tweet],
    cfg: &HybridConfig,
) -> Result<Vec<PredictionRecord>> {
    cfg.validate()?;
    tweets
        .iter()
        .map(|t| {
            let content = model.predict(&t.text);
            let social = match social {
                Some(result) => renormalize(result, &NodeId::tweet(&t.id))
                    .map_err(|_| Error::MissingScores(t.id.clone()))?,
                None if cfg.lambda2 == 0.0 => LabelDistribution::zeros(),
                None => return Err(Error::MissingScores(t.id.clone())),
            };
            let scores = combine(&content, &social, cfg);
            Ok(PredictionRecord {
                id: t.id.clone(),
                label: decide(&scores, cfg),
                scores,
            })
        })
        .collect()
}

/// Argmax of the normalized content distribution alone.
pub fn predict_content_only(model: &ContentModel, tweets: &[Tweet], und_threshold: f64) -> Vec<PredictionRecord> {
    let cfg = HybridConfig { und_threshold, ..HybridConfig::content_only() };
    tweets
        .iter()
        .map(|t| {
            let scores = model.predict(&t.text);
            PredictionRecord {
                id: t.id.clone(),
                label: decide(&scores, &cfg),
                scores,
            }
        })
        .collect()
}

/// Scores the records against the gold labels of `tweets`; unlabeled tweets
/// are skipped.
pub fn evaluate(tweets: &[Tweet], records: &[PredictionRecord]) -> Result<EvaluationReport> {
    let gold: Vec<(String, GoldLabel)> = tweets
        .iter()
        .filter_map(|t| t.gold.clone().map(|g| (t.id.clone(), g)))
        .collect();
    let labeled: HashSet<&str> = gold.iter().map(|(id, _)| id.as_str()).collect();
    let predicted: Vec<(String, Prediction)> = records
        .iter()
        .filter(|r| labeled.contains(r.id.as_str()))
        .map(|r| (r.id.clone(), r.label))
        .collect();
    score_predictions(&gold, &predicted)
}

#[derive(Debug, Clone)]
pub struct PipelineRun {
    pub model: ContentModel,
    pub fit_reports: Vec<FitReport>,
    pub graph_nodes: usize,
    pub graph_edges: usize,
    pub propagation: PropagationResult,
    pub content_only: Vec<PredictionRecord>,
    pub hybrid: Vec<PredictionRecord>,
}

/// Trains on `train_tweets`, propagates over train and test, and predicts
/// every test tweet both ways.
pub fn run(
    train_tweets: &[Tweet],
    test_tweets: &[Tweet],
    follows: &BTreeSet<FollowPair>,
    cfg: &PipelineConfig,
) -> Result<PipelineRun> {
    cfg.validate()?;
    let (model, fit_reports) = train_content(train_tweets, &cfg.content)?;
    let graph = build_seeded_graph(train_tweets, test_tweets, follows, &cfg.knn, &cfg.graph)?;
    let propagation = propagate(&graph, &cfg.mad)?;
    let hybrid = predict(&model, Some(&propagation), test_tweets, &cfg.hybrid)?;
    let content_only = predict_content_only(&model, test_tweets, cfg.hybrid.und_threshold);
    Ok(PipelineRun {
        model,
        fit_reports,
        graph_nodes: graph.node_count(),
        graph_edges: graph.edge_count(),
        propagation,
        content_only,
        hybrid,
    })
}
