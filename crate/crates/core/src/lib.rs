//! Language identification of short social-media messages.
//!
//! A character n-gram logistic regression scores each message on its own; a
//! Modified Adsorption run over the message / author / follower graph scores
//! it from its social context; the two distributions are mixed linearly and
//! the best language wins.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod content_model;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod features;
pub mod graph;
pub mod hybrid;
pub mod knn;
pub mod lang;
mod numfmt;
pub mod pipeline;
pub mod propagation;
pub mod synth;

pub use content_model::{ContentModel, TrainConfig};
pub use corpus::{Dataset, FollowPair, GoldLabel, Prediction, Tweet};
pub use error::{Error, Result};
pub use eval::{Category, EvaluationReport};
pub use features::{FeatureSpace, Featurizer, NgramRange, SparseVector};
pub use graph::{GraphConfig, NodeId, NodeKind, SocialGraph};
pub use hybrid::{HybridConfig, PredictionRecord};
pub use knn::{KnnConfig, NeighborList};
pub use lang::{Lang, LabelDistribution};
pub use numfmt::format_sig;
pub use pipeline::{PipelineConfig, PipelineRun};
pub use propagation::{MadConfig, PropagationResult, WalkProbs};
pub use synth::{SynthConfig, SynthData};
