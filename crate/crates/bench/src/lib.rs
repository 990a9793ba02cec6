//! Shared fixtures for the criterion benches.

use langprop_core::synth::generate;
use langprop_core::{PipelineConfig, SocialGraph, SynthConfig, SynthData, Tweet};

/// Synthetic corpus with `n` training and `n` test tweets over a user base
/// scaled to keep roughly five tweets per user.
pub fn corpus(n: usize) -> SynthData {
    let cfg = SynthConfig {
        n_train: n,
        n_test: n,
        n_users: (2 * n / 5).max(2),
        ..SynthConfig::default()
    };
    generate(&cfg).expect("valid synth config")
}

/// Train and test tweets in one slice, as the kNN stage sees them.
pub fn all_tweets(data: &SynthData) -> Vec<Tweet> {
    data.train.iter().chain(&data.test).cloned().collect()
}

/// The seeded social graph the propagation stage runs on.
pub fn seeded_graph(data: &SynthData) -> SocialGraph {
    let cfg = PipelineConfig::default();
    langprop_core::pipeline::build_seeded_graph(&data.train, &data.test, &data.follows, &cfg.knn, &cfg.graph)
        .expect("graph builds")
}
