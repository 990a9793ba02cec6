//! Deterministic synthetic corpus: two similar languages, authors grouped
//! into follower communities that mostly write one of them.

use std::collections::{BTreeSet, HashSet};
use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{write_follows, write_tweets, FollowPair, GoldLabel, Tweet};
use crate::error::{Error, Result};
use crate::lang::Lang;

/// The two generated languages; community `c` mostly writes `LANGS[c % 2]`.
pub const LANGS: [Lang; 2] = [Lang::Es, Lang::Ca];

const ALPHABET: &[u8] = b"abcdefghijklmnopqrstuvwxyz";

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub seed: u64,
    pub n_users: usize,
    pub n_communities: usize,
    pub n_train: usize,
    pub n_test: usize,
    /// Words per language vocabulary.
    pub vocab_size: usize,
    /// Fraction of each vocabulary shared by both languages.
    pub overlap: f64,
    /// Probability that a tweet is in its author's community language.
    pub monolinguality: f64,
    /// Follow probability for a user pair inside one community.
    pub follow_in: f64,
    /// Follow probability across communities.
    pub follow_out: f64,
    pub words_min: usize,
    pub words_max: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            seed: 0,
            n_users: 100,
            n_communities: 2,
            n_train: 500,
            n_test: 500,
            vocab_size: 300,
            overlap: 0.8,
            monolinguality: 0.9,
            follow_in: 0.1,
            follow_out: 0.01,
            words_min: 4,
            words_max: 10,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let unit = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must be in [0, 1], got {v}")))
            }
        };
        unit("overlap", self.overlap)?;
        unit("monolinguality", self.monolinguality)?;
        unit("follow_in", self.follow_in)?;
        unit("follow_out", self.follow_out)?;
        if self.n_users == 0 || self.n_communities == 0 || self.n_communities > self.n_users {
            return Err(Error::Config(
                "need at least one user and 1..=n_users communities".into(),
            ));
        }
        if self.n_train == 0 || self.vocab_size == 0 {
            return Err(Error::Config("n_train and vocab_size must be positive".into()));
        }
        if self.words_min == 0 || self.words_max < self.words_min {
            return Err(Error::Config("invalid words-per-tweet range".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthData {
    pub train: Vec<Tweet>,
    pub test: Vec<Tweet>,
    pub follows: BTreeSet<FollowPair>,
}

impl SynthData {
    /// Writes `train.tsv`, `test.tsv` and `follows.tsv` into `dir`.
    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        write_tweets(BufWriter::new(File::create(dir.join("train.tsv"))?), &self.train)?;
        write_tweets(BufWriter::new(File::create(dir.join("test.tsv"))?), &self.test)?;
        write_follows(BufWriter::new(File::create(dir.join("follows.tsv"))?), &self.follows)?;
        Ok(())
    }
}

fn random_word(rng: &mut impl Rng) -> String {
    let len = rng.random_range(3..=8);
    (0..len)
        .map(|_| ALPHABET[rng.random_range(0..ALPHABET.len())] as char)
        .collect()
}

pub fn generate(cfg: &SynthConfig) -> Result<SynthData> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let shared_n = (cfg.overlap * cfg.vocab_size as f64).round() as usize;
    let own_n = cfg.vocab_size - shared_n;
    let mut seen = HashSet::new();
    let mut fresh = |rng: &mut ChaCha8Rng, n: usize| -> Vec<String> {
        let mut out = Vec::with_capacity(n);
        while out.len() < n {
            let w = random_word(rng);
            if seen.insert(w.clone()) {
                out.push(w);
            }
        }
        out
    };
    let shared = fresh(&mut rng, shared_n);
    let vocab: Vec<Vec<String>> = (0..LANGS.len())
        .map(|_| {
            let mut v = shared.clone();
            v.extend(fresh(&mut rng, own_n));
            v
        })
        .collect();

    let community = |u: usize| u * cfg.n_communities / cfg.n_users;
    let users: Vec<String> = (0..cfg.n_users).map(|u| format!("u{u:04}")).collect();

    let mut follows = BTreeSet::new();
    for a in 0..cfg.n_users {
        for b in a + 1..cfg.n_users {
            let p = if community(a) == community(b) { cfg.follow_in } else { cfg.follow_out };
            if rng.random_bool(p) {
                follows.insert(FollowPair::new(&users[a], &users[b]).expect("distinct users"));
            }
        }
    }

    let total = cfg.n_train + cfg.n_test;
    let mut tweets = Vec::with_capacity(total);
    for i in 0..total {
        let author = rng.random_range(0..cfg.n_users);
        let home = community(author) % LANGS.len();
        let lang_slot = if rng.random_bool(cfg.monolinguality) { home } else { 1 - home };
        let n_words = rng.random_range(cfg.words_min..=cfg.words_max);
        let words: Vec<&str> = (0..n_words)
            .map(|_| vocab[lang_slot].choose(&mut rng).expect("non-empty vocabulary").as_str())
            .collect();
        tweets.push(
            Tweet::new(format!("t{i:06}"), users[author].clone(), words.join(" "))
                .with_gold(GoldLabel::Single(LANGS[lang_slot])),
        );
    }
    let test = tweets.split_off(cfg.n_train);
    Ok(SynthData { train: tweets, test, follows })
}
