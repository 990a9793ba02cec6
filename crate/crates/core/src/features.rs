//! Tokenization and sparse count vectors.

use std::collections::HashSet;
use std::io::{Read, Write};

use indexmap::IndexSet;

use crate::error::{Error, Result};

/// Character n-grams of every whitespace-separated word, with multiplicity.
/// No n-gram crosses a word boundary.
pub fn char_ngrams(text: &str, n_min: usize, n_max: usize) -> Vec<String> {
    assert!(n_min >= 1 && n_max >= n_min, "invalid n-gram range {n_min}..={n_max}");
    let mut out = Vec::new();
    for word in text.split_whitespace() {
        let chars: Vec<char> = word.chars().collect();
        for n in n_min..=n_max.min(chars.len()) {
            out.extend(chars.windows(n).map(|w| w.iter().collect::<String>()));
        }
    }
    out
}

/// Whitespace tokens with multiplicity; case and punctuation are kept.
pub fn word_unigrams(text: &str) -> Vec<String> {
    text.split_whitespace().map(str::to_string).collect()
}

/// Inclusive character n-gram length range.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NgramRange {
    pub min: usize,
    pub max: usize,
}

impl Default for NgramRange {
    fn default() -> Self {
        NgramRange { min: 2, max: 5 }
    }
}

impl NgramRange {
    pub fn validate(&self) -> Result<()> {
        if self.min == 0 || self.max < self.min {
            return Err(Error::Config(format!(
                "n-gram range {}..={} is invalid",
                self.min, self.max
            )));
        }
        Ok(())
    }

    pub fn extract(&self, text: &str) -> Vec<String> {
        char_ngrams(text, self.min, self.max)
    }
}

/// Fitted text-to-vector mapping: an n-gram range plus its vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct Featurizer {
    pub ngrams: NgramRange,
    pub space: FeatureSpace,
}

impl Featurizer {
    pub fn fit<'a>(
        texts: impl IntoIterator<Item = &'a str>,
        ngrams: NgramRange,
        min_df: usize,
    ) -> Result<Self> {
        ngrams.validate()?;
        let corpus: Vec<Vec<String>> = texts.into_iter().map(|t| ngrams.extract(t)).collect();
        let space = build_feature_space(&corpus, min_df)?;
        Ok(Featurizer { ngrams, space })
    }

    pub fn transform(&self, text: &str) -> SparseVector {
        vectorize(&self.ngrams.extract(text), &self.space)
    }

    pub fn dim(&self) -> usize {
        self.space.len()
    }
}

/// Sparse vector with entries sorted by index and no stored zeros.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SparseVector {
    entries: Vec<(u32, f64)>,
}

impl SparseVector {
    /// Builds from arbitrary `(index, weight)` pairs, summing duplicates and
    /// dropping zeros.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (u32, f64)>) -> Self {
        let mut entries: Vec<(u32, f64)> = pairs.into_iter().collect();
        entries.sort_by_key(|&(i, _)| i);
        let mut merged: Vec<(u32, f64)> = Vec::with_capacity(entries.len());
        for (i, w) in entries {
            match merged.last_mut() {
                Some((j, acc)) if *j == i => *acc += w,
                _ => merged.push((i, w)),
            }
        }
        merged.retain(|&(_, w)| w != 0.0);
        SparseVector { entries: merged }
    }

    pub fn entries(&self) -> &[(u32, f64)] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn dot_dense(&self, dense: &[f64]) -> f64 {
        self.entries.iter().map(|&(i, w)| w * dense[i as usize]).sum()
    }

    pub fn dot(&self, other: &SparseVector) -> f64 {
        let (mut a, mut b) = (self.entries.iter().peekable(), other.entries.iter().peekable());
        let mut acc = 0.0;
        while let (Some(&&(i, x)), Some(&&(j, y))) = (a.peek(), b.peek()) {
            match i.cmp(&j) {
                std::cmp::Ordering::Less => {
                    a.next();
                }
                std::cmp::Ordering::Greater => {
                    b.next();
                }
                std::cmp::Ordering::Equal => {
                    acc += x * y;
                    a.next();
                    b.next();
                }
            }
        }
        acc
    }

    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|&(_, w)| w * w).sum::<f64>().sqrt()
    }
}

/// Feature string to dense index, indices assigned in first-seen order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FeatureSpace {
    vocab: IndexSet<String>,
}

impl FeatureSpace {
    pub fn len(&self) -> usize {
        self.vocab.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vocab.is_empty()
    }

    pub fn index_of(&self, feature: &str) -> Option<usize> {
        self.vocab.get_index_of(feature)
    }

    pub fn feature(&self, index: usize) -> Option<&str> {
        self.vocab.get_index(index).map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &str)> {
        self.vocab.iter().enumerate().map(|(i, f)| (i, f.as_str()))
    }

    pub fn write_tsv(&self, mut writer: impl Write) -> Result<()> {
        for (i, f) in self.iter() {
            writeln!(writer, "{}\t{i}", escape(f))?;
        }
        Ok(())
    }

    pub fn read_tsv(mut reader: impl Read) -> Result<Self> {
        let mut buf = String::new();
        reader.read_to_string(&mut buf)?;
        let mut vocab = IndexSet::new();
        for (lineno, line) in buf.split('\n').enumerate() {
            if line.is_empty() {
                continue;
            }
            let lineno = lineno + 1;
            let (feature, index) = line
                .rsplit_once('\t')
                .ok_or_else(|| Error::parse(lineno, "expected `feature<TAB>index`"))?;
            let index: usize = index
                .parse()
                .map_err(|_| Error::parse(lineno, format!("bad index `{index}`")))?;
            if index != vocab.len() {
                return Err(Error::parse(
                    lineno,
                    format!("index {index} breaks the contiguous range (expected {})", vocab.len()),
                ));
            }
            let feature = unescape(feature).map_err(|m| Error::parse(lineno, m))?;
            if !vocab.insert(feature) {
                return Err(Error::parse(lineno, "duplicate feature"));
            }
        }
        Ok(FeatureSpace { vocab })
    }
}

/// Keeps features whose document frequency is at least `min_df`.
pub fn build_feature_space(corpus: &[Vec<String>], min_df: usize) -> Result<FeatureSpace> {
    if corpus.is_empty() {
        return Err(Error::Config("cannot build a feature space from an empty corpus".into()));
    }
    let mut df: indexmap::IndexMap<&str, usize> = indexmap::IndexMap::new();
    for doc in corpus {
        let mut seen = HashSet::new();
        for f in doc {
            if seen.insert(f.as_str()) {
                *df.entry(f.as_str()).or_insert(0) += 1;
            }
        }
    }
    let vocab: IndexSet<String> = df
        .into_iter()
        .filter(|&(_, n)| n >= min_df)
        .map(|(f, _)| f.to_string())
        .collect();
    if vocab.is_empty() {
        return Err(Error::EmptyVocabulary);
    }
    Ok(FeatureSpace { vocab })
}

/// Raw counts of in-vocabulary features; unknown features are dropped.
pub fn vectorize(features: &[String], space: &FeatureSpace) -> SparseVector {
    SparseVector::from_pairs(
        features
            .iter()
            .filter_map(|f| space.index_of(f))
            .map(|i| (i as u32, 1.0)),
    )
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out
}

fn unescape(s: &str) -> std::result::Result<String, String> {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('\\') => out.push('\\'),
            Some('t') => out.push('\t'),
            Some('n') => out.push('\n'),
            other => return Err(format!("bad escape `\\{}`", other.map(String::from).unwrap_or_default())),
        }
    }
    Ok(out)
}
