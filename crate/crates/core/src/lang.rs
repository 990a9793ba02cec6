//! Language inventory and label distributions.

use std::fmt;
use std::str::FromStr;

use crate::error::Error;

pub const NUM_LANGS: usize = 6;

/// One of the six concrete languages. Declaration order is the tie-break order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Lang {
    Es,
    Pt,
    Ca,
    En,
    Gl,
    Eu,
}

impl Lang {
    pub const ALL: [Lang; NUM_LANGS] = [Lang::Es, Lang::Pt, Lang::Ca, Lang::En, Lang::Gl, Lang::Eu];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Lang> {
        Self::ALL.get(i).copied()
    }

    pub fn code(self) -> &'static str {
        match self {
            Lang::Es => "es",
            Lang::Pt => "pt",
            Lang::Ca => "ca",
            Lang::En => "en",
            Lang::Gl => "gl",
            Lang::Eu => "eu",
        }
    }
}

impl fmt::Display for Lang {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for Lang {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Lang::ALL
            .iter()
            .copied()
            .find(|l| l.code() == s)
            .ok_or_else(|| Error::UnknownLanguage(s.to_string()))
    }
}

/// A non-negative score per language. Entries not set read as zero.
///
/// Used both for normalized distributions (content, social, seeds) and for
/// the unnormalized hybrid scores.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LabelDistribution {
    probs: [f64; NUM_LANGS],
}

impl LabelDistribution {
    pub fn zeros() -> Self {
        Self::default()
    }

    pub fn from_array(probs: [f64; NUM_LANGS]) -> Self {
        Self { probs }
    }

    pub fn uniform() -> Self {
        Self {
            probs: [1.0 / NUM_LANGS as f64; NUM_LANGS],
        }
    }

    pub fn point(lang: Lang) -> Self {
        let mut d = Self::zeros();
        d.probs[lang.index()] = 1.0;
        d
    }

    /// Uniform over `langs`; duplicates are counted once.
    pub fn uniform_over(langs: impl IntoIterator<Item = Lang>) -> Self {
        let mut d = Self::zeros();
        for l in langs {
            d.probs[l.index()] = 1.0;
        }
        d.normalized()
    }

    pub fn get(&self, lang: Lang) -> f64 {
        self.probs[lang.index()]
    }

    pub fn set(&mut self, lang: Lang, value: f64) {
        self.probs[lang.index()] = value;
    }

    pub fn as_array(&self) -> &[f64; NUM_LANGS] {
        &self.probs
    }

    pub fn sum(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// Divide by the sum. An all-zero input becomes the uniform distribution.
    pub fn normalized(&self) -> Self {
        let total = self.sum();
        if total > 0.0 {
            let mut probs = self.probs;
            probs.iter_mut().for_each(|p| *p /= total);
            Self { probs }
        } else {
            Self::uniform()
        }
    }

    /// Non-zero entries in language order.
    pub fn iter(&self) -> impl Iterator<Item = (Lang, f64)> + '_ {
        Lang::ALL
            .iter()
            .map(move |&l| (l, self.probs[l.index()]))
            .filter(|&(_, p)| p != 0.0)
    }

    /// `lang:value` pairs joined by commas, using the shortest exact float form.
    pub fn to_field(&self) -> String {
        self.iter()
            .map(|(l, p)| format!("{l}:{p}"))
            .collect::<Vec<_>>()
            .join(",")
    }

    pub fn parse_field(field: &str) -> Result<Self, Error> {
        let mut d = Self::zeros();
        for part in field.split(',').filter(|s| !s.is_empty()) {
            let (code, value) = part
                .split_once(':')
                .ok_or_else(|| Error::Config(format!("bad `lang:score` entry `{part}`")))?;
            let value: f64 = value
                .parse()
                .map_err(|_| Error::Config(format!("bad score in `{part}`")))?;
            if !(value >= 0.0) {
                return Err(Error::Config(format!("negative score in `{part}`")));
            }
            d.set(code.parse()?, value);
        }
        Ok(d)
    }
}
