//! Tweets, gold labels and follower pairs, plus the TSV formats they are
//! read from.
//!
//! `tweets.tsv` has one record per line with four tab-separated fields:
//! `id`, `author`, `label`, `text`. The label is a language code (`es`),
//! a `/`-joined ambiguous set (`es/ca`), `und`, or empty for an unlabeled
//! tweet. `follows.tsv` holds one `user_a<TAB>user_b` pair per line.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::io::{self, Read, Write};

use crate::error::{Error, Result};
use crate::lang::{Lang, LabelDistribution};

/// Annotated language of a tweet.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GoldLabel {
    Single(Lang),
    /// Two or more acceptable languages.
    Ambiguous(BTreeSet<Lang>),
    Undecided,
}

impl GoldLabel {
    pub fn ambiguous(langs: impl IntoIterator<Item = Lang>) -> Result<Self> {
        let set: BTreeSet<Lang> = langs.into_iter().collect();
        if set.len() < 2 {
            return Err(Error::Config(
                "an ambiguous label needs at least two distinct languages".into(),
            ));
        }
        Ok(GoldLabel::Ambiguous(set))
    }

    pub fn members(&self) -> BTreeSet<Lang> {
        match self {
            GoldLabel::Single(l) => BTreeSet::from([*l]),
            GoldLabel::Ambiguous(s) => s.clone(),
            GoldLabel::Undecided => BTreeSet::new(),
        }
    }

    /// Whether `pred` is an acceptable answer for this gold label.
    pub fn accepts(&self, pred: Prediction) -> bool {
        match (self, pred) {
            (GoldLabel::Single(l), Prediction::Lang(p)) => *l == p,
            (GoldLabel::Ambiguous(s), Prediction::Lang(p)) => s.contains(&p),
            (GoldLabel::Undecided, Prediction::Und) => true,
            _ => false,
        }
    }

    /// Parse a label field. The empty string is handled by the caller.
    pub fn parse(field: &str) -> Result<Self> {
        if field == "und" {
            return Ok(GoldLabel::Undecided);
        }
        if field.contains('/') {
            let langs = field
                .split('/')
                .map(str::parse)
                .collect::<Result<Vec<Lang>>>()?;
            return GoldLabel::ambiguous(langs);
        }
        Ok(GoldLabel::Single(field.parse()?))
    }
}

impl fmt::Display for GoldLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GoldLabel::Single(l) => write!(f, "{l}"),
            GoldLabel::Ambiguous(s) => {
                let codes: Vec<&str> = s.iter().map(|l| l.code()).collect();
                f.write_str(&codes.join("/"))
            }
            GoldLabel::Undecided => f.write_str("und"),
        }
    }
}

/// A system output: a concrete language or `und`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Prediction {
    Lang(Lang),
    Und,
}

impl fmt::Display for Prediction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Prediction::Lang(l) => write!(f, "{l}"),
            Prediction::Und => f.write_str("und"),
        }
    }
}

impl std::str::FromStr for Prediction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "und" {
            Ok(Prediction::Und)
        } else {
            Ok(Prediction::Lang(s.parse()?))
        }
    }
}

/// Initial label distribution for a labeled training tweet.
///
/// `und` tweets seed uniformly over all six languages so they still carry
/// graph connectivity without favouring any language.
pub fn seed_distribution(gold: &GoldLabel) -> LabelDistribution {
    match gold {
        GoldLabel::Single(l) => LabelDistribution::point(*l),
        GoldLabel::Ambiguous(s) => LabelDistribution::uniform_over(s.iter().copied()),
        GoldLabel::Undecided => LabelDistribution::uniform(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tweet {
    pub id: String,
    pub author: String,
    pub text: String,
    pub gold: Option<GoldLabel>,
}

impl Tweet {
    pub fn new(id: impl Into<String>, author: impl Into<String>, text: impl Into<String>) -> Self {
        Tweet {
            id: id.into(),
            author: author.into(),
            text: text.into(),
            gold: None,
        }
    }

    pub fn with_gold(mut self, gold: GoldLabel) -> Self {
        self.gold = Some(gold);
        self
    }
}

/// Unordered user pair, stored with the lexicographically smaller id first.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FollowPair(String, String);

impl FollowPair {
    /// `None` for a self-loop.
    pub fn new(a: &str, b: &str) -> Option<Self> {
        match a.cmp(b) {
            std::cmp::Ordering::Less => Some(FollowPair(a.to_string(), b.to_string())),
            std::cmp::Ordering::Greater => Some(FollowPair(b.to_string(), a.to_string())),
            std::cmp::Ordering::Equal => None,
        }
    }

    pub fn users(&self) -> (&str, &str) {
        (&self.0, &self.1)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Dataset {
    pub tweets: Vec<Tweet>,
    pub follows: BTreeSet<FollowPair>,
}

impl Dataset {
    pub fn new(tweets: Vec<Tweet>, follows: BTreeSet<FollowPair>) -> Result<Self> {
        check_unique_ids(&tweets)?;
        Ok(Dataset { tweets, follows })
    }

    /// Concatenate tweet lists (e.g. train then test), rejecting id clashes.
    pub fn from_parts(parts: &[&[Tweet]], follows: BTreeSet<FollowPair>) -> Result<Self> {
        let tweets: Vec<Tweet> = parts.iter().flat_map(|p| p.iter().cloned()).collect();
        Dataset::new(tweets, follows)
    }
}

fn check_unique_ids(tweets: &[Tweet]) -> Result<()> {
    let mut seen = HashSet::with_capacity(tweets.len());
    for t in tweets {
        if !seen.insert(t.id.as_str()) {
            return Err(Error::Config(format!("duplicate tweet id `{}`", t.id)));
        }
    }
    Ok(())
}

fn read_utf8(mut reader: impl Read) -> Result<String> {
    let mut buf = String::new();
    reader.read_to_string(&mut buf).map_err(|e| {
        if e.kind() == io::ErrorKind::InvalidData {
            Error::parse(0, "input is not valid UTF-8")
        } else {
            Error::Io(e)
        }
    })?;
    Ok(buf)
}

/// Non-empty lines with 1-based line numbers. Only LF terminates a line.
fn records(buf: &str) -> impl Iterator<Item = (usize, &str)> {
    buf.split('\n')
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| !l.is_empty())
}

pub fn parse_tweets(reader: impl Read) -> Result<Vec<Tweet>> {
    let buf = read_utf8(reader)?;
    let mut tweets = Vec::new();
    let mut seen = HashSet::new();
    for (lineno, line) in records(&buf) {
        let fields: Vec<&str> = line.split('\t').collect();
        let [id, author, label, text] = fields[..] else {
            return Err(Error::parse(
                lineno,
                format!("expected 4 tab-separated fields, found {}", fields.len()),
            ));
        };
        if id.is_empty() {
            return Err(Error::parse(lineno, "empty tweet id"));
        }
        if author.is_empty() {
            return Err(Error::parse(lineno, "empty author"));
        }
        let gold = if label.is_empty() {
            None
        } else {
            Some(GoldLabel::parse(label).map_err(|e| Error::parse(lineno, e.to_string()))?)
        };
        if !seen.insert(id.to_string()) {
            return Err(Error::parse(lineno, format!("duplicate tweet id `{id}`")));
        }
        tweets.push(Tweet {
            id: id.to_string(),
            author: author.to_string(),
            text: text.to_string(),
            gold,
        });
    }
    Ok(tweets)
}

pub fn write_tweets(mut writer: impl Write, tweets: &[Tweet]) -> Result<()> {
    for t in tweets {
        let label = t.gold.as_ref().map(|g| g.to_string()).unwrap_or_default();
        writeln!(writer, "{}\t{}\t{}\t{}", t.id, t.author, label, t.text)?;
    }
    Ok(())
}

/// Reads follow pairs. Direction is discarded and duplicates collapse;
/// self-loops are skipped with a warning.
pub fn parse_follows(reader: impl Read) -> Result<BTreeSet<FollowPair>> {
    let buf = read_utf8(reader)?;
    let mut pairs = BTreeSet::new();
    for (lineno, line) in records(&buf) {
        let fields: Vec<&str> = line.split('\t').collect();
        let [a, b] = fields[..] else {
            return Err(Error::parse(
                lineno,
                format!("expected 2 tab-separated fields, found {}", fields.len()),
            ));
        };
        if a.is_empty() || b.is_empty() {
            return Err(Error::parse(lineno, "empty user id"));
        }
        match FollowPair::new(a, b) {
            Some(p) => {
                pairs.insert(p);
            }
            None => log::warn!("follows line {lineno}: self-loop on `{a}` skipped"),
        }
    }
    Ok(pairs)
}

pub fn write_follows(mut writer: impl Write, follows: &BTreeSet<FollowPair>) -> Result<()> {
    for p in follows {
        let (a, b) = p.users();
        writeln!(writer, "{a}\t{b}")?;
    }
    Ok(())
}
