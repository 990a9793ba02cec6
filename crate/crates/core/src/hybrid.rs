//! Linear combination of content and social distributions and the final
//! argmax decision.

use std::io::{Read, Write};

use crate::corpus::Prediction;
use crate::error::{Error, Result};
use crate::lang::{Lang, LabelDistribution};

#[derive(Debug, Clone, PartialEq)]
pub struct HybridConfig {
    pub lambda1: f64,
    pub lambda2: f64,
    /// Predict `und` when the best normalized score is below this. Zero
    /// disables `und` output.
    pub und_threshold: f64,
}

impl Default for HybridConfig {
    fn default() -> Self {
        HybridConfig {
            lambda1: 0.5,
            lambda2: 0.5,
            und_threshold: 0.0,
        }
    }
}

impl HybridConfig {
    /// Content scores only.
    pub fn content_only() -> Self {
        HybridConfig {
            lambda1: 1.0,
            lambda2: 0.0,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda1 >= 0.0 && self.lambda2 >= 0.0) || !(self.lambda1 + self.lambda2 > 0.0) {
            return Err(Error::Config(format!(
                "lambdas must be non-negative and not both zero, got {} and {}",
                self.lambda1, self.lambda2
            )));
        }
        if !(0.0..1.0).contains(&self.und_threshold) {
            return Err(Error::Config(format!(
                "und_threshold must be in [0, 1), got {}",
                self.und_threshold
            )));
        }
        Ok(())
    }
}

/// `lambda1 * content + lambda2 * social`, per language.
pub fn combine(content: &LabelDistribution, social: &LabelDistribution, cfg: &HybridConfig) -> LabelDistribution {
    let mut out = LabelDistribution::zeros();
    for l in Lang::ALL {
        out.set(l, cfg.lambda1 * content.get(l) + cfg.lambda2 * social.get(l));
    }
    out
}

/// Argmax with ties going to the earlier language in `es, pt, ca, en, gl, eu`.
///
/// The `und` threshold is compared against the best score divided by
/// `lambda1 + lambda2`, so rescaling both lambdas never changes the output.
pub fn decide(scores: &LabelDistribution, cfg: &HybridConfig) -> Prediction {
    let mut best = Lang::ALL[0];
    for l in &Lang::ALL[1..] {
        if scores.get(*l) > scores.get(best) {
            best = *l;
        }
    }
    let scale = cfg.lambda1 + cfg.lambda2;
    if scores.get(best) / scale < cfg.und_threshold {
        Prediction::Und
    } else {
        Prediction::Lang(best)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionRecord {
    pub id: String,
    pub label: Prediction,
    pub scores: LabelDistribution,
}

/// TSV `tweet_id, label, lang:score,...` with scores descending, six decimals.
pub fn write_predictions(mut w: impl Write, records: &[PredictionRecord]) -> Result<()> {
    for r in records {
        let mut scores: Vec<(Lang, f64)> = Lang::ALL.iter().map(|&l| (l, r.scores.get(l))).collect();
        scores.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        let fields: Vec<String> = scores.iter().map(|(l, s)| format!("{l}:{s:.6}")).collect();
        writeln!(w, "{}\t{}\t{}", r.id, r.label, fields.join(","))?;
    }
    Ok(())
}

pub fn read_predictions(mut r: impl Read) -> Result<Vec<PredictionRecord>> {
    let mut buf = String::new();
    r.read_to_string(&mut buf)?;
    let mut out = Vec::new();
    for (lineno, line) in buf.split('\n').enumerate() {
        let lineno = lineno + 1;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let (id, label, scores) = match fields[..] {
            [id, label] => (id, label, ""),
            [id, label, scores] => (id, label, scores),
            _ => return Err(Error::parse(lineno, "expected `id<TAB>label<TAB>scores`")),
        };
        let label: Prediction = label.parse().map_err(|e: Error| Error::parse(lineno, e.to_string()))?;
        let scores = LabelDistribution::parse_field(scores).map_err(|e| Error::parse(lineno, e.to_string()))?;
        out.push(PredictionRecord {
            id: id.to_string(),
            label,
            scores,
        });
    }
    Ok(out)
}
