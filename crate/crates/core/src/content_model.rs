//! One-vs-rest L2-regularized logistic regression over character n-gram
//! counts.
//!
//! Each language gets an independent binary problem
//! `0.5 * |w|^2 + C * sum_i log(1 + exp(-y_i (w . x_i + b)))` with the bias
//! left unregularized. Problems are minimized with L-BFGS under an Armijo
//! backtracking line search, so the objective never increases between
//! accepted iterates.

use std::collections::VecDeque;
use std::io::{BufRead, BufReader, Read, Write};

use rayon::prelude::*;

use crate::corpus::{GoldLabel, Tweet};
use crate::error::{Error, Result};
use crate::features::{FeatureSpace, Featurizer, NgramRange, SparseVector};
use crate::lang::{Lang, LabelDistribution};

const MODEL_MAGIC: &str = "langprop-content-model 1";
const LBFGS_MEMORY: usize = 10;
const ARMIJO_C1: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 60;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    /// Inverse regularization strength.
    pub reg_c: f64,
    /// Stop when the largest absolute gradient entry falls below this.
    pub tol: f64,
    pub max_iters: usize,
    /// Languages to train a classifier for, in output order.
    pub languages: Vec<Lang>,
    /// Ambiguous tweets count as positives for every member language. When
    /// false they are left out of training.
    pub ambiguous_as_positive: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            reg_c: 1.0,
            tol: 1e-6,
            max_iters: 500,
            languages: Lang::ALL.to_vec(),
            ambiguous_as_positive: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.reg_c > 0.0 && self.reg_c.is_finite()) {
            return Err(Error::Config(format!("reg_c must be positive, got {}", self.reg_c)));
        }
        if !(self.tol > 0.0) {
            return Err(Error::Config(format!("tol must be positive, got {}", self.tol)));
        }
        if self.max_iters == 0 {
            return Err(Error::Config("max_iters must be at least 1".into()));
        }
        if self.languages.is_empty() {
            return Err(Error::Config("no languages to train".into()));
        }
        Ok(())
    }
}

/// One binary training example: features and a label in {-1, +1}.
#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub x: SparseVector,
    pub y: f64,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + exp(z))` without overflow.
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// Regularized logistic loss of one binary problem.
pub fn logistic_objective(weights: &[f64], bias: f64, batch: &[Example], reg_c: f64) -> f64 {
    let reg = 0.5 * weights.iter().map(|w| w * w).sum::<f64>();
    let loss: f64 = batch
        .iter()
        .map(|ex| softplus(-ex.y * (ex.x.dot_dense(weights) + bias)))
        .sum();
    reg + reg_c * loss
}

/// Exact gradient of [`logistic_objective`]: `(d/dw, d/db)`.
pub fn logistic_gradient(
    weights: &[f64],
    bias: f64,
    batch: &[Example],
    reg_c: f64,
) -> (Vec<f64>, f64) {
    let mut gw = weights.to_vec();
    let mut gb = 0.0;
    for ex in batch {
        let margin = ex.y * (ex.x.dot_dense(weights) + bias);
        // d/dm softplus(-m) = -sigmoid(-m)
        let coef = -reg_c * ex.y * sigmoid(-margin);
        for &(i, v) in ex.x.entries() {
            gw[i as usize] += coef * v;
        }
        gb += coef;
    }
    (gw, gb)
}

/// Outcome of minimizing one binary problem.
#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    pub lang: Lang,
    pub iterations: usize,
    pub converged: bool,
    pub grad_max_norm: f64,
    /// Objective value at every accepted iterate, starting from zero weights.
    pub objective_trace: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BinaryFit {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub report: FitReport,
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Minimizes one binary problem from the zero vector.
pub fn fit_binary(lang: Lang, batch: &[Example], dim: usize, cfg: &TrainConfig) -> BinaryFit {
    // parameters packed as [w_0 .. w_{dim-1}, b]
    let eval = |theta: &[f64]| -> (f64, Vec<f64>) {
        let (w, b) = theta.split_at(dim);
        let f = logistic_objective(w, b[0], batch, cfg.reg_c);
        let (mut g, gb) = logistic_gradient(w, b[0], batch, cfg.reg_c);
        g.push(gb);
        (f, g)
    };

    let mut theta = vec![0.0; dim + 1];
    let (mut f, mut g) = eval(&theta);
    let mut trace = vec![f];
    let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(LBFGS_MEMORY);
    let mut iterations = 0;
    let mut converged = max_abs(&g) <= cfg.tol;

    while !converged && iterations < cfg.max_iters {
        let mut dir = lbfgs_direction(&g, &history);
        let mut slope = dot(&g, &dir);
        if !(slope < 0.0) {
            history.clear();
            dir = g.iter().map(|x| -x).collect();
            slope = -dot(&g, &g);
        }
        let mut step = if history.is_empty() {
            1.0 / max_abs(&g).max(1.0)
        } else {
            1.0
        };

        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            let candidate: Vec<f64> = theta.iter().zip(&dir).map(|(t, d)| t + step * d).collect();
            let (fc, gc) = eval(&candidate);
            if fc <= f + ARMIJO_C1 * step * slope {
                accepted = Some((candidate, fc, gc));
                break;
            }
            step *= 0.5;
        }
        let Some((next, fn_, gn)) = accepted else {
            if history.is_empty() {
                // no descent possible even along -g: numerically at the optimum
                break;
            }
            history.clear();
            continue;
        };

        let s: Vec<f64> = next.iter().zip(&theta).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&y, &y).sqrt() * dot(&s, &s).sqrt() {
            if history.len() == LBFGS_MEMORY {
                history.pop_front();
            }
            history.push_back((s, y, 1.0 / sy));
        }
        theta = next;
        f = fn_;
        g = gn;
        trace.push(f);
        iterations += 1;
        converged = max_abs(&g) <= cfg.tol;
    }

    if !converged {
        log::warn!(
            "logistic regression for `{lang}` stopped after {iterations} iterations with gradient {:.3e}",
            max_abs(&g)
        );
    }
    let bias = theta.pop().expect("bias slot");
    BinaryFit {
        weights: theta,
        bias,
        report: FitReport {
            lang,
            iterations,
            converged,
            grad_max_norm: max_abs(&g),
            objective_trace: trace,
        },
    }
}

/// Two-loop recursion for the L-BFGS search direction.
fn lbfgs_direction(g: &[f64], history: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
    let mut q = g.to_vec();
    let mut alphas = Vec::with_capacity(history.len());
    for (s, y, rho) in history.iter().rev() {
        let a = rho * dot(s, &q);
        q.iter_mut().zip(y).for_each(|(qi, yi)| *qi -= a * yi);
        alphas.push(a);
    }
    if let Some((s, y, _)) = history.back() {
        let gamma = dot(s, y) / dot(y, y);
        q.iter_mut().for_each(|qi| *qi *= gamma);
    }
    for ((s, y, rho), a) in history.iter().zip(alphas.into_iter().rev()) {
        let b = rho * dot(y, &q);
        q.iter_mut().zip(s).for_each(|(qi, si)| *qi += (a - b) * si);
    }
    q.iter_mut().for_each(|qi| *qi = -*qi);
    q
}

#[derive(Debug, Clone, PartialEq)]
pub struct LanguageWeights {
    pub lang: Lang,
    pub weights: Vec<f64>,
    pub bias: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContentModel {
    pub featurizer: Featurizer,
    pub reg_c: f64,
    pub classes: Vec<LanguageWeights>,
}

/// Binary labels for `lang`, or `None` if the tweet is not used for it.
fn binary_label(gold: &GoldLabel, lang: Lang, cfg: &TrainConfig) -> Option<f64> {
    match gold {
        GoldLabel::Single(l) => Some(if *l == lang { 1.0 } else { -1.0 }),
        GoldLabel::Ambiguous(s) if cfg.ambiguous_as_positive => {
            Some(if s.contains(&lang) { 1.0 } else { -1.0 })
        }
        GoldLabel::Ambiguous(_) | GoldLabel::Undecided => None,
    }
}

/// Trains one classifier per configured language on the labeled tweets.
pub fn train(
    tweets: &[Tweet],
    featurizer: Featurizer,
    cfg: &TrainConfig,
) -> Result<(ContentModel, Vec<FitReport>)> {
    cfg.validate()?;
    let labeled: Vec<(&GoldLabel, SparseVector)> = tweets
        .iter()
        .filter_map(|t| t.gold.as_ref().map(|g| (g, featurizer.transform(&t.text))))
        .collect();

    let mut problems = Vec::with_capacity(cfg.languages.len());
    for &lang in &cfg.languages {
        let batch: Vec<Example> = labeled
            .iter()
            .filter_map(|(g, x)| binary_label(g, lang, cfg).map(|y| Example { x: x.clone(), y }))
            .collect();
        if !batch.iter().any(|e| e.y > 0.0) {
            return Err(Error::NoPositives(lang));
        }
        if !batch.iter().any(|e| e.y < 0.0) {
            return Err(Error::NoNegatives(lang));
        }
        problems.push((lang, batch));
    }

    let dim = featurizer.dim();
    let fits: Vec<BinaryFit> = problems
        .par_iter()
        .map(|(lang, batch)| fit_binary(*lang, batch, dim, cfg))
        .collect();

    let mut reports = Vec::with_capacity(fits.len());
    let classes = fits
        .into_iter()
        .map(|fit| {
            reports.push(fit.report.clone());
            LanguageWeights {
                lang: fit.report.lang,
                weights: fit.weights,
                bias: fit.bias,
            }
        })
        .collect();
    Ok((
        ContentModel {
            featurizer,
            reg_c: cfg.reg_c,
            classes,
        },
        reports,
    ))
}

impl ContentModel {
    pub fn languages(&self) -> Vec<Lang> {
        self.classes.iter().map(|c| c.lang).collect()
    }

    /// Per-language sigmoid scores; languages without a classifier score 0.
    pub fn predict_scores(&self, text: &str) -> LabelDistribution {
        self.scores_for_vector(&self.featurizer.transform(text))
    }

    pub fn scores_for_vector(&self, x: &SparseVector) -> LabelDistribution {
        let mut out = LabelDistribution::zeros();
        for c in &self.classes {
            out.set(c.lang, sigmoid(x.dot_dense(&c.weights) + c.bias));
        }
        out
    }

    /// Normalized content distribution for a text.
    pub fn predict(&self, text: &str) -> LabelDistribution {
        normalize(&self.predict_scores(text))
    }

    /// Writes the weights file. The feature space is persisted separately.
    pub fn write(&self, mut w: impl Write) -> Result<()> {
        let langs: Vec<&str> = self.classes.iter().map(|c| c.lang.code()).collect();
        writeln!(w, "{MODEL_MAGIC}")?;
        writeln!(w, "languages\t{}", langs.join(","))?;
        writeln!(w, "dimension\t{}", self.featurizer.dim())?;
        writeln!(w, "reg_c\t{}", self.reg_c)?;
        writeln!(w, "ngrams\t{}\t{}", self.featurizer.ngrams.min, self.featurizer.ngrams.max)?;
        for c in &self.classes {
            let mut line = String::with_capacity(c.weights.len() * 8);
            for x in &c.weights {
                line.push_str(&x.to_string());
                line.push(' ');
            }
            line.push_str(&c.bias.to_string());
            writeln!(w, "{line}")?;
        }
        Ok(())
    }

    pub fn read(r: impl Read, space: FeatureSpace) -> Result<Self> {
        let mut lines = BufReader::new(r).lines().enumerate().map(|(i, l)| (i + 1, l));
        let mut next = |what: &str| -> Result<(usize, String)> {
            match lines.next() {
                Some((n, l)) => Ok((n, l?)),
                None => Err(Error::parse(0, format!("model file ends before {what}"))),
            }
        };
        let (n, magic) = next("header")?;
        if magic != MODEL_MAGIC {
            return Err(Error::parse(n, "not a content model file"));
        }
        let field = |(n, line): (usize, String), key: &str| -> Result<(usize, Vec<String>)> {
            let mut parts = line.split('\t').map(str::to_string);
            if parts.next().as_deref() != Some(key) {
                return Err(Error::parse(n, format!("expected `{key}` header")));
            }
            Ok((n, parts.collect()))
        };
        let (n, langs) = field(next("languages")?, "languages")?;
        let langs: Vec<Lang> = langs
            .first()
            .ok_or_else(|| Error::parse(n, "missing language list"))?
            .split(',')
            .map(str::parse)
            .collect::<Result<_>>()
            .map_err(|e| Error::parse(n, e.to_string()))?;
        let num = |n: usize, v: Option<&String>| -> Result<f64> {
            v.and_then(|s| s.parse::<f64>().ok())
                .ok_or_else(|| Error::parse(n, "bad numeric header value"))
        };
        let (n, dim) = field(next("dimension")?, "dimension")?;
        let dim = num(n, dim.first())? as usize;
        let (n, c) = field(next("reg_c")?, "reg_c")?;
        let reg_c = num(n, c.first())?;
        let (n, ng) = field(next("ngrams")?, "ngrams")?;
        let ngrams = NgramRange {
            min: num(n, ng.first())? as usize,
            max: num(n, ng.get(1))? as usize,
        };
        ngrams.validate()?;
        if dim != space.len() {
            return Err(Error::ModelMismatch(format!(
                "model dimension {dim} but feature space has {} entries",
                space.len()
            )));
        }
        let mut classes = Vec::with_capacity(langs.len());
        for lang in langs {
            let (n, line) = next("weights")?;
            let mut values = line
                .split(' ')
                .map(|s| s.parse::<f64>().map_err(|_| Error::parse(n, format!("bad weight `{s}`"))))
                .collect::<Result<Vec<f64>>>()?;
            if values.len() != dim + 1 {
                return Err(Error::parse(
                    n,
                    format!("expected {} values, found {}", dim + 1, values.len()),
                ));
            }
            let bias = values.pop().expect("length checked");
            classes.push(LanguageWeights {
                lang,
                weights: values,
                bias,
            });
        }
        Ok(ContentModel {
            featurizer: Featurizer { ngrams, space },
            reg_c,
            classes,
        })
    }
}

/// Divide-by-sum normalization; all-zero scores become uniform.
pub fn normalize(scores: &LabelDistribution) -> LabelDistribution {
    scores.normalized()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::build_feature_space;
    use approx::assert_abs_diff_eq;

    fn sv(pairs: &[(u32, f64)]) -> SparseVector {
        SparseVector::from_pairs(pairs.iter().copied())
    }

    #[test]
    fn sigmoid_is_stable() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!(sigmoid(800.0) == 1.0 && sigmoid(-800.0) >= 0.0);
        assert!((softplus(-800.0)).abs() < 1e-300 + 1e-12);
        assert_abs_diff_eq!(softplus(800.0), 800.0);
    }

    #[test]
    fn balanced_zero_weights_have_zero_bias_gradient() {
        let batch = vec![
            Example { x: sv(&[(0, 1.0)]), y: 1.0 },
            Example { x: sv(&[(1, 2.0)]), y: -1.0 },
        ];
        let (_, gb) = logistic_gradient(&[0.0, 0.0], 0.0, &batch, 1.0);
        assert_eq!(gb, 0.0);
    }

    #[test]
    fn single_example_gradient_closed_form() {
        // m = y (w.x + b) = 1 * (0.5*2 - 0.25*1 + 0.1) = 0.85
        let batch = vec![Example { x: sv(&[(0, 2.0), (1, 1.0)]), y: 1.0 }];
        let w = [0.5, -0.25, 0.3];
        let (gw, gb) = logistic_gradient(&w, 0.1, &batch, 2.0);
        let s = 1.0 / (1.0 + 0.85f64.exp()); // sigmoid(-0.85)
        assert_abs_diff_eq!(gw[0], 0.5 - 2.0 * s * 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(gw[1], -0.25 - 2.0 * s * 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(gw[2], 0.3, epsilon = 1e-15);
        assert_abs_diff_eq!(gb, -2.0 * s, epsilon = 1e-15);
    }

    #[test]
    fn zero_weights_score_one_half() {
        let space = build_feature_space(&[vec!["ab".to_string()]], 1).unwrap();
        let model = ContentModel {
            featurizer: Featurizer { ngrams: NgramRange::default(), space },
            reg_c: 1.0,
            classes: Lang::ALL
                .iter()
                .map(|&lang| LanguageWeights { lang, weights: vec![0.0], bias: 0.0 })
                .collect(),
        };
        let s = model.predict_scores("anything");
        for l in Lang::ALL {
            assert_eq!(s.get(l), 0.5);
        }
        assert_eq!(model.predict("x"), LabelDistribution::uniform());
    }

    #[test]
    fn hand_set_weights_match_direct_sigmoid() {
        let corpus = vec![vec!["ab".to_string(), "cd".to_string()]];
        let space = build_feature_space(&corpus, 1).unwrap();
        let model = ContentModel {
            featurizer: Featurizer { ngrams: NgramRange { min: 2, max: 2 }, space },
            reg_c: 1.0,
            classes: vec![
                LanguageWeights { lang: Lang::Es, weights: vec![0.7, -0.2], bias: 0.1 },
                LanguageWeights { lang: Lang::Pt, weights: vec![40.0, 40.0], bias: 0.0 },
            ],
        };
        // "ab cd ab": ab x2, cd x1
        let s = model.predict_scores("ab cd ab");
        let z: f64 = 0.7 * 2.0 - 0.2 + 0.1;
        assert_abs_diff_eq!(s.get(Lang::Es), 1.0 / (1.0 + (-z).exp()), epsilon = 1e-15);
        assert_abs_diff_eq!(s.get(Lang::Pt), 1.0, epsilon = 1e-12);
        assert_eq!(s.get(Lang::Ca), 0.0);
        // empty text falls back to sigmoid(bias)
        assert_abs_diff_eq!(model.predict_scores("").get(Lang::Es), sigmoid(0.1));
    }

    #[test]
    fn normalize_examples() {
        let mut s = LabelDistribution::zeros();
        s.set(Lang::Es, 0.2);
        s.set(Lang::Ca, 0.2);
        let n = normalize(&s);
        assert_eq!(n.get(Lang::Es), 0.5);
        assert_eq!(n.get(Lang::Ca), 0.5);

        let n = normalize(&LabelDistribution::point(Lang::Es));
        assert_eq!(n, LabelDistribution::point(Lang::Es));

        let n = normalize(&LabelDistribution::from_array([0.5; 6]));
        assert_eq!(n, LabelDistribution::uniform());
        assert_eq!(normalize(&LabelDistribution::zeros()), LabelDistribution::uniform());
    }

    #[test]
    fn missing_positives_names_language() {
        let tweets = vec![
            Tweet::new("1", "u", "aa bb").with_gold(GoldLabel::Single(Lang::Es)),
            Tweet::new("2", "u", "cc dd").with_gold(GoldLabel::Single(Lang::Pt)),
        ];
        let f = Featurizer::fit(tweets.iter().map(|t| t.text.as_str()), NgramRange::default(), 1)
            .unwrap();
        let err = train(&tweets, f, &TrainConfig::default()).unwrap_err();
        assert!(matches!(err, Error::NoPositives(Lang::Ca)), "{err}");
    }

    #[test]
    fn rejects_bad_config() {
        let cfg = TrainConfig { reg_c: 0.0, ..Default::default() };
        assert!(cfg.validate().is_err());
        let cfg = TrainConfig { max_iters: 0, ..Default::default() };
        assert!(cfg.validate().is_err());
    }
}
