//! Shared-task scoring: per-category precision, recall and F with credit for
//! any member of an ambiguous gold set, plus macro averages.
//!
//! Categories are the six languages, `amb` and `und`. Counting rules:
//!
//! * single gold `l`: predicting `l` is a TP for `l`; anything else is a FN
//!   for `l` and a FP for the predicted category;
//! * ambiguous gold `S`: predicting a member of `S` is a TP for `amb`;
//!   anything else is a FN for `amb` and a FP for the predicted category;
//! * `und` gold: predicting `und` is a TP for `und`; anything else is a FN
//!   for `und` and a FP for the predicted language.

use std::collections::{HashMap, HashSet};
use std::fmt::{self, Write as _};
use std::io::Write;

use crate::corpus::{GoldLabel, Prediction};
use crate::error::{Error, Result};
use crate::lang::Lang;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Category {
    Lang(Lang),
    Amb,
    Und,
}

impl Category {
    pub const ALL: [Category; 8] = [
        Category::Lang(Lang::Es),
        Category::Lang(Lang::Pt),
        Category::Lang(Lang::Ca),
        Category::Lang(Lang::En),
        Category::Lang(Lang::Gl),
        Category::Lang(Lang::Eu),
        Category::Amb,
        Category::Und,
    ];

    fn slot(self) -> usize {
        match self {
            Category::Lang(l) => l.index(),
            Category::Amb => 6,
            Category::Und => 7,
        }
    }

    fn of_prediction(p: Prediction) -> Self {
        match p {
            Prediction::Lang(l) => Category::Lang(l),
            Prediction::Und => Category::Und,
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Category::Lang(l) => write!(f, "{l}"),
            Category::Amb => f.write_str("amb"),
            Category::Und => f.write_str("und"),
        }
    }
}

/// Harmonic mean of two percentages; zero when both are zero.
pub fn f_score(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Counts {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
}

impl Counts {
    /// A category with no gold items and no predictions.
    pub fn is_empty(&self) -> bool {
        self.tp + self.fp + self.fn_ == 0
    }
}

/// One row of the report, metrics in percent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CategoryRow {
    pub category: Category,
    pub counts: Counts,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl CategoryRow {
    pub fn from_counts(category: Category, counts: Counts) -> Self {
        let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { 100.0 * num as f64 / den as f64 };
        let precision = ratio(counts.tp, counts.tp + counts.fp);
        let recall = ratio(counts.tp, counts.tp + counts.fn_);
        CategoryRow {
            category,
            counts,
            precision,
            recall,
            f1: f_score(precision, recall),
        }
    }
}

/// Unweighted means of `(precision, recall, f1)` over the given rows.
pub fn macro_average(rows: &[(f64, f64, f64)]) -> (f64, f64, f64) {
    if rows.is_empty() {
        return (0.0, 0.0, 0.0);
    }
    let n = rows.len() as f64;
    let (p, r, f) = rows
        .iter()
        .fold((0.0, 0.0, 0.0), |(p, r, f), &(a, b, c)| (p + a, r + b, f + c));
    (p / n, r / n, f / n)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationReport {
    /// All eight categories in table order.
    pub rows: Vec<CategoryRow>,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
}

impl EvaluationReport {
    pub fn row(&self, c: Category) -> &CategoryRow {
        &self.rows[c.slot()]
    }

    /// Rows that take part in the macro average.
    pub fn active_rows(&self) -> impl Iterator<Item = &CategoryRow> {
        self.rows.iter().filter(|r| !r.counts.is_empty())
    }

    /// Plain-text table in the layout of the shared-task results.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:<6} {:>7} {:>7} {:>7}", "", "P", "R", "F");
        for (i, r) in self.rows.iter().enumerate() {
            if i == 6 {
                let _ = writeln!(out, "{}", "-".repeat(30));
            }
            if r.counts.is_empty() {
                let _ = writeln!(out, "{:<6} {:>7} {:>7} {:>7}", r.category.to_string(), "-", "-", "-");
            } else {
                let _ = writeln!(
                    out,
                    "{:<6} {:>7.2} {:>7.2} {:>7.2}",
                    r.category.to_string(),
                    r.precision,
                    r.recall,
                    r.f1
                );
            }
        }
        let _ = writeln!(out, "{}", "-".repeat(30));
        let _ = writeln!(
            out,
            "{:<6} {:>7.2} {:>7.2} {:>7.2}",
            "avg", self.macro_precision, self.macro_recall, self.macro_f1
        );
        out
    }

    /// TSV `category, P, R, F` for every active category plus `avg`.
    pub fn write_tsv(&self, mut w: impl Write) -> Result<()> {
        writeln!(w, "category\tP\tR\tF")?;
        for r in self.active_rows() {
            writeln!(w, "{}\t{:.2}\t{:.2}\t{:.2}", r.category, r.precision, r.recall, r.f1)?;
        }
        writeln!(
            w,
            "avg\t{:.2}\t{:.2}\t{:.2}",
            self.macro_precision, self.macro_recall, self.macro_f1
        )?;
        Ok(())
    }
}

/// Scores predictions against gold labels.
///
/// Every gold id needs exactly one prediction and every prediction must
/// refer to a gold id. Categories with neither gold items nor predictions are
/// left out of the macro average.
pub fn score_predictions(gold: &[(String, GoldLabel)], predicted: &[(String, Prediction)]) -> Result<EvaluationReport> {
    let mut by_id: HashMap<&str, Prediction> = HashMap::with_capacity(predicted.len());
    let mut duplicates = Vec::new();
    for (id, p) in predicted {
        if by_id.insert(id.as_str(), *p).is_some() {
            duplicates.push(id.clone());
        }
    }
    let gold_ids: HashSet<&str> = gold.iter().map(|(id, _)| id.as_str()).collect();
    let missing: Vec<&str> = gold
        .iter()
        .map(|(id, _)| id.as_str())
        .filter(|id| !by_id.contains_key(id))
        .collect();
    let unknown: Vec<&str> = predicted
        .iter()
        .map(|(id, _)| id.as_str())
        .filter(|id| !gold_ids.contains(id))
        .collect();
    if !duplicates.is_empty() || !missing.is_empty() || !unknown.is_empty() {
        let mut msg = Vec::new();
        if !duplicates.is_empty() {
            msg.push(format!("duplicate predictions for {}", duplicates.join(", ")));
        }
        if !missing.is_empty() {
            msg.push(format!("no prediction for {}", missing.join(", ")));
        }
        if !unknown.is_empty() {
            msg.push(format!("predictions for unknown ids {}", unknown.join(", ")));
        }
        return Err(Error::IdMismatch(msg.join("; ")));
    }

    let mut counts = [Counts::default(); 8];
    for (id, g) in gold {
        let pred = by_id[id.as_str()];
        let gold_cat = match g {
            GoldLabel::Single(l) => Category::Lang(*l),
            GoldLabel::Ambiguous(_) => Category::Amb,
            GoldLabel::Undecided => Category::Und,
        };
        if g.accepts(pred) {
            counts[gold_cat.slot()].tp += 1;
        } else {
            counts[gold_cat.slot()].fn_ += 1;
            counts[Category::of_prediction(pred).slot()].fp += 1;
        }
    }

    let rows: Vec<CategoryRow> = Category::ALL
        .iter()
        .map(|&c| CategoryRow::from_counts(c, counts[c.slot()]))
        .collect();
    let active: Vec<(f64, f64, f64)> = rows
        .iter()
        .filter(|r| !r.counts.is_empty())
        .map(|r| (r.precision, r.recall, r.f1))
        .collect();
    let (macro_precision, macro_recall, macro_f1) = macro_average(&active);
    Ok(EvaluationReport {
        rows,
        macro_precision,
        macro_recall,
        macro_f1,
    })
}
