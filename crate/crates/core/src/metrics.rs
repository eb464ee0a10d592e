//! Block-level precision, recall and F1 with MAIN as the positive class.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::labeler::Label;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error("{pred} predicted pages but {gold} gold pages")]
    PageCount { pred: usize, gold: usize },
    #[error("page {page}: {pred} predicted labels but {gold} gold labels")]
    LengthMismatch { page: usize, pred: usize, gold: usize },
}

/// Confusion counts with MAIN as the positive class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
}

impl Counts {
    pub fn tally(pred: &[Label], gold: &[Label]) -> Self {
        let mut c = Self::default();
        for (&p, &g) in pred.iter().zip(gold) {
            match (p, g) {
                (Label::Main, Label::Main) => c.tp += 1,
                (Label::Main, Label::Boilerplate) => c.fp += 1,
                (Label::Boilerplate, Label::Main) => c.fn_ += 1,
                (Label::Boilerplate, Label::Boilerplate) => c.tn += 1,
            }
        }
        c
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }

    pub fn add(&mut self, other: Counts) {
        self.tp += other.tp;
        self.fp += other.fp;
        self.fn_ += other.fn_;
        self.tn += other.tn;
    }

    /// `(precision, recall, f1)`. With no positives in either prediction or
    /// gold all three are 1; otherwise an undefined ratio is 0.
    pub fn scores(&self) -> (f64, f64, f64) {
        if self.tp + self.fp + self.fn_ == 0 {
            return (1.0, 1.0, 1.0);
        }
        let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
        let p = ratio(self.tp, self.tp + self.fp);
        let r = ratio(self.tp, self.tp + self.fn_);
        (p, r, f1(p, r))
    }
}

/// Harmonic mean of precision and recall, 0 when both are 0.
pub fn f1(precision: f64, recall: f64) -> f64 {
    if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PageReport {
    pub id: String,
    #[serde(flatten)]
    pub counts: Counts,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    #[serde(flatten)]
    pub counts: Counts,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Unweighted means of the per-page scores.
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    pub pages: Vec<PageReport>,
}

/// Scores aligned predicted and gold pages. Page ids default to the page
/// index; use [`evaluate_pages`] to supply them.
pub fn evaluate<P: AsRef<[Label]>, G: AsRef<[Label]>>(
    pred: &[P],
    gold: &[G],
) -> Result<EvalReport, MetricsError> {
    let ids: Vec<String> = (0..gold.len()).map(|i| i.to_string()).collect();
    evaluate_pages(&ids, pred, gold)
}

pub fn evaluate_pages<P: AsRef<[Label]>, G: AsRef<[Label]>>(
    ids: &[String],
    pred: &[P],
    gold: &[G],
) -> Result<EvalReport, MetricsError> {
    if pred.len() != gold.len() || ids.len() != gold.len() {
        return Err(MetricsError::PageCount {
            pred: pred.len(),
            gold: gold.len(),
        });
    }
    let mut total = Counts::default();
    let mut pages = Vec::with_capacity(gold.len());
    for (i, ((id, p), g)) in ids.iter().zip(pred).zip(gold).enumerate() {
        let (p, g) = (p.as_ref(), g.as_ref());
        if p.len() != g.len() {
            return Err(MetricsError::LengthMismatch {
                page: i,
                pred: p.len(),
                gold: g.len(),
            });
        }
        let counts = Counts::tally(p, g);
        total.add(counts);
        let (precision, recall, f1) = counts.scores();
        pages.push(PageReport {
            id: id.clone(),
            counts,
            precision,
            recall,
            f1,
        });
    }
    let (precision, recall, f1) = total.scores();
    let mean = |f: fn(&PageReport) -> f64| {
        if pages.is_empty() {
            1.0
        } else {
            pages.iter().map(f).sum::<f64>() / pages.len() as f64
        }
    };
    Ok(EvalReport {
        counts: total,
        precision,
        recall,
        f1,
        macro_precision: mean(|p| p.precision),
        macro_recall: mean(|p| p.recall),
        macro_f1: mean(|p| p.f1),
        pages,
    })
}
