//! Bi-LSTM over block features and a linear-chain CRF on top.

mod crf;
mod lstm;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use crf::{Crf, Emission, Marginals, Transitions};
pub use lstm::{BiLstm, BiLstmCache, Lstm, LstmCache};

/// Number of labels in the chain.
pub const LABELS: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Boilerplate = 0,
    Main = 1,
}

impl Label {
    pub const ALL: [Label; LABELS] = [Label::Boilerplate, Label::Main];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Self {
        Self::ALL[i]
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Boilerplate => "boilerplate",
            Label::Main => "main",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown label {0:?}, expected \"main\" or \"boilerplate\"")]
pub struct ParseLabelError(pub String);

impl FromStr for Label {
    type Err = ParseLabelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "main" => Ok(Label::Main),
            "boilerplate" => Ok(Label::Boilerplate),
            _ => Err(ParseLabelError(s.to_string())),
        }
    }
}

pub type LabelSequence = Vec<Label>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LabelerError {
    #[error("{labels} gold labels for {blocks} blocks")]
    LengthMismatch { labels: usize, blocks: usize },
    #[error(transparent)]
    Shape(#[from] crate::tensor::ShapeError),
}
