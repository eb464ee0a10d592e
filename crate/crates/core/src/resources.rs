//! Embedded data tables and their on-disk overrides.
//!
//! Every table can be replaced by a file of the same name in a data
//! directory (see [`DataDir`]); files that are absent fall back to the
//! embedded copy.

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::dom::TagGroups;
use crate::lexicalizer::Lexicon;

pub const TAG_GROUPS: &str = include_str!("../data/tag_groups.tsv");
pub const TAG_PHRASES: &str = include_str!("../data/tag_phrases.tsv");
pub const ABBREVIATIONS: &str = include_str!("../data/abbreviations.tsv");
pub const STOPWORDS: &str = include_str!("../data/stopwords.txt");

pub const TAG_GROUPS_FILE: &str = "tag_groups.tsv";
pub const TAG_PHRASES_FILE: &str = "tag_phrases.tsv";
pub const ABBREVIATIONS_FILE: &str = "abbreviations.tsv";
pub const STOPWORDS_FILE: &str = "stopwords.txt";

/// Environment variable naming the data directory.
pub const DATA_DIR_ENV: &str = "SEMTEXT_DATA_DIR";

#[derive(Debug, Error)]
pub enum TableError {
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    InFile {
        path: PathBuf,
        #[source]
        source: Box<TableError>,
    },
}

/// Splits a `key<TAB>value` table into `(line number, key, value)` triples.
pub(crate) fn parse_pairs(text: &str) -> Result<Vec<(usize, &str, &str)>, TableError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('\t') else {
            return Err(TableError::Malformed {
                line: i + 1,
                reason: "expected key<TAB>value".into(),
            });
        };
        let key = key.trim();
        if key.is_empty() {
            return Err(TableError::Malformed {
                line: i + 1,
                reason: "empty key".into(),
            });
        }
        out.push((i + 1, key, value.trim()));
    }
    Ok(out)
}

/// One word per line; blank lines and `#` comments are skipped.
pub(crate) fn parse_word_list(text: &str) -> impl Iterator<Item = &str> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
}

/// A directory that may hold replacement data tables.
#[derive(Debug, Clone, Default)]
pub struct DataDir {
    root: Option<PathBuf>,
}

impl DataDir {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self {
            root: Some(root.into()),
        }
    }

    /// Uses `SEMTEXT_DATA_DIR` when set, otherwise only embedded tables.
    pub fn from_env() -> Self {
        match std::env::var_os(DATA_DIR_ENV) {
            Some(dir) if !dir.is_empty() => Self::new(dir),
            _ => Self::default(),
        }
    }

    pub fn root(&self) -> Option<&Path> {
        self.root.as_deref()
    }

    /// Reads `name` from the directory, if it is there.
    fn read(&self, name: &str) -> Result<Option<(PathBuf, String)>, TableError> {
        let Some(root) = &self.root else {
            return Ok(None);
        };
        let path = root.join(name);
        if !path.is_file() {
            return Ok(None);
        }
        std::fs::read_to_string(&path)
            .map(|s| Some((path.clone(), s)))
            .map_err(|source| TableError::Io { path, source })
    }

    fn load<T>(
        &self,
        name: &str,
        embedded: &str,
        parse: impl Fn(&str) -> Result<T, TableError>,
    ) -> Result<T, TableError> {
        match self.read(name)? {
            Some((path, text)) => parse(&text).map_err(|e| TableError::InFile {
                path,
                source: Box::new(e),
            }),
            None => parse(embedded),
        }
    }

    pub fn tag_groups(&self) -> Result<TagGroups, TableError> {
        self.load(TAG_GROUPS_FILE, TAG_GROUPS, TagGroups::parse)
    }

    pub fn lexicon(&self) -> Result<Lexicon, TableError> {
        let phrases = self.read(TAG_PHRASES_FILE)?;
        let abbreviations = self.read(ABBREVIATIONS_FILE)?;
        let stopwords = self.read(STOPWORDS_FILE)?;
        fn pick<'a>(file: &'a Option<(PathBuf, String)>, embedded: &'a str) -> &'a str {
            file.as_ref().map_or(embedded, |(_, s)| s.as_str())
        }
        Lexicon::from_tables(
            pick(&phrases, TAG_PHRASES),
            pick(&abbreviations, ABBREVIATIONS),
            pick(&stopwords, STOPWORDS),
        )
    }
}
