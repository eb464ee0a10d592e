//! Labeled pages in JSON Lines form, one page per line:
//!
//! ```json
//! {"id":"p1","blocks":[{"tags":["body","p"],"classes":[],"text":"…","label":"main"}]}
//! ```

use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::labeler::Label;
use crate::segmenter::{BlockSequence, TextBlock};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {source}")]
    Json {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
}

/// An ordered block sequence with one gold label per block.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledPage {
    pub id: String,
    pub blocks: Vec<TextBlock>,
    pub labels: Vec<Label>,
}

impl LabeledPage {
    pub fn new(id: impl Into<String>, blocks: Vec<TextBlock>, labels: Vec<Label>) -> Self {
        assert_eq!(blocks.len(), labels.len(), "one label per block");
        Self {
            id: id.into(),
            blocks,
            labels,
        }
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn sequence(&self) -> BlockSequence {
        BlockSequence {
            blocks: self.blocks.clone(),
            source_id: self.id.clone(),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct BlockRecord {
    tags: Vec<String>,
    #[serde(default)]
    classes: Vec<String>,
    text: String,
    label: Label,
}

#[derive(Serialize, Deserialize)]
struct PageRecord {
    id: String,
    blocks: Vec<BlockRecord>,
}

impl From<PageRecord> for LabeledPage {
    fn from(r: PageRecord) -> Self {
        let (blocks, labels) = r
            .blocks
            .into_iter()
            .map(|b| (TextBlock::detached(b.tags, b.classes, b.text), b.label))
            .unzip();
        Self {
            id: r.id,
            blocks,
            labels,
        }
    }
}

/// Parses every non-blank line into a page.
pub fn read_pages<R: BufRead>(reader: R) -> impl Iterator<Item = Result<LabeledPage, DatasetError>> {
    reader
        .lines()
        .enumerate()
        .filter_map(|(i, line)| {
            let line = match line {
                Ok(l) => l,
                Err(source) => {
                    return Some(Err(DatasetError::Io {
                        path: "<reader>".into(),
                        source,
                    }))
                }
            };
            if line.trim().is_empty() {
                return None;
            }
            Some(
                serde_json::from_str::<PageRecord>(&line)
                    .map(LabeledPage::from)
                    .map_err(|source| DatasetError::Json { line: i + 1, source }),
            )
        })
}

pub fn load_dataset(path: &Path) -> Result<Vec<LabeledPage>, DatasetError> {
    let file = std::fs::File::open(path).map_err(|source| DatasetError::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_pages(std::io::BufReader::new(file))
        .map(|r| {
            r.map_err(|e| match e {
                DatasetError::Io { source, .. } => DatasetError::Io {
                    path: path.display().to_string(),
                    source,
                },
                other => other,
            })
        })
        .collect()
}

pub fn write_page<W: Write>(mut writer: W, page: &LabeledPage) -> std::io::Result<()> {
    let record = PageRecord {
        id: page.id.clone(),
        blocks: page
            .blocks
            .iter()
            .zip(&page.labels)
            .map(|(b, &label)| BlockRecord {
                tags: b.tag_seq.clone(),
                classes: b.class_seq.clone(),
                text: b.text.clone(),
                label,
            })
            .collect(),
    };
    serde_json::to_writer(&mut writer, &record)?;
    writer.write_all(b"\n")
}

pub fn write_dataset<W: Write>(mut writer: W, pages: &[LabeledPage]) -> std::io::Result<()> {
    for page in pages {
        write_page(&mut writer, page)?;
    }
    writer.flush()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_documented_format() {
        let line = r#"{"id":"p1","blocks":[{"tags":["body","p"],"classes":["story"],"text":"Hello","label":"main"},{"tags":["nav"],"text":"Home","label":"boilerplate"}]}"#;
        let pages: Vec<_> = read_pages(format!("{line}\n\n").as_bytes())
            .collect::<Result<_, _>>()
            .unwrap();
        assert_eq!(pages.len(), 1);
        let p = &pages[0];
        assert_eq!(p.labels, [Label::Main, Label::Boilerplate]);
        assert_eq!(p.blocks[0].class_seq, ["story"]);
        assert!(p.blocks[1].class_seq.is_empty());

        let mut out = Vec::new();
        write_page(&mut out, p).unwrap();
        let again: Vec<_> = read_pages(out.as_slice()).collect::<Result<_, _>>().unwrap();
        assert_eq!(&again[0], p);
    }

    #[test]
    fn bad_label_reports_line() {
        let text = "\n{\"id\":\"x\",\"blocks\":[{\"tags\":[],\"text\":\"a\",\"label\":\"other\"}]}\n";
        let err = read_pages(text.as_bytes()).next().unwrap().unwrap_err();
        assert!(matches!(err, DatasetError::Json { line: 2, .. }), "{err}");
    }
}
