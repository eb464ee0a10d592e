//! Turns tag paths, class paths and block text into lowercase word lists.

use std::collections::{HashMap, HashSet};
use std::sync::OnceLock;

use crate::resources::{self, TableError};
use crate::segmenter::TextBlock;

/// The three word strings of a block, each at most `n` tokens long.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct WordStrings {
    pub tag_words: Vec<String>,
    pub class_words: Vec<String>,
    pub text_words: Vec<String>,
}

impl WordStrings {
    pub fn lists(&self) -> [&[String]; 3] {
        [&self.tag_words, &self.class_words, &self.text_words]
    }
}

#[derive(Debug, Clone, Default)]
pub struct Stopwords(HashSet<String>);

impl Stopwords {
    pub fn parse(text: &str) -> Self {
        Self(
            resources::parse_word_list(text)
                .map(str::to_lowercase)
                .collect(),
        )
    }

    pub fn contains(&self, word: &str) -> bool {
        self.0.contains(word)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl FromIterator<String> for Stopwords {
    fn from_iter<I: IntoIterator<Item = String>>(iter: I) -> Self {
        Self(iter.into_iter().map(|w| w.to_lowercase()).collect())
    }
}

/// Splits text on anything that is not a letter or digit, lowercases, drops
/// stopwords and keeps the first `n` tokens.
pub fn lexicalize_text(text: &str, stopwords: &Stopwords, n: usize) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .filter(|t| !stopwords.contains(t))
        .take(n)
        .collect()
}

/// Tag phrases, class-name abbreviations and stopwords.
#[derive(Debug, Clone)]
pub struct Lexicon {
    tag_phrases: HashMap<String, Vec<String>>,
    abbreviations: HashMap<String, Vec<String>>,
    stopwords: Stopwords,
}

fn phrase_table(text: &str) -> Result<HashMap<String, Vec<String>>, TableError> {
    let mut table = HashMap::new();
    for (line, key, value) in resources::parse_pairs(text)? {
        let words: Vec<String> = value.split_whitespace().map(str::to_lowercase).collect();
        if words.is_empty() {
            return Err(TableError::Malformed {
                line,
                reason: format!("empty expansion for {key:?}"),
            });
        }
        table.insert(key.to_lowercase(), words);
    }
    Ok(table)
}

impl Lexicon {
    pub fn builtin() -> &'static Lexicon {
        static BUILTIN: OnceLock<Lexicon> = OnceLock::new();
        BUILTIN.get_or_init(|| {
            Self::from_tables(
                resources::TAG_PHRASES,
                resources::ABBREVIATIONS,
                resources::STOPWORDS,
            )
            .expect("embedded lexicon tables are well-formed")
        })
    }

    pub fn from_tables(
        tag_phrases: &str,
        abbreviations: &str,
        stopwords: &str,
    ) -> Result<Self, TableError> {
        Ok(Self {
            tag_phrases: phrase_table(tag_phrases)?,
            abbreviations: phrase_table(abbreviations)?,
            stopwords: Stopwords::parse(stopwords),
        })
    }

    pub fn with_stopwords(mut self, stopwords: Stopwords) -> Self {
        self.stopwords = stopwords;
        self
    }

    pub fn stopwords(&self) -> &Stopwords {
        &self.stopwords
    }

    pub fn lexicalize_tags<S: AsRef<str>>(&self, tags: &[S]) -> Vec<String> {
        let mut out = Vec::new();
        for tag in tags {
            let tag = tag.as_ref().to_lowercase();
            match self.tag_phrases.get(&tag) {
                Some(words) => out.extend(
                    words
                        .iter()
                        .filter(|w| !self.stopwords.contains(w))
                        .cloned(),
                ),
                None if !tag.is_empty() => out.push(tag),
                None => {}
            }
        }
        out
    }

    pub fn lexicalize_classes<S: AsRef<str>>(&self, classes: &[S]) -> Vec<String> {
        let mut out = Vec::new();
        for class in classes {
            for piece in class
                .as_ref()
                .split(|c: char| matches!(c, '-' | '_' | '.' | '/' | ':') || c.is_whitespace())
                .filter(|p| !p.is_empty())
            {
                if !piece.chars().all(char::is_alphanumeric) {
                    // Opaque identifier: kept whole, exempt from stopword removal.
                    out.push(piece.to_lowercase());
                    continue;
                }
                for word in split_camel(piece) {
                    let word = word.to_lowercase();
                    if word.chars().all(|c| c.is_numeric()) {
                        continue;
                    }
                    match self.abbreviations.get(&word) {
                        Some(expansion) => out.extend(
                            expansion
                                .iter()
                                .filter(|w| !self.stopwords.contains(w))
                                .cloned(),
                        ),
                        None if !self.stopwords.contains(&word) => out.push(word),
                        None => {}
                    }
                }
            }
        }
        out
    }

    pub fn lexicalize_text(&self, text: &str, n: usize) -> Vec<String> {
        lexicalize_text(text, &self.stopwords, n)
    }

    pub fn lexicalize_block(&self, block: &TextBlock, n: usize) -> WordStrings {
        let mut tag_words = self.lexicalize_tags(&block.tag_seq);
        let mut class_words = self.lexicalize_classes(&block.class_seq);
        tag_words.truncate(n);
        class_words.truncate(n);
        WordStrings {
            tag_words,
            class_words,
            text_words: self.lexicalize_text(&block.text, n),
        }
    }
}

/// Splits at lower→upper and letter↔digit boundaries, and before the last
/// capital of an acronym run followed by lowercase (`HTMLParser` → `HTML`, `Parser`).
fn split_camel(s: &str) -> Vec<&str> {
    let chars: Vec<(usize, char)> = s.char_indices().collect();
    let mut parts = Vec::new();
    let mut start = 0;
    for i in 1..chars.len() {
        let (at, c) = chars[i];
        let prev = chars[i - 1].1;
        let next = chars.get(i + 1).map(|&(_, c)| c);
        let boundary = (prev.is_lowercase() && c.is_uppercase())
            || (prev.is_alphabetic() && c.is_numeric())
            || (prev.is_numeric() && c.is_alphabetic())
            || (prev.is_uppercase() && c.is_uppercase() && next.is_some_and(char::is_lowercase));
        if boundary {
            parts.push(&s[start..at]);
            start = at;
        }
    }
    parts.push(&s[start..]);
    parts
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lex() -> &'static Lexicon {
        Lexicon::builtin()
    }

    #[test]
    fn tag_phrases() {
        assert_eq!(lex().lexicalize_tags(&["p"]), ["paragraph"]);
        assert_eq!(lex().lexicalize_tags(&["h1"]), ["primary", "headline"]);
        assert_eq!(lex().lexicalize_tags(&["div", "p"]), ["division", "paragraph"]);
        assert_eq!(lex().lexicalize_tags(&["x-card"]), ["x-card"]);
    }

    #[test]
    fn class_cleansing() {
        assert_eq!(
            lex().lexicalize_classes(&["story-feed__item"]),
            ["story", "feed", "item"]
        );
        assert_eq!(lex().lexicalize_classes(&["navBar2"]), ["navigation", "bar"]);
        assert!(lex().lexicalize_classes::<&str>(&[]).is_empty());
        assert_eq!(
            lex().lexicalize_classes(&["HTMLParser", "col-md-6", "ad_slot"]),
            ["html", "parser", "column", "md", "advertisement", "slot"]
        );
    }

    #[test]
    fn opaque_class_names_are_kept() {
        assert_eq!(lex().lexicalize_classes(&["c++", "is-active"]), ["c++", "active"]);
        // '#' survives splitting, so the piece bypasses stopword removal.
        assert_eq!(lex().lexicalize_classes(&["a#b"]), ["a#b"]);
    }

    #[test]
    fn scenario_text() {
        let words = lex().lexicalize_text("The US president visited the summit.", 50);
        assert_eq!(words, ["us", "president", "visited", "summit"]);
        assert!(lex().lexicalize_text("", 50).is_empty());
    }

    #[test]
    fn text_truncation() {
        let text: Vec<String> = (0..200).map(|i| format!("word{i}")).collect();
        let words = lex().lexicalize_text(&text.join(" "), 50);
        assert_eq!(words.len(), 50);
        assert_eq!(words[49], "word49");
    }

    #[test]
    fn camel_split() {
        assert_eq!(split_camel("navBar2"), ["nav", "Bar", "2"]);
        assert_eq!(split_camel("2col"), ["2", "col"]);
        assert_eq!(split_camel("IOStream"), ["IO", "Stream"]);
        assert_eq!(split_camel("plain"), ["plain"]);
    }

    #[test]
    fn builtin_tables() {
        assert!((150..=200).contains(&lex().stopwords().len()));
        assert!(lex().abbreviations.len() >= 60);
    }
}
