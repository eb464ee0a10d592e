//! Word vectors with a hashed character n-gram fallback, and padding of
//! word lists into fixed-size matrices.
//!
//! Out-of-vocabulary tokens are embedded as the mean of bucket vectors for
//! the character n-grams (lengths 3 to 6) of `<token>`. Bucket vectors are
//! not stored; each one is regenerated from a seeded hash when needed, which
//! makes the bucket table as large as desired at no memory cost.

use std::collections::HashMap;
use std::io::BufRead;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lexicalizer::WordStrings;
use crate::tensor::Matrix;

/// Dimension used when a vector file is empty.
pub const DEFAULT_DIM: usize = 50;

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {reason}")]
    Format { line: usize, reason: String },
    #[error("header declares dimension {header} but rows have {rows} values")]
    Dimension { header: usize, rows: usize },
}

/// Character n-gram hashing parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubwordConfig {
    pub buckets: u32,
    pub min_n: usize,
    pub max_n: usize,
    pub seed: u64,
}

impl Default for SubwordConfig {
    fn default() -> Self {
        Self {
            buckets: 1 << 20,
            min_n: 3,
            max_n: 6,
            seed: 0x5e57_7e47,
        }
    }
}

/// FNV-1a, 32 bit.
fn fnv1a(bytes: &[u8]) -> u32 {
    let mut h: u32 = 0x811c_9dc5;
    for &b in bytes {
        h ^= u32::from(b);
        h = h.wrapping_mul(0x0100_0193);
    }
    h
}

/// SplitMix64 step.
fn splitmix(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl SubwordConfig {
    /// Bucket indices of the n-grams of `<token>`, one per n-gram occurrence.
    pub fn ngram_buckets(&self, token: &str) -> Vec<u32> {
        let marked: Vec<char> = std::iter::once('<')
            .chain(token.chars())
            .chain(std::iter::once('>'))
            .collect();
        let mut out = Vec::new();
        let mut buf = String::new();
        for n in self.min_n..=self.max_n {
            if n > marked.len() {
                break;
            }
            for window in marked.windows(n) {
                buf.clear();
                buf.extend(window);
                out.push(fnv1a(buf.as_bytes()) % self.buckets.max(1));
            }
        }
        out
    }

    /// Adds the vector of `bucket` (components uniform in ±1/√dim) to `out`.
    fn add_bucket_vector(&self, bucket: u32, out: &mut [f64]) {
        let bound = 1.0 / (out.len() as f64).sqrt();
        let mut state = self.seed ^ u64::from(bucket).wrapping_mul(0xd134_2543_de82_ef95);
        for o in out.iter_mut() {
            let u = (splitmix(&mut state) >> 11) as f64 / (1u64 << 53) as f64;
            *o += (2.0 * u - 1.0) * bound;
        }
    }
}

#[derive(Debug, Clone)]
pub struct EmbeddingStore {
    dim: usize,
    index: HashMap<String, usize>,
    vectors: Vec<f64>,
    subword: SubwordConfig,
}

impl EmbeddingStore {
    /// An empty store: every lookup goes through the subword fallback.
    pub fn empty(dim: usize, subword: SubwordConfig) -> Self {
        assert!(dim > 0, "embedding dimension must be positive");
        Self {
            dim,
            index: HashMap::new(),
            vectors: Vec::new(),
            subword,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    pub fn subword(&self) -> SubwordConfig {
        self.subword
    }

    pub fn with_subword(mut self, subword: SubwordConfig) -> Self {
        self.subword = subword;
        self
    }

    /// Inserts or replaces a vector. Panics on a dimension mismatch.
    pub fn insert(&mut self, word: &str, vector: &[f64]) {
        assert_eq!(vector.len(), self.dim, "vector dimension mismatch");
        match self.index.get(word) {
            Some(&slot) => {
                self.vectors[slot * self.dim..(slot + 1) * self.dim].copy_from_slice(vector)
            }
            None => {
                self.index.insert(word.to_string(), self.index.len());
                self.vectors.extend_from_slice(vector);
            }
        }
    }

    pub fn get(&self, word: &str) -> Option<&[f64]> {
        self.index
            .get(word)
            .map(|&slot| &self.vectors[slot * self.dim..(slot + 1) * self.dim])
    }

    pub fn contains(&self, word: &str) -> bool {
        self.index.contains_key(word)
    }

    /// Reads the text vector format: a `COUNT DIM` header line, then one
    /// `word v1 … vDIM` line per word.
    pub fn read<R: BufRead>(reader: R, subword: SubwordConfig) -> Result<Self, EmbeddingError> {
        let mut lines = reader.lines().enumerate();
        let io_err = |source| EmbeddingError::Io {
            path: "<reader>".into(),
            source,
        };
        let header = loop {
            match lines.next() {
                None => return Ok(Self::empty(DEFAULT_DIM, subword)),
                Some((_, line)) => {
                    let line = line.map_err(io_err)?;
                    if !line.trim().is_empty() {
                        break line;
                    }
                }
            }
        };
        let fields: Vec<&str> = header.split_whitespace().collect();
        let parsed = match fields.as_slice() {
            [count, dim] => count.parse::<usize>().ok().zip(dim.parse::<usize>().ok()),
            _ => None,
        };
        let Some((count, dim)) = parsed.filter(|&(_, d)| d > 0) else {
            return Err(EmbeddingError::Format {
                line: 1,
                reason: format!("expected `COUNT DIM` header, found {header:?}"),
            });
        };
        let mut rows_dim: Option<usize> = None;
        let mut store = Self::empty(dim, subword);
        let mut values = Vec::with_capacity(dim);
        let mut rows = 0usize;
        for (i, line) in lines {
            let line = line.map_err(io_err)?;
            let mut parts = line.split_whitespace();
            let Some(word) = parts.next() else { continue };
            values.clear();
            for v in parts {
                let x: f64 = v.parse().map_err(|_| EmbeddingError::Format {
                    line: i + 1,
                    reason: format!("not a number: {v:?}"),
                })?;
                if !x.is_finite() {
                    return Err(EmbeddingError::Format {
                        line: i + 1,
                        reason: format!("non-finite value {v:?}"),
                    });
                }
                values.push(x);
            }
            match rows_dim {
                None => rows_dim = Some(values.len()),
                Some(d) if d != values.len() => {
                    return Err(EmbeddingError::Format {
                        line: i + 1,
                        reason: format!("ragged row: {} values, previous rows have {d}", values.len()),
                    })
                }
                Some(_) => {}
            }
            if values.len() != dim {
                continue;
            }
            if store.contains(word) {
                log::warn!("embedding: duplicate word {word:?} on line {}; keeping the last", i + 1);
            }
            store.insert(word, &values);
            rows += 1;
        }
        if let Some(d) = rows_dim.filter(|&d| d != dim) {
            return Err(EmbeddingError::Dimension { header: dim, rows: d });
        }
        if rows != count {
            log::warn!("embedding: header declares {count} rows, read {rows}");
        }
        Ok(store)
    }

    pub fn load(path: &Path, subword: SubwordConfig) -> Result<Self, EmbeddingError> {
        let file = std::fs::File::open(path).map_err(|source| EmbeddingError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::read(std::io::BufReader::new(file), subword)
    }

    /// Writes `out` with the vector for `token`: the stored vector when the
    /// word is known, otherwise the mean of its n-gram bucket vectors.
    pub fn embed_into(&self, token: &str, out: &mut [f64]) {
        assert_eq!(out.len(), self.dim);
        if let Some(v) = self.get(token) {
            out.copy_from_slice(v);
            return;
        }
        out.fill(0.0);
        let buckets = self.subword.ngram_buckets(token);
        for &b in &buckets {
            self.subword.add_bucket_vector(b, out);
        }
        let scale = 1.0 / buckets.len().max(1) as f64;
        out.iter_mut().for_each(|x| *x *= scale);
    }

    pub fn embed_word(&self, token: &str) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.embed_into(token, &mut out);
        out
    }

    /// Stacks the three word lists into `n × dim` matrices, zero-padded.
    /// Lists longer than `n` are cut to their first `n` words.
    pub fn embed_block(&self, words: &WordStrings, n: usize) -> BlockTensor {
        let maps = words.lists().map(|list| {
            let mut m = Matrix::zeros(n, self.dim);
            for (r, w) in list.iter().take(n).enumerate() {
                self.embed_into(w, m.row_mut(r));
            }
            debug_assert!(m.as_slice().iter().all(|x| x.is_finite()));
            m
        });
        BlockTensor { maps }
    }
}

/// Loads a vector file with the default subword settings.
pub fn load_embeddings(path: &Path) -> Result<EmbeddingStore, EmbeddingError> {
    EmbeddingStore::load(path, SubwordConfig::default())
}

pub fn embed_word(store: &EmbeddingStore, token: &str) -> Vec<f64> {
    store.embed_word(token)
}

pub fn embed_block(store: &EmbeddingStore, words: &WordStrings, n: usize) -> BlockTensor {
    store.embed_block(words, n)
}

/// The tag, class and text embedding matrices of one block.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockTensor {
    pub maps: [Matrix; 3],
}

impl BlockTensor {
    pub fn zeros(n: usize, k: usize) -> Self {
        Self {
            maps: std::array::from_fn(|_| Matrix::zeros(n, k)),
        }
    }

    pub fn rows(&self) -> usize {
        self.maps[0].rows()
    }

    pub fn dim(&self) -> usize {
        self.maps[0].cols()
    }
}
