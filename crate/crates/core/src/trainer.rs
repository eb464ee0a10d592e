//! Mini-batch SGD over labeled pages with validation-F1 checkpointing.

use std::collections::HashMap;
use std::ops::Range;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::dataset::LabeledPage;
use crate::embedding::{BlockTensor, EmbeddingStore};
use crate::labeler::Label;
use crate::lexicalizer::Lexicon;
use crate::metrics::Counts;
use crate::model::{Featurizer, ModelConfig, ModelError, ModelParams};

/// Sequences per gradient work unit. Fixed so that the reduction order, and
/// therefore the result, does not depend on the number of workers.
const GROUP: usize = 8;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("no labeled blocks to train on")]
    EmptyCorpus,
    #[error("loss diverged (epoch {epoch}, batch {batch}, loss {loss}, last parameter norm {norm:.4})")]
    Divergence {
        epoch: usize,
        batch: usize,
        loss: f64,
        norm: f64,
    },
    #[error("invalid training configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub model: ModelConfig,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub seed: u64,
    pub validation_ratio: f64,
    pub momentum: f64,
    /// Rescale batch gradients whose norm exceeds this.
    pub clip_norm: Option<f64>,
    /// Worker threads for gradient evaluation; 0 picks the machine default.
    pub jobs: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            model: ModelConfig::default(),
            batch_size: 64,
            learning_rate: 0.01,
            epochs: 30,
            seed: 7,
            validation_ratio: 0.25,
            momentum: 0.0,
            clip_norm: None,
            jobs: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        self.model.validate()?;
        if self.batch_size == 0 {
            return Err(TrainError::Config("batch size must be positive".into()));
        }
        if !(self.validation_ratio > 0.0 && self.validation_ratio < 1.0) {
            return Err(TrainError::Config("validation ratio must lie in (0, 1)".into()));
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(TrainError::Config("learning rate must be finite and non-negative".into()));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(TrainError::Config("momentum must lie in [0, 1)".into()));
        }
        if self.clip_norm.is_some_and(|c| c.is_nan() || c <= 0.0) {
            return Err(TrainError::Config("clip norm must be positive".into()));
        }
        Ok(())
    }
}

/// Splits `len` items into `ceil(len / m)` consecutive chunks whose sizes
/// differ by at most one, larger chunks first.
pub fn chunk_ranges(len: usize, m: usize) -> Vec<Range<usize>> {
    assert!(m > 0, "chunk bound must be positive");
    let chunks = len.div_ceil(m);
    if chunks == 0 {
        return Vec::new();
    }
    let (base, extra) = (len / chunks, len % chunks);
    let mut start = 0;
    (0..chunks)
        .map(|i| {
            let size = base + usize::from(i < extra);
            start += size;
            start - size..start
        })
        .collect()
}

/// Cuts a page into sub-sequences of at most `m` blocks, as evenly as possible.
pub fn split_sequence(page: &LabeledPage, m: usize) -> Vec<LabeledPage> {
    chunk_ranges(page.len(), m)
        .into_iter()
        .map(|r| LabeledPage {
            id: page.id.clone(),
            blocks: page.blocks[r.clone()].to_vec(),
            labels: page.labels[r].to_vec(),
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EpochLog {
    pub epoch: usize,
    /// Mean per-sequence loss over the epoch's batches.
    pub loss: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: ModelParams,
    pub log: Vec<EpochLog>,
    /// Epoch of the returned checkpoint; 0 when no epoch ran.
    pub best_epoch: usize,
}

/// Word vectors for every distinct token of a corpus, computed once.
struct TokenTable {
    k: usize,
    index: HashMap<String, u32>,
    vectors: Vec<f64>,
}

/// A sub-sequence as token ids per word string, plus gold labels.
struct EncodedSeq {
    blocks: Vec<[Vec<u32>; 3]>,
    labels: Vec<Label>,
}

impl TokenTable {
    fn new(k: usize) -> Self {
        Self {
            k,
            index: HashMap::new(),
            vectors: Vec::new(),
        }
    }

    fn intern(&mut self, store: &EmbeddingStore, word: &str) -> u32 {
        if let Some(&id) = self.index.get(word) {
            return id;
        }
        let id = self.index.len() as u32;
        self.vectors.extend(store.embed_word(word));
        self.index.insert(word.to_string(), id);
        id
    }

    fn encode(&mut self, f: &Featurizer<'_>, page: &LabeledPage) -> EncodedSeq {
        let blocks = page
            .blocks
            .iter()
            .map(|b| {
                let words = f.words(b);
                words.lists().map(|list| list.iter().map(|w| self.intern(f.store, w)).collect())
            })
            .collect();
        EncodedSeq {
            blocks,
            labels: page.labels.clone(),
        }
    }

    fn tensors(&self, seq: &EncodedSeq, n: usize) -> Vec<BlockTensor> {
        seq.blocks
            .iter()
            .map(|ids| {
                let mut t = BlockTensor::zeros(n, self.k);
                for (m, ids) in t.maps.iter_mut().zip(ids) {
                    for (r, &id) in ids.iter().enumerate() {
                        let id = id as usize;
                        m.row_mut(r).copy_from_slice(&self.vectors[id * self.k..(id + 1) * self.k]);
                    }
                }
                t
            })
            .collect()
    }
}

/// Summed loss and gradient over `len` sequences, fetched by index.
///
/// Sequences are processed in fixed groups whose partial sums are added in
/// index order, so the result is identical for any worker count.
pub fn batch_gradient<F>(params: &ModelParams, len: usize, fetch: F) -> Result<(f64, ModelParams), ModelError>
where
    F: Fn(usize) -> (Vec<BlockTensor>, Vec<Label>) + Sync,
{
    let group = |g: usize| -> Result<(f64, ModelParams), ModelError> {
        let mut grads = params.zeros_like();
        let mut loss = 0.0;
        for i in g * GROUP..((g + 1) * GROUP).min(len) {
            let (tensors, labels) = fetch(i);
            loss += params.loss_and_grad(&tensors, &labels, &mut grads)?;
        }
        Ok((loss, grads))
    };
    let groups = len.div_ceil(GROUP);
    #[cfg(feature = "parallel")]
    let parts: Vec<_> = {
        use rayon::prelude::*;
        (0..groups).into_par_iter().map(group).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let parts: Vec<_> = (0..groups).map(group).collect();
    let mut total: Option<(f64, ModelParams)> = None;
    for part in parts {
        let (loss, grads) = part?;
        match &mut total {
            None => total = Some((loss, grads)),
            Some((l, g)) => {
                *l += loss;
                g.add_scaled(&grads, 1.0);
            }
        }
    }
    Ok(total.unwrap_or_else(|| (0.0, params.zeros_like())))
}

/// Trains from scratch, or continues from `init` when given (its shapes
/// then take precedence over `config.model`).
pub fn train(
    corpus: &[LabeledPage],
    store: &EmbeddingStore,
    lexicon: &Lexicon,
    config: &TrainConfig,
    init: Option<ModelParams>,
) -> Result<TrainOutcome, TrainError> {
    config.validate()?;
    #[cfg(feature = "parallel")]
    {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.jobs)
            .build()
            .map_err(|e| TrainError::Config(format!("thread pool: {e}")))?;
        pool.install(|| train_inner(corpus, store, lexicon, config, init))
    }
    #[cfg(not(feature = "parallel"))]
    train_inner(corpus, store, lexicon, config, init)
}

fn train_inner(
    corpus: &[LabeledPage],
    store: &EmbeddingStore,
    lexicon: &Lexicon,
    config: &TrainConfig,
    init: Option<ModelParams>,
) -> Result<TrainOutcome, TrainError> {
    let pages: Vec<&LabeledPage> = corpus.iter().filter(|p| !p.is_empty()).collect();
    if pages.is_empty() {
        return Err(TrainError::EmptyCorpus);
    }
    let mut init_rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(1);

    let mut params = match init {
        Some(p) => p,
        None => ModelParams::new(config.model.clone(), &mut init_rng)?,
    };
    if params.config.k != store.dim() {
        return Err(TrainError::Config(format!(
            "model expects {}-dimensional embeddings, store has {}",
            params.config.k,
            store.dim()
        )));
    }
    let model = params.config.clone();

    let mut order: Vec<usize> = (0..pages.len()).collect();
    order.shuffle(&mut rng);
    let n_val = if pages.len() < 2 {
        log::warn!("trainer: a single page is used for both training and validation");
        0
    } else {
        ((pages.len() as f64 * config.validation_ratio).round() as usize).clamp(1, pages.len() - 1)
    };
    let (val_idx, train_idx) = order.split_at(n_val);
    let val_idx = if val_idx.is_empty() { train_idx } else { val_idx };

    let featurizer = Featurizer::new(lexicon, store, &model);
    let mut table = TokenTable::new(store.dim());
    let mut encode = |idx: &[usize]| -> Vec<EncodedSeq> {
        idx.iter()
            .flat_map(|&i| split_sequence(pages[i], model.max_blocks))
            .map(|p| table.encode(&featurizer, &p))
            .collect()
    };
    let train_seqs = encode(train_idx);
    let val_seqs = encode(val_idx);
    let table = table;
    log::info!(
        "trainer: {} training and {} validation sub-sequences, {} distinct tokens, {} parameters",
        train_seqs.len(),
        val_seqs.len(),
        table.index.len(),
        params.param_count()
    );

    let mut velocity = (config.momentum > 0.0).then(|| params.zeros_like());
    let mut best: Option<(f64, usize, ModelParams)> = None;
    let mut log = Vec::with_capacity(config.epochs);
    let mut seq_order: Vec<usize> = (0..train_seqs.len()).collect();
    for epoch in 1..=config.epochs {
        seq_order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for (b, batch) in seq_order.chunks(config.batch_size).enumerate() {
            let (loss, mut grads) = batch_gradient(&params, batch.len(), |i| {
                let seq = &train_seqs[batch[i]];
                (table.tensors(seq, model.n), seq.labels.clone())
            })?;
            if !loss.is_finite() {
                return Err(TrainError::Divergence {
                    epoch,
                    batch: b,
                    loss,
                    norm: params.norm(),
                });
            }
            epoch_loss += loss;
            grads.scale(1.0 / batch.len() as f64);
            if let Some(limit) = config.clip_norm {
                let norm = grads.norm();
                if norm > limit {
                    grads.scale(limit / norm);
                }
            }
            match &mut velocity {
                Some(v) => {
                    v.scale(config.momentum);
                    v.add_scaled(&grads, 1.0);
                    params.add_scaled(v, -config.learning_rate);
                }
                None => params.add_scaled(&grads, -config.learning_rate),
            }
        }
        let counts = validate(&params, &table, &val_seqs, model.n)?;
        let (precision, recall, f1) = counts.scores();
        let entry = EpochLog {
            epoch,
            loss: epoch_loss / train_seqs.len() as f64,
            precision,
            recall,
            f1,
        };
        log::info!(
            "epoch {epoch}: loss {:.5}, validation P {precision:.4} R {recall:.4} F1 {f1:.4}",
            entry.loss
        );
        log.push(entry);
        if best.as_ref().is_none_or(|(f, _, _)| f1 > *f) {
            best = Some((f1, epoch, params.clone()));
        }
    }
    let (params, best_epoch) = match best {
        Some((_, epoch, p)) => (p, epoch),
        None => (params, 0),
    };
    Ok(TrainOutcome {
        params,
        log,
        best_epoch,
    })
}

fn validate(
    params: &ModelParams,
    table: &TokenTable,
    seqs: &[EncodedSeq],
    n: usize,
) -> Result<Counts, ModelError> {
    let decode = |seq: &EncodedSeq| -> Result<Counts, ModelError> {
        let emissions = params.emissions(&table.tensors(seq, n))?;
        let (pred, _) = params.crf.transitions.viterbi(&emissions);
        Ok(Counts::tally(&pred, &seq.labels))
    };
    #[cfg(feature = "parallel")]
    let parts: Vec<_> = {
        use rayon::prelude::*;
        seqs.par_iter().map(decode).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let parts: Vec<_> = seqs.iter().map(decode).collect();
    let mut total = Counts::default();
    for c in parts {
        total.add(c?);
    }
    Ok(total)
}
