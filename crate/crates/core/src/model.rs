//! The full labeling model: block encoder, Bi-LSTM and CRF, with the
//! configuration that fixes their shapes.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embedding::{BlockTensor, EmbeddingStore, SubwordConfig};
use crate::encoder::ConvFilterBank;
use crate::labeler::{BiLstm, Crf, Emission, Label, LabelerError};
use crate::lexicalizer::{Lexicon, WordStrings};
use crate::segmenter::TextBlock;
use crate::tensor::ShapeError;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error(transparent)]
    Shape(#[from] ShapeError),
    #[error(transparent)]
    Labeler(#[from] LabelerError),
    #[error("invalid configuration: {0}")]
    Config(String),
}

/// Which word strings reach the encoder. Disabled strings are fed as
/// all-zero matrices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureMask {
    pub tags: bool,
    pub classes: bool,
    pub text: bool,
}

impl Default for FeatureMask {
    fn default() -> Self {
        Self::ALL
    }
}

impl FeatureMask {
    pub const ALL: Self = Self {
        tags: true,
        classes: true,
        text: true,
    };
    pub const TEXT_ONLY: Self = Self {
        tags: false,
        classes: false,
        text: true,
    };

    pub fn as_array(self) -> [bool; 3] {
        [self.tags, self.classes, self.text]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    /// Words kept per word string.
    pub n: usize,
    /// Embedding dimension.
    pub k: usize,
    /// Longest block sequence fed to the labeler at once.
    pub max_blocks: usize,
    pub widths: Vec<usize>,
    pub counts: Vec<usize>,
    pub hidden: usize,
    pub relu: bool,
    pub include_ids: bool,
    pub mask: FeatureMask,
    pub subword: SubwordConfig,
    /// Vector file the model was trained with, if any.
    pub embeddings: Option<String>,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            n: 50,
            k: crate::embedding::DEFAULT_DIM,
            max_blocks: 85,
            widths: vec![3, 5, 7],
            counts: vec![128, 128, 256],
            hidden: 512,
            relu: false,
            include_ids: false,
            mask: FeatureMask::ALL,
            subword: SubwordConfig::default(),
            embeddings: None,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        let positive = [
            ("n", self.n),
            ("k", self.k),
            ("max_blocks", self.max_blocks),
            ("hidden", self.hidden),
            ("subword buckets", self.subword.buckets as usize),
        ];
        if let Some((name, _)) = positive.iter().find(|(_, v)| *v == 0) {
            return Err(ModelError::Config(format!("{name} must be positive")));
        }
        if self.subword.min_n == 0 || self.subword.min_n > self.subword.max_n {
            return Err(ModelError::Config("bad subword n-gram range".into()));
        }
        if self.widths.is_empty() || self.widths.len() != self.counts.len() {
            return Err(ModelError::Config(
                "filter widths and counts must be nonempty and of equal length".into(),
            ));
        }
        Ok(())
    }
}

/// All learnable weights. The same type holds gradients.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub config: ModelConfig,
    pub encoder: ConvFilterBank,
    pub lstm: BiLstm,
    pub crf: Crf,
}

/// Intermediate values of one forward pass, for backpropagation.
struct Forward {
    encoded: Vec<crate::encoder::Encoded>,
    lstm: crate::labeler::BiLstmCache,
    states: Vec<Vec<f64>>,
}

impl ModelParams {
    pub fn new<R: Rng>(config: ModelConfig, rng: &mut R) -> Result<Self, ModelError> {
        config.validate()?;
        let encoder = ConvFilterBank::new(
            config.n,
            config.k,
            &config.widths,
            &config.counts,
            config.relu,
            rng,
        )?;
        let lstm = BiLstm::new(encoder.output_len(), config.hidden, rng);
        let crf = Crf::new(lstm.output_size(), rng);
        Ok(Self {
            config,
            encoder,
            lstm,
            crf,
        })
    }

    /// Parameters of the right shapes for `config`, all zero.
    pub fn zeros(config: ModelConfig) -> Result<Self, ModelError> {
        config.validate()?;
        let encoder =
            ConvFilterBank::zeros(config.n, config.k, &config.widths, &config.counts, config.relu)?;
        let lstm = BiLstm {
            fwd: crate::labeler::Lstm::zeros(encoder.output_len(), config.hidden),
            bwd: crate::labeler::Lstm::zeros(encoder.output_len(), config.hidden),
        };
        let crf = Crf::zeros(lstm.output_size());
        Ok(Self {
            config,
            encoder,
            lstm,
            crf,
        })
    }

    /// Checks that the parts fit together and match the configuration.
    pub fn from_parts(
        config: ModelConfig,
        encoder: ConvFilterBank,
        lstm: BiLstm,
        crf: Crf,
    ) -> Result<Self, ModelError> {
        config.validate()?;
        let shapes = [
            ("encoder dimension", encoder.dim(), config.k),
            ("LSTM input", lstm.input_size(), encoder.output_len()),
            ("LSTM backward input", lstm.bwd.input_size(), encoder.output_len()),
            ("LSTM backward hidden", lstm.bwd.hidden_size(), lstm.hidden_size()),
            ("emission input", crf.input_size(), lstm.output_size()),
        ];
        for (what, got, want) in shapes {
            if got != want {
                return Err(ModelError::Config(format!("{what} is {got}, expected {want}")));
            }
        }
        if encoder.max_width() > config.n {
            return Err(ModelError::Config("filter wider than n".into()));
        }
        Ok(Self {
            config,
            encoder,
            lstm,
            crf,
        })
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            config: self.config.clone(),
            encoder: self.encoder.zeros_like(),
            lstm: self.lstm.zeros_like(),
            crf: Crf::zeros(self.crf.input_size()),
        }
    }

    /// Every parameter slice, in the fixed order used by the model file.
    pub fn params(&self) -> impl Iterator<Item = &[f64]> {
        self.encoder
            .params()
            .chain(self.lstm.params())
            .chain(self.crf.params())
    }

    pub fn params_mut(&mut self) -> impl Iterator<Item = &mut [f64]> {
        self.encoder
            .params_mut()
            .chain(self.lstm.params_mut())
            .chain(self.crf.params_mut())
    }

    pub fn param_count(&self) -> usize {
        self.params().map(<[f64]>::len).sum()
    }

    /// `self += scale · other`, parameter by parameter.
    pub fn add_scaled(&mut self, other: &ModelParams, scale: f64) {
        for (dst, src) in self.params_mut().zip(other.params()) {
            crate::tensor::axpy(scale, src, dst);
        }
    }

    pub fn scale(&mut self, factor: f64) {
        self.params_mut().flatten().for_each(|x| *x *= factor);
    }

    pub fn norm(&self) -> f64 {
        self.params().flatten().map(|x| x * x).sum::<f64>().sqrt()
    }

    fn forward(&self, tensors: &[BlockTensor]) -> Result<Forward, ModelError> {
        let encoded = tensors
            .iter()
            .map(|t| self.encoder.encode_cached(t))
            .collect::<Result<Vec<_>, _>>()?;
        let features: Vec<&[f64]> = encoded.iter().map(|e| e.features.as_slice()).collect();
        let (states, lstm) = self.lstm.forward(&features)?;
        Ok(Forward {
            encoded,
            lstm,
            states,
        })
    }

    pub fn emissions(&self, tensors: &[BlockTensor]) -> Result<Vec<Emission>, ModelError> {
        let fwd = self.forward(tensors)?;
        Ok(self.crf.emissions(&fwd.states)?)
    }

    /// Best labeling and the posterior probability of MAIN at each block.
    pub fn decode(&self, tensors: &[BlockTensor]) -> Result<(Vec<Label>, Vec<f64>), ModelError> {
        let em = self.emissions(tensors)?;
        let (labels, _) = self.crf.transitions.viterbi(&em);
        let scores = self
            .crf
            .transitions
            .marginals(&em)
            .nodes
            .iter()
            .map(|p| p[Label::Main.index()])
            .collect();
        Ok((labels, scores))
    }

    pub fn loss(&self, tensors: &[BlockTensor], gold: &[Label]) -> Result<f64, ModelError> {
        let fwd = self.forward(tensors)?;
        Ok(self.crf.sequence_nll(&fwd.states, gold)?)
    }

    /// Negative log-likelihood of `gold`; its gradient is added to `grads`.
    pub fn loss_and_grad(
        &self,
        tensors: &[BlockTensor],
        gold: &[Label],
        grads: &mut ModelParams,
    ) -> Result<f64, ModelError> {
        self.backprop(tensors, gold, grads, None)
    }

    /// Like [`ModelParams::loss_and_grad`], also accumulating the gradient
    /// with respect to each input tensor into `d_inputs`.
    pub fn backprop(
        &self,
        tensors: &[BlockTensor],
        gold: &[Label],
        grads: &mut ModelParams,
        mut d_inputs: Option<&mut [BlockTensor]>,
    ) -> Result<f64, ModelError> {
        let fwd = self.forward(tensors)?;
        let (nll, d_states) = self.crf.backward(&fwd.states, gold, &mut grads.crf)?;
        let features: Vec<&[f64]> = fwd.encoded.iter().map(|e| e.features.as_slice()).collect();
        let d_features = self
            .lstm
            .backward(&features, &fwd.lstm, &d_states, &mut grads.lstm);
        for (t, ((tensor, enc), d)) in tensors.iter().zip(&fwd.encoded).zip(&d_features).enumerate() {
            let d_input = d_inputs.as_deref_mut().map(|ds| &mut ds[t]);
            self.encoder
                .backward(tensor, enc, d, &mut grads.encoder, d_input);
        }
        Ok(nll)
    }
}

/// Lexicalizes and embeds blocks into tensors for one model configuration.
#[derive(Debug, Clone, Copy)]
pub struct Featurizer<'a> {
    pub lexicon: &'a Lexicon,
    pub store: &'a EmbeddingStore,
    pub n: usize,
    pub mask: FeatureMask,
}

impl<'a> Featurizer<'a> {
    pub fn new(lexicon: &'a Lexicon, store: &'a EmbeddingStore, config: &ModelConfig) -> Self {
        Self {
            lexicon,
            store,
            n: config.n,
            mask: config.mask,
        }
    }

    /// Word strings with masked-out strings left empty.
    pub fn words(&self, block: &TextBlock) -> WordStrings {
        let mut w = self.lexicon.lexicalize_block(block, self.n);
        let [tags, classes, text] = self.mask.as_array();
        if !tags {
            w.tag_words.clear();
        }
        if !classes {
            w.class_words.clear();
        }
        if !text {
            w.text_words.clear();
        }
        w
    }

    pub fn tensor(&self, block: &TextBlock) -> BlockTensor {
        self.store.embed_block(&self.words(block), self.n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn small_config() -> ModelConfig {
        ModelConfig {
            n: 6,
            k: 3,
            widths: vec![2, 3],
            counts: vec![2, 1],
            hidden: 3,
            ..ModelConfig::default()
        }
    }

    #[test]
    fn shapes_line_up() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let p = ModelParams::new(small_config(), &mut rng).unwrap();
        assert_eq!(p.encoder.output_len(), 9);
        assert_eq!(p.lstm.input_size(), 9);
        assert_eq!(p.crf.input_size(), 6);
        let zeros = ModelParams::zeros(small_config()).unwrap();
        assert_eq!(zeros.param_count(), p.param_count());
        assert_eq!(p.zeros_like(), zeros);
    }

    #[test]
    fn decode_scores_are_probabilities() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = ModelParams::new(small_config(), &mut rng).unwrap();
        let tensors = vec![BlockTensor::zeros(6, 3); 4];
        let (labels, scores) = p.decode(&tensors).unwrap();
        assert_eq!(labels.len(), 4);
        assert!(scores.iter().all(|s| (0.0..=1.0).contains(s)));
    }

    #[test]
    fn loss_matches_backprop_value() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let p = ModelParams::new(small_config(), &mut rng).unwrap();
        let tensors = vec![BlockTensor::zeros(6, 3); 3];
        let gold = [Label::Main, Label::Boilerplate, Label::Main];
        let mut g = p.zeros_like();
        let a = p.loss(&tensors, &gold).unwrap();
        let b = p.loss_and_grad(&tensors, &gold, &mut g).unwrap();
        assert_eq!(a, b);
        assert!(a > 0.0);
        assert!(g.norm() > 0.0);
    }

    #[test]
    fn invalid_config() {
        let cfg = ModelConfig {
            hidden: 0,
            ..small_config()
        };
        assert!(matches!(ModelParams::zeros(cfg), Err(ModelError::Config(_))));
    }

    #[test]
    fn text_only_mask_clears_structure() {
        let store = EmbeddingStore::empty(3, SubwordConfig::default());
        let f = Featurizer {
            lexicon: Lexicon::builtin(),
            store: &store,
            n: 6,
            mask: FeatureMask::TEXT_ONLY,
        };
        let block = TextBlock::detached(vec!["div".into()], vec!["nav".into()], "hello world".into());
        let w = f.words(&block);
        assert!(w.tag_words.is_empty() && w.class_words.is_empty());
        assert_eq!(w.text_words, ["hello", "world"]);
    }
}
