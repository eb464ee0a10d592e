//! HTML in, labeled blocks out.

use crate::dom::{self, DomError, DomNode, TagGroups};
use crate::embedding::EmbeddingStore;
use crate::labeler::Label;
use crate::lexicalizer::Lexicon;
use crate::model::{Featurizer, ModelError, ModelParams};
use crate::segmenter::{BlockSequence, Segmenter, TextBlock};
use crate::trainer::chunk_ranges;

/// One block with its predicted label and posterior probability of MAIN.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledBlock {
    pub block: TextBlock,
    pub label: Label,
    pub score: f64,
}

/// A trained model with the resources needed to run it on raw pages.
#[derive(Debug, Clone)]
pub struct Extractor {
    params: ModelParams,
    store: EmbeddingStore,
    lexicon: Lexicon,
    segmenter: Segmenter,
}

impl Extractor {
    pub fn new(
        params: ModelParams,
        store: EmbeddingStore,
        lexicon: Lexicon,
        groups: TagGroups,
    ) -> Result<Self, ModelError> {
        if store.dim() != params.config.k {
            return Err(ModelError::Config(format!(
                "model expects {}-dimensional embeddings, store has {}",
                params.config.k,
                store.dim()
            )));
        }
        let segmenter = Segmenter {
            groups,
            include_ids: params.config.include_ids,
        };
        Ok(Self {
            params,
            store,
            lexicon,
            segmenter,
        })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn segment(&self, html: &[u8], encoding_hint: Option<&str>) -> Result<BlockSequence, DomError> {
        Ok(self.segment_tree(&dom::parse_html(html, encoding_hint)?))
    }

    pub fn segment_tree(&self, root: &DomNode) -> BlockSequence {
        self.segmenter.segment(root)
    }

    /// Labels blocks in sub-sequences of at most the model's sequence bound.
    pub fn label(&self, blocks: &[TextBlock]) -> Result<Vec<LabeledBlock>, ModelError> {
        let f = Featurizer::new(&self.lexicon, &self.store, &self.params.config);
        let mut out = Vec::with_capacity(blocks.len());
        for range in chunk_ranges(blocks.len(), self.params.config.max_blocks) {
            let chunk = &blocks[range];
            let tensors: Vec<_> = chunk.iter().map(|b| f.tensor(b)).collect();
            let (labels, scores) = self.params.decode(&tensors)?;
            out.extend(chunk.iter().zip(labels).zip(scores).map(|((b, label), score)| LabeledBlock {
                block: b.clone(),
                label,
                score,
            }));
        }
        Ok(out)
    }
}
