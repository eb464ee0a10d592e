//! Synthetic news-like pages for smoke-testing the training loop.
//!
//! Each page has header, navigation, sidebar, footer and ad blocks drawn
//! from a "chrome" vocabulary, and an article whose headline and
//! paragraphs use a "content" vocabulary. A share of extra blocks sits
//! inside the article with text from a shared vocabulary and identical tag
//! paths; only their class names tell related-link widgets (boilerplate)
//! from subheadings (main).

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::LabeledPage;
use crate::embedding::{EmbeddingStore, SubwordConfig};
use crate::labeler::Label;
use crate::model::{FeatureMask, ModelConfig};
use crate::segmenter::TextBlock;
use crate::trainer::TrainConfig;

const CHROME: &[&str] = &[
    "home", "subscribe", "login", "menu", "search", "newsletter", "contact", "privacy", "terms",
    "cookies", "account", "register", "follow", "share", "copyright", "rights", "reserved",
    "advertise", "careers", "sitemap", "settings", "help", "faq", "weather", "sports", "markets",
    "podcasts", "video", "sections", "edition", "download", "app", "sponsored", "deals", "offer",
    "partner", "feedback", "accessibility", "archive", "trending",
];

const CONTENT: &[&str] = &[
    "government", "officials", "announced", "policy", "researchers", "study", "published",
    "journal", "economy", "growth", "percent", "quarter", "analysts", "reported", "council",
    "voted", "proposal", "residents", "community", "hospital", "patients", "treatment", "climate",
    "emissions", "scientists", "university", "students", "minister", "parliament", "election",
    "campaign", "candidates", "court", "ruling", "judge", "investigation", "police", "village",
    "farmers", "harvest", "drought", "infrastructure", "bridge", "construction", "budget",
    "spending", "inflation", "workers", "union", "negotiations", "agreement", "festival",
    "museum", "exhibition", "historians", "discovered", "ancient", "coastline", "storm",
];

/// Text shared by related-link widgets and story subheadings.
const SHARED: &[&str] = &[
    "how", "why", "inside", "latest", "explained", "what", "next", "live", "updates", "guide",
    "analysis", "opinion", "week", "review", "moment", "future", "question", "answer", "story",
    "behind",
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToyCorpusConfig {
    pub pages: usize,
    pub seed: u64,
    /// Fraction of blocks that are ambiguous by text and tag path.
    pub ambiguous_ratio: f64,
}

impl Default for ToyCorpusConfig {
    fn default() -> Self {
        Self {
            pages: 200,
            seed: 7,
            ambiguous_ratio: 0.2,
        }
    }
}

fn words<R: Rng>(rng: &mut R, vocab: &[&str], min: usize, max: usize) -> String {
    let len = rng.gen_range(min..=max);
    let picked: Vec<&str> = (0..len).map(|_| *vocab.choose(rng).unwrap()).collect();
    let mut s = picked.join(" ");
    if let Some(first) = s.get_mut(0..1) {
        first.make_ascii_uppercase();
    }
    s
}

fn block(tags: &[&str], classes: &[&str], text: String) -> TextBlock {
    TextBlock::detached(
        tags.iter().map(|s| s.to_string()).collect(),
        classes.iter().map(|s| s.to_string()).collect(),
        text,
    )
}

fn page<R: Rng>(rng: &mut R, id: String, ambiguous_ratio: f64) -> LabeledPage {
    use Label::{Boilerplate as B, Main as M};
    let mut blocks: Vec<(TextBlock, Label)> = Vec::new();
    let chrome = |rng: &mut R, tags: &[&str], classes: &[&str], min, max| {
        (block(tags, classes, words(rng, CHROME, min, max)), B)
    };

    for _ in 0..rng.gen_range(1..=2) {
        blocks.push(chrome(rng, &["body", "header", "div"], &["site-header", "masthead"], 2, 5));
    }
    for _ in 0..rng.gen_range(3..=6) {
        blocks.push(chrome(rng, &["body", "nav", "ul", "li"], &["main-nav", "nav-item"], 1, 2));
    }

    let mut article = vec![(
        block(
            &["body", "main", "article", "h1"],
            &["article", "story-title"],
            words(rng, CONTENT, 5, 10),
        ),
        M,
    )];
    for _ in 0..rng.gen_range(4..=9) {
        article.push((
            block(
                &["body", "main", "article", "p"],
                &["article", "story-body"],
                words(rng, CONTENT, 12, 30),
            ),
            M,
        ));
    }

    let mut tail = Vec::new();
    for _ in 0..rng.gen_range(2..=4) {
        tail.push(chrome(rng, &["body", "aside", "div"], &["sidebar", "widget"], 2, 8));
    }
    tail.push(chrome(rng, &["body", "div"], &["ad-slot", "sponsored"], 1, 4));
    for _ in 0..rng.gen_range(1..=3) {
        tail.push(chrome(rng, &["body", "footer", "p"], &["site-footer"], 3, 10));
    }

    let base = blocks.len() + article.len() + tail.len();
    let ambiguous = (base as f64 * ambiguous_ratio / (1.0 - ambiguous_ratio)).round() as usize;
    for _ in 0..ambiguous {
        let text = words(rng, SHARED, 3, 7);
        let tags = ["body", "main", "article", "div", "p"];
        let item = if rng.gen_bool(0.5) {
            (block(&tags, &["article", "story-subhead"], text), M)
        } else {
            (block(&tags, &["article", "related-links", "promo-item"], text), B)
        };
        // After the headline, anywhere in the body.
        let at = rng.gen_range(1..=article.len());
        article.insert(at, item);
    }

    blocks.extend(article);
    blocks.extend(tail);
    let (blocks, labels) = blocks.into_iter().unzip();
    LabeledPage { id, blocks, labels }
}

pub fn toy_corpus(config: &ToyCorpusConfig) -> Vec<LabeledPage> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    (0..config.pages)
        .map(|i| page(&mut rng, format!("toy-{i:04}"), config.ambiguous_ratio))
        .collect()
}

/// A small model and schedule that fit the toy corpus in seconds, with the
/// matching subword-only embedding store.
pub fn toy_train_config(mask: FeatureMask, seed: u64) -> (TrainConfig, EmbeddingStore) {
    let subword = SubwordConfig {
        buckets: 1 << 12,
        ..SubwordConfig::default()
    };
    let model = ModelConfig {
        n: 16,
        k: 16,
        widths: vec![3, 5, 7],
        counts: vec![8, 8, 16],
        hidden: 16,
        mask,
        subword,
        ..ModelConfig::default()
    };
    let store = EmbeddingStore::empty(model.k, subword);
    let config = TrainConfig {
        model,
        batch_size: 64,
        learning_rate: 0.01,
        momentum: 0.9,
        epochs: 30,
        seed,
        ..TrainConfig::default()
    };
    (config, store)
}
