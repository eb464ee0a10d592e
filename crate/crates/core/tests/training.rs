mod common;

use semtext::embedding::{EmbeddingStore, SubwordConfig};
use semtext::lexicalizer::Lexicon;
use semtext::model::{Featurizer, FeatureMask, ModelConfig, ModelParams};
use semtext::persist;
use semtext::synth::{toy_corpus, ToyCorpusConfig};
use semtext::trainer::{batch_gradient, train, TrainConfig, TrainError};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn setup(pages: usize) -> (Vec<semtext::dataset::LabeledPage>, EmbeddingStore, TrainConfig) {
    let corpus = toy_corpus(&ToyCorpusConfig {
        pages,
        ..ToyCorpusConfig::default()
    });
    let subword = SubwordConfig {
        buckets: 512,
        ..SubwordConfig::default()
    };
    let model = ModelConfig {
        n: 8,
        k: 6,
        max_blocks: 20,
        widths: vec![2, 3],
        counts: vec![3, 3],
        hidden: 5,
        subword,
        ..ModelConfig::default()
    };
    let store = EmbeddingStore::empty(model.k, subword);
    let config = TrainConfig {
        model,
        batch_size: 8,
        learning_rate: 0.01,
        momentum: 0.9,
        epochs: 3,
        ..TrainConfig::default()
    };
    (corpus, store, config)
}

#[test]
fn same_seed_gives_identical_models_for_any_worker_count() {
    let (corpus, store, config) = setup(24);
    let one = train(&corpus, &store, Lexicon::builtin(), &TrainConfig { jobs: 1, ..config.clone() }, None).unwrap();
    let four = train(&corpus, &store, Lexicon::builtin(), &TrainConfig { jobs: 4, ..config.clone() }, None).unwrap();
    assert_eq!(persist::to_bytes(&one.params), persist::to_bytes(&four.params));
    assert_eq!(one.log, four.log);
    let other = train(&corpus, &store, Lexicon::builtin(), &TrainConfig { seed: 8, ..config }, None).unwrap();
    assert_ne!(persist::to_bytes(&one.params), persist::to_bytes(&other.params));
}

#[test]
fn zero_learning_rate_keeps_the_initialisation() {
    let (corpus, store, config) = setup(10);
    let config = TrainConfig {
        learning_rate: 0.0,
        momentum: 0.0,
        ..config
    };
    let out = train(&corpus, &store, Lexicon::builtin(), &config, None).unwrap();
    let init = ModelParams::new(config.model.clone(), &mut ChaCha8Rng::seed_from_u64(config.seed)).unwrap();
    assert_eq!(out.params, init);
    assert_eq!(out.best_epoch, 1);
    // Batches are reshuffled, so losses agree only up to summation order.
    assert!(out.log.windows(2).all(|w| w[0].f1 == w[1].f1 && (w[0].loss - w[1].loss).abs() < 1e-9));
}

#[test]
fn small_gradient_step_does_not_increase_loss() {
    let (corpus, store, config) = setup(6);
    let params = ModelParams::new(config.model.clone(), &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
    let f = Featurizer::new(Lexicon::builtin(), &store, &config.model);
    let fetch = |i: usize| {
        let page = &corpus[i];
        (page.blocks.iter().map(|b| f.tensor(b)).collect(), page.labels.clone())
    };
    let (loss, grads) = batch_gradient(&params, corpus.len(), fetch).unwrap();
    let mut stepped = params.clone();
    stepped.add_scaled(&grads, -1e-4 / grads.norm());
    let (after, _) = batch_gradient(&stepped, corpus.len(), fetch).unwrap();
    assert!(after < loss, "{after} >= {loss}");
}

#[test]
fn batch_gradient_is_a_sum_over_sequences() {
    let (corpus, store, config) = setup(11);
    let params = ModelParams::new(config.model.clone(), &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
    let f = Featurizer::new(Lexicon::builtin(), &store, &config.model);
    let fetch = |i: usize| {
        let page = &corpus[i];
        (page.blocks.iter().map(|b| f.tensor(b)).collect::<Vec<_>>(), page.labels.clone())
    };
    let (loss, grads) = batch_gradient(&params, corpus.len(), fetch).unwrap();
    let mut expected_loss = 0.0;
    let mut expected = params.zeros_like();
    for i in 0..corpus.len() {
        let (t, y) = fetch(i);
        expected_loss += params.loss_and_grad(&t, &y, &mut expected).unwrap();
    }
    assert!((loss - expected_loss).abs() < 1e-9 * loss.abs());
    let a: Vec<f64> = grads.params().flatten().copied().collect();
    let b: Vec<f64> = expected.params().flatten().copied().collect();
    assert!(common::rel_err(&a, &b) < 1e-12);
}

#[test]
fn best_epoch_is_the_earliest_maximum() {
    let (corpus, store, config) = setup(20);
    let out = train(&corpus, &store, Lexicon::builtin(), &TrainConfig { epochs: 6, ..config }, None).unwrap();
    let best = out.log.iter().map(|e| e.f1).fold(f64::NEG_INFINITY, f64::max);
    let first = out.log.iter().position(|e| e.f1 == best).unwrap() + 1;
    assert_eq!(out.best_epoch, first);
    assert_eq!(out.log.len(), 6);
}

#[test]
fn continuing_from_a_checkpoint() {
    let (corpus, store, config) = setup(12);
    let first = train(&corpus, &store, Lexicon::builtin(), &config, None).unwrap();
    let again = train(&corpus, &store, Lexicon::builtin(), &TrainConfig { learning_rate: 0.0, momentum: 0.0, ..config }, Some(first.params.clone())).unwrap();
    assert_eq!(again.params, first.params);
}

#[test]
fn text_only_mask_ignores_markup() {
    let (corpus, store, mut config) = setup(12);
    config.model.mask = FeatureMask::TEXT_ONLY;
    let f = Featurizer::new(Lexicon::builtin(), &store, &config.model);
    let w = f.words(&corpus[0].blocks[0]);
    assert!(w.tag_words.is_empty() && w.class_words.is_empty());
    assert!(!w.text_words.is_empty());
    train(&corpus, &store, Lexicon::builtin(), &config, None).unwrap();
}

#[test]
fn failures() {
    let (corpus, store, config) = setup(4);
    assert!(matches!(
        train(&[], &store, Lexicon::builtin(), &config, None),
        Err(TrainError::EmptyCorpus)
    ));
    let wrong = EmbeddingStore::empty(7, config.model.subword);
    assert!(matches!(
        train(&corpus, &wrong, Lexicon::builtin(), &config, None),
        Err(TrainError::Config(_))
    ));
    let bad = TrainConfig { batch_size: 0, ..config.clone() };
    assert!(matches!(train(&corpus, &store, Lexicon::builtin(), &bad, None), Err(TrainError::Config(_))));
    let huge = TrainConfig { learning_rate: 1e300, momentum: 0.0, ..config.clone() };
    assert!(matches!(
        train(&corpus, &store, Lexicon::builtin(), &huge, None),
        Err(TrainError::Divergence { .. })
    ));
    // One page serves as both training and validation data.
    let single = train(&corpus[..1], &store, Lexicon::builtin(), &config, None).unwrap();
    assert_eq!(single.log.len(), config.epochs);
}
