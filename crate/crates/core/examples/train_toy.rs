//! Trains on the synthetic corpus and prints the per-epoch log.
//!
//! `cargo run --release --example train_toy -- [full|text] [seed] [epochs] [lr]`

use std::time::Instant;

use semtext::lexicalizer::Lexicon;
use semtext::model::FeatureMask;
use semtext::synth::{toy_corpus, toy_train_config, ToyCorpusConfig};
use semtext::trainer::train;

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let arg = |i: usize| args.get(i).map(String::as_str);
    let mask = match arg(0) {
        Some("text") => FeatureMask::TEXT_ONLY,
        _ => FeatureMask::ALL,
    };
    let seed = arg(1).map_or(7, |s| s.parse().expect("seed"));
    let (mut config, store) = toy_train_config(mask, seed);
    if let Some(e) = arg(2) {
        config.epochs = e.parse().expect("epochs");
    }
    if let Some(lr) = arg(3) {
        config.learning_rate = lr.parse().expect("learning rate");
    }

    let corpus = toy_corpus(&ToyCorpusConfig::default());
    let start = Instant::now();
    let out = train(&corpus, &store, Lexicon::builtin(), &config, None).unwrap();
    for e in &out.log {
        println!("{:>3} loss {:.4} P {:.4} R {:.4} F1 {:.4}", e.epoch, e.loss, e.precision, e.recall, e.f1);
    }
    let best = out.log.get(out.best_epoch.wrapping_sub(1)).map_or(0.0, |e| e.f1);
    println!("best epoch {} (F1 {best:.4}) in {:.1?}", out.best_epoch, start.elapsed());
}
