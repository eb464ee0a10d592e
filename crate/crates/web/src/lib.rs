//! Browser bindings: segment a page and explore CRF decoding.

use serde::{Deserialize, Serialize};
use wasm_bindgen::prelude::*;

use semtext::dom::parse_str;
use semtext::labeler::{Emission, Label, Transitions};
use semtext::lexicalizer::Lexicon;
use semtext::segmenter::{combine_phase, Segmenter, TextBlock};

#[derive(Serialize)]
struct BlockView<'a> {
    tags: &'a [String],
    classes: &'a [String],
    text: &'a str,
    /// Search-phase blocks merged into this one.
    span: (usize, usize),
    words: [&'a [String]; 3],
}

#[derive(Serialize)]
struct Segmentation<'a> {
    search: Vec<&'a str>,
    blocks: Vec<BlockView<'a>>,
}

fn view<'a>(b: &'a TextBlock, words: &'a semtext::lexicalizer::WordStrings) -> BlockView<'a> {
    BlockView {
        tags: &b.tag_seq,
        classes: &b.class_seq,
        text: &b.text,
        span: b.origin_span,
        words: words.lists(),
    }
}

/// Search-phase texts, combined blocks and their word strings, as JSON.
pub fn segment_json(html: &str, include_ids: bool, n: usize) -> Result<String, String> {
    let root = parse_str(html).map_err(|e| e.to_string())?;
    let segmenter = Segmenter {
        include_ids,
        ..Segmenter::default()
    };
    let search = segmenter.search_phase(&root);
    let combined = combine_phase(search.clone());
    let lexicon = Lexicon::builtin();
    let words: Vec<_> = combined
        .blocks
        .iter()
        .map(|b| lexicon.lexicalize_block(b, n))
        .collect();
    let out = Segmentation {
        search: search.blocks.iter().map(|b| b.text.as_str()).collect(),
        blocks: combined.blocks.iter().zip(&words).map(|(b, w)| view(b, w)).collect(),
    };
    Ok(serde_json::to_string(&out).expect("segmentation serializes"))
}

#[derive(Deserialize)]
struct CrfInput {
    emissions: Vec<Emission>,
    #[serde(default)]
    transitions: Transitions,
}

#[derive(Serialize)]
struct CrfView {
    path: Vec<Label>,
    score: f64,
    log_partition: f64,
    probability: f64,
    main_marginals: Vec<f64>,
}

/// Viterbi path, its score and probability, and per-block P(main), as JSON.
pub fn crf_json(input: &str) -> Result<String, String> {
    let input: CrfInput = serde_json::from_str(input).map_err(|e| e.to_string())?;
    let t = input.transitions;
    let (path, score) = t.viterbi(&input.emissions);
    let marg = t.marginals(&input.emissions);
    let out = CrfView {
        path,
        score,
        log_partition: marg.log_partition,
        probability: (score - marg.log_partition).exp(),
        main_marginals: marg.nodes.iter().map(|p| p[Label::Main.index()]).collect(),
    };
    Ok(serde_json::to_string(&out).expect("decoding serializes"))
}

#[wasm_bindgen]
pub fn segment_html(html: &str, include_ids: bool) -> Result<String, JsError> {
    segment_json(html, include_ids, 50).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn crf_explore(input: &str) -> Result<String, JsError> {
    crf_json(input).map_err(|e| JsError::new(&e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn segments() {
        let json = segment_json(r#"<ul class="nav"><li>a</li><li>b</li></ul><p>Body text</p>"#, false, 50).unwrap();
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v["search"].as_array().unwrap().len(), 3);
        assert_eq!(v["blocks"][0]["text"], "a b");
        assert_eq!(v["blocks"][0]["span"], serde_json::json!([0, 2]));
        assert_eq!(v["blocks"][1]["words"][2], serde_json::json!(["body", "text"]));
        assert!(segment_json("", false, 50).is_err());
    }

    #[test]
    fn decodes() {
        let json = crf_json(r#"{"emissions": [[0, 2], [1, 0]], "transitions": {"matrix": [[0, 0], [0, 2]], "start": [0, 0], "stop": [0, 0]}}"#).unwrap();
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v["path"], serde_json::json!(["main", "main"]));
        assert_eq!(v["score"], 4.0);
        let p = v["probability"].as_f64().unwrap();
        assert!(p > 0.0 && p < 1.0);
        assert!(crf_json(r#"{"emissions": [[1, 2]]}"#).is_ok());
        assert!(crf_json("[]").is_err());
    }
}
