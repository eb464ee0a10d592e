mod common;

use common::{fixture, fixtures, partition_oracle};
use proptest::prelude::*;
use semtext::dom::{parse_html, parse_str};
use semtext::segmenter::{combine_phase, search_phase, segment, Segmenter};

fn texts(seq: &semtext::segmenter::BlockSequence) -> Vec<&str> {
    seq.blocks.iter().map(|b| b.text.as_str()).collect()
}

fn segment_fixture(name: &str) -> Vec<String> {
    let root = parse_html(&fixture(name), None).unwrap();
    segment(&root).blocks.into_iter().map(|b| b.text).collect()
}

#[test]
fn search_phase_matches_partition_oracle() {
    let all = fixtures();
    assert!(all.len() >= 25);
    for (name, bytes) in &all {
        let root = parse_html(bytes, None).unwrap();
        let expected = partition_oracle(&root);
        let search = search_phase(&root);
        assert_eq!(texts(&search), expected, "{name}");
        let combined = combine_phase(search);
        assert_eq!(
            texts(&combined).join(" "),
            expected.join(" "),
            "{name}: combining must not lose or reorder text"
        );
    }
}

#[test]
fn combine_is_idempotent_on_fixtures() {
    for (name, bytes) in fixtures() {
        let root = parse_html(&bytes, None).unwrap();
        let once = segment(&root);
        assert_eq!(combine_phase(once.clone()), once, "{name}");
    }
}

#[test]
fn origin_spans_tile_the_search_phase() {
    for (name, bytes) in fixtures() {
        let root = parse_html(&bytes, None).unwrap();
        let n = search_phase(&root).len();
        let combined = segment(&root);
        let mut next = 0;
        for b in &combined.blocks {
            assert_eq!(b.origin_span.0, next, "{name}");
            assert!(b.origin_span.1 > b.origin_span.0);
            next = b.origin_span.1;
        }
        assert_eq!(next, n, "{name}");
    }
}

#[test]
fn sibling_leaves_with_equal_paths_merge() {
    assert_eq!(
        segment_fixture("02_case1_siblings.html"),
        ["First link Second link Third link", "Fourth link", "Fifth link"]
    );
}

#[test]
fn only_child_merges_into_parent() {
    assert_eq!(
        segment_fixture("03_case2_only_child.html"),
        ["Intro text Only child paragraph text", "Second wrapper", "One Two"]
    );
}

#[test]
fn separated_or_mismatched_blocks_stay_apart() {
    assert_eq!(segment_fixture("04_case3_separated.html").len(), 4);
    // Each level adds a class token, so no parent and child agree.
    assert_eq!(segment_fixture("05_case4_chain.html").len(), 5);
}

#[test]
fn only_child_chains_collapse() {
    let root = parse_str("<div class=a>x<div class=a>y<p class=a>z</p></div></div>").unwrap();
    // Class paths differ in length at every level.
    assert_eq!(segment(&root).len(), 3);
    let root = parse_str("<section>top<div>mid<div>low<p>leaf</p></div></div></section>").unwrap();
    let seq = segment(&root);
    assert_eq!(texts(&seq), ["top mid low leaf"]);
    assert_eq!(seq.blocks[0].tag_seq, ["section"]);
}

#[test]
fn discarded_subtrees_and_inline_tags() {
    assert_eq!(
        segment_fixture("06_group1_script_style.html"),
        ["Visible paragraph After scripts"]
    );
    assert_eq!(
        segment_fixture("07_group1_media_forms.html"),
        ["Before media after image Closing paragraph"]
    );
    let inline = segment_fixture("08_group2_inline.html");
    assert_eq!(inline.len(), 1);
    assert!(inline[0].starts_with("Some emphasised, strong, bold and italic words with a link"));
    assert_eq!(segment_fixture("10_br_lines.html")[0], "Line one Line two Line three end");
}

#[test]
fn inline_element_spanning_a_block_boundary() {
    assert_eq!(
        segment_fixture("09_group2_across_boundary.html"),
        [
            "start of span",
            "block inside span",
            "end of span link text",
            "paragraph in link",
            "trailing link text"
        ]
    );
}

#[test]
fn malformed_markup() {
    assert_eq!(
        segment_fixture("11_unclosed_p.html"),
        ["First unclosed paragraph Second unclosed paragraph Third one bold", "After the div"]
    );
    assert_eq!(
        segment_fixture("12_unclosed_li.html"),
        ["Home About", "Contact", "Email Phone", "Careers", "one two"]
    );
    assert_eq!(segment_fixture("14_stray_end_tags.html"), ["Real div text", "Paragraph"]);
    let table = segment_fixture("13_table_layout.html");
    assert_eq!(table[1], "Main column text about the harvest and drought");
    assert_eq!(segment_fixture("16_headings.html").len(), 7);
}

#[test]
fn entities_and_encodings() {
    let text = segment_fixture("17_entities.html").join(" ");
    assert!(text.contains("Fish & chips <tag> \"quoted\" 'single'"));
    assert!(text.contains("Numeric ABC and &unknown; and &amp without"));
    assert!(text.contains('\u{1F600}'));
    assert_eq!(segment_fixture("26_meta_charset_latin1.html"), ["Café crème brûlée naïve résumé"]);
    let news = segment_fixture("01_news_article.html");
    assert!(news.iter().any(|t| t == "By Dana Reyes \u{b7} March 3"));
}

#[test]
fn empty_and_punctuation_text_is_dropped() {
    assert_eq!(segment_fixture("22_whitespace_only.html"), ["real text with spaces"]);
    assert_eq!(segment_fixture("23_punctuation_blocks.html"), ["Only this paragraph has words"]);
}

#[test]
fn deep_nesting_is_bounded() {
    let root = parse_html(&fixture("20_deep_nesting.html"), None).unwrap();
    let seq = segment(&root);
    assert_eq!(texts(&seq), ["deep text", "after deep"]);
    assert!(seq.blocks[0].tag_seq.len() <= 513);
}

#[test]
fn include_ids_extends_class_path() {
    let root = parse_html(&fixture("30_attributes_and_ids.html"), None).unwrap();
    let plain = Segmenter::default().segment(&root);
    let with_ids = Segmenter {
        include_ids: true,
        ..Segmenter::default()
    }
    .segment(&root);
    assert_eq!(plain.blocks[0].class_seq, ["Article", "articleBody", "js-track"]);
    assert!(with_ids.blocks[0].class_seq.iter().any(|c| c == "main-content"));
    assert!(with_ids.blocks[1].class_seq.iter().any(|c| c == "Side"));
    assert_eq!(texts(&plain), texts(&with_ids));
}

#[test]
fn tag_paths_record_block_elements_only() {
    let root = parse_html(&fixture("01_news_article.html"), None).unwrap();
    let seq = segment(&root);
    let title = seq.blocks.iter().find(|b| b.text.starts_with("Council")).unwrap();
    assert_eq!(title.tag_seq, ["body", "main", "article", "h1"]);
    assert_eq!(title.class_seq, ["story", "story-title"]);
    assert!(seq.blocks.iter().all(|b| !b.tag_seq.iter().any(|t| t == "span" || t == "a")));
}

fn markup() -> impl Strategy<Value = String> {
    let word = "[a-z]{1,6}|[ \n\t]{1,3}|&amp;|[.,|]";
    let tag = prop::sample::select(vec![
        "p", "div", "span", "b", "li", "ul", "br", "script", "td", "tr", "table", "h1", "img", "em",
    ]);
    let piece = prop_oneof![
        3 => word.prop_map(|s| s.to_string()),
        1 => tag.clone().prop_map(|t| format!("<{t}>")),
        1 => tag.clone().prop_map(|t| format!("</{t}>")),
        1 => (tag, "[a-z]{1,4}").prop_map(|(t, c)| format!("<{t} class=\"{c}\">")),
    ];
    prop::collection::vec(piece, 0..60).prop_map(|v| v.concat())
}

proptest! {
    #[test]
    fn parser_never_panics(bytes in prop::collection::vec(any::<u8>(), 0..400)) {
        if let Ok(root) = parse_html(&bytes, None) {
            let _ = segment(&root);
        }
    }

    #[test]
    fn parser_never_panics_on_tag_soup(src in "[<>/a-z =\"'!&;-]{0,200}") {
        if let Ok(root) = parse_str(&src) {
            let _ = segment(&root);
        }
    }

    #[test]
    fn segmentation_preserves_text(body in markup()) {
        let root = parse_str(&format!("<html><body>{body}</body></html>")).unwrap();
        let expected = partition_oracle(&root);
        let search = search_phase(&root);
        prop_assert_eq!(texts(&search), expected.iter().map(String::as_str).collect::<Vec<_>>());
        let combined = combine_phase(search);
        prop_assert_eq!(texts(&combined).join(" "), expected.join(" "));
        prop_assert_eq!(combine_phase(combined.clone()), combined);
    }
}
