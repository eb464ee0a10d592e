//! HTML parsing into a lenient DOM tree, and tag classification.

mod builder;
mod encoding;
mod groups;
mod tokenizer;

use thiserror::Error;

pub use groups::{classify_tag, TagGroup, TagGroups};

/// Tag name of the synthetic document root.
pub const ROOT_TAG: &str = "#document";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DomError {
    #[error("cannot decode input as {encoding}: {reason}")]
    Encoding { encoding: String, reason: String },
    #[error("document contains no elements")]
    EmptyDocument,
}

/// Identity of an element within one parsed document, in document order.
/// The synthetic root is `NodeId(0)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(pub usize);

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DomChild {
    Element(DomNode),
    Text(String),
}

/// An element. Character data lives in [`DomChild::Text`] entries
/// interleaved with child elements in source order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DomNode {
    pub id: NodeId,
    pub tag: String,
    pub attributes: Vec<(String, String)>,
    pub children: Vec<DomChild>,
}

impl DomNode {
    pub fn attr(&self, name: &str) -> Option<&str> {
        self.attributes
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_str())
    }

    /// Whitespace-separated tokens of the `class` attribute.
    pub fn class_tokens(&self) -> impl Iterator<Item = &str> {
        self.attr("class").unwrap_or("").split_ascii_whitespace()
    }

    pub fn id_tokens(&self) -> impl Iterator<Item = &str> {
        self.attr("id").unwrap_or("").split_ascii_whitespace()
    }

    pub fn elements(&self) -> impl Iterator<Item = &DomNode> {
        self.children.iter().filter_map(|c| match c {
            DomChild::Element(e) => Some(e),
            DomChild::Text(_) => None,
        })
    }

    pub fn is_root(&self) -> bool {
        self.tag == ROOT_TAG
    }

    /// All character data below this node, in document order.
    pub fn text_content(&self) -> String {
        let mut out = String::new();
        let mut stack: Vec<std::slice::Iter<'_, DomChild>> = vec![self.children.iter()];
        while let Some(iter) = stack.last_mut() {
            match iter.next() {
                Some(DomChild::Text(t)) => out.push_str(t),
                Some(DomChild::Element(e)) => stack.push(e.children.iter()),
                None => {
                    stack.pop();
                }
            }
        }
        out
    }

    /// Height of the tree rooted here; a node without element children has height 0.
    pub fn height(&self) -> usize {
        let mut best = 0;
        let mut stack = vec![(self, 0usize)];
        while let Some((node, depth)) = stack.pop() {
            best = best.max(depth);
            stack.extend(node.elements().map(|e| (e, depth + 1)));
        }
        best
    }

    /// Number of elements in this subtree, including this one.
    pub fn element_count(&self) -> usize {
        let mut count = 0;
        let mut stack = vec![self];
        while let Some(node) = stack.pop() {
            count += 1;
            stack.extend(node.elements());
        }
        count
    }
}

/// Parses HTML bytes into a tree rooted at a synthetic `#document` node.
///
/// Never fails on malformed markup; fails only when the bytes cannot be
/// decoded or no element survives parsing.
pub fn parse_html(bytes: &[u8], encoding_hint: Option<&str>) -> Result<DomNode, DomError> {
    let text = encoding::decode(bytes, encoding_hint)?;
    parse_str(&text)
}

/// Parses already-decoded HTML text.
pub fn parse_str(text: &str) -> Result<DomNode, DomError> {
    let mut builder = builder::TreeBuilder::new();
    for token in tokenizer::tokenize(text) {
        builder.feed(token);
    }
    if builder.element_count() == 0 {
        return Err(DomError::EmptyDocument);
    }
    Ok(builder.finish())
}

/// Character data of `text` with markup removed, as the tokenizer sees it.
#[doc(hidden)]
pub fn character_data(text: &str) -> String {
    tokenizer::tokenize(text)
        .into_iter()
        .filter_map(|t| match t {
            tokenizer::Token::Text(s) => Some(s),
            _ => None,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> DomNode {
        parse_str(s).unwrap()
    }

    /// Compact rendering: `tag(children)` with text in quotes.
    fn shape(node: &DomNode) -> String {
        let inner: Vec<String> = node
            .children
            .iter()
            .map(|c| match c {
                DomChild::Element(e) => shape(e),
                DomChild::Text(t) => format!("{t:?}"),
            })
            .collect();
        format!("{}({})", node.tag, inner.join(","))
    }

    #[test]
    fn minimal_paragraph() {
        let root = parse("<p>a</p>");
        assert!(root.is_root());
        assert_eq!(shape(&root), r#"#document(p("a"))"#);
    }

    #[test]
    fn implicit_paragraph_close() {
        let root = parse("<div><p>a<p>b</div>");
        assert_eq!(shape(&root), r#"#document(div(p("a"),p("b")))"#);
    }

    #[test]
    fn empty_input() {
        assert_eq!(parse_html(b"", None), Err(DomError::EmptyDocument));
        assert_eq!(parse_html(b"just text", None), Err(DomError::EmptyDocument));
        assert_eq!(parse_html(b"<!-- only a comment -->", None), Err(DomError::EmptyDocument));
    }

    #[test]
    fn list_items_close_each_other() {
        let root = parse("<ul><li>a<li>b<ul><li>c</ul><li>d</ul>");
        assert_eq!(
            shape(&root),
            r#"#document(ul(li("a"),li("b",ul(li("c"))),li("d")))"#
        );
    }

    #[test]
    fn table_repair() {
        let root = parse("<table><tr><td>a<td>b<tr><td>c</div></table>x");
        assert_eq!(
            shape(&root),
            r#"#document(table(tr(td("a"),td("b")),tr(td("c"))),"x")"#
        );
    }

    #[test]
    fn stray_end_tags_are_dropped() {
        let root = parse("</span><div>a</em>b</div></div>c");
        assert_eq!(shape(&root), r#"#document(div("ab"),"c")"#);
    }

    #[test]
    fn void_elements_do_not_nest() {
        let root = parse("<p>a<br>b<img src=x>c</p>");
        assert_eq!(shape(&root), r#"#document(p("a",br(),"b",img(),"c"))"#);
    }

    #[test]
    fn script_content_is_kept_verbatim() {
        let root = parse("<div><script>var x = '<p>';</script>y</div>");
        assert_eq!(shape(&root), r#"#document(div(script("var x = '<p>';"),"y"))"#);
    }

    #[test]
    fn headings_do_not_nest() {
        let root = parse("<h1>a<h2>b</h2>");
        assert_eq!(shape(&root), r#"#document(h1("a"),h2("b"))"#);
    }

    #[test]
    fn attributes_and_classes() {
        let root = parse(r#"<DIV CLASS="story  feed" ID=main>x</DIV>"#);
        let div = root.elements().next().unwrap();
        assert_eq!(div.tag, "div");
        assert_eq!(div.class_tokens().collect::<Vec<_>>(), ["story", "feed"]);
        assert_eq!(div.id_tokens().collect::<Vec<_>>(), ["main"]);
    }

    #[test]
    fn node_ids_follow_document_order() {
        let root = parse("<div><p>a</p><p>b</p></div>");
        let div = root.elements().next().unwrap();
        let ids: Vec<usize> = div.elements().map(|e| e.id.0).collect();
        assert_eq!(div.id, NodeId(1));
        assert_eq!(ids, [2, 3]);
    }

    #[test]
    fn very_deep_nesting_is_capped() {
        let src = "<div>".repeat(5000) + "deep" + &"</div>".repeat(5000);
        let root = parse(&src);
        assert!(root.height() <= builder::MAX_DEPTH);
        assert_eq!(root.text_content(), "deep");
    }

    #[test]
    fn text_is_preserved() {
        let src = "<html><body><div>a &amp; b<p>c<em>d</em></div>e</p><!--x-->f</body></html>";
        let root = parse(src);
        assert_eq!(root.text_content(), character_data(src));
        assert_eq!(root.text_content(), "a & bcdef");
    }
}
