//! Stack-based tree construction with implicit-close repair.

use super::tokenizer::Token;
use super::{DomChild, DomNode, NodeId, ROOT_TAG};

/// Open elements beyond this depth are attached but not entered.
pub(crate) const MAX_DEPTH: usize = 512;

const VOID: &[&str] = &[
    "area", "base", "br", "col", "embed", "hr", "img", "input", "keygen", "link", "meta", "param",
    "source", "track", "wbr", "frame", "image",
];

/// Start tags that close an open `p` in button scope.
const CLOSES_P: &[&str] = &[
    "address", "article", "aside", "blockquote", "center", "details", "dialog", "dir", "div",
    "dl", "dd", "dt", "fieldset", "figcaption", "figure", "footer", "form", "h1", "h2", "h3", "h4",
    "h5", "h6", "header", "hgroup", "hr", "li", "listing", "main", "menu", "nav", "ol", "p",
    "plaintext", "pre", "search", "section", "summary", "table", "ul", "xmp",
];

const HEADINGS: &[&str] = &["h1", "h2", "h3", "h4", "h5", "h6"];

/// Elements that bound the search for an element to close.
const SCOPE: &[&str] = &[
    "applet", "caption", "html", "table", "td", "th", "marquee", "object", "template",
];

const TABLE_PARTS: &[&str] = &[
    "table", "caption", "colgroup", "tbody", "thead", "tfoot", "tr", "td", "th",
];
const TABLE_SCOPE: &[&str] = &["table", "template", "html"];
const TABLE_SCOPE_TR: &[&str] = &["table", "template", "html", "tbody", "thead", "tfoot"];
const TABLE_SCOPE_CELL: &[&str] = &["table", "template", "html", "tbody", "thead", "tfoot", "tr"];

/// Elements that may appear only once on the open-element stack.
const SINGLETONS: &[&str] = &["html", "head", "body"];

struct RawNode {
    tag: String,
    attrs: Vec<(String, String)>,
    children: Vec<RawChild>,
}

enum RawChild {
    Element(usize),
    Text(String),
}

pub(crate) struct TreeBuilder {
    nodes: Vec<RawNode>,
    stack: Vec<usize>,
}

impl TreeBuilder {
    pub(crate) fn new() -> Self {
        Self {
            nodes: vec![RawNode {
                tag: ROOT_TAG.to_string(),
                attrs: Vec::new(),
                children: Vec::new(),
            }],
            stack: vec![0],
        }
    }

    fn top(&self) -> usize {
        *self.stack.last().expect("root never leaves the stack")
    }

    fn tag_at(&self, i: usize) -> &str {
        &self.nodes[self.stack[i]].tag
    }

    pub(crate) fn feed(&mut self, token: Token) {
        match token {
            Token::Text(text) => self.text(text),
            Token::Start { name, attrs, .. } => self.start(name, attrs),
            Token::End { name } => self.end(&name),
        }
    }

    fn text(&mut self, text: String) {
        let top = self.top();
        let children = &mut self.nodes[top].children;
        if let Some(RawChild::Text(prev)) = children.last_mut() {
            prev.push_str(&text);
        } else {
            children.push(RawChild::Text(text));
        }
    }

    /// Pops through the nearest open element in `targets`, unless an element
    /// in `barriers` (or, with `scoped`, the scope set) is reached first.
    fn close_nearest(&mut self, targets: &[&str], barriers: &[&str], scoped: bool) {
        for i in (1..self.stack.len()).rev() {
            let tag = self.tag_at(i);
            if targets.contains(&tag) {
                self.stack.truncate(i);
                return;
            }
            if barriers.contains(&tag) || (scoped && SCOPE.contains(&tag)) {
                return;
            }
        }
    }

    fn close_implied(&mut self, tag: &str) {
        if CLOSES_P.contains(&tag) {
            self.close_nearest(&["p"], &["button"], true);
        }
        match tag {
            "li" => self.close_nearest(&["li"], &["ul", "ol", "menu", "dir"], true),
            "dd" | "dt" => self.close_nearest(&["dd", "dt"], &["dl"], true),
            "tr" => self.close_nearest(&["tr"], TABLE_SCOPE_TR, false),
            "td" | "th" => self.close_nearest(&["td", "th"], TABLE_SCOPE_CELL, false),
            "tbody" | "thead" | "tfoot" => {
                self.close_nearest(&["tbody", "thead", "tfoot"], TABLE_SCOPE, false)
            }
            "option" => self.close_nearest(&["option"], &["select", "datalist", "optgroup"], true),
            "optgroup" => self.close_nearest(&["optgroup", "option"], &["select", "datalist"], true),
            "a" => self.close_nearest(&["a"], &[], true),
            _ => {}
        }
        if HEADINGS.contains(&tag) && HEADINGS.contains(&self.nodes[self.top()].tag.as_str()) {
            self.stack.pop();
        }
    }

    fn start(&mut self, tag: String, attrs: Vec<(String, String)>) {
        if SINGLETONS.contains(&tag.as_str())
            && self.stack.iter().any(|&i| self.nodes[i].tag == tag)
        {
            return;
        }
        self.close_implied(&tag);
        let enter = !VOID.contains(&tag.as_str()) && self.stack.len() < MAX_DEPTH;
        let id = self.nodes.len();
        self.nodes.push(RawNode {
            tag,
            attrs,
            children: Vec::new(),
        });
        let top = self.top();
        self.nodes[top].children.push(RawChild::Element(id));
        if enter {
            self.stack.push(id);
        }
    }

    fn end(&mut self, tag: &str) {
        let barriers = if TABLE_PARTS.contains(&tag) {
            TABLE_SCOPE
        } else {
            SCOPE
        };
        for i in (1..self.stack.len()).rev() {
            let open = self.tag_at(i);
            if open == tag {
                self.stack.truncate(i);
                return;
            }
            if barriers.contains(&open) {
                // e.g. `</div>` inside a table cell does not reach outside it.
                return;
            }
        }
    }

    /// Number of elements created (the synthetic root excluded).
    pub(crate) fn element_count(&self) -> usize {
        self.nodes.len() - 1
    }

    pub(crate) fn finish(mut self) -> DomNode {
        let mut slots: Vec<Option<RawNode>> = self.nodes.drain(..).map(Some).collect();
        build(&mut slots, 0)
    }
}

fn build(slots: &mut [Option<RawNode>], id: usize) -> DomNode {
    let raw = slots[id].take().expect("each node has exactly one parent");
    let children = raw
        .children
        .into_iter()
        .map(|c| match c {
            RawChild::Element(child) => DomChild::Element(build(slots, child)),
            RawChild::Text(t) => DomChild::Text(t),
        })
        .collect();
    DomNode {
        id: NodeId(id),
        tag: raw.tag,
        attributes: raw.attrs,
        children,
    }
}
