//! Search-and-combine segmentation of a DOM tree into text blocks.
//!
//! The search phase walks the tree depth-first and cuts the character data at
//! every block-level (group-3) tag boundary, opening or closing. Each non-empty
//! piece becomes a block carrying the group-3 tags and class tokens on its
//! root-to-block path. The combine phase then merges adjacent blocks that are
//! leaf siblings with identical paths, or a parent with its only child when
//! their class paths agree.

use std::collections::HashMap;

use crate::dom::{DomChild, DomNode, NodeId, TagGroup, TagGroups};

/// Where a block came from in the DOM. Only blocks produced by the search
/// phase carry one; blocks loaded from datasets do not and are never merged.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Provenance {
    /// Innermost group-3 element enclosing the text (the document root when none).
    pub node: NodeId,
    /// Nearest group-3 ancestor of `node`, or the document root.
    pub parent: Option<NodeId>,
    /// `node` has no group-3 element children.
    pub leaf: bool,
    /// Number of group-3 element children of `node`.
    pub block_children: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TextBlock {
    pub tag_seq: Vec<String>,
    pub class_seq: Vec<String>,
    pub text: String,
    pub depth: usize,
    /// Half-open range of search-phase block indices covered by this block.
    pub origin_span: (usize, usize),
    pub provenance: Option<Provenance>,
}

impl TextBlock {
    /// A block without DOM provenance, as read from a dataset.
    pub fn detached(tag_seq: Vec<String>, class_seq: Vec<String>, text: String) -> Self {
        Self {
            depth: tag_seq.len(),
            tag_seq,
            class_seq,
            text,
            origin_span: (0, 0),
            provenance: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BlockSequence {
    pub blocks: Vec<TextBlock>,
    pub source_id: String,
}

impl BlockSequence {
    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }
}

/// Text carries label signal only if it has a letter or digit.
pub fn is_valid_text(text: &str) -> bool {
    text.chars().any(char::is_alphanumeric)
}

/// Collapses whitespace runs to single spaces and trims.
pub fn normalize_whitespace(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for word in text.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(word);
    }
    out
}

/// Segmentation settings: the tag-group table and whether `id` attribute
/// tokens are appended to the class path.
#[derive(Debug, Clone)]
pub struct Segmenter {
    pub groups: TagGroups,
    pub include_ids: bool,
}

impl Default for Segmenter {
    fn default() -> Self {
        Self {
            groups: TagGroups::builtin().clone(),
            include_ids: false,
        }
    }
}

/// Search phase with the built-in tag groups.
pub fn search_phase(root: &DomNode) -> BlockSequence {
    Segmenter::default().search_phase(root)
}

/// Search phase then combine phase with the built-in tag groups.
pub fn segment(root: &DomNode) -> BlockSequence {
    Segmenter::default().segment(root)
}

struct PathEntry {
    node: NodeId,
    classes_before: usize,
}

struct Search<'a> {
    cfg: &'a Segmenter,
    root: NodeId,
    buf: String,
    tags: Vec<String>,
    classes: Vec<String>,
    path: Vec<PathEntry>,
    children: HashMap<NodeId, usize>,
    blocks: Vec<TextBlock>,
    max_depth: usize,
    volume: usize,
}

impl Search<'_> {
    fn owner(&self) -> NodeId {
        self.path.last().map_or(self.root, |e| e.node)
    }

    fn flush(&mut self) {
        if self.buf.is_empty() {
            return;
        }
        let text = normalize_whitespace(&self.buf);
        self.buf.clear();
        if !is_valid_text(&text) {
            return;
        }
        let parent = match self.path.len() {
            0 => None,
            1 => Some(self.root),
            n => Some(self.path[n - 2].node),
        };
        let i = self.blocks.len();
        self.blocks.push(TextBlock {
            tag_seq: self.tags.clone(),
            class_seq: self.classes.clone(),
            text,
            depth: self.tags.len(),
            origin_span: (i, i + 1),
            provenance: Some(Provenance {
                node: self.owner(),
                parent,
                leaf: true,
                block_children: 0,
            }),
        });
    }

    fn visit(&mut self, node: &DomNode, depth: usize) {
        self.max_depth = self.max_depth.max(depth);
        for child in &node.children {
            match child {
                DomChild::Text(t) => {
                    self.volume += t.len();
                    self.buf.push_str(t);
                }
                DomChild::Element(e) => {
                    self.volume += e.tag.len() + 2;
                    match self.cfg.groups.classify(&e.tag) {
                        TagGroup::Group1 => {}
                        TagGroup::Group2 => {
                            if e.tag == "br" {
                                self.buf.push(' ');
                            }
                            self.visit(e, depth + 1);
                        }
                        TagGroup::Group3 => {
                            self.flush();
                            *self.children.entry(self.owner()).or_default() += 1;
                            self.path.push(PathEntry {
                                node: e.id,
                                classes_before: self.classes.len(),
                            });
                            self.tags.push(e.tag.clone());
                            self.classes.extend(e.class_tokens().map(str::to_string));
                            if self.cfg.include_ids {
                                self.classes.extend(e.id_tokens().map(str::to_string));
                            }
                            self.visit(e, depth + 1);
                            self.flush();
                            let entry = self.path.pop().expect("pushed above");
                            self.tags.pop();
                            self.classes.truncate(entry.classes_before);
                        }
                    }
                }
            }
        }
    }
}

/// How two adjacent blocks combine.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Combine {
    /// Leaf siblings with identical tag and class paths.
    Siblings,
    /// A leaf that is the only block-level child of the preceding block's element.
    OnlyChild,
}

/// Decides whether `x` (stored right before `y`) combines with `y`.
pub fn combine_kind(x: &TextBlock, y: &TextBlock) -> Option<Combine> {
    let (px, py) = (x.provenance?, y.provenance?);
    if px.leaf && py.leaf && px.parent == py.parent && x.tag_seq == y.tag_seq && x.class_seq == y.class_seq {
        return Some(Combine::Siblings);
    }
    if py.leaf
        && py.parent == Some(px.node)
        && px.block_children == 1
        && x.class_seq == y.class_seq
        && x.tag_seq.len() + 1 == y.tag_seq.len()
        && y.tag_seq.starts_with(&x.tag_seq)
    {
        return Some(Combine::OnlyChild);
    }
    None
}

fn merge(x: TextBlock, y: TextBlock) -> TextBlock {
    let px = x.provenance.expect("only blocks with provenance combine");
    let mut text = x.text;
    text.push(' ');
    text.push_str(&y.text);
    TextBlock {
        tag_seq: x.tag_seq,
        class_seq: x.class_seq,
        text,
        depth: x.depth,
        origin_span: (x.origin_span.0, y.origin_span.1),
        provenance: Some(Provenance {
            node: px.node,
            parent: px.parent,
            leaf: true,
            block_children: 0,
        }),
    }
}

/// Merges adjacent blocks, scanning right to left. After every merge the
/// result is compared with its new right neighbour, so no adjacent pair of the
/// output combines and a second pass is a no-op.
pub fn combine_phase(seq: BlockSequence) -> BlockSequence {
    let mut out: Vec<TextBlock> = Vec::with_capacity(seq.blocks.len());
    for block in seq.blocks.into_iter().rev() {
        let mut cur = block;
        while let Some(next) = out.last() {
            if combine_kind(&cur, next).is_none() {
                break;
            }
            let next = out.pop().expect("checked above");
            cur = merge(cur, next);
        }
        out.push(cur);
    }
    out.reverse();
    BlockSequence {
        blocks: out,
        source_id: seq.source_id,
    }
}

impl Segmenter {
    pub fn search_phase(&self, root: &DomNode) -> BlockSequence {
        self.search(root).0
    }

    /// Returns the blocks plus (tree height, rough document volume).
    fn search(&self, root: &DomNode) -> (BlockSequence, usize, usize) {
        let mut s = Search {
            cfg: self,
            root: root.id,
            buf: String::new(),
            tags: Vec::new(),
            classes: Vec::new(),
            path: Vec::new(),
            children: HashMap::new(),
            blocks: Vec::new(),
            max_depth: 0,
            volume: 0,
        };
        s.visit(root, 0);
        s.flush();
        let children = s.children;
        let mut blocks = s.blocks;
        for block in &mut blocks {
            if let Some(p) = &mut block.provenance {
                p.block_children = children.get(&p.node).copied().unwrap_or(0);
                p.leaf = p.block_children == 0;
            }
        }
        let seq = BlockSequence {
            blocks,
            source_id: String::new(),
        };
        (seq, s.max_depth, s.volume)
    }

    pub fn segment(&self, root: &DomNode) -> BlockSequence {
        let (seq, height, volume) = self.search(root);
        if height.saturating_mul(height) > volume.max(1) {
            log::warn!(
                "segmenter: DOM height {height} exceeds the square root of document size {volume}"
            );
        }
        combine_phase(seq)
    }
}
