use std::collections::HashMap;
use std::fmt;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::resources::{self, TableError};

/// How a tag participates in text-block segmentation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TagGroup {
    /// Tag and everything it encloses are discarded.
    Group1,
    /// Tag is discarded, enclosed text is kept in the surrounding block.
    Group2,
    /// Tag delimits text blocks and is recorded on the block's path.
    Group3,
}

impl TagGroup {
    fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "1" | "group1" => Some(Self::Group1),
            "2" | "group2" => Some(Self::Group2),
            "3" | "group3" => Some(Self::Group3),
            _ => None,
        }
    }
}

impl fmt::Display for TagGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = match self {
            Self::Group1 => 1,
            Self::Group2 => 2,
            Self::Group3 => 3,
        };
        write!(f, "GROUP{n}")
    }
}

/// Tag to group lookup table. Tags missing from the table get `default`.
#[derive(Debug, Clone)]
pub struct TagGroups {
    table: HashMap<String, TagGroup>,
    default: TagGroup,
}

impl TagGroups {
    pub fn builtin() -> &'static TagGroups {
        static BUILTIN: OnceLock<TagGroups> = OnceLock::new();
        BUILTIN.get_or_init(|| {
            Self::parse(resources::TAG_GROUPS).expect("embedded tag group table is well-formed")
        })
    }

    /// Parses a `tag<TAB>group` table. Blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self, TableError> {
        let mut table = HashMap::new();
        for (line_no, tag, group) in resources::parse_pairs(text)? {
            let group = TagGroup::parse(group).ok_or_else(|| TableError::Malformed {
                line: line_no,
                reason: format!("unknown group {group:?}"),
            })?;
            table.insert(tag.to_ascii_lowercase(), group);
        }
        Ok(Self {
            table,
            default: TagGroup::Group3,
        })
    }

    pub fn with_default(mut self, default: TagGroup) -> Self {
        self.default = default;
        self
    }

    pub fn set(&mut self, tag: &str, group: TagGroup) {
        self.table.insert(tag.to_ascii_lowercase(), group);
    }

    pub fn classify(&self, tag: &str) -> TagGroup {
        self.table.get(tag).copied().unwrap_or(self.default)
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }
}

/// Classifies `tag` with the built-in table.
pub fn classify_tag(tag: &str) -> TagGroup {
    TagGroups::builtin().classify(tag)
}
