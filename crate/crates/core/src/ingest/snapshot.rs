//! Canonical JSON snapshot documents.
//!
//! Key order is fixed by the document structs below. Snapshots are written
//! with children sorted by name, two-space indentation, LF line endings and a
//! single trailing newline, so equal trees always produce identical bytes.

use std::fs;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::timefmt;
use crate::tree::{FolderNode, FolderTree, TreeError};

pub const FORMAT_VERSION: u64 = 1;

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed document at {at}: {message}")]
    Parse { at: String, message: String },
    #[error("unsupported format_version {0}")]
    UnsupportedVersion(u64),
    #[error("invalid tree: {0}")]
    Invalid(#[from] TreeError),
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct NodeDoc {
    name: String,
    direct_files: u64,
    accessible_files: u64,
    #[serde(with = "timefmt")]
    modified_at: DateTime<Utc>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    collapsed_ancestors: Vec<String>,
    children: Vec<NodeDoc>,
}

/// Top-level block carried by reduced-tree documents.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct ReductionBlock {
    pub t: f64,
    pub pruned_folder_count: usize,
    pub collapsed_folder_count: usize,
    pub retained_file_fraction: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct TreeDoc {
    format_version: u64,
    source: String,
    #[serde(with = "timefmt")]
    scanned_at: DateTime<Utc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reduction: Option<ReductionBlock>,
    root: NodeDoc,
}

#[derive(Deserialize)]
struct VersionProbe {
    format_version: Option<serde_json::Value>,
}

impl From<&FolderNode> for NodeDoc {
    fn from(node: &FolderNode) -> Self {
        NodeDoc {
            name: node.name.clone(),
            direct_files: node.direct_files,
            accessible_files: node.accessible_files,
            modified_at: node.modified_at,
            collapsed_ancestors: node.collapsed_ancestors.clone(),
            children: node.children.iter().map(NodeDoc::from).collect(),
        }
    }
}

impl From<NodeDoc> for FolderNode {
    fn from(doc: NodeDoc) -> Self {
        FolderNode {
            name: doc.name,
            direct_files: doc.direct_files,
            accessible_files: doc.accessible_files,
            modified_at: doc.modified_at,
            children: doc.children.into_iter().map(FolderNode::from).collect(),
            collapsed_ancestors: doc.collapsed_ancestors,
        }
    }
}

impl TreeDoc {
    pub(crate) fn new(tree: &FolderTree, reduction: Option<ReductionBlock>) -> Self {
        TreeDoc {
            format_version: FORMAT_VERSION,
            source: tree.source.clone(),
            scanned_at: tree.scanned_at,
            reduction,
            root: NodeDoc::from(&tree.root),
        }
    }

    pub(crate) fn into_tree(self) -> Result<FolderTree, SnapshotError> {
        let tree = FolderTree::new(self.root.into(), self.source, self.scanned_at);
        tree.validate()?;
        Ok(tree)
    }
}

/// Serializes with the canonical pretty layout shared by every document.
pub(crate) fn to_canonical_json<T: Serialize>(value: &T) -> String {
    let mut out =
        serde_json::to_string_pretty(value).expect("document serialization is infallible");
    out.push('\n');
    out
}

fn deserialize_unbounded<T: DeserializeOwned>(text: &str) -> Result<T, SnapshotError> {
    let mut de = serde_json::Deserializer::from_str(text);
    de.disable_recursion_limit();
    let value = serde_path_to_error::deserialize(&mut de).map_err(|e| SnapshotError::Parse {
        at: path_label(e.path()),
        message: e.inner().to_string(),
    })?;
    de.end().map_err(|e| SnapshotError::Parse {
        at: "<end>".into(),
        message: e.to_string(),
    })?;
    Ok(value)
}

pub(crate) fn path_label(path: &serde_path_to_error::Path) -> String {
    let rendered = path.to_string();
    if rendered == "." {
        "<document>".into()
    } else {
        rendered
    }
}

/// Parses a tree document (snapshot or reduced) after checking its version.
pub(crate) fn parse_tree_doc(text: &str) -> Result<TreeDoc, SnapshotError> {
    check_version(text)?;
    deserialize_unbounded(text)
}

/// Rejects unknown `format_version` values before the full schema is applied.
pub(crate) fn check_version(text: &str) -> Result<(), SnapshotError> {
    let probe: VersionProbe = deserialize_unbounded(text)?;
    let Some(version) = probe.format_version else {
        return Err(SnapshotError::Parse {
            at: "format_version".into(),
            message: "missing field `format_version`".into(),
        });
    };
    match version.as_u64() {
        Some(FORMAT_VERSION) => Ok(()),
        Some(other) => Err(SnapshotError::UnsupportedVersion(other)),
        None => Err(SnapshotError::Parse {
            at: "format_version".into(),
            message: format!("expected an unsigned integer, found {version}"),
        }),
    }
}

/// Canonical snapshot text: children sorted by name.
pub fn snapshot_to_json(tree: &FolderTree) -> String {
    to_canonical_json(&TreeDoc::new(&tree.sort_siblings_by_name(), None))
}

/// Snapshot layout that keeps sibling order as found in the tree, for
/// embedding in larger documents.
pub struct OrderedSnapshot<'a>(pub &'a FolderTree);

impl Serialize for OrderedSnapshot<'_> {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        TreeDoc::new(self.0, None).serialize(serializer)
    }
}

/// Parses and validates a snapshot document.
///
/// Reduced-tree documents are accepted as well; their reduction block is
/// ignored.
pub fn snapshot_from_json(text: &str) -> Result<FolderTree, SnapshotError> {
    parse_tree_doc(text)?.into_tree()
}

pub fn write_snapshot(tree: &FolderTree, dest: impl AsRef<Path>) -> Result<(), SnapshotError> {
    let dest = dest.as_ref();
    super::write_atomic(dest, snapshot_to_json(tree).as_bytes()).map_err(|source| {
        SnapshotError::Io {
            path: dest.to_path_buf(),
            source,
        }
    })
}

pub fn read_snapshot(src: impl AsRef<Path>) -> Result<FolderTree, SnapshotError> {
    let src = src.as_ref();
    let text = fs::read_to_string(src).map_err(|source| SnapshotError::Io {
        path: src.to_path_buf(),
        source,
    })?;
    snapshot_from_json(&text)
}
