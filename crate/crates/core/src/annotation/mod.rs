//! Relevance and exclusion marks for handing a collection over.
//!
//! Marks attach to folders and flow down to descendants. The nearest marked
//! ancestor-or-self decides a folder's status, except that an exclusion
//! anywhere on the path from the root wins over everything beneath it and
//! cannot be overridden by a deeper relevance mark.
//!
//! Paths are slash-separated folder names beginning with the root folder's
//! name, e.g. `Drive/Academic (in use)/teaching`.

mod document;

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use chrono::{DateTime, Utc};
use thiserror::Error;

use crate::tree::{FolderNode, FolderTree};

pub use document::{load_annotations, save_annotations};

#[derive(Debug, Error)]
pub enum AnnotationError {
    #[error("no folder at {0}")]
    NotFound(String),
    #[error("no annotation at {0}")]
    NoEntry(String),
    #[error("cannot mark {path} relevant: ancestor {ancestor} is excluded")]
    ExclusionConflict { path: String, ancestor: String },
    #[error("invalid path {path:?}: {reason}")]
    InvalidPath { path: String, reason: String },
    #[error("invalid annotation: {0}")]
    InvalidStatus(String),
    #[error("malformed annotation document at {at}: {message}")]
    Parse { at: String, message: String },
    #[error("unsupported format_version {0}")]
    UnsupportedVersion(u64),
    #[error("duplicate entry {0}")]
    DuplicateEntry(String),
    #[error("annotations belong to collection {found:?}, not {expected:?}")]
    CollectionMismatch { expected: String, found: String },
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Normalizes a folder path: forward slashes, no leading or trailing slash,
/// no empty, `.` or `..` segments.
pub fn normalize_path(raw: &str) -> Result<String, AnnotationError> {
    let invalid = |reason: &str| AnnotationError::InvalidPath {
        path: raw.to_string(),
        reason: reason.to_string(),
    };
    let trimmed = raw.trim_matches('/');
    if trimmed.is_empty() {
        return Err(invalid("empty path"));
    }
    for seg in trimmed.split('/') {
        match seg {
            "" => return Err(invalid("empty segment")),
            "." | ".." => return Err(invalid("relative segment")),
            _ => {}
        }
    }
    Ok(trimmed.to_string())
}

/// Strict ancestors of a normalized path, outermost first.
fn ancestors(path: &str) -> impl Iterator<Item = &str> {
    path.match_indices('/').map(move |(i, _)| &path[..i])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AnnotationKind {
    Relevant,
    Excluded,
}

impl AnnotationKind {
    pub fn as_str(self) -> &'static str {
        match self {
            AnnotationKind::Relevant => "relevant",
            AnnotationKind::Excluded => "excluded",
        }
    }
}

/// Suggested context vocabulary; any non-empty tag is accepted.
pub const SUGGESTED_CONTEXTS: [&str; 5] = ["theme", "career", "family", "institution", "society"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotationStatus {
    kind: AnnotationKind,
    contexts: BTreeSet<String>,
    note: Option<String>,
}

impl AnnotationStatus {
    pub fn relevant<I, S>(contexts: I) -> Result<Self, AnnotationError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut tags = BTreeSet::new();
        for tag in contexts {
            let tag = tag.as_ref().trim();
            if tag.is_empty() {
                return Err(AnnotationError::InvalidStatus("empty context tag".into()));
            }
            tags.insert(tag.to_string());
        }
        Ok(AnnotationStatus {
            kind: AnnotationKind::Relevant,
            contexts: tags,
            note: None,
        })
    }

    pub fn excluded() -> Self {
        AnnotationStatus {
            kind: AnnotationKind::Excluded,
            contexts: BTreeSet::new(),
            note: None,
        }
    }

    /// Builds a status from its parts, rejecting contexts on exclusions.
    pub fn from_parts<I, S>(
        kind: AnnotationKind,
        contexts: I,
        note: Option<String>,
    ) -> Result<Self, AnnotationError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let status = match kind {
            AnnotationKind::Relevant => AnnotationStatus::relevant(contexts)?,
            AnnotationKind::Excluded => {
                if contexts.into_iter().next().is_some() {
                    return Err(AnnotationError::InvalidStatus(
                        "excluded entries carry no contexts".into(),
                    ));
                }
                AnnotationStatus::excluded()
            }
        };
        Ok(status.with_note(note))
    }

    pub fn with_note(mut self, note: Option<String>) -> Self {
        self.note = note;
        self
    }

    pub fn kind(&self) -> AnnotationKind {
        self.kind
    }

    pub fn contexts(&self) -> &BTreeSet<String> {
        &self.contexts
    }

    pub fn note(&self) -> Option<&str> {
        self.note.as_deref()
    }
}

/// Software needed to open some content, keyed by a file extension or a
/// folder path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SoftwareNote {
    applies_to: String,
    software: String,
    note: Option<String>,
}

impl SoftwareNote {
    pub fn new(
        applies_to: impl Into<String>,
        software: impl Into<String>,
        note: Option<String>,
    ) -> Result<Self, AnnotationError> {
        let applies_to = applies_to.into().trim().to_string();
        let software = software.into().trim().to_string();
        if applies_to.is_empty() || software.is_empty() {
            return Err(AnnotationError::InvalidStatus(
                "software notes need applies_to and software".into(),
            ));
        }
        Ok(SoftwareNote {
            applies_to,
            software,
            note,
        })
    }

    pub fn applies_to(&self) -> &str {
        &self.applies_to
    }

    pub fn software(&self) -> &str {
        &self.software
    }

    pub fn note(&self) -> Option<&str> {
        self.note.as_deref()
    }

    fn key(&self) -> (&str, &str) {
        (&self.applies_to, &self.software)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EffectiveKind {
    Relevant,
    Excluded,
    Unmarked,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EffectiveStatus {
    pub kind: EffectiveKind,
    /// Path of the entry that decided `kind`; `None` when unmarked.
    pub origin: Option<String>,
}

impl EffectiveStatus {
    pub fn unmarked() -> Self {
        EffectiveStatus {
            kind: EffectiveKind::Unmarked,
            origin: None,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Coverage {
    pub relevant_files: u64,
    pub excluded_files: u64,
    pub unmarked_files: u64,
}

impl Coverage {
    pub fn total(&self) -> u64 {
        self.relevant_files + self.excluded_files + self.unmarked_files
    }
}

/// Per-path marks plus collection-level software notes.
///
/// Mutations return a new store; the receiver is left untouched.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotationStore {
    collection_root: String,
    entries: BTreeMap<String, AnnotationStatus>,
    software_notes: Vec<SoftwareNote>,
    modified_at: DateTime<Utc>,
}

impl AnnotationStore {
    pub fn new(collection_root: impl Into<String>, modified_at: DateTime<Utc>) -> Self {
        AnnotationStore {
            collection_root: collection_root.into(),
            entries: BTreeMap::new(),
            software_notes: Vec::new(),
            modified_at,
        }
    }

    /// Empty store for `tree`, named after its root folder.
    pub fn for_tree(tree: &FolderTree, modified_at: DateTime<Utc>) -> Self {
        AnnotationStore::new(tree.root.name.clone(), modified_at)
    }

    pub fn collection_root(&self) -> &str {
        &self.collection_root
    }

    pub fn modified_at(&self) -> DateTime<Utc> {
        self.modified_at
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, &AnnotationStatus)> {
        self.entries.iter().map(|(p, s)| (p.as_str(), s))
    }

    pub fn entry(&self, path: &str) -> Option<&AnnotationStatus> {
        self.entries.get(path)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Notes ordered by `(applies_to, software)`.
    pub fn software_notes(&self) -> &[SoftwareNote] {
        &self.software_notes
    }

    /// Checks that the store describes `tree`: same root folder, and every
    /// entry names an existing folder.
    pub fn check_against(&self, tree: &FolderTree) -> Result<(), AnnotationError> {
        if self.collection_root != tree.root.name {
            return Err(AnnotationError::CollectionMismatch {
                expected: tree.root.name.clone(),
                found: self.collection_root.clone(),
            });
        }
        match self.entries.keys().find(|p| tree.find(p).is_none()) {
            Some(missing) => Err(AnnotationError::NotFound(missing.clone())),
            None => Ok(()),
        }
    }

    /// Upserts the mark at `path`.
    ///
    /// Marking a folder relevant fails when one of its ancestors is
    /// explicitly excluded; the error names the outermost such ancestor.
    pub fn set_annotation(
        &self,
        tree: &FolderTree,
        path: &str,
        status: AnnotationStatus,
        at: DateTime<Utc>,
    ) -> Result<Self, AnnotationError> {
        let path = normalize_path(path)?;
        if tree.find(&path).is_none() {
            return Err(AnnotationError::NotFound(path));
        }
        if status.kind == AnnotationKind::Relevant {
            let excluding = ancestors(&path)
                .find(|a| {
                    self.entries
                        .get(*a)
                        .is_some_and(|s| s.kind == AnnotationKind::Excluded)
                })
                .map(str::to_string);
            if let Some(ancestor) = excluding {
                return Err(AnnotationError::ExclusionConflict { ancestor, path });
            }
        }
        let mut next = self.clone();
        next.entries.insert(path, status);
        next.modified_at = at;
        Ok(next)
    }

    pub fn clear_annotation(&self, path: &str, at: DateTime<Utc>) -> Result<Self, AnnotationError> {
        let path = normalize_path(path)?;
        if !self.entries.contains_key(&path) {
            return Err(AnnotationError::NoEntry(path));
        }
        let mut next = self.clone();
        next.entries.remove(&path);
        next.modified_at = at;
        Ok(next)
    }

    /// Adds a note, replacing one with the same `(applies_to, software)`.
    pub fn add_software_note(&self, note: SoftwareNote, at: DateTime<Utc>) -> Self {
        let mut next = self.clone();
        match next
            .software_notes
            .binary_search_by(|n| n.key().cmp(&note.key()))
        {
            Ok(i) => next.software_notes[i] = note,
            Err(i) => next.software_notes.insert(i, note),
        }
        next.modified_at = at;
        next
    }

    pub fn remove_software_note(
        &self,
        applies_to: &str,
        software: &str,
        at: DateTime<Utc>,
    ) -> Result<Self, AnnotationError> {
        let mut next = self.clone();
        let i = next
            .software_notes
            .binary_search_by(|n| n.key().cmp(&(applies_to, software)))
            .map_err(|_| {
                AnnotationError::NoEntry(format!("software note {applies_to}/{software}"))
            })?;
        next.software_notes.remove(i);
        next.modified_at = at;
        Ok(next)
    }

    /// Resolves one folder's status.
    pub fn effective_status(
        &self,
        tree: &FolderTree,
        path: &str,
    ) -> Result<EffectiveStatus, AnnotationError> {
        let path = normalize_path(path)?;
        if tree.find(&path).is_none() {
            return Err(AnnotationError::NotFound(path));
        }
        let mut resolver = Resolver::default();
        for prefix in ancestors(&path).chain(std::iter::once(path.as_str())) {
            resolver.enter(prefix, self.entries.get(prefix));
        }
        Ok(resolver.status())
    }

    /// Resolves every folder of `tree` in pre-order.
    pub fn resolve_all(&self, tree: &FolderTree) -> Vec<(String, EffectiveStatus)> {
        let mut out = Vec::new();
        self.walk(tree, |path, _, status| {
            out.push((path.to_string(), status.clone()))
        });
        out
    }

    /// Attributes every file to the status of the folder directly holding it.
    pub fn coverage_summary(&self, tree: &FolderTree) -> Coverage {
        let mut cov = Coverage::default();
        self.walk(tree, |_, node, status| {
            let bucket = match status.kind {
                EffectiveKind::Relevant => &mut cov.relevant_files,
                EffectiveKind::Excluded => &mut cov.excluded_files,
                EffectiveKind::Unmarked => &mut cov.unmarked_files,
            };
            *bucket += node.direct_files;
        });
        cov
    }

    fn walk(&self, tree: &FolderTree, mut f: impl FnMut(&str, &FolderNode, &EffectiveStatus)) {
        fn go(
            store: &AnnotationStore,
            node: &FolderNode,
            path: &mut String,
            resolver: Resolver,
            f: &mut dyn FnMut(&str, &FolderNode, &EffectiveStatus),
        ) {
            let mut resolver = resolver;
            resolver.enter(path, store.entries.get(path.as_str()));
            f(path, node, &resolver.status());
            for child in &node.children {
                let len = path.len();
                path.push('/');
                path.push_str(&child.name);
                go(store, child, path, resolver.clone(), f);
                path.truncate(len);
            }
        }
        let mut path = tree.root.name.clone();
        go(self, &tree.root, &mut path, Resolver::default(), &mut f);
    }
}

/// Top-down resolution state along one root-to-folder path.
#[derive(Debug, Clone, Default)]
struct Resolver {
    excluded_by: Option<String>,
    relevant_by: Option<String>,
}

impl Resolver {
    fn enter(&mut self, path: &str, entry: Option<&AnnotationStatus>) {
        match entry.map(|s| s.kind) {
            Some(AnnotationKind::Excluded) if self.excluded_by.is_none() => {
                self.excluded_by = Some(path.to_string())
            }
            Some(AnnotationKind::Relevant) => self.relevant_by = Some(path.to_string()),
            _ => {}
        }
    }

    fn status(&self) -> EffectiveStatus {
        if let Some(origin) = &self.excluded_by {
            EffectiveStatus {
                kind: EffectiveKind::Excluded,
                origin: Some(origin.clone()),
            }
        } else if let Some(origin) = &self.relevant_by {
            EffectiveStatus {
                kind: EffectiveKind::Relevant,
                origin: Some(origin.clone()),
            }
        } else {
            EffectiveStatus::unmarked()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SortKey {
    AccessibleFiles,
    ModifiedAt,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SortOrder {
    Asc,
    Desc,
}

/// Sibling comparator: `key` in `order`, then name ascending.
pub fn sort_comparator(
    key: SortKey,
    order: SortOrder,
) -> impl Fn(&FolderNode, &FolderNode) -> Ordering {
    move |a, b| {
        let by_key = match key {
            SortKey::AccessibleFiles => a.accessible_files.cmp(&b.accessible_files),
            SortKey::ModifiedAt => a.modified_at.cmp(&b.modified_at),
        };
        let by_key = match order {
            SortOrder::Asc => by_key,
            SortOrder::Desc => by_key.reverse(),
        };
        by_key.then_with(|| crate::tree::name_order(a, b))
    }
}

/// Sorts every sibling group; children stay under their parent.
pub fn sort_folders(tree: &FolderTree, key: SortKey, order: SortOrder) -> FolderTree {
    let cmp = sort_comparator(key, order);
    let mut out = tree.clone();
    let mut stack = vec![&mut out.root];
    while let Some(node) = stack.pop() {
        node.children.sort_by(&cmp);
        stack.extend(node.children.iter_mut());
    }
    out
}
