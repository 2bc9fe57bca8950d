//! Immutable folder-tree model, recursive aggregates and browsing metrics.

use std::cmp::Ordering;
use std::collections::HashSet;

use chrono::{DateTime, Utc};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TreeError {
    #[error(
        "aggregate mismatch at {path}: accessible_files {found} but direct + children = {expected}"
    )]
    AggregateMismatch {
        path: String,
        found: u64,
        expected: u64,
    },
    #[error("duplicate child {name:?} under {path}")]
    DuplicateChild { path: String, name: String },
    #[error("empty folder name under {path}")]
    EmptyName { path: String },
    #[error("folder name {name:?} under {path} contains '/'")]
    InvalidName { path: String, name: String },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// One folder in a snapshot.
///
/// Only counts are stored, never file names. `accessible_files` is the number
/// of files in this folder and all of its sub-folders.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FolderNode {
    pub name: String,
    pub direct_files: u64,
    pub accessible_files: u64,
    pub modified_at: DateTime<Utc>,
    pub children: Vec<FolderNode>,
    /// Names of ancestors removed by compression, outermost first.
    pub collapsed_ancestors: Vec<String>,
}

impl FolderNode {
    /// A folder with no children whose aggregate equals its direct count.
    pub fn leaf(name: impl Into<String>, direct_files: u64, modified_at: DateTime<Utc>) -> Self {
        FolderNode {
            name: name.into(),
            direct_files,
            accessible_files: direct_files,
            modified_at,
            children: Vec::new(),
            collapsed_ancestors: Vec::new(),
        }
    }

    /// Builds a folder with children and computes its aggregates.
    pub fn branch(
        name: impl Into<String>,
        direct_files: u64,
        modified_at: DateTime<Utc>,
        children: Vec<FolderNode>,
    ) -> Self {
        let mut node = FolderNode::leaf(name, direct_files, modified_at);
        node.children = children;
        node.recompute();
        node
    }

    /// Number of folders in this subtree, including `self`.
    pub fn folder_count(&self) -> usize {
        self.iter().count()
    }

    /// Longest edge count from this node down to any descendant.
    pub fn height(&self) -> usize {
        self.iter().map(|(depth, _)| depth).max().unwrap_or(0)
    }

    /// Pre-order traversal yielding `(depth, node)` with `self` at depth 0.
    pub fn iter(&self) -> PreOrder<'_> {
        PreOrder {
            stack: vec![(0, self)],
        }
    }

    pub fn child(&self, name: &str) -> Option<&FolderNode> {
        self.children.iter().find(|c| c.name == name)
    }

    pub(crate) fn recompute(&mut self) -> u64 {
        let below: u64 = self.children.iter_mut().map(FolderNode::recompute).sum();
        self.accessible_files = self.direct_files + below;
        self.accessible_files
    }

    fn sort_by_importance(&mut self) {
        self.children.sort_by(importance_order);
        self.children
            .iter_mut()
            .for_each(FolderNode::sort_by_importance);
    }

    fn validate(&self, path: &str) -> Result<(), TreeError> {
        let mut seen = HashSet::with_capacity(self.children.len());
        let mut below = 0u64;
        for child in &self.children {
            if child.name.is_empty() {
                return Err(TreeError::EmptyName {
                    path: path.to_string(),
                });
            }
            if child.name.contains('/') {
                return Err(TreeError::InvalidName {
                    path: path.to_string(),
                    name: child.name.clone(),
                });
            }
            if !seen.insert((child.collapsed_ancestors.as_slice(), child.name.as_str())) {
                return Err(TreeError::DuplicateChild {
                    path: path.to_string(),
                    name: child.name.clone(),
                });
            }
            child.validate(&format!("{path}/{}", child.name))?;
            below += child.accessible_files;
        }
        let expected = self.direct_files + below;
        if expected != self.accessible_files {
            return Err(TreeError::AggregateMismatch {
                path: path.to_string(),
                found: self.accessible_files,
                expected,
            });
        }
        Ok(())
    }
}

/// Accessible files descending, then name ascending (byte-wise).
pub(crate) fn importance_order(a: &FolderNode, b: &FolderNode) -> Ordering {
    b.accessible_files
        .cmp(&a.accessible_files)
        .then_with(|| name_order(a, b))
}

/// Name ascending; promoted folders sharing a name order by their collapsed chain.
pub(crate) fn name_order(a: &FolderNode, b: &FolderNode) -> Ordering {
    a.name
        .cmp(&b.name)
        .then_with(|| a.collapsed_ancestors.cmp(&b.collapsed_ancestors))
}

pub struct PreOrder<'a> {
    stack: Vec<(usize, &'a FolderNode)>,
}

impl<'a> Iterator for PreOrder<'a> {
    type Item = (usize, &'a FolderNode);

    fn next(&mut self) -> Option<Self::Item> {
        let (depth, node) = self.stack.pop()?;
        self.stack
            .extend(node.children.iter().rev().map(|c| (depth + 1, c)));
        Some((depth, node))
    }
}

/// A snapshot of a folder hierarchy.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FolderTree {
    pub root: FolderNode,
    /// Origin path, or `"synthetic"`.
    pub source: String,
    pub scanned_at: DateTime<Utc>,
}

/// Browsing-complexity proxy for a tree.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeMetrics {
    pub folder_count: usize,
    /// Maximum downward navigation steps; the root has depth 0.
    pub max_depth: usize,
    pub total_files: u64,
    pub retained_file_fraction: f64,
}

impl FolderTree {
    pub fn new(root: FolderNode, source: impl Into<String>, scanned_at: DateTime<Utc>) -> Self {
        FolderTree {
            root,
            source: source.into(),
            scanned_at,
        }
    }

    pub fn folder_count(&self) -> usize {
        self.root.folder_count()
    }

    pub fn max_depth(&self) -> usize {
        self.root.height()
    }

    pub fn total_files(&self) -> u64 {
        self.root.accessible_files
    }

    /// Checks aggregate consistency and child-name uniqueness everywhere.
    pub fn validate(&self) -> Result<(), TreeError> {
        if self.root.name.is_empty() {
            return Err(TreeError::EmptyName {
                path: String::new(),
            });
        }
        self.root.validate(&self.root.name)
    }

    /// Recomputes every `accessible_files` from the direct counts.
    pub fn recompute_aggregates(&self) -> FolderTree {
        let mut out = self.clone();
        out.root.recompute();
        out
    }

    /// Orders every sibling list by accessible files descending, ties by name.
    pub fn sort_siblings_by_importance(&self) -> FolderTree {
        let mut out = self.clone();
        out.root.sort_by_importance();
        out
    }

    /// Sorts every sibling list by name ascending (the snapshot order).
    pub fn sort_siblings_by_name(&self) -> FolderTree {
        fn go(node: &mut FolderNode) {
            node.children.sort_by(name_order);
            node.children.iter_mut().for_each(go);
        }
        let mut out = self.clone();
        go(&mut out.root);
        out
    }

    /// Metrics for this tree; `original_total` is the file total of the tree
    /// this one was reduced from.
    pub fn metrics(&self, original_total: Option<u64>) -> Result<TreeMetrics, TreeError> {
        let total_files = self.total_files();
        let retained_file_fraction = match original_total {
            None => 1.0,
            Some(0) => {
                return Err(TreeError::InvalidArgument(
                    "original_total must be positive".into(),
                ))
            }
            Some(orig) => total_files as f64 / orig as f64,
        };
        let (mut folder_count, mut max_depth) = (0, 0);
        for (depth, _) in self.root.iter() {
            folder_count += 1;
            max_depth = max_depth.max(depth);
        }
        Ok(TreeMetrics {
            folder_count,
            max_depth,
            total_files,
            retained_file_fraction,
        })
    }

    /// Looks up a folder by its slash-separated path starting with the root name.
    pub fn find(&self, path: &str) -> Option<&FolderNode> {
        let mut segments = path.split('/');
        if segments.next()? != self.root.name {
            return None;
        }
        segments.try_fold(&self.root, |node, seg| node.child(seg))
    }

    /// Visits every folder in pre-order with its full path.
    pub fn for_each_with_path(&self, mut f: impl FnMut(&str, usize, &FolderNode)) {
        fn go(
            node: &FolderNode,
            path: &mut String,
            depth: usize,
            f: &mut dyn FnMut(&str, usize, &FolderNode),
        ) {
            f(path, depth, node);
            for child in &node.children {
                let len = path.len();
                path.push('/');
                path.push_str(&child.name);
                go(child, path, depth + 1, f);
                path.truncate(len);
            }
        }
        let mut path = self.root.name.clone();
        go(&self.root, &mut path, 0, &mut f);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;

    fn ts() -> DateTime<Utc> {
        Utc.with_ymd_and_hms(2020, 10, 12, 0, 0, 0).unwrap()
    }

    fn stale(name: &str, direct: u64, children: Vec<FolderNode>) -> FolderNode {
        FolderNode {
            name: name.into(),
            direct_files: direct,
            accessible_files: 999_999,
            modified_at: ts(),
            children,
            collapsed_ancestors: Vec::new(),
        }
    }

    #[test]
    fn tree_simplification_row_aggregates_to_563() {
        let kids = [
            ("data", 7),
            ("received data backups", 205),
            ("src", 31),
            ("src backups", 69),
            ("Tree testing", 250),
        ]
        .into_iter()
        .map(|(n, acc)| stale(n, acc, vec![]))
        .collect();
        let tree = FolderTree::new(stale("tree simplification", 1, kids), "fixture", ts());
        let out = tree.recompute_aggregates();
        assert_eq!(out.root.accessible_files, 563);
        assert_eq!(out.root.direct_files, 1);
        out.validate().unwrap();
    }

    #[test]
    fn empty_leaf_aggregates_to_zero() {
        let tree = FolderTree::new(stale("empty", 0, vec![]), "fixture", ts());
        assert_eq!(tree.recompute_aggregates().root.accessible_files, 0);
    }

    #[test]
    fn recompute_touches_only_aggregates() {
        let tree = FolderTree::new(
            stale("r", 1, vec![stale("a", 2, vec![stale("b", 3, vec![])])]),
            "fixture",
            ts(),
        );
        let out = tree.recompute_aggregates();
        assert_eq!(out.root.accessible_files, 6);
        assert_eq!(out.root.children[0].accessible_files, 5);
        let mut restored = out.clone();
        restored.root.accessible_files = 999_999;
        restored.root.children[0].accessible_files = 999_999;
        restored.root.children[0].children[0].accessible_files = 999_999;
        assert_eq!(restored, tree);
    }

    #[test]
    fn metrics_single_node() {
        let tree = FolderTree::new(FolderNode::leaf("only", 5, ts()), "fixture", ts());
        let m = tree.metrics(None).unwrap();
        assert_eq!(
            m,
            TreeMetrics {
                folder_count: 1,
                max_depth: 0,
                total_files: 5,
                retained_file_fraction: 1.0
            }
        );
    }

    #[test]
    fn metrics_chain_depth() {
        let chain = FolderNode::branch(
            "a",
            0,
            ts(),
            vec![FolderNode::branch(
                "b",
                0,
                ts(),
                vec![FolderNode::leaf("c", 1, ts())],
            )],
        );
        let m = FolderTree::new(chain, "fixture", ts())
            .metrics(None)
            .unwrap();
        assert_eq!(m.max_depth, 2);
        assert_eq!(m.folder_count, 3);
    }

    #[test]
    fn metrics_fraction_against_original() {
        let tree = FolderTree::new(FolderNode::leaf("RA work", 580, ts()), "fixture", ts());
        let m = tree.metrics(Some(1170)).unwrap();
        // oracle: direct division
        assert!((m.retained_file_fraction - 580.0 / 1170.0).abs() < 1e-12);
        assert!((m.retained_file_fraction - 0.496).abs() < 5e-4);
    }

    #[test]
    fn metrics_rejects_zero_original() {
        let tree = FolderTree::new(FolderNode::leaf("x", 0, ts()), "fixture", ts());
        assert!(matches!(
            tree.metrics(Some(0)),
            Err(TreeError::InvalidArgument(_))
        ));
    }

    #[test]
    fn importance_ties_break_by_name() {
        let root = FolderNode::branch(
            "r",
            0,
            ts(),
            vec![
                FolderNode::leaf("a", 10, ts()),
                FolderNode::leaf("b", 10, ts()),
                FolderNode::leaf("c", 99, ts()),
            ],
        );
        let sorted = FolderTree::new(root, "fixture", ts()).sort_siblings_by_importance();
        let names: Vec<_> = sorted
            .root
            .children
            .iter()
            .map(|c| c.name.as_str())
            .collect();
        assert_eq!(names, ["c", "a", "b"]);
        assert_eq!(sorted.sort_siblings_by_importance(), sorted);
    }

    #[test]
    fn pruned_view_rows_order_by_accessible() {
        let root = FolderNode::branch(
            "RA work",
            0,
            ts(),
            vec![
                FolderNode::leaf("java project", 13, ts()),
                FolderNode::leaf("tree simplification", 563, ts()),
            ],
        );
        let sorted = FolderTree::new(root, "fixture", ts()).sort_siblings_by_importance();
        let names: Vec<_> = sorted
            .root
            .children
            .iter()
            .map(|c| c.name.as_str())
            .collect();
        assert_eq!(names, ["tree simplification", "java project"]);
    }

    #[test]
    fn validate_reports_mismatch_path() {
        let mut root = FolderNode::branch("r", 1, ts(), vec![FolderNode::leaf("a", 2, ts())]);
        root.children[0].accessible_files = 3;
        let err = FolderTree::new(root, "fixture", ts())
            .validate()
            .unwrap_err();
        assert_eq!(
            err,
            TreeError::AggregateMismatch {
                path: "r/a".into(),
                found: 3,
                expected: 2
            }
        );
    }

    #[test]
    fn validate_rejects_duplicate_names() {
        let root = FolderNode::branch(
            "r",
            0,
            ts(),
            vec![
                FolderNode::leaf("a", 1, ts()),
                FolderNode::leaf("a", 2, ts()),
            ],
        );
        assert!(matches!(
            FolderTree::new(root, "fixture", ts()).validate(),
            Err(TreeError::DuplicateChild { .. })
        ));
    }

    #[test]
    fn find_by_path() {
        let root = FolderNode::branch(
            "Drive",
            0,
            ts(),
            vec![FolderNode::branch(
                "teaching",
                0,
                ts(),
                vec![FolderNode::leaf("eval", 25, ts())],
            )],
        );
        let tree = FolderTree::new(root, "fixture", ts());
        assert_eq!(tree.find("Drive/teaching/eval").unwrap().direct_files, 25);
        assert!(tree.find("Drive").is_some());
        assert!(tree.find("Drive/nope").is_none());
        assert!(tree.find("Other/teaching").is_none());
    }
}
