#![allow(dead_code)]

use chrono::{DateTime, TimeZone, Utc};
use gim_core::{FolderNode, FolderTree};
use proptest::prelude::*;

pub fn ts(secs: i64) -> DateTime<Utc> {
    Utc.timestamp_opt(1_600_000_000 + secs, 0).unwrap()
}

/// Flat description of a tree: `parents[i - 1]` is the parent of folder `i`
/// (always `< i`), `direct[i]` its direct file count.
#[derive(Debug, Clone)]
pub struct FlatTree {
    pub parents: Vec<usize>,
    pub direct: Vec<u64>,
    pub mtimes: Vec<i64>,
}

impl FlatTree {
    pub fn len(&self) -> usize {
        self.direct.len()
    }

    pub fn parent(&self, i: usize) -> Option<usize> {
        (i > 0).then(|| self.parents[i - 1])
    }

    pub fn name(i: usize) -> String {
        format!("n{i}")
    }

    /// Names from the root down to `i`, joined by '/'.
    pub fn path(&self, i: usize) -> String {
        let mut chain = vec![Self::name(i)];
        let mut cur = i;
        while let Some(p) = self.parent(cur) {
            chain.push(Self::name(p));
            cur = p;
        }
        chain.reverse();
        chain.join("/")
    }

    pub fn is_ancestor_or_self(&self, anc: usize, mut node: usize) -> bool {
        loop {
            if node == anc {
                return true;
            }
            match self.parent(node) {
                Some(p) => node = p,
                None => return false,
            }
        }
    }

    /// Brute-force subtree sum: every folder whose ancestor chain hits `i`.
    pub fn subtree_files(&self, i: usize) -> u64 {
        (0..self.len())
            .filter(|&j| self.is_ancestor_or_self(i, j))
            .map(|j| self.direct[j])
            .sum()
    }

    pub fn build(&self) -> FolderTree {
        fn node(flat: &FlatTree, i: usize) -> FolderNode {
            let children = (1..flat.len())
                .filter(|&j| flat.parents[j - 1] == i)
                .map(|j| node(flat, j))
                .collect();
            FolderNode::branch(
                FlatTree::name(i),
                flat.direct[i],
                ts(flat.mtimes[i]),
                children,
            )
        }
        FolderTree::new(node(self, 0), "proptest", ts(0))
    }
}

pub fn flat_tree(max_folders: usize, max_files: u64) -> impl Strategy<Value = FlatTree> {
    (1..=max_folders).prop_flat_map(move |n| {
        let parents = (1..n).map(|i| 0..i).collect::<Vec<_>>();
        (
            parents,
            prop::collection::vec(0..=max_files, n),
            prop::collection::vec(0i64..100_000_000, n),
        )
            .prop_map(|(parents, direct, mtimes)| FlatTree {
                parents,
                direct,
                mtimes,
            })
    })
}
