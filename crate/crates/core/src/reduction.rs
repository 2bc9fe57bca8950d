//! Strength-controlled reduction of folder hierarchies.
//!
//! One strength `t` in `[0, 1]` drives two operations:
//!
//! * **Pruning** removes file-light folders. The threshold is the
//!   `ceil(t * n)`-th smallest `accessible_files` among the `n` non-root
//!   folders, and only folders strictly above it survive. Because a folder's
//!   aggregate is never below any descendant's, survivors form a tree.
//! * **Compression** removes intermediate levels. A non-root folder whose
//!   heaviest child holds at least `1 - t` of its files is dissolved: its
//!   children (the heavy one and its siblings) move up into its place, its
//!   direct files move to its parent, and each promoted child records the
//!   dissolved name in `collapsed_ancestors`.
//!
//! [`reduce`] prunes, compresses the survivors and orders siblings by
//! importance. Thresholds and dominance ratios are both taken from the
//! unreduced tree. `t = 0` returns the input unchanged and `t = 1` leaves
//! only the root.

use rayon::prelude::*;
use thiserror::Error;

use crate::ingest::snapshot::{self, ReductionBlock, SnapshotError, TreeDoc};
use crate::tree::{FolderNode, FolderTree, TreeMetrics};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReductionError {
    #[error("strength {0} outside [0, 1]")]
    StrengthOutOfRange(f64),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// Slider position in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct ReductionStrength(f64);

impl ReductionStrength {
    pub const ZERO: ReductionStrength = ReductionStrength(0.0);
    pub const ONE: ReductionStrength = ReductionStrength(1.0);

    pub fn new(t: f64) -> Result<Self, ReductionError> {
        if (0.0..=1.0).contains(&t) {
            // normalizes -0.0
            Ok(ReductionStrength(t + 0.0))
        } else {
            Err(ReductionError::StrengthOutOfRange(t))
        }
    }

    /// Rounds to the nearest 1/100, the slider's granularity.
    pub fn quantized(self) -> Self {
        ReductionStrength((self.0 * 100.0).round() / 100.0)
    }

    /// Slider step in `0..=100`.
    pub fn step(self) -> u32 {
        (self.0 * 100.0).round() as u32
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0.0
    }
}

impl TryFrom<f64> for ReductionStrength {
    type Error = ReductionError;

    fn try_from(t: f64) -> Result<Self, Self::Error> {
        ReductionStrength::new(t)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PruneOutcome {
    pub tree: FolderTree,
    pub pruned_files: u64,
    pub pruned_folders: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompressOutcome {
    pub tree: FolderTree,
    pub collapsed_folders: usize,
}

/// Pruning threshold for `t`, or `None` when nothing is pruned.
///
/// Folders with `accessible_files` strictly greater than the threshold
/// survive.
pub fn prune_threshold(tree: &FolderTree, t: ReductionStrength) -> Option<u64> {
    if t.is_zero() {
        return None;
    }
    let mut accessible: Vec<u64> = tree
        .root
        .iter()
        .skip(1)
        .map(|(_, n)| n.accessible_files)
        .collect();
    if accessible.is_empty() {
        return None;
    }
    let rank = quantile_rank(t.value(), accessible.len());
    let (_, theta, _) = accessible.select_nth_unstable(rank - 1);
    Some(*theta)
}

/// `ceil(t * n)` clamped to `1..=n`, tolerant of binary rounding in `t * n`.
fn quantile_rank(t: f64, n: usize) -> usize {
    let scaled = t * n as f64;
    let rank = (scaled - 1e-9 * scaled.max(1.0)).ceil();
    (rank.max(1.0) as usize).min(n)
}

pub fn prune(tree: &FolderTree, t: ReductionStrength) -> PruneOutcome {
    let Some(theta) = prune_threshold(tree, t) else {
        return PruneOutcome {
            tree: tree.clone(),
            pruned_files: 0,
            pruned_folders: 0,
        };
    };

    let mut root = reduce_node(&tree.root, Some(theta), None, &mut 0);
    root.recompute();
    let out = FolderTree::new(root, tree.source.clone(), tree.scanned_at);
    PruneOutcome {
        pruned_files: tree.total_files() - out.total_files(),
        pruned_folders: tree.folder_count() - out.folder_count(),
        tree: out,
    }
}

/// Whether `node` is dissolved at compression strength `t`, judged on the
/// aggregates it had before any reduction.
fn dominated(node: &FolderNode, t: f64) -> bool {
    if node.children.is_empty() || node.accessible_files == 0 {
        return false;
    }
    let heaviest = node
        .children
        .iter()
        .map(|c| c.accessible_files)
        .max()
        .unwrap_or(0);
    let ratio = heaviest as f64 / node.accessible_files as f64;
    // absorbs binary rounding in 1 - t so that exact ties collapse
    ratio >= 1.0 - t - 1e-12
}

/// Builds the reduced form of `orig`, which is known to survive pruning.
///
/// Children at or below `theta` are dropped. A surviving child is dissolved
/// when it was dominated in the unreduced tree and still has children after
/// pruning. Aggregates are left stale for the caller to recompute.
fn reduce_node(
    orig: &FolderNode,
    theta: Option<u64>,
    compress_t: Option<f64>,
    collapsed: &mut usize,
) -> FolderNode {
    let mut out = FolderNode {
        name: orig.name.clone(),
        direct_files: orig.direct_files,
        accessible_files: orig.accessible_files,
        modified_at: orig.modified_at,
        collapsed_ancestors: orig.collapsed_ancestors.clone(),
        children: Vec::with_capacity(orig.children.len()),
    };
    for child in &orig.children {
        if theta.is_some_and(|theta| child.accessible_files <= theta) {
            continue;
        }
        let reduced = reduce_node(child, theta, compress_t, collapsed);
        let dissolve =
            compress_t.is_some_and(|t| dominated(child, t)) && !reduced.children.is_empty();
        if !dissolve {
            out.children.push(reduced);
            continue;
        }
        *collapsed += 1;
        out.direct_files += reduced.direct_files;
        let mut prefix = reduced.collapsed_ancestors;
        prefix.push(reduced.name);
        for mut promoted in reduced.children {
            let mut chain = prefix.clone();
            chain.append(&mut promoted.collapsed_ancestors);
            promoted.collapsed_ancestors = chain;
            out.children.push(promoted);
        }
    }
    out
}

/// Dissolves every non-root folder whose heaviest child holds at least
/// `1 - t` of its files. Dominance is measured on the input's aggregates, so
/// the result does not depend on the order folders are visited in.
pub fn compress(tree: &FolderTree, t: ReductionStrength) -> CompressOutcome {
    if t.is_zero() {
        return CompressOutcome {
            tree: tree.clone(),
            collapsed_folders: 0,
        };
    }
    let mut collapsed_folders = 0;
    let mut root = reduce_node(&tree.root, None, Some(t.value()), &mut collapsed_folders);
    root.recompute();
    CompressOutcome {
        tree: FolderTree::new(root, tree.source.clone(), tree.scanned_at),
        collapsed_folders,
    }
}

/// Independent strengths for the two algorithms; `None` means "use the slider".
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StrengthOverrides {
    pub prune: Option<ReductionStrength>,
    pub compress: Option<ReductionStrength>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReducedTree {
    pub tree: FolderTree,
    /// Metrics of the reduced tree against the original file total.
    pub metrics: TreeMetrics,
    pub strength: ReductionStrength,
    pub pruned_folder_count: usize,
    pub collapsed_folder_count: usize,
}

pub fn reduce(tree: &FolderTree, t: ReductionStrength) -> ReducedTree {
    reduce_with(tree, t, StrengthOverrides::default())
}

/// Prunes and compresses in one pass over `tree`.
///
/// Both the pruning threshold and each folder's dominance ratio come from the
/// unreduced tree. With both fixed up front, raising either strength can only
/// shrink the displayed folder count.
pub fn reduce_with(
    tree: &FolderTree,
    t: ReductionStrength,
    overrides: StrengthOverrides,
) -> ReducedTree {
    let prune_t = overrides.prune.unwrap_or(t);
    let compress_t = overrides.compress.unwrap_or(t);
    let theta = prune_threshold(tree, prune_t);
    let compress_value = (!compress_t.is_zero()).then(|| compress_t.value());

    let mut collapsed = 0;
    let mut root = reduce_node(&tree.root, theta, compress_value, &mut collapsed);
    root.recompute();
    let mut reduced = FolderTree::new(root, tree.source.clone(), tree.scanned_at);
    if !(prune_t.is_zero() && compress_t.is_zero()) {
        reduced = reduced.sort_siblings_by_importance();
    }

    let original_total = Some(tree.total_files()).filter(|&n| n > 0);
    let metrics = reduced
        .metrics(original_total)
        .expect("original total checked positive");
    ReducedTree {
        pruned_folder_count: tree.folder_count() - metrics.folder_count - collapsed,
        collapsed_folder_count: collapsed,
        tree: reduced,
        metrics,
        strength: t,
    }
}

impl ReducedTree {
    /// Reduced-tree document: the snapshot layout with per-node
    /// `collapsed_ancestors` (where non-empty) and a `reduction` block.
    /// Children keep their importance order.
    pub fn to_json(&self) -> String {
        let block = ReductionBlock {
            t: self.strength.value(),
            pruned_folder_count: self.pruned_folder_count,
            collapsed_folder_count: self.collapsed_folder_count,
            retained_file_fraction: self.metrics.retained_file_fraction,
        };
        snapshot::to_canonical_json(&TreeDoc::new(&self.tree, Some(block)))
    }

    /// Parses a reduced-tree document produced by [`ReducedTree::to_json`].
    pub fn from_json(text: &str) -> Result<ReducedTree, SnapshotError> {
        let mut doc = snapshot::parse_tree_doc(text)?;
        let block = doc.reduction.take().ok_or_else(|| SnapshotError::Parse {
            at: "reduction".into(),
            message: "missing field `reduction`".into(),
        })?;
        let strength = ReductionStrength::new(block.t).map_err(|e| SnapshotError::Parse {
            at: "reduction.t".into(),
            message: e.to_string(),
        })?;
        let tree = doc.into_tree()?;
        let mut metrics = tree.metrics(None)?;
        metrics.retained_file_fraction = block.retained_file_fraction;
        Ok(ReducedTree {
            tree,
            metrics,
            strength,
            pruned_folder_count: block.pruned_folder_count,
            collapsed_folder_count: block.collapsed_folder_count,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileRow {
    pub t: f64,
    pub folder_count: usize,
    pub max_depth: usize,
    pub retained_file_fraction: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReductionProfile {
    pub original_folder_count: usize,
    pub rows: Vec<ProfileRow>,
}

impl ReductionProfile {
    /// Row with the fewest folders among those keeping at least
    /// `min_fraction` of the files; earliest `t` wins ties.
    pub fn best_tradeoff(&self, min_fraction: f64) -> Option<&ProfileRow> {
        self.rows
            .iter()
            .filter(|r| r.retained_file_fraction >= min_fraction)
            .min_by(|a, b| {
                a.folder_count
                    .cmp(&b.folder_count)
                    .then(a.t.total_cmp(&b.t))
            })
    }

    /// Relative folder-count reduction of a row, in `[0, 1]`.
    pub fn folder_reduction(&self, row: &ProfileRow) -> f64 {
        1.0 - row.folder_count as f64 / self.original_folder_count as f64
    }
}

/// Reduces `tree` at every grid point. Grid points are evaluated in
/// parallel; rows come back in grid order.
pub fn profile(tree: &FolderTree, grid: &[f64]) -> Result<ReductionProfile, ReductionError> {
    if grid.is_empty() {
        return Err(ReductionError::InvalidArgument("empty grid".into()));
    }
    let strengths = grid
        .iter()
        .map(|&t| ReductionStrength::new(t))
        .collect::<Result<Vec<_>, _>>()?;
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(ReductionError::InvalidArgument(
            "grid must be strictly ascending".into(),
        ));
    }
    let rows = strengths
        .par_iter()
        .map(|&t| {
            let m = reduce(tree, t).metrics;
            ProfileRow {
                t: t.value(),
                folder_count: m.folder_count,
                max_depth: m.max_depth,
                retained_file_fraction: m.retained_file_fraction,
            }
        })
        .collect();
    Ok(ReductionProfile {
        original_folder_count: tree.folder_count(),
        rows,
    })
}

/// Parses `"start:step:end"` (inclusive) or a comma-separated list.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>, ReductionError> {
    let bad = |msg: String| ReductionError::InvalidArgument(format!("grid {spec:?}: {msg}"));
    let num = |s: &str| {
        s.trim()
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| bad(format!("{s:?} is not a number")))
    };
    let grid: Vec<f64> = if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        let [start, step, end] = parts[..] else {
            return Err(bad("expected start:step:end".into()));
        };
        let (start, step, end) = (num(start)?, num(step)?, num(end)?);
        if step <= 0.0 {
            return Err(bad("step must be positive".into()));
        }
        if end < start {
            return Err(bad("end precedes start".into()));
        }
        let intervals = ((end - start) / step + 1e-9).floor() as usize;
        (0..=intervals)
            .map(|i| {
                let v = start + i as f64 * step;
                (v * 1e9).round() / 1e9
            })
            .collect()
    } else {
        spec.split(',').map(num).collect::<Result<_, _>>()?
    };
    if grid.is_empty() {
        return Err(bad("no points".into()));
    }
    Ok(grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::{DateTime, TimeZone, Utc};

    fn ts() -> DateTime<Utc> {
        Utc.with_ymd_and_hms(2021, 3, 1, 0, 0, 0).unwrap()
    }

    fn t(v: f64) -> ReductionStrength {
        ReductionStrength::new(v).unwrap()
    }

    fn tree(root: FolderNode) -> FolderTree {
        FolderTree::new(root, "fixture", ts())
    }

    /// root(0) -> A(2) -> B(8)
    fn chain() -> FolderTree {
        tree(FolderNode::branch(
            "root",
            0,
            ts(),
            vec![FolderNode::branch(
                "A",
                2,
                ts(),
                vec![FolderNode::leaf("B", 8, ts())],
            )],
        ))
    }

    #[test]
    fn strength_validation() {
        assert!(ReductionStrength::new(-0.01).is_err());
        assert!(ReductionStrength::new(1.01).is_err());
        assert!(ReductionStrength::new(f64::NAN).is_err());
        assert_eq!(t(0.504).quantized().value(), 0.5);
        assert_eq!(t(0.37).step(), 37);
    }

    #[test]
    fn prune_zero_is_identity() {
        let out = prune(&chain(), ReductionStrength::ZERO);
        assert_eq!(out.tree, chain());
        assert_eq!((out.pruned_files, out.pruned_folders), (0, 0));
    }

    #[test]
    fn prune_one_keeps_root_only() {
        let input = tree(FolderNode::branch(
            "root",
            3,
            ts(),
            vec![
                FolderNode::leaf("x", 4, ts()),
                FolderNode::leaf("y", 5, ts()),
            ],
        ));
        let out = prune(&input, ReductionStrength::ONE);
        assert_eq!(out.tree.folder_count(), 1);
        assert_eq!(
            out.pruned_files,
            input.total_files() - input.root.direct_files
        );
    }

    #[test]
    fn prune_chain_half() {
        // A = [8, 10]; rank ceil(0.5 * 2) = 1 -> theta 8; B (8) goes, A (10) stays.
        let out = prune(&chain(), t(0.5));
        assert_eq!(prune_threshold(&chain(), t(0.5)), Some(8));
        assert_eq!(out.tree.folder_count(), 2);
        assert_eq!(out.tree.root.children[0].name, "A");
        assert_eq!(out.tree.total_files(), 2);
        assert_eq!(out.pruned_files, 8);
        out.tree.validate().unwrap();
    }

    #[test]
    fn quantile_rank_tolerates_float_noise() {
        // 0.07 * 100 evaluates to 7.000000000000001
        assert_eq!(quantile_rank(0.07, 100), 7);
        assert_eq!(quantile_rank(0.001, 100), 1);
        assert_eq!(quantile_rank(1.0, 3), 3);
        assert_eq!(quantile_rank(0.34, 3), 2);
    }

    #[test]
    fn compress_pass_through_chain() {
        let input = tree(FolderNode::branch(
            "root",
            0,
            ts(),
            vec![FolderNode::branch(
                "P",
                0,
                ts(),
                vec![FolderNode::leaf("C", 10, ts())],
            )],
        ));
        for strength in [0.01, 0.5, 1.0] {
            let out = compress(&input, t(strength));
            assert_eq!(out.collapsed_folders, 1);
            let c = &out.tree.root.children[0];
            assert_eq!(c.name, "C");
            assert_eq!(c.collapsed_ancestors, ["P"]);
            assert_eq!(out.tree.total_files(), 10);
            out.tree.validate().unwrap();
        }
    }

    #[test]
    fn compress_moves_direct_files_up() {
        let input = tree(FolderNode::branch(
            "root",
            0,
            ts(),
            vec![FolderNode::branch(
                "P",
                10,
                ts(),
                vec![FolderNode::leaf("C1", 90, ts())],
            )],
        ));
        // rho = 90 / 100 = 0.9 >= 0.8
        let out = compress(&input, t(0.2));
        assert_eq!(out.collapsed_folders, 1);
        assert_eq!(out.tree.root.direct_files, 10);
        assert_eq!(out.tree.root.children[0].name, "C1");
        assert_eq!(out.tree.total_files(), 100);
        // rho 0.9 < 0.95
        assert_eq!(compress(&input, t(0.05)).collapsed_folders, 0);
    }

    #[test]
    fn compress_promotes_heavy_child_and_siblings() {
        let input = tree(FolderNode::branch(
            "root",
            1,
            ts(),
            vec![
                FolderNode::branch(
                    "P",
                    0,
                    ts(),
                    vec![
                        FolderNode::leaf("heavy", 80, ts()),
                        FolderNode::leaf("light", 20, ts()),
                    ],
                ),
                FolderNode::leaf("other", 5, ts()),
            ],
        ));
        let out = compress(&input, t(0.25)); // rho(P) = 0.8 >= 0.75
        let names: Vec<_> = out
            .tree
            .root
            .children
            .iter()
            .map(|c| c.name.as_str())
            .collect();
        assert_eq!(names, ["heavy", "light", "other"]);
        assert_eq!(out.tree.root.children[1].collapsed_ancestors, ["P"]);
        assert!(out.tree.root.children[2].collapsed_ancestors.is_empty());
    }

    #[test]
    fn compress_nested_chain_records_full_path() {
        let input = tree(FolderNode::branch(
            "root",
            0,
            ts(),
            vec![FolderNode::branch(
                "a",
                0,
                ts(),
                vec![FolderNode::branch(
                    "b",
                    0,
                    ts(),
                    vec![FolderNode::leaf("c", 3, ts())],
                )],
            )],
        ));
        let out = compress(&input, t(0.1));
        assert_eq!(out.collapsed_folders, 2);
        assert_eq!(out.tree.root.children[0].collapsed_ancestors, ["a", "b"]);
        assert_eq!(out.tree.max_depth(), 1);
    }

    #[test]
    fn compress_keeps_empty_pass_throughs() {
        let input = tree(FolderNode::branch(
            "root",
            0,
            ts(),
            vec![FolderNode::branch(
                "P",
                0,
                ts(),
                vec![FolderNode::leaf("C", 0, ts())],
            )],
        ));
        assert_eq!(compress(&input, t(1.0)).collapsed_folders, 0);
    }

    #[test]
    fn compress_allows_promoted_name_clash() {
        let input = tree(FolderNode::branch(
            "root",
            0,
            ts(),
            vec![
                FolderNode::branch("P", 0, ts(), vec![FolderNode::leaf("data", 50, ts())]),
                FolderNode::leaf("data", 1, ts()),
            ],
        ));
        let out = compress(&input, t(0.5));
        out.tree.validate().unwrap();
        let doc = ReducedTree {
            metrics: out.tree.metrics(None).unwrap(),
            tree: out.tree,
            strength: t(0.5),
            pruned_folder_count: 0,
            collapsed_folder_count: 1,
        };
        assert_eq!(ReducedTree::from_json(&doc.to_json()).unwrap(), doc);
    }

    #[test]
    fn reduce_endpoints() {
        let input = chain();
        let zero = reduce(&input, ReductionStrength::ZERO);
        assert_eq!(zero.tree, input);
        assert_eq!(
            (zero.pruned_folder_count, zero.collapsed_folder_count),
            (0, 0)
        );
        let one = reduce(&input, ReductionStrength::ONE);
        assert_eq!(one.metrics.folder_count, 1);
        assert_eq!(one.pruned_folder_count + one.collapsed_folder_count + 1, 3);
    }

    #[test]
    fn reduce_single_node() {
        let input = tree(FolderNode::leaf("solo", 4, ts()));
        for v in [0.0, 0.3, 1.0] {
            assert_eq!(reduce(&input, t(v)).tree, input);
        }
    }

    #[test]
    fn reduce_of_empty_collection_reports_full_fraction() {
        let input = tree(FolderNode::branch(
            "r",
            0,
            ts(),
            vec![FolderNode::leaf("e", 0, ts())],
        ));
        assert_eq!(reduce(&input, t(0.5)).metrics.retained_file_fraction, 1.0);
    }

    #[test]
    fn overrides_decouple_algorithms() {
        let input = chain();
        let only_compress = reduce_with(
            &input,
            t(0.5),
            StrengthOverrides {
                prune: Some(ReductionStrength::ZERO),
                compress: None,
            },
        );
        assert_eq!(only_compress.pruned_folder_count, 0);
        assert_eq!(only_compress.metrics.total_files, 10);
    }

    #[test]
    fn profile_endpoints_and_errors() {
        let input = chain();
        let p = profile(&input, &[0.0]).unwrap();
        assert_eq!(p.rows[0].folder_count, 3);
        assert_eq!(p.rows[0].retained_file_fraction, 1.0);
        assert_eq!(profile(&input, &[1.0]).unwrap().rows[0].folder_count, 1);
        assert!(profile(&input, &[]).is_err());
        assert!(profile(&input, &[0.5, 0.2]).is_err());
        assert!(profile(&input, &[0.5, 0.5]).is_err());
        assert!(profile(&input, &[1.5]).is_err());
    }

    #[test]
    fn grid_specs() {
        assert_eq!(parse_grid("0:1:1").unwrap(), [0.0, 1.0]);
        let fine = parse_grid("0:0.01:1").unwrap();
        assert_eq!(fine.len(), 101);
        assert_eq!(fine[7], 0.07);
        assert_eq!(fine[100], 1.0);
        assert_eq!(parse_grid("0.1, 0.5,0.9").unwrap(), [0.1, 0.5, 0.9]);
        assert_eq!(parse_grid("0.2:0.3:1").unwrap(), [0.2, 0.5, 0.8]);
        for bad in ["", "0:0:1", "1:0.1:0", "a:b:c", "0:1", "0:1:1:2", "0.1,x"] {
            assert!(parse_grid(bad).is_err(), "{bad}");
        }
    }
}
