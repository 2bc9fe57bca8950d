//! Seeded synthetic hierarchies with heavy-tailed file counts.
//!
//! Folders are attached one at a time. With probability `depth_bias` the new
//! folder goes under the folder created just before it (growing a deep
//! branch); otherwise its parent is drawn uniformly from all folders that
//! still have room for another child. Direct file counts follow a shifted
//! Pareto (Lomax) law, `floor(X - scale)` with `X ~ Pareto(scale, alpha)`, so
//! many folders hold no files and a few hold most of them.

use chrono::{TimeZone, Utc};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Pareto};
use thiserror::Error;

use crate::tree::{FolderNode, FolderTree};

/// End of the modification-time window used by the generator.
pub const SYNTH_EPOCH: i64 = 1_654_041_600; // 2022-06-01T00:00:00Z
const WINDOW_SECS: i64 = 2 * 365 * 24 * 3600;
const MAX_DIRECT_FILES: f64 = 1e12;

#[derive(Debug, Error, PartialEq)]
pub enum SynthError {
    #[error("invalid synthetic parameters: {0}")]
    InvalidParams(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthParams {
    pub target_folder_count: usize,
    pub max_children: usize,
    /// Probability in (0, 1) of extending the most recent branch.
    pub depth_bias: f64,
    pub pareto_alpha: f64,
    pub scale: f64,
    pub seed: u64,
}

impl Default for SynthParams {
    fn default() -> Self {
        SynthParams {
            target_folder_count: 1000,
            max_children: 16,
            depth_bias: 0.3,
            pareto_alpha: 1.1,
            scale: 4.0,
            seed: 0,
        }
    }
}

impl SynthParams {
    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |msg: &str| Err(SynthError::InvalidParams(msg.to_string()));
        if self.target_folder_count < 1 {
            return bad("target_folder_count must be at least 1");
        }
        if self.max_children < 1 {
            return bad("max_children must be at least 1");
        }
        if !(self.depth_bias > 0.0 && self.depth_bias < 1.0) {
            return bad("depth_bias must lie strictly between 0 and 1");
        }
        if !(self.pareto_alpha.is_finite() && self.pareto_alpha > 0.0) {
            return bad("pareto_alpha must be positive");
        }
        if !(self.scale.is_finite() && self.scale > 0.0) {
            return bad("scale must be positive");
        }
        Ok(())
    }
}

/// Generates a tree with exactly `target_folder_count` folders.
///
/// The same parameters always produce the same tree, including timestamps.
pub fn generate_synthetic(params: &SynthParams) -> Result<FolderTree, SynthError> {
    params.validate()?;
    let n = params.target_folder_count;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let files = Pareto::new(params.scale, params.pareto_alpha)
        .map_err(|e| SynthError::InvalidParams(e.to_string()))?;
    let epoch = Utc.timestamp_opt(SYNTH_EPOCH, 0).unwrap();

    let draw_node = |rng: &mut ChaCha8Rng, name: String| {
        let x: f64 = files.sample(rng);
        let direct = (x - params.scale).floor().clamp(0.0, MAX_DIRECT_FILES) as u64;
        let age = rng.random_range(0..=WINDOW_SECS);
        FolderNode::leaf(name, direct, epoch - chrono::Duration::seconds(age))
    };

    let width = n.to_string().len();
    let mut nodes: Vec<Option<FolderNode>> = Vec::with_capacity(n);
    let mut parent = vec![0usize; n];
    let mut child_count = vec![0usize; n];
    // Folders that can still take a child; `slot[i]` is i's index in `open`.
    let mut open: Vec<usize> = Vec::with_capacity(n);
    let mut slot = vec![usize::MAX; n];

    nodes.push(Some(draw_node(&mut rng, "root".into())));
    open.push(0);
    slot[0] = 0;

    for i in 1..n {
        let prev = i - 1;
        let deepen = rng.random_bool(params.depth_bias);
        let p = if deepen && child_count[prev] < params.max_children {
            prev
        } else {
            open[rng.random_range(0..open.len())]
        };
        parent[i] = p;
        child_count[p] += 1;
        if child_count[p] == params.max_children {
            let at = slot[p];
            open.swap_remove(at);
            if at < open.len() {
                slot[open[at]] = at;
            }
            slot[p] = usize::MAX;
        }
        slot[i] = open.len();
        open.push(i);
        nodes.push(Some(draw_node(&mut rng, format!("d{i:0width$}"))));
    }

    // Parents always precede children, so folding from the back assembles
    // the nesting without recursion.
    for i in (1..n).rev() {
        let child = nodes[i].take().expect("each folder is attached once");
        nodes[parent[i]]
            .as_mut()
            .expect("parent not yet attached")
            .children
            .push(child);
    }
    let mut root = nodes[0].take().expect("root present");
    let mut stack = vec![&mut root];
    while let Some(node) = stack.pop() {
        node.children.sort_by(|a, b| a.name.cmp(&b.name));
        stack.extend(node.children.iter_mut());
    }
    root.recompute();
    Ok(FolderTree::new(root, "synthetic", epoch))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(count: usize, seed: u64) -> SynthParams {
        SynthParams {
            target_folder_count: count,
            seed,
            ..Default::default()
        }
    }

    #[test]
    fn single_folder() {
        let tree = generate_synthetic(&params(1, 7)).unwrap();
        assert_eq!(tree.folder_count(), 1);
        assert!(tree.root.children.is_empty());
    }

    #[test]
    fn exact_folder_count_and_valid() {
        for count in [2, 17, 500, 3000] {
            let tree = generate_synthetic(&params(count, count as u64)).unwrap();
            assert_eq!(tree.folder_count(), count);
            tree.validate().unwrap();
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let a = generate_synthetic(&params(800, 3)).unwrap();
        let b = generate_synthetic(&params(800, 3)).unwrap();
        let c = generate_synthetic(&params(800, 4)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn respects_max_children() {
        let p = SynthParams {
            target_folder_count: 2000,
            max_children: 3,
            ..Default::default()
        };
        let tree = generate_synthetic(&p).unwrap();
        assert!(tree.root.iter().all(|(_, n)| n.children.len() <= 3));
    }

    #[test]
    fn timestamps_within_window() {
        let tree = generate_synthetic(&params(1000, 11)).unwrap();
        let end = Utc.timestamp_opt(SYNTH_EPOCH, 0).unwrap();
        let start = end - chrono::Duration::seconds(WINDOW_SECS);
        assert!(tree
            .root
            .iter()
            .all(|(_, n)| n.modified_at <= end && n.modified_at >= start));
    }

    #[test]
    fn rejects_bad_params() {
        let cases = [
            SynthParams {
                target_folder_count: 0,
                ..Default::default()
            },
            SynthParams {
                max_children: 0,
                ..Default::default()
            },
            SynthParams {
                depth_bias: 0.0,
                ..Default::default()
            },
            SynthParams {
                depth_bias: 1.0,
                ..Default::default()
            },
            SynthParams {
                pareto_alpha: -1.0,
                ..Default::default()
            },
            SynthParams {
                scale: f64::NAN,
                ..Default::default()
            },
        ];
        for p in cases {
            assert!(generate_synthetic(&p).is_err(), "{p:?}");
        }
    }
}
