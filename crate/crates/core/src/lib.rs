//! Reduction and annotation of large folder hierarchies.
//!
//! A [`FolderTree`] is an immutable snapshot of a directory hierarchy that
//! records only counts: files directly inside each folder, files reachable
//! from it, and the folder's modification time. Snapshots come from a real
//! file system ([`ingest::scan`]) or a seeded generator with a heavy-tailed
//! file distribution ([`ingest::generate_synthetic`]).
//!
//! [`reduction`] shrinks a snapshot with one strength parameter in `[0, 1]`
//! that drives quantile pruning of file-light folders and collapse of
//! intermediate folders dominated by a heavy child. [`annotation`] records
//! relevance and exclusion marks for handing a collection over to someone
//! else, along with notes on the software needed to open its files.

pub mod annotation;
pub mod ingest;
pub mod reduction;
mod timefmt;
pub mod tree;

pub use annotation::{
    AnnotationError, AnnotationKind, AnnotationStatus, AnnotationStore, Coverage, EffectiveKind,
    EffectiveStatus, SoftwareNote, SortKey, SortOrder,
};
pub use ingest::{ScanError, ScanOptions, ScanReport, SnapshotError, SynthParams};
pub use reduction::{ReducedTree, ReductionError, ReductionProfile, ReductionStrength};
pub use tree::{FolderNode, FolderTree, TreeError, TreeMetrics};
