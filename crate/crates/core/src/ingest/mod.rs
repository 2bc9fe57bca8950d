//! Producing [`FolderTree`](crate::FolderTree) snapshots and reading/writing
//! the snapshot interchange format.

mod scan;
pub(crate) mod snapshot;
mod synth;

use std::io;
use std::path::Path;

pub use scan::{scan, ScanError, ScanOptions, ScanReport, ScanWarning};
pub use snapshot::{
    read_snapshot, snapshot_from_json, snapshot_to_json, write_snapshot, OrderedSnapshot,
    SnapshotError, FORMAT_VERSION,
};
pub use synth::{generate_synthetic, SynthError, SynthParams, SYNTH_EPOCH};

/// Writes `bytes` to a sibling temporary file and renames it over `dest`.
pub(crate) fn write_atomic(dest: &Path, bytes: &[u8]) -> io::Result<()> {
    use std::io::Write;

    let dir = match dest.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(dest).map_err(|e| e.error)?;
    Ok(())
}
