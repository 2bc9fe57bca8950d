use std::collections::BTreeSet;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use chrono::{DateTime, SubsecRound, Utc};
use rayon::prelude::*;
use thiserror::Error;

use crate::timefmt;
use crate::tree::{FolderNode, FolderTree};

#[derive(Debug, Clone, Default)]
pub struct ScanOptions {
    pub follow_symlinks: bool,
    /// Folders deeper than this are not listed; the root has depth 0.
    pub max_depth_limit: Option<usize>,
    /// Entry names (files or folders) skipped entirely.
    pub excluded_names: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScanWarning {
    pub path: PathBuf,
    pub message: String,
}

#[derive(Debug, Clone)]
pub struct ScanReport {
    pub tree: FolderTree,
    pub warnings: Vec<ScanWarning>,
}

#[derive(Debug, Error)]
pub enum ScanError {
    #[error("cannot scan {path}: {source}")]
    Root {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{0} is not a directory")]
    NotADirectory(PathBuf),
    #[error("symlink cycle: {path} was already visited on this branch")]
    Cycle { path: PathBuf },
}

struct Walker<'a> {
    opts: &'a ScanOptions,
}

type Scanned = Result<(FolderNode, Vec<ScanWarning>), ScanError>;

/// Walks a directory into a [`FolderTree`].
///
/// Children are listed by name ascending regardless of the order the
/// operating system returns them in, and sibling subtrees are scanned in
/// parallel with their results merged in that same order.
pub fn scan(path: impl AsRef<Path>, opts: &ScanOptions) -> Result<ScanReport, ScanError> {
    let path = path.as_ref();
    let meta = fs::metadata(path).map_err(|source| ScanError::Root {
        path: path.to_path_buf(),
        source,
    })?;
    if !meta.is_dir() {
        return Err(ScanError::NotADirectory(path.to_path_buf()));
    }
    // Listing the root up front turns an unreadable root into an error
    // instead of a warning.
    fs::read_dir(path).map_err(|source| ScanError::Root {
        path: path.to_path_buf(),
        source,
    })?;

    let ancestors = if opts.follow_symlinks {
        vec![fs::canonicalize(path).map_err(|source| ScanError::Root {
            path: path.to_path_buf(),
            source,
        })?]
    } else {
        Vec::new()
    };

    let walker = Walker { opts };
    let (mut root, warnings) = walker.visit(path, root_name(path), &meta, 0, &ancestors)?;
    root.recompute();
    let tree = FolderTree::new(root, path.display().to_string(), timefmt::now());
    Ok(ScanReport { tree, warnings })
}

fn root_name(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .or_else(|| {
            fs::canonicalize(path)
                .ok()
                .and_then(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
        })
        .unwrap_or_else(|| path.display().to_string().replace('/', "_"))
        .replace('/', "_")
}

fn mtime(meta: &fs::Metadata) -> DateTime<Utc> {
    meta.modified()
        .map(|t| DateTime::<Utc>::from(t).trunc_subsecs(0))
        .unwrap_or(DateTime::UNIX_EPOCH)
}

impl Walker<'_> {
    fn visit(
        &self,
        path: &Path,
        name: String,
        meta: &fs::Metadata,
        depth: usize,
        ancestors: &[PathBuf],
    ) -> Scanned {
        let mut node = FolderNode::leaf(name, 0, mtime(meta));
        let mut warnings = Vec::new();

        let entries = match fs::read_dir(path) {
            Ok(entries) => entries,
            Err(e) => {
                warnings.push(ScanWarning {
                    path: path.to_path_buf(),
                    message: format!("unreadable, recorded as empty: {e}"),
                });
                return Ok((node, warnings));
            }
        };

        let mut subdirs: Vec<(String, PathBuf, fs::Metadata)> = Vec::new();
        for entry in entries {
            let entry = match entry {
                Ok(entry) => entry,
                Err(e) => {
                    warnings.push(ScanWarning {
                        path: path.to_path_buf(),
                        message: format!("entry could not be read: {e}"),
                    });
                    continue;
                }
            };
            let raw_name = entry.file_name();
            let name = raw_name.to_string_lossy().into_owned();
            if self.opts.excluded_names.contains(&name) {
                continue;
            }
            if raw_name.to_str().is_none() {
                warnings.push(ScanWarning {
                    path: entry.path(),
                    message: "name is not valid UTF-8; stored lossily".into(),
                });
            }
            let file_type = match entry.file_type() {
                Ok(ft) => ft,
                Err(e) => {
                    warnings.push(ScanWarning {
                        path: entry.path(),
                        message: format!("type could not be read: {e}"),
                    });
                    continue;
                }
            };
            let entry_path = entry.path();
            if file_type.is_dir() {
                match fs::symlink_metadata(&entry_path) {
                    Ok(m) => subdirs.push((name, entry_path, m)),
                    Err(e) => warnings.push(ScanWarning {
                        path: entry_path,
                        message: format!("metadata unavailable: {e}"),
                    }),
                }
            } else if file_type.is_symlink() {
                match fs::metadata(&entry_path) {
                    Ok(target) if target.is_dir() => {
                        if self.opts.follow_symlinks {
                            subdirs.push((name, entry_path, target));
                        }
                    }
                    // Links to files and dangling links both count as files.
                    _ => node.direct_files += 1,
                }
            } else {
                node.direct_files += 1;
            }
        }

        if self
            .opts
            .max_depth_limit
            .is_some_and(|limit| depth >= limit)
        {
            return Ok((node, warnings));
        }

        subdirs.sort_by(|a, b| a.0.cmp(&b.0));
        subdirs.dedup_by(|a, b| a.0 == b.0);

        let results: Vec<Scanned> = subdirs
            .into_par_iter()
            .map(|(name, child_path, meta)| {
                let mut chain = Vec::new();
                if self.opts.follow_symlinks {
                    let canonical =
                        fs::canonicalize(&child_path).unwrap_or_else(|_| child_path.clone());
                    if ancestors.contains(&canonical) {
                        return Err(ScanError::Cycle { path: child_path });
                    }
                    chain.reserve(ancestors.len() + 1);
                    chain.extend_from_slice(ancestors);
                    chain.push(canonical);
                }
                self.visit(&child_path, name, &meta, depth + 1, &chain)
            })
            .collect();

        for result in results {
            let (child, child_warnings) = result?;
            node.children.push(child);
            warnings.extend(child_warnings);
        }
        Ok((node, warnings))
    }
}
