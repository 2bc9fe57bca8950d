use std::collections::BTreeSet;
use std::fs;
use std::io::{self, Write};
use std::net::{Ipv4Addr, SocketAddr};
use std::path::Path;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use chrono::{SubsecRound, Utc};
use gim_core::annotation::{load_annotations, save_annotations};
use gim_core::ingest::{generate_synthetic, read_snapshot, scan, write_snapshot};
use gim_core::reduction::{parse_grid, profile, reduce};
use gim_core::{
    AnnotationError, AnnotationStatus, AnnotationStore, FolderTree, ReductionStrength, ScanOptions,
    SoftwareNote, SynthParams, TreeMetrics,
};
use gim_service::Registry;

use crate::{AnnotateAction, Command};

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Scan {
            path,
            out,
            follow_symlinks,
            max_depth,
            excluded,
        } => {
            let opts = ScanOptions {
                follow_symlinks,
                max_depth_limit: max_depth,
                excluded_names: excluded.into_iter().collect::<BTreeSet<_>>(),
            };
            let report = scan(&path, &opts)?;
            for w in &report.warnings {
                eprintln!("warning: {}: {}", w.path.display(), w.message);
            }
            write_snapshot(&report.tree, &out)?;
            print_summary(&report.tree.metrics(None)?);
        }
        Command::Synth {
            folders,
            alpha,
            seed,
            out,
            max_children,
            depth_bias,
            scale,
        } => {
            let params = SynthParams {
                target_folder_count: folders,
                max_children,
                depth_bias,
                pareto_alpha: alpha,
                scale,
                seed,
            };
            let tree = generate_synthetic(&params)?;
            write_snapshot(&tree, &out)?;
            print_summary(&tree.metrics(None)?);
        }
        Command::Reduce { snapshot, t, out } => {
            let t = ReductionStrength::new(t)?;
            let tree = read_snapshot(&snapshot)?;
            let reduced = reduce(&tree, t);
            write_text(&out, &reduced.to_json())?;
            print_summary(&reduced.metrics);
        }
        Command::Profile {
            snapshot,
            grid,
            out,
        } => {
            let grid = parse_grid(&grid)?;
            let tree = read_snapshot(&snapshot)?;
            let p = profile(&tree, &grid)?;
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["t", "folder_count", "max_depth", "retained_file_fraction"])?;
            for row in &p.rows {
                w.write_record([
                    row.t.to_string(),
                    row.folder_count.to_string(),
                    row.max_depth.to_string(),
                    row.retained_file_fraction.to_string(),
                ])?;
            }
            let bytes = w.into_inner().map_err(|e| e.into_error())?;
            match out {
                Some(out) => fs::write(&out, &bytes)
                    .with_context(|| format!("cannot write {}", out.display()))?,
                None => io::stdout().write_all(&bytes)?,
            }
        }
        Command::Annotate {
            snapshot,
            annotations,
            action,
        } => annotate(&snapshot, &annotations, action)?,
        Command::Serve {
            snapshots,
            port,
            open,
        } => serve(&snapshots, port, open)?,
    }
    Ok(())
}

/// 2 for exclusion conflicts, 1 for everything else.
pub fn exit_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<AnnotationError>() {
        Some(AnnotationError::ExclusionConflict { .. }) => 2,
        _ => 1,
    }
}

/// The error chain on one line, skipping causes already quoted by the
/// message above them.
pub fn describe(e: &anyhow::Error) -> String {
    let mut out = String::new();
    for cause in e.chain() {
        let text = cause.to_string();
        if out.contains(&text) {
            continue;
        }
        if !out.is_empty() {
            out.push_str(": ");
        }
        out.push_str(&text);
    }
    out
}

fn print_summary(m: &TreeMetrics) {
    println!(
        "folders={} files={} depth={}",
        m.folder_count, m.total_files, m.max_depth
    );
}

fn write_text(dest: &Path, text: &str) -> Result<()> {
    fs::write(dest, text).with_context(|| format!("cannot write {}", dest.display()))
}

fn now() -> chrono::DateTime<Utc> {
    Utc::now().trunc_subsecs(0)
}

fn annotate(snapshot: &Path, annotations: &Path, action: AnnotateAction) -> Result<()> {
    let tree = read_snapshot(snapshot)?;
    let store = if annotations.exists() {
        let store = load_annotations(annotations)?;
        store.check_against(&tree)?;
        store
    } else {
        AnnotationStore::for_tree(&tree, tree.scanned_at)
    };
    let next = match action {
        AnnotateAction::Show => {
            print!("{}", store.to_json());
            return Ok(());
        }
        AnnotateAction::Coverage => {
            let c = store.coverage_summary(&tree);
            println!(
                "relevant={} excluded={} unmarked={}",
                c.relevant_files, c.excluded_files, c.unmarked_files
            );
            return Ok(());
        }
        AnnotateAction::Set {
            path,
            kind,
            contexts,
            note,
        } => {
            let status = if kind.excluded {
                if !contexts.is_empty() {
                    bail!("--context applies to relevant folders only");
                }
                AnnotationStatus::excluded()
            } else {
                AnnotationStatus::relevant(&contexts)?
            };
            store.set_annotation(&tree, &path, status.with_note(note), now())?
        }
        AnnotateAction::Clear { path } => store.clear_annotation(&path, now())?,
        AnnotateAction::NoteAdd {
            applies_to,
            software,
            note,
        } => store.add_software_note(SoftwareNote::new(applies_to, software, note)?, now()),
        AnnotateAction::NoteRemove {
            applies_to,
            software,
        } => store.remove_software_note(&applies_to, &software, now())?,
    };
    save_annotations(&next, annotations)?;
    Ok(())
}

fn serve(snapshots: &[std::path::PathBuf], port: u16, open: bool) -> Result<()> {
    let trees: Vec<FolderTree> = snapshots
        .iter()
        .map(read_snapshot)
        .collect::<Result<_, _>>()?;
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .thread_stack_size(64 * 1024 * 1024)
        .build()?;
    runtime.block_on(async move {
        let host = if open {
            Ipv4Addr::UNSPECIFIED
        } else {
            Ipv4Addr::LOCALHOST
        };
        let listener = tokio::net::TcpListener::bind(SocketAddr::from((host, port)))
            .await
            .with_context(|| format!("cannot listen on port {port}"))?;
        let registry = Arc::new(Registry::new());
        for (tree, path) in trees.into_iter().zip(snapshots) {
            let c = registry.insert(tree);
            println!("collection {} {}", c.id(), path.display());
        }
        println!("listening http://{}", listener.local_addr()?);
        io::stdout().flush()?;
        gim_service::serve(listener, registry).await?;
        Ok(())
    })
}
