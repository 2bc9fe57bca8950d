//! `gim`: scan, synthesize, reduce, profile and annotate folder hierarchies.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

/// Large enough for recursion over pathologically deep hierarchies.
const WORKER_STACK_BYTES: usize = 512 * 1024 * 1024;

#[derive(Debug, Parser)]
#[command(
    name = "gim",
    version,
    about = "Reduce and annotate large folder hierarchies"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Scan a directory into a snapshot file
    Scan {
        path: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        follow_symlinks: bool,
        /// Do not descend below this depth
        #[arg(long)]
        max_depth: Option<usize>,
        /// Skip directories with this name (repeatable)
        #[arg(long = "exclude", value_name = "NAME")]
        excluded: Vec<String>,
    },
    /// Generate a seeded synthetic snapshot
    Synth {
        #[arg(long)]
        folders: usize,
        #[arg(long, default_value_t = 1.1)]
        alpha: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 16)]
        max_children: usize,
        #[arg(long, default_value_t = 0.3)]
        depth_bias: f64,
        #[arg(long, default_value_t = 4.0)]
        scale: f64,
    },
    /// Write the reduced tree for one strength
    Reduce {
        snapshot: PathBuf,
        #[arg(long = "t", allow_negative_numbers = true)]
        t: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Sweep strengths and write one CSV row per grid point
    Profile {
        snapshot: PathBuf,
        /// "start:step:end" (inclusive) or a comma-separated list
        #[arg(long, default_value = "0:0.01:1")]
        grid: String,
        /// CSV destination; standard output when omitted
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Query or edit the annotations of a snapshot
    Annotate {
        snapshot: PathBuf,
        /// Annotation document; created on first mutation
        annotations: PathBuf,
        #[command(subcommand)]
        action: AnnotateAction,
    },
    /// Serve the HTTP API with snapshots preloaded
    Serve {
        #[arg(long = "snapshot", value_name = "FILE")]
        snapshots: Vec<PathBuf>,
        #[arg(long, default_value_t = 8765)]
        port: u16,
        /// Listen on all interfaces instead of loopback only
        #[arg(long)]
        open: bool,
    },
}

#[derive(Debug, Subcommand)]
enum AnnotateAction {
    /// Mark a folder relevant or excluded
    Set {
        path: String,
        #[command(flatten)]
        kind: KindFlag,
        /// Context tag for relevant folders (repeatable)
        #[arg(long = "context", value_name = "TAG")]
        contexts: Vec<String>,
        #[arg(long)]
        note: Option<String>,
    },
    /// Remove the mark on a folder
    Clear { path: String },
    /// Print the annotation document
    Show,
    /// Print file counts per effective status
    Coverage,
    /// Record which software opens files of a kind
    NoteAdd {
        applies_to: String,
        software: String,
        #[arg(long)]
        note: Option<String>,
    },
    NoteRemove {
        applies_to: String,
        software: String,
    },
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
struct KindFlag {
    #[arg(long)]
    relevant: bool,
    #[arg(long)]
    excluded: bool,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let worker = std::thread::Builder::new()
        .name("gim".into())
        .stack_size(WORKER_STACK_BYTES)
        .spawn(move || commands::run(cli.command))
        .expect("spawn worker thread");
    match worker.join() {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("error: {}", commands::describe(&e));
            ExitCode::from(commands::exit_code(&e))
        }
        Err(_) => ExitCode::from(1),
    }
}
