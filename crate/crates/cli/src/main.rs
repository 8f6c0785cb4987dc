//! `pfraisse`: command-line front end.
//!
//! Every subcommand prints a sorted `key: value` report on stdout. With
//! `--out DIR` the report is also written to `DIR/report.txt`, next to any
//! structures or bundles the command produced.
//!
//! Exit codes: 0 success or verdict true, 1 verdict false, 2 usage or parse
//! error, 3 bounded search inconclusive.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use pfraisse::error::{CanonError, ClassError, IoError, LimitError};
use pfraisse::DEFAULT_CANON_BOUND;

#[derive(Debug, Parser)]
#[command(name = "pfraisse", version, about = "Finite structures, epimorphisms and projective Fraisse limits")]
struct Cli {
    /// Worker threads for the parallel searches (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Largest domain size canonical forms are computed for.
    #[arg(long, global = true, default_value_t = DEFAULT_CANON_BOUND)]
    canon_bound: usize,
    /// Directory for report.txt and produced files.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse a structure file and list invariant violations.
    Validate { file: PathBuf },
    /// All epimorphisms A -> B.
    Epis { a: PathBuf, b: PathBuf },
    /// The structure a surjection induces on its target.
    Induce { structure: PathBuf, map: PathBuf },
    /// Common refinement of two epimorphisms f: K -> A and g: K -> B.
    Refine { k: PathBuf, a: PathBuf, b: PathBuf, f: PathBuf, g: PathBuf },
    /// An isomorphism A -> B, if any.
    Iso { a: PathBuf, b: PathBuf },
    /// The automorphism group of a structure.
    Aut { structure: PathBuf },
    /// HP, JSP and PAP for a class manifest.
    CheckClass {
        class: PathBuf,
        /// Check PAP only for instances on members of at most this many
        /// points (default: max_size). Witnesses still range up to max_size.
        #[arg(long)]
        instance_bound: Option<usize>,
    },
    /// Build an inverse system from a class and write it as a bundle.
    BuildLimit {
        class: PathBuf,
        #[arg(long, default_value_t = 6)]
        depth: usize,
        #[arg(long, default_value_t = 3)]
        task_bound: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Only the JSP chain, without discharging extension tasks.
        #[arg(long)]
        age_chain: bool,
    },
    /// Extension certificate of a bundle against a class.
    Certify {
        bundle: PathBuf,
        class: PathBuf,
        #[arg(long, default_value_t = 3)]
        task_bound: usize,
        /// Also fail when a task native below the top level is unfulfilled.
        #[arg(long)]
        strict: bool,
    },
    /// Leveled back-and-forth between two bundles.
    BackAndForth {
        bundle1: PathBuf,
        bundle2: PathBuf,
        /// Anchor structure; defaults to level 1 of the first bundle.
        #[arg(long)]
        anchor: Option<PathBuf>,
        /// Epimorphism from level 1 of the first bundle onto the anchor.
        #[arg(long)]
        f: Option<PathBuf>,
        /// Epimorphism from level 1 of the second bundle onto the anchor.
        #[arg(long)]
        g: Option<PathBuf>,
        #[arg(long, default_value_t = 5)]
        depth: usize,
    },
    /// Replace a direct symbol by its dual encoding and compare automorphisms.
    Dualize { structure: PathBuf, symbol: String },
    /// The orbit structure of a permutation group.
    Orbits {
        group: PathBuf,
        /// Defaults to the group's degree.
        #[arg(long)]
        max_arity: Option<usize>,
    },
    /// Check that the orbit structure has exactly the group as automorphisms.
    VerifyOrbits {
        group: PathBuf,
        #[arg(long)]
        max_arity: Option<usize>,
    },
    /// Pre-space check and quotient by `r`.
    Quotient { structure: PathBuf },
    /// Dyadic interval system and its limit diagnostics.
    DemoInterval {
        #[arg(long, default_value_t = 4)]
        depth: usize,
    },
    /// Cantor system and its limit diagnostics.
    DemoCantor {
        #[arg(long, default_value_t = 4)]
        depth: usize,
    },
}

/// Outcome of a successful run: the exit code carries the verdict.
pub(crate) struct Outcome {
    pub report: pfraisse::report::Report,
    pub code: u8,
}

fn error_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(LimitError::Bounded { .. }) = cause.downcast_ref::<LimitError>() {
            return 3;
        }
        if cause.downcast_ref::<CanonError>().is_some() {
            return 3;
        }
        if let Some(ClassError::Canon(_)) = cause.downcast_ref::<ClassError>() {
            return 3;
        }
        if let Some(IoError::Class { source: ClassError::Canon(_), .. }) = cause.downcast_ref::<IoError>() {
            return 3;
        }
    }
    2
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            eprintln!("error: --jobs must be at least 1");
            return ExitCode::from(2);
        }
        rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global().expect("pool is built once");
    }
    match commands::run(&cli) {
        Ok(outcome) => {
            print!("{}", outcome.report);
            ExitCode::from(outcome.code)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(error_code(&e))
        }
    }
}
