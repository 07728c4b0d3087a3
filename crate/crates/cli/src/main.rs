//! `veriq` command-line tool.
//!
//! Exit codes: 0 success or accepted answer, 1 rejected answer, 2 usage
//! error, 3 internal error.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

/// Verifiable Boolean range queries over an append-only chain.
#[derive(Parser)]
#[command(name = "veriq", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Index {
    Nil,
    Intra,
    Both,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Realtime,
    Lazy,
}

#[derive(Subcommand)]
enum Command {
    /// Runs the parameter setup and writes the public parameters.
    Keygen {
        /// Accumulator construction: acc1 or acc2.
        construction: String,
        /// Capacity q (largest supported multiset size or universe size).
        capacity: u64,
        #[arg(long, short, default_value = "params.bin")]
        out: PathBuf,
        /// Seed for a reproducible setup; random when omitted.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Ingests a JSON-lines file into a new chain directory.
    Build {
        #[arg(long)]
        params: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        chain: PathBuf,
        /// Block cut policy: count:N or interval:SECONDS.
        #[arg(long, default_value = "count:8")]
        block: String,
        #[arg(long, value_enum, default_value = "both")]
        index: Index,
        /// Number of skip distances 2, 4, ..., 2^N per block.
        #[arg(long, default_value_t = 5)]
        skip_len: u8,
        /// Numeric dimension, WIDTH or WIDTH:OFFSET:SCALE; repeat per dimension.
        #[arg(long = "dim")]
        dims: Vec<String>,
        #[arg(long, default_value = "veriq")]
        salt: String,
        /// Leading zero bits required of block hashes.
        #[arg(long, default_value_t = 0)]
        difficulty: u8,
    },
    /// Answers a time-window query and writes the results and VO.
    Query {
        #[arg(long)]
        chain: PathBuf,
        /// Query text, e.g. `window=[1,9] range=[(0,6)] bool="a" AND ("b" OR "c")`.
        #[arg(long, short)]
        query: String,
        #[arg(long, default_value = "vo.bin")]
        out: PathBuf,
        /// Results file (JSON lines); printed to stdout when omitted.
        #[arg(long)]
        results: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "both")]
        index: Index,
        /// Aggregate proofs sharing a clause (acc2 only).
        #[arg(long)]
        batched: bool,
        #[arg(long, default_value_t = 1)]
        threads: usize,
    },
    /// Verifies results and a VO using only headers, parameters and config.
    Verify {
        /// Chain directory; only chain.meta, params.bin and headers.bin are read.
        #[arg(long)]
        chain: PathBuf,
        #[arg(long, short)]
        query: String,
        #[arg(long)]
        results: PathBuf,
        #[arg(long)]
        vo: PathBuf,
        /// Print the report as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Replays the chain through subscription processing.
    Subscribe {
        #[arg(long)]
        chain: PathBuf,
        /// File with one subscription query per line (no window).
        #[arg(long)]
        queries: PathBuf,
        #[arg(long, value_enum, default_value = "realtime")]
        mode: Mode,
        /// Lazy mode: buffered blocks that force a delivery.
        #[arg(long, default_value_t = 16)]
        threshold: u64,
        /// Directory receiving one file per delivery.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Verify each delivery as a light client would.
        #[arg(long)]
        verify: bool,
    },
    /// Reports per-block ADS sizes and, with a query, VO counters per index mode.
    Stats {
        #[arg(long)]
        chain: PathBuf,
        #[arg(long, short)]
        query: Option<String>,
        #[arg(long)]
        json: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{f}");
            ExitCode::from(f.code())
        }
    }
}
