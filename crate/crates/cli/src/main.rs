mod family;
mod input;
mod pieces;
mod play;
mod search;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use bmn::construct::{EditOp, TEMPLATE_BUDGET};
use bmn::engine::DEFAULT_MAX_TRICKS;
use bmn::registry::Group;
use bmn::stochastic::{DealKind, DEFAULT_TAIL_START};
use bmn::Detect;

/// Exit status for malformed input and bad arguments.
pub const EXIT_USAGE: u8 = 64;
/// Exit status for unreadable or unwritable files.
pub const EXIT_IO: u8 = 74;

#[derive(Debug, Parser)]
#[command(name = "bmn", version, about = "Beggar-My-Neighbor laboratory: play, search and verify deals")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Play a deal to the end and print the outcome as JSON.
    Simulate(SimulateArgs),
    /// Check the embedded records, pieces, constructions, cycle and family.
    Verify(VerifyArgs),
    /// Play random deals, appending any new longest game to a record log.
    SearchRandom(SearchRandomArgs),
    /// Enumerate candidate pieces and store the certified class representatives.
    SearchPieces(SearchPiecesArgs),
    /// Build the deal played by a sequence of pieces.
    Assemble(AssembleArgs),
    /// Explore every earlier state that plays into a set of anchor states.
    Backward(BackwardArgs),
    /// Length histogram and tail statistics over random deals.
    Stats(StatsArgs),
    /// Concatenate the states of a deal's loop into one larger deal.
    Expand(ExpandArgs),
    /// Looping variants of a deal reachable by a few card edits.
    Mutate(MutateArgs),
    /// Measure single-deal throughput in games per hour.
    Bench(BenchArgs),
}

/// A state given inline or read from a file.
#[derive(Debug, Args)]
pub struct StateInput {
    /// Deal as `<hand1> / <hand2> (<leader>)` or `1. <hand1> 2. <hand2> (<leader>)`.
    #[arg(conflicts_with = "file", allow_hyphen_values = true)]
    pub state: Option<String>,
    /// Read the deal from this file instead.
    #[arg(long, short)]
    pub file: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum DetectArg {
    Hashset,
    Brent,
    None,
}

impl From<DetectArg> for Detect {
    fn from(d: DetectArg) -> Detect {
        match d {
            DetectArg::Hashset => Detect::HashSet,
            DetectArg::Brent => Detect::Brent,
            DetectArg::None => Detect::None,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum PolicyArg {
    Uniform,
    FaceBalanced,
}

impl From<PolicyArg> for DealKind {
    fn from(p: PolicyArg) -> DealKind {
        match p {
            PolicyArg::Uniform => DealKind::Uniform,
            PolicyArg::FaceBalanced => DealKind::FaceBalanced,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum GroupArg {
    Records,
    Pieces,
    Constructions,
    Cycle,
    Predecessors,
    Family,
}

impl From<GroupArg> for Group {
    fn from(g: GroupArg) -> Group {
        match g {
            GroupArg::Records => Group::Records,
            GroupArg::Pieces => Group::Pieces,
            GroupArg::Constructions => Group::Constructions,
            GroupArg::Cycle => Group::Cycle,
            GroupArg::Predecessors => Group::Predecessors,
            GroupArg::Family => Group::Family,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum OpArg {
    Insert,
    Remove,
    Swap,
}

impl From<OpArg> for EditOp {
    fn from(o: OpArg) -> EditOp {
        match o {
            OpArg::Insert => EditOp::Insert,
            OpArg::Remove => EditOp::Remove,
            OpArg::Swap => EditOp::Swap,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FamilyFormat {
    Json,
    Dot,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EnumerationArg {
    Base4,
    Multiset,
}

#[derive(Debug, Args)]
pub struct Workers {
    /// Worker threads; defaults to every available core.
    #[arg(long, env = "BMN_THREADS")]
    pub workers: Option<usize>,
}

impl Workers {
    pub fn count(&self) -> usize {
        self.workers.filter(|&w| w > 0).unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
    }

    /// Runs `work` on a pool of [`Workers::count`] threads.
    pub fn install<T: Send>(&self, work: impl FnOnce() -> T + Send) -> T {
        match rayon::ThreadPoolBuilder::new().num_threads(self.count()).build() {
            Ok(pool) => pool.install(work),
            Err(_) => work(),
        }
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub input: StateInput,
    #[arg(long, default_value_t = DEFAULT_MAX_TRICKS)]
    pub max_tricks: u64,
    #[arg(long, value_enum, default_value = "hashset")]
    pub detect: DetectArg,
    /// Print every trick-boundary state before the outcome.
    #[arg(long)]
    pub trace: bool,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Restrict the run to these groups (comma separated or repeated).
    #[arg(long, value_enum, value_delimiter = ',')]
    pub only: Vec<GroupArg>,
    /// Print the checks as JSON lines.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct SearchRandomArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1_000_000)]
    pub games: u64,
    /// First draw index, for resuming a search.
    #[arg(long, default_value_t = 0)]
    pub start: u64,
    #[arg(long, value_enum, default_value = "uniform")]
    pub policy: PolicyArg,
    #[arg(long, default_value_t = DEFAULT_MAX_TRICKS)]
    pub max_tricks: u64,
    /// Append-only JSON-lines log of records found.
    #[arg(long, default_value = "records.jsonl")]
    pub log: PathBuf,
    /// Only games longer than this count as records; defaults to the longest
    /// known record or the longest game already in the log.
    #[arg(long)]
    pub min_tricks: Option<u64>,
    #[command(flatten)]
    pub workers: Workers,
}

#[derive(Debug, Args)]
pub struct SearchPiecesArgs {
    #[arg(long, default_value_t = 6)]
    pub max_len: usize,
    #[arg(long, value_enum, default_value = "base4")]
    pub mode: EnumerationArg,
    /// For multiset mode: a card sequence whose composition is permuted.
    #[arg(long, required_if_eq("mode", "multiset"))]
    pub multiset: Option<String>,
    #[arg(long, default_value = bmn::construct::DEFAULT_FILTER)]
    pub filter_piece: String,
    #[arg(long, default_value_t = TEMPLATE_BUDGET)]
    pub budget: u64,
    /// Piece store to create or extend.
    #[arg(long, default_value = "pieces.txt")]
    pub out: PathBuf,
    #[command(flatten)]
    pub workers: Workers,
}

#[derive(Debug, Args)]
pub struct AssembleArgs {
    /// Pieces in order, without their terminating jacks.
    #[arg(allow_hyphen_values = true)]
    pub pieces: Vec<String>,
    /// Take the pieces from a piece store, in stored order.
    #[arg(long, conflicts_with = "pieces")]
    pub store: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BackwardArgs {
    /// File of anchor states, one per line; defaults to the embedded 62-state cycle.
    #[arg(long)]
    pub anchors: Option<PathBuf>,
    #[arg(long, default_value_t = 1_000)]
    pub max_depth: u32,
    #[arg(long, default_value_t = 1_000_000)]
    pub max_states: usize,
    /// Only report states with equal hands.
    #[arg(long)]
    pub report_balanced: bool,
    #[arg(long, value_enum, default_value = "json")]
    pub format: FamilyFormat,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1_000_000)]
    pub games: u64,
    #[arg(long, value_enum, default_value = "uniform")]
    pub policy: PolicyArg,
    #[arg(long, default_value_t = DEFAULT_MAX_TRICKS)]
    pub max_tricks: u64,
    #[arg(long, default_value_t = DEFAULT_TAIL_START)]
    pub tail_start: u64,
    /// Histogram CSV destination.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Summary JSON destination; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub workers: Workers,
}

#[derive(Debug, Args)]
pub struct ExpandArgs {
    #[command(flatten)]
    pub input: StateInput,
    /// Repeat the starting hands this many times instead of joining the loop states.
    #[arg(long)]
    pub repeat: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_MAX_TRICKS)]
    pub max_tricks: u64,
}

#[derive(Debug, Args)]
pub struct MutateArgs {
    #[command(flatten)]
    pub input: StateInput,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "insert,remove,swap")]
    pub ops: Vec<OpArg>,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(0..=3))]
    pub max_edits: u64,
    #[arg(long, default_value_t = TEMPLATE_BUDGET)]
    pub budget: u64,
    /// Edit only cards `START..END` of the deck, hand 1 first.
    #[arg(long, value_parser = parse_range)]
    pub region: Option<std::ops::Range<usize>>,
    #[command(flatten)]
    pub workers: Workers,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, default_value_t = 100_000)]
    pub games: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "uniform")]
    pub policy: PolicyArg,
    /// Worker threads; the per-core figure divides by this.
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
}

fn parse_range(text: &str) -> Result<std::ops::Range<usize>, String> {
    let (a, b) = text.split_once("..").ok_or("expected START..END")?;
    let start: usize = a.trim().parse().map_err(|e| format!("bad start: {e}"))?;
    let end: usize = b.trim().parse().map_err(|e| format!("bad end: {e}"))?;
    if start > end {
        return Err(format!("empty range {start}..{end}"));
    }
    Ok(start..end)
}

/// An error caused by the caller's input rather than the environment.
#[derive(Debug)]
pub struct Usage(pub String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<Usage>() || cause.is::<bmn::ParseError>() || cause.is::<bmn::EngineError>() {
            return EXIT_USAGE;
        }
        if cause.is::<std::io::Error>() {
            return EXIT_IO;
        }
    }
    1
}

fn run(cli: Cli) -> anyhow::Result<u8> {
    match cli.command {
        Command::Simulate(args) => play::simulate(&args),
        Command::Verify(args) => verify::verify(&args),
        Command::SearchRandom(args) => search::search_random(&args),
        Command::SearchPieces(args) => pieces::search_pieces(&args),
        Command::Assemble(args) => pieces::assemble(&args),
        Command::Backward(args) => family::backward(&args),
        Command::Stats(args) => search::stats(&args),
        Command::Expand(args) => play::expand(&args),
        Command::Mutate(args) => play::mutate(&args),
        Command::Bench(args) => search::bench(&args),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return ExitCode::from(if err.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
