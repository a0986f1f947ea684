use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::Path;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::Instant;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use serde_json::json;

use bmn::registry::Registry;
use bmn::stochastic::{random_deal, run_batch, run_draws, BatchReport, DealKind, DealPolicy};
use bmn::{play_game, Detect, GameState};

use crate::input::emit;
use crate::{BenchArgs, SearchRandomArgs, StatsArgs, Usage};

/// Draws per step of a random search; the stop flag and the log are checked
/// between steps.
const SEARCH_STEP: u64 = 1 << 20;

/// One line of the record log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LogEntry {
    pub deal: GameState,
    /// `longest` or `nonTerminating`.
    pub kind: String,
    pub tricks: u64,
    pub cards: u64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub lead_in: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub period: Option<u64>,
    pub policy: DealKind,
    pub seed: u64,
    pub index: u64,
    pub timestamp: String,
}

pub fn read_log(path: &Path) -> Result<Vec<LogEntry>> {
    let text = match fs::read_to_string(path) {
        Ok(text) => text,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(e).with_context(|| format!("reading {}", path.display())),
    };
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| Usage(format!("{}:{}: {e}", path.display(), i + 1)).into()))
        .collect()
}

fn append_log(path: &Path, entry: &LogEntry) -> Result<()> {
    let mut file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .with_context(|| format!("opening {}", path.display()))?;
    let line = serde_json::to_string(entry)? + "\n";
    file.write_all(line.as_bytes()).with_context(|| format!("appending to {}", path.display()))?;
    file.sync_data().with_context(|| format!("syncing {}", path.display()))
}

fn policy(kind: DealKind, seed: u64) -> DealPolicy {
    DealPolicy { kind, seed }
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

pub fn search_random(args: &SearchRandomArgs) -> Result<u8> {
    let policy = policy(args.policy.into(), args.seed);
    let logged = read_log(&args.log)?;
    let mut threshold = args.min_tricks.unwrap_or_else(|| {
        let known = Registry::load().longest_record().map_or(0, |r| r.tricks);
        logged.iter().filter(|e| e.kind == "longest").map(|e| e.tricks).fold(known, u64::max)
    });

    let stop = Arc::new(AtomicBool::new(false));
    let flag = Arc::clone(&stop);
    // Only one handler may exist per process; a second search in the same
    // process keeps the first.
    let _ = ctrlc::set_handler(move || flag.store(true, Ordering::SeqCst));

    let workers = args.workers.count();
    let end = args.start.saturating_add(args.games);
    let mut next = args.start;
    let mut appended = 0usize;
    let mut longest: Option<(u64, u64, u64)> = None;
    let mut looping = 0u64;
    while next < end && !stop.load(Ordering::SeqCst) {
        let step_end = end.min(next.saturating_add(SEARCH_STEP));
        let summary = run_draws(&policy, next..step_end, args.max_tricks, workers);
        for &index in &summary.looping {
            let deal = random_deal(&policy, index);
            let outcome = play_game(&deal, args.max_tricks, Detect::HashSet)?;
            append_log(
                &args.log,
                &LogEntry {
                    deal,
                    kind: "nonTerminating".into(),
                    tricks: outcome.tricks,
                    cards: outcome.cards_played,
                    lead_in: outcome.lead_in,
                    period: outcome.period,
                    policy: policy.kind,
                    seed: policy.seed,
                    index,
                    timestamp: now(),
                },
            )?;
            appended += 1;
        }
        looping += summary.non_terminating;
        if let Some(best) = summary.record {
            if longest.is_none_or(|(t, c, _)| (best.tricks, best.cards) > (t, c)) {
                longest = Some((best.tricks, best.cards, best.index));
            }
            if best.tricks > threshold {
                append_log(
                    &args.log,
                    &LogEntry {
                        deal: random_deal(&policy, best.index),
                        kind: "longest".into(),
                        tricks: best.tricks,
                        cards: best.cards,
                        lead_in: None,
                        period: None,
                        policy: policy.kind,
                        seed: policy.seed,
                        index: best.index,
                        timestamp: now(),
                    },
                )?;
                threshold = best.tricks;
                appended += 1;
            }
        }
        next = step_end;
    }
    let report = json!({
        "policy": policy,
        "start": args.start,
        "nextIndex": next,
        "games": next - args.start,
        "interrupted": next < end,
        "longest": longest.map(|(tricks, cards, index)| json!({ "tricks": tricks, "cards": cards, "index": index })),
        "nonTerminating": looping,
        "logged": appended,
        "threshold": threshold,
    });
    println!("{report}");
    Ok(0)
}

pub fn stats(args: &StatsArgs) -> Result<u8> {
    if args.games == 0 {
        return Err(Usage("--games must be positive".into()).into());
    }
    let policy = policy(args.policy.into(), args.seed);
    let summary = run_batch(&policy, args.games, args.max_tricks, args.workers.count());
    if let Some(csv) = &args.csv {
        emit(Some(csv), &summary.to_csv())?;
    }
    let report = BatchReport::new(&summary, args.tail_start);
    emit(args.out.as_deref(), &(serde_json::to_string_pretty(&report)? + "\n"))?;
    Ok(0)
}

pub fn bench(args: &BenchArgs) -> Result<u8> {
    if args.games == 0 || args.workers == 0 {
        return Err(Usage("--games and --workers must be positive".into()).into());
    }
    let policy = policy(args.policy.into(), args.seed);
    let start = Instant::now();
    let summary = run_batch(&policy, args.games, bmn::engine::DEFAULT_MAX_TRICKS, args.workers);
    let seconds = start.elapsed().as_secs_f64();
    let per_hour = summary.games as f64 / seconds * 3600.0;
    let report = json!({
        "games": summary.games,
        "workers": args.workers,
        "seconds": seconds,
        "gamesPerHour": per_hour,
        "gamesPerHourPerCore": per_hour / args.workers as f64,
        "meanTricks": summary.mean_tricks(),
    });
    println!("{report}");
    Ok(0)
}
