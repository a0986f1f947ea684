use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const BALANCED: &str = "---K---Q-KQAJ-----AAJ--J-- / ----------Q----KQ-J-----KA (1)";
const MANASSE: &str = "Q--J----K--K-J---Q---A---A / ---K-K--JA-QA--J-----Q---- (1)";

fn bmn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bmn")).args(args).env_remove("BMN_THREADS").output().expect("bmn runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

fn last_json(out: &Output) -> Value {
    serde_json::from_str(stdout(out).lines().last().expect("output")).unwrap()
}

#[test]
fn simulate_reports_the_balanced_loop() {
    let out = bmn(&["simulate", BALANCED]);
    assert_eq!(code(&out), 2);
    let v = last_json(&out);
    assert_eq!(v["kind"], "nonTerminating");
    assert_eq!(v["leadIn"], 4);
    assert_eq!(v["period"], 62);
}

#[test]
fn simulate_replays_a_record_with_the_canonical_tally() {
    let out = bmn(&["simulate", "--detect", "none", MANASSE]);
    assert_eq!(code(&out), 0);
    let v = last_json(&out);
    assert_eq!(v["kind"], "terminated");
    // the published 713 counts the winner's lead into an empty hand
    assert_eq!((v["tricks"].as_u64(), v["cardsPlayed"].as_u64()), (Some(712), Some(5104)));
}

#[test]
fn simulate_rejects_bad_deals_with_usage_status() {
    let empty = bmn(&["simulate", " / "]);
    assert_eq!(code(&empty), 64);
    let bad = bmn(&["simulate", "J-x / -J-"]);
    assert_eq!(code(&bad), 64);
    assert!(stderr(&bad).contains("position 2"), "{}", stderr(&bad));
    assert_eq!(code(&bmn(&["simulate", "--detect", "floyd", "J-- / -J-"])), 64);
}

#[test]
fn simulate_cut_off_and_trace() {
    let cut = bmn(&["simulate", "--detect", "none", "--max-tricks", "10", "J-- / -J-"]);
    assert_eq!(code(&cut), 3);
    assert_eq!(last_json(&cut)["kind"], "cutOff");

    let traced = bmn(&["simulate", "--trace", "J-- / -J-"]);
    assert_eq!(code(&traced), 2);
    let lines: Vec<String> = stdout(&traced).lines().map(String::from).collect();
    assert_eq!(&lines[..4], ["1. J-- 2. -J- (1)", "1. --J- 2. J- (1)", "1. J- 2. --J- (2)", "1. --J- 2. J- (1)"]);
}

#[test]
fn simulate_reads_a_deal_from_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("deal.txt");
    fs::write(&path, "1. J-- 2. -J- (1)\n").unwrap();
    assert_eq!(code(&bmn(&["simulate", "--file", path.to_str().unwrap()])), 2);
    assert_eq!(code(&bmn(&["simulate", "--file", dir.path().join("missing").to_str().unwrap()])), 74);
}

fn count_checks(out: &Output) -> (usize, usize) {
    let text = stdout(out);
    let pass = text.lines().filter(|l| l.starts_with("pass ")).count();
    let fail = text.lines().filter(|l| l.starts_with("FAIL ")).count();
    (pass, fail)
}

#[test]
fn verify_filters_by_group() {
    let records = bmn(&["verify", "--only", "records"]);
    let (pass, fail) = count_checks(&records);
    assert_eq!(pass + fail, 15);
    let rest = bmn(&["verify", "--only", "pieces,constructions,cycle,family"]);
    assert_eq!(count_checks(&rest), (26 + 16 + 62 + 1, 0));
    assert_eq!(code(&rest), 0);
}

#[test]
fn full_verify_reports_every_item_and_fails_on_any_mismatch() {
    let out = bmn(&["verify"]);
    let (pass, fail) = count_checks(&out);
    // 13 published predecessors plus the exact-set check
    assert_eq!(pass + fail, 15 + 26 + 16 + 62 + 14 + 1);
    assert_eq!(code(&out), if fail == 0 { 0 } else { 1 });
    assert!(stderr(&out).contains("first failure"));
    let again = bmn(&["verify"]);
    assert_eq!(stdout(&again), stdout(&out));
}

#[test]
fn search_pieces_writes_and_extends_a_store() {
    let dir = tempfile::tempdir().unwrap();
    let store = dir.path().join("pieces.txt");
    let store_arg = store.to_str().unwrap();
    let out = bmn(&["search-pieces", "--max-len", "6", "--out", store_arg]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = fs::read_to_string(&store).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("# filter=--K---A----AA budget=10000"));
    let pieces: Vec<&str> = lines.collect();
    for p in ["--", "--Q-Q", "-----K"] {
        assert!(pieces.contains(&p), "{p} missing from {pieces:?}");
    }

    // a second, shorter search adds nothing new
    let again = bmn(&["search-pieces", "--max-len", "4", "--out", store_arg]);
    assert_eq!(code(&again), 0);
    assert_eq!(fs::read_to_string(&store).unwrap(), text);
    assert_eq!(last_json(&again)["added"].as_array().map(Vec::len), Some(0));

    let clash = bmn(&["search-pieces", "--max-len", "2", "--filter-piece", "--", "--out", store_arg]);
    assert_eq!(code(&clash), 64);

    let assembled = bmn(&["assemble", "--store", store_arg]);
    assert_eq!(code(&assembled), 0, "{}", stderr(&assembled));
    assert_eq!(last_json(&assembled)["outcome"]["kind"], "nonTerminating");
}

#[test]
fn assemble_reports_composition() {
    let out = bmn(&["assemble", "--K---A----AA", "--", "--------K---------Q-Q-K---Q-KAQ"]);
    assert_eq!(code(&out), 0);
    let v = last_json(&out);
    assert_eq!(v["state"]["hand1"], "--K---A----AAJ--J--------K---------Q-Q-K---Q-KAQJ-");
    assert_eq!(v["state"]["hand2"], "J-");
    assert_eq!(v["standard"], true);
    assert_eq!(code(&bmn(&["assemble", "-J-"])), 64);
    assert_eq!(code(&bmn(&["assemble", "A"])), 1);
}

#[test]
fn backward_finds_the_balanced_deal() {
    let dir = tempfile::tempdir().unwrap();
    let anchors = dir.path().join("cycle.txt");
    let cycle: String = bmn::registry::CYCLE.to_string();
    fs::write(&anchors, cycle).unwrap();
    let out = bmn(&["backward", "--anchors", anchors.to_str().unwrap(), "--report-balanced"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let nodes: Vec<Value> = stdout(&out).lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(nodes.len(), 30);
    let deal = bmn::GameState::parse(BALANCED).unwrap();
    let found = nodes.iter().find(|n| n["state"] == serde_json::to_value(&deal).unwrap()).expect("balanced deal");
    assert_eq!(found["depth"], 4);
    assert_eq!(found["isSource"], true);

    let dot = bmn(&["backward", "--max-depth", "1", "--format", "dot"]);
    assert_eq!(code(&dot), 0);
    assert!(stdout(&dot).starts_with("digraph"));
}

#[test]
fn stats_writes_histogram_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("lengths.csv");
    let summary = dir.path().join("summary.json");
    let args = ["stats", "--games", "50000", "--seed", "3", "--tail-start", "60", "--csv"];
    let out = bmn(&[&args[..], &[csv.to_str().unwrap(), "--out", summary.to_str().unwrap()]].concat());
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let table = fs::read_to_string(&csv).unwrap();
    assert_eq!(table.lines().next(), Some("length,trickCount,cardCount"));
    let counted: u64 = table.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse::<u64>().unwrap()).sum();
    let v: Value = serde_json::from_str(&fs::read_to_string(&summary).unwrap()).unwrap();
    assert_eq!(v["games"], 50_000);
    assert_eq!(counted, 50_000);
    let half_life = v["fit"]["halfLife"].as_f64().unwrap();
    assert!((10.0..30.0).contains(&half_life), "{half_life}");
    assert!(v["recordDeal"].as_str().unwrap().starts_with("1. "));
}

#[test]
fn worker_count_does_not_change_results() {
    let one = bmn(&["stats", "--games", "20000", "--workers", "1"]);
    let many = Command::new(env!("CARGO_BIN_EXE_bmn"))
        .args(["stats", "--games", "20000"])
        .env("BMN_THREADS", "3")
        .output()
        .unwrap();
    assert_eq!(code(&many), 0);
    assert_eq!(stdout(&one), stdout(&many));
}

fn replay(entry: &Value) {
    let deal: bmn::GameState = serde_json::from_value(entry["deal"].clone()).unwrap();
    let out = bmn(&["simulate", "--detect", "hashset", &deal.to_line()]);
    let v = last_json(&out);
    assert_eq!(v["tricks"], entry["tricks"]);
    assert_eq!(v["cardsPlayed"], entry["cards"]);
}

#[test]
fn search_random_appends_replayable_records() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("records.jsonl");
    let log_arg = log.to_str().unwrap();
    let out = bmn(&["search-random", "--games", "20000", "--seed", "9", "--min-tricks", "150", "--log", log_arg]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let summary = last_json(&out);
    assert_eq!(summary["games"], 20_000);
    let entries: Vec<Value> =
        fs::read_to_string(&log).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(entries.len() as u64, summary["logged"].as_u64().unwrap());
    assert!(!entries.is_empty());
    for entry in &entries {
        assert_eq!(entry["seed"], 9);
        assert!(entry["timestamp"].as_str().unwrap().ends_with('Z'));
        replay(entry);
    }

    // without --min-tricks the bar is the longest known record, which random
    // play at this scale never reaches
    let before = fs::read_to_string(&log).unwrap();
    let resumed = bmn(&["search-random", "--games", "5000", "--start", "20000", "--seed", "9", "--log", log_arg]);
    assert_eq!(code(&resumed), 0);
    assert_eq!(last_json(&resumed)["threshold"], 1164);
    assert_eq!(fs::read_to_string(&log).unwrap(), before);
}

#[cfg(unix)]
#[test]
fn interrupted_search_keeps_its_log() {
    use std::process::Stdio;
    use std::time::Duration;

    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("records.jsonl");
    let child = Command::new(env!("CARGO_BIN_EXE_bmn"))
        .args(["search-random", "--games", "1000000000", "--min-tricks", "100", "--workers", "2"])
        .args(["--log", log.to_str().unwrap()])
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    std::thread::sleep(Duration::from_millis(1500));
    let status = Command::new("kill").args(["-INT", &child.id().to_string()]).status().unwrap();
    assert!(status.success());
    let out = child.wait_with_output().unwrap();
    assert_eq!(code(&out), 0);
    let summary = last_json(&out);
    assert_eq!(summary["interrupted"], true);
    let text = fs::read_to_string(&log).unwrap_or_default();
    for line in text.lines() {
        let _: Value = serde_json::from_str(line).unwrap();
    }
    assert_eq!(text.lines().count() as u64, summary["logged"].as_u64().unwrap());
}

#[test]
fn expand_joins_loop_states_or_repeats_the_deal() {
    let joined = bmn(&["expand", "J-- / -J- (1)"]);
    assert_eq!(code(&joined), 1);
    assert_eq!(last_json(&joined)["state"]["hand1"], "--J-J-");
    let doubled = bmn(&["expand", "--repeat", "2", "J-- / -J- (1)"]);
    assert_eq!(code(&doubled), 0);
    let v = last_json(&doubled);
    assert_eq!((v["state"]["hand1"].as_str(), v["state"]["hand2"].as_str()), (Some("J--J--"), Some("-J--J-")));
    assert_eq!(v["nonTerminating"], true);
    assert_eq!(code(&bmn(&["expand", "A / - (1)"])), 64);
}

#[test]
fn mutate_lists_looping_variants() {
    let out = bmn(&["mutate", "--ops", "swap", "--max-edits", "2", "J-- / -J- (1)"]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).lines().any(|l| l == "1. --J- 2. J- (1)"), "{}", stdout(&out));
    assert_eq!(code(&bmn(&["mutate", "--max-edits", "4", "J-- / -J-"])), 64);
    assert_eq!(code(&bmn(&["mutate", "--region", "2..9", "J-- / -J-"])), 64);
}

#[test]
fn bench_reports_games_per_hour() {
    let out = bmn(&["bench", "--games", "20000"]);
    assert_eq!(code(&out), 0);
    let v = last_json(&out);
    assert_eq!(v["games"], 20_000);
    assert!(v["gamesPerHourPerCore"].as_f64().unwrap() > 0.0);
}

#[test]
fn unwritable_output_is_an_io_error() {
    let out = bmn(&["stats", "--games", "100", "--out", "/nonexistent-dir/summary.json"]);
    assert_eq!(code(&out), 74);
    assert!(!Path::new("/nonexistent-dir").exists());
}
