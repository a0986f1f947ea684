//! Published deals and verification against them.
//!
//! The data files under `data/` are compiled in verbatim. [`verify`] replays
//! every entry and reports one [`Check`] per item.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::card::{CardSeq, ParseError};
use crate::construct::{template_test, Piece, TEMPLATE_BUDGET};
use crate::engine::{play_game, play_trick, Detect, Ending, OutcomeKind, PlayOutcome, DEFAULT_MAX_TRICKS};
use crate::reverse::{backward_closure, predecessors_of, FamilyCounts};
use crate::state::GameState;

pub const RECORDS: &str = include_str!("../data/records.txt");
pub const PIECES: &str = include_str!("../data/pieces.txt");
pub const CONSTRUCTIONS: &str = include_str!("../data/constructions.txt");
pub const CYCLE: &str = include_str!("../data/cycle.txt");
pub const PREDECESSORS: &str = include_str!("../data/predecessors.txt");
pub const DEALS: &str = include_str!("../data/deals.txt");

/// Depth at which the balanced deal joins the cycle's family.
pub const BALANCED_DEAL_DEPTH: u32 = 4;

/// A published longest terminating game.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RecordEntry {
    pub holder: String,
    pub date: String,
    pub tricks: u64,
    pub cards: u64,
    pub deal: GameState,
}

#[derive(Debug, Clone)]
pub struct Registry {
    pub records: Vec<RecordEntry>,
    pub pieces: Vec<CardSeq>,
    pub constructions: Vec<GameState>,
    pub cycle: Vec<GameState>,
    pub predecessor_origin: GameState,
    pub predecessors: Vec<GameState>,
    pub balanced_deal: GameState,
    /// 55 cards (39 number cards), loops, never balanced.
    pub extended_deck: GameState,
    /// Standard deck, loops, with no balanced state in its family.
    pub unbalanced_standard: GameState,
    pub six_card_game: GameState,
}

fn content_lines(text: &str) -> impl Iterator<Item = &str> {
    text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'))
}

fn parse_states(text: &str) -> Result<Vec<GameState>, ParseError> {
    content_lines(text).map(GameState::parse).collect()
}

impl Registry {
    /// Parses the embedded data. Panics only if the data files are corrupt,
    /// which the test suite rules out.
    pub fn load() -> Registry {
        Registry::parse().expect("embedded registry data parses")
    }

    fn parse() -> Result<Registry, ParseError> {
        let records = content_lines(RECORDS)
            .map(|line| {
                let f: Vec<&str> = line.split('|').map(str::trim).collect();
                let bad = || ParseError::MalformedState(line.to_string());
                if f.len() != 5 {
                    return Err(bad());
                }
                Ok(RecordEntry {
                    holder: f[0].to_string(),
                    date: f[1].to_string(),
                    tricks: f[2].parse().map_err(|_| bad())?,
                    cards: f[3].parse().map_err(|_| bad())?,
                    deal: GameState::parse(f[4])?,
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        let pieces = content_lines(PIECES).map(CardSeq::from_str).collect::<Result<Vec<_>, _>>()?;
        let mut preds = parse_states(PREDECESSORS)?;
        let origin = preds.remove(0);
        let deal = |name: &str| -> Result<GameState, ParseError> {
            let line = content_lines(DEALS)
                .find_map(|l| l.split_once('|').filter(|(n, _)| n.trim() == name).map(|(_, s)| s))
                .ok_or_else(|| ParseError::MalformedState(format!("missing deal {name}")))?;
            GameState::parse(line)
        };
        Ok(Registry {
            records,
            pieces,
            constructions: parse_states(CONSTRUCTIONS)?,
            cycle: parse_states(CYCLE)?,
            predecessor_origin: origin,
            predecessors: preds,
            balanced_deal: deal("balanced")?,
            extended_deck: deal("extended55")?,
            unbalanced_standard: deal("standard52")?,
            six_card_game: deal("six")?,
        })
    }

    /// The longest published game, in tricks.
    pub fn longest_record(&self) -> Option<&RecordEntry> {
        self.records.iter().max_by_key(|r| (r.tricks, r.cards))
    }
}

/// Groups of registry checks, selectable with `verify --only`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Group {
    Records,
    Pieces,
    Constructions,
    Cycle,
    Predecessors,
    Family,
}

impl Group {
    pub const ALL: [Group; 6] =
        [Group::Records, Group::Pieces, Group::Constructions, Group::Cycle, Group::Predecessors, Group::Family];

    pub fn name(self) -> &'static str {
        match self {
            Group::Records => "records",
            Group::Pieces => "pieces",
            Group::Constructions => "constructions",
            Group::Cycle => "cycle",
            Group::Predecessors => "predecessors",
            Group::Family => "family",
        }
    }
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Group {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Group::ALL.into_iter().find(|g| g.name() == s).ok_or_else(|| format!("unknown group {s:?}"))
    }
}

/// Outcome of one registry item.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Check {
    pub group: Group,
    pub item: String,
    pub passed: bool,
    pub expected: String,
    pub actual: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.passed { "pass" } else { "FAIL" };
        write!(f, "{verdict} {:<13} {}", self.group.name(), self.item)?;
        if !self.passed {
            write!(f, ": expected {}, got {}", self.expected, self.actual)?;
        }
        if let Some(note) = &self.note {
            write!(f, " ({note})")?;
        }
        Ok(())
    }
}

/// Explains a record mismatch that is off by exactly one card or trick.
///
/// Some published counts include the card a player failed to draw from an
/// empty hand, and one counts the winner's lead into an empty opponent as a
/// further trick. Neither is a difference in play.
pub fn record_discrepancy(outcome: &PlayOutcome, tricks: u64, cards: u64) -> Option<&'static str> {
    match outcome.ending? {
        Ending::Exhausted if outcome.tricks == tricks && outcome.cards_played + 1 == cards => {
            Some("published count includes the card not drawn from the empty hand")
        }
        Ending::AllCardsTaken if outcome.tricks + 1 == tricks && outcome.cards_played == cards => {
            Some("published count includes a trick for the winner's lead into an empty hand")
        }
        _ => None,
    }
}

/// Replays one record with the canonical tally.
pub fn check_record(record: &RecordEntry) -> Check {
    let outcome = play_game(&record.deal, DEFAULT_MAX_TRICKS, Detect::None).expect("record deals are non-empty");
    let passed = outcome.kind == OutcomeKind::Terminated
        && outcome.tricks == record.tricks
        && outcome.cards_played == record.cards;
    Check {
        group: Group::Records,
        item: format!("{} ({})", record.holder, record.date),
        passed,
        expected: format!("{}/{}", record.tricks, record.cards),
        actual: format!("{}/{}", outcome.tricks, outcome.cards_played),
        note: if passed { None } else { record_discrepancy(&outcome, record.tricks, record.cards).map(String::from) },
    }
}

fn outcome_text(o: &PlayOutcome) -> String {
    match o.kind {
        OutcomeKind::NonTerminating => {
            format!("non-terminating (lead-in {}, period {})", o.lead_in.unwrap_or(0), o.period.unwrap_or(0))
        }
        OutcomeKind::Terminated => format!("terminated after {} tricks", o.tricks),
        OutcomeKind::CutOff => format!("cut off after {} tricks", o.tricks),
    }
}

fn loop_check(group: Group, item: String, state: &GameState) -> Check {
    let outcome = play_game(state, DEFAULT_MAX_TRICKS, Detect::HashSet).expect("leader holds cards");
    Check {
        group,
        item,
        passed: outcome.is_non_terminating(),
        expected: "non-terminating".into(),
        actual: outcome_text(&outcome),
        note: None,
    }
}

/// The A---J window of the extended deck with its three number cards removed.
pub fn trimmed_extended_deck(extended: &GameState) -> Option<GameState> {
    let text = extended.hand1.to_string();
    let at = text.find("A---J")?;
    let trimmed = format!("{}A{}", &text[..at], &text[at + 4..]);
    Some(GameState::new(CardSeq::parse(&trimmed).ok()?, extended.hand2.clone(), extended.leader))
}

/// Result of comparing computed predecessors with the published list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PredecessorComparison {
    pub computed: Vec<GameState>,
    pub missing: Vec<GameState>,
    /// Computed states absent from the published list.
    pub extra: Vec<GameState>,
    /// Every extra state plays into the origin in one trick.
    pub extras_replay: bool,
}

pub fn compare_predecessors(reg: &Registry) -> PredecessorComparison {
    let computed = predecessors_of(&reg.predecessor_origin).predecessors;
    let missing: Vec<GameState> = reg.predecessors.iter().filter(|p| !computed.contains(p)).cloned().collect();
    let extra: Vec<GameState> = computed.iter().filter(|p| !reg.predecessors.contains(p)).cloned().collect();
    let extras_replay =
        extra.iter().all(|p| play_trick(p).map(|t| t.next_state == reg.predecessor_origin).unwrap_or(false));
    PredecessorComparison { computed, missing, extra, extras_replay }
}

/// Family of the cycle as found by backward play.
#[derive(Debug, Clone)]
pub struct FamilyReport {
    pub counts: FamilyCounts,
    pub balanced_deal_depth: Option<u32>,
    pub exhausted: bool,
}

pub fn family_report(reg: &Registry) -> FamilyReport {
    let closure = backward_closure(&reg.cycle, 1_000, 1_000_000);
    FamilyReport {
        counts: closure.family_counts(),
        balanced_deal_depth: closure.find(&reg.balanced_deal).map(|n| n.depth),
        exhausted: closure.budget_hit.is_none(),
    }
}

/// Runs every check in `groups`.
pub fn verify(reg: &Registry, groups: &[Group]) -> Vec<Check> {
    let mut checks = Vec::new();
    for &group in groups {
        match group {
            Group::Records => checks.extend(reg.records.iter().map(check_record)),
            Group::Pieces => {
                let filter = Piece::default_filter();
                for piece in &reg.pieces {
                    let outcome = template_test(piece, &filter, TEMPLATE_BUDGET);
                    checks.push(Check {
                        group,
                        item: piece.to_string(),
                        passed: outcome.is_non_terminating(),
                        expected: "non-terminating".into(),
                        actual: outcome_text(&outcome),
                        note: None,
                    });
                }
            }
            Group::Constructions => {
                for deal in &reg.constructions {
                    let mut check = loop_check(group, format!("{} / {}", deal.hand1, deal.hand2), deal);
                    if check.passed && !deal.composition().is_standard() {
                        check.passed = false;
                        check.actual = format!("composition {}", deal.composition());
                    }
                    checks.push(check);
                }
            }
            Group::Cycle => {
                let n = reg.cycle.len();
                for (i, state) in reg.cycle.iter().enumerate() {
                    let next = &reg.cycle[(i + 1) % n];
                    let got = play_trick(state).map(|t| t.next_state.to_line()).unwrap_or_else(|e| e.to_string());
                    checks.push(Check {
                        group,
                        item: format!("state {} -> {}", i + 1, (i + 1) % n + 1),
                        passed: got == next.to_line(),
                        expected: next.to_line(),
                        actual: got,
                        note: None,
                    });
                }
            }
            Group::Predecessors => {
                let cmp = compare_predecessors(reg);
                for (i, p) in reg.predecessors.iter().enumerate() {
                    let found = cmp.computed.contains(p);
                    checks.push(Check {
                        group,
                        item: format!("published predecessor {}", i + 1),
                        passed: found,
                        expected: p.to_line(),
                        actual: if found { p.to_line() } else { "not generated".into() },
                        note: None,
                    });
                }
                let note = (!cmp.extra.is_empty()).then(|| {
                    let replay = if cmp.extras_replay { "each replays to the origin" } else { "NOT all replay" };
                    let list: Vec<String> = cmp.extra.iter().map(|s| s.to_line()).collect();
                    format!("unlisted predecessors, {replay}: {}", list.join("; "))
                });
                checks.push(Check {
                    group,
                    item: "no predecessors beyond the published list".into(),
                    passed: cmp.missing.is_empty() && cmp.extra.is_empty(),
                    expected: format!("{} states", reg.predecessors.len()),
                    actual: format!("{} states", cmp.computed.len()),
                    note,
                });
            }
            Group::Family => {
                let report = family_report(reg);
                let c = report.counts;
                checks.push(Check {
                    group,
                    item: "balanced deal in the cycle's family".into(),
                    passed: report.balanced_deal_depth == Some(BALANCED_DEAL_DEPTH),
                    expected: format!("depth {BALANCED_DEAL_DEPTH}"),
                    actual: match report.balanced_deal_depth {
                        Some(d) => format!("depth {d}"),
                        None => "not found".into(),
                    },
                    note: Some(format!(
                        "family: {} states, {} full-deck sources, {} up to mirror, {} balanced states, {} balanced sources",
                        c.nodes, c.sources, c.sources_up_to_mirror, c.balanced_nodes, c.balanced_sources
                    )),
                });
            }
        }
    }
    checks
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn item_counts() {
        let reg = Registry::load();
        assert_eq!(reg.records.len(), 15);
        assert_eq!(reg.pieces.len(), 26);
        assert_eq!(reg.constructions.len(), 16);
        assert_eq!(reg.cycle.len(), 62);
        assert_eq!(reg.predecessors.len(), 13);
    }

    #[test]
    fn wu_is_nessler_b_with_hands_exchanged() {
        let reg = Registry::load();
        let nb = reg.records.iter().find(|r| r.date == "04-05-2012").unwrap();
        let wu = reg.records.iter().find(|r| r.holder == "Nicolas Wu" && r.date == "17-05-2012").unwrap();
        assert_eq!(nb.deal.hand1, wu.deal.hand2);
        // the other hand moves its bottom card to the top
        let mut rotated = nb.deal.hand2.clone();
        rotated.rotate_right(1);
        assert_eq!(rotated, wu.deal.hand1);
    }

    #[test]
    fn every_deal_uses_a_standard_deck_where_expected() {
        let reg = Registry::load();
        for r in &reg.records {
            assert!(r.deal.composition().is_standard(), "{}", r.holder);
            assert!(r.deal.is_balanced());
        }
        for s in reg.constructions.iter().chain(&reg.cycle) {
            assert!(s.composition().is_standard());
        }
        assert_eq!(reg.extended_deck.total_cards(), 55);
        assert_eq!(reg.extended_deck.composition().number_count, 39);
        let trimmed = trimmed_extended_deck(&reg.extended_deck).unwrap();
        assert!(trimmed.composition().is_standard());
    }

    #[test]
    fn group_names_round_trip() {
        for g in Group::ALL {
            assert_eq!(g.name().parse::<Group>().unwrap(), g);
        }
        assert!("bogus".parse::<Group>().is_err());
    }
}
