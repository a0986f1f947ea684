//! Backward play.
//!
//! Forward play is deterministic, backward play is not: the cards at the
//! bottom of the last trick winner's pack may be the pile of that trick, or
//! only part of it, and the trick may have been led by either player. A
//! predecessor is recovered by choosing a suffix of the winner's pack as the
//! pile and a leader for that trick, then replaying the forward rules over
//! the suffix to learn who laid each card.

use std::collections::{HashSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::card::{Card, CardSeq};
use crate::state::{GameState, Player};

/// All boundary states one trick before `origin`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PredecessorSet {
    pub origin: GameState,
    pub predecessors: Vec<GameState>,
}

/// Who laid each card of `pile` if `leader` led the trick, or `None` if the
/// forward rules would not produce exactly this pile.
///
/// Returns the cards laid by each player (in order) and the trick winner.
pub fn trick_transcript(pile: &[Card], leader: Player) -> Option<([Vec<Card>; 2], Player)> {
    let mut laid: [Vec<Card>; 2] = [Vec::new(), Vec::new()];
    let mut turn = leader;
    let mut owed = 0u8;
    let mut claimant = leader;
    for (i, &card) in pile.iter().enumerate() {
        laid[turn.index()].push(card);
        if card.is_face() {
            owed = card.penalty();
            claimant = turn;
            turn = turn.other();
        } else if owed > 0 {
            owed -= 1;
            if owed == 0 {
                // The trick is over at this card; the pile must end here too.
                return (i + 1 == pile.len()).then_some((laid, claimant));
            }
        } else {
            turn = turn.other();
        }
    }
    None
}

/// Every state from which one forward trick yields exactly `state`.
pub fn predecessors_of(state: &GameState) -> PredecessorSet {
    let winner = state.leader;
    let loser = winner.other();
    let hand = state.hand(winner);
    let mut predecessors = Vec::new();
    // A pile ends with the number card that completes a penalty, so it holds
    // at least a face card and that number card.
    for pile_len in 2..=hand.len() {
        let split = hand.len() - pile_len;
        let pile = &hand[split..];
        if pile[pile_len - 1].is_face() {
            continue;
        }
        for leader in [Player::One, Player::Two] {
            let Some((laid, trick_winner)) = trick_transcript(pile, leader) else {
                continue;
            };
            if trick_winner != winner {
                continue;
            }
            let mut prev = GameState::new(CardSeq::new(), CardSeq::new(), leader);
            let own: &mut CardSeq = prev.hand_mut(winner);
            own.extend_from_slice(&laid[winner.index()]);
            own.extend_from_slice(&hand[..split]);
            let theirs: &mut CardSeq = prev.hand_mut(loser);
            theirs.extend_from_slice(&laid[loser.index()]);
            theirs.extend_from_slice(state.hand(loser));
            if prev != *state {
                predecessors.push(prev);
            }
        }
    }
    // Different (suffix, leader) choices always give different hands, but
    // keep the no-duplicates guarantee explicit.
    let mut seen = HashSet::new();
    predecessors.retain(|p| seen.insert(p.clone()));
    debug_assert!(predecessors
        .iter()
        .all(|p| { crate::engine::play_trick(p).map(|t| t.next_state == *state).unwrap_or(false) }));
    PredecessorSet { origin: state.clone(), predecessors }
}

/// Where a closure node's next trick leads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", tag = "kind", content = "index")]
pub enum Successor {
    Anchor(usize),
    Node(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct FamilyNode {
    pub state: GameState,
    /// Tricks from this state to the nearest anchor.
    pub depth: u32,
    /// No state plays into this one.
    pub is_source: bool,
    #[serde(skip)]
    pub successor: Successor,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Budget {
    MaxDepth,
    MaxStates,
}

/// Result of [`backward_closure`].
#[derive(Debug, Clone)]
pub struct Closure {
    pub anchors: Vec<GameState>,
    /// Discovered states in breadth-first order, anchors excluded.
    pub nodes: Vec<FamilyNode>,
    /// Which budget, if any, stopped the expansion early.
    pub budget_hit: Option<Budget>,
}

impl Closure {
    pub fn sources(&self) -> impl Iterator<Item = &FamilyNode> {
        self.nodes.iter().filter(|n| n.is_source)
    }

    pub fn find(&self, state: &GameState) -> Option<&FamilyNode> {
        self.nodes.iter().find(|n| n.state == *state)
    }

    /// Family statistics under the counting conventions a "starting deal"
    /// might mean.
    pub fn family_counts(&self) -> FamilyCounts {
        let full = |s: &GameState| s.composition().is_standard();
        let unordered = |it: &mut dyn Iterator<Item = &GameState>| -> usize {
            it.map(|s| {
                let m = s.mirrored();
                if m < *s {
                    m
                } else {
                    s.clone()
                }
            })
            .collect::<HashSet<_>>()
            .len()
        };
        FamilyCounts {
            nodes: self.nodes.len(),
            sources: self.sources().filter(|n| full(&n.state)).count(),
            sources_up_to_mirror: unordered(&mut self.sources().filter(|n| full(&n.state)).map(|n| &n.state)),
            balanced_nodes: self.nodes.iter().filter(|n| n.state.is_balanced()).count(),
            balanced_sources: self.sources().filter(|n| n.state.is_balanced()).count(),
        }
    }
}

/// Number of closure members under each counting convention.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FamilyCounts {
    /// Every state that plays into the anchors.
    pub nodes: usize,
    /// Full-deck states with no predecessor.
    pub sources: usize,
    /// Full-deck sources, identifying a deal with its mirror image.
    pub sources_up_to_mirror: usize,
    /// States with 26 cards in each hand (or equal hands for other decks).
    pub balanced_nodes: usize,
    pub balanced_sources: usize,
}

/// Breadth-first backward expansion from `anchors`.
///
/// States are deduplicated across the whole closure and kept at their
/// smallest depth. Anchors are never reported as nodes. Nodes at `max_depth`
/// are reported but not expanded; once `max_states` nodes exist no more are
/// added.
pub fn backward_closure(anchors: &[GameState], max_depth: u32, max_states: usize) -> Closure {
    let mut visited: HashSet<GameState> = anchors.iter().cloned().collect();
    let mut nodes: Vec<FamilyNode> = Vec::new();
    let mut budget_hit = None;
    // (state to expand, how to point back at it, its depth)
    let mut queue: VecDeque<(GameState, Successor, u32)> =
        anchors.iter().enumerate().map(|(i, a)| (a.clone(), Successor::Anchor(i), 0)).collect();

    while let Some((state, link, depth)) = queue.pop_front() {
        let preds = predecessors_of(&state).predecessors;
        if let Successor::Node(i) = link {
            nodes[i].is_source = preds.is_empty();
        }
        if depth >= max_depth {
            if !preds.iter().all(|p| visited.contains(p)) {
                budget_hit.get_or_insert(Budget::MaxDepth);
            }
            continue;
        }
        for p in preds {
            if visited.contains(&p) {
                continue;
            }
            if nodes.len() >= max_states {
                budget_hit = Some(Budget::MaxStates);
                break;
            }
            visited.insert(p.clone());
            nodes.push(FamilyNode { state: p.clone(), depth: depth + 1, is_source: false, successor: link });
            queue.push_back((p, Successor::Node(nodes.len() - 1), depth + 1));
        }
    }
    Closure { anchors: anchors.to_vec(), nodes, budget_hit }
}

/// Members of `nodes` whose two hands are the same size.
pub fn balanced_members(nodes: &[FamilyNode]) -> Vec<GameState> {
    nodes.iter().filter(|n| n.state.is_balanced()).map(|n| n.state.clone()).collect()
}

/// Graphviz rendering of a closure: one vertex per state, one edge per trick.
pub fn to_dot(closure: &Closure) -> String {
    use std::fmt::Write;
    let mut out = String::from("digraph family {\n  rankdir=LR;\n  node [shape=box, fontname=monospace];\n");
    for (i, a) in closure.anchors.iter().enumerate() {
        let _ = writeln!(out, "  a{i} [label=\"{}\\n{}\\n({})\", style=filled];", a.hand1, a.hand2, a.leader);
    }
    for (i, a) in closure.anchors.iter().enumerate() {
        let next = crate::engine::play_trick(a).ok().map(|t| t.next_state);
        if let Some(j) = next.and_then(|n| closure.anchors.iter().position(|b| *b == n)) {
            let _ = writeln!(out, "  a{i} -> a{j};");
        }
    }
    for (i, n) in closure.nodes.iter().enumerate() {
        let style = if n.state.leader == Player::One { "rounded" } else { "solid" };
        let _ = writeln!(
            out,
            "  n{i} [label=\"{}\\n{}\\n({})\", style={style}];",
            n.state.hand1, n.state.hand2, n.state.leader
        );
        let target = match n.successor {
            Successor::Anchor(j) => format!("a{j}"),
            Successor::Node(j) => format!("n{j}"),
        };
        let _ = writeln!(out, "  n{i} -> {target};");
    }
    out.push_str("}\n");
    out
}
