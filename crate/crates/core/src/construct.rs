//! Building non-terminating games.
//!
//! Three tools live here: expanding a detected loop into a larger game,
//! small edits (insert, remove, swap) over every split of a deck, and the
//! piece machinery. A piece is a jack-free run of cards which, terminated by
//! a jack and dropped into the jack template
//!
//! ```text
//! --J <filter> J <candidate> J-
//! J-
//! ```
//!
//! still gives a non-terminating game. Pieces combine freely: any sequence
//! of pieces, each followed by a jack, in front of `-` against `J-` loops
//! forever.

use std::collections::{HashMap, HashSet, VecDeque};
use std::ops::Range;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::card::{Card, CardSeq, DeckComposition};
use crate::engine::{play_game, play_trick, Detect, Game, PlayOutcome, Verdict};
use crate::state::{GameState, Player};

/// Trick budget for template games; they settle far sooner.
pub const TEMPLATE_BUDGET: u64 = 10_000;

/// The filter piece placed in front of every candidate.
pub const DEFAULT_FILTER: &str = "--K---A----AA";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConstructError {
    #[error("loop trace is empty")]
    EmptyLoop,
    #[error("state {index} of the loop does not play into the next one")]
    BrokenLoop { index: usize },
    #[error("expanded game does not loop: {outcome:?}")]
    ExpansionNotNonTerminating { state: GameState, outcome: Box<PlayOutcome> },
    #[error("assembled deck does not loop: {outcome:?}")]
    AssemblyNotNonTerminating { state: GameState, outcome: Box<PlayOutcome>, trace: Vec<GameState> },
    #[error("piece {0} contains a jack")]
    JackInPiece(CardSeq),
    #[error("no pieces given")]
    NoPieces,
}

/// A jack-free sequence; `certified` once it has passed [`template_test`].
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Piece {
    pub cards: CardSeq,
    pub certified: bool,
}

impl Piece {
    pub fn new(cards: CardSeq) -> Result<Self, ConstructError> {
        if cards.contains(&Card::Jack) {
            return Err(ConstructError::JackInPiece(cards));
        }
        Ok(Piece { cards, certified: false })
    }

    /// Runs the template test and records the verdict.
    pub fn certify(cards: CardSeq, filter: &Piece, budget: u64) -> Result<Self, ConstructError> {
        let mut piece = Piece::new(cards)?;
        piece.certified = template_test(&piece.cards, filter, budget).is_non_terminating();
        Ok(piece)
    }

    pub fn parse(text: &str) -> Result<Self, crate::card::ParseError> {
        let cards = CardSeq::parse(text)?;
        Ok(Piece { cards, certified: false })
    }

    pub fn default_filter() -> Piece {
        Piece { cards: CardSeq::parse(DEFAULT_FILTER).expect("filter literal"), certified: true }
    }
}

/// The boundary states of one trip around a cycle, in play order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoopTrace {
    states: Vec<GameState>,
}

impl LoopTrace {
    /// Checks that each state plays into the next and the last into the first.
    pub fn new(states: Vec<GameState>) -> Result<Self, ConstructError> {
        if states.is_empty() {
            return Err(ConstructError::EmptyLoop);
        }
        for (i, s) in states.iter().enumerate() {
            let next = &states[(i + 1) % states.len()];
            match play_trick(s) {
                Ok(t) if t.ended.is_none() && t.next_state == *next => {}
                _ => return Err(ConstructError::BrokenLoop { index: i }),
            }
        }
        Ok(LoopTrace { states })
    }

    /// The cycle of a looping outcome.
    pub fn from_outcome(outcome: &PlayOutcome) -> Option<Result<Self, ConstructError>> {
        outcome.cycle_states.clone().map(LoopTrace::new)
    }

    pub fn states(&self) -> &[GameState] {
        &self.states
    }
}

fn loops(state: &GameState, budget: u64, detect: Detect) -> bool {
    play_game(state, budget, detect).map(|o| o.is_non_terminating()).unwrap_or(false)
}

/// Concatenates every loop state's first hand into one hand, and likewise
/// the second hands, keeping the first state's leader.
pub fn expand_loop(trace: &LoopTrace) -> Result<GameState, ConstructError> {
    let states = trace.states();
    let hand1 = CardSeq::concat(states.iter().map(|s| &s.hand1));
    let hand2 = CardSeq::concat(states.iter().map(|s| &s.hand2));
    let expanded = GameState::new(hand1, hand2, states[0].leader);
    let outcome = play_game(&expanded, crate::engine::DEFAULT_MAX_TRICKS, Detect::Brent)
        .map_err(|_| ConstructError::EmptyLoop)?;
    if !outcome.is_non_terminating() {
        return Err(ConstructError::ExpansionNotNonTerminating { state: expanded, outcome: Box::new(outcome) });
    }
    Ok(expanded)
}

/// Each hand repeated `times` times, same leader. Doubling `J--`/`-J-`
/// gives `J--J--`/`-J--J-`.
pub fn repeat_deal(state: &GameState, times: usize) -> GameState {
    let rep = |h: &CardSeq| CardSeq(h.iter().copied().cycle().take(h.len() * times).collect());
    GameState::new(rep(&state.hand1), rep(&state.hand2), state.leader)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EditOp {
    Insert,
    Remove,
    Swap,
}

/// Settings for [`mutate`].
#[derive(Debug, Clone)]
pub struct MutateOptions {
    pub ops: Vec<EditOp>,
    /// Edits composed per variant, at most 3.
    pub max_edits: usize,
    pub budget_tricks: u64,
    /// Restrict edits to this window of the combined deck (hand1 then hand2).
    /// The window follows the cards as edits grow or shrink it.
    pub region: Option<Range<usize>>,
}

impl MutateOptions {
    pub fn new(ops: &[EditOp], max_edits: usize) -> Self {
        MutateOptions { ops: ops.to_vec(), max_edits, budget_tricks: TEMPLATE_BUDGET, region: None }
    }
}

fn edits_of(cards: &[Card], region: &Range<usize>, ops: &[EditOp]) -> Vec<(Vec<Card>, Range<usize>)> {
    let mut out = Vec::new();
    for &op in ops {
        match op {
            EditOp::Insert => {
                for at in region.start..=region.end {
                    for card in Card::ALL {
                        let mut next = cards.to_vec();
                        next.insert(at, card);
                        out.push((next, region.start..region.end + 1));
                    }
                }
            }
            EditOp::Remove => {
                for at in region.clone() {
                    let mut next = cards.to_vec();
                    next.remove(at);
                    out.push((next, region.start..region.end - 1));
                }
            }
            EditOp::Swap => {
                for at in region.clone() {
                    for card in Card::ALL {
                        if card != cards[at] {
                            let mut next = cards.to_vec();
                            next[at] = card;
                            out.push((next, region.clone()));
                        }
                    }
                }
            }
        }
    }
    out
}

/// Non-terminating variants of `state` reachable by up to `max_edits`
/// edits, each edited deck tried at every split between the two hands.
///
/// With `max_edits == 0` this is the identity filter: `[state]` if it loops.
pub fn mutate(state: &GameState, options: &MutateOptions) -> Vec<GameState> {
    if options.max_edits == 0 {
        return if loops(state, options.budget_tricks, Detect::Brent) { vec![state.clone()] } else { vec![] };
    }
    let deck: Vec<Card> = state.hand1.iter().chain(state.hand2.iter()).copied().collect();
    let region = options.region.clone().unwrap_or(0..deck.len());
    let mut frontier = vec![(deck.clone(), region)];
    let mut decks: HashSet<Vec<Card>> = HashSet::new();
    for _ in 0..options.max_edits.min(3) {
        let mut next = Vec::new();
        for (cards, region) in &frontier {
            for (edited, r) in edits_of(cards, region, &options.ops) {
                if decks.insert(edited.clone()) {
                    next.push((edited, r));
                }
            }
        }
        frontier = next;
    }
    let mut decks: Vec<Vec<Card>> = decks.into_iter().collect();
    decks.sort();
    let leader = state.leader;
    let budget = options.budget_tricks;
    let mut found: Vec<GameState> = decks
        .par_iter()
        .flat_map_iter(|cards| {
            let mut game = Game::new();
            (1..cards.len())
                .filter_map(|split| {
                    let candidate =
                        GameState::new(CardSeq(cards[..split].to_vec()), CardSeq(cards[split..].to_vec()), leader);
                    matches!(game.run(&candidate, budget, Detect::Brent), Verdict::Looping { .. }).then_some(candidate)
                })
                .collect::<Vec<_>>()
        })
        .collect();
    found.sort();
    found.dedup();
    found
}

/// The template deal for `candidate`: `--J <filter> J <candidate> J-` against `J-`.
pub fn template_state(candidate: &[Card], filter: &Piece) -> GameState {
    let mut hand1 = CardSeq::parse("--J").expect("literal");
    hand1.extend_from_slice(&filter.cards);
    hand1.push(Card::Jack);
    hand1.extend_from_slice(candidate);
    hand1.extend_from_slice(&[Card::Jack, Card::Number]);
    GameState::new(hand1, CardSeq::parse("J-").expect("literal"), Player::One)
}

/// Plays the template game for `candidate` with Brent detection.
pub fn template_test(candidate: &[Card], filter: &Piece, budget: u64) -> PlayOutcome {
    play_game(&template_state(candidate, filter), budget, Detect::Brent).expect("template leader holds cards")
}

/// Template checker that reuses one engine and remembers verdicts.
struct Certifier<'a> {
    filter: &'a Piece,
    budget: u64,
    game: Game,
    memo: HashMap<Vec<Card>, bool>,
}

impl<'a> Certifier<'a> {
    fn new(filter: &'a Piece, budget: u64) -> Self {
        Certifier { filter, budget, game: Game::new(), memo: HashMap::new() }
    }

    fn check(&mut self, cards: &[Card]) -> bool {
        if let Some(&v) = self.memo.get(cards) {
            return v;
        }
        let v = certifies(&mut self.game, cards, self.filter, self.budget);
        self.memo.insert(cards.to_vec(), v);
        v
    }
}

fn certifies(game: &mut Game, cards: &[Card], filter: &Piece, budget: u64) -> bool {
    let state = template_state(cards, filter);
    matches!(game.run(&state, budget, Detect::Brent), Verdict::Looping { .. })
}

/// Neighbours within a swap class: face-for-face swaps (no cost) and
/// number-card insertions or removals (one edit each).
fn class_neighbours(cards: &[Card]) -> Vec<(Vec<Card>, usize)> {
    const FACES: [Card; 3] = [Card::Queen, Card::King, Card::Ace];
    let mut out = Vec::new();
    for (i, &c) in cards.iter().enumerate() {
        if c.is_face() {
            for f in FACES {
                if f != c {
                    let mut next = cards.to_vec();
                    next[i] = f;
                    out.push((next, 0));
                }
            }
        } else {
            let mut next = cards.to_vec();
            next.remove(i);
            out.push((next, 1));
        }
    }
    for i in 0..=cards.len() {
        // Inserting before an existing number card repeats the insertion
        // after it; skip the duplicate.
        if i > 0 && cards[i - 1] == Card::Number {
            continue;
        }
        let mut next = cards.to_vec();
        next.insert(i, Card::Number);
        out.push((next, 1));
    }
    out
}

/// Maximum number-card insertions and removals away from the seed piece.
pub const CLASS_NUMBER_EDITS: usize = 3;

fn swap_class_with(certifier: &mut Certifier<'_>, seed: &[Card]) -> Vec<CardSeq> {
    let mut best: HashMap<Vec<Card>, usize> = HashMap::new();
    let mut queue: VecDeque<(Vec<Card>, usize)> = VecDeque::new();
    best.insert(seed.to_vec(), 0);
    queue.push_back((seed.to_vec(), 0));
    while let Some((cards, used)) = queue.pop_front() {
        if best.get(&cards).is_some_and(|&b| b < used) {
            continue;
        }
        for (next, cost) in class_neighbours(&cards) {
            let used = used + cost;
            if used > CLASS_NUMBER_EDITS || next.is_empty() {
                continue;
            }
            if best.get(&next).is_some_and(|&b| b <= used) {
                continue;
            }
            if !certifier.check(&next) {
                continue;
            }
            best.insert(next.clone(), used);
            if cost == 0 {
                queue.push_front((next, used));
            } else {
                queue.push_back((next, used));
            }
        }
    }
    let mut members: Vec<CardSeq> = best.into_keys().map(CardSeq).collect();
    members.sort_by(shortlex);
    members
}

/// Shorter first, then card order `-` < `J` < `Q` < `K` < `A`.
pub fn shortlex(a: &CardSeq, b: &CardSeq) -> std::cmp::Ordering {
    a.len().cmp(&b.len()).then_with(|| a.0.cmp(&b.0))
}

/// Certified pieces related to `piece` by face swaps (any number, each step
/// certified) and at most [`CLASS_NUMBER_EDITS`] number-card insertions or
/// removals. The result includes `piece` and is sorted shortest first.
pub fn find_swap_class(piece: &Piece, filter: &Piece, budget: u64) -> Vec<Piece> {
    let mut certifier = Certifier::new(filter, budget);
    swap_class_with(&mut certifier, &piece.cards).into_iter().map(|cards| Piece { cards, certified: true }).collect()
}

/// How candidates are generated by [`enumerate_pieces`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EnumerationMode {
    /// Every sequence over `-QKA` of length 1..=max_len, by counting in base
    /// 4 (`-`=0, `Q`=1, `K`=2, `A`=3), capped at 4 of a face and 12 faces.
    Base4,
    /// Every distinct arrangement of a fixed jack-free multiset.
    Multiset(DeckComposition),
}

/// One face-swap class found by [`enumerate_pieces`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PieceClass {
    /// Shortest (then least) certified candidate of the class.
    pub representative: Piece,
    /// Every certified member, including ones outside the enumeration.
    pub members: Vec<CardSeq>,
}

/// Output of [`enumerate_pieces`].
#[derive(Debug, Clone, Default)]
pub struct PieceCatalog {
    /// Every candidate that certified.
    pub certified: Vec<CardSeq>,
    pub classes: Vec<PieceClass>,
    pub candidates_tested: u64,
}

impl PieceCatalog {
    pub fn representatives(&self) -> Vec<Piece> {
        self.classes.iter().map(|c| c.representative.clone()).collect()
    }

    /// The class containing `cards`, if any.
    pub fn class_of(&self, cards: &CardSeq) -> Option<&PieceClass> {
        self.classes.iter().find(|c| c.members.contains(cards))
    }
}

/// Base-4 digit to card.
const DIGITS: [Card; 4] = [Card::Number, Card::Queen, Card::King, Card::Ace];

fn within_caps(cards: &[Card]) -> bool {
    let comp = DeckComposition::of(cards);
    comp.queen_count <= 4 && comp.king_count <= 4 && comp.ace_count <= 4 && comp.face_total() <= 12
}

/// Candidates of the base-4 scan.
///
/// The counter runs over `max_len` digits, most significant first. For each
/// value the full-width sequence is tested, then its leftmost digit is
/// dropped repeatedly while it is a number card, so every sequence of length
/// at most `max_len` comes up exactly once. Loop order: counter outside,
/// digit dropping inside.
pub fn base4_candidates(max_len: usize) -> impl Iterator<Item = Vec<Card>> {
    assert!(max_len <= 40, "base-4 scans are limited to 40 digits");
    let limit: u128 = 1u128 << (2 * max_len);
    (0..limit).flat_map(move |value| {
        let digits: Vec<Card> = (0..max_len).rev().map(|d| DIGITS[((value >> (2 * d)) & 3) as usize]).collect();
        let lead = digits.iter().take_while(|c| !c.is_face()).count();
        // lengths max_len, max_len-1, ..., max_len-lead; skip the empty sequence
        (0..=lead).filter(move |&drop| drop < max_len).map(move |drop| digits[drop..].to_vec())
    })
}

/// Distinct arrangements of a multiset in lexicographic order.
pub fn multiset_permutations(composition: &DeckComposition) -> MultisetPermutations {
    let mut cards = Vec::with_capacity(composition.total());
    for card in Card::ALL {
        cards.extend(std::iter::repeat_n(card, composition.count(card)));
    }
    MultisetPermutations { next: Some(cards) }
}

pub struct MultisetPermutations {
    next: Option<Vec<Card>>,
}

impl Iterator for MultisetPermutations {
    type Item = Vec<Card>;

    fn next(&mut self) -> Option<Vec<Card>> {
        let current = self.next.take()?;
        let mut succ = current.clone();
        // Standard next-permutation: find the rightmost ascent, swap with the
        // rightmost larger element, reverse the tail.
        if let Some(i) = (1..succ.len()).rev().find(|&i| succ[i - 1] < succ[i]) {
            let j = (i..succ.len()).rev().find(|&j| succ[j] > succ[i - 1]).expect("ascent exists");
            succ.swap(i - 1, j);
            succ[i..].reverse();
            self.next = Some(succ);
        }
        Some(current)
    }
}

/// Tests every candidate of `mode` in the jack template and groups the
/// certified ones into face-swap classes.
pub fn enumerate_pieces(max_len: usize, mode: &EnumerationMode, filter: &Piece, budget: u64) -> PieceCatalog {
    let candidates: Vec<Vec<Card>> = match mode {
        EnumerationMode::Base4 => base4_candidates(max_len).filter(|c| within_caps(c)).collect(),
        EnumerationMode::Multiset(comp) => {
            let mut comp = *comp;
            comp.jack_count = 0;
            if comp.total() > max_len {
                Vec::new()
            } else {
                multiset_permutations(&comp).collect()
            }
        }
    };
    let tested = candidates.len() as u64;
    let mut certified: Vec<CardSeq> = candidates
        .into_par_iter()
        .map_init(Game::new, |game, cards| certifies(game, &cards, filter, budget).then_some(CardSeq(cards)))
        .flatten()
        .collect();
    certified.sort_by(shortlex);
    certified.dedup();

    let mut certifier = Certifier::new(filter, budget);
    for c in &certified {
        certifier.memo.insert(c.0.clone(), true);
    }
    let mut covered: HashSet<CardSeq> = HashSet::new();
    let mut classes = Vec::new();
    for cards in &certified {
        if covered.contains(cards) {
            continue;
        }
        let members = swap_class_with(&mut certifier, cards);
        covered.extend(members.iter().cloned());
        classes.push(PieceClass { representative: Piece { cards: cards.clone(), certified: true }, members });
    }
    PieceCatalog { certified, classes, candidates_tested: tested }
}

/// Result of [`assemble_deck`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assembly {
    pub state: GameState,
    pub composition: DeckComposition,
    pub outcome: PlayOutcome,
}

/// `piece₁ J piece₂ J … pieceₖ J -` against `J-`, player 1 to lead.
pub fn assembled_state(pieces: &[Piece]) -> GameState {
    let mut hand1 = CardSeq::new();
    for p in pieces {
        hand1.extend_from_slice(&p.cards);
        hand1.push(Card::Jack);
    }
    hand1.push(Card::Number);
    GameState::new(hand1, CardSeq::parse("J-").expect("literal"), Player::One)
}

/// Assembles `pieces` into a deal and checks that it loops.
pub fn assemble_deck(pieces: &[Piece]) -> Result<Assembly, ConstructError> {
    if pieces.is_empty() {
        return Err(ConstructError::NoPieces);
    }
    if let Some(p) = pieces.iter().find(|p| p.cards.contains(&Card::Jack)) {
        return Err(ConstructError::JackInPiece(p.cards.clone()));
    }
    let state = assembled_state(pieces);
    let outcome = play_game(&state, crate::engine::DEFAULT_MAX_TRICKS, Detect::HashSet).expect("leader holds cards");
    if !outcome.is_non_terminating() {
        let trace = crate::engine::trace(&state, 200);
        return Err(ConstructError::AssemblyNotNonTerminating { state, outcome: Box::new(outcome), trace });
    }
    Ok(Assembly { composition: state.composition(), state, outcome })
}

/// How backward play from a single-piece game treats the lead.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct LeadSwapProfile {
    pub piece: CardSeq,
    /// States found within the probe depth.
    pub states: usize,
    /// Of those, states where player 2 leads.
    pub led_by_two: usize,
}

/// Plays `piece J-` / `J-` backwards up to `depth` tricks and counts how
/// often the lead ends up with player 2.
pub fn lead_swap_profile(piece: &Piece, depth: u32) -> LeadSwapProfile {
    let state = assembled_state(std::slice::from_ref(piece));
    let closure = crate::reverse::backward_closure(&[state], depth, 100_000);
    LeadSwapProfile {
        piece: piece.cards.clone(),
        states: closure.nodes.len(),
        led_by_two: closure.nodes.iter().filter(|n| n.state.leader == Player::Two).count(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::OutcomeKind;

    fn seq(s: &str) -> CardSeq {
        CardSeq::parse(s).unwrap()
    }

    fn filter() -> Piece {
        Piece::default_filter()
    }

    #[test]
    fn template_examples() {
        let f = filter();
        assert!(template_test(&seq("--"), &f, TEMPLATE_BUDGET).is_non_terminating());
        assert!(template_test(&seq("--------K---------Q-Q-K---Q-KKQ"), &f, TEMPLATE_BUDGET).is_non_terminating());
        assert_eq!(template_test(&seq("A"), &f, TEMPLATE_BUDGET).kind, OutcomeKind::Terminated);
        assert_eq!(template_state(&seq("--"), &f), GameState::parse("--J--K---A----AAJ--J- / J- (1)").unwrap());
    }

    #[test]
    fn pieces_reject_jacks() {
        assert!(matches!(Piece::new(seq("-J-")), Err(ConstructError::JackInPiece(_))));
        assert!(Piece::certify(seq("--"), &filter(), TEMPLATE_BUDGET).unwrap().certified);
    }

    #[test]
    fn assembly_examples() {
        let pieces: Vec<Piece> = ["--K---A----AA", "--", "--------K---------Q-Q-K---Q-KAQ"]
            .iter()
            .map(|p| Piece::parse(p).unwrap())
            .collect();
        let a = assemble_deck(&pieces).unwrap();
        assert_eq!(a.state, GameState::parse("--K---A----AAJ--J--------K---------Q-Q-K---Q-KAQJ- / J- (1)").unwrap());
        assert!(a.composition.is_standard());
        let single = assemble_deck(&pieces[..1]).unwrap();
        assert_eq!(single.state.to_line(), "1. --K---A----AAJ- 2. J- (1)");
        assert!(matches!(assemble_deck(&[]), Err(ConstructError::NoPieces)));
        // "A" fails the template, and on its own it does not loop either
        assert!(matches!(
            assemble_deck(&[Piece::parse("A").unwrap()]),
            Err(ConstructError::AssemblyNotNonTerminating { .. })
        ));
    }

    #[test]
    fn doubling_the_six_card_game() {
        let six = GameState::parse("J-- / -J- (1)").unwrap();
        let doubled = repeat_deal(&six, 2);
        assert_eq!(doubled.to_line(), "1. J--J-- 2. -J--J- (1)");
        assert!(play_game(&doubled, 1000, Detect::HashSet).unwrap().is_non_terminating());
    }

    #[test]
    fn loop_traces_are_verified() {
        let six = GameState::parse("J-- / -J- (1)").unwrap();
        let outcome = play_game(&six, 1000, Detect::HashSet).unwrap();
        let trace = LoopTrace::from_outcome(&outcome).unwrap().unwrap();
        assert_eq!(trace.states().len(), 2);
        assert!(matches!(LoopTrace::new(vec![]), Err(ConstructError::EmptyLoop)));
        // a single state can never play into itself
        assert!(matches!(LoopTrace::new(vec![six.clone()]), Err(ConstructError::BrokenLoop { index: 0 })));
        let mut reversed = trace.states().to_vec();
        reversed.push(six);
        assert!(LoopTrace::new(reversed).is_err());
    }

    #[test]
    fn expansion_reports_terminating_concatenations() {
        let six = GameState::parse("J-- / -J- (1)").unwrap();
        let outcome = play_game(&six, 1000, Detect::HashSet).unwrap();
        let trace = LoopTrace::from_outcome(&outcome).unwrap().unwrap();
        match expand_loop(&trace) {
            Err(ConstructError::ExpansionNotNonTerminating { state, outcome }) => {
                assert_eq!(state.to_line(), "1. --J-J- 2. J---J- (1)");
                assert!(outcome.is_terminated());
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn mutate_identity_and_single_swaps() {
        let six = GameState::parse("J-- / -J- (1)").unwrap();
        assert_eq!(mutate(&six, &MutateOptions::new(&[EditOp::Swap], 0)), vec![six.clone()]);
        let dead = GameState::parse("A / - (1)").unwrap();
        assert!(mutate(&dead, &MutateOptions::new(&[EditOp::Swap], 0)).is_empty());

        let found = mutate(&six, &MutateOptions::new(&[EditOp::Swap], 1));
        // oracle: every swapped deck at every split, classified one by one
        let deck: Vec<Card> = six.hand1.iter().chain(six.hand2.iter()).copied().collect();
        let mut expected = Vec::new();
        for i in 0..deck.len() {
            for c in Card::ALL {
                if c == deck[i] {
                    continue;
                }
                let mut d = deck.clone();
                d[i] = c;
                for k in 1..d.len() {
                    let s = GameState::new(CardSeq(d[..k].to_vec()), CardSeq(d[k..].to_vec()), Player::One);
                    if play_game(&s, 10_000, Detect::HashSet).unwrap().is_non_terminating() {
                        expected.push(s);
                    }
                }
            }
        }
        expected.sort();
        expected.dedup();
        assert_eq!(found, expected);
        // no single swap keeps this game looping at any split
        assert!(found.is_empty());
        let two = mutate(&six, &MutateOptions::new(&[EditOp::Swap], 2));
        assert!(two.contains(&GameState::parse("--J- / J- (1)").unwrap()));
        assert!(two.iter().all(|s| s.total_cards() == 6));
    }

    #[test]
    fn mutate_compositions_follow_the_edits() {
        let six = GameState::parse("J-- / -J- (1)").unwrap();
        for s in mutate(&six, &MutateOptions::new(&[EditOp::Insert], 2)) {
            assert_eq!(s.total_cards(), 8);
        }
        for s in mutate(&six, &MutateOptions::new(&[EditOp::Remove], 1)) {
            assert_eq!(s.total_cards(), 5);
        }
    }

    #[test]
    fn base4_scan_covers_every_short_sequence_once() {
        for max_len in 1..=5 {
            let scanned: Vec<Vec<Card>> = base4_candidates(max_len).collect();
            let unique: HashSet<Vec<Card>> = scanned.iter().cloned().collect();
            assert_eq!(unique.len(), scanned.len());
            let expected: usize = (1..=max_len).map(|l| 4usize.pow(l as u32)).sum();
            assert_eq!(scanned.len(), expected);
            assert!(unique.iter().all(|c| !c.contains(&Card::Jack)));
        }
    }

    #[test]
    fn multiset_permutations_are_distinct_and_complete() {
        let comp = DeckComposition::from_counts([3, 0, 2, 1, 0]);
        let perms: Vec<Vec<Card>> = multiset_permutations(&comp).collect();
        // 6! / (3! 2! 1!)
        assert_eq!(perms.len(), 60);
        let unique: HashSet<_> = perms.iter().cloned().collect();
        assert_eq!(unique.len(), 60);
        assert!(perms.windows(2).all(|w| w[0] < w[1]));
        assert!(perms.iter().all(|p| DeckComposition::of(p) == comp));
    }

    #[test]
    fn short_pieces_from_the_base4_scan() {
        let f = filter();
        let two = enumerate_pieces(2, &EnumerationMode::Base4, &f, TEMPLATE_BUDGET);
        assert!(two.certified.contains(&seq("--")));
        let six = enumerate_pieces(6, &EnumerationMode::Base4, &f, TEMPLATE_BUDGET);
        for p in ["--", "--Q-Q", "-----K"] {
            assert!(six.certified.contains(&seq(p)), "{p}");
            assert!(six.class_of(&seq(p)).is_some(), "{p}");
        }
        // a class covers every certified candidate exactly once
        for c in &six.certified {
            assert_eq!(six.classes.iter().filter(|k| k.members.contains(c)).count().min(1), 1);
        }
    }

    #[test]
    fn base4_matches_plain_generation() {
        let f = filter();
        let max_len = 8;
        let catalog = enumerate_pieces(max_len, &EnumerationMode::Base4, &f, TEMPLATE_BUDGET);
        // oracle: lengths outside, lexicographic inside
        let mut plain = Vec::new();
        let mut game = Game::new();
        for len in 1..=max_len {
            for code in 0..4usize.pow(len as u32) {
                let cards: Vec<Card> = (0..len).rev().map(|d| DIGITS[(code >> (2 * d)) & 3]).collect();
                if within_caps(&cards) && certifies(&mut game, &cards, &f, TEMPLATE_BUDGET) {
                    plain.push(CardSeq(cards));
                }
            }
        }
        plain.sort_by(shortlex);
        assert_eq!(catalog.certified, plain);
    }

    #[test]
    fn swap_class_of_the_six_face_piece() {
        let f = filter();
        let piece = Piece::parse("--Q-Q-Q-Q-K-K").unwrap();
        let class: HashSet<CardSeq> =
            find_swap_class(&piece, &f, TEMPLATE_BUDGET).into_iter().map(|p| p.cards).collect();
        let faces = [Card::Queen, Card::King, Card::Ace];
        let slots: Vec<usize> = piece.cards.iter().enumerate().filter(|(_, c)| c.is_face()).map(|(i, _)| i).collect();
        assert_eq!(slots.len(), 6);
        let mut variants = 0;
        for code in 0..3usize.pow(6) {
            let mut v = piece.cards.clone();
            let mut c = code;
            for &i in &slots {
                v[i] = faces[c % 3];
                c /= 3;
            }
            assert!(template_test(&v, &f, TEMPLATE_BUDGET).is_non_terminating(), "{v}");
            assert!(class.contains(&v), "{v}");
            variants += 1;
        }
        assert_eq!(variants, 729);
        assert!(class.contains(&seq("--Q-K-A-KQ-K-")));
    }

    #[test]
    fn swap_class_without_faces_only_varies_number_cards() {
        let class = find_swap_class(&Piece::parse("--").unwrap(), &filter(), TEMPLATE_BUDGET);
        assert!(class.iter().any(|p| p.cards == seq("--")));
        assert!(class.iter().all(|p| p.cards.face_count() == 0));
    }

    #[test]
    fn multiset_mode_finds_the_queen_king_class() {
        let f = filter();
        let comp = DeckComposition::from_counts([7, 0, 4, 2, 0]);
        let catalog = enumerate_pieces(13, &EnumerationMode::Multiset(comp), &f, TEMPLATE_BUDGET);
        assert_eq!(catalog.candidates_tested, 25_740);
        assert!(catalog.certified.contains(&seq("--Q-Q-Q-Q-K-K")));
        let class = catalog.class_of(&seq("--Q-Q-Q-Q-K-K")).unwrap();
        assert!(class.members.contains(&seq("--Q-K-A-KQ-K-")));
    }

    #[test]
    fn lead_swap_profile_counts_states() {
        let p = lead_swap_profile(&Piece::parse("--").unwrap(), 3);
        assert!(p.led_by_two <= p.states);
    }
}
