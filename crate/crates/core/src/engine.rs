//! Forward play: single tricks, whole games and loop detection.
//!
//! Loop detection works at trick boundaries only. The state space there is
//! finite for a fixed deck, so a game that never ends must revisit a
//! boundary state.

use std::collections::HashMap;
use std::hash::Hash;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::card::{Card, CardSeq};
use crate::state::{GameState, Player, StateKey};

/// Trick budget used when a caller has no better bound.
pub const DEFAULT_MAX_TRICKS: u64 = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error("player {0} must lead but holds no cards")]
    EmptyLeaderHand(Player),
}

/// Fixed-capacity ring buffer holding one player's pack.
#[derive(Clone)]
struct Pack {
    buf: Box<[Card]>,
    mask: usize,
    head: usize,
    len: usize,
}

impl Pack {
    fn with_capacity(capacity: usize) -> Self {
        let cap = capacity.max(1).next_power_of_two();
        Self { buf: vec![Card::Number; cap].into_boxed_slice(), mask: cap - 1, head: 0, len: 0 }
    }

    fn load(&mut self, cards: &[Card]) {
        self.head = 0;
        self.len = cards.len();
        self.buf[..cards.len()].copy_from_slice(cards);
    }

    #[inline(always)]
    fn pop_front(&mut self) -> Option<Card> {
        if self.len == 0 {
            return None;
        }
        let card = self.buf[self.head];
        self.head = (self.head + 1) & self.mask;
        self.len -= 1;
        Some(card)
    }

    #[inline(always)]
    fn extend(&mut self, cards: &[Card]) {
        let cap = self.buf.len();
        let tail = (self.head + self.len) & self.mask;
        let first = cards.len().min(cap - tail);
        self.buf[tail..tail + first].copy_from_slice(&cards[..first]);
        self.buf[..cards.len() - first].copy_from_slice(&cards[first..]);
        self.len += cards.len();
    }

    /// The contents as (at most) two contiguous slices, top first.
    #[inline(always)]
    fn as_slices(&self) -> (&[Card], &[Card]) {
        let cap = self.buf.len();
        if self.head + self.len <= cap {
            (&self.buf[self.head..self.head + self.len], &[])
        } else {
            (&self.buf[self.head..], &self.buf[..self.head + self.len - cap])
        }
    }

    fn to_seq(&self) -> CardSeq {
        let (a, b) = self.as_slices();
        CardSeq([a, b].concat())
    }

    fn iter(&self) -> impl Iterator<Item = Card> + '_ {
        let (a, b) = self.as_slices();
        a.iter().chain(b.iter()).copied()
    }
}

/// What happened during one trick on a [`Table`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Step {
    /// The trick completed; the winner now leads.
    Won { winner: Player, laid: u32 },
    /// A player had to lay a card from an empty hand.
    Ended { winner: Player, laid: u32 },
}

/// Mutable playing surface used by every hot loop in the crate.
///
/// A `Table` holds both packs in ring buffers sized for the whole deck, so a
/// trick never allocates.
#[derive(Clone)]
pub struct Table {
    packs: [Pack; 2],
    leader: Player,
    pile: Vec<Card>,
}

impl Table {
    pub fn new(state: &GameState) -> Self {
        let total = state.total_cards();
        let mut table = Table {
            packs: [Pack::with_capacity(total), Pack::with_capacity(total)],
            leader: state.leader,
            pile: Vec::with_capacity(total),
        };
        table.load(state);
        table
    }

    /// Replaces the contents. The new state must not hold more cards than the
    /// table was sized for.
    pub fn load(&mut self, state: &GameState) {
        let total = state.total_cards();
        if total > self.packs[0].buf.len() {
            *self = Table::new(state);
            return;
        }
        self.packs[0].load(&state.hand1);
        self.packs[1].load(&state.hand2);
        self.leader = state.leader;
    }

    pub fn leader(&self) -> Player {
        self.leader
    }

    pub fn hand_len(&self, player: Player) -> usize {
        self.packs[player.index()].len
    }

    pub fn state(&self) -> GameState {
        GameState::new(self.packs[0].to_seq(), self.packs[1].to_seq(), self.leader)
    }

    /// Plays one trick from the current boundary.
    ///
    /// Cards on the table go under the winner's pack in the order they were
    /// laid. When the game ends mid-trick the table is handed to the winner,
    /// so the card total is always conserved.
    #[inline]
    pub fn play_trick(&mut self) -> Step {
        self.pile.clear();
        let mut turn = self.leader;
        let mut owed: u8 = 0;
        let mut claimant = self.leader;
        loop {
            let Some(card) = self.packs[turn.index()].pop_front() else {
                let winner = turn.other();
                let laid = self.pile.len() as u32;
                self.packs[winner.index()].extend(&self.pile);
                self.leader = winner;
                return Step::Ended { winner, laid };
            };
            self.pile.push(card);
            let penalty = card.penalty();
            if penalty > 0 {
                owed = penalty;
                claimant = turn;
                turn = turn.other();
            } else if owed > 0 {
                owed -= 1;
                if owed == 0 {
                    self.packs[claimant.index()].extend(&self.pile);
                    self.leader = claimant;
                    return Step::Won { winner: claimant, laid: self.pile.len() as u32 };
                }
            } else {
                turn = turn.other();
            }
        }
    }

    /// Verdict for a boundary where one player already holds every card.
    #[inline(always)]
    fn finished(&self, tricks: u64, cards: u64) -> Option<Verdict> {
        let empty = if self.packs[0].len == 0 {
            Player::One
        } else if self.packs[1].len == 0 {
            Player::Two
        } else {
            return None;
        };
        Some(Verdict::Terminated { winner: empty.other(), tricks, cards, ending: Ending::AllCardsTaken })
    }

    /// Plays trick number `trick` of a running game.
    #[inline(always)]
    fn advance(&mut self, trick: u64, cards: &mut u64) -> Option<Verdict> {
        match self.play_trick() {
            Step::Won { winner, laid } => {
                *cards += laid as u64;
                if self.packs[winner.other().index()].len == 0 {
                    return Some(Verdict::Terminated {
                        winner,
                        tricks: trick,
                        cards: *cards,
                        ending: Ending::AllCardsTaken,
                    });
                }
                None
            }
            Step::Ended { winner, laid } => {
                *cards += laid as u64;
                Some(Verdict::Terminated { winner, tricks: trick, cards: *cards, ending: Ending::Exhausted })
            }
        }
    }

    fn snapshot_into(&self, snap: &mut Snapshot) {
        snap.leader = self.leader;
        snap.len1 = self.packs[0].len;
        snap.cards.clear();
        snap.cards.extend(self.packs[0].iter());
        snap.cards.extend(self.packs[1].iter());
    }

    fn snapshot(&self) -> Snapshot {
        let mut snap = Snapshot::default();
        self.snapshot_into(&mut snap);
        snap
    }

    #[inline]
    fn matches(&self, snap: &Snapshot) -> bool {
        if self.leader != snap.leader || self.packs[0].len != snap.len1 {
            return false;
        }
        let (a, b) = self.packs[0].as_slices();
        let (c, d) = self.packs[1].as_slices();
        let mut rest = snap.cards.as_slice();
        for part in [a, b, c, d] {
            let (head, tail) = rest.split_at(part.len());
            if head != part {
                return false;
            }
            rest = tail;
        }
        true
    }

    fn key(&self) -> StateKey {
        let mut words = [0u64; 4];
        let mut bit = 0usize;
        let mut put = |value: u64, width: usize| {
            let (w, o) = (bit / 64, bit % 64);
            words[w] |= value << o;
            if o + width > 64 {
                words[w + 1] |= value >> (64 - o);
            }
            bit += width;
        };
        put(self.leader.index() as u64, 1);
        put(self.packs[0].len as u64, 7);
        put(self.packs[1].len as u64, 7);
        for card in self.packs[0].iter().chain(self.packs[1].iter()) {
            put(card as u64, 3);
        }
        StateKey(words)
    }
}

/// Owned copy of a table position, used as the tortoise in Brent's method
/// and as the hash key for decks too large for [`StateKey`].
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct Snapshot {
    leader: Player,
    len1: usize,
    cards: Vec<Card>,
}

impl Default for Snapshot {
    fn default() -> Self {
        Snapshot { leader: Player::One, len1: 0, cards: Vec::new() }
    }
}

/// Result of [`play_trick`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrickOutcome {
    pub next_state: GameState,
    pub cards_laid: u32,
    pub trick_winner: Player,
    pub ended: Option<Player>,
}

/// Plays exactly one trick from a boundary state.
pub fn play_trick(state: &GameState) -> Result<TrickOutcome, EngineError> {
    if state.hand(state.leader).is_empty() {
        return Err(EngineError::EmptyLeaderHand(state.leader));
    }
    let mut table = Table::new(state);
    let (winner, laid, ended) = match table.play_trick() {
        Step::Won { winner, laid } => (winner, laid, None),
        Step::Ended { winner, laid } => (winner, laid, Some(winner)),
    };
    Ok(TrickOutcome { next_state: table.state(), cards_laid: laid, trick_winner: winner, ended })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Detect {
    /// Remember every boundary state.
    #[default]
    HashSet,
    /// Brent's method: constant memory, exact lead-in and period.
    Brent,
    /// No loop detection; long games end in a cut-off.
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum OutcomeKind {
    Terminated,
    NonTerminating,
    CutOff,
}

/// How a game ends, or how it loops.
///
/// For a looping game `tricks` and `cards_played` cover the lead-in plus
/// one full period.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PlayOutcome {
    pub kind: OutcomeKind,
    pub winner: Option<Player>,
    pub tricks: u64,
    pub cards_played: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ending: Option<Ending>,
    pub lead_in: Option<u64>,
    pub period: Option<u64>,
    #[serde(skip)]
    pub cycle_states: Option<Vec<GameState>>,
}

impl PlayOutcome {
    fn terminated(winner: Player, tricks: u64, cards_played: u64, ending: Ending) -> Self {
        PlayOutcome {
            kind: OutcomeKind::Terminated,
            winner: Some(winner),
            tricks,
            cards_played,
            ending: Some(ending),
            lead_in: None,
            period: None,
            cycle_states: None,
        }
    }

    fn cut_off(tricks: u64, cards_played: u64) -> Self {
        PlayOutcome {
            kind: OutcomeKind::CutOff,
            winner: None,
            tricks,
            cards_played,
            ending: None,
            lead_in: None,
            period: None,
            cycle_states: None,
        }
    }

    pub fn is_non_terminating(&self) -> bool {
        self.kind == OutcomeKind::NonTerminating
    }

    pub fn is_terminated(&self) -> bool {
        self.kind == OutcomeKind::Terminated
    }
}

/// Compact result of [`Game::run`], without the cycle states.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Terminated { winner: Player, tricks: u64, cards: u64, ending: Ending },
    Looping { lead_in: u64, period: u64 },
    CutOff { tricks: u64, cards: u64 },
}

/// How a terminated game finished.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Ending {
    /// A trick left the loser without cards; the winner holds the whole deck.
    AllCardsTaken,
    /// A player had to lay a card from an empty hand part-way through a trick.
    Exhausted,
}

/// Reusable game runner. Holding one per worker avoids reallocating the
/// table and the Brent snapshot for every deal.
pub struct Game {
    table: Table,
    tortoise: Snapshot,
}

impl Default for Game {
    fn default() -> Self {
        Game::new()
    }
}

impl Game {
    pub fn new() -> Self {
        Game {
            table: Table::new(&GameState::new(CardSeq(vec![Card::Number; 64]), CardSeq::new(), Player::One)),
            tortoise: Snapshot::default(),
        }
    }

    /// Plays from `state`.
    ///
    /// A game is over once one player holds every card at a trick boundary,
    /// or when a player must lay a card from an empty hand. `tricks` counts
    /// pile pickups, plus the unfinished final trick if there is one;
    /// `cards` counts every card laid on the table.
    pub fn run(&mut self, state: &GameState, max_tricks: u64, detect: Detect) -> Verdict {
        self.table.load(state);
        if let Some(done) = self.table.finished(0, 0) {
            return done;
        }
        match detect {
            Detect::Brent => self.run_brent(state, max_tricks),
            Detect::None => self.run_plain(max_tricks),
            Detect::HashSet => {
                if state.total_cards() <= StateKey::MAX_CARDS {
                    hashset_scan(&mut self.table, max_tricks, |t| t.key())
                } else {
                    hashset_scan(&mut self.table, max_tricks, |t| t.snapshot())
                }
            }
        }
    }

    fn run_plain(&mut self, max_tricks: u64) -> Verdict {
        let mut cards = 0u64;
        for trick in 1..=max_tricks {
            if let Some(done) = self.table.advance(trick, &mut cards) {
                return done;
            }
        }
        Verdict::CutOff { tricks: max_tricks, cards }
    }

    fn run_brent(&mut self, start: &GameState, max_tricks: u64) -> Verdict {
        let mut power = 1u64;
        let mut lam = 1u64;
        let mut cards = 0u64;
        let mut tricks = 0u64;
        self.table.snapshot_into(&mut self.tortoise);
        loop {
            if tricks == max_tricks {
                return Verdict::CutOff { tricks, cards };
            }
            tricks += 1;
            if let Some(done) = self.table.advance(tricks, &mut cards) {
                return done;
            }
            if self.table.matches(&self.tortoise) {
                break;
            }
            if power == lam {
                self.table.snapshot_into(&mut self.tortoise);
                power *= 2;
                lam = 0;
            }
            lam += 1;
        }
        // `lam` is the period; the lead-in comes from two tables `lam` apart.
        let period = lam;
        let mut hare = Table::new(start);
        for _ in 0..period {
            hare.play_trick();
        }
        let mut tortoise = Table::new(start);
        tortoise.snapshot_into(&mut self.tortoise);
        let mut lead_in = 0u64;
        while !hare.matches(&self.tortoise) {
            tortoise.play_trick();
            hare.play_trick();
            tortoise.snapshot_into(&mut self.tortoise);
            lead_in += 1;
        }
        Verdict::Looping { lead_in, period }
    }
}

fn hashset_scan<K: Hash + Eq>(table: &mut Table, max_tricks: u64, key: impl Fn(&Table) -> K) -> Verdict {
    let mut seen: HashMap<K, u64> = HashMap::new();
    seen.insert(key(table), 0);
    let mut cards = 0u64;
    for trick in 1..=max_tricks {
        if let Some(done) = table.advance(trick, &mut cards) {
            return done;
        }
        let k = key(table);
        if let Some(&first) = seen.get(&k) {
            return Verdict::Looping { lead_in: first, period: trick - first };
        }
        seen.insert(k, trick);
    }
    Verdict::CutOff { tricks: max_tricks, cards }
}

/// Plays a whole game from `state`.
///
/// Looping games come back with the cycle states, starting at the first
/// repeated boundary state.
pub fn play_game(state: &GameState, max_tricks: u64, detect: Detect) -> Result<PlayOutcome, EngineError> {
    if state.hand(state.leader).is_empty() {
        return Err(EngineError::EmptyLeaderHand(state.leader));
    }
    let mut game = Game::new();
    Ok(match game.run(state, max_tricks, detect) {
        Verdict::Terminated { winner, tricks, cards, ending } => PlayOutcome::terminated(winner, tricks, cards, ending),
        Verdict::CutOff { tricks, cards } => PlayOutcome::cut_off(tricks, cards),
        Verdict::Looping { lead_in, period } => {
            let mut table = Table::new(state);
            let mut cards = 0u64;
            for _ in 0..lead_in {
                if let Step::Won { laid, .. } = table.play_trick() {
                    cards += laid as u64;
                }
            }
            let mut cycle = Vec::with_capacity(period as usize);
            for _ in 0..period {
                cycle.push(table.state());
                if let Step::Won { laid, .. } = table.play_trick() {
                    cards += laid as u64;
                }
            }
            PlayOutcome {
                kind: OutcomeKind::NonTerminating,
                winner: None,
                tricks: lead_in + period,
                cards_played: cards,
                ending: None,
                lead_in: Some(lead_in),
                period: Some(period),
                cycle_states: Some(cycle),
            }
        }
    })
}

/// Packed key of a state. Only states of at most 64 cards can be packed.
pub fn state_key(state: &GameState) -> Result<StateKey, crate::state::CapacityExceeded> {
    StateKey::of(state)
}

/// Boundary states from `state` onwards, `count` of them including the first.
/// Stops early once the game is over.
pub fn trace(state: &GameState, count: usize) -> Vec<GameState> {
    let mut table = Table::new(state);
    let mut states = vec![state.clone()];
    let mut cards = 0;
    while states.len() < count && table.finished(0, 0).is_none() {
        if table.advance(0, &mut cards).is_some() {
            if table.finished(0, 0).is_some() {
                states.push(table.state());
            }
            break;
        }
        states.push(table.state());
    }
    states
}
