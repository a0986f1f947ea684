//! Trick-boundary game states, their text forms and packed keys.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::card::{CardSeq, DeckComposition, ParseError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Player {
    One,
    Two,
}

impl Player {
    #[inline(always)]
    pub const fn index(self) -> usize {
        match self {
            Player::One => 0,
            Player::Two => 1,
        }
    }

    #[inline(always)]
    pub const fn from_index(i: usize) -> Player {
        if i == 0 {
            Player::One
        } else {
            Player::Two
        }
    }

    #[inline(always)]
    pub const fn other(self) -> Player {
        match self {
            Player::One => Player::Two,
            Player::Two => Player::One,
        }
    }

    /// 1 or 2, as printed.
    pub const fn number(self) -> u8 {
        self.index() as u8 + 1
    }

    pub fn from_number(n: u8) -> Option<Player> {
        match n {
            1 => Some(Player::One),
            2 => Some(Player::Two),
            _ => None,
        }
    }
}

impl fmt::Display for Player {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.number())
    }
}

impl Serialize for Player {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u8(self.number())
    }
}

impl<'de> Deserialize<'de> for Player {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let n = u8::deserialize(d)?;
        Player::from_number(n).ok_or_else(|| serde::de::Error::custom(format!("invalid player {n}")))
    }
}

/// Both hands at a trick boundary plus the player who leads the next trick.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GameState {
    pub hand1: CardSeq,
    pub hand2: CardSeq,
    pub leader: Player,
}

impl GameState {
    pub fn new(hand1: CardSeq, hand2: CardSeq, leader: Player) -> Self {
        Self { hand1, hand2, leader }
    }

    /// Builds a state from two canonical strings. Panics on bad input, so
    /// only use it with literals.
    pub fn from_hands(hand1: &str, hand2: &str, leader: Player) -> Self {
        Self::new(
            CardSeq::parse(hand1).expect("valid hand literal"),
            CardSeq::parse(hand2).expect("valid hand literal"),
            leader,
        )
    }

    pub fn hand(&self, player: Player) -> &CardSeq {
        match player {
            Player::One => &self.hand1,
            Player::Two => &self.hand2,
        }
    }

    pub fn hand_mut(&mut self, player: Player) -> &mut CardSeq {
        match player {
            Player::One => &mut self.hand1,
            Player::Two => &mut self.hand2,
        }
    }

    pub fn total_cards(&self) -> usize {
        self.hand1.len() + self.hand2.len()
    }

    pub fn composition(&self) -> DeckComposition {
        self.hand1.composition() + self.hand2.composition()
    }

    pub fn is_balanced(&self) -> bool {
        self.hand1.len() == self.hand2.len()
    }

    /// Both hands swapped, with the leader relabelled to match.
    pub fn mirrored(&self) -> GameState {
        GameState::new(self.hand2.clone(), self.hand1.clone(), self.leader.other())
    }

    /// Parses either `1. <seq> 2. <seq> (<n>)` or `<seq> / <seq> (<n>)`; the
    /// two hands may also be given on separate lines. The leader annotation is
    /// optional and defaults to player 1.
    pub fn parse(text: &str) -> Result<Self, ParseError> {
        let trimmed = text.trim();
        let (body, leader) = split_leader(trimmed)?;
        let (first, second) = if let Some(rest) = body.strip_prefix("1.") {
            let at = rest.find("2.").ok_or_else(|| ParseError::MalformedState("missing `2.` marker".into()))?;
            let offset = text.len() - text.trim_start().len() + 2;
            ((offset, &rest[..at]), (offset + at + 2, &rest[at + 2..]))
        } else if let Some(at) = body.find('/') {
            let offset = text.len() - text.trim_start().len();
            ((offset, &body[..at]), (offset + at + 1, &body[at + 1..]))
        } else {
            let mut lines = body.lines().filter(|l| !l.trim().is_empty());
            let (Some(a), Some(b), None) = (lines.next(), lines.next(), lines.next()) else {
                return Err(ParseError::MalformedState(
                    "expected `1. <hand> 2. <hand>`, `<hand> / <hand>` or two lines".into(),
                ));
            };
            let a_off = text.find(a).unwrap_or(0);
            let b_off = text[a_off + a.len()..].find(b).map_or(0, |i| i + a_off + a.len());
            ((a_off, a), (b_off, b))
        };
        let hand1 = parse_hand_at(first.1, first.0)?;
        let hand2 = parse_hand_at(second.1, second.0)?;
        Ok(GameState::new(hand1, hand2, leader))
    }

    /// The `1. <seq> 2. <seq> (<n>)` line format.
    pub fn to_line(&self) -> String {
        format!("1. {} 2. {} ({})", self.hand1, self.hand2, self.leader)
    }

    pub fn key(&self) -> Result<StateKey, CapacityExceeded> {
        StateKey::of(self)
    }
}

fn parse_hand_at(text: &str, offset: usize) -> Result<CardSeq, ParseError> {
    CardSeq::parse(text).map_err(|e| match e {
        ParseError::InvalidCharacter { position, ch } => {
            ParseError::InvalidCharacter { position: position + offset, ch }
        }
        other => other,
    })
}

fn split_leader(body: &str) -> Result<(&str, Player), ParseError> {
    let Some(stripped) = body.strip_suffix(')') else {
        return Ok((body, Player::One));
    };
    let open = stripped.rfind('(').ok_or_else(|| ParseError::MalformedState("unbalanced `)`".into()))?;
    let flag = stripped[open + 1..].trim();
    let leader = flag
        .parse::<u8>()
        .ok()
        .and_then(Player::from_number)
        .ok_or_else(|| ParseError::InvalidLeader(flag.to_string()))?;
    Ok((&stripped[..open], leader))
}

impl FromStr for GameState {
    type Err = ParseError;
    fn from_str(s: &str) -> Result<Self, ParseError> {
        GameState::parse(s)
    }
}

impl fmt::Display for GameState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_line())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("state holds {0} cards, packed keys hold at most {max}", max = StateKey::MAX_CARDS)]
pub struct CapacityExceeded(pub usize);

/// Injective packed key for states of at most 64 cards.
///
/// Layout, from bit 0: leader (1 bit), |hand1| (7 bits), |hand2| (7 bits),
/// then 3 bits per card for hand1 followed by hand2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StateKey(pub [u64; 4]);

impl StateKey {
    pub const MAX_CARDS: usize = 64;

    pub fn of(state: &GameState) -> Result<StateKey, CapacityExceeded> {
        let total = state.total_cards();
        if total > Self::MAX_CARDS {
            return Err(CapacityExceeded(total));
        }
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
        put(state.leader.index() as u64, 1);
        put(state.hand1.len() as u64, 7);
        put(state.hand2.len() as u64, 7);
        for &card in state.hand1.iter().chain(state.hand2.iter()) {
            put(card as u64, 3);
        }
        Ok(StateKey(words))
    }
}
