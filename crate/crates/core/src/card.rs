//! Cards, card sequences and deck compositions.
//!
//! Only the rank class of a card matters to the game, so a card is one of
//! five values. The canonical text form writes one character per card:
//!
//! ```text
//! -  number card (penalty 0)
//! J  jack        (penalty 1)
//! Q  queen       (penalty 2)
//! K  king        (penalty 3)
//! A  ace         (penalty 4)
//! ```
//!
//! Sequences are written top-of-pack first.

use std::fmt;
use std::ops::{Deref, DerefMut};
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("invalid character {ch:?} at position {position}")]
    InvalidCharacter { position: usize, ch: char },
    #[error("malformed state: {0}")]
    MalformedState(String),
    #[error("invalid leader {0:?}, expected 1 or 2")]
    InvalidLeader(String),
}

/// The rank class of a card. The discriminant is the penalty it imposes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[repr(u8)]
pub enum Card {
    Number = 0,
    Jack = 1,
    Queen = 2,
    King = 3,
    Ace = 4,
}

impl Card {
    pub const ALL: [Card; 5] = [Card::Number, Card::Jack, Card::Queen, Card::King, Card::Ace];
    pub const FACES: [Card; 4] = [Card::Jack, Card::Queen, Card::King, Card::Ace];

    /// Number of cards the opponent must pay to this card.
    #[inline(always)]
    pub const fn penalty(self) -> u8 {
        self as u8
    }

    #[inline(always)]
    pub const fn is_face(self) -> bool {
        !matches!(self, Card::Number)
    }

    pub const fn to_char(self) -> char {
        match self {
            Card::Number => '-',
            Card::Jack => 'J',
            Card::Queen => 'Q',
            Card::King => 'K',
            Card::Ace => 'A',
        }
    }

    pub const fn from_char(ch: char) -> Option<Card> {
        match ch {
            '-' => Some(Card::Number),
            'J' => Some(Card::Jack),
            'Q' => Some(Card::Queen),
            'K' => Some(Card::King),
            'A' => Some(Card::Ace),
            _ => None,
        }
    }

    /// Inverse of `self as u8`; values above 4 are not cards.
    #[inline(always)]
    pub const fn from_index(i: u8) -> Option<Card> {
        match i {
            0 => Some(Card::Number),
            1 => Some(Card::Jack),
            2 => Some(Card::Queen),
            3 => Some(Card::King),
            4 => Some(Card::Ace),
            _ => None,
        }
    }
}

impl fmt::Display for Card {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_char())
    }
}

/// An ordered run of cards; index 0 is the top of the pack.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CardSeq(pub Vec<Card>);

impl CardSeq {
    pub fn new() -> Self {
        Self(Vec::new())
    }

    /// Parses the canonical notation, skipping whitespace.
    ///
    /// Positions in errors are character offsets into `text`.
    pub fn parse(text: &str) -> Result<Self, ParseError> {
        let mut cards = Vec::with_capacity(text.len());
        for (position, ch) in text.chars().enumerate() {
            if ch.is_whitespace() {
                continue;
            }
            match Card::from_char(ch) {
                Some(card) => cards.push(card),
                None => return Err(ParseError::InvalidCharacter { position, ch }),
            }
        }
        Ok(Self(cards))
    }

    pub fn composition(&self) -> DeckComposition {
        DeckComposition::of(&self.0)
    }

    pub fn face_count(&self) -> usize {
        self.0.iter().filter(|c| c.is_face()).count()
    }

    pub fn concat<'a>(parts: impl IntoIterator<Item = &'a CardSeq>) -> CardSeq {
        CardSeq(parts.into_iter().flat_map(|s| s.0.iter().copied()).collect())
    }
}

impl Deref for CardSeq {
    type Target = Vec<Card>;
    fn deref(&self) -> &Vec<Card> {
        &self.0
    }
}

impl DerefMut for CardSeq {
    fn deref_mut(&mut self) -> &mut Vec<Card> {
        &mut self.0
    }
}

impl From<Vec<Card>> for CardSeq {
    fn from(cards: Vec<Card>) -> Self {
        Self(cards)
    }
}

impl FromIterator<Card> for CardSeq {
    fn from_iter<I: IntoIterator<Item = Card>>(iter: I) -> Self {
        Self(iter.into_iter().collect())
    }
}

impl FromStr for CardSeq {
    type Err = ParseError;
    fn from_str(s: &str) -> Result<Self, ParseError> {
        Self::parse(s)
    }
}

impl fmt::Display for CardSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for card in &self.0 {
            write!(f, "{}", card.to_char())?;
        }
        Ok(())
    }
}

impl Serialize for CardSeq {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for CardSeq {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        CardSeq::parse(&text).map_err(serde::de::Error::custom)
    }
}

/// Per-rank card counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DeckComposition {
    pub number_count: usize,
    pub jack_count: usize,
    pub queen_count: usize,
    pub king_count: usize,
    pub ace_count: usize,
}

impl DeckComposition {
    pub const STANDARD: DeckComposition =
        DeckComposition { number_count: 36, jack_count: 4, queen_count: 4, king_count: 4, ace_count: 4 };

    pub fn of(cards: &[Card]) -> Self {
        let mut counts = [0usize; 5];
        for &card in cards {
            counts[card as usize] += 1;
        }
        Self::from_counts(counts)
    }

    pub const fn from_counts(counts: [usize; 5]) -> Self {
        Self {
            number_count: counts[0],
            jack_count: counts[1],
            queen_count: counts[2],
            king_count: counts[3],
            ace_count: counts[4],
        }
    }

    pub const fn counts(&self) -> [usize; 5] {
        [self.number_count, self.jack_count, self.queen_count, self.king_count, self.ace_count]
    }

    pub fn count(&self, card: Card) -> usize {
        self.counts()[card as usize]
    }

    pub fn total(&self) -> usize {
        self.counts().iter().sum()
    }

    pub fn face_total(&self) -> usize {
        self.total() - self.number_count
    }

    pub fn is_standard(&self) -> bool {
        *self == Self::STANDARD
    }
}

impl std::ops::Add for DeckComposition {
    type Output = DeckComposition;
    fn add(self, rhs: DeckComposition) -> DeckComposition {
        let (a, b) = (self.counts(), rhs.counts());
        DeckComposition::from_counts(std::array::from_fn(|i| a[i] + b[i]))
    }
}

impl fmt::Display for DeckComposition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "({}, {}, {}, {}, {})",
            self.number_count, self.jack_count, self.queen_count, self.king_count, self.ace_count
        )
    }
}
