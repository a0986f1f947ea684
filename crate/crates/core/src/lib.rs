//! Beggar-My-Neighbor laboratory.

pub mod card;
pub mod construct;
pub mod engine;
pub mod registry;
pub mod reverse;
pub mod state;
pub mod stochastic;

pub use card::{Card, CardSeq, DeckComposition, ParseError};
pub use engine::{play_game, play_trick, Detect, EngineError, OutcomeKind, PlayOutcome, TrickOutcome};
pub use state::{GameState, Player, StateKey};
