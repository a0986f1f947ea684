//! Slow reference play written from the rules alone, sharing only the card
//! and state types with the engine.

use std::collections::{HashMap, VecDeque};

use bmn::{Card, CardSeq, GameState, Player};

/// What the naive simulator concluded about a game.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NaiveResult {
    /// `winner` is 1 or 2.
    Over {
        winner: u8,
        tricks: u64,
        cards: u64,
        exhausted: bool,
    },
    Loop {
        lead_in: u64,
        period: u64,
        tricks: u64,
        cards: u64,
    },
}

fn penalty(card: Card) -> usize {
    match card {
        Card::Number => 0,
        Card::Jack => 1,
        Card::Queen => 2,
        Card::King => 3,
        Card::Ace => 4,
    }
}

type Position = (Vec<Card>, Vec<Card>, usize);

/// Order in which a won pile goes under the winner's hand.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PileOrder {
    /// First card laid goes in first; the real rule.
    AsLaid,
    /// Last card laid goes in first, a deliberate bug.
    Reversed,
}

/// Plays one trick. Returns the cards laid and `Some(winner)` if a hand ran
/// dry mid-trick.
fn naive_trick(hands: &mut [VecDeque<Card>; 2], leader: &mut usize, order: PileOrder) -> (u64, Option<usize>) {
    let mut pile = Vec::new();
    let mut player = *leader;
    // (face owner, cards still owed by the other player)
    let mut demand: Option<(usize, usize)> = None;
    loop {
        let Some(card) = hands[player].pop_front() else {
            return (pile.len() as u64, Some(1 - player));
        };
        pile.push(card);
        if penalty(card) > 0 {
            demand = Some((player, penalty(card)));
            player = 1 - player;
            continue;
        }
        match demand {
            None => player = 1 - player,
            Some((owner, 1)) => {
                if order == PileOrder::Reversed {
                    pile.reverse();
                }
                hands[owner].extend(pile.iter().copied());
                *leader = owner;
                return (pile.len() as u64, None);
            }
            Some((owner, owed)) => demand = Some((owner, owed - 1)),
        }
    }
}

/// Full simulation keeping every boundary position in a list.
pub fn naive_play(state: &GameState) -> NaiveResult {
    let mut hands = [
        state.hand1.0.iter().copied().collect::<VecDeque<_>>(),
        state.hand2.0.iter().copied().collect::<VecDeque<_>>(),
    ];
    let mut leader = state.leader.index();
    let position = |h: &[VecDeque<Card>; 2], l: usize| -> Position {
        (h[0].iter().copied().collect(), h[1].iter().copied().collect(), l)
    };
    let mut seen = vec![position(&hands, leader)];
    let (mut tricks, mut cards) = (0u64, 0u64);
    loop {
        if hands[0].is_empty() || hands[1].is_empty() {
            let winner = if hands[0].is_empty() { 2 } else { 1 };
            return NaiveResult::Over { winner, tricks, cards, exhausted: false };
        }
        let (laid, dry) = naive_trick(&mut hands, &mut leader, PileOrder::AsLaid);
        tricks += 1;
        cards += laid;
        if let Some(w) = dry {
            return NaiveResult::Over { winner: w as u8 + 1, tricks, cards, exhausted: true };
        }
        let now = position(&hands, leader);
        if let Some(first) = seen.iter().position(|p| *p == now) {
            let first = first as u64;
            return NaiveResult::Loop { lead_in: first, period: tricks - first, tricks, cards };
        }
        seen.push(now);
    }
}

/// One forward trick, or `None` if the trick never completes.
pub fn naive_next(state: &GameState) -> Option<GameState> {
    naive_next_with(state, PileOrder::AsLaid)
}

pub fn naive_next_with(state: &GameState, order: PileOrder) -> Option<GameState> {
    let mut hands = [
        state.hand1.0.iter().copied().collect::<VecDeque<_>>(),
        state.hand2.0.iter().copied().collect::<VecDeque<_>>(),
    ];
    let mut leader = state.leader.index();
    if hands[leader].is_empty() {
        return None;
    }
    let (_, dry) = naive_trick(&mut hands, &mut leader, order);
    if dry.is_some() {
        return None;
    }
    Some(GameState::new(
        CardSeq(hands[0].iter().copied().collect()),
        CardSeq(hands[1].iter().copied().collect()),
        Player::from_index(leader),
    ))
}

/// Every card sequence of length `len` with at most `max_faces` face cards.
pub fn sequences(len: usize, max_faces: usize) -> Vec<Vec<Card>> {
    let mut out = vec![Vec::new()];
    for _ in 0..len {
        let mut next = Vec::with_capacity(out.len() * 5);
        for seq in &out {
            let faces = seq.iter().filter(|c: &&Card| c.is_face()).count();
            for card in Card::ALL {
                if card.is_face() && faces == max_faces {
                    continue;
                }
                let mut s = seq.clone();
                s.push(card);
                next.push(s);
            }
        }
        out = next;
    }
    out
}

/// Every boundary state over `len` cards with at most `max_faces` faces:
/// each sequence, split at every point, with either leader. With
/// `leader_nonempty` only states whose leader holds a card are kept.
pub fn states(len: usize, max_faces: usize, leader_nonempty: bool) -> Vec<GameState> {
    let mut out = Vec::new();
    for seq in sequences(len, max_faces) {
        for split in 0..=len {
            for leader in [Player::One, Player::Two] {
                let hand = if leader == Player::One { split } else { len - split };
                if leader_nonempty && hand == 0 {
                    continue;
                }
                out.push(GameState::new(CardSeq(seq[..split].to_vec()), CardSeq(seq[split..].to_vec()), leader));
            }
        }
    }
    out
}

/// Predecessor map built by running one trick forward from every state.
pub fn inverted_tricks(len: usize, max_faces: usize) -> HashMap<GameState, Vec<GameState>> {
    let mut map: HashMap<GameState, Vec<GameState>> = HashMap::new();
    for state in states(len, max_faces, true) {
        if let Some(next) = naive_next(&state) {
            map.entry(next).or_default().push(state);
        }
    }
    map
}

/// The engine's result in the naive simulator's terms.
pub fn engine_result(state: &GameState, detect: bmn::Detect) -> NaiveResult {
    let outcome = bmn::play_game(state, 1_000_000, detect).expect("leader holds a card");
    match outcome.kind {
        bmn::OutcomeKind::Terminated => NaiveResult::Over {
            winner: outcome.winner.expect("terminated games have a winner").number(),
            tricks: outcome.tricks,
            cards: outcome.cards_played,
            exhausted: outcome.ending == Some(bmn::engine::Ending::Exhausted),
        },
        bmn::OutcomeKind::NonTerminating => NaiveResult::Loop {
            lead_in: outcome.lead_in.unwrap(),
            period: outcome.period.unwrap(),
            tricks: outcome.tricks,
            cards: outcome.cards_played,
        },
        bmn::OutcomeKind::CutOff => panic!("small deck cut off: {}", state.to_line()),
    }
}

/// Compares the engine with [`naive_play`] on every state of up to
/// `max_len` cards with at most `max_faces` faces. Returns the number of
/// states compared.
pub fn engine_matches_naive(max_len: usize, max_faces: usize) -> Result<usize, String> {
    let mut compared = 0;
    for len in 1..=max_len {
        for state in states(len, max_faces, true) {
            let expected = naive_play(&state);
            for detect in [bmn::Detect::HashSet, bmn::Detect::Brent] {
                let got = engine_result(&state, detect);
                if got != expected {
                    return Err(format!("{} under {detect:?}: engine {got:?}, naive {expected:?}", state.to_line()));
                }
            }
            compared += 1;
        }
    }
    Ok(compared)
}

/// Compares `predecessors_of` with [`inverted_tricks`] for every target state
/// of up to `max_len` cards with at most `max_faces` faces. Returns the
/// number of targets compared.
pub fn predecessors_match_inversion(max_len: usize, max_faces: usize) -> Result<usize, String> {
    use rayon::prelude::*;
    (1..=max_len)
        .into_par_iter()
        .map(|len| {
            let inverted = inverted_tricks(len, max_faces);
            let targets = states(len, max_faces, false);
            for target in &targets {
                let mut got = bmn::reverse::predecessors_of(target).predecessors;
                got.sort();
                let mut expected = inverted.get(target).cloned().unwrap_or_default();
                expected.sort();
                if got != expected {
                    return Err(format!(
                        "{}: {} predecessors, brute force finds {}",
                        target.to_line(),
                        got.len(),
                        expected.len()
                    ));
                }
            }
            Ok(targets.len())
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))
}

#[cfg(test)]
mod tests {
    use bmn::{Detect, GameState};

    use super::*;

    /// Sequences of `n` cards with at most `faces` face cards, by counting.
    fn sequence_count(n: usize, faces: usize) -> usize {
        let choose = |n: usize, k: usize| (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1));
        (0..=faces.min(n)).map(|k| choose(n, k) * 4usize.pow(k as u32)).sum()
    }

    #[test]
    fn engine_matches_naive_simulator_on_small_decks() {
        let compared = engine_matches_naive(10, 2).unwrap();
        // n + 1 splits and two leaders, less the two with an empty leading hand
        let expected: usize = (1..=10).map(|n| sequence_count(n, 2) * 2 * n).sum();
        assert_eq!(compared, expected);
    }

    #[test]
    fn engine_matches_naive_simulator_with_three_faces() {
        engine_matches_naive(8, 3).unwrap();
    }

    #[test]
    fn predecessors_match_brute_force_inversion() {
        let compared = predecessors_match_inversion(12, 3).unwrap();
        let expected: usize = (1..=12).map(|n| sequence_count(n, 3) * 2 * (n + 1)).sum();
        assert_eq!(compared, expected);
    }

    #[test]
    fn predecessors_match_brute_force_inversion_without_face_limit() {
        let compared = predecessors_match_inversion(7, 7).unwrap();
        let expected: usize = (1..=7).map(|n| 5usize.pow(n as u32) * 2 * (n + 1)).sum();
        assert_eq!(compared, expected);
    }

    #[test]
    fn reversed_pile_order_breaks_the_published_cycle_at_once() {
        let cycle = bmn::registry::Registry::load().cycle;
        let replays = |order| {
            (0..cycle.len())
                .position(|i| naive_next_with(&cycle[i], order).as_ref() != Some(&cycle[(i + 1) % cycle.len()]))
        };
        assert_eq!(replays(PileOrder::AsLaid), None);
        // the first pile is `-J-`, which reads the same reversed, so the
        // replay first breaks going from state 2 to state 3
        assert_eq!(replays(PileOrder::Reversed), Some(1));
    }

    #[test]
    fn naive_simulator_agrees_on_published_deals() {
        for line in ["J-- / -J- (1)", "---K---Q-KQAJ-----AAJ--J-- / ----------Q----KQ-J-----KA (1)"] {
            let state = GameState::parse(line).unwrap();
            assert_eq!(naive_play(&state), engine_result(&state, Detect::HashSet), "{line}");
        }
    }
}
