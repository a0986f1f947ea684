//! Random deals, batch simulation and game-length statistics.
//!
//! Draw `i` of a policy comes from its own ChaCha stream, so any draw can be
//! regenerated on its own and a batch gives the same summary however it is
//! split across workers.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::card::{Card, CardSeq};
use crate::engine::{Detect, Game, Verdict};
use crate::state::{GameState, Player};

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Default start of the exponential tail, in tricks.
pub const DEFAULT_TAIL_START: u64 = 100;

/// Fewest games beyond the tail start that a fit accepts.
pub const MIN_TAIL_GAMES: u64 = 1000;

/// Draws per work unit in [`run_batch`].
const CHUNK: u64 = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum DealKind {
    /// Every arrangement of the standard deck equally likely.
    Uniform,
    /// Two of each face kind in each hand, otherwise uniform.
    FaceBalanced,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DealPolicy {
    pub kind: DealKind,
    pub seed: u64,
}

impl DealPolicy {
    pub fn uniform(seed: u64) -> Self {
        DealPolicy { kind: DealKind::Uniform, seed }
    }

    pub fn face_balanced(seed: u64) -> Self {
        DealPolicy { kind: DealKind::FaceBalanced, seed }
    }

    /// Generator for draw `index`.
    pub fn rng(&self, index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index);
        rng
    }

    /// Deals draw `index` into `cards` (52 entries, hand 1 first).
    pub fn deal_into(&self, index: u64, cards: &mut [Card; 52]) {
        let mut rng = self.rng(index);
        match self.kind {
            DealKind::Uniform => {
                *cards = standard_deck();
                cards.shuffle(&mut rng);
            }
            DealKind::FaceBalanced => {
                let mut half = [Card::Number; 26];
                for (i, face) in Card::FACES.iter().enumerate() {
                    half[2 * i] = *face;
                    half[2 * i + 1] = *face;
                }
                for h in cards.chunks_exact_mut(26) {
                    h.copy_from_slice(&half);
                    h.shuffle(&mut rng);
                }
            }
        }
    }
}

/// The 52 cards in a fixed order: faces first, then number cards.
pub fn standard_deck() -> [Card; 52] {
    let mut deck = [Card::Number; 52];
    for (i, face) in Card::FACES.iter().enumerate() {
        deck[4 * i..4 * i + 4].fill(*face);
    }
    deck
}

fn split_deal(cards: &[Card; 52]) -> GameState {
    GameState::new(CardSeq(cards[..26].to_vec()), CardSeq(cards[26..].to_vec()), Player::One)
}

/// Draw `index` of `policy`: 26 cards each, player 1 to lead.
pub fn random_deal(policy: &DealPolicy, index: u64) -> GameState {
    let mut cards = [Card::Number; 52];
    policy.deal_into(index, &mut cards);
    split_deal(&cards)
}

/// Counts per length, indexed by length.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Histogram(Vec<u64>);

impl Histogram {
    pub fn add(&mut self, length: u64, count: u64) {
        let i = length as usize;
        if i >= self.0.len() {
            self.0.resize(i + 1, 0);
        }
        self.0[i] += count;
    }

    pub fn get(&self, length: u64) -> u64 {
        self.0.get(length as usize).copied().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.0.iter().sum()
    }

    /// Non-zero (length, count) pairs in increasing length.
    pub fn iter(&self) -> impl Iterator<Item = (u64, u64)> + '_ {
        self.0.iter().enumerate().filter(|(_, &c)| c > 0).map(|(l, &c)| (l as u64, c))
    }

    /// Number of entries of length at least `length`.
    pub fn at_least(&self, length: u64) -> u64 {
        self.0.iter().skip(length as usize).sum()
    }

    pub fn mean(&self) -> f64 {
        let n = self.total();
        if n == 0 {
            return f64::NAN;
        }
        self.iter().map(|(l, c)| l as f64 * c as f64).sum::<f64>() / n as f64
    }

    pub fn max(&self) -> Option<u64> {
        self.iter().last().map(|(l, _)| l)
    }

    fn merge(&mut self, other: &Histogram) {
        if other.0.len() > self.0.len() {
            self.0.resize(other.0.len(), 0);
        }
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a += b;
        }
    }
}

impl Serialize for Histogram {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_map(self.iter())
    }
}

impl<'de> Deserialize<'de> for Histogram {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let map = BTreeMap::<u64, u64>::deserialize(d)?;
        let mut h = Histogram::default();
        for (l, c) in map {
            h.add(l, c);
        }
        Ok(h)
    }
}

/// Longest game seen, identified by its draw.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Longest {
    pub tricks: u64,
    pub cards: u64,
    pub index: u64,
}

impl Longest {
    /// More tricks wins, then more cards, then the earlier draw.
    fn beats(&self, other: &Longest) -> bool {
        (self.tricks, self.cards, std::cmp::Reverse(self.index))
            > (other.tricks, other.cards, std::cmp::Reverse(other.index))
    }

    /// More cards wins, then more tricks, then the earlier draw.
    fn beats_on_cards(&self, other: &Longest) -> bool {
        (self.cards, self.tricks, std::cmp::Reverse(self.index))
            > (other.cards, other.tricks, std::cmp::Reverse(other.index))
    }
}

/// Game lengths of a batch of random deals.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LengthSummary {
    pub policy: DealPolicy,
    pub games: u64,
    pub trick_histogram: Histogram,
    pub card_histogram: Histogram,
    pub max_tricks: u64,
    pub max_cards: u64,
    /// Longest game by tricks.
    pub record: Option<Longest>,
    /// Longest game by cards played.
    pub card_record: Option<Longest>,
    /// Games stopped by the trick budget; not in the histograms.
    pub cut_offs: u64,
    /// Deals that loop; not in the histograms.
    pub non_terminating: u64,
    /// Draw indices of the looping deals, ascending.
    #[serde(default)]
    pub looping: Vec<u64>,
}

impl LengthSummary {
    pub fn empty(policy: DealPolicy) -> Self {
        LengthSummary {
            policy,
            games: 0,
            trick_histogram: Histogram::default(),
            card_histogram: Histogram::default(),
            max_tricks: 0,
            max_cards: 0,
            record: None,
            card_record: None,
            cut_offs: 0,
            non_terminating: 0,
            looping: Vec::new(),
        }
    }

    /// Adds the verdict for draw `index`.
    pub fn record_verdict(&mut self, index: u64, verdict: Verdict) {
        self.games += 1;
        match verdict {
            Verdict::Terminated { tricks, cards, .. } => {
                self.trick_histogram.add(tricks, 1);
                self.card_histogram.add(cards, 1);
                self.max_tricks = self.max_tricks.max(tricks);
                self.max_cards = self.max_cards.max(cards);
                let game = Longest { tricks, cards, index };
                if self.record.is_none_or(|r| game.beats(&r)) {
                    self.record = Some(game);
                }
                if self.card_record.is_none_or(|r| game.beats_on_cards(&r)) {
                    self.card_record = Some(game);
                }
            }
            Verdict::Looping { .. } => {
                self.non_terminating += 1;
                self.looping.push(index);
            }
            Verdict::CutOff { .. } => self.cut_offs += 1,
        }
    }

    /// Combines two summaries of disjoint draws. Associative and commutative.
    pub fn merge(mut self, other: &LengthSummary) -> LengthSummary {
        self.games += other.games;
        self.trick_histogram.merge(&other.trick_histogram);
        self.card_histogram.merge(&other.card_histogram);
        self.max_tricks = self.max_tricks.max(other.max_tricks);
        self.max_cards = self.max_cards.max(other.max_cards);
        if let Some(r) = other.record {
            if self.record.is_none_or(|s| r.beats(&s)) {
                self.record = Some(r);
            }
        }
        if let Some(r) = other.card_record {
            if self.card_record.is_none_or(|s| r.beats_on_cards(&s)) {
                self.card_record = Some(r);
            }
        }
        self.cut_offs += other.cut_offs;
        self.non_terminating += other.non_terminating;
        self.looping.extend_from_slice(&other.looping);
        self.looping.sort_unstable();
        self
    }

    /// The deal of the longest game, regenerated from its draw index.
    pub fn record_deal(&self) -> Option<GameState> {
        self.record.map(|r| random_deal(&self.policy, r.index))
    }

    pub fn mean_tricks(&self) -> f64 {
        self.trick_histogram.mean()
    }

    /// `P(length >= t + delta | length >= t)` in tricks.
    pub fn conditional_survival(&self, t: u64, delta: u64) -> Option<f64> {
        let base = self.trick_histogram.at_least(t);
        (base > 0).then(|| self.trick_histogram.at_least(t + delta) as f64 / base as f64)
    }

    /// Share of terminated games shorter than `tricks`.
    pub fn short_fraction(&self, tricks: u64) -> f64 {
        let total = self.trick_histogram.total();
        (total - self.trick_histogram.at_least(tricks)) as f64 / total as f64
    }

    /// CSV with columns `length,trickCount,cardCount`.
    pub fn to_csv(&self) -> String {
        let mut lengths: Vec<u64> =
            self.trick_histogram.iter().chain(self.card_histogram.iter()).map(|(l, _)| l).collect();
        lengths.sort_unstable();
        lengths.dedup();
        let mut out = String::from("length,trickCount,cardCount\n");
        for l in lengths {
            let _ = writeln!(out, "{l},{},{}", self.trick_histogram.get(l), self.card_histogram.get(l));
        }
        out
    }
}

/// Plays draws `range` of `policy` on one engine.
pub fn summarize_range(
    policy: &DealPolicy,
    range: std::ops::Range<u64>,
    max_tricks: u64,
    game: &mut Game,
) -> LengthSummary {
    let mut summary = LengthSummary::empty(*policy);
    let mut cards = [Card::Number; 52];
    let mut state = GameState::new(CardSeq(Vec::with_capacity(52)), CardSeq(Vec::with_capacity(52)), Player::One);
    for index in range {
        policy.deal_into(index, &mut cards);
        state.hand1.clear();
        state.hand1.extend_from_slice(&cards[..26]);
        state.hand2.clear();
        state.hand2.extend_from_slice(&cards[26..]);
        summary.record_verdict(index, game.run(&state, max_tricks, Detect::Brent));
    }
    summary
}

/// Plays draws `0..games` of `policy` on `workers` threads.
///
/// The summary depends only on the policy, `games` and `max_tricks`.
pub fn run_batch(policy: &DealPolicy, games: u64, max_tricks: u64, workers: usize) -> LengthSummary {
    run_draws(policy, 0..games, max_tricks, workers)
}

/// [`run_batch`] over an arbitrary range of draw indices.
pub fn run_draws(policy: &DealPolicy, draws: std::ops::Range<u64>, max_tricks: u64, workers: usize) -> LengthSummary {
    let chunks: Vec<std::ops::Range<u64>> =
        (draws.start..draws.end).step_by(CHUNK as usize).map(|start| start..(start + CHUNK).min(draws.end)).collect();
    let work = || {
        chunks
            .par_iter()
            .map_init(Game::new, |game, range| summarize_range(policy, range.clone(), max_tricks, game))
            .reduce(|| LengthSummary::empty(*policy), |a, b| a.merge(&b))
    };
    match rayon::ThreadPoolBuilder::new().num_threads(workers.max(1)).build() {
        Ok(pool) => pool.install(work),
        Err(_) => work(),
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    #[error("only {games} games beyond the tail start, need {needed}")]
    InsufficientTailMass { games: u64, needed: u64 },
    #[error("every tail game has the same length; the decay rate is infinite")]
    DegenerateTail,
}

/// Exponential fit to the tail of the trick-length distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TailFit {
    /// Decay per trick.
    pub rate: f64,
    /// Tricks over which survival halves.
    pub half_life: f64,
    /// Standard error of `rate`.
    pub stderr: f64,
    pub tail_start: u64,
    pub tail_games: u64,
}

/// Maximum-likelihood exponential decay of game lengths beyond `tail_start`.
///
/// Lengths are whole tricks, so the excess `L - tail_start - 1` is treated
/// as geometric: with mean excess `m` the per-trick survival is
/// `q = m / (1 + m)` and the rate is `-ln q`.
pub fn fit_exponential_tail(summary: &LengthSummary, tail_start: u64) -> Result<TailFit, StatsError> {
    let tail: Vec<(u64, u64)> = summary.trick_histogram.iter().filter(|&(l, _)| l > tail_start).collect();
    let n: u64 = tail.iter().map(|&(_, c)| c).sum();
    if n < MIN_TAIL_GAMES {
        return Err(StatsError::InsufficientTailMass { games: n, needed: MIN_TAIL_GAMES });
    }
    let excess: f64 = tail.iter().map(|&(l, c)| (l - tail_start - 1) as f64 * c as f64).sum::<f64>() / n as f64;
    if excess == 0.0 {
        return Err(StatsError::DegenerateTail);
    }
    let q = excess / (1.0 + excess);
    let rate = -q.ln();
    let stderr = (1.0 - q) / (n as f64 * q).sqrt();
    Ok(TailFit { rate, half_life: std::f64::consts::LN_2 / rate, stderr, tail_start, tail_games: n })
}

/// Summary JSON for a batch.
#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct BatchReport {
    pub policy: DealPolicy,
    pub games: u64,
    pub cut_offs: u64,
    pub non_terminating: u64,
    pub mean_tricks: f64,
    pub mean_cards: f64,
    pub max_tricks: u64,
    pub max_cards: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub record_deal: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit: Option<TailFit>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit_error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub survival20: Option<f64>,
}

impl BatchReport {
    pub fn new(summary: &LengthSummary, tail_start: u64) -> Self {
        let fit = fit_exponential_tail(summary, tail_start);
        BatchReport {
            policy: summary.policy,
            games: summary.games,
            cut_offs: summary.cut_offs,
            non_terminating: summary.non_terminating,
            mean_tricks: summary.trick_histogram.mean(),
            mean_cards: summary.card_histogram.mean(),
            max_tricks: summary.max_tricks,
            max_cards: summary.max_cards,
            record_deal: summary.record_deal().map(|s| s.to_line()),
            fit: fit.as_ref().ok().copied(),
            fit_error: fit.err().map(|e| e.to_string()),
            survival20: summary.conditional_survival(tail_start, 20),
        }
    }
}

/// Record-growth model: `n` games with exponentially distributed lengths
/// of mean `mu`, and a search volume `A e^{kt}` growing over time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecordModel {
    pub mu: f64,
    pub a: f64,
    pub k: f64,
}

/// Terms summed explicitly before switching to the asymptotic series.
pub const HARMONIC_SUM_LIMIT: u64 = 1_000_000;

/// `H_n`, summed as `1/n + 1/(n-1) + ... + 1` up to [`HARMONIC_SUM_LIMIT`]
/// and from `γ + ln n + 1/(2n) - 1/(12n²)` beyond.
pub fn harmonic(n: u64) -> f64 {
    if n <= HARMONIC_SUM_LIMIT {
        (1..=n).map(|i| 1.0 / (n - i + 1) as f64).sum()
    } else {
        harmonic_asymptotic(n as f64)
    }
}

/// The asymptotic series for `H_x`, also used for non-integer `x`.
pub fn harmonic_asymptotic(x: f64) -> f64 {
    EULER_GAMMA + x.ln() + 1.0 / (2.0 * x) - 1.0 / (12.0 * x * x)
}

/// Expected longest of `n` games: `mu H_n`.
pub fn expected_record(model: &RecordModel, n: u64) -> f64 {
    assert!(n >= 1, "need at least one game");
    model.mu * harmonic(n)
}

/// Expected record after time `t`: `mu (γ + ln A + k t)`.
pub fn expected_record_over_time(model: &RecordModel, t: f64) -> f64 {
    model.mu * (EULER_GAMMA + model.a.ln() + model.k * t)
}

/// Pearson statistic for where the 16 face cards sit across `deals` draws.
///
/// Within one deal the face indicators are drawn without replacement, so the
/// per-position variance is scaled by `N/(N-1)`; the statistic is then
/// chi-squared with 51 degrees of freedom under uniform dealing.
pub fn face_position_chi_squared(policy: &DealPolicy, deals: u64) -> (f64, f64) {
    use statrs::distribution::{ChiSquared, ContinuousCDF};
    let mut counts = [0u64; 52];
    let mut cards = [Card::Number; 52];
    for i in 0..deals {
        policy.deal_into(i, &mut cards);
        for (pos, c) in cards.iter().enumerate() {
            if c.is_face() {
                counts[pos] += 1;
            }
        }
    }
    let p = 16.0 / 52.0;
    let expected = deals as f64 * p;
    let scale = deals as f64 * p * (1.0 - p) * 52.0 / 51.0;
    let stat: f64 = counts.iter().map(|&o| (o as f64 - expected).powi(2)).sum::<f64>() / scale;
    let p_value = 1.0 - ChiSquared::new(51.0).expect("positive degrees of freedom").cdf(stat);
    (stat, p_value)
}

/// Draws an exponential variate with mean `mu`.
pub fn exponential<R: Rng>(rng: &mut R, mu: f64) -> f64 {
    -mu * (1.0 - rng.gen::<f64>()).ln()
}
