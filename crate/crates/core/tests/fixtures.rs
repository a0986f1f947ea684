use bmn::construct::{expand_loop, mutate, repeat_deal, EditOp, LoopTrace, MutateOptions, Piece, TEMPLATE_BUDGET};
use bmn::registry::{self, trimmed_extended_deck, Registry};
use bmn::reverse::{backward_closure, balanced_members};
use bmn::{play_game, Detect, GameState, OutcomeKind};
use sha2::{Digest, Sha256};

fn sha256(text: &str) -> String {
    Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

#[test]
fn data_files_are_frozen() {
    let files = [
        (registry::RECORDS, "5abaf1b5b93a313e125da8e14f84714184eabb4102d27ba61c1593e52564db16"),
        (registry::PIECES, "55a3e2a58716f05998b1927ccc67ef97ff8b267263912ab1636c3cd7a7b0c296"),
        (registry::CONSTRUCTIONS, "542e8b411e5d099625c0a371ceacda3e814eac33da24ba9cd5d87e8038c18080"),
        (registry::CYCLE, "6b4c167599e304723a6b2e7a641a41856de3f98cc70defc4abbfc45cd17be08d"),
        (registry::PREDECESSORS, "611bccb959ec2222930931fec0741ee396af71ad208e40aa811bdbff8d2ec76d"),
        (registry::DEALS, "5298d2329a664e5a989f16cf5ede6edb3dbee8e1a078ad20a8e0031d11748b9f"),
    ];
    for (text, digest) in files {
        assert_eq!(sha256(text), digest, "{}", text.lines().next().unwrap_or(""));
    }
}

#[test]
fn published_cycle_closes_and_is_reached_from_the_balanced_deal() {
    let reg = Registry::load();
    let outcome = play_game(&reg.balanced_deal, 1_000, Detect::HashSet).unwrap();
    assert_eq!((outcome.lead_in, outcome.period), (Some(4), Some(62)));
    let emitted = outcome.cycle_states.unwrap();
    let mut published = reg.cycle.clone();
    published.rotate_left(3);
    assert_eq!(emitted, published);
    LoopTrace::new(reg.cycle.clone()).unwrap();
}

#[test]
fn every_piece_certifies_and_every_construction_loops() {
    let reg = Registry::load();
    let filter = Piece::default_filter();
    for piece in &reg.pieces {
        Piece::certify(piece.clone(), &filter, TEMPLATE_BUDGET).unwrap_or_else(|e| panic!("{piece}: {e}"));
    }
    for deal in reg.constructions.iter().chain([&reg.extended_deck, &reg.unbalanced_standard, &reg.six_card_game]) {
        let outcome = play_game(deal, 100_000, Detect::Brent).unwrap();
        assert_eq!(outcome.kind, OutcomeKind::NonTerminating, "{}", deal.to_line());
    }
}

#[test]
fn trimming_the_extended_deck_by_mutation_finds_the_standard_deck() {
    let reg = Registry::load();
    let trimmed = trimmed_extended_deck(&reg.extended_deck).unwrap();
    assert!(trimmed.composition().is_standard());
    let start = reg.extended_deck.hand1.to_string().find("A---J").unwrap();
    let options = MutateOptions { region: Some(start..start + 5), ..MutateOptions::new(&[EditOp::Remove], 3) };
    let variants = mutate(&reg.extended_deck, &options);
    assert!(variants.contains(&trimmed), "{} variants", variants.len());
    assert!(variants.iter().all(|v| v.total_cards() >= 52));
}

#[test]
fn expansion_either_loops_or_reports_the_terminating_game() {
    let reg = Registry::load();
    let mut traces = vec![LoopTrace::new(reg.cycle.clone()).unwrap()];
    let six = play_game(&reg.six_card_game, 100, Detect::HashSet).unwrap();
    traces.push(LoopTrace::from_outcome(&six).unwrap().unwrap());
    for trace in traces {
        match expand_loop(&trace) {
            Ok(state) => assert!(play_game(&state, 100_000, Detect::Brent).unwrap().is_non_terminating()),
            Err(bmn::construct::ConstructError::ExpansionNotNonTerminating { outcome, .. }) => {
                assert_ne!(outcome.kind, OutcomeKind::NonTerminating)
            }
            Err(e) => panic!("{e}"),
        }
    }
}

#[test]
fn doubled_six_card_deal_loops() {
    let doubled = repeat_deal(&GameState::parse("J-- / -J- (1)").unwrap(), 2);
    assert_eq!(doubled, GameState::parse("J--J-- / -J--J- (1)").unwrap());
    assert!(play_game(&doubled, 1_000, Detect::HashSet).unwrap().is_non_terminating());
}

#[test]
fn unbalanced_decks_have_no_balanced_state_in_their_family() {
    let reg = Registry::load();
    let trimmed = trimmed_extended_deck(&reg.extended_deck).unwrap();
    for deal in [&reg.extended_deck, &reg.unbalanced_standard, &trimmed] {
        let outcome = play_game(deal, 100_000, Detect::HashSet).unwrap();
        let cycle = outcome.cycle_states.unwrap();
        assert!(cycle.iter().all(|s| !s.is_balanced()), "{}", deal.to_line());
        let closure = backward_closure(&cycle, 1_000, 2_000_000);
        assert_eq!(closure.budget_hit, None);
        assert!(balanced_members(&closure.nodes).is_empty(), "{}", deal.to_line());
    }
}
