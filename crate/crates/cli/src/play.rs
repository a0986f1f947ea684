use std::io::{BufWriter, Write};

use anyhow::{Context, Result};
use serde_json::json;

use bmn::construct::{self, expand_loop, repeat_deal, ConstructError, LoopTrace, MutateOptions};
use bmn::engine::{Step, Table};
use bmn::{play_game, Detect, OutcomeKind};

use crate::input::read_state;
use crate::{ExpandArgs, MutateArgs, SimulateArgs, Usage};

pub fn exit_for(kind: OutcomeKind) -> u8 {
    match kind {
        OutcomeKind::Terminated => 0,
        OutcomeKind::NonTerminating => 2,
        OutcomeKind::CutOff => 3,
    }
}

pub fn simulate(args: &SimulateArgs) -> Result<u8> {
    let state = read_state(&args.input)?;
    let outcome = play_game(&state, args.max_tricks, args.detect.into())?;
    let mut out = BufWriter::new(std::io::stdout().lock());
    if args.trace {
        let mut table = Table::new(&state);
        writeln!(out, "{}", state.to_line())?;
        for _ in 0..outcome.tricks {
            if let Step::Ended { .. } = table.play_trick() {
                break;
            }
            writeln!(out, "{}", table.state().to_line())?;
        }
    }
    writeln!(out, "{}", serde_json::to_string(&outcome)?)?;
    out.flush()?;
    Ok(exit_for(outcome.kind))
}

pub fn expand(args: &ExpandArgs) -> Result<u8> {
    let state = read_state(&args.input)?;
    let expanded = if let Some(times) = args.repeat {
        repeat_deal(&state, times)
    } else {
        let outcome = play_game(&state, args.max_tricks, Detect::HashSet)?;
        let trace = LoopTrace::from_outcome(&outcome)
            .ok_or_else(|| Usage(format!("the deal does not loop ({:?})", outcome.kind)))??;
        match expand_loop(&trace) {
            Ok(expanded) => expanded,
            Err(ConstructError::ExpansionNotNonTerminating { state, outcome }) => {
                eprintln!("the joined loop states terminate: {}", serde_json::to_string(&outcome)?);
                println!("{}", json!({ "state": state, "nonTerminating": false }));
                return Ok(1);
            }
            Err(e) => return Err(e.into()),
        }
    };
    let outcome = play_game(&expanded, args.max_tricks, Detect::HashSet)?;
    println!("{}", json!({ "state": expanded, "nonTerminating": outcome.is_non_terminating(), "outcome": outcome }));
    Ok(if outcome.is_non_terminating() { 0 } else { 1 })
}

pub fn mutate(args: &MutateArgs) -> Result<u8> {
    let state = read_state(&args.input)?;
    let deck = state.total_cards();
    if let Some(region) = &args.region {
        if region.end > deck {
            return Err(Usage(format!("region {region:?} is outside the {deck}-card deck")).into());
        }
    }
    let ops: Vec<_> = args.ops.iter().map(|&o| o.into()).collect();
    let options = MutateOptions {
        budget_tricks: args.budget,
        region: args.region.clone(),
        ..MutateOptions::new(&ops, args.max_edits as usize)
    };
    let variants = args.workers.install(|| construct::mutate(&state, &options));
    let mut out = BufWriter::new(std::io::stdout().lock());
    for v in &variants {
        writeln!(out, "{}", v.to_line())?;
    }
    out.flush().context("writing variants")?;
    eprintln!("{} looping variants", variants.len());
    Ok(0)
}
