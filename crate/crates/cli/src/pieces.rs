use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use serde_json::json;

use bmn::construct::{
    assemble_deck, enumerate_pieces, lead_swap_profile, shortlex, ConstructError, EnumerationMode, Piece,
};
use bmn::CardSeq;

use crate::input::emit;
use crate::{AssembleArgs, EnumerationArg, SearchPiecesArgs, Usage};

/// Backward-play depth used to profile each stored piece.
const LEAD_SWAP_DEPTH: u32 = 3;

/// Certified class representatives, with the settings that certified them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PieceStore {
    pub filter: CardSeq,
    pub budget: u64,
    pub pieces: Vec<CardSeq>,
}

impl PieceStore {
    pub fn header(&self) -> String {
        format!("# filter={} budget={}", self.filter, self.budget)
    }

    pub fn parse(text: &str) -> Result<PieceStore, Usage> {
        let mut lines = text.lines();
        let header = lines.next().unwrap_or_default();
        let fields = header.strip_prefix("# ").ok_or_else(|| Usage("piece store has no header line".into()))?;
        let (mut filter, mut budget) = (None, None);
        for field in fields.split_whitespace() {
            match field.split_once('=') {
                Some(("filter", v)) => filter = CardSeq::parse(v).ok(),
                Some(("budget", v)) => budget = v.parse().ok(),
                _ => {}
            }
        }
        let (Some(filter), Some(budget)) = (filter, budget) else {
            return Err(Usage(format!("bad piece store header {header:?}")));
        };
        let pieces = lines
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'))
            .map(|(i, l)| CardSeq::parse(l.trim()).map_err(|e| Usage(format!("piece store line {}: {e}", i + 2))))
            .collect::<Result<_, _>>()?;
        Ok(PieceStore { filter, budget, pieces })
    }

    pub fn to_text(&self) -> String {
        let mut out = self.header();
        out.push('\n');
        for p in &self.pieces {
            out.push_str(&p.to_string());
            out.push('\n');
        }
        out
    }

    pub fn read(path: &Path) -> Result<Option<PieceStore>> {
        match fs::read_to_string(path) {
            Ok(text) => Ok(Some(PieceStore::parse(&text).with_context(|| path.display().to_string())?)),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(e).with_context(|| format!("reading {}", path.display())),
        }
    }
}

fn piece(text: &str) -> Result<Piece> {
    let cards = CardSeq::parse(text).with_context(|| format!("piece {text:?}"))?;
    Piece::new(cards).map_err(|e| Usage(e.to_string()).into())
}

pub fn search_pieces(args: &SearchPiecesArgs) -> Result<u8> {
    let filter = Piece { certified: true, ..piece(&args.filter_piece)? };
    let mode = match args.mode {
        EnumerationArg::Base4 => EnumerationMode::Base4,
        EnumerationArg::Multiset => {
            let text = args.multiset.as_deref().unwrap_or_default();
            let cards = CardSeq::parse(text).with_context(|| format!("multiset {text:?}"))?;
            EnumerationMode::Multiset(cards.composition())
        }
    };
    if args.mode == EnumerationArg::Base4 && args.max_len > 40 {
        return Err(Usage("--max-len is at most 40".into()).into());
    }
    let mut store = match PieceStore::read(&args.out)? {
        Some(existing) if existing.filter != filter.cards || existing.budget != args.budget => {
            return Err(Usage(format!(
                "{} was built with {}; pass matching --filter-piece and --budget",
                args.out.display(),
                existing.header()
            ))
            .into())
        }
        Some(existing) => existing,
        None => PieceStore { filter: filter.cards.clone(), budget: args.budget, pieces: Vec::new() },
    };

    let catalog = args.workers.install(|| enumerate_pieces(args.max_len, &mode, &filter, args.budget));
    let mut added = Vec::new();
    for class in &catalog.classes {
        if store.pieces.iter().any(|p| class.members.contains(p)) {
            continue;
        }
        store.pieces.push(class.representative.cards.clone());
        added.push(class);
    }
    store.pieces.sort_by(shortlex);
    emit(Some(&args.out), &store.to_text())?;

    let report = json!({
        "candidatesTested": catalog.candidates_tested,
        "certified": catalog.certified.len(),
        "classes": catalog.classes.len(),
        "stored": store.pieces.len(),
        "added": added.iter().map(|c| json!({
            "piece": c.representative.cards,
            "classSize": c.members.len(),
            "leadSwap": lead_swap_profile(&c.representative, LEAD_SWAP_DEPTH),
        })).collect::<Vec<_>>(),
    });
    println!("{report}");
    Ok(0)
}

pub fn assemble(args: &AssembleArgs) -> Result<u8> {
    let pieces: Vec<Piece> = match &args.store {
        Some(path) => {
            let store =
                PieceStore::read(path)?.ok_or_else(|| Usage(format!("no piece store at {}", path.display())))?;
            store.pieces.into_iter().map(|cards| Piece { cards, certified: true }).collect()
        }
        None => args.pieces.iter().map(|p| piece(p)).collect::<Result<_>>()?,
    };
    match assemble_deck(&pieces) {
        Ok(assembly) => {
            let c = assembly.composition;
            println!(
                "{}",
                json!({
                    "state": assembly.state,
                    "composition": c,
                    "standard": c.is_standard(),
                    "outcome": assembly.outcome,
                })
            );
            Ok(0)
        }
        Err(ConstructError::AssemblyNotNonTerminating { state, outcome, .. }) => {
            println!("{}", json!({ "state": state, "outcome": outcome }));
            eprintln!("assembled deal {} does not loop", state.to_line());
            Ok(1)
        }
        Err(e) => Err(Usage(e.to_string()).into()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn store_text_round_trips() {
        let store = PieceStore {
            filter: CardSeq::parse("--K---A----AA").unwrap(),
            budget: 10_000,
            pieces: vec![CardSeq::parse("--").unwrap(), CardSeq::parse("--Q-Q").unwrap()],
        };
        let text = store.to_text();
        assert!(text.starts_with("# filter=--K---A----AA budget=10000\n"));
        assert_eq!(PieceStore::parse(&text).unwrap(), store);
    }

    #[test]
    fn store_without_header_is_rejected() {
        assert!(PieceStore::parse("--\n--Q-Q\n").is_err());
        assert!(PieceStore::parse("# filter=--K budget=x\n").is_err());
    }
}
