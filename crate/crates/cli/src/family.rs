use std::fmt::Write as _;

use anyhow::Result;
use serde_json::json;

use bmn::registry::Registry;
use bmn::reverse::{backward_closure, to_dot};

use crate::input::{emit, read_state_list};
use crate::{BackwardArgs, FamilyFormat, Usage};

pub fn backward(args: &BackwardArgs) -> Result<u8> {
    let anchors = match &args.anchors {
        Some(path) => read_state_list(path)?,
        None => Registry::load().cycle,
    };
    if anchors.is_empty() {
        return Err(Usage("no anchor states given".into()).into());
    }
    let closure = backward_closure(&anchors, args.max_depth, args.max_states);
    let text = match args.format {
        FamilyFormat::Dot => to_dot(&closure),
        FamilyFormat::Json => {
            let mut out = String::new();
            for node in closure.nodes.iter().filter(|n| !args.report_balanced || n.state.is_balanced()) {
                writeln!(out, "{}", serde_json::to_string(node)?)?;
            }
            out
        }
    };
    emit(args.out.as_deref(), &text)?;
    let counts = closure.family_counts();
    eprintln!(
        "{}",
        json!({
            "anchors": anchors.len(),
            "counts": counts,
            "budgetHit": closure.budget_hit,
            "maxDepth": closure.nodes.iter().map(|n| n.depth).max(),
        })
    );
    Ok(0)
}
