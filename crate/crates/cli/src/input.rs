use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};

use bmn::GameState;

use crate::{StateInput, Usage};

pub fn read_state(input: &StateInput) -> Result<GameState> {
    let text = match (&input.state, &input.file) {
        (Some(text), _) => text.clone(),
        (None, Some(path)) => fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?,
        (None, None) => return Err(Usage("give a deal inline or with --file".into()).into()),
    };
    let state = GameState::parse(&text).with_context(|| format!("parsing deal {:?}", text.trim()))?;
    if state.hand(state.leader).is_empty() {
        return Err(Usage(format!("player {} leads with an empty hand", state.leader)).into());
    }
    Ok(state)
}

/// Non-empty, non-comment lines of `path`, each parsed as a state.
pub fn read_state_list(path: &Path) -> Result<Vec<GameState>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
        .map(|(i, l)| GameState::parse(l).with_context(|| format!("{}:{}", path.display(), i + 1)))
        .collect()
}

/// Writes `text` to `path`, or to standard output.
pub fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).context("writing to standard output")?;
            out.flush().context("writing to standard output")
        }
    }
}
