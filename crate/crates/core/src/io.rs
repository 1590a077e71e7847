//! On-disk MDP format: a little-endian binary layout and a JSON mirror.
//!
//! Binary layout: magic `BRDGMDP1`; u64 `S`, `A`, `T`, `start_state`; f64
//! discount; `S` terminal-flag bytes; `S×A` i64 transitions; `S×A` f64 rewards.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::mdp::TabularMdp;

pub const MAGIC: &[u8; 8] = b"BRDGMDP1";
pub const JSON_MAX_ENTRIES: usize = 100_000;
const HEADER_LEN: usize = 8 + 4 * 8 + 8;

pub fn to_bytes(mdp: &TabularMdp) -> Vec<u8> {
    let sa = mdp.num_states * mdp.num_actions;
    let mut out = Vec::with_capacity(HEADER_LEN + mdp.num_states + 16 * sa);
    out.extend_from_slice(MAGIC);
    for v in [mdp.num_states, mdp.num_actions, mdp.horizon, mdp.start_state] {
        out.extend_from_slice(&(v as u64).to_le_bytes());
    }
    out.extend_from_slice(&mdp.discount.to_le_bytes());
    out.extend(mdp.terminal_flags.iter().map(|&f| f as u8));
    for &n in &mdp.transitions {
        out.extend_from_slice(&(n as i64).to_le_bytes());
    }
    for &r in &mdp.rewards {
        out.extend_from_slice(&r.to_le_bytes());
    }
    out
}

pub fn from_bytes(bytes: &[u8]) -> Result<TabularMdp> {
    let first = bytes.iter().find(|b| !b.is_ascii_whitespace());
    if first == Some(&b'{') {
        return from_json(bytes);
    }
    if bytes.len() < MAGIC.len() {
        return if MAGIC.starts_with(bytes) {
            Err(Error::SizeMismatch(format!("file is {} bytes, shorter than the header", bytes.len())))
        } else {
            Err(Error::BadMagic)
        };
    }
    if &bytes[..8] != MAGIC {
        return Err(Error::BadMagic);
    }
    if bytes.len() < HEADER_LEN {
        return Err(Error::SizeMismatch(format!("file is {} bytes, header needs {HEADER_LEN}", bytes.len())));
    }
    let u64_at = |i: usize| u64::from_le_bytes(bytes[i..i + 8].try_into().unwrap());
    let to_usize = |v: u64, what: &str| {
        usize::try_from(v).map_err(|_| Error::SizeMismatch(format!("{what} = {v} does not fit in memory")))
    };
    let num_states = to_usize(u64_at(8), "S")?;
    let num_actions = to_usize(u64_at(16), "A")?;
    let horizon = to_usize(u64_at(24), "T")?;
    let start_state = to_usize(u64_at(32), "start_state")?;
    let discount = f64::from_le_bytes(bytes[40..48].try_into().unwrap());

    let sa = num_states
        .checked_mul(num_actions)
        .ok_or_else(|| Error::SizeMismatch("S×A overflows".into()))?;
    let expected = sa
        .checked_mul(16)
        .and_then(|x| x.checked_add(HEADER_LEN + num_states))
        .ok_or_else(|| Error::SizeMismatch("table sizes overflow".into()))?;
    if bytes.len() != expected {
        return Err(Error::SizeMismatch(format!(
            "S={num_states}, A={num_actions} needs {expected} bytes, file has {}",
            bytes.len()
        )));
    }

    let mut pos = HEADER_LEN;
    let mut terminal_flags = Vec::with_capacity(num_states);
    for &b in &bytes[pos..pos + num_states] {
        match b {
            0 => terminal_flags.push(false),
            1 => terminal_flags.push(true),
            other => return Err(Error::Format(format!("terminal flag byte {other}"))),
        }
    }
    pos += num_states;
    let mut transitions = Vec::with_capacity(sa);
    for i in 0..sa {
        let v = i64::from_le_bytes(bytes[pos + 8 * i..pos + 8 * i + 8].try_into().unwrap());
        let v = usize::try_from(v).map_err(|_| Error::Format(format!("negative transition entry {v} at index {i}")))?;
        transitions.push(v);
    }
    pos += 8 * sa;
    let rewards = (0..sa)
        .map(|i| f64::from_le_bytes(bytes[pos + 8 * i..pos + 8 * i + 8].try_into().unwrap()))
        .collect();
    Ok(TabularMdp {
        num_states,
        num_actions,
        horizon,
        start_state,
        discount,
        terminal_flags,
        transitions,
        rewards,
    })
}

fn from_json(bytes: &[u8]) -> Result<TabularMdp> {
    let mdp: TabularMdp = serde_json::from_slice(bytes).map_err(|e| Error::Format(e.to_string()))?;
    let sa = mdp.num_states * mdp.num_actions;
    if mdp.transitions.len() != sa || mdp.rewards.len() != sa || mdp.terminal_flags.len() != mdp.num_states {
        return Err(Error::SizeMismatch(format!(
            "S={}, A={} but tables have {} transitions, {} rewards, {} flags",
            mdp.num_states,
            mdp.num_actions,
            mdp.transitions.len(),
            mdp.rewards.len(),
            mdp.terminal_flags.len()
        )));
    }
    Ok(mdp)
}

pub fn to_json(mdp: &TabularMdp) -> Result<String> {
    if mdp.num_states * mdp.num_actions > JSON_MAX_ENTRIES {
        return Err(Error::Invalid(format!(
            "JSON mirror supports at most {JSON_MAX_ENTRIES} state-action pairs"
        )));
    }
    serde_json::to_string(mdp).map_err(|e| Error::Format(e.to_string()))
}

pub fn save(mdp: &TabularMdp, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, to_bytes(mdp))?;
    Ok(())
}

pub fn save_json(mdp: &TabularMdp, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, to_json(mdp)?)?;
    Ok(())
}

/// Loads either format, detected from the leading bytes.
pub fn load(path: impl AsRef<Path>) -> Result<TabularMdp> {
    from_bytes(&fs::read(path)?)
}
