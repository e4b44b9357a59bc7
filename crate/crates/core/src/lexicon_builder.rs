//! Pronunciation-lexicon construction: frequency-ranked token selection,
//! script standardization, variant canonicalization, G2P, and Kaldi-style
//! emission.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::g2p::{g2p, ConstraintSet, G2pError};
use crate::normalizer::{standardize, RuleError, RuleTable};
use crate::num::Real;
use crate::script_model::ScriptModel;

/// Embedded copy of the shipped variant groups.
pub const DEFAULT_VARIANT_GROUPS_TSV: &str = include_str!("../data/variant_groups.tsv");

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LexiconEntry {
    /// Standardized written form; a fixed point of the rule table.
    pub surface: String,
    pub pronunciations: Vec<Vec<String>>,
    pub frequency: u64,
    pub variant_group: Option<String>,
    pub canonical: bool,
}

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("variant group {0:?} has no members in the lexicon")]
    EmptyGroup(String),
    #[error("variant group file line {line}: {msg}")]
    Malformed { line: usize, msg: String },
    #[error(transparent)]
    Rule(#[from] RuleError),
}

/// Top-k tokens by frequency, ties by grapheme lexicographic order.
/// When k exceeds the vocabulary the whole vocabulary is returned and
/// `truncated` is false with `short` set, signalling the warning.
#[derive(Debug, Clone)]
pub struct FrequentTokens {
    pub tokens: Vec<(String, u64)>,
    /// True when the vocabulary was smaller than the requested k.
    pub short: bool,
}

pub fn extract_frequent_tokens(
    frequencies: &BTreeMap<String, u64>,
    k: usize,
) -> FrequentTokens {
    assert!(k >= 1, "k must be at least 1");
    let mut tokens: Vec<(String, u64)> = frequencies
        .iter()
        .map(|(t, &f)| (t.clone(), f))
        .collect();
    tokens.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    let short = k > tokens.len();
    tokens.truncate(k);
    FrequentTokens { tokens, short }
}

/// Parse the variant-group file: TSV `group_id<TAB>surface`.
pub fn parse_variant_groups(data: &str) -> Result<BTreeMap<String, Vec<String>>, LexiconError> {
    let mut groups: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for (idx, raw) in data.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim_end_matches('\r');
        if trimmed.trim().is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let (group, surface) = trimmed.split_once('\t').ok_or(LexiconError::Malformed {
            line,
            msg: "expected group_id<TAB>surface".into(),
        })?;
        groups
            .entry(group.to_string())
            .or_default()
            .push(surface.to_string());
    }
    Ok(groups)
}

/// Mark the maximum-frequency member of each group canonical and attach
/// every member's pronunciations to the canonical entry as alternates.
/// Groups with no member present in the entry list are an error.
pub fn canonicalize_variants(
    mut entries: Vec<LexiconEntry>,
    variant_groups: &BTreeMap<String, Vec<String>>,
) -> Result<Vec<LexiconEntry>, LexiconError> {
    let index: BTreeMap<String, usize> = entries
        .iter()
        .enumerate()
        .map(|(i, e)| (e.surface.clone(), i))
        .collect();
    for (group, surfaces) in variant_groups {
        let members: Vec<usize> = surfaces
            .iter()
            .filter_map(|s| index.get(s).copied())
            .collect();
        if members.is_empty() {
            return Err(LexiconError::EmptyGroup(group.clone()));
        }
        let canonical = members
            .iter()
            .copied()
            .max_by(|&a, &b| {
                entries[a]
                    .frequency
                    .cmp(&entries[b].frequency)
                    .then_with(|| entries[b].surface.cmp(&entries[a].surface))
            })
            .expect("non-empty members");
        let mut union: Vec<Vec<String>> = Vec::new();
        for &i in &members {
            for pron in &entries[i].pronunciations {
                if !union.contains(pron) {
                    union.push(pron.clone());
                }
            }
        }
        union.sort();
        for &i in &members {
            entries[i].variant_group = Some(group.clone());
            entries[i].canonical = i == canonical;
        }
        entries[canonical].pronunciations = union;
    }
    Ok(entries)
}

/// A token the pipeline could not convert, with the reason.
#[derive(Debug, Clone)]
pub struct RejectedToken {
    pub token: String,
    pub reason: String,
}

#[derive(Debug)]
pub struct LexiconBuild {
    pub entries: Vec<LexiconEntry>,
    /// G2P failures (digits, foreign letters); never dropped silently.
    pub rejects: Vec<RejectedToken>,
}

/// Manual override action applied after the automatic pipeline.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Override {
    Keep,
    Drop,
    Replace(Vec<String>),
}

/// Parse the override file: TSV `surface<TAB>keep|drop|replace<TAB>[phones]`.
pub fn parse_overrides(data: &str) -> Result<BTreeMap<String, Override>, LexiconError> {
    let mut map = BTreeMap::new();
    for (idx, raw) in data.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim_end_matches('\r');
        if trimmed.trim().is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split('\t').collect();
        let action = match (fields.len(), fields.get(1).copied()) {
            (2, Some("keep")) => Override::Keep,
            (2, Some("drop")) => Override::Drop,
            (3, Some("replace")) => Override::Replace(
                fields[2].split_whitespace().map(|p| p.to_string()).collect(),
            ),
            _ => {
                return Err(LexiconError::Malformed {
                    line,
                    msg: "expected surface<TAB>keep|drop|replace[<TAB>phones]".into(),
                })
            }
        };
        map.insert(fields[0].to_string(), action);
    }
    Ok(map)
}

/// Full pipeline: standardize, merge tokens that collapse to the same
/// standard form (frequencies summed), canonicalize variants, convert
/// each surviving surface, then apply manual overrides.
pub fn build_lexicon<F: Real>(
    model: &ScriptModel,
    tokens: &[(String, u64)],
    rules: &RuleTable,
    constraints: &ConstraintSet<F>,
    variant_groups: &BTreeMap<String, Vec<String>>,
    overrides: &BTreeMap<String, Override>,
) -> Result<LexiconBuild, LexiconError> {
    let mut merged: BTreeMap<String, u64> = BTreeMap::new();
    let mut rejects = Vec::new();
    for (token, freq) in tokens {
        match standardize(token, rules) {
            Ok(standard) => *merged.entry(standard).or_insert(0) += freq,
            Err(e @ RuleError::NoFixedPoint { .. }) => rejects.push(RejectedToken {
                token: token.clone(),
                reason: e.to_string(),
            }),
            Err(e) => return Err(e.into()),
        }
    }
    let mut entries: Vec<LexiconEntry> = Vec::new();
    for (surface, frequency) in merged {
        match g2p(model, &surface, constraints) {
            Ok(out) => entries.push(LexiconEntry {
                surface,
                pronunciations: vec![out.best.phones],
                frequency,
                variant_group: None,
                canonical: true,
            }),
            Err(e @ (G2pError::UnknownGrapheme(_) | G2pError::NoCandidate)) => {
                rejects.push(RejectedToken {
                    token: surface,
                    reason: e.to_string(),
                })
            }
        }
    }
    let mut entries = canonicalize_variants(entries, variant_groups)?;
    entries.retain_mut(|entry| match overrides.get(&entry.surface) {
        None | Some(Override::Keep) => true,
        Some(Override::Drop) => false,
        Some(Override::Replace(phones)) => {
            entry.pronunciations = vec![phones.clone()];
            true
        }
    });
    Ok(LexiconBuild { entries, rejects })
}

/// Emission options. `merge_ix` maps the unwritten vowel onto "i" for
/// acoustic models that do not model it separately; off by default.
#[derive(Debug, Clone, Copy, Default)]
pub struct EmitOptions {
    pub merge_ix: bool,
}

/// Render entries as `surface<TAB>phone phone ...`, one line per
/// (surface, pronunciation), sorted by surface then pronunciation, with
/// duplicates removed.
pub fn emit_lexicon(entries: &[LexiconEntry], opts: EmitOptions) -> String {
    let mut lines: Vec<(String, String)> = Vec::new();
    for entry in entries {
        for pron in &entry.pronunciations {
            let rendered: Vec<&str> = pron
                .iter()
                .map(|p| {
                    if opts.merge_ix && p == "ix" {
                        "i"
                    } else {
                        p.as_str()
                    }
                })
                .collect();
            lines.push((entry.surface.clone(), rendered.join(" ")));
        }
    }
    lines.sort();
    lines.dedup();
    let mut out = String::new();
    for (surface, pron) in lines {
        out.push_str(&surface);
        out.push('\t');
        out.push_str(&pron);
        out.push('\n');
    }
    out
}

/// Inverse of [`emit_lexicon`] over the written fields: surfaces and
/// pronunciations (frequencies and group links are not stored on disk).
pub fn parse_lexicon(data: &str) -> Result<Vec<LexiconEntry>, LexiconError> {
    let mut by_surface: BTreeMap<String, Vec<Vec<String>>> = BTreeMap::new();
    for (idx, raw) in data.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim_end_matches('\r');
        if trimmed.trim().is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let (surface, pron) = trimmed.split_once('\t').ok_or(LexiconError::Malformed {
            line,
            msg: "expected surface<TAB>phones".into(),
        })?;
        by_surface
            .entry(surface.to_string())
            .or_default()
            .push(pron.split_whitespace().map(|p| p.to_string()).collect());
    }
    Ok(by_surface
        .into_iter()
        .map(|(surface, mut pronunciations)| {
            pronunciations.sort();
            pronunciations.dedup();
            LexiconEntry {
                surface,
                pronunciations,
                frequency: 0,
                variant_group: None,
                canonical: true,
            }
        })
        .collect())
}
