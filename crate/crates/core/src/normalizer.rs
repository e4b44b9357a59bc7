//! Unicode normalization, tokenization and script standardization of
//! Central Kurdish text.
//!
//! Kurdish text in the wild mixes Arabic and Persian codepoints with the
//! Kurdish ones (ك vs ک, ي vs ی), presentation forms, and stray
//! diacritics. `normalize_unicode` maps everything onto the canonical
//! Sorani codepoints. `standardize` then rewrites spelling variants to a
//! single written form using a rule table.

use std::collections::BTreeMap;

use thiserror::Error;
use unicode_normalization::UnicodeNormalization;

/// Embedded copy of the shipped standardization rule table.
pub const DEFAULT_RULES_TSV: &str = include_str!("../data/standardization_rules.tsv");

#[derive(Debug, Clone)]
pub struct NormalizeOptions {
    /// Strip Arabic harakat and tanwin marks.
    pub strip_diacritics: bool,
    /// Drop zero-width non-joiners (the standard keyboard layout writes
    /// ە instead of ه + ZWNJ).
    pub strip_zwnj: bool,
}

impl Default for NormalizeOptions {
    fn default() -> Self {
        NormalizeOptions {
            strip_diacritics: true,
            strip_zwnj: true,
        }
    }
}

#[derive(Debug, Error)]
pub enum NormalizeError {
    #[error("input is not valid UTF-8 at byte {0}")]
    InvalidEncoding(usize),
}

/// Visual-variant map onto canonical Kurdish codepoints.
fn map_char(c: char) -> Option<&'static str> {
    Some(match c {
        'ي' | 'ى' | 'ے' => "ی",
        'ك' | 'ڪ' => "ک",
        'ة' => "ە",
        'ھ' => "ه",
        'أ' | 'إ' | 'ٱ' => "ا",
        'آ' => "ئا",
        'ؤ' => "و",
        '\u{0640}' => "", // tatweel
        _ => return None,
    })
}

fn is_harakat(c: char) -> bool {
    matches!(c, '\u{064B}'..='\u{0652}' | '\u{0670}')
}

/// Normalize raw bytes; fails on invalid UTF-8.
pub fn normalize_bytes(raw: &[u8], opts: &NormalizeOptions) -> Result<String, NormalizeError> {
    let text = std::str::from_utf8(raw)
        .map_err(|e| NormalizeError::InvalidEncoding(e.valid_up_to()))?;
    Ok(normalize_unicode(text, opts))
}

/// Map Arabic/Persian visual variants to canonical Kurdish codepoints,
/// decompose presentation forms, strip diacritics per config and collapse
/// whitespace. Idempotent.
pub fn normalize_unicode(raw: &str, opts: &NormalizeOptions) -> String {
    let mut mapped = String::with_capacity(raw.len());
    for c in raw.nfkc() {
        if opts.strip_zwnj && c == '\u{200C}' {
            continue;
        }
        if opts.strip_diacritics && is_harakat(c) {
            continue;
        }
        match map_char(c) {
            Some(s) => mapped.push_str(s),
            None => mapped.push(c),
        }
    }
    // collapse whitespace runs and trim
    let mut out = String::with_capacity(mapped.len());
    let mut pending_space = false;
    for c in mapped.chars() {
        if c.is_whitespace() {
            pending_space = !out.is_empty();
        } else {
            if pending_space {
                out.push(' ');
                pending_space = false;
            }
            out.push(c);
        }
    }
    out
}

/// Pause strength of a punctuation mark.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum PauseClass {
    SentenceFinal,
    Separator,
    Bracket,
    Other,
}

pub fn is_punctuation(c: char) -> bool {
    c.is_ascii_punctuation()
        || matches!(
            c,
            '،' | '؛' | '؟' | '٪' | '«' | '»' | '…' | '—' | '–' | '“' | '”' | '‘' | '’'
        )
}

pub fn pause_class(c: char) -> PauseClass {
    match c {
        '.' | '!' | '?' | '؟' | '…' => PauseClass::SentenceFinal,
        ',' | '،' | ';' | '؛' | ':' => PauseClass::Separator,
        '(' | ')' | '[' | ']' | '{' | '}' | '«' | '»' | '"' | '“' | '”' | '‘' | '’' => {
            PauseClass::Bracket
        }
        _ => PauseClass::Other,
    }
}

/// One item of a tokenized stream. `joined_left` records whether the item
/// was glued to the previous one (no intervening space), so the stream
/// reconstructs the normalized input exactly.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StreamItem {
    Token { text: String, joined_left: bool },
    Pause { class: PauseClass, text: String, joined_left: bool },
}

impl StreamItem {
    pub fn text(&self) -> &str {
        match self {
            StreamItem::Token { text, .. } | StreamItem::Pause { text, .. } => text,
        }
    }
    pub fn joined_left(&self) -> bool {
        match self {
            StreamItem::Token { joined_left, .. } | StreamItem::Pause { joined_left, .. } => {
                *joined_left
            }
        }
    }
    pub fn is_pause(&self) -> bool {
        matches!(self, StreamItem::Pause { .. })
    }
}

/// Lossless tokenization of normalized text.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TokenStream {
    pub items: Vec<StreamItem>,
}

impl TokenStream {
    pub fn tokens(&self) -> impl Iterator<Item = &str> {
        self.items.iter().filter_map(|i| match i {
            StreamItem::Token { text, .. } => Some(text.as_str()),
            _ => None,
        })
    }

    pub fn pause_count(&self) -> usize {
        self.items.iter().filter(|i| i.is_pause()).count()
    }

    /// Inverse of `tokenize` over normalized text.
    pub fn reconstruct(&self) -> String {
        let mut out = String::new();
        for (i, item) in self.items.iter().enumerate() {
            if i > 0 && !item.joined_left() {
                out.push(' ');
            }
            out.push_str(item.text());
        }
        out
    }
}

/// Split normalized text into word tokens and per-punctuation pauses.
pub fn tokenize(text: &str) -> TokenStream {
    let mut items = Vec::new();
    let mut current = String::new();
    let mut current_joined = false;
    let mut after_space = true;
    fn flush(current: &mut String, items: &mut Vec<StreamItem>, joined: bool) {
        if !current.is_empty() {
            items.push(StreamItem::Token {
                text: std::mem::take(current),
                joined_left: joined,
            });
        }
    }
    for c in text.chars() {
        if c == ' ' {
            flush(&mut current, &mut items, current_joined);
            after_space = true;
        } else if is_punctuation(c) {
            let glued = !after_space;
            flush(&mut current, &mut items, current_joined);
            items.push(StreamItem::Pause {
                class: pause_class(c),
                text: c.to_string(),
                joined_left: glued && !items.is_empty(),
            });
            after_space = false;
        } else {
            if current.is_empty() {
                current_joined = !after_space && !items.is_empty();
            }
            current.push(c);
            after_space = false;
        }
    }
    flush(&mut current, &mut items, current_joined);
    TokenStream { items }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum RuleCategory {
    CharacterMap,
    VerbMorphology,
    NounAdjectiveMorphology,
    LoanwordVariant,
}

impl RuleCategory {
    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "character-map" => RuleCategory::CharacterMap,
            "verb-morphology" => RuleCategory::VerbMorphology,
            "noun-adjective-morphology" => RuleCategory::NounAdjectiveMorphology,
            "loanword-variant" => RuleCategory::LoanwordVariant,
            _ => return None,
        })
    }
}

/// One script-standardization rewrite. The pattern is a literal grapheme
/// string, optionally anchored with `^` (token start) and/or `$` (token
/// end).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StandardizationRule {
    pub id: String,
    pub category: RuleCategory,
    pub pattern: String,
    pub replacement: String,
    pub source: String,
    anchored_start: bool,
    anchored_end: bool,
    core: String,
}

#[derive(Debug, Error)]
pub enum RuleError {
    #[error("rule table line {line}: {msg}")]
    Malformed { line: usize, msg: String },
    #[error("rule {id}: match equals replacement")]
    SelfRewrite { id: String },
    #[error("rules {a} and {b} conflict on span {span:?} of token {token:?}")]
    RuleConflict {
        a: String,
        b: String,
        span: String,
        token: String,
    },
    #[error("token {token:?} did not reach a fixed point within {cap} rounds")]
    NoFixedPoint { token: String, cap: usize },
}

impl StandardizationRule {
    pub fn new(
        id: &str,
        category: RuleCategory,
        pattern: &str,
        replacement: &str,
        source: &str,
    ) -> Result<Self, RuleError> {
        let anchored_start = pattern.starts_with('^');
        let anchored_end = pattern.ends_with('$') && pattern.len() > 1;
        let core = pattern
            .trim_start_matches('^')
            .trim_end_matches('$')
            .to_string();
        if core == replacement {
            return Err(RuleError::SelfRewrite { id: id.to_string() });
        }
        Ok(StandardizationRule {
            id: id.to_string(),
            category,
            pattern: pattern.to_string(),
            replacement: replacement.to_string(),
            source: source.to_string(),
            anchored_start,
            anchored_end,
            core,
        })
    }

    /// Leftmost match of this rule in `token`, as a byte span.
    fn find(&self, token: &str) -> Option<(usize, usize)> {
        if self.core.is_empty() {
            return None;
        }
        let mut search_from = 0;
        while let Some(rel) = token[search_from..].find(&self.core) {
            let start = search_from + rel;
            let end = start + self.core.len();
            let ok_start = !self.anchored_start || start == 0;
            let ok_end = !self.anchored_end || end == token.len();
            if ok_start && ok_end {
                return Some((start, end));
            }
            search_from = start + self.core.chars().next().map_or(1, |c| c.len_utf8());
            if search_from >= token.len() {
                break;
            }
        }
        None
    }
}

/// An ordered rule table, ready to apply.
#[derive(Debug, Clone, Default)]
pub struct RuleTable {
    char_map: Vec<StandardizationRule>,
    morphology: Vec<StandardizationRule>,
}

impl RuleTable {
    pub fn new(mut rules: Vec<StandardizationRule>) -> Self {
        rules.sort_by(|a, b| a.id.cmp(&b.id));
        let (char_map, mut morphology): (Vec<_>, Vec<_>) = rules
            .into_iter()
            .partition(|r| r.category == RuleCategory::CharacterMap);
        // longest-match-first, ties by rule id
        morphology.sort_by(|a, b| {
            b.core
                .chars()
                .count()
                .cmp(&a.core.chars().count())
                .then_with(|| a.id.cmp(&b.id))
        });
        RuleTable { char_map, morphology }
    }

    /// Parse the TSV format `id<TAB>category<TAB>match<TAB>replacement<TAB>source`.
    pub fn parse(data: &str) -> Result<Self, RuleError> {
        let mut rules = Vec::new();
        for (idx, raw) in data.lines().enumerate() {
            let line = idx + 1;
            let trimmed = raw.trim_end_matches(['\r', '\n']);
            if trimmed.trim().is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = trimmed.split('\t').collect();
            if fields.len() != 5 {
                return Err(RuleError::Malformed {
                    line,
                    msg: format!("expected 5 tab-separated fields, got {}", fields.len()),
                });
            }
            let category = RuleCategory::parse(fields[1]).ok_or_else(|| RuleError::Malformed {
                line,
                msg: format!("unknown category {:?}", fields[1]),
            })?;
            rules.push(StandardizationRule::new(
                fields[0], category, fields[2], fields[3], fields[4],
            )?);
        }
        Ok(RuleTable::new(rules))
    }

    pub fn rules(&self) -> impl Iterator<Item = &StandardizationRule> {
        self.char_map.iter().chain(self.morphology.iter())
    }

    pub fn is_empty(&self) -> bool {
        self.char_map.is_empty() && self.morphology.is_empty()
    }

    /// One rewrite round: character-map rules first, then the single
    /// highest-priority morphology match. Returns the rewritten token and
    /// whether anything changed.
    fn apply_round(&self, token: &str) -> Result<(String, bool), RuleError> {
        let mut out = token.to_string();
        let mut changed = false;
        for rule in &self.char_map {
            while let Some((start, end)) = rule.find(&out) {
                out.replace_range(start..end, &rule.replacement);
                changed = true;
            }
        }
        // leftmost-longest morphology match; ties by id are already the
        // iteration order, so the first hit at the chosen span wins.
        let mut best: Option<(&StandardizationRule, usize, usize)> = None;
        for rule in &self.morphology {
            if let Some((start, end)) = rule.find(&out) {
                match best {
                    None => best = Some((rule, start, end)),
                    Some((b, bs, be)) => {
                        let better = (end - start, std::cmp::Reverse(start))
                            > (be - bs, std::cmp::Reverse(bs));
                        if (start, end) == (bs, be) && rule.replacement != b.replacement {
                            // identical span, identical priority, different output
                            return Err(RuleError::RuleConflict {
                                a: b.id.clone(),
                                b: rule.id.clone(),
                                span: out[start..end].to_string(),
                                token: token.to_string(),
                            });
                        }
                        if better {
                            best = Some((rule, start, end));
                        }
                    }
                }
            }
        }
        if let Some((rule, start, end)) = best {
            out.replace_range(start..end, &rule.replacement);
            changed = true;
        }
        Ok((out, changed))
    }
}

pub const STANDARDIZE_ROUND_CAP: usize = 100;

/// Rewrite a token to its standard form: the result is a fixed point of
/// the rule table.
pub fn standardize(token: &str, rules: &RuleTable) -> Result<String, RuleError> {
    let mut current = token.to_string();
    for _ in 0..STANDARDIZE_ROUND_CAP {
        let (next, changed) = rules.apply_round(&current)?;
        if !changed {
            return Ok(next);
        }
        current = next;
    }
    // one extra probe: accept if the cap round was already stable
    let (probe, changed) = rules.apply_round(&current)?;
    if !changed {
        return Ok(probe);
    }
    Err(RuleError::NoFixedPoint {
        token: token.to_string(),
        cap: STANDARDIZE_ROUND_CAP,
    })
}

/// Parse a correction table: TSV `variant<TAB>canonical`.
pub fn parse_correction_table(data: &str) -> BTreeMap<String, String> {
    let mut map = BTreeMap::new();
    for line in data.lines() {
        let trimmed = line.trim_end_matches(['\r']);
        if trimmed.trim().is_empty() || trimmed.starts_with('#') {
            continue;
        }
        if let Some((variant, canonical)) = trimmed.split_once('\t') {
            map.insert(variant.to_string(), canonical.to_string());
        }
    }
    map
}

/// Replace whole-token matches from the correction table; substrings are
/// never touched.
pub fn apply_correction_table(text: &str, corrections: &BTreeMap<String, String>) -> String {
    let mut stream = tokenize(text);
    for item in &mut stream.items {
        if let StreamItem::Token { text, .. } = item {
            if let Some(repl) = corrections.get(text.as_str()) {
                *text = repl.clone();
            }
        }
    }
    stream.reconstruct()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arabic_kaf_maps_to_kurdish() {
        let opts = NormalizeOptions::default();
        assert_eq!(normalize_unicode("ك\u{0648}ردی", &opts), "کوردی");
        assert_eq!(normalize_unicode("كوردی", &opts), "کوردی");
    }

    #[test]
    fn canonical_text_is_unchanged() {
        let opts = NormalizeOptions::default();
        let text = "زمانی کوردی، زمانێکی هیندوئەورووپییە";
        assert_eq!(normalize_unicode(text, &opts), text);
    }

    #[test]
    fn mixed_variants_map_in_one_pass() {
        let opts = NormalizeOptions::default();
        // oracle: sequential single replacements
        let raw = "يەكێتي";
        let oracle = raw.replace('ي', "ی").replace('ك', "ک");
        assert_eq!(normalize_unicode(raw, &opts), oracle);
    }

    #[test]
    fn normalize_is_idempotent() {
        let opts = NormalizeOptions::default();
        for raw in ["كوردي", "  دڵ   خۆش  ", "ﻻزم", "مُحَمَّد", "آوات"] {
            let once = normalize_unicode(raw, &opts);
            assert_eq!(normalize_unicode(&once, &opts), once, "input {raw:?}");
        }
    }

    #[test]
    fn normalize_bytes_rejects_bad_utf8() {
        let err = normalize_bytes(&[0xC0, 0x80], &NormalizeOptions::default());
        assert!(matches!(err, Err(NormalizeError::InvalidEncoding(_))));
    }

    #[test]
    fn zwnj_is_dropped() {
        let opts = NormalizeOptions::default();
        assert_eq!(normalize_unicode("هه\u{200C}ناسه", &opts), "ههناسه");
        let keep = NormalizeOptions {
            strip_zwnj: false,
            ..Default::default()
        };
        assert_eq!(normalize_unicode("هه\u{200C}ناسه", &keep), "هه\u{200C}ناسه");
    }

    #[test]
    fn tokenize_comma_example() {
        let stream = tokenize("دل، دل");
        let kinds: Vec<bool> = stream.items.iter().map(|i| i.is_pause()).collect();
        assert_eq!(kinds, [false, true, false]);
        assert_eq!(stream.reconstruct(), "دل، دل");
    }

    #[test]
    fn tokenize_empty() {
        assert!(tokenize("").items.is_empty());
    }

    #[test]
    fn pause_count_equals_punctuation_count() {
        let text = "ئەمە ڕستەیەکە. ئەمەش، ڕستەیەکی تر؟ بەڵێ!";
        let expected = text.chars().filter(|&c| is_punctuation(c)).count();
        assert_eq!(tokenize(text).pause_count(), expected);
    }

    #[test]
    fn tokens_never_contain_punctuation() {
        let text = "وشە«نێوان»و(کەوانە)و،هتد.";
        for tok in tokenize(text).tokens() {
            assert!(!tok.chars().any(is_punctuation), "token {tok:?}");
        }
    }

    fn table(rules: &[(&str, RuleCategory, &str, &str)]) -> RuleTable {
        RuleTable::new(
            rules
                .iter()
                .map(|(id, cat, m, r)| StandardizationRule::new(id, *cat, m, r, "test").unwrap())
                .collect(),
        )
    }

    #[test]
    fn standardize_no_match_is_identity() {
        let t = table(&[("r1", RuleCategory::NounAdjectiveMorphology, "دەس$", "دەست")]);
        assert_eq!(standardize("مامۆستا", &t).unwrap(), "مامۆستا");
    }

    #[test]
    fn standardize_reaches_fixed_point_of_chained_rules() {
        let t = table(&[
            ("r1", RuleCategory::NounAdjectiveMorphology, "AB", "B"),
            ("r2", RuleCategory::NounAdjectiveMorphology, "BB", "C"),
        ]);
        // oracle: iterate exhaustively until no change
        let mut oracle = "AABB".to_string();
        for _ in 0..100 {
            let mut next = oracle.clone();
            for r in t.rules() {
                if let Some((s, e)) = r.find(&next) {
                    next.replace_range(s..e, &r.replacement);
                    break;
                }
            }
            if next == oracle {
                break;
            }
            oracle = next;
        }
        let got = standardize("AABB", &t).unwrap();
        assert_eq!(got, oracle);
        // and the result is a fixed point
        assert_eq!(standardize(&got, &t).unwrap(), got);
    }

    #[test]
    fn conflicting_rules_are_reported() {
        let t = table(&[
            ("r1", RuleCategory::VerbMorphology, "XY", "A"),
            ("r2", RuleCategory::VerbMorphology, "XY", "B"),
        ]);
        assert!(matches!(
            standardize("XY", &t),
            Err(RuleError::RuleConflict { .. })
        ));
    }

    #[test]
    fn oscillating_rules_hit_the_cap() {
        let t = table(&[
            ("r1", RuleCategory::VerbMorphology, "A", "B"),
            ("r2", RuleCategory::VerbMorphology, "B", "A"),
        ]);
        assert!(matches!(
            standardize("A", &t),
            Err(RuleError::NoFixedPoint { .. })
        ));
    }

    #[test]
    fn anchored_rules_respect_boundaries() {
        let t = table(&[("r1", RuleCategory::NounAdjectiveMorphology, "^وو", "و")]);
        assert_eq!(standardize("ووشە", &t).unwrap(), "وشە");
        assert_eq!(standardize("هوو", &t).unwrap(), "هوو");
    }

    #[test]
    fn shipped_rule_table_parses_and_is_per_rule_idempotent() {
        let t = RuleTable::parse(DEFAULT_RULES_TSV).unwrap();
        assert!(!t.is_empty());
        for rule in t.rules() {
            // applying a rule to its own replacement changes nothing
            let single = RuleTable::new(vec![rule.clone()]);
            let once = standardize(&rule.replacement, &single).unwrap();
            assert_eq!(once, rule.replacement, "rule {}", rule.id);
        }
    }

    #[test]
    fn correction_table_whole_tokens_only() {
        let mut corr = BTreeMap::new();
        corr.insert("A".to_string(), "B".to_string());
        assert_eq!(apply_correction_table("A C A", &corr), "B C B");
        assert_eq!(apply_correction_table("AC CA AA", &corr), "AC CA AA");
        assert_eq!(apply_correction_table("A C", &BTreeMap::new()), "A C");
    }

    #[test]
    fn correction_table_is_idempotent_when_closed() {
        let mut corr = BTreeMap::new();
        corr.insert("دەس".to_string(), "دەست".to_string());
        let once = apply_correction_table("دەس و دەست", &corr);
        assert_eq!(apply_correction_table(&once, &corr), once);
    }
}
