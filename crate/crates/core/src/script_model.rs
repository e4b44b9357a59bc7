//! Canonical model of the Central Kurdish writing system and phoneme
//! inventory. Loaded from a versioned data file so corrections to the
//! tables need no rebuild; immutable after load.

use std::collections::{BTreeMap, HashMap};
use std::sync::OnceLock;

use thiserror::Error;

/// Embedded copy of the shipped alphabet/inventory table.
pub const DEFAULT_ALPHABET_TSV: &str = include_str!("../data/alphabet.tsv");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Category {
    VoicedStop,
    VoicedFricative,
    UnvoicedStop,
    UnvoicedFricative,
    Vibrant,
    Flap,
    Trill,
    Lateral,
    Nasal,
    Approximant,
    Vowel,
}

impl Category {
    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "voiced-stop" => Category::VoicedStop,
            "voiced-fricative" => Category::VoicedFricative,
            "unvoiced-stop" => Category::UnvoicedStop,
            "unvoiced-fricative" => Category::UnvoicedFricative,
            "vibrant" => Category::Vibrant,
            "flap" => Category::Flap,
            "trill" => Category::Trill,
            "lateral" => Category::Lateral,
            "nasal" => Category::Nasal,
            "approximant" => Category::Approximant,
            "vowel" => Category::Vowel,
            _ => return None,
        })
    }

    /// Rank on a coarse sonority scale; codas must not rise.
    pub fn sonority(self) -> u8 {
        match self {
            Category::VoicedStop | Category::UnvoicedStop => 1,
            Category::VoicedFricative | Category::UnvoicedFricative | Category::Vibrant => 2,
            Category::Nasal => 3,
            Category::Lateral | Category::Flap | Category::Trill | Category::Approximant => 4,
            Category::Vowel => 5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum LanguageClass {
    KurdishOnly,
    KurdishPersian,
    KurdishPersianArabic,
    /// Letters of Persian/Arabic that are not part of the Sorani alphabet.
    PersianArabic,
}

impl LanguageClass {
    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "kurdish-only" => LanguageClass::KurdishOnly,
            "kurdish-persian" => LanguageClass::KurdishPersian,
            "kurdish-persian-arabic" => LanguageClass::KurdishPersianArabic,
            "persian-arabic" => LanguageClass::PersianArabic,
            _ => return None,
        })
    }

    pub fn as_str(self) -> &'static str {
        match self {
            LanguageClass::KurdishOnly => "kurdish-only",
            LanguageClass::KurdishPersian => "kurdish-persian",
            LanguageClass::KurdishPersianArabic => "kurdish-persian-arabic",
            LanguageClass::PersianArabic => "persian-arabic",
        }
    }
}

/// One row of the phoneme inventory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Phoneme {
    pub row: u32,
    pub code: String,
    pub ipa: String,
    pub category: Category,
    pub is_vowel: bool,
}

/// One letter (or the وو digraph) of the Sorani alphabet.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Grapheme {
    pub codepoints: String,
    pub candidate_phonemes: Vec<String>,
    pub language_class: LanguageClass,
}

#[derive(Debug, Error)]
pub enum ScriptModelError {
    #[error("line {line}: {msg}")]
    Malformed { line: usize, msg: String },
    #[error("grapheme {grapheme:?} references unknown phoneme code {code:?}")]
    UnknownPhonemeRef { grapheme: String, code: String },
    #[error("duplicate phoneme code {0:?}")]
    DuplicateCode(String),
    #[error("duplicate grapheme {0:?}")]
    DuplicateGrapheme(String),
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("character {0:?} is outside the modeled alphabet")]
pub struct UnknownGrapheme(pub String);

#[derive(Debug, Error, PartialEq, Eq)]
#[error("letter {0:?} is not in the Kurdish, Persian or Arabic letter sets")]
pub struct UnknownLetter(pub char);

/// Immutable writing-system model; safe to share across threads.
#[derive(Debug)]
pub struct ScriptModel {
    phonemes: Vec<Phoneme>,
    by_code: HashMap<String, usize>,
    graphemes: BTreeMap<String, Grapheme>,
    foreign: BTreeMap<String, LanguageClass>,
}

impl ScriptModel {
    pub fn parse(data: &str) -> Result<Self, ScriptModelError> {
        let mut model = ScriptModel {
            phonemes: Vec::new(),
            by_code: HashMap::new(),
            graphemes: BTreeMap::new(),
            foreign: BTreeMap::new(),
        };
        for (idx, raw) in data.lines().enumerate() {
            let line = idx + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = trimmed.split('\t').collect();
            let malformed = |msg: &str| ScriptModelError::Malformed {
                line,
                msg: msg.to_string(),
            };
            match fields[0] {
                "phoneme" => {
                    if fields.len() != 6 {
                        return Err(malformed("phoneme record needs 6 fields"));
                    }
                    let row: u32 = fields[1]
                        .parse()
                        .map_err(|_| malformed("bad row number"))?;
                    let category =
                        Category::parse(fields[4]).ok_or_else(|| malformed("bad category"))?;
                    let is_vowel = match fields[5] {
                        "vowel" => true,
                        "consonant" => false,
                        _ => return Err(malformed("expected vowel|consonant")),
                    };
                    let code = fields[2].to_string();
                    if model.by_code.contains_key(&code) {
                        return Err(ScriptModelError::DuplicateCode(code));
                    }
                    model.by_code.insert(code.clone(), model.phonemes.len());
                    model.phonemes.push(Phoneme {
                        row,
                        code,
                        ipa: fields[3].to_string(),
                        category,
                        is_vowel,
                    });
                }
                "grapheme" => {
                    if fields.len() != 4 {
                        return Err(malformed("grapheme record needs 4 fields"));
                    }
                    let class = LanguageClass::parse(fields[3])
                        .ok_or_else(|| malformed("bad language class"))?;
                    let codepoints = fields[1].to_string();
                    let candidates: Vec<String> =
                        fields[2].split(',').map(|s| s.to_string()).collect();
                    if candidates.is_empty() || candidates.iter().any(|c| c.is_empty()) {
                        return Err(malformed("empty candidate set"));
                    }
                    if model.graphemes.contains_key(&codepoints) {
                        return Err(ScriptModelError::DuplicateGrapheme(codepoints));
                    }
                    model.graphemes.insert(
                        codepoints.clone(),
                        Grapheme {
                            codepoints,
                            candidate_phonemes: candidates,
                            language_class: class,
                        },
                    );
                }
                "foreign" => {
                    if fields.len() != 3 {
                        return Err(malformed("foreign record needs 3 fields"));
                    }
                    let class = LanguageClass::parse(fields[2])
                        .ok_or_else(|| malformed("bad language class"))?;
                    model.foreign.insert(fields[1].to_string(), class);
                }
                other => {
                    return Err(malformed(&format!("unknown record kind {other:?}")));
                }
            }
        }
        for g in model.graphemes.values() {
            for code in &g.candidate_phonemes {
                if !model.by_code.contains_key(code) {
                    return Err(ScriptModelError::UnknownPhonemeRef {
                        grapheme: g.codepoints.clone(),
                        code: code.clone(),
                    });
                }
            }
        }
        Ok(model)
    }

    /// The shipped model, parsed once.
    pub fn shared() -> &'static ScriptModel {
        static MODEL: OnceLock<ScriptModel> = OnceLock::new();
        MODEL.get_or_init(|| {
            ScriptModel::parse(DEFAULT_ALPHABET_TSV).expect("bundled alphabet table is valid")
        })
    }

    /// The phoneme inventory in table row order.
    pub fn phoneme_inventory(&self) -> &[Phoneme] {
        &self.phonemes
    }

    pub fn phoneme(&self, code: &str) -> Option<&Phoneme> {
        self.by_code.get(code).map(|&i| &self.phonemes[i])
    }

    pub fn is_vowel(&self, code: &str) -> bool {
        self.phoneme(code).map_or(false, |p| p.is_vowel)
    }

    pub fn sonority(&self, code: &str) -> u8 {
        self.phoneme(code).map_or(0, |p| p.category.sonority())
    }

    pub fn grapheme(&self, codepoints: &str) -> Option<&Grapheme> {
        self.graphemes.get(codepoints)
    }

    /// All phonemes a grapheme may realize.
    pub fn grapheme_candidates(&self, codepoints: &str) -> Result<&[String], UnknownGrapheme> {
        self.graphemes
            .get(codepoints)
            .map(|g| g.candidate_phonemes.as_slice())
            .ok_or_else(|| UnknownGrapheme(codepoints.to_string()))
    }

    /// Which Table-2 letter set a codepoint belongs to.
    pub fn classify_letter(&self, letter: char) -> Result<LanguageClass, UnknownLetter> {
        let s = letter.to_string();
        if let Some(g) = self.graphemes.get(&s) {
            return Ok(g.language_class);
        }
        self.foreign
            .get(&s)
            .copied()
            .ok_or(UnknownLetter(letter))
    }

    pub fn is_alphabet_char(&self, letter: char) -> bool {
        self.graphemes.contains_key(letter.to_string().as_str())
    }

    /// Greedy (maximal munch) segmentation of a token into graphemes:
    /// the وو digraph wins over two singletons. Alternative splits are
    /// enumerated by g2p candidate generation.
    pub fn segment_greedy<'a>(
        &'a self,
        token: &str,
    ) -> Result<Vec<&'a Grapheme>, UnknownGrapheme> {
        let chars: Vec<char> = token.chars().collect();
        let mut out = Vec::with_capacity(chars.len());
        let mut i = 0;
        while i < chars.len() {
            if i + 1 < chars.len() {
                let pair: String = chars[i..i + 2].iter().collect();
                if let Some(g) = self.graphemes.get(&pair) {
                    out.push(g);
                    i += 2;
                    continue;
                }
            }
            let single = chars[i].to_string();
            match self.graphemes.get(&single) {
                Some(g) => out.push(g),
                None => return Err(UnknownGrapheme(single)),
            }
            i += 1;
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model() -> &'static ScriptModel {
        ScriptModel::shared()
    }

    #[test]
    fn inventory_has_37_phonemes_and_8_vowels() {
        let inv = model().phoneme_inventory();
        assert_eq!(inv.len(), 37);
        assert_eq!(inv.iter().filter(|p| p.is_vowel).count(), 8);
        // vowels are exactly rows 30-37
        for p in inv {
            assert_eq!(p.is_vowel, (30..=37).contains(&p.row), "row {}", p.row);
        }
    }

    #[test]
    fn inventory_rows_are_in_table_order() {
        let inv = model().phoneme_inventory();
        for (i, p) in inv.iter().enumerate() {
            assert_eq!(p.row as usize, i + 1);
        }
    }

    #[test]
    fn zh_and_unwritten_vowel_present() {
        let m = model();
        assert_eq!(m.phoneme("zh").unwrap().ipa, "ʒ");
        let ix = m.phoneme("ix").unwrap();
        assert_eq!(ix.ipa, "ɪ");
        assert!(ix.is_vowel);
        assert_eq!(ix.row, 37);
    }

    #[test]
    fn grapheme_candidates_examples() {
        let m = model();
        assert_eq!(m.grapheme_candidates("ب").unwrap(), ["b"]);
        assert_eq!(m.grapheme_candidates("ی").unwrap(), ["y", "i"]);
        assert_eq!(m.grapheme_candidates("وو").unwrap(), ["uu"]);
        assert!(m.grapheme_candidates("Q").is_err());
    }

    #[test]
    fn ambiguous_graphemes_have_multiple_candidates() {
        let m = model();
        for g in ["ی", "و"] {
            assert!(m.grapheme_candidates(g).unwrap().len() >= 2, "{g}");
        }
    }

    #[test]
    fn every_candidate_code_is_in_inventory() {
        let m = model();
        for g in m.graphemes.values() {
            for code in &g.candidate_phonemes {
                assert!(m.phoneme(code).is_some(), "{} -> {}", g.codepoints, code);
            }
        }
    }

    #[test]
    fn classify_letter_examples() {
        let m = model();
        assert_eq!(m.classify_letter('ژ').unwrap(), LanguageClass::KurdishPersian);
        assert_eq!(
            m.classify_letter('ب').unwrap(),
            LanguageClass::KurdishPersianArabic
        );
        assert_eq!(m.classify_letter('ۆ').unwrap(), LanguageClass::KurdishOnly);
        assert_eq!(m.classify_letter('ث').unwrap(), LanguageClass::PersianArabic);
        assert_eq!(m.classify_letter('Q'), Err(UnknownLetter('Q')));
    }

    #[test]
    fn digraph_is_segmented_greedily() {
        let m = model();
        let segs = m.segment_greedy("کوورد").unwrap();
        let parts: Vec<&str> = segs.iter().map(|g| g.codepoints.as_str()).collect();
        assert_eq!(parts, ["ک", "وو", "ر", "د"]);
        // triple waw: digraph first, then singleton
        let segs = m.segment_greedy("ووو").unwrap();
        let parts: Vec<&str> = segs.iter().map(|g| g.codepoints.as_str()).collect();
        assert_eq!(parts, ["وو", "و"]);
    }
}
