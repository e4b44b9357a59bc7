//! Rule-based grapheme-to-phoneme conversion.
//!
//! Every possible pronunciation of a token is generated (readings of ی
//! and و, the وو digraph against its two-letter splits, and insertion of
//! the unwritten vowel ɪ between consonants), each candidate is
//! syllabified and scored against a weighted phonological constraint set,
//! and the minimum-penalty candidate wins.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::num::Real;
use crate::script_model::ScriptModel;

/// Embedded copy of the shipped constraint weights.
pub const DEFAULT_CONSTRAINTS_TSV: &str = include_str!("../data/constraints.tsv");

pub const EPENTHETIC_VOWEL: &str = "ix";
pub const CANDIDATE_CAP: usize = 4096;
pub const BEAM_WIDTH: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Constraint {
    UnsyllabifiableResidue,
    ComplexOnset,
    Hiatus,
    GlideVowelHomorgany,
    CodaSonorityViolation,
    DepIx,
}

impl Constraint {
    pub fn name(self) -> &'static str {
        match self {
            Constraint::UnsyllabifiableResidue => "unsyllabifiable-residue",
            Constraint::ComplexOnset => "complex-onset",
            Constraint::Hiatus => "hiatus",
            Constraint::GlideVowelHomorgany => "glide-vowel-homorgany",
            Constraint::CodaSonorityViolation => "coda-sonority-violation",
            Constraint::DepIx => "dep-ix",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "unsyllabifiable-residue" => Constraint::UnsyllabifiableResidue,
            "complex-onset" => Constraint::ComplexOnset,
            "hiatus" => Constraint::Hiatus,
            "glide-vowel-homorgany" => Constraint::GlideVowelHomorgany,
            "coda-sonority-violation" => Constraint::CodaSonorityViolation,
            "dep-ix" => Constraint::DepIx,
        _ => return None,
        })
    }

    pub fn all() -> [Constraint; 6] {
        [
            Constraint::UnsyllabifiableResidue,
            Constraint::ComplexOnset,
            Constraint::Hiatus,
            Constraint::GlideVowelHomorgany,
            Constraint::CodaSonorityViolation,
            Constraint::DepIx,
        ]
    }
}

#[derive(Debug, Error)]
pub enum ConstraintError {
    #[error("constraint file line {line}: {msg}")]
    Malformed { line: usize, msg: String },
    #[error("constraint {0} has non-positive weight")]
    NonPositiveWeight(String),
    #[error("unsyllabifiable-residue weight must exceed the sum of all other weights")]
    DominanceViolated,
    #[error("missing constraint {0}")]
    Missing(String),
}

/// Weighted constraint set; weights strictly positive, with the
/// unsyllabifiable-residue weight dominating the sum of the rest.
#[derive(Debug, Clone)]
pub struct ConstraintSet<F: Real> {
    weights: BTreeMap<Constraint, F>,
}

impl<F: Real> ConstraintSet<F> {
    pub fn new(weights: BTreeMap<Constraint, F>) -> Result<Self, ConstraintError> {
        let set = ConstraintSet { weights };
        set.validate()?;
        Ok(set)
    }

    pub fn parse(data: &str) -> Result<Self, ConstraintError> {
        let mut weights = BTreeMap::new();
        for (idx, raw) in data.lines().enumerate() {
            let line = idx + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let (name, weight) = trimmed.split_once('\t').ok_or(ConstraintError::Malformed {
                line,
                msg: "expected name<TAB>weight".into(),
            })?;
            let constraint = Constraint::parse(name).ok_or(ConstraintError::Malformed {
                line,
                msg: format!("unknown constraint {name:?}"),
            })?;
            let weight: f64 = weight.parse().map_err(|_| ConstraintError::Malformed {
                line,
                msg: format!("bad weight {weight:?}"),
            })?;
            let weight = F::from_f64(weight).ok_or(ConstraintError::Malformed {
                line,
                msg: "weight not representable".into(),
            })?;
            weights.insert(constraint, weight);
        }
        ConstraintSet::new(weights)
    }

    /// The shipped default weights.
    pub fn default_set() -> Self {
        ConstraintSet::parse(DEFAULT_CONSTRAINTS_TSV).expect("bundled constraint table is valid")
    }

    fn validate(&self) -> Result<(), ConstraintError> {
        for c in Constraint::all() {
            match self.weights.get(&c) {
                None => return Err(ConstraintError::Missing(c.name().to_string())),
                Some(&w) if w <= F::zero() => {
                    return Err(ConstraintError::NonPositiveWeight(c.name().to_string()))
                }
                _ => {}
            }
        }
        let residue = self.weights[&Constraint::UnsyllabifiableResidue];
        let rest = self
            .weights
            .iter()
            .filter(|(c, _)| **c != Constraint::UnsyllabifiableResidue)
            .fold(F::zero(), |acc, (_, &w)| acc + w);
        if residue <= rest {
            return Err(ConstraintError::DominanceViolated);
        }
        Ok(())
    }

    pub fn weight(&self, c: Constraint) -> F {
        self.weights[&c]
    }

    pub fn penalty(&self, violations: &BTreeMap<Constraint, u32>) -> F {
        violations.iter().fold(F::zero(), |acc, (c, &n)| {
            acc + self.weight(*c) * F::from_u32(n).expect("count fits scalar")
        })
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum G2pError {
    #[error("character {0:?} is outside the modeled alphabet")]
    UnknownGrapheme(String),
    #[error("token produced no pronunciation candidates")]
    NoCandidate,
}

/// Which ambiguity choice produced a phone.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Choice {
    /// Sole reading of its grapheme.
    Sole,
    /// The n-th of several readings (ی → y/i, و → w/u).
    Alternative(usize),
    /// The وو digraph read as the long vowel.
    DigraphMerged,
    /// Inserted ɪ.
    Epenthesis,
}

/// Per-phone record of origin: the starting char index of the grapheme
/// that produced the phone (None for epenthetic vowels) and the choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PhoneProvenance {
    pub grapheme_start: Option<usize>,
    pub choice: Choice,
}

/// A generated phone sequence before syllabification and scoring.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawCandidate {
    pub phones: Vec<String>,
    pub provenance: Vec<PhoneProvenance>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Syllable {
    pub onset: Vec<String>,
    pub nucleus: String,
    pub coda: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SyllabifyOutcome {
    Parsed(Vec<Syllable>),
    /// No parse exists; `residue` counts the phones that cannot be placed.
    Failure { residue: usize },
}

/// Greedy onset-maximizing parse into (onset, nucleus, coda) syllables.
/// Templates: CV, CVC, CVCC, with onsets of at most one consonant;
/// onsetless syllables parse but are penalized during scoring.
pub fn syllabify(model: &ScriptModel, phones: &[String]) -> SyllabifyOutcome {
    let vowel_positions: Vec<usize> = phones
        .iter()
        .enumerate()
        .filter(|(_, p)| model.is_vowel(p))
        .map(|(i, _)| i)
        .collect();
    if vowel_positions.is_empty() {
        return SyllabifyOutcome::Failure {
            residue: phones.len(),
        };
    }
    let mut residue = 0usize;
    let leading = vowel_positions[0];
    if leading > 1 {
        residue += leading - 1;
    }
    for pair in vowel_positions.windows(2) {
        let cluster = pair[1] - pair[0] - 1;
        if cluster > 3 {
            residue += cluster - 3; // 2 coda + 1 onset
        }
    }
    let trailing = phones.len() - 1 - vowel_positions[vowel_positions.len() - 1];
    if trailing > 2 {
        residue += trailing - 2;
    }
    if residue > 0 {
        return SyllabifyOutcome::Failure { residue };
    }
    let mut syllables = Vec::with_capacity(vowel_positions.len());
    let mut onset_start = 0usize;
    for (v_idx, &v) in vowel_positions.iter().enumerate() {
        let onset = phones[onset_start..v].to_vec();
        let coda_end = match vowel_positions.get(v_idx + 1) {
            Some(&next_v) => {
                // consonants between nuclei: the last one becomes the next
                // onset whenever the cluster is non-empty
                let cluster = next_v - v - 1;
                let coda_len = cluster.saturating_sub(1);
                let coda_end = v + 1 + coda_len;
                onset_start = coda_end;
                coda_end
            }
            None => phones.len(),
        };
        syllables.push(Syllable {
            onset,
            nucleus: phones[v].clone(),
            coda: phones[v + 1..coda_end].to_vec(),
        });
    }
    SyllabifyOutcome::Parsed(syllables)
}

/// A scored pronunciation candidate.
#[derive(Debug, Clone)]
pub struct PronunciationCandidate<F: Real> {
    pub phones: Vec<String>,
    pub provenance: Vec<PhoneProvenance>,
    pub syllables: Option<Vec<Syllable>>,
    pub violations: BTreeMap<Constraint, u32>,
    pub penalty: F,
}

impl<F: Real> PronunciationCandidate<F> {
    pub fn epenthesis_count(&self) -> u32 {
        self.provenance
            .iter()
            .filter(|p| p.choice == Choice::Epenthesis)
            .count() as u32
    }
}

fn is_homorganic(a: &str, b: &str) -> bool {
    matches!(
        (a, b),
        ("u", "w") | ("w", "u") | ("uu", "w") | ("w", "uu") | ("i", "y") | ("y", "i")
    )
}

/// Count constraint violations and compute the weighted penalty.
pub fn score<F: Real>(
    model: &ScriptModel,
    raw: &RawCandidate,
    constraints: &ConstraintSet<F>,
) -> PronunciationCandidate<F> {
    let mut violations: BTreeMap<Constraint, u32> = BTreeMap::new();
    let mut bump = |c: Constraint, n: u32| {
        if n > 0 {
            *violations.entry(c).or_insert(0) += n;
        }
    };
    let outcome = syllabify(model, &raw.phones);
    let syllables = match outcome {
        SyllabifyOutcome::Parsed(syllables) => {
            let onsetless = syllables.iter().filter(|s| s.onset.is_empty()).count();
            bump(Constraint::ComplexOnset, onsetless as u32);
            let coda_rises = syllables
                .iter()
                .filter(|s| {
                    s.coda.len() == 2 && model.sonority(&s.coda[0]) <= model.sonority(&s.coda[1])
                })
                .count();
            bump(Constraint::CodaSonorityViolation, coda_rises as u32);
            Some(syllables)
        }
        SyllabifyOutcome::Failure { residue } => {
            bump(Constraint::UnsyllabifiableResidue, residue as u32);
            None
        }
    };
    let hiatus = raw
        .phones
        .windows(2)
        .filter(|w| model.is_vowel(&w[0]) && model.is_vowel(&w[1]))
        .count();
    bump(Constraint::Hiatus, hiatus as u32);
    let homorganic = raw
        .phones
        .windows(2)
        .filter(|w| is_homorganic(&w[0], &w[1]))
        .count();
    bump(Constraint::GlideVowelHomorgany, homorganic as u32);
    let dep = raw
        .provenance
        .iter()
        .filter(|p| p.choice == Choice::Epenthesis)
        .count();
    bump(Constraint::DepIx, dep as u32);
    let penalty = constraints.penalty(&violations);
    PronunciationCandidate {
        phones: raw.phones.clone(),
        provenance: raw.provenance.clone(),
        syllables,
        violations,
        penalty,
    }
}

/// One grapheme occurrence in a segmentation.
#[derive(Debug, Clone)]
struct SegUnit {
    start: usize,
    candidates: Vec<String>,
    is_digraph: bool,
}

/// All segmentations of the token into graphemes: وو is taken greedily,
/// with the two-singleton split retained as an alternative.
fn segmentations(model: &ScriptModel, chars: &[char]) -> Result<Vec<Vec<SegUnit>>, G2pError> {
    fn rec(
        model: &ScriptModel,
        chars: &[char],
        i: usize,
        prefix: &mut Vec<SegUnit>,
        out: &mut Vec<Vec<SegUnit>>,
    ) -> Result<(), G2pError> {
        if i == chars.len() {
            out.push(prefix.clone());
            return Ok(());
        }
        let mut branched = false;
        if i + 1 < chars.len() {
            let pair: String = chars[i..i + 2].iter().collect();
            if let Some(g) = model.grapheme(&pair) {
                branched = true;
                prefix.push(SegUnit {
                    start: i,
                    candidates: g.candidate_phonemes.clone(),
                    is_digraph: true,
                });
                rec(model, chars, i + 2, prefix, out)?;
                prefix.pop();
            }
        }
        let single = chars[i].to_string();
        match model.grapheme(&single) {
            Some(g) => {
                prefix.push(SegUnit {
                    start: i,
                    candidates: g.candidate_phonemes.clone(),
                    is_digraph: false,
                });
                rec(model, chars, i + 1, prefix, out)?;
                prefix.pop();
                Ok(())
            }
            None if branched => Ok(()),
            None => Err(G2pError::UnknownGrapheme(single)),
        }
    }
    let mut out = Vec::new();
    rec(model, chars, 0, &mut Vec::new(), &mut out)?;
    if out.is_empty() {
        return Err(G2pError::NoCandidate);
    }
    Ok(out)
}

#[derive(Debug)]
pub struct CandidateGen {
    pub candidates: Vec<RawCandidate>,
    /// True when the exhaustive expansion exceeded [`CANDIDATE_CAP`] and
    /// beam pruning was used instead.
    pub cap_hit: bool,
}

/// Exhaustive expansion of one segmentation: letter readings crossed with
/// every subset of inter-consonant ɪ insertions. Aborts (returning false)
/// as soon as `out` grows past `limit`.
fn expand_exhaustive(
    model: &ScriptModel,
    units: &[SegUnit],
    limit: usize,
    out: &mut Vec<RawCandidate>,
) -> bool {
    fn rec(
        model: &ScriptModel,
        units: &[SegUnit],
        u: usize,
        phones: &mut Vec<String>,
        prov: &mut Vec<PhoneProvenance>,
        limit: usize,
        out: &mut Vec<RawCandidate>,
    ) -> bool {
        if u == units.len() {
            if out.len() >= limit {
                return false;
            }
            out.push(RawCandidate {
                phones: phones.clone(),
                provenance: prov.clone(),
            });
            return true;
        }
        let unit = &units[u];
        for (alt, cand) in unit.candidates.iter().enumerate() {
            let choice = if unit.is_digraph {
                Choice::DigraphMerged
            } else if unit.candidates.len() > 1 {
                Choice::Alternative(alt)
            } else {
                Choice::Sole
            };
            let epenthesis_site = phones
                .last()
                .map(|prev| !model.is_vowel(prev) && !model.is_vowel(cand))
                .unwrap_or(false);
            for insert in [false, true] {
                if insert && !epenthesis_site {
                    continue;
                }
                if insert {
                    phones.push(EPENTHETIC_VOWEL.to_string());
                    prov.push(PhoneProvenance {
                        grapheme_start: None,
                        choice: Choice::Epenthesis,
                    });
                }
                phones.push(cand.clone());
                prov.push(PhoneProvenance {
                    grapheme_start: Some(unit.start),
                    choice,
                });
                let ok = rec(model, units, u + 1, phones, prov, limit, out);
                phones.pop();
                prov.pop();
                if insert {
                    phones.pop();
                    prov.pop();
                }
                if !ok {
                    return false;
                }
            }
        }
        true
    }
    rec(model, units, 0, &mut Vec::new(), &mut Vec::new(), limit, out)
}

/// Beam expansion used when the exhaustive candidate count exceeds the
/// cap: states are pruned to [`BEAM_WIDTH`] by partial penalty (hiatus,
/// homorgany and epentheses over the prefix).
fn expand_beam<F: Real>(
    model: &ScriptModel,
    segs: &[Vec<SegUnit>],
    constraints: &ConstraintSet<F>,
) -> Vec<RawCandidate> {
    #[derive(Clone)]
    struct State {
        phones: Vec<String>,
        prov: Vec<PhoneProvenance>,
        partial: f64,
    }
    let mut finals: Vec<RawCandidate> = Vec::new();
    let w_hiatus = constraints.weight(Constraint::Hiatus).to_f64().unwrap();
    let w_hom = constraints
        .weight(Constraint::GlideVowelHomorgany)
        .to_f64()
        .unwrap();
    let w_dep = constraints.weight(Constraint::DepIx).to_f64().unwrap();
    for units in segs {
        let mut beam = vec![State {
            phones: Vec::new(),
            prov: Vec::new(),
            partial: 0.0,
        }];
        for unit in units {
            let mut next: Vec<State> = Vec::new();
            for state in &beam {
                for (alt, cand) in unit.candidates.iter().enumerate() {
                    let choice = if unit.is_digraph {
                        Choice::DigraphMerged
                    } else if unit.candidates.len() > 1 {
                        Choice::Alternative(alt)
                    } else {
                        Choice::Sole
                    };
                    let site = state
                        .phones
                        .last()
                        .map(|prev| !model.is_vowel(prev) && !model.is_vowel(cand))
                        .unwrap_or(false);
                    for insert in [false, true] {
                        if insert && !site {
                            continue;
                        }
                        let mut s = state.clone();
                        if insert {
                            s.phones.push(EPENTHETIC_VOWEL.to_string());
                            s.prov.push(PhoneProvenance {
                                grapheme_start: None,
                                choice: Choice::Epenthesis,
                            });
                            s.partial += w_dep;
                        }
                        if let Some(prev) = s.phones.last() {
                            if model.is_vowel(prev) && model.is_vowel(cand) {
                                s.partial += w_hiatus;
                            }
                            if is_homorganic(prev, cand) {
                                s.partial += w_hom;
                            }
                        }
                        s.phones.push(cand.clone());
                        s.prov.push(PhoneProvenance {
                            grapheme_start: Some(unit.start),
                            choice,
                        });
                        next.push(s);
                    }
                }
            }
            next.sort_by(|a, b| {
                a.partial
                    .partial_cmp(&b.partial)
                    .unwrap()
                    .then_with(|| a.phones.cmp(&b.phones))
            });
            next.truncate(BEAM_WIDTH);
            beam = next;
        }
        finals.extend(beam.into_iter().map(|s| RawCandidate {
            phones: s.phones,
            provenance: s.prov,
        }));
    }
    finals
}

fn dedup_candidates(mut candidates: Vec<RawCandidate>) -> Vec<RawCandidate> {
    let mut seen: BTreeSet<Vec<String>> = BTreeSet::new();
    candidates.retain(|c| seen.insert(c.phones.clone()));
    candidates
}

/// Generate all pronunciation candidates of a normalized, standardized
/// token. Falls back to beam pruning past [`CANDIDATE_CAP`].
pub fn generate_candidates<F: Real>(
    model: &ScriptModel,
    token: &str,
    constraints: &ConstraintSet<F>,
) -> Result<CandidateGen, G2pError> {
    if token.is_empty() {
        return Err(G2pError::NoCandidate);
    }
    let chars: Vec<char> = token.chars().collect();
    let segs = segmentations(model, &chars)?;
    let mut all = Vec::new();
    let mut cap_hit = false;
    for units in &segs {
        if !expand_exhaustive(model, units, CANDIDATE_CAP + 1, &mut all) {
            cap_hit = true;
            break;
        }
        if all.len() > CANDIDATE_CAP {
            cap_hit = true;
            break;
        }
    }
    let candidates = if cap_hit {
        dedup_candidates(expand_beam(model, &segs, constraints))
    } else {
        dedup_candidates(all)
    };
    if candidates.is_empty() {
        return Err(G2pError::NoCandidate);
    }
    Ok(CandidateGen {
        candidates,
        cap_hit,
    })
}

#[derive(Debug)]
pub struct G2pOutput<F: Real> {
    pub best: PronunciationCandidate<F>,
    pub n_candidates: usize,
    pub cap_hit: bool,
}

/// Pick the minimum-penalty candidate; ties go to fewer ɪ insertions,
/// then the lexicographically smaller phone sequence.
pub fn pick_best<F: Real>(
    mut scored: Vec<PronunciationCandidate<F>>,
) -> Option<PronunciationCandidate<F>> {
    scored.sort_by(|a, b| {
        a.penalty
            .partial_cmp(&b.penalty)
            .expect("penalties are finite")
            .then_with(|| a.epenthesis_count().cmp(&b.epenthesis_count()))
            .then_with(|| a.phones.cmp(&b.phones))
    });
    scored.into_iter().next()
}

/// Full conversion: candidates, syllabification, scoring, argmin.
pub fn g2p<F: Real>(
    model: &ScriptModel,
    token: &str,
    constraints: &ConstraintSet<F>,
) -> Result<G2pOutput<F>, G2pError> {
    let generated = generate_candidates(model, token, constraints)?;
    let n_candidates = generated.candidates.len();
    let scored: Vec<PronunciationCandidate<F>> = generated
        .candidates
        .iter()
        .map(|raw| score(model, raw, constraints))
        .collect();
    let best = pick_best(scored).ok_or(G2pError::NoCandidate)?;
    Ok(G2pOutput {
        best,
        n_candidates,
        cap_hit: generated.cap_hit,
    })
}

/// Rebuild the grapheme skeleton implied by a candidate: epenthetic
/// vowels dropped, digraph and split readings mapped back to their source
/// characters. Used for the provenance round-trip check.
pub fn grapheme_skeleton(token: &str, candidate: &PronunciationCandidate<impl Real>) -> String {
    let chars: Vec<char> = token.chars().collect();
    let mut covered: Vec<usize> = candidate
        .provenance
        .iter()
        .filter_map(|p| p.grapheme_start)
        .collect();
    covered.dedup();
    let mut out = String::new();
    for (i, &start) in covered.iter().enumerate() {
        let end = covered.get(i + 1).copied().unwrap_or(chars.len());
        for &c in &chars[start..end] {
            out.push(c);
        }
    }
    out
}
