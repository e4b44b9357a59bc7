//! Di-phone-balanced sentence selection.
//!
//! Given a pool of candidate sentences and a target di-phone
//! distribution, a greedy loop first adds sentences for coverage of the
//! target's pair support, then adds or swaps sentences to pull the
//! selection's distribution toward the target. The human
//! sentence-composition step of the original procedure is replaced by
//! selection from the pool plus a word-suggestion report for authors.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::diphone_stats::{
    coverage, divergence, diphone_counts, DiphoneDistribution, Diphone, PhoneStreamItem,
};
use crate::g2p::{g2p, ConstraintSet, G2pError};
use crate::normalizer::{standardize, tokenize, RuleError, RuleTable, StreamItem};
use crate::num::Real;
use crate::script_model::ScriptModel;

#[derive(Debug, Error)]
pub enum DesignError {
    #[error("candidate pool is empty")]
    EmptyPool,
    #[error("target distribution is empty")]
    EmptyTarget,
    #[error("sentence {id}: {source}")]
    G2p { id: String, source: G2pError },
    #[error("sentence {id}: {source}")]
    Standardize { id: String, source: RuleError },
}

/// A pool sentence with its precomputed phone stream and statistics.
#[derive(Debug, Clone)]
pub struct CandidateSentence {
    pub id: String,
    pub text: String,
    pub phones: Vec<PhoneStreamItem>,
    pub diphones: DiphoneDistribution,
    /// Mean corpus frequency of the sentence tokens, when a frequency
    /// table was supplied.
    pub word_freq_score: Option<f64>,
}

impl CandidateSentence {
    /// Build a candidate from normalized text: tokenize, standardize,
    /// convert each token, pause at punctuation.
    pub fn from_text<F: Real>(
        model: &ScriptModel,
        rules: &RuleTable,
        constraints: &ConstraintSet<F>,
        id: &str,
        text: &str,
    ) -> Result<Self, DesignError> {
        let mut phones = Vec::new();
        for item in tokenize(text).items {
            match item {
                StreamItem::Token { text: tok, .. } => {
                    let standard = standardize(&tok, rules).map_err(|source| {
                        DesignError::Standardize {
                            id: id.to_string(),
                            source,
                        }
                    })?;
                    let out = g2p(model, &standard, constraints).map_err(|source| {
                        DesignError::G2p {
                            id: id.to_string(),
                            source,
                        }
                    })?;
                    phones.push(PhoneStreamItem::Segment(out.best.phones));
                }
                StreamItem::Pause { .. } => phones.push(PhoneStreamItem::Pause),
            }
        }
        // sentences never concatenate: each one is pause-bounded, so
        // word-internal pairs only
        let diphones = diphone_counts(model, &phones).expect("g2p output is in inventory");
        Ok(CandidateSentence {
            id: id.to_string(),
            text: text.to_string(),
            phones,
            diphones,
            word_freq_score: None,
        })
    }

    fn phone_len(&self) -> usize {
        self.phones
            .iter()
            .map(|i| match i {
                PhoneStreamItem::Segment(p) => p.len(),
                PhoneStreamItem::Pause => 0,
            })
            .sum()
    }
}

/// A word suggestion for covering missing di-phones.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedWord {
    pub token: String,
    pub covered_missing: usize,
    pub frequency: u64,
}

/// Rank corpus tokens that contain at least one missing di-phone:
/// most missing pairs covered first, then highest corpus frequency.
/// Tokens that fail G2P are skipped.
pub fn select_words<F: Real>(
    model: &ScriptModel,
    constraints: &ConstraintSet<F>,
    corpus_tokens: &[(String, u64)],
    missing: &BTreeSet<Diphone>,
) -> Vec<RankedWord> {
    if missing.is_empty() {
        return Vec::new();
    }
    let mut ranked = Vec::new();
    for (token, freq) in corpus_tokens {
        let Ok(out) = g2p(model, token, constraints) else {
            continue;
        };
        let mut dist = DiphoneDistribution::new();
        dist.add_segment(&out.best.phones);
        let covered = dist
            .support()
            .iter()
            .filter(|pair| missing.contains(*pair))
            .count();
        if covered > 0 {
            ranked.push(RankedWord {
                token: token.clone(),
                covered_missing: covered,
                frequency: *freq,
            });
        }
    }
    ranked.sort_by(|a, b| {
        b.covered_missing
            .cmp(&a.covered_missing)
            .then_with(|| b.frequency.cmp(&a.frequency))
            .then_with(|| a.token.cmp(&b.token))
    });
    ranked
}

#[derive(Debug, Clone)]
pub struct DesignParams<F: Real> {
    /// Stop phase 2 when the best move improves divergence by less than
    /// this.
    pub epsilon: F,
    pub max_sentences: usize,
}

impl<F: Real> Default for DesignParams<F> {
    fn default() -> Self {
        DesignParams {
            epsilon: F::from_f64(1e-4).unwrap(),
            max_sentences: 700,
        }
    }
}

/// The running (and final) state of a selection.
#[derive(Debug, Clone)]
pub struct SelectionState<F: Real> {
    /// Selected sentence ids, in selection order.
    pub selected: Vec<String>,
    pub aggregate: DiphoneDistribution,
    /// Covered fraction of the full target support.
    pub coverage: F,
    /// Total-variation distance between the selection and the target.
    pub divergence: F,
    /// Target pairs absent from every pool sentence.
    pub unreachable: Vec<Diphone>,
}

fn divergence_or_max<F: Real>(p: &DiphoneDistribution, q: &DiphoneDistribution) -> F {
    divergence(p, q).unwrap_or_else(|_| F::one())
}

/// Greedy selection: phase 1 maximizes new coverage of the target pairs,
/// phase 2 adds or swaps sentences to reduce divergence. Deterministic
/// given the same pool and target.
pub fn select_sentences<F: Real>(
    pool: &[CandidateSentence],
    target: &DiphoneDistribution,
    params: &DesignParams<F>,
) -> Result<SelectionState<F>, DesignError> {
    if pool.is_empty() {
        return Err(DesignError::EmptyPool);
    }
    if target.total() == 0 {
        return Err(DesignError::EmptyTarget);
    }
    let mut pool: Vec<&CandidateSentence> = pool.iter().collect();
    pool.sort_by(|a, b| a.id.cmp(&b.id));

    let target_support = target.support();
    let mut reachable: BTreeSet<Diphone> = BTreeSet::new();
    for s in &pool {
        reachable.extend(
            s.diphones
                .support()
                .intersection(&target_support)
                .cloned(),
        );
    }
    let unreachable: Vec<Diphone> = target_support.difference(&reachable).cloned().collect();

    // Dense count vectors over the interned pair index (sorted union of
    // the target and pool supports). Total-variation sums over the index
    // only add exact-zero terms for pairs absent from both operands, so
    // results are bit-identical to sparse evaluation, at a fraction of
    // the cost in the move-search loops below.
    let mut index_set: BTreeSet<Diphone> = target_support.clone();
    for s in &pool {
        index_set.extend(s.diphones.support());
    }
    let index: Vec<Diphone> = index_set.into_iter().collect();
    let pos: BTreeMap<&Diphone, usize> = index.iter().enumerate().map(|(i, p)| (p, i)).collect();
    let dim = index.len();
    let densify = |d: &DiphoneDistribution| -> Vec<u64> {
        let mut v = vec![0u64; dim];
        for (pair, &c) in d.counts() {
            v[pos[pair]] += c;
        }
        v
    };
    let sent_vecs: Vec<Vec<u64>> = pool.iter().map(|s| densify(&s.diphones)).collect();
    let sent_totals: Vec<u64> = pool.iter().map(|s| s.diphones.total()).collect();
    let target_vec = densify(target);
    let target_relfreq: Vec<F> = {
        let qf = F::from_u64_exact(target.total());
        target_vec
            .iter()
            .map(|&c| F::from_u64_exact(c) / qf)
            .collect()
    };
    let half = F::from_f64(0.5).expect("representable");
    // TV distance of (selection counts + delta) against the target;
    // `sub`/`add` adjust one sentence out/in without materializing the
    // modified aggregate.
    let tv = |agg: &[u64], total: u64, sub: Option<usize>, add: Option<usize>| -> F {
        let mut total = total;
        if let Some(s) = sub {
            total -= sent_totals[s];
        }
        if let Some(a) = add {
            total += sent_totals[a];
        }
        if total == 0 {
            return F::one();
        }
        let tf = F::from_u64_exact(total);
        let mut sum = F::zero();
        for i in 0..dim {
            let mut c = agg[i];
            if let Some(s) = sub {
                c -= sent_vecs[s][i];
            }
            if let Some(a) = add {
                c += sent_vecs[a][i];
            }
            let p = F::from_u64_exact(c) / tf;
            sum = sum + (p - target_relfreq[i]).abs();
        }
        sum * half
    };
    let in_target: Vec<bool> = index.iter().map(|p| target_support.contains(p)).collect();

    let mut selected_idx: Vec<usize> = Vec::new();
    let mut in_selection = vec![false; pool.len()];
    let mut agg_vec = vec![0u64; dim];
    let mut agg_total = 0u64;
    let mut missing: Vec<bool> = index
        .iter()
        .map(|p| reachable.contains(p))
        .collect();
    let mut missing_left = missing.iter().filter(|&&m| m).count();

    // phase 1: cover every reachable pair
    while missing_left > 0 && selected_idx.len() < params.max_sentences {
        let mut best: Option<(usize, usize, F, usize)> = None; // (gain, idx, div, len)
        for (i, s) in pool.iter().enumerate() {
            if in_selection[i] {
                continue;
            }
            let gain = (0..dim)
                .filter(|&k| missing[k] && sent_vecs[i][k] > 0)
                .count();
            if gain == 0 {
                continue;
            }
            let div: F = tv(&agg_vec, agg_total, None, Some(i));
            let better = match &best {
                None => true,
                Some((bgain, bidx, bdiv, blen)) => {
                    (gain > *bgain)
                        || (gain == *bgain
                            && (div < *bdiv
                                || (div == *bdiv
                                    && (s.phone_len() < *blen
                                        || (s.phone_len() == *blen
                                            && pool[i].id < pool[*bidx].id)))))
                }
            };
            if better {
                best = Some((gain, i, div, s.phone_len()));
            }
        }
        let Some((_, idx, _, _)) = best else { break };
        in_selection[idx] = true;
        selected_idx.push(idx);
        for k in 0..dim {
            agg_vec[k] += sent_vecs[idx][k];
        }
        agg_total += sent_totals[idx];
        for k in 0..dim {
            if missing[k] && agg_vec[k] > 0 {
                missing[k] = false;
                missing_left -= 1;
            }
        }
    }

    // phase 2: reduce divergence by adds and coverage-preserving swaps
    let mut current_div: F = tv(&agg_vec, agg_total, None, None);
    loop {
        #[derive(Clone, Copy)]
        enum Move {
            Add(usize),
            Swap { out: usize, inn: usize },
        }
        let mut best: Option<(F, Move)> = None;
        let consider = |div: F, mv: Move, best: &mut Option<(F, Move)>| {
            let better = match best {
                None => div < current_div,
                Some((bdiv, _)) => div < *bdiv,
            };
            if better {
                *best = Some((div, mv));
            }
        };
        if selected_idx.len() < params.max_sentences {
            for i in 0..pool.len() {
                if in_selection[i] {
                    continue;
                }
                consider(
                    tv(&agg_vec, agg_total, None, Some(i)),
                    Move::Add(i),
                    &mut best,
                );
            }
        }
        let covered_now: Vec<usize> = (0..dim)
            .filter(|&k| in_target[k] && agg_vec[k] > 0)
            .collect();
        for &out_idx in &selected_idx {
            for i in 0..pool.len() {
                if in_selection[i] {
                    continue;
                }
                let still_covered = covered_now.iter().all(|&k| {
                    agg_vec[k] - sent_vecs[out_idx][k] + sent_vecs[i][k] > 0
                });
                if !still_covered {
                    continue;
                }
                consider(
                    tv(&agg_vec, agg_total, Some(out_idx), Some(i)),
                    Move::Swap {
                        out: out_idx,
                        inn: i,
                    },
                    &mut best,
                );
            }
        }
        let Some((div, mv)) = best else { break };
        if current_div - div < params.epsilon {
            break;
        }
        match mv {
            Move::Add(i) => {
                in_selection[i] = true;
                selected_idx.push(i);
                for k in 0..dim {
                    agg_vec[k] += sent_vecs[i][k];
                }
                agg_total += sent_totals[i];
            }
            Move::Swap { out, inn } => {
                in_selection[out] = false;
                in_selection[inn] = true;
                selected_idx.retain(|&k| k != out);
                selected_idx.push(inn);
                for k in 0..dim {
                    agg_vec[k] = agg_vec[k] - sent_vecs[out][k] + sent_vecs[inn][k];
                }
                agg_total = agg_total - sent_totals[out] + sent_totals[inn];
            }
        }
        current_div = tv(&agg_vec, agg_total, None, None);
    }

    let mut aggregate = DiphoneDistribution::new();
    for &k in &selected_idx {
        aggregate.merge(&pool[k].diphones);
    }
    let (cov, _) = coverage::<F>(&aggregate, &target_support);
    Ok(SelectionState {
        selected: selected_idx.iter().map(|&i| pool[i].id.clone()).collect(),
        aggregate,
        coverage: cov,
        divergence: current_div,
        unreachable,
    })
}

/// Report row pairing target and selection relative frequencies.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedFrequency<F: Real> {
    pub pair: Diphone,
    pub target_relfreq: F,
    pub selection_relfreq: F,
}

#[derive(Debug, Clone)]
pub struct SelectionReport<F: Real> {
    pub coverage: F,
    pub divergence: F,
    pub sentence_count: usize,
    pub top_pairs: Vec<PairedFrequency<F>>,
}

/// Summarize a selection against a target, with the top-n pair table for
/// plotting.
pub fn evaluate_selection<F: Real>(
    state: &SelectionState<F>,
    target: &DiphoneDistribution,
    top: usize,
) -> SelectionReport<F> {
    let top_pairs = crate::diphone_stats::top_n::<F>(target, top)
        .into_iter()
        .map(|(pair, target_relfreq)| PairedFrequency {
            selection_relfreq: state.aggregate.relfreq(&pair),
            pair,
            target_relfreq,
        })
        .collect();
    let (cov, _) = coverage::<F>(&state.aggregate, &target.support());
    SelectionReport {
        coverage: cov,
        divergence: divergence_or_max(&state.aggregate, target),
        sentence_count: state.selected.len(),
        top_pairs,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Scalar;

    fn m() -> &'static ScriptModel {
        ScriptModel::shared()
    }

    fn cs() -> ConstraintSet<Scalar> {
        ConstraintSet::default_set()
    }

    fn sentence(id: &str, segments: &[&[&str]]) -> CandidateSentence {
        let mut phones = Vec::new();
        for (i, seg) in segments.iter().enumerate() {
            if i > 0 {
                phones.push(PhoneStreamItem::Pause);
            }
            phones.push(PhoneStreamItem::Segment(
                seg.iter().map(|p| p.to_string()).collect(),
            ));
        }
        let diphones = diphone_counts(m(), &phones).unwrap();
        CandidateSentence {
            id: id.to_string(),
            text: String::new(),
            phones,
            diphones,
            word_freq_score: None,
        }
    }

    #[test]
    fn select_words_ranks_by_coverage_then_frequency() {
        let mut missing = BTreeSet::new();
        missing.insert(("d".to_string(), "ix".to_string()));
        let tokens = vec![("دل".to_string(), 100u64), ("با".to_string(), 500u64)];
        let ranked = select_words(m(), &cs(), &tokens, &missing);
        assert_eq!(ranked.len(), 1);
        assert_eq!(ranked[0].token, "دل");

        assert!(select_words(m(), &cs(), &tokens, &BTreeSet::new()).is_empty());

        // same coverage, higher frequency first
        let mut missing = BTreeSet::new();
        missing.insert(("b".to_string(), "aa".to_string()));
        let tokens = vec![("با".to_string(), 10u64), ("بار".to_string(), 20u64)];
        let ranked = select_words(m(), &cs(), &tokens, &missing);
        assert_eq!(ranked[0].token, "بار");
        assert_eq!(ranked[1].token, "با");
    }

    #[test]
    fn single_covering_sentence_is_selected_alone() {
        let s = sentence("s1", &[&["b", "aa", "n"]]);
        let target = s.diphones.clone();
        let state =
            select_sentences::<Scalar>(&[s], &target, &DesignParams::default()).unwrap();
        assert_eq!(state.selected, vec!["s1"]);
        assert_eq!(state.coverage, 1.0);
        assert_eq!(state.divergence, 0.0);
        assert!(state.unreachable.is_empty());
    }

    #[test]
    fn unreachable_pairs_are_reported() {
        let s = sentence("s1", &[&["b", "aa"]]);
        let mut target = DiphoneDistribution::new();
        target.add_segment(&["b".into(), "aa".into()]);
        target.add_segment(&["k".into(), "u".into()]);
        let state =
            select_sentences::<Scalar>(&[s], &target, &DesignParams::default()).unwrap();
        assert_eq!(
            state.unreachable,
            vec![("k".to_string(), "u".to_string())]
        );
        assert_eq!(state.coverage, 0.5);
    }

    #[test]
    fn adding_sentences_never_decreases_coverage() {
        let pool = vec![
            sentence("a", &[&["b", "aa", "n"]]),
            sentence("b", &[&["k", "u", "r", "d"]]),
            sentence("c", &[&["sh", "a", "w"]]),
        ];
        let mut target = DiphoneDistribution::new();
        for s in &pool {
            target.merge(&s.diphones);
        }
        let state =
            select_sentences::<Scalar>(&pool, &target, &DesignParams::default()).unwrap();
        assert_eq!(state.coverage, 1.0);
    }

    #[test]
    fn selection_is_deterministic_under_pool_reordering() {
        let pool = vec![
            sentence("a", &[&["b", "aa", "n"]]),
            sentence("b", &[&["k", "u", "r", "d"]]),
            sentence("c", &[&["b", "aa", "k", "u"]]),
        ];
        let mut target = DiphoneDistribution::new();
        for s in &pool {
            target.merge(&s.diphones);
        }
        let params = DesignParams::default();
        let forward = select_sentences::<Scalar>(&pool, &target, &params).unwrap();
        let mut reversed = pool.clone();
        reversed.reverse();
        let backward = select_sentences::<Scalar>(&reversed, &target, &params).unwrap();
        assert_eq!(forward.selected, backward.selected);
        assert_eq!(forward.divergence, backward.divergence);
    }

    #[test]
    fn evaluate_full_pool_against_its_own_distribution() {
        let pool = vec![
            sentence("a", &[&["b", "aa", "n"]]),
            sentence("b", &[&["k", "u", "r", "d"]]),
        ];
        let mut target = DiphoneDistribution::new();
        for s in &pool {
            target.merge(&s.diphones);
        }
        let state =
            select_sentences::<Scalar>(&pool, &target, &DesignParams::default()).unwrap();
        let report = evaluate_selection(&state, &target, 20);
        assert_eq!(report.divergence, 0.0);
        assert_eq!(report.coverage, 1.0);
        // report values equal recomputation from scratch
        let mut recomputed = DiphoneDistribution::new();
        for id in &state.selected {
            let s = pool.iter().find(|s| &s.id == id).unwrap();
            recomputed.merge(&s.diphones);
        }
        assert_eq!(recomputed, state.aggregate);
    }

    #[test]
    fn empty_pool_and_empty_target_are_errors() {
        let target = {
            let mut t = DiphoneDistribution::new();
            t.add_segment(&["b".into(), "aa".into()]);
            t
        };
        assert!(matches!(
            select_sentences::<Scalar>(&[], &target, &DesignParams::default()),
            Err(DesignError::EmptyPool)
        ));
        let s = sentence("a", &[&["b", "aa"]]);
        assert!(matches!(
            select_sentences::<Scalar>(&[s], &DiphoneDistribution::new(), &DesignParams::default()),
            Err(DesignError::EmptyTarget)
        ));
    }

    #[test]
    fn from_text_builds_pause_segmented_stream() {
        let rules = RuleTable::default();
        let s = CandidateSentence::from_text(m(), &rules, &cs(), "s1", "دل، دل").unwrap();
        assert_eq!(s.phones.len(), 3);
        assert!(matches!(s.phones[1], PhoneStreamItem::Pause));
        assert_eq!(s.diphones.count(&("d".into(), "ix".into())), 2);
        assert_eq!(s.diphones.count(&("l".into(), "d".into())), 0);
    }
}
