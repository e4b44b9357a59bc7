//! WER/PER scoring: Levenshtein alignment with a deterministic
//! tie-break, pooled corpus-level rates, and per-topic reporting.

use std::fmt;

use thiserror::Error;

/// Edit operations in alignment order (reference side left to right).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EditOp {
    Hit,
    Substitution,
    Deletion,
    Insertion,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlignmentResult {
    pub hits: usize,
    pub substitutions: usize,
    pub insertions: usize,
    pub deletions: usize,
    pub ops: Vec<EditOp>,
    pub ref_len: usize,
}

impl AlignmentResult {
    pub fn distance(&self) -> usize {
        self.substitutions + self.insertions + self.deletions
    }

    /// (S+I+D)/ref_len as a percentage; None for an empty reference.
    pub fn error_rate(&self) -> Option<f64> {
        if self.ref_len == 0 {
            None
        } else {
            Some(self.distance() as f64 / self.ref_len as f64 * 100.0)
        }
    }
}

#[derive(Debug, Error)]
pub enum ScoreError {
    #[error("total reference length is zero")]
    EmptyReference,
}

/// Minimum-edit-distance alignment with unit costs. On equal cost the
/// trace prefers hit over substitution over deletion over insertion.
pub fn align<T: PartialEq>(reference: &[T], hypothesis: &[T]) -> AlignmentResult {
    let n = reference.len();
    let m = hypothesis.len();
    // dist[i][j]: edit distance between reference[..i] and hypothesis[..j].
    let mut dist = vec![vec![0usize; m + 1]; n + 1];
    // back[i][j]: preferred op that produced dist[i][j].
    let mut back = vec![vec![EditOp::Hit; m + 1]; n + 1];
    for i in 1..=n {
        dist[i][0] = i;
        back[i][0] = EditOp::Deletion;
    }
    for j in 1..=m {
        dist[0][j] = j;
        back[0][j] = EditOp::Insertion;
    }
    for i in 1..=n {
        for j in 1..=m {
            let matched = reference[i - 1] == hypothesis[j - 1];
            let diag = dist[i - 1][j - 1] + if matched { 0 } else { 1 };
            let del = dist[i - 1][j] + 1;
            let ins = dist[i][j - 1] + 1;
            // candidate order encodes the tie-break preference
            let diag_op = if matched {
                EditOp::Hit
            } else {
                EditOp::Substitution
            };
            let (best, op) = [(diag, diag_op), (del, EditOp::Deletion), (ins, EditOp::Insertion)]
                .into_iter()
                .min_by_key(|&(cost, _)| cost)
                .unwrap();
            dist[i][j] = best;
            back[i][j] = op;
        }
    }
    let mut ops = Vec::new();
    let (mut i, mut j) = (n, m);
    while i > 0 || j > 0 {
        let op = back[i][j];
        ops.push(op);
        match op {
            EditOp::Hit | EditOp::Substitution => {
                i -= 1;
                j -= 1;
            }
            EditOp::Deletion => i -= 1,
            EditOp::Insertion => j -= 1,
        }
    }
    ops.reverse();
    let mut result = AlignmentResult {
        hits: 0,
        substitutions: 0,
        insertions: 0,
        deletions: 0,
        ops,
        ref_len: n,
    };
    for op in &result.ops {
        match op {
            EditOp::Hit => result.hits += 1,
            EditOp::Substitution => result.substitutions += 1,
            EditOp::Deletion => result.deletions += 1,
            EditOp::Insertion => result.insertions += 1,
        }
    }
    debug_assert_eq!(
        result.hits + result.substitutions + result.deletions,
        result.ref_len
    );
    result
}

/// Pooled corpus-level error rate: Σ(S+I+D) / Σ ref_len × 100.
pub fn pooled_rate<T: PartialEq>(pairs: &[(Vec<T>, Vec<T>)]) -> Result<f64, ScoreError> {
    let mut errors = 0usize;
    let mut ref_len = 0usize;
    for (reference, hypothesis) in pairs {
        let a = align(reference, hypothesis);
        errors += a.distance();
        ref_len += a.ref_len;
    }
    if ref_len == 0 {
        return Err(ScoreError::EmptyReference);
    }
    Ok(errors as f64 / ref_len as f64 * 100.0)
}

/// Mean of per-utterance error rates (utterances with empty references
/// are skipped); secondary to [`pooled_rate`].
pub fn per_utterance_rate<T: PartialEq>(pairs: &[(Vec<T>, Vec<T>)]) -> Result<f64, ScoreError> {
    let rates: Vec<f64> = pairs
        .iter()
        .filter_map(|(r, h)| align(r, h).error_rate())
        .collect();
    if rates.is_empty() {
        return Err(ScoreError::EmptyReference);
    }
    Ok(rates.iter().sum::<f64>() / rates.len() as f64)
}

/// Word error rate over token sequences (pooled, percentage).
pub fn wer(pairs: &[(Vec<String>, Vec<String>)]) -> Result<f64, ScoreError> {
    pooled_rate(pairs)
}

/// Phoneme error rate over phone sequences (pooled, percentage).
pub fn per(pairs: &[(Vec<String>, Vec<String>)]) -> Result<f64, ScoreError> {
    pooled_rate(pairs)
}

/// The fixed topic set of the test-set design, in report order.
pub const TOPICS: [&str; 11] = [
    "General",
    "Religious",
    "Sport",
    "Politics",
    "Economics",
    "Social",
    "Novel",
    "Letter",
    "Conversation",
    "Scientific/Technology",
    "Poet",
];

pub const OTHER_TOPIC: &str = "other";

/// One scored utterance: word and phone token pairs plus a topic label.
#[derive(Debug, Clone)]
pub struct ScoredUtterance {
    pub utt_id: String,
    pub topic: String,
    pub ref_words: Vec<String>,
    pub hyp_words: Vec<String>,
    pub ref_phones: Vec<String>,
    pub hyp_phones: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TopicRow {
    pub topic: String,
    pub utterances: usize,
    /// None when the topic has no reference tokens.
    pub wer: Option<f64>,
    pub per: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct TopicReport {
    pub rows: Vec<TopicRow>,
    pub overall_wer: f64,
    pub overall_per: f64,
    /// Mean of per-utterance rates; secondary to the pooled figures.
    pub mean_utterance_wer: f64,
    /// Labels outside the known topic set, binned into "other".
    pub unknown_topics: Vec<String>,
}

impl fmt::Display for TopicReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "topic\tutterances\twer\tper")?;
        for row in &self.rows {
            let fmt_rate = |r: Option<f64>| match r {
                Some(v) => format!("{:.1}", v),
                None => "-".to_string(),
            };
            writeln!(
                f,
                "{}\t{}\t{}\t{}",
                row.topic,
                row.utterances,
                fmt_rate(row.wer),
                fmt_rate(row.per)
            )?;
        }
        writeln!(f, "overall\t-\t{:.1}\t{:.1}", self.overall_wer, self.overall_per)
    }
}

/// Pooled WER/PER per topic (rows in [`TOPICS`] order plus "other"),
/// with pooled overall figures. Unknown labels are binned to "other"
/// and reported back for warning.
pub fn per_topic_report(utterances: &[ScoredUtterance]) -> Result<TopicReport, ScoreError> {
    struct Tally {
        utterances: usize,
        word_errors: usize,
        word_ref: usize,
        phone_errors: usize,
        phone_ref: usize,
    }
    let mut tallies: Vec<Tally> = (0..TOPICS.len() + 1)
        .map(|_| Tally {
            utterances: 0,
            word_errors: 0,
            word_ref: 0,
            phone_errors: 0,
            phone_ref: 0,
        })
        .collect();
    let mut unknown_topics: Vec<String> = Vec::new();
    let mut utt_rates: Vec<f64> = Vec::new();
    for utt in utterances {
        let idx = match TOPICS.iter().position(|t| *t == utt.topic) {
            Some(i) => i,
            None => {
                if !unknown_topics.contains(&utt.topic) {
                    unknown_topics.push(utt.topic.clone());
                }
                TOPICS.len()
            }
        };
        let wa = align(&utt.ref_words, &utt.hyp_words);
        let pa = align(&utt.ref_phones, &utt.hyp_phones);
        let t = &mut tallies[idx];
        t.utterances += 1;
        t.word_errors += wa.distance();
        t.word_ref += wa.ref_len;
        t.phone_errors += pa.distance();
        t.phone_ref += pa.ref_len;
        if let Some(r) = wa.error_rate() {
            utt_rates.push(r);
        }
    }
    let total_word_errors: usize = tallies.iter().map(|t| t.word_errors).sum();
    let total_word_ref: usize = tallies.iter().map(|t| t.word_ref).sum();
    let total_phone_errors: usize = tallies.iter().map(|t| t.phone_errors).sum();
    let total_phone_ref: usize = tallies.iter().map(|t| t.phone_ref).sum();
    if total_word_ref == 0 {
        return Err(ScoreError::EmptyReference);
    }
    let rate = |errors: usize, reference: usize| {
        if reference == 0 {
            None
        } else {
            Some(errors as f64 / reference as f64 * 100.0)
        }
    };
    let rows = tallies
        .iter()
        .enumerate()
        .map(|(i, t)| TopicRow {
            topic: TOPICS
                .get(i)
                .copied()
                .unwrap_or(OTHER_TOPIC)
                .to_string(),
            utterances: t.utterances,
            wer: rate(t.word_errors, t.word_ref),
            per: rate(t.phone_errors, t.phone_ref),
        })
        .collect();
    Ok(TopicReport {
        rows,
        overall_wer: rate(total_word_errors, total_word_ref).unwrap(),
        overall_per: rate(total_phone_errors, total_phone_ref).unwrap_or(0.0),
        mean_utterance_wer: if utt_rates.is_empty() {
            0.0
        } else {
            utt_rates.iter().sum::<f64>() / utt_rates.len() as f64
        },
        unknown_topics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(|t| t.to_string()).collect()
    }

    /// Cost-only DP oracle, written independently of `align`.
    fn oracle_distance<T: PartialEq>(a: &[T], b: &[T]) -> usize {
        let mut prev: Vec<usize> = (0..=b.len()).collect();
        for i in 1..=a.len() {
            let mut row = vec![i; b.len() + 1];
            for j in 1..=b.len() {
                let sub = prev[j - 1] + usize::from(a[i - 1] != b[j - 1]);
                row[j] = sub.min(prev[j] + 1).min(row[j - 1] + 1);
            }
            prev = row;
        }
        prev[b.len()]
    }

    #[test]
    fn identity_alignment() {
        let a = align(&toks("a b c"), &toks("a b c"));
        assert_eq!((a.substitutions, a.insertions, a.deletions), (0, 0, 0));
        assert_eq!(a.hits, 3);
        assert_eq!(a.error_rate(), Some(0.0));
    }

    #[test]
    fn single_substitution_of_three() {
        let a = align(&toks("a b c"), &toks("a x c"));
        assert_eq!(a.substitutions, 1);
        assert!((a.error_rate().unwrap() - 33.333333333333336).abs() < 1e-9);
    }

    #[test]
    fn invariant_hits_plus_subs_plus_dels_is_ref_len() {
        let a = align(&toks("a b c d"), &toks("x a b q r"));
        assert_eq!(a.hits + a.substitutions + a.deletions, a.ref_len);
        assert_eq!(a.distance(), oracle_distance(&toks("a b c d"), &toks("x a b q r")));
    }

    #[test]
    fn tie_break_prefers_substitution_over_del_ins() {
        // "a" vs "b": substitution (1 edit), never deletion+insertion.
        let a = align(&toks("a"), &toks("b"));
        assert_eq!(a.ops, vec![EditOp::Substitution]);
    }

    #[test]
    fn matches_oracle_on_exhaustive_small_cases() {
        // all sequences of length <= 3 over a 2-symbol alphabet
        let mut seqs: Vec<Vec<u8>> = vec![vec![]];
        for _ in 0..3 {
            let mut next = seqs.clone();
            for s in &seqs {
                for c in [0u8, 1u8] {
                    let mut s2 = s.clone();
                    s2.push(c);
                    next.push(s2);
                }
            }
            seqs = next;
        }
        for a in &seqs {
            for b in &seqs {
                let d = align(a, b).distance();
                assert_eq!(d, oracle_distance(a, b));
                // symmetry
                assert_eq!(d, align(b, a).distance());
                // triangle inequality through every midpoint
                for c in &seqs {
                    assert!(
                        d <= align(a, c).distance() + align(c, b).distance(),
                        "triangle violated"
                    );
                }
            }
        }
    }

    #[test]
    fn pooled_rate_is_authoritative_over_utterance_average() {
        // 1-token utterance fully wrong + 9-token utterance fully right:
        // pooled = 1/10 = 10%, per-utterance mean = 50%.
        let pairs = vec![
            (toks("a"), toks("x")),
            (toks("b b b b b b b b b"), toks("b b b b b b b b b")),
        ];
        assert!((pooled_rate(&pairs).unwrap() - 10.0).abs() < 1e-12);
        assert!((per_utterance_rate(&pairs).unwrap() - 50.0).abs() < 1e-12);
    }

    #[test]
    fn wer_can_exceed_100() {
        let pairs = vec![(toks("a"), toks("x y z"))];
        assert!(wer(&pairs).unwrap() > 100.0);
    }

    #[test]
    fn empty_reference_is_an_error() {
        assert!(matches!(
            wer(&[(Vec::new(), toks("a"))]),
            Err(ScoreError::EmptyReference)
        ));
    }

    #[test]
    fn one_deletion_in_ten_phones_is_ten_percent() {
        let reference = toks("p1 p2 p3 p4 p5 p6 p7 p8 p9 p10");
        let mut hypothesis = reference.clone();
        hypothesis.remove(4);
        assert!((per(&[(reference, hypothesis)]).unwrap() - 10.0).abs() < 1e-12);
    }

    #[test]
    fn scoring_is_order_invariant() {
        let pairs = vec![
            (toks("a b c"), toks("a x c")),
            (toks("d e"), toks("d e f")),
        ];
        let mut reversed = pairs.clone();
        reversed.reverse();
        assert_eq!(wer(&pairs).unwrap(), wer(&reversed).unwrap());
    }

    fn utt(topic: &str, reference: &str, hypothesis: &str) -> ScoredUtterance {
        ScoredUtterance {
            utt_id: format!("{}_{}", topic, reference.len()),
            topic: topic.to_string(),
            ref_words: toks(reference),
            hyp_words: toks(hypothesis),
            ref_phones: toks(reference),
            hyp_phones: toks(hypothesis),
        }
    }

    #[test]
    fn single_topic_report() {
        let report = per_topic_report(&[utt("Sport", "a b", "a b")]).unwrap();
        let populated: Vec<&TopicRow> =
            report.rows.iter().filter(|r| r.utterances > 0).collect();
        assert_eq!(populated.len(), 1);
        assert_eq!(populated[0].topic, "Sport");
        assert_eq!(populated[0].wer, Some(0.0));
        // empty topics are present with undefined rates
        let general = report.rows.iter().find(|r| r.topic == "General").unwrap();
        assert_eq!(general.utterances, 0);
        assert_eq!(general.wer, None);
    }

    #[test]
    fn topic_rates_recompute_from_pooled_counts() {
        let utterances = vec![
            utt("Sport", "a b c d", "a b x d"),
            utt("Sport", "e f", "e f"),
            utt("Poet", "g h i", "g q q"),
        ];
        let report = per_topic_report(&utterances).unwrap();
        let sport = report.rows.iter().find(|r| r.topic == "Sport").unwrap();
        // pooled: 1 error over 6 reference tokens
        assert!((sport.wer.unwrap() - 100.0 / 6.0).abs() < 1e-9);
        let poet = report.rows.iter().find(|r| r.topic == "Poet").unwrap();
        assert!((poet.wer.unwrap() - 200.0 / 3.0).abs() < 1e-9);
        // overall token-weighted figure equals recomputation from pools
        assert!((report.overall_wer - 300.0 / 9.0).abs() < 1e-9);
    }

    #[test]
    fn unknown_topic_is_binned_to_other() {
        let report = per_topic_report(&[utt("Gossip", "a", "a")]).unwrap();
        assert_eq!(report.unknown_topics, vec!["Gossip".to_string()]);
        let other = report.rows.iter().find(|r| r.topic == OTHER_TOPIC).unwrap();
        assert_eq!(other.utterances, 1);
    }
}
