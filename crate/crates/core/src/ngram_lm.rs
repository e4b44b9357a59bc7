//! Trigram language model with absolute-discounting back-off smoothing,
//! ARPA import/export, and perplexity.
//!
//! Counting is closed-vocabulary: tokens outside the supplied vocabulary
//! map to the unknown marker. Sentences are padded with one begin marker
//! and one end marker; the begin marker is never predicted and carries
//! the conventional -99 unigram log-probability in ARPA output.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::num::Real;

pub const BOS: &str = "<s>";
pub const EOS: &str = "</s>";
pub const UNK: &str = "<unk>";

/// Log10 probability assigned to the never-predicted begin marker.
const BOS_LOG10: f64 = -99.0;

pub const DEFAULT_ORDER: usize = 3;
pub const DEFAULT_DISCOUNT: f64 = 0.7;

#[derive(Debug, Error)]
pub enum LmError {
    #[error("discount must lie strictly between 0 and 1, got {0}")]
    BadDiscount(f64),
    #[error("no unigram counts; cannot estimate a model")]
    NoUnigrams,
    #[error("ARPA line {line}: {msg}")]
    Malformed { line: usize, msg: String },
}

/// Raw n-gram counts for orders 1..=order over boundary-padded sentences.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NgramCounts {
    pub order: usize,
    /// counts[n-1] maps an order-n n-gram to its count.
    pub counts: Vec<BTreeMap<Vec<String>, u64>>,
    /// Full vocabulary including the three markers.
    pub vocab: BTreeSet<String>,
}

impl NgramCounts {
    pub fn new(order: usize) -> Self {
        assert!(order >= 1);
        let mut vocab = BTreeSet::new();
        vocab.insert(BOS.to_string());
        vocab.insert(EOS.to_string());
        vocab.insert(UNK.to_string());
        NgramCounts {
            order,
            counts: vec![BTreeMap::new(); order],
            vocab,
        }
    }

    /// Associative merge for shard-parallel counting.
    pub fn merge(&mut self, other: &NgramCounts) {
        assert_eq!(self.order, other.order);
        for (mine, theirs) in self.counts.iter_mut().zip(&other.counts) {
            for (gram, c) in theirs {
                *mine.entry(gram.clone()).or_insert(0) += c;
            }
        }
        self.vocab.extend(other.vocab.iter().cloned());
    }

    /// Debug dump: `order<TAB>tokens space-joined<TAB>count`, sorted.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for (i, table) in self.counts.iter().enumerate() {
            for (gram, c) in table {
                out.push_str(&format!("{}\t{}\t{}\n", i + 1, gram.join(" "), c));
            }
        }
        out
    }
}

/// Count n-grams of orders 1..=order over sentences, mapping tokens
/// outside `vocab` (when given) to the unknown marker.
pub fn count_ngrams(
    sentences: &[Vec<String>],
    order: usize,
    vocab: Option<&BTreeSet<String>>,
) -> NgramCounts {
    let mut counts = NgramCounts::new(order);
    for sentence in sentences {
        let mut padded: Vec<String> = Vec::with_capacity(sentence.len() + 2);
        padded.push(BOS.to_string());
        for token in sentence {
            let mapped = match vocab {
                Some(v) if !v.contains(token) => UNK.to_string(),
                _ => token.clone(),
            };
            counts.vocab.insert(mapped.clone());
            padded.push(mapped);
        }
        padded.push(EOS.to_string());
        for n in 1..=order {
            for window in padded.windows(n) {
                *counts.counts[n - 1]
                    .entry(window.to_vec())
                    .or_insert(0) += 1;
            }
        }
    }
    counts
}

/// Back-off n-gram model: log10 probabilities for observed n-grams and
/// log10 back-off weights for observed histories.
#[derive(Debug, Clone)]
pub struct NgramModel<F: Real> {
    pub order: usize,
    /// logprob[n-1]: order-n n-gram → log10 P(last | rest).
    pub logprob: Vec<BTreeMap<Vec<String>, F>>,
    /// backoff[n-1]: order-n history → log10 back-off weight
    /// (orders 1..order-1 only; absent histories back off with weight 1).
    pub backoff: Vec<BTreeMap<Vec<String>, F>>,
    pub vocab: BTreeSet<String>,
}

impl<F: Real> NgramModel<F> {
    fn map_token<'a>(&'a self, token: &'a str) -> &'a str {
        if self.vocab.contains(token) {
            token
        } else {
            UNK
        }
    }

    /// Conditional probability P(w | history) with back-off recursion.
    pub fn cond_prob(&self, history: &[&str], word: &str) -> F {
        let word = self.map_token(word);
        let start = history.len().saturating_sub(self.order - 1);
        let history: Vec<&str> = history[start..]
            .iter()
            .map(|t| self.map_token(t))
            .collect();
        self.cond_prob_inner(&history, word)
    }

    fn cond_prob_inner(&self, history: &[&str], word: &str) -> F {
        let mut gram: Vec<String> = history.iter().map(|t| t.to_string()).collect();
        gram.push(word.to_string());
        if let Some(&lp) = self.logprob[gram.len() - 1].get(&gram) {
            return F::from_f64(10.0).unwrap().powf(lp);
        }
        if history.is_empty() {
            // The whole predicted vocabulary carries an explicit unigram;
            // an absent token can only be an unmapped out-of-vocabulary
            // word, treated as unknown.
            let unk = vec![UNK.to_string()];
            let lp = self.logprob[0][&unk];
            return F::from_f64(10.0).unwrap().powf(lp);
        }
        let hist_key: Vec<String> = history.iter().map(|t| t.to_string()).collect();
        let bow = self.backoff[history.len() - 1]
            .get(&hist_key)
            .map(|&b| F::from_f64(10.0).unwrap().powf(b))
            .unwrap_or_else(F::one);
        bow * self.cond_prob_inner(&history[1..], word)
    }

    pub fn cond_logprob(&self, history: &[&str], word: &str) -> F {
        self.cond_prob(history, word).log10()
    }

    /// log10 probability of a sentence (without markers); includes the
    /// end-marker prediction.
    pub fn sentence_logprob(&self, tokens: &[&str]) -> F {
        let mut padded: Vec<&str> = Vec::with_capacity(tokens.len() + 2);
        padded.push(BOS);
        padded.extend_from_slice(tokens);
        padded.push(EOS);
        let mut total = F::zero();
        for i in 1..padded.len() {
            total = total + self.cond_logprob(&padded[..i], padded[i]);
        }
        total
    }

    /// Tokens of the vocabulary that the model can predict (everything
    /// except the begin marker).
    pub fn predicted_vocab(&self) -> impl Iterator<Item = &String> {
        self.vocab.iter().filter(|t| t.as_str() != BOS)
    }
}

/// Estimate a back-off model from counts by absolute discounting with
/// interpolation: P(w|h) = max(c(hw)−d, 0)/c(h) + bow(h)·P(w|h'), with
/// bow(h) = d·N1+(h)/c(h). The unigram level interpolates with a uniform
/// distribution over the predicted vocabulary.
pub fn estimate<F: Real>(counts: &NgramCounts, discount: F) -> Result<NgramModel<F>, LmError> {
    let d = discount.to_f64().unwrap_or(f64::NAN);
    if !(d > 0.0 && d < 1.0) {
        return Err(LmError::BadDiscount(d));
    }
    let predicted: Vec<&String> = counts.vocab.iter().filter(|t| t.as_str() != BOS).collect();
    let total: u64 = counts.counts[0]
        .iter()
        .filter(|(g, _)| g[0] != BOS)
        .map(|(_, &c)| c)
        .sum();
    if total == 0 {
        return Err(LmError::NoUnigrams);
    }
    let mut model = NgramModel {
        order: counts.order,
        logprob: vec![BTreeMap::new(); counts.order],
        backoff: vec![BTreeMap::new(); counts.order.saturating_sub(1)],
        vocab: counts.vocab.clone(),
    };
    // Unigrams: every predicted token receives uniform-interpolated mass.
    let total_f = F::from_u64_exact(total);
    let seen = counts.counts[0]
        .iter()
        .filter(|(g, &c)| g[0] != BOS && c > 0)
        .count();
    let bow0 = discount * F::from_usize_exact(seen) / total_f;
    let p0 = F::one() / F::from_usize_exact(predicted.len());
    for token in &predicted {
        let c = counts.counts[0]
            .get(&vec![(*token).clone()])
            .copied()
            .unwrap_or(0);
        let discounted = (F::from_u64_exact(c) - discount).max(F::zero()) / total_f;
        let p = discounted + bow0 * p0;
        model.logprob[0].insert(vec![(*token).clone()], p.log10());
    }
    model.logprob[0].insert(
        vec![BOS.to_string()],
        F::from_f64(BOS_LOG10).expect("representable"),
    );
    // Higher orders, lowest first so back-off targets already exist.
    for n in 2..=counts.order {
        // Group observed n-grams by history.
        let mut by_history: BTreeMap<Vec<String>, Vec<(String, u64)>> = BTreeMap::new();
        for (gram, &c) in &counts.counts[n - 1] {
            if c == 0 {
                continue;
            }
            let (hist, word) = gram.split_at(n - 1);
            by_history
                .entry(hist.to_vec())
                .or_default()
                .push((word[0].clone(), c));
        }
        for (hist, words) in by_history {
            let ctx_total: u64 = words.iter().map(|(_, c)| c).sum();
            let ctx_f = F::from_u64_exact(ctx_total);
            let bow = discount * F::from_usize_exact(words.len()) / ctx_f;
            let hist_refs: Vec<&str> = hist[1..].iter().map(|s| s.as_str()).collect();
            for (word, c) in &words {
                let discounted = (F::from_u64_exact(*c) - discount).max(F::zero()) / ctx_f;
                let lower = model.cond_prob_inner(&hist_refs, word);
                let p = discounted + bow * lower;
                let mut gram = hist.clone();
                gram.push(word.clone());
                model.logprob[n - 1].insert(gram, p.log10());
            }
            model.backoff[n - 2].insert(hist, bow.log10());
        }
    }
    Ok(model)
}

/// Perplexity 10^(−Σ log10 P / N) with N counting predicted tokens
/// including the end marker.
pub fn perplexity<F: Real>(model: &NgramModel<F>, sentences: &[Vec<String>]) -> F {
    let mut total = F::zero();
    let mut n = 0usize;
    for sentence in sentences {
        let refs: Vec<&str> = sentence.iter().map(|t| t.as_str()).collect();
        total = total + model.sentence_logprob(&refs);
        n += sentence.len() + 1;
    }
    assert!(n > 0, "perplexity needs a non-empty test set");
    F::from_f64(10.0).unwrap().powf(-total / F::from_usize_exact(n))
}

/// Serialize in standard ARPA text layout; deterministic (sorted
/// n-grams, shortest-round-trip float formatting).
pub fn arpa_export<F: Real>(model: &NgramModel<F>) -> String {
    let mut out = String::from("\\data\\\n");
    for n in 1..=model.order {
        out.push_str(&format!("ngram {}={}\n", n, model.logprob[n - 1].len()));
    }
    for n in 1..=model.order {
        out.push_str(&format!("\n\\{}-grams:\n", n));
        for (gram, lp) in &model.logprob[n - 1] {
            out.push_str(&format!("{}\t{}", lp, gram.join(" ")));
            if n < model.order {
                if let Some(bow) = model.backoff[n - 1].get(gram) {
                    out.push_str(&format!("\t{}", bow));
                }
            }
            out.push('\n');
        }
    }
    out.push_str("\n\\end\\\n");
    out
}

/// Parse an ARPA file produced by [`arpa_export`] (or any conforming
/// writer); errors carry 1-based line numbers.
pub fn arpa_import<F: Real>(data: &str) -> Result<NgramModel<F>, LmError> {
    let mut lines = data.lines().enumerate().peekable();
    let mut declared: Vec<usize> = Vec::new();
    // Header.
    let mut in_data = false;
    for (idx, raw) in lines.by_ref() {
        let line = idx + 1;
        let t = raw.trim();
        if t.is_empty() {
            if in_data && !declared.is_empty() {
                break;
            }
            continue;
        }
        if t == "\\data\\" {
            in_data = true;
            continue;
        }
        if !in_data {
            return Err(LmError::Malformed {
                line,
                msg: "expected \\data\\ header".into(),
            });
        }
        let rest = t.strip_prefix("ngram ").ok_or(LmError::Malformed {
            line,
            msg: "expected `ngram N=count`".into(),
        })?;
        let (n, count) = rest.split_once('=').ok_or(LmError::Malformed {
            line,
            msg: "expected `ngram N=count`".into(),
        })?;
        let n: usize = n.parse().map_err(|_| LmError::Malformed {
            line,
            msg: "bad order".into(),
        })?;
        let count: usize = count.parse().map_err(|_| LmError::Malformed {
            line,
            msg: "bad count".into(),
        })?;
        if n != declared.len() + 1 {
            return Err(LmError::Malformed {
                line,
                msg: "orders must be consecutive from 1".into(),
            });
        }
        declared.push(count);
    }
    if declared.is_empty() {
        return Err(LmError::Malformed {
            line: 1,
            msg: "no ngram declarations".into(),
        });
    }
    let order = declared.len();
    let mut model = NgramModel {
        order,
        logprob: vec![BTreeMap::new(); order],
        backoff: vec![BTreeMap::new(); order - 1],
        vocab: BTreeSet::new(),
    };
    let mut current: Option<usize> = None;
    let mut ended = false;
    for (idx, raw) in lines {
        let line = idx + 1;
        let t = raw.trim();
        if t.is_empty() {
            continue;
        }
        if t == "\\end\\" {
            ended = true;
            current = None;
            continue;
        }
        if let Some(section) = t.strip_prefix('\\').and_then(|s| s.strip_suffix("-grams:")) {
            let n: usize = section.parse().map_err(|_| LmError::Malformed {
                line,
                msg: "bad section header".into(),
            })?;
            if n < 1 || n > order {
                return Err(LmError::Malformed {
                    line,
                    msg: format!("section order {} out of range", n),
                });
            }
            current = Some(n);
            continue;
        }
        let n = current.ok_or(LmError::Malformed {
            line,
            msg: "data line outside any n-gram section".into(),
        })?;
        let fields: Vec<&str> = t.split('\t').collect();
        if fields.len() < 2 || fields.len() > 3 {
            return Err(LmError::Malformed {
                line,
                msg: "expected logprob<TAB>ngram[<TAB>backoff]".into(),
            });
        }
        let lp: f64 = fields[0].parse().map_err(|_| LmError::Malformed {
            line,
            msg: "bad log-probability".into(),
        })?;
        let gram: Vec<String> = fields[1].split_whitespace().map(|s| s.to_string()).collect();
        if gram.len() != n {
            return Err(LmError::Malformed {
                line,
                msg: format!("expected {}-gram, got {} tokens", n, gram.len()),
            });
        }
        for token in &gram {
            model.vocab.insert(token.clone());
        }
        model.logprob[n - 1].insert(gram.clone(), F::from_f64(lp).expect("representable"));
        if let Some(bow) = fields.get(2) {
            if n >= order {
                return Err(LmError::Malformed {
                    line,
                    msg: "highest order carries no back-off".into(),
                });
            }
            let bow: f64 = bow.parse().map_err(|_| LmError::Malformed {
                line,
                msg: "bad back-off weight".into(),
            })?;
            model.backoff[n - 1].insert(gram, F::from_f64(bow).expect("representable"));
        }
    }
    if !ended {
        return Err(LmError::Malformed {
            line: data.lines().count(),
            msg: "missing \\end\\".into(),
        });
    }
    for (n, &count) in declared.iter().enumerate() {
        if model.logprob[n].len() != count {
            return Err(LmError::Malformed {
                line: 0,
                msg: format!(
                    "order {} declares {} n-grams but has {}",
                    n + 1,
                    count,
                    model.logprob[n].len()
                ),
            });
        }
    }
    Ok(model)
}
