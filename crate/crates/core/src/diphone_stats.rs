//! Di-phone counts and relative frequencies over phonetically transcribed
//! text. Punctuation acts as a pause: an ordered pair is only counted
//! inside a pause-delimited segment, never across one. Counting is
//! associative, so sharded corpora merge to the same result as a single
//! pass.

use std::collections::BTreeSet;
use std::collections::BTreeMap;

use thiserror::Error;

use crate::num::Real;
use crate::script_model::ScriptModel;

pub type Diphone = (String, String);

/// One item of a pause-segmented phone stream.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PhoneStreamItem {
    Segment(Vec<String>),
    Pause,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum StatsError {
    #[error("unknown phoneme {0:?}")]
    UnknownPhoneme(String),
    #[error("distribution is empty")]
    EmptyDistribution,
    #[error("stats file line {line}: {msg}")]
    Malformed { line: usize, msg: String },
}

/// Counts and relative frequencies of ordered phoneme pairs.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DiphoneDistribution {
    counts: BTreeMap<Diphone, u64>,
    total: u64,
}

impl DiphoneDistribution {
    pub fn new() -> Self {
        Self::default()
    }

    /// Count the adjacent pairs of one pause-delimited segment: a segment
    /// of n phones contributes exactly max(n-1, 0) di-phones.
    pub fn add_segment(&mut self, phones: &[String]) {
        for pair in phones.windows(2) {
            *self
                .counts
                .entry((pair[0].clone(), pair[1].clone()))
                .or_insert(0) += 1;
            self.total += 1;
        }
    }

    pub fn merge(&mut self, other: &DiphoneDistribution) {
        for (pair, &n) in &other.counts {
            *self.counts.entry(pair.clone()).or_insert(0) += n;
        }
        self.total += other.total;
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn count(&self, pair: &Diphone) -> u64 {
        self.counts.get(pair).copied().unwrap_or(0)
    }

    pub fn counts(&self) -> &BTreeMap<Diphone, u64> {
        &self.counts
    }

    pub fn support(&self) -> BTreeSet<Diphone> {
        self.counts.keys().cloned().collect()
    }

    pub fn relfreq<F: Real>(&self, pair: &Diphone) -> F {
        if self.total == 0 {
            F::zero()
        } else {
            F::from_u64_exact(self.count(pair)) / F::from_u64_exact(self.total)
        }
    }

    /// TSV lines `phoneA<TAB>phoneB<TAB>count<TAB>relfreq`, sorted by pair.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for (pair, &n) in &self.counts {
            let rf: f64 = self.relfreq(pair);
            out.push_str(&format!("{}\t{}\t{}\t{}\n", pair.0, pair.1, n, rf));
        }
        out
    }

    pub fn parse_tsv(data: &str) -> Result<Self, StatsError> {
        let mut dist = DiphoneDistribution::new();
        for (idx, raw) in data.lines().enumerate() {
            let line = idx + 1;
            let trimmed = raw.trim_end_matches('\r');
            if trimmed.trim().is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = trimmed.split('\t').collect();
            if fields.len() < 3 {
                return Err(StatsError::Malformed {
                    line,
                    msg: "expected phoneA<TAB>phoneB<TAB>count".into(),
                });
            }
            let n: u64 = fields[2].parse().map_err(|_| StatsError::Malformed {
                line,
                msg: format!("bad count {:?}", fields[2]),
            })?;
            *dist
                .counts
                .entry((fields[0].to_string(), fields[1].to_string()))
                .or_insert(0) += n;
            dist.total += n;
        }
        Ok(dist)
    }
}

/// Count di-phones over a pause-segmented stream, validating phones
/// against the inventory.
pub fn diphone_counts(
    model: &ScriptModel,
    stream: &[PhoneStreamItem],
) -> Result<DiphoneDistribution, StatsError> {
    let mut dist = DiphoneDistribution::new();
    for item in stream {
        if let PhoneStreamItem::Segment(phones) = item {
            for p in phones {
                if model.phoneme(p).is_none() {
                    return Err(StatsError::UnknownPhoneme(p.clone()));
                }
            }
            dist.add_segment(phones);
        }
    }
    Ok(dist)
}

/// Total-variation distance: half the L1 distance between the relative
/// frequencies, over the union of both supports. Zero iff the relative
/// frequencies are identical.
pub fn divergence<F: Real>(
    p: &DiphoneDistribution,
    q: &DiphoneDistribution,
) -> Result<F, StatsError> {
    if p.total == 0 || q.total == 0 {
        return Err(StatsError::EmptyDistribution);
    }
    let mut keys: BTreeSet<&Diphone> = p.counts.keys().collect();
    keys.extend(q.counts.keys());
    let two = F::one() + F::one();
    let mut sum = F::zero();
    for pair in keys {
        let a: F = p.relfreq(pair);
        let b: F = q.relfreq(pair);
        sum = sum + (a - b).abs();
    }
    Ok(sum / two)
}

/// Symmetric chi-square distance, emitted alongside total variation for
/// diagnostics.
pub fn chi_square<F: Real>(
    p: &DiphoneDistribution,
    q: &DiphoneDistribution,
) -> Result<F, StatsError> {
    if p.total == 0 || q.total == 0 {
        return Err(StatsError::EmptyDistribution);
    }
    let mut keys: BTreeSet<&Diphone> = p.counts.keys().collect();
    keys.extend(q.counts.keys());
    let two = F::one() + F::one();
    let mut sum = F::zero();
    for pair in keys {
        let a: F = p.relfreq(pair);
        let b: F = q.relfreq(pair);
        if a + b > F::zero() {
            sum = sum + (a - b) * (a - b) / (a + b);
        }
    }
    Ok(sum / two)
}

/// Fraction of the target pair set present in `p`, plus the sorted
/// missing pairs.
pub fn coverage<F: Real>(
    p: &DiphoneDistribution,
    target_support: &BTreeSet<Diphone>,
) -> (F, Vec<Diphone>) {
    if target_support.is_empty() {
        return (F::one(), Vec::new());
    }
    let missing: Vec<Diphone> = target_support
        .iter()
        .filter(|pair| p.count(pair) == 0)
        .cloned()
        .collect();
    let covered = target_support.len() - missing.len();
    (
        F::from_usize_exact(covered) / F::from_usize_exact(target_support.len()),
        missing,
    )
}

/// The n most frequent pairs, descending by relative frequency, ties in
/// pair lexicographic order.
pub fn top_n<F: Real>(p: &DiphoneDistribution, n: usize) -> Vec<(Diphone, F)> {
    let mut pairs: Vec<(Diphone, u64)> = p
        .counts
        .iter()
        .map(|(pair, &c)| (pair.clone(), c))
        .collect();
    pairs.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    pairs
        .into_iter()
        .take(n)
        .map(|(pair, _)| {
            let rf = p.relfreq(&pair);
            (pair, rf)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Scalar;

    fn seg(phones: &[&str]) -> PhoneStreamItem {
        PhoneStreamItem::Segment(phones.iter().map(|p| p.to_string()).collect())
    }

    fn pair(a: &str, b: &str) -> Diphone {
        (a.to_string(), b.to_string())
    }

    fn m() -> &'static ScriptModel {
        ScriptModel::shared()
    }

    #[test]
    fn single_segment_counts() {
        let dist = diphone_counts(m(), &[seg(&["d", "ix", "l"])]).unwrap();
        assert_eq!(dist.count(&pair("d", "ix")), 1);
        assert_eq!(dist.count(&pair("ix", "l")), 1);
        assert_eq!(dist.total(), 2);
    }

    #[test]
    fn pauses_block_cross_segment_pairs() {
        let stream = [seg(&["d", "ix", "l"]), PhoneStreamItem::Pause, seg(&["d", "ix", "l"])];
        let dist = diphone_counts(m(), &stream).unwrap();
        assert_eq!(dist.count(&pair("d", "ix")), 2);
        assert_eq!(dist.count(&pair("ix", "l")), 2);
        assert_eq!(dist.count(&pair("l", "d")), 0);
        assert_eq!(dist.total(), 4);
    }

    #[test]
    fn single_phone_segment_is_empty() {
        let dist = diphone_counts(m(), &[seg(&["aa"])]).unwrap();
        assert_eq!(dist.total(), 0);
        assert!(dist.counts().is_empty());
    }

    #[test]
    fn unknown_phoneme_is_rejected() {
        assert_eq!(
            diphone_counts(m(), &[seg(&["d", "qq"])]),
            Err(StatsError::UnknownPhoneme("qq".into()))
        );
    }

    #[test]
    fn pause_additivity() {
        let a = [seg(&["b", "aa", "n"]), seg(&["k", "u", "r", "d"])];
        let b = [seg(&["sh", "a", "w"])];
        let mut joined: Vec<PhoneStreamItem> = a.to_vec();
        joined.push(PhoneStreamItem::Pause);
        joined.extend(b.to_vec());
        let mut merged = diphone_counts(m(), &a).unwrap();
        merged.merge(&diphone_counts(m(), &b).unwrap());
        assert_eq!(diphone_counts(m(), &joined).unwrap(), merged);
    }

    #[test]
    fn divergence_examples() {
        let p = diphone_counts(m(), &[seg(&["d", "ix", "l"])]).unwrap();
        assert_eq!(divergence::<Scalar>(&p, &p).unwrap(), 0.0);

        let mut a = DiphoneDistribution::new();
        a.add_segment(&["b".into(), "aa".into()]);
        let mut b = DiphoneDistribution::new();
        b.add_segment(&["d".into(), "i".into()]);
        assert_eq!(divergence::<Scalar>(&a, &b).unwrap(), 1.0);

        // hand computation: p = {x:3/4, y:1/4}, q = {x:1/2, z:1/2}
        // TV = (|3/4-1/2| + 1/4 + 1/2)/2 = 1/2
        let mut p = DiphoneDistribution::new();
        for _ in 0..3 {
            p.add_segment(&["b".into(), "aa".into()]);
        }
        p.add_segment(&["d".into(), "i".into()]);
        let mut q = DiphoneDistribution::new();
        q.add_segment(&["b".into(), "aa".into()]);
        q.add_segment(&["s".into(), "a".into()]);
        assert_eq!(divergence::<Scalar>(&p, &q).unwrap(), 0.5);
    }

    #[test]
    fn divergence_rejects_empty() {
        let p = DiphoneDistribution::new();
        let q = diphone_counts(m(), &[seg(&["d", "i"])]).unwrap();
        assert_eq!(
            divergence::<Scalar>(&p, &q),
            Err(StatsError::EmptyDistribution)
        );
    }

    #[test]
    fn coverage_examples() {
        let p = diphone_counts(m(), &[seg(&["d", "ix", "l"])]).unwrap();
        let target = p.support();
        let (frac, missing) = coverage::<Scalar>(&p, &target);
        assert_eq!(frac, 1.0);
        assert!(missing.is_empty());

        let empty = DiphoneDistribution::new();
        let (frac, missing) = coverage::<Scalar>(&empty, &target);
        assert_eq!(frac, 0.0);
        assert_eq!(missing.len(), target.len());

        let mut target4: BTreeSet<Diphone> = BTreeSet::new();
        target4.insert(pair("d", "ix"));
        target4.insert(pair("ix", "l"));
        target4.insert(pair("b", "aa"));
        target4.insert(pair("aa", "n"));
        let (frac, missing) = coverage::<Scalar>(&p, &target4);
        assert_eq!(frac, 0.5);
        assert_eq!(missing, vec![pair("aa", "n"), pair("b", "aa")]);
    }

    #[test]
    fn top_n_examples() {
        let mut p = DiphoneDistribution::new();
        for _ in 0..3 {
            p.add_segment(&["b".into(), "aa".into()]);
        }
        p.add_segment(&["d".into(), "i".into()]);
        let top: Vec<(Diphone, Scalar)> = top_n(&p, 1);
        assert_eq!(top, vec![(pair("b", "aa"), 0.75)]);
        let all: Vec<(Diphone, Scalar)> = top_n(&p, 10);
        assert_eq!(all.len(), 2);

        // tie case: lexicographic order
        let mut t = DiphoneDistribution::new();
        t.add_segment(&["z".into(), "a".into()]);
        t.add_segment(&["b".into(), "aa".into()]);
        let top: Vec<(Diphone, Scalar)> = top_n(&t, 2);
        assert_eq!(top[0].0, pair("b", "aa"));
        assert_eq!(top[1].0, pair("z", "a"));
    }

    #[test]
    fn tsv_round_trip() {
        let stream = [seg(&["k", "u", "r", "d"]), PhoneStreamItem::Pause, seg(&["b", "aa", "n"])];
        let dist = diphone_counts(m(), &stream).unwrap();
        let parsed = DiphoneDistribution::parse_tsv(&dist.to_tsv()).unwrap();
        assert_eq!(parsed, dist);
    }
}
