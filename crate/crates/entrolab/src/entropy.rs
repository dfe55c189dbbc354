//! Order-`l` empirical entropy, the entropy-minimizing empirical Markov
//! model, self-information and relative entropy.
//!
//! All logarithms are base 2 and `0 log(1/0) = 0` in every entropy sum.

use crate::sequence::Sequence;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum EntropyError {
    #[error("sequence shorter than order (m = {m}, order = {order})")]
    SequenceTooShort { m: usize, order: usize },
    #[error("histogram has no positive count")]
    EmptyHistogram,
    #[error("distribution lengths differ ({left} vs {right})")]
    LengthMismatch { left: usize, right: usize },
    #[error("alphabet mismatch (model n = {model_n}, sequence n = {sequence_n})")]
    AlphabetMismatch { model_n: u32, sequence_n: u32 },
    #[error("probabilities sum to {sum}, not a distribution")]
    NotADistribution { sum: f64 },
    #[error("entropy profile order {l_max} requires m > {l_max} (m = {m})")]
    ProfileTooLong { l_max: usize, m: usize },
}

/// Compensated (Kahan) accumulator; entropy sums run over millions of terms.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct KahanSum {
    sum: f64,
    carry: f64,
}

impl KahanSum {
    pub fn add(&mut self, x: f64) {
        let y = x - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum
    }
}

pub type Histogram = BTreeMap<u32, u64>;

/// Sparse follower counts per length-`order` context. A context's row is the
/// histogram of the characters immediately following each of its occurrences;
/// the sequence's final window contributes no follower.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContextTable {
    order: usize,
    entries: BTreeMap<Box<[u32]>, Histogram>,
}

impl ContextTable {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn entries(&self) -> &BTreeMap<Box<[u32]>, Histogram> {
        &self.entries
    }

    pub fn row(&self, context: &[u32]) -> Option<&Histogram> {
        self.entries.get(context)
    }

    /// Sum of all follower counts; equals `m - order`.
    pub fn total_followers(&self) -> u64 {
        self.entries.values().flat_map(|h| h.values()).sum()
    }
}

/// Probability distribution over `{0, .., n-1}`. A deficient one sums to less
/// than 1 (the quantizer's reconstruction can produce those).
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    probs: Vec<f64>,
    deficient: bool,
}

impl Distribution {
    const SUM_TOLERANCE: f64 = 1e-9;

    pub fn proper(probs: Vec<f64>) -> Result<Self, EntropyError> {
        let sum: f64 = probs.iter().sum();
        if probs.iter().any(|&p| p < 0.0) || (sum - 1.0).abs() > Self::SUM_TOLERANCE {
            return Err(EntropyError::NotADistribution { sum });
        }
        Ok(Self { probs, deficient: false })
    }

    /// Nonnegative weights summing to at most 1.
    pub fn deficient(probs: Vec<f64>) -> Result<Self, EntropyError> {
        let sum: f64 = probs.iter().sum();
        if probs.iter().any(|&p| p < 0.0) || sum > 1.0 + Self::SUM_TOLERANCE {
            return Err(EntropyError::NotADistribution { sum });
        }
        Ok(Self { probs, deficient: true })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn is_deficient(&self) -> bool {
        self.deficient
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Shannon entropy in bits.
    pub fn entropy(&self) -> f64 {
        let mut acc = KahanSum::default();
        for &p in &self.probs {
            if p > 0.0 {
                acc.add(p * (1.0 / p).log2());
            }
        }
        acc.value()
    }
}

/// Order-`l` Markov model: emits `prefix` with probability 1, then each
/// symbol according to the conditional at the preceding `l` symbols.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovModel {
    order: usize,
    n: u32,
    prefix: Vec<u32>,
    conditionals: BTreeMap<Box<[u32]>, Distribution>,
}

impl MarkovModel {
    pub fn new(
        order: usize,
        n: u32,
        prefix: Vec<u32>,
        conditionals: BTreeMap<Box<[u32]>, Distribution>,
    ) -> Self {
        assert_eq!(prefix.len(), order, "prefix length must equal the order");
        assert!(prefix.iter().all(|&s| s < n));
        Self { order, n, prefix, conditionals }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn prefix(&self) -> &[u32] {
        &self.prefix
    }

    pub fn conditionals(&self) -> &BTreeMap<Box<[u32]>, Distribution> {
        &self.conditionals
    }

    pub fn conditional(&self, context: &[u32]) -> Option<&Distribution> {
        self.conditionals.get(context)
    }
}

/// Tabulates followers of every length-`order` window of `S`.
pub fn count_contexts(seq: &Sequence, order: usize) -> Result<ContextTable, EntropyError> {
    let symbols = seq.symbols();
    let m = symbols.len();
    if m < order {
        return Err(EntropyError::SequenceTooShort { m, order });
    }
    let mut entries: BTreeMap<Box<[u32]>, Histogram> = BTreeMap::new();
    for i in 0..(m - order) {
        let context: Box<[u32]> = symbols[i..i + order].into();
        *entries.entry(context).or_default().entry(symbols[i + order]).or_insert(0) += 1;
    }
    Ok(ContextTable { order, entries })
}

/// `H_0` of a follower histogram, in bits per symbol.
pub fn zeroth_order_entropy(histogram: &Histogram) -> Result<f64, EntropyError> {
    let total: u64 = histogram.values().sum();
    if total == 0 {
        return Err(EntropyError::EmptyHistogram);
    }
    let total_f = total as f64;
    let mut acc = KahanSum::default();
    for &count in histogram.values() {
        if count > 0 {
            let p = count as f64 / total_f;
            acc.add(p * (total_f / count as f64).log2());
        }
    }
    Ok(acc.value())
}

/// `H_l(S)` in bits per symbol.
pub fn empirical_entropy(seq: &Sequence, order: usize) -> Result<f64, EntropyError> {
    let m = seq.m();
    if m < order.max(1) {
        return Err(EntropyError::SequenceTooShort { m, order: order.max(1) });
    }
    let table = count_contexts(seq, order)?;
    if order == 0 {
        let empty: Box<[u32]> = Box::from(&[][..]);
        return zeroth_order_entropy(table.row(&empty).expect("m >= 1 so the empty context exists"));
    }
    let mut acc = KahanSum::default();
    for histogram in table.entries().values() {
        let weight: u64 = histogram.values().sum();
        acc.add(weight as f64 * zeroth_order_entropy(histogram)?);
    }
    Ok(acc.value() / m as f64)
}

/// `[H_0(S), .., H_l_max(S)]`; non-increasing.
pub fn entropy_profile(seq: &Sequence, l_max: usize) -> Result<Vec<f64>, EntropyError> {
    if l_max >= seq.m() {
        return Err(EntropyError::ProfileTooLong { l_max, m: seq.m() });
    }
    (0..=l_max).map(|l| empirical_entropy(seq, l)).collect()
}

/// The order-`l` Markov model whose conditionals are the normalized follower
/// distributions of `S`; it attains `self_information = m * H_l(S)`.
pub fn empirical_markov_model(seq: &Sequence, order: usize) -> Result<MarkovModel, EntropyError> {
    let table = count_contexts(seq, order)?;
    let n = seq.n();
    let mut conditionals = BTreeMap::new();
    for (context, histogram) in table.entries() {
        let total: u64 = histogram.values().sum();
        let mut probs = vec![0.0; n as usize];
        for (&symbol, &count) in histogram {
            probs[symbol as usize] = count as f64 / total as f64;
        }
        conditionals.insert(context.clone(), Distribution::proper(probs)?);
    }
    Ok(MarkovModel::new(order, n, seq.symbols()[..order].to_vec(), conditionals))
}

/// `log2(1 / Pr[model emits S])` in bits. Returns `+inf` when the prefix
/// mismatches or any transition has probability 0.
pub fn self_information(model: &MarkovModel, seq: &Sequence) -> Result<f64, EntropyError> {
    if model.n() != seq.n() {
        return Err(EntropyError::AlphabetMismatch { model_n: model.n(), sequence_n: seq.n() });
    }
    let symbols = seq.symbols();
    let order = model.order();
    if symbols.len() < order || &symbols[..order] != model.prefix() {
        return Ok(f64::INFINITY);
    }
    let mut acc = KahanSum::default();
    for i in order..symbols.len() {
        let q = match model.conditional(&symbols[i - order..i]) {
            Some(dist) => dist.probs()[symbols[i] as usize],
            None => 0.0,
        };
        if q <= 0.0 {
            return Ok(f64::INFINITY);
        }
        acc.add((1.0 / q).log2());
    }
    Ok(acc.value())
}

/// Relative entropy `D(P || Q)` in bits; `+inf` when `Q` lacks mass somewhere
/// on `P`'s support.
pub fn kl_divergence(p: &Distribution, q: &Distribution) -> Result<f64, EntropyError> {
    if p.len() != q.len() {
        return Err(EntropyError::LengthMismatch { left: p.len(), right: q.len() });
    }
    let mut acc = KahanSum::default();
    for (&pi, &qi) in p.probs().iter().zip(q.probs()) {
        if pi > 0.0 {
            if qi <= 0.0 {
                return Ok(f64::INFINITY);
            }
            acc.add(pi * (pi / qi).log2());
        }
    }
    Ok(acc.value())
}
