//! Two-part codes for strings: a stored order-`l` Markov model (quantized
//! per-context distributions, or the exact follower-count table) followed by
//! the string arithmetic-coded under that model.

pub mod coder;

use crate::entropy::{count_contexts, EntropyError, KahanSum};
use crate::quantize::{quantize_sparse, QuantizeError, QuantizedDistribution, QuantizerParams};
use crate::sequence::{Sequence, SequenceError};
use crate::varint;
use coder::{ArithDecoder, ArithEncoder};
use std::collections::{BTreeMap, HashMap};
use thiserror::Error;

const MAGIC: [u8; 4] = *b"EMKC";
const VERSION: u8 = 1;

/// Stage-1 frequency tables sum to this per context.
const FREQ_TOTAL: u64 = 1 << 16;
/// Escaped symbols are coded uniformly over the unrecorded alphabet, so its
/// size must fit one coding step.
const MAX_UNIFORM_TOTAL: u64 = coder::MAX_TOTAL;

#[derive(Debug, Error)]
pub enum CodecError {
    #[error(transparent)]
    Entropy(#[from] EntropyError),
    #[error(transparent)]
    Quantize(#[from] QuantizeError),
    #[error(transparent)]
    Sequence(#[from] SequenceError),
    #[error("sequence of length {m} too short for order {order} (need m > order)")]
    TooShort { m: usize, order: usize },
    #[error("zero-probability transition at position {position}")]
    ZeroProbability { position: usize },
    #[error("context supports {support} symbols, more than the coder's {max} frequency units")]
    ContextTooWide { support: usize, max: u64 },
    #[error("unrecorded alphabet of {size} symbols exceeds the coder limit {max}")]
    AlphabetTooWide { size: u64, max: u64 },
    #[error("prefix does not match the sequence")]
    PrefixMismatch,
    #[error("corrupt container: {0}")]
    Corrupt(String),
}

/// Order-`l` model stored as one quantized distribution per context occurring
/// in the source string, plus the raw first `l` symbols.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedMarkovModel {
    order: usize,
    n: u32,
    prefix: Vec<u32>,
    contexts: Vec<(Box<[u32]>, QuantizedDistribution)>,
}

impl QuantizedMarkovModel {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn prefix(&self) -> &[u32] {
        &self.prefix
    }

    /// Context/distribution pairs, sorted by context.
    pub fn contexts(&self) -> &[(Box<[u32]>, QuantizedDistribution)] {
        &self.contexts
    }

    fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        varint::write_u64(&mut out, self.contexts.len() as u64);
        for (context, qd) in &self.contexts {
            for &s in context.iter() {
                varint::write_u64(&mut out, u64::from(s));
            }
            out.extend_from_slice(&qd.to_bytes());
        }
        out
    }

    fn from_bytes(buf: &[u8], order: usize, n: u32, prefix: Vec<u32>) -> Result<Self, CodecError> {
        let mut pos = 0;
        let count = varint::read_u64(buf, &mut pos).map_err(corrupt)?;
        let mut contexts = Vec::with_capacity(count as usize);
        for _ in 0..count {
            let mut context = Vec::with_capacity(order);
            for _ in 0..order {
                let s = varint::read_u64(buf, &mut pos).map_err(corrupt)?;
                context.push(symbol_in(s, n)?);
            }
            let qd = QuantizedDistribution::parse(buf, &mut pos)?;
            contexts.push((context.into_boxed_slice(), qd));
        }
        if pos != buf.len() {
            return Err(CodecError::Corrupt("trailing bytes in model block".into()));
        }
        Ok(Self { order, n, prefix, contexts })
    }
}

/// Sparse follower counts per `(l+1)`-tuple; the exact-model alternative.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountTable {
    order: usize,
    n: u32,
    entries: Vec<(Box<[u32]>, u64)>,
}

impl CountTable {
    pub fn build(seq: &Sequence, order: usize) -> Result<Self, CodecError> {
        if seq.m() <= order {
            return Err(CodecError::TooShort { m: seq.m(), order });
        }
        let table = count_contexts(seq, order)?;
        let mut entries = Vec::new();
        for (context, histogram) in table.entries() {
            for (&follower, &count) in histogram {
                let mut tuple = context.to_vec();
                tuple.push(follower);
                entries.push((tuple.into_boxed_slice(), count));
            }
        }
        Ok(Self { order, n: seq.n(), entries })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    /// `(l+1)`-tuple counts, sorted lexicographically.
    pub fn entries(&self) -> &[(Box<[u32]>, u64)] {
        &self.entries
    }

    pub fn total(&self) -> u64 {
        self.entries.iter().map(|&(_, c)| c).sum()
    }

    fn flatten(&self, tuple: &[u32]) -> u128 {
        tuple.iter().fold(0u128, |acc, &s| acc * u128::from(self.n) + u128::from(s))
    }

    fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        varint::write_u64(&mut out, self.entries.len() as u64);
        let mut prev: u128 = 0;
        for (k, (tuple, count)) in self.entries.iter().enumerate() {
            let flat = self.flatten(tuple);
            let delta = if k == 0 { flat } else { flat - prev };
            varint::write_u128(&mut out, delta);
            varint::write_u64(&mut out, *count);
            prev = flat;
        }
        out
    }

    fn from_bytes(buf: &[u8], order: usize, n: u32) -> Result<Self, CodecError> {
        let mut pos = 0;
        let count = varint::read_u64(buf, &mut pos).map_err(corrupt)?;
        let mut entries = Vec::with_capacity(count as usize);
        let mut prev: u128 = 0;
        for k in 0..count {
            let delta = varint::read_u128(buf, &mut pos).map_err(corrupt)?;
            let c = varint::read_u64(buf, &mut pos).map_err(corrupt)?;
            let flat = if k == 0 { delta } else { prev + delta };
            prev = flat;
            let mut tuple = vec![0u32; order + 1];
            let mut rest = flat;
            for slot in tuple.iter_mut().rev() {
                *slot = (rest % u128::from(n)) as u32;
                rest /= u128::from(n);
            }
            if rest != 0 || c == 0 {
                return Err(CodecError::Corrupt("invalid count-table entry".into()));
            }
            entries.push((tuple.into_boxed_slice(), c));
        }
        if pos != buf.len() {
            return Err(CodecError::Corrupt("trailing bytes in model block".into()));
        }
        Ok(Self { order, n, entries })
    }
}

/// Either stored model form.
#[derive(Debug, Clone, PartialEq)]
pub enum CodecModel {
    Quantized(QuantizedMarkovModel),
    Exact(CountTable),
}

impl CodecModel {
    fn order(&self) -> usize {
        match self {
            CodecModel::Quantized(m) => m.order(),
            CodecModel::Exact(t) => t.order(),
        }
    }

    fn n(&self) -> u32 {
        match self {
            CodecModel::Quantized(m) => m.n(),
            CodecModel::Exact(t) => t.n(),
        }
    }
}

/// Quantizes every occurring context's normalized follower distribution.
/// Each per-context call gets the full `eps` passed here; `compress` passes
/// `eps / 2` to leave room for model storage and coder overhead.
pub fn quantize_model(
    seq: &Sequence,
    order: usize,
    c: f64,
    eps: f64,
) -> Result<QuantizedMarkovModel, CodecError> {
    if seq.m() <= order {
        return Err(CodecError::TooShort { m: seq.m(), order });
    }
    let params = QuantizerParams::new(c, eps, seq.n())?;
    let table = count_contexts(seq, order)?;
    let mut contexts = Vec::with_capacity(table.entries().len());
    for (context, histogram) in table.entries() {
        let total: u64 = histogram.values().sum();
        let sparse: Vec<(u32, f64)> =
            histogram.iter().map(|(&s, &cnt)| (s, cnt as f64 / total as f64)).collect();
        contexts.push((context.clone(), quantize_sparse(&sparse, params)?));
    }
    Ok(QuantizedMarkovModel {
        order,
        n: seq.n(),
        prefix: seq.symbols()[..order].to_vec(),
        contexts,
    })
}

/// `sum_a #_a(S_alpha) log2(1/q_{alpha,a})` under the reconstructed
/// (possibly deficient) per-context distributions. `+inf` when the prefix
/// mismatches or a transition has no context in the model.
pub fn model_self_information(
    model: &QuantizedMarkovModel,
    seq: &Sequence,
) -> Result<f64, CodecError> {
    if model.n() != seq.n() {
        return Err(EntropyError::AlphabetMismatch { model_n: model.n(), sequence_n: seq.n() }
            .into());
    }
    let order = model.order();
    if seq.m() < order || &seq.symbols()[..order] != model.prefix() {
        return Ok(f64::INFINITY);
    }
    let by_context: BTreeMap<&[u32], &QuantizedDistribution> =
        model.contexts().iter().map(|(c, qd)| (&c[..], qd)).collect();
    let table = count_contexts(seq, order)?;
    let mut acc = KahanSum::default();
    for (context, histogram) in table.entries() {
        let qd = match by_context.get(&context[..]) {
            Some(qd) => *qd,
            None => return Ok(f64::INFINITY),
        };
        let recorded: BTreeMap<u32, f64> = qd.recorded_probs().into_iter().collect();
        let unrecorded = qd.unrecorded_prob();
        for (&symbol, &count) in histogram {
            let q = recorded.get(&symbol).copied().or(unrecorded).unwrap_or(0.0);
            // Unrecorded symbols only lack mass when every index is recorded,
            // and then no symbol is unrecorded.
            assert!(q > 0.0, "reconstructed distribution dropped an occurring follower");
            acc.add(count as f64 * (1.0 / q).log2());
        }
    }
    Ok(acc.value())
}

/// One context's integer-frequency coding table. Recorded symbols carry their
/// own slots; an optional final escape slot covers all unrecorded symbols,
/// which are then coded uniformly by rank.
struct ContextCoder {
    symbols: Vec<u32>,
    cum: Vec<u64>,
    total: u64,
    /// Size of the unrecorded alphabet behind the escape slot.
    escape_span: Option<u64>,
}

impl ContextCoder {
    fn from_weights(
        symbols: Vec<u32>,
        weights: &[f64],
        escape_weight: Option<(f64, u64)>,
        n: u32,
    ) -> Result<Self, CodecError> {
        let slots = weights.len() + usize::from(escape_weight.is_some());
        if slots as u64 > FREQ_TOTAL {
            return Err(CodecError::ContextTooWide { support: slots, max: FREQ_TOTAL });
        }
        let mut all = weights.to_vec();
        let mut escape_span = None;
        if let Some((w, span)) = escape_weight {
            if span > MAX_UNIFORM_TOTAL {
                return Err(CodecError::AlphabetTooWide { size: span, max: MAX_UNIFORM_TOTAL });
            }
            all.push(w);
            escape_span = Some(span);
        }
        let freqs = integer_freqs(&all, FREQ_TOTAL);
        let mut cum = Vec::with_capacity(freqs.len() + 1);
        let mut acc = 0u64;
        cum.push(0);
        for f in freqs {
            acc += f;
            cum.push(acc);
        }
        debug_assert_eq!(acc, FREQ_TOTAL);
        debug_assert!(u64::from(n) >= symbols.len() as u64 + escape_span.unwrap_or(0));
        Ok(Self { symbols, cum, total: FREQ_TOTAL, escape_span })
    }

    fn from_counts(symbols: Vec<u32>, counts: &[u64]) -> Result<Self, CodecError> {
        let total: u64 = counts.iter().sum();
        if total <= coder::MAX_TOTAL {
            let mut cum = Vec::with_capacity(counts.len() + 1);
            let mut acc = 0u64;
            cum.push(0);
            for &c in counts {
                acc += c;
                cum.push(acc);
            }
            Ok(Self { symbols, cum, total, escape_span: None })
        } else {
            let weights: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
            Self::from_weights(symbols, &weights, None, u32::MAX)
        }
    }

    /// Slot index of the escape bucket, when present.
    fn escape_slot(&self) -> Option<usize> {
        self.escape_span.map(|_| self.cum.len() - 2)
    }

    fn rank_of_unrecorded(&self, symbol: u32) -> u64 {
        let below = self.symbols.partition_point(|&s| s < symbol) as u64;
        u64::from(symbol) - below
    }

    fn unrecorded_by_rank(&self, rank: u64) -> u32 {
        // symbols[i] - i counts the unrecorded symbols below symbols[i]; the
        // rank-th unrecorded symbol sits past the recorded ones whose count
        // stays <= rank.
        let mut lo = 0usize;
        let mut hi = self.symbols.len();
        while lo < hi {
            let mid = (lo + hi) / 2;
            if u64::from(self.symbols[mid]) - mid as u64 <= rank {
                lo = mid + 1;
            } else {
                hi = mid;
            }
        }
        (rank + lo as u64) as u32
    }

    fn encode_symbol(
        &self,
        enc: &mut ArithEncoder,
        symbol: u32,
        position: usize,
    ) -> Result<(), CodecError> {
        match self.symbols.binary_search(&symbol) {
            Ok(slot) => {
                enc.encode(self.cum[slot], self.cum[slot + 1], self.total);
                Ok(())
            }
            Err(_) => {
                let (slot, span) = match (self.escape_slot(), self.escape_span) {
                    (Some(slot), Some(span)) => (slot, span),
                    _ => return Err(CodecError::ZeroProbability { position }),
                };
                enc.encode(self.cum[slot], self.cum[slot + 1], self.total);
                let rank = self.rank_of_unrecorded(symbol);
                debug_assert!(rank < span);
                enc.encode(rank, rank + 1, span);
                Ok(())
            }
        }
    }

    fn decode_symbol(&self, dec: &mut ArithDecoder) -> u32 {
        let target = dec.target(self.total);
        let slot = self.cum.partition_point(|&c| c <= target) - 1;
        dec.advance(self.cum[slot], self.cum[slot + 1], self.total);
        if self.escape_slot() == Some(slot) {
            let span = self.escape_span.unwrap();
            let rank = dec.target(span);
            dec.advance(rank, rank + 1, span);
            self.unrecorded_by_rank(rank)
        } else {
            self.symbols[slot]
        }
    }
}

/// Rounds nonnegative weights to integers summing exactly to `total`, every
/// slot at least 1. Deterministic: leftovers go to the largest fractional
/// remainders (ties to the lower index), reductions to the largest slots.
fn integer_freqs(weights: &[f64], total: u64) -> Vec<u64> {
    assert!(!weights.is_empty() && weights.len() as u64 <= total);
    let wsum: f64 = weights.iter().sum();
    let targets: Vec<f64> = if wsum > 0.0 {
        weights.iter().map(|&w| w / wsum * total as f64).collect()
    } else {
        vec![total as f64 / weights.len() as f64; weights.len()]
    };
    let mut freqs: Vec<u64> = targets.iter().map(|&t| (t.floor() as u64).max(1)).collect();
    let mut sum: u64 = freqs.iter().sum();
    if sum < total {
        let mut order: Vec<usize> = (0..freqs.len()).collect();
        order.sort_by(|&a, &b| {
            let ra = targets[a] - targets[a].floor();
            let rb = targets[b] - targets[b].floor();
            rb.partial_cmp(&ra).unwrap().then(a.cmp(&b))
        });
        let mut k = 0;
        let len = freqs.len();
        while sum < total {
            freqs[order[k % len]] += 1;
            sum += 1;
            k += 1;
        }
    }
    while sum > total {
        let (idx, _) = freqs
            .iter()
            .enumerate()
            .filter(|&(_, &f)| f > 1)
            .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
            .expect("total >= len so some slot can shrink");
        freqs[idx] -= 1;
        sum -= 1;
    }
    freqs
}

/// Lookup structure shared by encode and decode.
struct FreqModel {
    contexts: HashMap<Box<[u32]>, ContextCoder>,
}

impl FreqModel {
    fn build(model: &CodecModel) -> Result<Self, CodecError> {
        let mut contexts = HashMap::new();
        match model {
            CodecModel::Quantized(m) => {
                let r = |qd: &QuantizedDistribution| qd.params().r();
                for (context, qd) in m.contexts() {
                    let recorded = qd.recorded_probs();
                    let symbols: Vec<u32> = recorded.iter().map(|&(s, _)| s).collect();
                    let weights: Vec<f64> = recorded.iter().map(|&(_, q)| q).collect();
                    let unrecorded = u64::from(m.n()) - symbols.len() as u64;
                    let escape = (unrecorded > 0).then(|| (1.0 / r(qd), unrecorded));
                    contexts.insert(
                        context.clone(),
                        ContextCoder::from_weights(symbols, &weights, escape, m.n())?,
                    );
                }
                Ok(Self { contexts })
            }
            CodecModel::Exact(table) => {
                let mut grouped: BTreeMap<&[u32], (Vec<u32>, Vec<u64>)> = BTreeMap::new();
                for (tuple, count) in table.entries() {
                    let (context, follower) = tuple.split_at(table.order());
                    let slot = grouped.entry(context).or_default();
                    slot.0.push(follower[0]);
                    slot.1.push(*count);
                }
                for (context, (symbols, counts)) in grouped {
                    contexts
                        .insert(context.into(), ContextCoder::from_counts(symbols, &counts)?);
                }
                Ok(Self { contexts })
            }
        }
    }
}

/// Arithmetic-coded payload with a bit-exact length.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Payload {
    bytes: Vec<u8>,
    bit_len: u64,
}

impl Payload {
    pub fn bit_len(&self) -> u64 {
        self.bit_len
    }

    pub fn bytes(&self) -> &[u8] {
        &self.bytes
    }
}

/// Codes `S` (after its prefix) under the model's per-context tables.
pub fn encode(seq: &Sequence, model: &CodecModel) -> Result<Payload, CodecError> {
    if model.n() != seq.n() {
        return Err(EntropyError::AlphabetMismatch { model_n: model.n(), sequence_n: seq.n() }
            .into());
    }
    let order = model.order();
    if seq.m() < order {
        return Err(CodecError::TooShort { m: seq.m(), order });
    }
    if let CodecModel::Quantized(m) = model {
        if m.prefix() != &seq.symbols()[..order] {
            return Err(CodecError::PrefixMismatch);
        }
    }
    let freq_model = FreqModel::build(model)?;
    let symbols = seq.symbols();
    let mut enc = ArithEncoder::new();
    for i in order..symbols.len() {
        let context = &symbols[i - order..i];
        let coder = freq_model
            .contexts
            .get(context)
            .ok_or(CodecError::ZeroProbability { position: i })?;
        coder.encode_symbol(&mut enc, symbols[i], i)?;
    }
    let (bytes, bit_len) = enc.finish().into_bytes();
    Ok(Payload { bytes, bit_len })
}

/// Exact inverse of `encode` given the same model, prefix and length.
pub fn decode(
    payload: &Payload,
    model: &CodecModel,
    prefix: &[u32],
    m: usize,
    n: u32,
) -> Result<Sequence, CodecError> {
    let order = model.order();
    if m < order || prefix.len() != order {
        return Err(CodecError::TooShort { m, order });
    }
    let freq_model = FreqModel::build(model)?;
    let mut symbols = Vec::with_capacity(m);
    symbols.extend_from_slice(prefix);
    let mut dec = ArithDecoder::new(&payload.bytes, payload.bit_len);
    for i in order..m {
        let context = &symbols[i - order..i];
        let coder = freq_model
            .contexts
            .get(context)
            .ok_or_else(|| CodecError::Corrupt(format!("no model context at position {i}")))?;
        let symbol = coder.decode_symbol(&mut dec);
        symbols.push(symbol);
    }
    Ok(Sequence::new(symbols, n)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Mode {
    Quantized,
    ExactTable,
}

/// A serialized two-part code: header, model block, payload block.
#[derive(Debug, Clone, PartialEq)]
pub struct CompressedContainer {
    n: u32,
    m: usize,
    order: usize,
    c: f64,
    eps: f64,
    prefix: Vec<u32>,
    model: CodecModel,
    payload: Payload,
}

impl CompressedContainer {
    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn mode(&self) -> Mode {
        match self.model {
            CodecModel::Quantized(_) => Mode::Quantized,
            CodecModel::Exact(_) => Mode::ExactTable,
        }
    }

    pub fn model(&self) -> &CodecModel {
        &self.model
    }

    pub fn payload_bits(&self) -> u64 {
        self.payload.bit_len
    }

    pub fn model_bits(&self) -> u64 {
        8 * match &self.model {
            CodecModel::Quantized(m) => m.to_bytes().len() as u64,
            CodecModel::Exact(t) => t.to_bytes().len() as u64,
        }
    }

    pub fn total_bits(&self) -> u64 {
        8 * self.to_bytes().len() as u64
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(&MAGIC);
        out.push(VERSION);
        varint::write_u64(&mut out, u64::from(self.n));
        varint::write_u64(&mut out, self.m as u64);
        varint::write_u64(&mut out, self.order as u64);
        out.push(match self.mode() {
            Mode::Quantized => 0,
            Mode::ExactTable => 1,
        });
        out.extend_from_slice(&self.c.to_le_bytes());
        out.extend_from_slice(&self.eps.to_le_bytes());
        // Prefix packed at ceil(log2 n) bits per symbol.
        let bits = symbol_bits(self.n);
        let mut packed = coder::BitWriter::default();
        for &s in &self.prefix {
            for b in (0..bits).rev() {
                packed.push(s >> b & 1 == 1);
            }
        }
        let (prefix_bytes, _) = packed.into_bytes();
        out.extend_from_slice(&prefix_bytes);
        let model_bytes = match &self.model {
            CodecModel::Quantized(m) => m.to_bytes(),
            CodecModel::Exact(t) => t.to_bytes(),
        };
        varint::write_u64(&mut out, model_bytes.len() as u64);
        out.extend_from_slice(&model_bytes);
        varint::write_u64(&mut out, self.payload.bit_len);
        out.extend_from_slice(&self.payload.bytes);
        out
    }

    pub fn from_bytes(buf: &[u8]) -> Result<Self, CodecError> {
        let mut pos = 0;
        if buf.get(..4) != Some(&MAGIC[..]) {
            return Err(CodecError::Corrupt("bad magic".into()));
        }
        pos += 4;
        if buf.get(pos) != Some(&VERSION) {
            return Err(CodecError::Corrupt("unsupported version".into()));
        }
        pos += 1;
        let n = varint::read_u64(buf, &mut pos).map_err(corrupt)?;
        let n = u32::try_from(n).map_err(|_| CodecError::Corrupt("n too large".into()))?;
        if n == 0 {
            return Err(CodecError::Corrupt("n must be positive".into()));
        }
        let m = varint::read_u64(buf, &mut pos).map_err(corrupt)? as usize;
        let order = varint::read_u64(buf, &mut pos).map_err(corrupt)? as usize;
        let mode = match buf.get(pos) {
            Some(0) => Mode::Quantized,
            Some(1) => Mode::ExactTable,
            _ => return Err(CodecError::Corrupt("bad mode byte".into())),
        };
        pos += 1;
        let f64_field = |pos: &mut usize| -> Result<f64, CodecError> {
            let bytes = buf
                .get(*pos..*pos + 8)
                .ok_or_else(|| CodecError::Corrupt("truncated header".into()))?;
            *pos += 8;
            Ok(f64::from_le_bytes(bytes.try_into().unwrap()))
        };
        let c = f64_field(&mut pos)?;
        let eps = f64_field(&mut pos)?;
        let bits = symbol_bits(n);
        let prefix_bytes = (order * bits as usize + 7) / 8;
        let packed = buf
            .get(pos..pos + prefix_bytes)
            .ok_or_else(|| CodecError::Corrupt("truncated prefix".into()))?;
        pos += prefix_bytes;
        let mut prefix = Vec::with_capacity(order);
        for k in 0..order {
            let mut s = 0u32;
            for b in 0..bits as usize {
                let bit_index = k * bits as usize + b;
                let bit = packed[bit_index / 8] >> (7 - bit_index % 8) & 1;
                s = (s << 1) | u32::from(bit);
            }
            prefix.push(symbol_in(u64::from(s), n)?);
        }
        let model_len = varint::read_u64(buf, &mut pos).map_err(corrupt)? as usize;
        let model_bytes = buf
            .get(pos..pos + model_len)
            .ok_or_else(|| CodecError::Corrupt("truncated model block".into()))?;
        pos += model_len;
        let model = match mode {
            Mode::Quantized => CodecModel::Quantized(QuantizedMarkovModel::from_bytes(
                model_bytes,
                order,
                n,
                prefix.clone(),
            )?),
            Mode::ExactTable => CodecModel::Exact(CountTable::from_bytes(model_bytes, order, n)?),
        };
        let bit_len = varint::read_u64(buf, &mut pos).map_err(corrupt)?;
        let payload_len = ((bit_len + 7) / 8) as usize;
        let payload_bytes = buf
            .get(pos..pos + payload_len)
            .ok_or_else(|| CodecError::Corrupt("truncated payload".into()))?;
        pos += payload_len;
        if pos != buf.len() {
            return Err(CodecError::Corrupt("trailing bytes after payload".into()));
        }
        Ok(Self {
            n,
            m,
            order,
            c,
            eps,
            prefix,
            model,
            payload: Payload { bytes: payload_bytes.to_vec(), bit_len },
        })
    }
}

/// Builds the full two-part code for `S`. Quantized mode spends `eps / 2` on
/// per-context quantization and leaves the rest for model storage and coder
/// overhead; exact mode stores the follower-count table instead.
pub fn compress(
    seq: &Sequence,
    order: usize,
    c: f64,
    eps: f64,
    mode: Mode,
) -> Result<CompressedContainer, CodecError> {
    if seq.m() <= order {
        return Err(CodecError::TooShort { m: seq.m(), order });
    }
    let model = match mode {
        Mode::Quantized => CodecModel::Quantized(quantize_model(seq, order, c, eps / 2.0)?),
        Mode::ExactTable => CodecModel::Exact(CountTable::build(seq, order)?),
    };
    let payload = encode(seq, &model)?;
    Ok(CompressedContainer {
        n: seq.n(),
        m: seq.m(),
        order,
        c,
        eps,
        prefix: seq.symbols()[..order].to_vec(),
        model,
        payload,
    })
}

/// Lossless inverse of `compress`.
pub fn decompress(container: &CompressedContainer) -> Result<Sequence, CodecError> {
    decode(&container.payload, &container.model, &container.prefix, container.m, container.n)
}

/// Measured size in bits of the serialized exact count table.
pub fn exact_table_bits(seq: &Sequence, order: usize) -> Result<u64, CodecError> {
    Ok(8 * CountTable::build(seq, order)?.to_bytes().len() as u64)
}

fn symbol_bits(n: u32) -> u32 {
    if n <= 1 {
        0
    } else {
        32 - (n - 1).leading_zeros()
    }
}

fn symbol_in(s: u64, n: u32) -> Result<u32, CodecError> {
    let s = u32::try_from(s).ok().filter(|&s| s < n);
    s.ok_or_else(|| CodecError::Corrupt("symbol outside alphabet".into()))
}

fn corrupt(e: varint::VarintError) -> CodecError {
    CodecError::Corrupt(e.to_string())
}

#[cfg(test)]
mod tests;
