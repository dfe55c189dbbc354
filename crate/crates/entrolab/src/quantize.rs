//! Lossy storage of probability distributions: record only the indices whose
//! probability clears `1 / (r n^(1/c))`, each as the integer `floor(p r^2 n)`.
//! Reconstruction keeps the relative entropy below `(c - 1) H(P) + eps` while
//! the record takes `O(n^(1/c) log n)` bits.

use crate::entropy::{kl_divergence, Distribution, EntropyError};
use crate::varint;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum QuantizeError {
    #[error("c must be >= 1 (got {0})")]
    InvalidC(f64),
    #[error("eps must be > 0 (got {0})")]
    InvalidEps(f64),
    #[error("alphabet size must be >= 1")]
    EmptyAlphabet,
    #[error("input is not a proper distribution")]
    NotADistribution(#[from] EntropyError),
    #[error("malformed quantized distribution: {0}")]
    Malformed(String),
}

/// `r = 2^(eps/2) / (2^(eps/2) - 1)`; the record/skip threshold is
/// `1 / (r n^(1/c))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantizerParams {
    c: f64,
    eps: f64,
    n: u32,
}

impl QuantizerParams {
    pub fn new(c: f64, eps: f64, n: u32) -> Result<Self, QuantizeError> {
        if !(c >= 1.0) {
            return Err(QuantizeError::InvalidC(c));
        }
        if !(eps > 0.0) {
            return Err(QuantizeError::InvalidEps(eps));
        }
        if n == 0 {
            return Err(QuantizeError::EmptyAlphabet);
        }
        Ok(Self { c, eps, n })
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn r(&self) -> f64 {
        let x = (self.eps / 2.0).exp2();
        x / (x - 1.0)
    }

    pub fn threshold(&self) -> f64 {
        1.0 / (self.r() * (self.n as f64).powf(1.0 / self.c))
    }

    /// Upper bound on the number of recorded entries, `ceil(r n^(1/c))`.
    pub fn max_recorded(&self) -> u64 {
        (self.r() * (self.n as f64).powf(1.0 / self.c)).ceil() as u64
    }
}

/// The stored form: `(index, floor(p_i r^2 n))` for every index clearing the
/// threshold, plus the parameters needed to rebuild `Q`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedDistribution {
    params: QuantizerParams,
    entries: Vec<(u32, u64)>,
}

impl QuantizedDistribution {
    pub fn params(&self) -> &QuantizerParams {
        &self.params
    }

    /// Recorded `(index, floor value)` pairs, indices strictly increasing.
    pub fn entries(&self) -> &[(u32, u64)] {
        &self.entries
    }

    pub fn t(&self) -> usize {
        self.entries.len()
    }

    fn floor_sum(&self) -> u64 {
        self.entries.iter().map(|&(_, v)| v).sum()
    }

    /// Reconstructed probabilities of the recorded indices, in index order.
    pub fn recorded_probs(&self) -> Vec<(u32, f64)> {
        let r = self.params.r();
        let sum = self.floor_sum() as f64;
        self.entries
            .iter()
            .map(|&(i, v)| (i, (1.0 - 1.0 / r) * v as f64 / sum))
            .collect()
    }

    /// Reconstructed probability shared by every unrecorded index, `None`
    /// when all indices are recorded.
    pub fn unrecorded_prob(&self) -> Option<f64> {
        let unrecorded = u64::from(self.params.n) - self.t() as u64;
        (unrecorded > 0).then(|| 1.0 / (self.params.r() * unrecorded as f64))
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.push(1u8); // version
        varint::write_u64(&mut out, u64::from(self.params.n));
        out.extend_from_slice(&self.params.c.to_le_bytes());
        out.extend_from_slice(&self.params.eps.to_le_bytes());
        varint::write_u64(&mut out, self.entries.len() as u64);
        let mut prev = 0u32;
        for (k, &(index, value)) in self.entries.iter().enumerate() {
            let delta = if k == 0 { index } else { index - prev };
            varint::write_u64(&mut out, u64::from(delta));
            varint::write_u64(&mut out, value);
            prev = index;
        }
        out
    }

    /// Parses one canonical encoding starting at `pos`, advancing it.
    pub fn parse(buf: &[u8], pos: &mut usize) -> Result<Self, QuantizeError> {
        let err = |s: &str| QuantizeError::Malformed(s.to_string());
        let version = *buf.get(*pos).ok_or_else(|| err("missing version byte"))?;
        *pos += 1;
        if version != 1 {
            return Err(err("unsupported version"));
        }
        let n = varint::read_u64(buf, pos).map_err(|e| QuantizeError::Malformed(e.to_string()))?;
        let n = u32::try_from(n).map_err(|_| err("n too large"))?;
        let mut f64_field = || -> Result<f64, QuantizeError> {
            let bytes = buf.get(*pos..*pos + 8).ok_or_else(|| err("missing f64 field"))?;
            *pos += 8;
            Ok(f64::from_le_bytes(bytes.try_into().unwrap()))
        };
        let c = f64_field()?;
        let eps = f64_field()?;
        let params = QuantizerParams::new(c, eps, n)?;
        let t = varint::read_u64(buf, pos).map_err(|e| QuantizeError::Malformed(e.to_string()))?;
        let mut entries = Vec::with_capacity(t as usize);
        let mut prev: u64 = 0;
        for k in 0..t {
            let delta =
                varint::read_u64(buf, pos).map_err(|e| QuantizeError::Malformed(e.to_string()))?;
            let value =
                varint::read_u64(buf, pos).map_err(|e| QuantizeError::Malformed(e.to_string()))?;
            let index = if k == 0 { delta } else { prev + delta };
            if index >= u64::from(n) || (k > 0 && delta == 0) || value == 0 {
                return Err(err("invalid entry"));
            }
            entries.push((index as u32, value));
            prev = index;
        }
        Ok(Self { params, entries })
    }

    pub fn from_bytes(buf: &[u8]) -> Result<Self, QuantizeError> {
        let mut pos = 0;
        let qd = Self::parse(buf, &mut pos)?;
        if pos != buf.len() {
            return Err(QuantizeError::Malformed("trailing bytes".to_string()));
        }
        Ok(qd)
    }
}

/// Quantizes a sparse probability list (indices strictly increasing; omitted
/// indices have probability 0) over the alphabet in `params`.
pub fn quantize_sparse(
    probs: &[(u32, f64)],
    params: QuantizerParams,
) -> Result<QuantizedDistribution, QuantizeError> {
    let threshold = params.threshold();
    let scale = params.r() * params.r() * params.n as f64;
    let entries = probs
        .iter()
        .filter(|&&(_, p)| p >= threshold)
        .map(|&(i, p)| (i, (p * scale).floor() as u64))
        .collect();
    Ok(QuantizedDistribution { params, entries })
}

/// Quantizes a proper distribution.
pub fn quantize(
    p: &Distribution,
    params: QuantizerParams,
) -> Result<QuantizedDistribution, QuantizeError> {
    if p.is_deficient() || p.len() != params.n as usize {
        return Err(QuantizeError::Malformed(format!(
            "expected a proper distribution over {} symbols",
            params.n
        )));
    }
    let sparse: Vec<(u32, f64)> =
        p.probs().iter().enumerate().map(|(i, &pi)| (i as u32, pi)).collect();
    quantize_sparse(&sparse, params)
}

/// Rebuilds `Q` from the record. Recorded indices split mass `1 - 1/r` in
/// proportion to their floor values; the rest share `1/r` uniformly. With
/// every index recorded there is no uniform bucket and `Q` comes back
/// deficient with total `1 - 1/r`.
pub fn reconstruct(qd: &QuantizedDistribution) -> Result<Distribution, QuantizeError> {
    let n = qd.params().n() as usize;
    let mut probs = vec![0.0; n];
    if let Some(q) = qd.unrecorded_prob() {
        probs.fill(q);
    }
    for (i, q) in qd.recorded_probs() {
        probs[i as usize] = q;
    }
    Ok(Distribution::deficient(probs)?)
}

/// Exact serialized size of the canonical encoding, in bits.
pub fn storage_bits(qd: &QuantizedDistribution) -> u64 {
    8 * qd.to_bytes().len() as u64
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KlBoundCheck {
    pub kl: f64,
    pub bound: f64,
    pub ok: bool,
}

/// Quantize-then-reconstruct `P` and compare `D(P || Q)` against the
/// guarantee `(c - 1) H(P) + eps`.
pub fn verify_kl_bound(
    p: &Distribution,
    params: QuantizerParams,
) -> Result<KlBoundCheck, QuantizeError> {
    let q = reconstruct(&quantize(p, params)?)?;
    let kl = kl_divergence(p, &q)?;
    let bound = (params.c() - 1.0) * p.entropy() + params.eps();
    Ok(KlBoundCheck { kl, bound, ok: kl < bound })
}
