//! Strings over an explicit integer alphabet `{0, .., n-1}` and their on-disk
//! form: header `{n: varint, m: varint}` followed by raw rank bytes when
//! `n <= 256`, otherwise a varint per symbol.

use crate::varint;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SequenceError {
    #[error("symbol {symbol} at position {position} is outside alphabet of size {n}")]
    SymbolOutOfRange { symbol: u32, position: usize, n: u32 },
    #[error("alphabet size must be at least 1")]
    EmptyAlphabet,
    #[error("malformed sequence file: {0}")]
    Malformed(String),
}

/// A string over `{0, .., n-1}`. `m` is the length.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sequence {
    symbols: Vec<u32>,
    n: u32,
}

impl Sequence {
    pub fn new(symbols: Vec<u32>, n: u32) -> Result<Self, SequenceError> {
        if n == 0 {
            return Err(SequenceError::EmptyAlphabet);
        }
        if let Some(position) = symbols.iter().position(|&s| s >= n) {
            return Err(SequenceError::SymbolOutOfRange { symbol: symbols[position], position, n });
        }
        Ok(Self { symbols, n })
    }

    pub fn symbols(&self) -> &[u32] {
        &self.symbols
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn m(&self) -> usize {
        self.symbols.len()
    }

    /// Number of distinct symbols actually occurring.
    pub fn distinct_symbols(&self) -> usize {
        let mut seen = std::collections::BTreeSet::new();
        for &s in &self.symbols {
            seen.insert(s);
        }
        seen.len()
    }

    /// Builds a sequence from text, mapping code points to ranks in
    /// first-appearance order. Returns the mapping alongside.
    pub fn from_text(text: &str) -> (Self, Vec<char>) {
        let mut ranks = std::collections::HashMap::new();
        let mut alphabet = Vec::new();
        let mut symbols = Vec::with_capacity(text.chars().count());
        for ch in text.chars() {
            let next = alphabet.len() as u32;
            let rank = *ranks.entry(ch).or_insert_with(|| {
                alphabet.push(ch);
                next
            });
            symbols.push(rank);
        }
        let n = (alphabet.len() as u32).max(1);
        (Self { symbols, n }, alphabet)
    }

    /// Treats every byte as a symbol over the full byte alphabet.
    pub fn from_raw_bytes(bytes: &[u8]) -> Self {
        Self { symbols: bytes.iter().map(|&b| u32::from(b)).collect(), n: 256 }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        varint::write_u64(&mut out, u64::from(self.n));
        varint::write_u64(&mut out, self.symbols.len() as u64);
        if self.n <= 256 {
            out.extend(self.symbols.iter().map(|&s| s as u8));
        } else {
            for &s in &self.symbols {
                varint::write_u64(&mut out, u64::from(s));
            }
        }
        out
    }

    pub fn from_bytes(buf: &[u8]) -> Result<Self, SequenceError> {
        let mut pos = 0;
        let n = varint::read_u64(buf, &mut pos)
            .map_err(|e| SequenceError::Malformed(e.to_string()))?;
        let n = u32::try_from(n).map_err(|_| SequenceError::Malformed("n too large".into()))?;
        let m = varint::read_u64(buf, &mut pos)
            .map_err(|e| SequenceError::Malformed(e.to_string()))? as usize;
        let mut symbols = Vec::with_capacity(m);
        if n <= 256 && n >= 1 {
            let body = buf
                .get(pos..pos + m)
                .ok_or_else(|| SequenceError::Malformed("body shorter than header length".into()))?;
            symbols.extend(body.iter().map(|&b| u32::from(b)));
            pos += m;
        } else {
            for _ in 0..m {
                let s = varint::read_u64(buf, &mut pos)
                    .map_err(|e| SequenceError::Malformed(e.to_string()))?;
                symbols.push(
                    u32::try_from(s)
                        .map_err(|_| SequenceError::Malformed("symbol too large".into()))?,
                );
            }
        }
        if pos != buf.len() {
            return Err(SequenceError::Malformed("trailing bytes after body".into()));
        }
        Self::new(symbols, n)
    }
}
