//! Bit-oriented arithmetic coder with 32-bit range precision. Termination
//! costs at most 2 bits beyond the coded ranges; the decoder reads zeros past
//! the end of the payload.

const PRECISION: u32 = 32;
const TOP: u64 = 1 << PRECISION;
const HALF: u64 = TOP / 2;
const QUARTER: u64 = TOP / 4;
const THREE_QUARTERS: u64 = HALF + QUARTER;

/// Largest cumulative total accepted for a single coding step. The range
/// never drops below a quarter of `TOP` between steps, so every frequency
/// unit keeps a nonempty subinterval.
pub const MAX_TOTAL: u64 = 1 << 27;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BitWriter {
    bytes: Vec<u8>,
    bit_len: u64,
}

impl BitWriter {
    pub fn push(&mut self, bit: bool) {
        if self.bit_len % 8 == 0 {
            self.bytes.push(0);
        }
        if bit {
            let last = self.bytes.last_mut().unwrap();
            *last |= 1 << (7 - (self.bit_len % 8));
        }
        self.bit_len += 1;
    }

    pub fn bit_len(&self) -> u64 {
        self.bit_len
    }

    pub fn into_bytes(self) -> (Vec<u8>, u64) {
        (self.bytes, self.bit_len)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct BitReader<'a> {
    bytes: &'a [u8],
    bit_len: u64,
    pos: u64,
}

impl<'a> BitReader<'a> {
    pub fn new(bytes: &'a [u8], bit_len: u64) -> Self {
        debug_assert!(bit_len <= 8 * bytes.len() as u64);
        Self { bytes, bit_len, pos: 0 }
    }

    /// Next bit, or 0 once the payload is exhausted.
    fn read(&mut self) -> bool {
        let bit = if self.pos < self.bit_len {
            let byte = self.bytes[(self.pos / 8) as usize];
            byte >> (7 - (self.pos % 8)) & 1 == 1
        } else {
            false
        };
        self.pos += 1;
        bit
    }
}

pub struct ArithEncoder {
    low: u64,
    high: u64,
    pending: u64,
    out: BitWriter,
}

impl ArithEncoder {
    pub fn new() -> Self {
        Self { low: 0, high: TOP - 1, pending: 0, out: BitWriter::default() }
    }

    fn emit(&mut self, bit: bool) {
        self.out.push(bit);
        for _ in 0..self.pending {
            self.out.push(!bit);
        }
        self.pending = 0;
    }

    /// Narrows the interval to `[cum_lo, cum_hi) / total`.
    pub fn encode(&mut self, cum_lo: u64, cum_hi: u64, total: u64) {
        debug_assert!(cum_lo < cum_hi && cum_hi <= total);
        debug_assert!(total <= MAX_TOTAL);
        let range = self.high - self.low + 1;
        debug_assert!(range >= total);
        self.high = self.low + range * cum_hi / total - 1;
        self.low += range * cum_lo / total;
        loop {
            if self.high < HALF {
                self.emit(false);
            } else if self.low >= HALF {
                self.emit(true);
                self.low -= HALF;
                self.high -= HALF;
            } else if self.low >= QUARTER && self.high < THREE_QUARTERS {
                self.pending += 1;
                self.low -= QUARTER;
                self.high -= QUARTER;
            } else {
                break;
            }
            self.low <<= 1;
            self.high = (self.high << 1) | 1;
        }
    }

    pub fn finish(mut self) -> BitWriter {
        self.pending += 1;
        if self.low < QUARTER {
            self.emit(false);
        } else {
            self.emit(true);
        }
        self.out
    }
}

pub struct ArithDecoder<'a> {
    low: u64,
    high: u64,
    code: u64,
    input: BitReader<'a>,
}

impl<'a> ArithDecoder<'a> {
    pub fn new(bytes: &'a [u8], bit_len: u64) -> Self {
        let mut input = BitReader::new(bytes, bit_len);
        let mut code = 0;
        for _ in 0..PRECISION {
            code = (code << 1) | u64::from(input.read());
        }
        Self { low: 0, high: TOP - 1, code, input }
    }

    /// Cumulative-frequency value the encoder's interval points at.
    pub fn target(&self, total: u64) -> u64 {
        let range = self.high - self.low + 1;
        // Saturating keeps garbage input from underflowing; the caller only
        // guarantees well-formed payloads.
        (((self.code.saturating_sub(self.low) + 1) * total - 1) / range).min(total - 1)
    }

    /// Mirrors `ArithEncoder::encode` for the symbol whose cumulative range
    /// contains the current target.
    pub fn advance(&mut self, cum_lo: u64, cum_hi: u64, total: u64) {
        let range = self.high - self.low + 1;
        self.high = self.low + range * cum_hi / total - 1;
        self.low += range * cum_lo / total;
        loop {
            if self.high < HALF {
            } else if self.low >= HALF {
                self.low -= HALF;
                self.high -= HALF;
                self.code -= HALF;
            } else if self.low >= QUARTER && self.high < THREE_QUARTERS {
                self.low -= QUARTER;
                self.high -= QUARTER;
                self.code -= QUARTER;
            } else {
                break;
            }
            self.low <<= 1;
            self.high = (self.high << 1) | 1;
            self.code = (self.code << 1) | u64::from(self.input.read());
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn roundtrip(freqs: &[u64], symbols: &[usize]) -> u64 {
        let total: u64 = freqs.iter().sum();
        let cum: Vec<u64> = std::iter::once(0)
            .chain(freqs.iter().scan(0, |acc, &f| {
                *acc += f;
                Some(*acc)
            }))
            .collect();
        let mut enc = ArithEncoder::new();
        for &s in symbols {
            enc.encode(cum[s], cum[s + 1], total);
        }
        let (bytes, bit_len) = enc.finish().into_bytes();
        let mut dec = ArithDecoder::new(&bytes, bit_len);
        for &s in symbols {
            let target = dec.target(total);
            let found = cum.partition_point(|&c| c <= target) - 1;
            assert_eq!(found, s);
            dec.advance(cum[s], cum[s + 1], total);
        }
        bit_len
    }

    #[test]
    fn certain_symbols_cost_two_bits() {
        let bits = roundtrip(&[1], &[0; 1000]);
        assert_eq!(bits, 2);
    }

    #[test]
    fn uniform_symbols_cost_about_log_n() {
        let symbols: Vec<usize> = (0..4096).map(|i| i % 16).collect();
        let bits = roundtrip(&[1; 16], &symbols);
        assert!(bits >= 4 * 4096);
        assert!(bits <= 4 * 4096 + 2);
    }

    #[test]
    fn skewed_frequencies_respect_self_information() {
        let freqs = [60000u64, 5000, 500, 36];
        let total: u64 = freqs.iter().sum();
        let symbols: Vec<usize> = (0..5000).map(|i| if i % 100 == 0 { 1 } else { 0 }).collect();
        let ideal: f64 = symbols
            .iter()
            .map(|&s| (total as f64 / freqs[s] as f64).log2())
            .sum();
        let bits = roundtrip(&freqs, &symbols);
        assert!((bits as f64) <= ideal.ceil() + 2.0 + 0.01 * symbols.len() as f64);
    }

    #[test]
    fn empty_message_roundtrips() {
        assert_eq!(roundtrip(&[1, 1], &[]), 2);
    }
}
