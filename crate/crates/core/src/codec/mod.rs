//! Universal compression: the sequential estimator drives a range coder.
//!
//! File layout (big-endian):
//!
//! ```text
//! magic "PKTC" (4) | version (1) | m (2) | n (8) | seed (8) | digest (8) | payload
//! ```
//!
//! The constraint set itself travels out of band; the digest covers the
//! constraint set and the integration settings, because a decoder must run
//! the exact same estimator as the encoder to reproduce its probabilities.
//! When the estimator samples, its per-step seeds derive from the header seed,
//! the step index and the current Dirichlet parameters, so encoder and decoder
//! see bit-identical predictions.
//!
//! Each prediction is quantised to 16-bit frequencies with a floor of one
//! count per symbol: `f_i = 1 + ⌊p_i (2^16 - m)⌋`, and the few counts left
//! over go to the largest fractional remainders.

pub mod range_coder;

use crate::constraints::{mix_seed, ConstraintSet, IntegrationConfig};
use crate::error::{Error, Result};
use crate::estimator::{log_mixture_direct, EstimatorState};
use range_coder::{Decoder, Encoder, TOTAL};

pub const MAGIC: [u8; 4] = *b"PKTC";
pub const VERSION: u8 = 1;
pub const HEADER_LEN: usize = 31;

/// Octets plus the number of meaningful bits (always a whole number of
/// bytes here; trailing pad bits would be zero).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitBuffer {
    pub bytes: Vec<u8>,
    pub bit_length: u64,
}

impl BitBuffer {
    pub fn from_bytes(bytes: Vec<u8>) -> Self {
        let bit_length = 8 * bytes.len() as u64;
        Self { bytes, bit_length }
    }

    /// Bits after the fixed header.
    pub fn payload_bit_length(&self) -> u64 {
        self.bit_length.saturating_sub(8 * HEADER_LEN as u64)
    }
}

/// Parsed file header.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Header {
    pub m: u16,
    pub n: u64,
    pub seed: u64,
    pub digest: u64,
}

impl Header {
    pub fn to_bytes(&self) -> [u8; HEADER_LEN] {
        let mut out = [0u8; HEADER_LEN];
        out[..4].copy_from_slice(&MAGIC);
        out[4] = VERSION;
        out[5..7].copy_from_slice(&self.m.to_be_bytes());
        out[7..15].copy_from_slice(&self.n.to_be_bytes());
        out[15..23].copy_from_slice(&self.seed.to_be_bytes());
        out[23..31].copy_from_slice(&self.digest.to_be_bytes());
        out
    }

    pub fn parse(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < HEADER_LEN {
            return Err(Error::Codec(format!(
                "input has {} bytes, shorter than the {HEADER_LEN}-byte header",
                bytes.len()
            )));
        }
        if bytes[..4] != MAGIC {
            return Err(Error::Codec("bad magic number".into()));
        }
        if bytes[4] != VERSION {
            return Err(Error::Codec(format!("unsupported format version {}", bytes[4])));
        }
        let word = |r: std::ops::Range<usize>| u64::from_be_bytes(bytes[r].try_into().expect("8-byte slice"));
        Ok(Self {
            m: u16::from_be_bytes([bytes[5], bytes[6]]),
            n: word(7..15),
            seed: word(15..23),
            digest: word(23..31),
        })
    }
}

/// Digest identifying everything the decoder must match.
pub fn stream_digest(set: &ConstraintSet, cfg: &IntegrationConfig) -> u64 {
    mix_seed(&[set.digest(), cfg.fingerprint()])
}

/// Cumulative 16-bit frequency table (`m + 1` entries, from 0 to `2^16`).
pub fn quantize(probs: &[f64]) -> Result<Vec<u32>> {
    let m = probs.len();
    if m < 2 || m as u32 > TOTAL / 2 {
        return Err(Error::Codec(format!("cannot quantise an alphabet of {m} symbols")));
    }
    let sum: f64 = probs.iter().sum();
    if !(sum > 0.0 && sum.is_finite()) || probs.iter().any(|p| !(*p >= 0.0)) {
        return Err(Error::Codec("prediction is not a probability vector".into()));
    }
    let budget = (TOTAL - m as u32) as f64;
    let scaled: Vec<f64> = probs.iter().map(|p| p / sum * budget).collect();
    let mut freq: Vec<u32> = scaled.iter().map(|s| 1 + s.floor() as u32).collect();
    let mut left = TOTAL as i64 - freq.iter().map(|&f| f as i64).sum::<i64>();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| {
        let fa = scaled[a] - scaled[a].floor();
        let fb = scaled[b] - scaled[b].floor();
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    let mut idx = 0;
    while left > 0 {
        freq[order[idx % m]] += 1;
        left -= 1;
        idx += 1;
    }
    while left < 0 {
        // only reachable through rounding in the sum; take from the largest
        let big = (0..m).max_by_key(|&i| freq[i]).expect("nonempty alphabet");
        freq[big] -= 1;
        left += 1;
    }
    let mut cum = Vec::with_capacity(m + 1);
    cum.push(0u32);
    for f in freq {
        cum.push(cum.last().copied().unwrap_or(0) + f);
    }
    Ok(cum)
}

/// Compresses a sequence of 0-based symbols.
pub fn encode(symbols: &[usize], set: &ConstraintSet, cfg: &IntegrationConfig, seed: u64) -> Result<BitBuffer> {
    let m = set.alphabet_size();
    let header = Header {
        m: u16::try_from(m).map_err(|_| Error::Codec(format!("alphabet of {m} symbols does not fit the header")))?,
        n: symbols.len() as u64,
        seed,
        digest: stream_digest(set, cfg),
    };
    let mut bytes = header.to_bytes().to_vec();
    if symbols.is_empty() {
        return Ok(BitBuffer::from_bytes(bytes));
    }
    let mut state = EstimatorState::new(set.clone(), *cfg, seed)?;
    let mut enc = Encoder::new();
    for &s in symbols {
        if s >= m {
            return Err(Error::InvalidSymbol { symbol: s, m });
        }
        let prediction = state.predict()?;
        let cum = quantize(&prediction.probs)?;
        enc.encode(cum[s], cum[s + 1] - cum[s]);
        state.update_with(s, &prediction)?;
    }
    bytes.extend(enc.finish());
    Ok(BitBuffer::from_bytes(bytes))
}

/// Inverse of [`encode`] for the same constraint set and settings.
pub fn decode(buf: &BitBuffer, set: &ConstraintSet, cfg: &IntegrationConfig) -> Result<Vec<usize>> {
    decode_bytes(&buf.bytes, set, cfg)
}

pub fn decode_bytes(bytes: &[u8], set: &ConstraintSet, cfg: &IntegrationConfig) -> Result<Vec<usize>> {
    let header = Header::parse(bytes)?;
    let m = set.alphabet_size();
    if header.m as usize != m {
        return Err(Error::Codec(format!(
            "stream was encoded for an alphabet of {} symbols, constraints have {m}",
            header.m
        )));
    }
    if header.digest != stream_digest(set, cfg) {
        return Err(Error::Codec(
            "constraint/configuration digest mismatch: decode with the constraints and settings used to encode".into(),
        ));
    }
    let payload = &bytes[HEADER_LEN..];
    if header.n == 0 {
        if !payload.is_empty() {
            return Err(Error::Codec("empty stream carries trailing bytes".into()));
        }
        return Ok(Vec::new());
    }
    // every symbol costs at least -log2(1 - (m-1)/2^16) bits of payload
    let min_cost = -(1.0 - (m as f64 - 1.0) / TOTAL as f64).log2();
    let max_symbols = 2.0 * (8.0 * payload.len() as f64 + 64.0) / min_cost;
    if header.n as f64 > max_symbols {
        return Err(Error::Codec(format!("header claims {} symbols for a {}-byte payload", header.n, payload.len())));
    }
    let mut state = EstimatorState::new(set.clone(), *cfg, header.seed)?;
    let mut dec = Decoder::new(payload)?;
    let mut out = Vec::with_capacity(header.n.min(1 << 20) as usize);
    for _ in 0..header.n {
        let prediction = state.predict()?;
        let cum = quantize(&prediction.probs)?;
        let s = dec.decode(&cum)?;
        state.update_with(s, &prediction)?;
        out.push(s);
    }
    if dec.remaining() != 0 {
        return Err(Error::Codec(format!("{} trailing bytes after the payload", dec.remaining())));
    }
    Ok(out)
}

/// Ideal codelength `-log2 M(x^n)` in bits.
pub fn codelength_bits(symbols: &[usize], set: &ConstraintSet, cfg: &IntegrationConfig) -> Result<f64> {
    Ok(-log_mixture_direct(symbols, set, cfg)? / std::f64::consts::LN_2)
}
