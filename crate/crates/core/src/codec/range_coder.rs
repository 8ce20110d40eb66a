//! A 32-bit range coder with carry propagation through a cached byte, in the
//! style of the LZMA coder, over 16-bit cumulative frequencies.
//!
//! Each step splits the current range exactly: a symbol with cumulative
//! frequency `[c, c + f)` out of `2^16` gets the sub-range
//! `[⌊range·c / 2^16⌋, ⌊range·(c+f) / 2^16⌋)`, computed in 64-bit arithmetic.
//! The encoder's first output byte is always zero and is not stored.

use crate::error::{Error, Result};

pub const TOTAL_BITS: u32 = 16;
pub const TOTAL: u32 = 1 << TOTAL_BITS;
const TOP: u32 = 1 << 24;

fn split(range: u32, cum: u32) -> u32 {
    ((range as u64 * cum as u64) >> TOTAL_BITS) as u32
}

#[derive(Debug)]
pub struct Encoder {
    low: u64,
    range: u32,
    cache: u8,
    cache_size: u64,
    out: Vec<u8>,
    skipped_first: bool,
}

impl Default for Encoder {
    fn default() -> Self {
        Self::new()
    }
}

impl Encoder {
    pub fn new() -> Self {
        Self { low: 0, range: u32::MAX, cache: 0, cache_size: 1, out: Vec::new(), skipped_first: false }
    }

    fn emit(&mut self, byte: u8) {
        if self.skipped_first {
            self.out.push(byte);
        } else {
            debug_assert_eq!(byte, 0, "leading range-coder byte must be zero");
            self.skipped_first = true;
        }
    }

    fn shift_low(&mut self) {
        if (self.low as u32) < 0xFF00_0000 || (self.low >> 32) != 0 {
            let carry = (self.low >> 32) as u8;
            let mut pending = self.cache;
            loop {
                self.emit(pending.wrapping_add(carry));
                pending = 0xFF;
                self.cache_size -= 1;
                if self.cache_size == 0 {
                    break;
                }
            }
            self.cache = ((self.low >> 24) & 0xFF) as u8;
        }
        self.cache_size += 1;
        self.low = (self.low & 0x00FF_FFFF) << 8;
    }

    /// Encodes the interval `[cum, cum + freq)` of `TOTAL`.
    pub fn encode(&mut self, cum: u32, freq: u32) {
        debug_assert!(freq > 0 && cum + freq <= TOTAL);
        let start = split(self.range, cum);
        let end = split(self.range, cum + freq);
        self.low += start as u64;
        self.range = end - start;
        while self.range < TOP {
            self.range <<= 8;
            self.shift_low();
        }
    }

    pub fn finish(mut self) -> Vec<u8> {
        for _ in 0..5 {
            self.shift_low();
        }
        self.out
    }
}

#[derive(Debug)]
pub struct Decoder<'a> {
    code: u32,
    range: u32,
    input: &'a [u8],
    pos: usize,
}

impl<'a> Decoder<'a> {
    pub fn new(input: &'a [u8]) -> Result<Self> {
        let mut d = Self { code: 0, range: u32::MAX, input, pos: 0 };
        for _ in 0..4 {
            d.code = (d.code << 8) | d.next_byte()? as u32;
        }
        Ok(d)
    }

    fn next_byte(&mut self) -> Result<u8> {
        let b = *self.input.get(self.pos).ok_or_else(|| Error::Codec("payload is truncated".into()))?;
        self.pos += 1;
        Ok(b)
    }

    /// Decodes one symbol given the cumulative frequency table
    /// `cum[0] = 0 < cum[1] < … < cum[m] = TOTAL`.
    pub fn decode(&mut self, cum: &[u32]) -> Result<usize> {
        let m = cum.len() - 1;
        let mut symbol = None;
        let mut start = 0;
        let mut end = 0;
        for i in 0..m {
            let hi = if i + 1 == m { self.range } else { split(self.range, cum[i + 1]) };
            if self.code < hi {
                symbol = Some(i);
                start = split(self.range, cum[i]);
                end = hi;
                break;
            }
        }
        let symbol = symbol.ok_or_else(|| Error::Codec("corrupt payload: code outside range".into()))?;
        self.code -= start;
        self.range = end - start;
        while self.range < TOP {
            self.range <<= 8;
            self.code = (self.code << 8) | self.next_byte()? as u32;
        }
        Ok(symbol)
    }

    /// Bytes not consumed by the symbols decoded so far.
    pub fn remaining(&self) -> usize {
        self.input.len() - self.pos
    }
}
