//! MSB-first bit packing and canonical prefix codes.

use super::ImageError;

#[derive(Debug, Default)]
pub(crate) struct BitWriter {
    bytes: Vec<u8>,
    acc: u64,
    nbits: u32,
}

impl BitWriter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_prefix(bytes: Vec<u8>) -> Self {
        Self {
            bytes,
            ..Self::default()
        }
    }

    /// Appends the low `len` bits of `value`, most significant first.
    pub fn put(&mut self, value: u32, len: u32) {
        debug_assert!(len <= 32);
        if len == 0 {
            return;
        }
        self.acc = (self.acc << len) | (value as u64 & ((1u64 << len) - 1));
        self.nbits += len;
        while self.nbits >= 8 {
            self.nbits -= 8;
            self.bytes.push((self.acc >> self.nbits) as u8);
        }
        self.acc &= (1u64 << self.nbits) - 1;
    }

    /// Pads the final partial byte with one-bits.
    pub fn finish(mut self) -> Vec<u8> {
        if self.nbits > 0 {
            let pad = 8 - self.nbits;
            self.put((1 << pad) - 1, pad);
        }
        self.bytes
    }
}

pub(crate) struct BitReader<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> BitReader<'a> {
    pub fn new(data: &'a [u8]) -> Self {
        Self { data, pos: 0 }
    }

    pub fn byte_offset(&self) -> usize {
        self.pos / 8
    }

    pub fn corrupt(&self, reason: impl Into<String>) -> ImageError {
        ImageError::CorruptPayload {
            offset: self.byte_offset(),
            reason: reason.into(),
        }
    }

    pub fn bit(&mut self) -> Result<u32, ImageError> {
        let byte = *self
            .data
            .get(self.pos / 8)
            .ok_or_else(|| self.corrupt("unexpected end of payload"))?;
        let b = (byte >> (7 - self.pos % 8)) & 1;
        self.pos += 1;
        Ok(b as u32)
    }

    pub fn bits(&mut self, len: u32) -> Result<u32, ImageError> {
        let mut v = 0;
        for _ in 0..len {
            v = (v << 1) | self.bit()?;
        }
        Ok(v)
    }

    /// Everything after the current position must be one-bit padding
    /// inside the last byte.
    pub fn expect_end(&self) -> Result<(), ImageError> {
        let end_byte = self.pos.div_ceil(8);
        if end_byte < self.data.len() {
            return Err(ImageError::CorruptPayload {
                offset: end_byte,
                reason: "trailing bytes after last block".into(),
            });
        }
        if !self.pos.is_multiple_of(8) {
            let last = self.data[self.pos / 8];
            let pad = 8 - (self.pos % 8) as u32;
            if last & ((1u8 << pad) - 1) != (1u8 << pad) - 1 {
                return Err(self.corrupt("padding bits are not all ones"));
            }
        }
        Ok(())
    }
}

/// Canonical prefix code from JPEG-style `BITS` (codes per length 1..=16)
/// and `HUFFVAL` (symbols in code order) lists.
pub(crate) struct PrefixCode {
    // encoder side: symbol -> (code, length), length 0 means absent
    codes: [(u16, u8); 256],
    // decoder side, per length l in 1..=16
    min_code: [i32; 17],
    max_code: [i32; 17],
    val_ptr: [usize; 17],
    values: Vec<u8>,
}

impl PrefixCode {
    pub fn new(bits: &[u8; 16], values: &[u8]) -> Self {
        let mut codes = [(0u16, 0u8); 256];
        let mut min_code = [0i32; 17];
        let mut max_code = [-1i32; 17];
        let mut val_ptr = [0usize; 17];
        let mut code: u32 = 0;
        let mut k = 0usize;
        for len in 1..=16usize {
            let count = bits[len - 1] as usize;
            if count > 0 {
                val_ptr[len] = k;
                min_code[len] = code as i32;
                for _ in 0..count {
                    codes[values[k] as usize] = (code as u16, len as u8);
                    code += 1;
                    k += 1;
                }
                max_code[len] = code as i32 - 1;
            }
            code <<= 1;
        }
        assert_eq!(k, values.len(), "BITS/HUFFVAL size mismatch");
        Self {
            codes,
            min_code,
            max_code,
            val_ptr,
            values: values.to_vec(),
        }
    }

    pub fn put(&self, w: &mut BitWriter, symbol: u8) {
        let (code, len) = self.codes[symbol as usize];
        assert!(len > 0, "symbol {symbol:#04x} has no code");
        w.put(code as u32, len as u32);
    }

    #[cfg(test)]
    pub fn code_len(&self, symbol: u8) -> u8 {
        self.codes[symbol as usize].1
    }

    pub fn get(&self, r: &mut BitReader<'_>) -> Result<u8, ImageError> {
        let start = r.byte_offset();
        let mut code = 0i32;
        for len in 1..=16 {
            code = (code << 1) | r.bit()? as i32;
            if code <= self.max_code[len] && code >= self.min_code[len] {
                return Ok(self.values[self.val_ptr[len] + (code - self.min_code[len]) as usize]);
            }
        }
        Err(ImageError::CorruptPayload {
            offset: start,
            reason: "invalid prefix code".into(),
        })
    }
}

/// Number of bits needed for `|v|` (JPEG magnitude category).
pub(crate) fn category(v: i32) -> u32 {
    32 - v.unsigned_abs().leading_zeros()
}

/// Writes category symbol's extra bits: `v` itself when positive,
/// `v + 2^cat - 1` when negative.
pub(crate) fn put_magnitude(w: &mut BitWriter, v: i32, cat: u32) {
    if cat == 0 {
        return;
    }
    let bits = if v < 0 { v + (1 << cat) - 1 } else { v };
    w.put(bits as u32, cat);
}

pub(crate) fn get_magnitude(r: &mut BitReader<'_>, cat: u32) -> Result<i32, ImageError> {
    if cat == 0 {
        return Ok(0);
    }
    let bits = r.bits(cat)? as i32;
    Ok(if bits < (1 << (cat - 1)) {
        bits - (1 << cat) + 1
    } else {
        bits
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bits_round_trip_with_one_padding() {
        let mut w = BitWriter::new();
        w.put(0b101, 3);
        w.put(0x3ff, 10);
        let bytes = w.finish();
        assert_eq!(bytes.len(), 2);
        assert_eq!(bytes[1] & 0b111, 0b111);
        let mut r = BitReader::new(&bytes);
        assert_eq!(r.bits(3).unwrap(), 0b101);
        assert_eq!(r.bits(10).unwrap(), 0x3ff);
        r.expect_end().unwrap();
    }

    #[test]
    fn magnitude_coding() {
        for v in -2047..=2047 {
            let cat = category(v);
            let mut w = BitWriter::new();
            put_magnitude(&mut w, v, cat);
            let bytes = w.finish();
            let mut r = BitReader::new(&bytes);
            assert_eq!(get_magnitude(&mut r, cat).unwrap(), v);
        }
        assert_eq!(category(0), 0);
        assert_eq!(category(-1), 1);
        assert_eq!(category(1024), 11);
    }

    #[test]
    fn reading_past_end_names_offset() {
        let mut r = BitReader::new(&[0xff]);
        r.bits(8).unwrap();
        match r.bit() {
            Err(ImageError::CorruptPayload { offset, .. }) => assert_eq!(offset, 1),
            other => panic!("{other:?}"),
        }
    }
}
