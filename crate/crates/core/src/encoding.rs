//! Canonical byte encoding used wherever values are hashed or signed.
//!
//! Every field is written as a 4-byte big-endian length followed by its
//! bytes. Lists carry a 4-byte big-endian element count before their
//! elements. Integers are fixed-width big-endian, padded to the byte width
//! of the modulus they live under.

use num_bigint::BigUint;

/// Incremental builder for canonical encodings.
#[derive(Debug, Default, Clone)]
pub struct Encoder {
    buf: Vec<u8>,
}

impl Encoder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends one length-prefixed field.
    pub fn bytes(&mut self, field: &[u8]) -> &mut Self {
        let len = u32::try_from(field.len()).expect("field longer than u32::MAX");
        self.buf.extend_from_slice(&len.to_be_bytes());
        self.buf.extend_from_slice(field);
        self
    }

    pub fn str(&mut self, field: &str) -> &mut Self {
        self.bytes(field.as_bytes())
    }

    pub fn u64(&mut self, value: u64) -> &mut Self {
        self.bytes(&value.to_be_bytes())
    }

    /// Appends an integer padded to `width` bytes.
    pub fn uint(&mut self, value: &BigUint, width: usize) -> &mut Self {
        self.bytes(&fixed_width(value, width))
    }

    /// Appends a list element count. The caller writes the elements next.
    pub fn count(&mut self, n: usize) -> &mut Self {
        let n = u32::try_from(n).expect("list longer than u32::MAX");
        self.buf.extend_from_slice(&n.to_be_bytes());
        self
    }

    pub fn finish(self) -> Vec<u8> {
        self.buf
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.buf
    }
}

/// Big-endian bytes of `value` left-padded with zeros to `width`.
///
/// Panics if the value does not fit, which would mean an unreduced integer
/// reached an encoder.
pub fn fixed_width(value: &BigUint, width: usize) -> Vec<u8> {
    let raw = value.to_bytes_be();
    let raw: &[u8] = if raw == [0] { &[] } else { &raw };
    assert!(raw.len() <= width, "integer wider than {width} bytes");
    let mut out = vec![0u8; width - raw.len()];
    out.extend_from_slice(raw);
    out
}

/// Byte width of integers below `modulus`.
pub fn width_of(modulus: &BigUint) -> usize {
    (modulus.bits() as usize).div_ceil(8)
}

/// Lowercase fixed-width hex.
pub fn to_hex(value: &BigUint, width: usize) -> String {
    hex::encode(fixed_width(value, width))
}

/// Parses hex of exactly `width` bytes.
pub fn from_hex(s: &str, width: usize) -> Option<BigUint> {
    if s.len() != width * 2 || s.bytes().any(|b| b.is_ascii_uppercase()) {
        return None;
    }
    hex::decode(s).ok().map(|b| BigUint::from_bytes_be(&b))
}

/// Parses lowercase hex of exactly `N` bytes into an array.
pub fn hex_array<const N: usize>(s: &str) -> Option<[u8; N]> {
    if s.len() != N * 2 || s.bytes().any(|b| b.is_ascii_uppercase()) {
        return None;
    }
    let mut out = [0u8; N];
    hex::decode_to_slice(s, &mut out).ok()?;
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fields_are_length_prefixed() {
        let mut e = Encoder::new();
        e.bytes(b"ab").bytes(b"");
        assert_eq!(e.finish(), vec![0, 0, 0, 2, b'a', b'b', 0, 0, 0, 0]);
    }

    #[test]
    fn integers_are_padded() {
        assert_eq!(fixed_width(&BigUint::from(5u8), 3), vec![0, 0, 5]);
        assert_eq!(fixed_width(&BigUint::from(0u8), 2), vec![0, 0]);
        assert_eq!(to_hex(&BigUint::from(0xabu8), 2), "00ab");
    }

    #[test]
    #[should_panic]
    fn oversize_integer_panics() {
        fixed_width(&BigUint::from(0x1_0000u32), 2);
    }

    #[test]
    fn hex_parsing_is_strict() {
        assert_eq!(from_hex("00ab", 2), Some(BigUint::from(0xabu8)));
        assert_eq!(from_hex("ab", 2), None);
        assert_eq!(from_hex("00AB", 2), None);
        assert_eq!(from_hex("zz00", 2), None);
        assert_eq!(hex_array::<2>("0102"), Some([1, 2]));
        assert_eq!(hex_array::<2>("010203"), None);
    }

    #[test]
    fn width_matches_bit_length() {
        assert_eq!(width_of(&BigUint::from(23u8)), 1);
        assert_eq!(width_of(&BigUint::from(256u16)), 2);
    }
}
