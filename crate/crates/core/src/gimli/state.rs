use std::fmt;
use std::str::FromStr;

/// Number of bytes in a serialized state.
pub const STATE_BYTES: usize = 48;

/// One of the three rows of the state matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Row {
    A,
    B,
    C,
}

impl Row {
    pub const ALL: [Row; 3] = [Row::A, Row::B, Row::C];

    pub fn index(self) -> usize {
        match self {
            Row::A => 0,
            Row::B => 1,
            Row::C => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Row::A => "a",
            Row::B => "b",
            Row::C => "c",
        }
    }
}

impl fmt::Display for Row {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown row `{0}` (expected a, b or c)")]
pub struct ParseRowError(pub String);

impl FromStr for Row {
    type Err = ParseRowError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "a" | "A" => Ok(Row::A),
            "b" | "B" => Ok(Row::B),
            "c" | "C" => Ok(Row::C),
            other => Err(ParseRowError(other.to_string())),
        }
    }
}

/// The 384-bit Gimli state as a 3x4 matrix of 32-bit words.
///
/// Row `a` is the rate (it receives the nonce and the data blocks), rows `b`
/// and `c` form the capacity (they receive the key).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct GimliState {
    pub a: [u32; 4],
    pub b: [u32; 4],
    pub c: [u32; 4],
}

impl GimliState {
    pub const fn zero() -> Self {
        GimliState {
            a: [0; 4],
            b: [0; 4],
            c: [0; 4],
        }
    }

    /// Builds a state from the 12 words in memory order `a0..a3, b0..b3, c0..c3`.
    pub fn from_words(words: [u32; 12]) -> Self {
        let mut s = GimliState::zero();
        s.a.copy_from_slice(&words[0..4]);
        s.b.copy_from_slice(&words[4..8]);
        s.c.copy_from_slice(&words[8..12]);
        s
    }

    pub fn to_words(&self) -> [u32; 12] {
        let mut w = [0u32; 12];
        w[0..4].copy_from_slice(&self.a);
        w[4..8].copy_from_slice(&self.b);
        w[8..12].copy_from_slice(&self.c);
        w
    }

    pub fn row(&self, row: Row) -> &[u32; 4] {
        match row {
            Row::A => &self.a,
            Row::B => &self.b,
            Row::C => &self.c,
        }
    }

    pub fn row_mut(&mut self, row: Row) -> &mut [u32; 4] {
        match row {
            Row::A => &mut self.a,
            Row::B => &mut self.b,
            Row::C => &mut self.c,
        }
    }

    #[inline]
    pub fn word(&self, row: Row, col: usize) -> u32 {
        self.row(row)[col]
    }

    #[inline]
    pub fn word_mut(&mut self, row: Row, col: usize) -> &mut u32 {
        &mut self.row_mut(row)[col]
    }

    #[inline]
    pub fn bit(&self, row: Row, col: usize, bit: u32) -> bool {
        (self.word(row, col) >> bit) & 1 == 1
    }

    /// Little-endian words, row-major `a, b, c`.
    pub fn to_bytes(&self) -> [u8; STATE_BYTES] {
        let mut out = [0u8; STATE_BYTES];
        for (chunk, w) in out.chunks_exact_mut(4).zip(self.to_words()) {
            chunk.copy_from_slice(&w.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8; STATE_BYTES]) -> Self {
        let mut words = [0u32; 12];
        for (w, chunk) in words.iter_mut().zip(bytes.chunks_exact(4)) {
            *w = u32::from_le_bytes([chunk[0], chunk[1], chunk[2], chunk[3]]);
        }
        GimliState::from_words(words)
    }

    /// Reads byte `idx` of the serialized state without serializing it.
    #[inline]
    pub(crate) fn byte(&self, idx: usize) -> u8 {
        let w = self.word_at(idx / 4);
        (w >> (8 * (idx % 4))) as u8
    }

    #[inline]
    pub(crate) fn xor_byte(&mut self, idx: usize, v: u8) {
        *self.word_at_mut(idx / 4) ^= (v as u32) << (8 * (idx % 4));
    }

    #[inline]
    pub(crate) fn set_byte(&mut self, idx: usize, v: u8) {
        let shift = 8 * (idx % 4);
        let w = self.word_at_mut(idx / 4);
        *w = (*w & !(0xff << shift)) | ((v as u32) << shift);
    }

    #[inline]
    fn word_at(&self, i: usize) -> u32 {
        match i / 4 {
            0 => self.a[i % 4],
            1 => self.b[i % 4],
            _ => self.c[i % 4],
        }
    }

    #[inline]
    fn word_at_mut(&mut self, i: usize) -> &mut u32 {
        match i / 4 {
            0 => &mut self.a[i % 4],
            1 => &mut self.b[i % 4],
            _ => &mut self.c[i % 4],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn byte_accessors_follow_le_layout() {
        let mut s = GimliState::zero();
        s.b[1] = 0x4433_2211;
        let bytes = s.to_bytes();
        assert_eq!(&bytes[20..24], &[0x11, 0x22, 0x33, 0x44]);
        assert_eq!(s.byte(21), 0x22);
        s.xor_byte(23, 0x44);
        assert_eq!(s.b[1], 0x0033_2211);
        s.set_byte(16, 0xaa);
        assert_eq!(s.b[0], 0xaa);
    }

    #[test]
    fn row_parse() {
        assert_eq!("b".parse::<Row>().unwrap(), Row::B);
        assert!("d".parse::<Row>().is_err());
    }

    proptest! {
        #[test]
        fn serialization_round_trips(words in proptest::array::uniform12(any::<u32>())) {
            let s = GimliState::from_words(words);
            prop_assert_eq!(GimliState::from_bytes(&s.to_bytes()), s);
            prop_assert_eq!(s.to_words(), words);
        }
    }
}
