//! Fixed-width bit strings.
//!
//! Position 0 is the leftmost character of the text form and the most
//! significant bit of the packed integer, so the integer value of a string is
//! also the index of the matching computational basis vector.

use std::fmt;
use std::ops::BitXor;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{QpkeError, Result};

pub const MAX_WIDTH: usize = 64;

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Bits {
    width: usize,
    value: u64,
}

fn mask(width: usize) -> u64 {
    if width == 64 {
        u64::MAX
    } else {
        (1u64 << width) - 1
    }
}

impl Bits {
    pub fn new(width: usize, value: u64) -> Result<Self> {
        if width > MAX_WIDTH {
            return Err(QpkeError::InvalidParameters(format!(
                "bit string width {width} exceeds {MAX_WIDTH}"
            )));
        }
        if value & !mask(width) != 0 {
            return Err(QpkeError::InvalidParameters(format!(
                "value {value:#x} does not fit in {width} bits"
            )));
        }
        Ok(Self { width, value })
    }

    /// Panics if `value` does not fit; for internal use with known-good widths.
    pub(crate) fn from_raw(width: usize, value: u64) -> Self {
        debug_assert!(width <= MAX_WIDTH && value & !mask(width) == 0);
        Self { width, value }
    }

    pub fn zeros(width: usize) -> Self {
        Self::from_raw(width, 0)
    }

    pub fn ones(width: usize) -> Self {
        Self::from_raw(width, mask(width))
    }

    pub fn from_bools(bits: &[bool]) -> Result<Self> {
        let mut value = 0u64;
        if bits.len() > MAX_WIDTH {
            return Err(QpkeError::InvalidParameters(format!(
                "bit string width {} exceeds {MAX_WIDTH}",
                bits.len()
            )));
        }
        for &b in bits {
            value = (value << 1) | b as u64;
        }
        Ok(Self::from_raw(bits.len(), value))
    }

    pub fn random<R: Rng + ?Sized>(width: usize, rng: &mut R) -> Self {
        let value = if width == 0 { 0 } else { rng.gen::<u64>() & mask(width) };
        Self::from_raw(width, value)
    }

    /// Uniform draw from Ω_parity: strings of the given width whose weight has
    /// the given parity.
    pub fn random_with_parity<R: Rng + ?Sized>(width: usize, parity: bool, rng: &mut R) -> Self {
        assert!(width >= 1, "parity classes need at least one bit");
        let mut b = Self::random(width, rng);
        if b.parity() != parity {
            b.flip(width - 1);
        }
        b
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn value(&self) -> u64 {
        self.value
    }

    /// Bit at position `index`, counted from the left.
    pub fn get(&self, index: usize) -> bool {
        assert!(index < self.width, "bit index {index} out of range for width {}", self.width);
        (self.value >> (self.width - 1 - index)) & 1 == 1
    }

    pub fn set(&mut self, index: usize, bit: bool) {
        assert!(index < self.width, "bit index {index} out of range for width {}", self.width);
        let m = 1u64 << (self.width - 1 - index);
        if bit {
            self.value |= m;
        } else {
            self.value &= !m;
        }
    }

    pub fn flip(&mut self, index: usize) {
        let b = self.get(index);
        self.set(index, !b);
    }

    pub fn weight(&self) -> u32 {
        self.value.count_ones()
    }

    /// Weight mod 2.
    pub fn parity(&self) -> bool {
        self.weight() % 2 == 1
    }

    pub fn is_zero(&self) -> bool {
        self.value == 0
    }

    /// GF(2) inner product.
    pub fn dot(&self, other: &Bits) -> bool {
        assert_eq!(self.width, other.width, "dot of mismatched widths");
        (self.value & other.value).count_ones() % 2 == 1
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.width).map(move |i| self.get(i))
    }

    /// Every string of the given width, in increasing integer order.
    pub fn all(width: usize) -> impl Iterator<Item = Bits> {
        assert!(width < MAX_WIDTH, "cannot enumerate width {width}");
        (0..(1u64 << width)).map(move |v| Bits::from_raw(width, v))
    }

    /// Every string of the given width with weight parity `parity`.
    pub fn all_with_parity(width: usize, parity: bool) -> impl Iterator<Item = Bits> {
        Self::all(width).filter(move |b| b.parity() == parity)
    }

    pub fn concat(&self, other: &Bits) -> Result<Bits> {
        let width = self.width + other.width;
        if width > MAX_WIDTH {
            return Err(QpkeError::InvalidParameters(format!(
                "concatenated width {width} exceeds {MAX_WIDTH}"
            )));
        }
        let high = if other.width == 64 { 0 } else { self.value << other.width };
        Ok(Bits::from_raw(width, high | other.value))
    }

    /// Bits `[start, start + len)`.
    pub fn slice(&self, start: usize, len: usize) -> Bits {
        assert!(start + len <= self.width, "slice out of range");
        let shift = self.width - start - len;
        Bits::from_raw(len, (self.value >> shift) & mask(len))
    }
}

impl BitXor for Bits {
    type Output = Bits;

    fn bitxor(self, rhs: Bits) -> Bits {
        assert_eq!(self.width, rhs.width, "xor of mismatched widths");
        Bits::from_raw(self.width, self.value ^ rhs.value)
    }
}

impl fmt::Display for Bits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.iter() {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for Bits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Bits({self})")
    }
}

impl FromStr for Bits {
    type Err = QpkeError;

    fn from_str(s: &str) -> Result<Self> {
        if s.len() > MAX_WIDTH {
            return Err(QpkeError::Parse(format!(
                "bit string longer than {MAX_WIDTH} characters"
            )));
        }
        let mut value = 0u64;
        for c in s.chars() {
            let bit = match c {
                '0' => 0,
                '1' => 1,
                other => return Err(QpkeError::Parse(format!("invalid bit character {other:?}"))),
            };
            value = (value << 1) | bit;
        }
        Ok(Bits::from_raw(s.len(), value))
    }
}

impl Serialize for Bits {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Bits {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn msb_first_text() {
        let b: Bits = "0110".parse().unwrap();
        assert_eq!(b.value(), 6);
        assert!(!b.get(0));
        assert!(b.get(1));
        assert_eq!(b.to_string(), "0110");
    }

    #[test]
    fn rejects_garbage() {
        assert!("01a".parse::<Bits>().is_err());
        assert!("1".repeat(65).parse::<Bits>().is_err());
        assert!(Bits::new(3, 8).is_err());
    }

    #[test]
    fn parity_classes_have_half_the_strings() {
        for n in 1..=6 {
            assert_eq!(Bits::all_with_parity(n, false).count(), 1 << (n - 1));
            assert_eq!(Bits::all_with_parity(n, true).count(), 1 << (n - 1));
        }
    }

    #[test]
    fn random_with_parity_respects_class() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            assert!(!Bits::random_with_parity(5, false, &mut rng).parity());
            assert!(Bits::random_with_parity(5, true, &mut rng).parity());
        }
    }

    #[test]
    fn concat_and_slice() {
        let a: Bits = "101".parse().unwrap();
        let b: Bits = "0011".parse().unwrap();
        let c = a.concat(&b).unwrap();
        assert_eq!(c.to_string(), "1010011");
        assert_eq!(c.slice(0, 3), a);
        assert_eq!(c.slice(3, 4), b);
    }

    proptest! {
        #[test]
        fn text_round_trip(width in 0usize..=64, raw in any::<u64>()) {
            let b = Bits::from_raw(width, raw & mask(width));
            let back: Bits = b.to_string().parse().unwrap();
            prop_assert_eq!(back, b);
        }
    }
}
