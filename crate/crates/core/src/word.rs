use std::fmt;

use serde::{Serialize, Serializer};

/// A data word of arbitrary bit width, stored as little-endian 64-bit limbs.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Word {
    width: u32,
    limbs: Vec<u64>,
}

impl Word {
    pub fn zero(width: u32) -> Self {
        Self {
            width,
            limbs: vec![0; (width as usize).div_ceil(64).max(1)],
        }
    }

    pub fn from_u128(value: u128, width: u32) -> Self {
        let mut w = Self::zero(width);
        let masked = value & mask128(width);
        w.limbs[0] = masked as u64;
        if w.limbs.len() > 1 {
            w.limbs[1] = (masked >> 64) as u64;
        }
        w
    }

    /// Builds a word from bits given most-significant first.
    pub fn from_msb_bits(bits: impl IntoIterator<Item = bool>, width: u32) -> Self {
        let mut w = Self::zero(width);
        let mut n = 0u32;
        for b in bits {
            assert!(n < width, "too many bits for a {width}-bit word");
            if b {
                let pos = width - 1 - n;
                w.limbs[(pos / 64) as usize] |= 1 << (pos % 64);
            }
            n += 1;
        }
        assert_eq!(n, width, "bit count does not match word width");
        w
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn bit(&self, pos: u32) -> bool {
        self.limbs[(pos / 64) as usize] >> (pos % 64) & 1 == 1
    }

    /// Bits most-significant first.
    pub fn msb_bits(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.width).rev().map(move |p| self.bit(p))
    }

    /// Low 128 bits.
    pub fn low_u128(&self) -> u128 {
        let hi = self.limbs.get(1).copied().unwrap_or(0) as u128;
        (hi << 64) | self.limbs[0] as u128
    }
}

pub(crate) fn mask128(width: u32) -> u128 {
    if width >= 128 {
        u128::MAX
    } else {
        (1u128 << width) - 1
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let digits = (self.width as usize).div_ceil(4).max(1);
        write!(f, "0x")?;
        for d in (0..digits).rev() {
            let mut nibble = 0u8;
            for b in 0..4 {
                let pos = (d * 4 + b) as u32;
                if pos < self.width && self.bit(pos) {
                    nibble |= 1 << b;
                }
            }
            write!(f, "{nibble:x}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}'{}", self.width, self)
    }
}

impl Serialize for Word {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}
