//! Additive arithmetic over the source alphabet.
//!
//! Only addition and negation are needed: every entry of the polar transform
//! matrix is 0 or 1, so neither direction of the transform multiplies symbols.

use crate::error::{PolarError, Result};
use serde::{Deserialize, Serialize};

/// Alphabet of the compressed part of a source.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FieldSpec {
    /// Integers modulo a prime `q`.
    PrimeMod(u8),
    /// GF(4) with addition as XOR on 2-bit vectors.
    Gf4,
}

impl FieldSpec {
    pub const BINARY: FieldSpec = FieldSpec::PrimeMod(2);

    /// Field for an alphabet of size `q`: a prime, or 4 for GF(4).
    pub fn from_size(q: u32) -> Result<Self> {
        if q == 4 {
            return Ok(FieldSpec::Gf4);
        }
        Self::prime(q)
    }

    pub fn prime(q: u32) -> Result<Self> {
        if q > u8::MAX as u32 || !is_prime(q) {
            return Err(PolarError::InvalidAlphabet(q));
        }
        Ok(FieldSpec::PrimeMod(q as u8))
    }

    #[inline]
    pub fn size(&self) -> u32 {
        match *self {
            FieldSpec::PrimeMod(q) => q as u32,
            FieldSpec::Gf4 => 4,
        }
    }

    #[inline]
    pub fn is_binary(&self) -> bool {
        *self == FieldSpec::BINARY
    }

    /// Characteristic-2 alphabets, where negation is the identity.
    #[inline]
    pub fn is_char2(&self) -> bool {
        matches!(self, FieldSpec::PrimeMod(2) | FieldSpec::Gf4)
    }

    pub fn check(&self, a: u8) -> Result<()> {
        if (a as u32) < self.size() {
            Ok(())
        } else {
            Err(PolarError::SymbolOutOfRange {
                symbol: a as u32,
                q: self.size(),
            })
        }
    }

    pub fn add(&self, a: u8, b: u8) -> Result<u8> {
        self.check(a)?;
        self.check(b)?;
        Ok(self.add_unchecked(a, b))
    }

    pub fn neg(&self, a: u8) -> Result<u8> {
        self.check(a)?;
        Ok(self.neg_unchecked(a))
    }

    /// Addition for symbols already known to be in range.
    #[inline]
    pub fn add_unchecked(&self, a: u8, b: u8) -> u8 {
        match *self {
            FieldSpec::PrimeMod(2) | FieldSpec::Gf4 => a ^ b,
            FieldSpec::PrimeMod(q) => {
                let s = a as u16 + b as u16;
                if s >= q as u16 {
                    (s - q as u16) as u8
                } else {
                    s as u8
                }
            }
        }
    }

    #[inline]
    pub fn neg_unchecked(&self, a: u8) -> u8 {
        match *self {
            FieldSpec::PrimeMod(2) | FieldSpec::Gf4 => a,
            FieldSpec::PrimeMod(q) => {
                if a == 0 {
                    0
                } else {
                    q - a
                }
            }
        }
    }

    #[inline]
    pub fn sub_unchecked(&self, a: u8, b: u8) -> u8 {
        self.add_unchecked(a, self.neg_unchecked(b))
    }
}

/// Deterministic trial-division primality test; alphabets are tiny.
pub fn is_prime(n: u32) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u32;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}
