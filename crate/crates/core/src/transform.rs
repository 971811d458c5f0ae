//! The polar transform `u = x · G_N` with `G_N = F^{⊗n} B_N`, `F = [[1,0],[1,1]]`.
//!
//! Everything runs as a bit-reversal followed by `n` butterfly stages, so the
//! cost is `O(N log N)` additions in the block's field. Indices are 0-based.

use crate::error::{PolarError, Result};
use crate::gf::FieldSpec;

/// A length-`N` block of symbols over a source alphabet, `N` a power of two.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymbolBlock {
    field: FieldSpec,
    data: Vec<u8>,
}

impl SymbolBlock {
    pub fn new(field: FieldSpec, data: Vec<u8>) -> Result<Self> {
        log2_exact(data.len())?;
        for &s in &data {
            field.check(s)?;
        }
        Ok(Self { field, data })
    }

    pub fn binary(bits: Vec<u8>) -> Result<Self> {
        Self::new(FieldSpec::BINARY, bits)
    }

    pub fn zeros(field: FieldSpec, len: usize) -> Result<Self> {
        Self::new(field, vec![0; len])
    }

    pub fn field(&self) -> FieldSpec {
        self.field
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// `n` with `N = 2^n`.
    pub fn log_len(&self) -> u32 {
        self.data.len().trailing_zeros()
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<u8> {
        self.data
    }
}

/// `n` such that `len == 2^n`.
pub fn log2_exact(len: usize) -> Result<u32> {
    if len == 0 || !len.is_power_of_two() {
        return Err(PolarError::NotPowerOfTwo(len));
    }
    Ok(len.trailing_zeros())
}

/// Reverse the low `bits` bits of `i`.
#[inline]
pub fn bit_reverse_index(i: usize, bits: u32) -> usize {
    if bits == 0 {
        return 0;
    }
    i.reverse_bits() >> (usize::BITS - bits)
}

/// In-place `B_N`. Self-inverse.
pub fn bit_reverse_in_place<T>(data: &mut [T]) -> Result<()> {
    let bits = log2_exact(data.len())?;
    for i in 0..data.len() {
        let j = bit_reverse_index(i, bits);
        if i < j {
            data.swap(i, j);
        }
    }
    Ok(())
}

/// Output position `i` holds input position `bitrev(i)`.
pub fn bit_reverse_permute(b: &SymbolBlock) -> Result<SymbolBlock> {
    let mut data = b.data.clone();
    bit_reverse_in_place(&mut data)?;
    Ok(SymbolBlock {
        field: b.field,
        data,
    })
}

/// In-place `x ← x · G_N`. Returns the number of butterfly additions performed.
///
/// Symbols must already be in range for `field`.
pub fn forward_in_place(field: FieldSpec, data: &mut [u8]) -> Result<u64> {
    bit_reverse_in_place(data)?;
    let len = data.len();
    let mut ops = 0u64;
    let mut half = 1;
    while half < len {
        for start in (0..len).step_by(2 * half) {
            for j in start..start + half {
                data[j] = field.add_unchecked(data[j], data[j + half]);
                ops += 1;
            }
        }
        half *= 2;
    }
    Ok(ops)
}

/// In-place `u ← u · G_N^{-1}`: kernel inverse `[[1,0],[-1,1]]` stage by stage
/// in reverse order, then `B_N`.
pub fn inverse_in_place(field: FieldSpec, data: &mut [u8]) -> Result<u64> {
    let len = data.len();
    log2_exact(len)?;
    let mut ops = 0u64;
    let mut half = len / 2;
    while half >= 1 {
        for start in (0..len).step_by(2 * half) {
            for j in start..start + half {
                data[j] = field.sub_unchecked(data[j], data[j + half]);
                ops += 1;
            }
        }
        half /= 2;
    }
    bit_reverse_in_place(data)?;
    Ok(ops)
}

pub fn polar_forward(x: &SymbolBlock) -> Result<SymbolBlock> {
    let mut data = x.data.clone();
    forward_in_place(x.field, &mut data)?;
    Ok(SymbolBlock {
        field: x.field,
        data,
    })
}

pub fn polar_inverse(u: &SymbolBlock) -> Result<SymbolBlock> {
    let mut data = u.data.clone();
    inverse_in_place(u.field, &mut data)?;
    Ok(SymbolBlock {
        field: u.field,
        data,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn bin(v: &[u8]) -> SymbolBlock {
        SymbolBlock::binary(v.to_vec()).unwrap()
    }

    #[test]
    fn bit_reversal_examples() {
        let b = SymbolBlock::new(FieldSpec::prime(5).unwrap(), vec![1, 2]).unwrap();
        assert_eq!(bit_reverse_permute(&b).unwrap().as_slice(), &[1, 2]);
        let b = SymbolBlock::new(FieldSpec::prime(5).unwrap(), vec![1, 2, 3, 4]).unwrap();
        assert_eq!(bit_reverse_permute(&b).unwrap().as_slice(), &[1, 3, 2, 4]);
        let map: Vec<usize> = (0..8).map(|i| bit_reverse_index(i, 3)).collect();
        assert_eq!(map, vec![0, 4, 2, 6, 1, 5, 3, 7]);
        assert_eq!(bit_reverse_index(0, 0), 0);
    }

    #[test]
    fn forward_examples() {
        assert_eq!(polar_forward(&bin(&[1, 1])).unwrap().as_slice(), &[0, 1]);
        assert_eq!(
            polar_forward(&bin(&[1, 1, 0, 0])).unwrap().as_slice(),
            &[0, 0, 1, 0]
        );
        assert_eq!(
            polar_forward(&bin(&[0; 64])).unwrap().as_slice(),
            &[0u8; 64][..]
        );
        let t = FieldSpec::prime(3).unwrap();
        let x = SymbolBlock::new(t, vec![1, 2]).unwrap();
        assert_eq!(polar_forward(&x).unwrap().as_slice(), &[0, 2]);
    }

    #[test]
    fn inverse_examples() {
        assert_eq!(
            polar_inverse(&bin(&[0, 0, 1, 0])).unwrap().as_slice(),
            &[1, 1, 0, 0]
        );
        let t = FieldSpec::prime(3).unwrap();
        let u = SymbolBlock::new(t, vec![0, 2]).unwrap();
        assert_eq!(polar_inverse(&u).unwrap().as_slice(), &[1, 2]);
    }

    #[test]
    fn inverse_equals_forward_over_gf2() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let bits: Vec<u8> = (0..256).map(|_| rng.gen_range(0..2)).collect();
            let b = bin(&bits);
            assert_eq!(polar_forward(&b).unwrap(), polar_inverse(&b).unwrap());
        }
    }

    #[test]
    fn rejects_bad_lengths() {
        assert_eq!(
            SymbolBlock::binary(vec![0; 3]),
            Err(PolarError::NotPowerOfTwo(3))
        );
        assert!(SymbolBlock::binary(vec![]).is_err());
        assert!(SymbolBlock::binary(vec![0, 2]).is_err());
        let mut odd = vec![0u8; 6];
        assert!(forward_in_place(FieldSpec::BINARY, &mut odd).is_err());
        assert!(inverse_in_place(FieldSpec::BINARY, &mut odd).is_err());
        // N = 1 is the trivial transform.
        assert_eq!(polar_forward(&bin(&[1])).unwrap().as_slice(), &[1]);
    }

    #[test]
    fn op_count_is_half_n_log_n() {
        for n in 0..12u32 {
            let len = 1usize << n;
            let mut d = vec![0u8; len];
            let ops = forward_in_place(FieldSpec::BINARY, &mut d).unwrap();
            assert_eq!(ops, (len as u64 / 2) * n as u64);
        }
    }

    fn field_strategy() -> impl Strategy<Value = FieldSpec> {
        prop_oneof![
            Just(FieldSpec::BINARY),
            Just(FieldSpec::PrimeMod(3)),
            Just(FieldSpec::PrimeMod(5)),
            Just(FieldSpec::PrimeMod(7)),
            Just(FieldSpec::Gf4),
        ]
    }

    fn block_strategy() -> impl Strategy<Value = SymbolBlock> {
        (field_strategy(), 0u32..=12).prop_flat_map(|(f, n)| {
            proptest::collection::vec(0..f.size() as u8, 1usize << n)
                .prop_map(move |d| SymbolBlock::new(f, d).unwrap())
        })
    }

    proptest! {
        #[test]
        fn round_trip(x in block_strategy()) {
            let u = polar_forward(&x).unwrap();
            prop_assert_eq!(polar_inverse(&u).unwrap(), x);
        }

        #[test]
        fn gf2_involution(bits in (0u32..=10).prop_flat_map(|n| proptest::collection::vec(0u8..2, 1usize << n))) {
            let x = bin(&bits);
            let u = polar_forward(&x).unwrap();
            prop_assert_eq!(polar_forward(&u).unwrap(), x);
        }

        #[test]
        fn linearity((f, a, b) in (field_strategy(), 0u32..=9).prop_flat_map(|(f, n)| {
            let v = proptest::collection::vec(0..f.size() as u8, 1usize << n);
            (Just(f), v.clone(), v)
        })) {
            let sum: Vec<u8> = a.iter().zip(&b).map(|(&p, &q)| f.add_unchecked(p, q)).collect();
            let ta = polar_forward(&SymbolBlock::new(f, a).unwrap()).unwrap();
            let tb = polar_forward(&SymbolBlock::new(f, b).unwrap()).unwrap();
            let ts = polar_forward(&SymbolBlock::new(f, sum).unwrap()).unwrap();
            let expect: Vec<u8> = ta.as_slice().iter().zip(tb.as_slice()).map(|(&p, &q)| f.add_unchecked(p, q)).collect();
            prop_assert_eq!(ts.as_slice(), &expect[..]);
        }

        #[test]
        fn bit_reversal_is_involution(bits in (0u32..=10).prop_flat_map(|n| proptest::collection::vec(0u8..2, 1usize << n))) {
            let x = bin(&bits);
            let once = bit_reverse_permute(&x).unwrap();
            prop_assert_eq!(bit_reverse_permute(&once).unwrap(), x);
        }
    }
}
