//! Basis-key arithmetic shared by every engine.
//!
//! A basis key is the integer whose binary expansion names a computational
//! basis state. Qubit 0 is the most significant bit of an `n`-qubit key, so
//! qubit `q` lives at bit position `n - q - 1`. Every bit position used
//! elsewhere in the crate is computed through [`bit_position`].

use thiserror::Error;

/// Integer label of a computational basis state `|i⟩`.
pub type BasisKey = u64;

/// Index of a qubit in a register, counted from the most significant bit.
pub type QubitIndex = usize;

/// Widest register a 64-bit key can address.
pub const KEY_BITS: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BitError {
    #[error("gate span {first}..{end} exceeds register of {n} qubits")]
    SpanOutOfRange { first: usize, end: usize, n: usize },
}

/// `2^m - 1`, saturating to all ones at `m = 64`.
#[inline]
pub fn low_mask(m: usize) -> BasisKey {
    debug_assert!(m <= KEY_BITS);
    if m >= KEY_BITS {
        u64::MAX
    } else {
        (1u64 << m) - 1
    }
}

/// Keeps the `m` least significant bits of `key`.
#[inline]
pub fn select_low_bits(key: BasisKey, m: usize) -> BasisKey {
    key & low_mask(m)
}

/// Flips the bit at absolute position `pos` (0 = least significant).
#[inline]
pub fn flip_bit(key: BasisKey, pos: usize) -> BasisKey {
    debug_assert!(pos < KEY_BITS);
    key ^ (1u64 << pos)
}

/// Bitwise OR of three keys whose set bits do not overlap.
#[inline]
pub fn combine(x: BasisKey, y: BasisKey, z: BasisKey) -> BasisKey {
    x | y | z
}

/// Bit position of qubit `q` inside an `n`-qubit key.
#[inline]
pub fn bit_position(n: usize, q: QubitIndex) -> usize {
    debug_assert!(q < n && n <= KEY_BITS);
    n - q - 1
}

/// Single-bit mask selecting qubit `q` of an `n`-qubit key.
#[inline]
pub fn qubit_mask(n: usize, q: QubitIndex) -> BasisKey {
    1u64 << bit_position(n, q)
}

/// Value (0 or 1) of qubit `q` in `key`.
#[inline]
pub fn qubit_value(key: BasisKey, n: usize, q: QubitIndex) -> u8 {
    ((key >> bit_position(n, q)) & 1) as u8
}

/// Splits `key` around a `w`-qubit window starting at qubit `q`.
///
/// Returns `(x, y, z)`: `x` keeps the qubits left of the window in place,
/// `y` is the window shifted down to the low bits, and `z` keeps the qubits
/// right of the window in place. `combine(x, y << (n - q - w), z) == key`.
pub fn split_key(
    key: BasisKey,
    n: usize,
    q: QubitIndex,
    w: usize,
) -> Result<(BasisKey, BasisKey, BasisKey), BitError> {
    if q + w > n || n > KEY_BITS {
        return Err(BitError::SpanOutOfRange {
            first: q,
            end: q + w,
            n,
        });
    }
    Ok(split_unchecked(key, n - q - w, w, n))
}

/// `split_key` with the right-hand width `shift = n - q - w` precomputed.
#[inline]
pub(crate) fn split_unchecked(
    key: BasisKey,
    shift: usize,
    w: usize,
    n: usize,
) -> (BasisKey, BasisKey, BasisKey) {
    let z = select_low_bits(key, shift);
    let y = if shift >= KEY_BITS {
        0
    } else {
        select_low_bits(key >> shift, w)
    };
    let x = key & low_mask(n) & !low_mask(shift + w);
    (x, y, z)
}

/// Left shift that yields 0 instead of overflowing at the key width.
#[inline]
pub(crate) fn shl(value: BasisKey, by: usize) -> BasisKey {
    if by >= KEY_BITS {
        0
    } else {
        value << by
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn select_low_bits_examples() {
        assert_eq!(select_low_bits(22, 3), 6);
        assert_eq!(select_low_bits(12345, 0), 0);
        assert_eq!(select_low_bits(13, 64), 13);
    }

    #[test]
    fn flip_bit_examples() {
        assert_eq!(flip_bit(9, 2), 13);
        assert_eq!(flip_bit(0, 0), 1);
        assert_eq!(flip_bit(13, 2), 9);
    }

    #[test]
    fn combine_examples() {
        assert_eq!(combine(3, 5, 0), 7);
        assert_eq!(combine(0, 0, 0), 0);
        assert_eq!(combine(0b10000, 0b00110, 0b00001), 0b10111);
    }

    #[test]
    fn split_examples() {
        assert_eq!(split_key(0b10110, 5, 0, 3).unwrap(), (0, 0b101, 0b10));
        assert_eq!(split_key(0b10110, 5, 2, 2).unwrap(), (0b10000, 0b11, 0));
        assert_eq!(split_key(0b1011, 4, 0, 4).unwrap(), (0, 0b1011, 0));
        assert_eq!(split_key(u64::MAX, 64, 0, 64).unwrap(), (0, u64::MAX, 0));
    }

    #[test]
    fn split_rejects_overhanging_span() {
        assert_eq!(
            split_key(0, 3, 2, 2),
            Err(BitError::SpanOutOfRange { first: 2, end: 4, n: 3 })
        );
    }

    #[test]
    fn shift_identities() {
        assert_eq!((1u64 << 3) - 1, 7);
        assert_eq!(low_mask(3), 7);
        assert_eq!(7u64 << 2, 28);
        assert_eq!(7u64 >> 2, 1);
    }

    #[test]
    fn qubit_zero_is_msb() {
        assert_eq!(qubit_mask(3, 0), 0b100);
        assert_eq!(qubit_mask(3, 2), 0b001);
        assert_eq!(qubit_value(0b100, 3, 0), 1);
        assert_eq!(qubit_value(0b100, 3, 1), 0);
    }

    fn key_and_window() -> impl Strategy<Value = (u64, usize, usize, usize)> {
        (1usize..=64)
            .prop_flat_map(|n| (Just(n), 0..=n))
            .prop_flat_map(|(n, q)| (Just(n), Just(q), 0..=(n - q)))
            .prop_flat_map(|(n, q, w)| (any::<u64>().prop_map(move |k| k & low_mask(n)), Just(n), Just(q), Just(w)))
    }

    proptest! {
        #[test]
        fn split_then_combine_round_trips((key, n, q, w) in key_and_window()) {
            let (x, y, z) = split_key(key, n, q, w).unwrap();
            prop_assert_eq!(combine(x, shl(y, n - q - w), z), key);
            prop_assert!(y <= low_mask(w));
        }

        #[test]
        fn flip_is_an_involution(key in any::<u64>(), pos in 0usize..64) {
            prop_assert_eq!(flip_bit(flip_bit(key, pos), pos), key);
        }

        #[test]
        fn low_bits_stay_below_bound(key in any::<u64>(), m in 0usize..64) {
            prop_assert!(select_low_bits(key, m) < (1u64 << m));
        }
    }
}
