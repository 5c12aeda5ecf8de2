//! Arbitrary-precision naturals and the bit-interleaving ("mingle") pairing
//! function used to pack constructor payloads.
//!
//! `mingle(a, b)` places the bits of `b` at the even positions of the result
//! and the bits of `a` at the odd positions, so `mingle(1, 0) = 2` and
//! `mingle(0, 1) = 1`. The map is a bijection `ℕ × ℕ → ℕ`; [`unmingle`] is
//! its inverse.

use num_bigint::BigUint;
use num_traits::ToPrimitive;

/// An unbounded natural number. All codes, levels and counts use it.
pub type Nat = BigUint;

/// Spreads the 32 bits of `x` over the even bit positions of a `u64`.
fn spread(x: u32) -> u64 {
    let mut x = x as u64;
    x = (x | (x << 16)) & 0x0000_FFFF_0000_FFFF;
    x = (x | (x << 8)) & 0x00FF_00FF_00FF_00FF;
    x = (x | (x << 4)) & 0x0F0F_0F0F_0F0F_0F0F;
    x = (x | (x << 2)) & 0x3333_3333_3333_3333;
    x = (x | (x << 1)) & 0x5555_5555_5555_5555;
    x
}

/// Gathers the even bit positions of `x` into a `u32`.
fn compact(x: u64) -> u32 {
    let mut x = x & 0x5555_5555_5555_5555;
    x = (x | (x >> 1)) & 0x3333_3333_3333_3333;
    x = (x | (x >> 2)) & 0x0F0F_0F0F_0F0F_0F0F;
    x = (x | (x >> 4)) & 0x00FF_00FF_00FF_00FF;
    x = (x | (x >> 8)) & 0x0000_FFFF_0000_FFFF;
    x = (x | (x >> 16)) & 0x0000_0000_FFFF_FFFF;
    x as u32
}

/// Interleaves the bits of `a` (odd positions) and `b` (even positions).
pub fn mingle(a: &Nat, b: &Nat) -> Nat {
    if let (Some(x), Some(y)) = (a.to_u32(), b.to_u32()) {
        return Nat::from(spread(y) | (spread(x) << 1));
    }
    let a = a.to_u32_digits();
    let b = b.to_u32_digits();
    let len = a.len().max(b.len());
    let mut out = Vec::with_capacity(2 * len);
    for i in 0..len {
        let ai = a.get(i).copied().unwrap_or(0);
        let bi = b.get(i).copied().unwrap_or(0);
        let w = spread(bi) | (spread(ai) << 1);
        out.push(w as u32);
        out.push((w >> 32) as u32);
    }
    BigUint::new(out)
}

/// Splits `n` into the pair `(a, b)` with `mingle(a, b) = n`.
pub fn unmingle(n: &Nat) -> (Nat, Nat) {
    if let Some(w) = n.to_u64() {
        return (Nat::from(compact(w >> 1)), Nat::from(compact(w)));
    }
    let digits = n.to_u32_digits();
    let mut a = Vec::with_capacity(digits.len().div_ceil(2));
    let mut b = Vec::with_capacity(digits.len().div_ceil(2));
    for pair in digits.chunks(2) {
        let lo = pair[0] as u64;
        let hi = pair.get(1).copied().unwrap_or(0) as u64;
        let w = lo | (hi << 32);
        b.push(compact(w));
        a.push(compact(w >> 1));
    }
    (BigUint::new(a), BigUint::new(b))
}

/// Left fold of [`mingle`] over a non-empty sequence:
/// `fold([x]) = x`, `fold([x1..xk]) = mingle(fold([x1..x(k-1)]), xk)`.
///
/// Panics on an empty sequence.
pub fn mingle_fold(codes: &[Nat]) -> Nat {
    let (first, rest) = codes
        .split_first()
        .expect("mingle_fold needs at least one code");
    rest.iter().fold(first.clone(), |acc, x| mingle(&acc, x))
}

/// Inverse of [`mingle_fold`] for a fixed arity `k ≥ 1`.
///
/// Panics if `k == 0`.
pub fn unmingle_fold(n: &Nat, k: usize) -> Vec<Nat> {
    assert!(k >= 1, "unmingle_fold needs a positive arity");
    let mut out = vec![Nat::default(); k];
    let mut acc = n.clone();
    for slot in out[1..].iter_mut().rev() {
        let (rest, last) = unmingle(&acc);
        *slot = last;
        acc = rest;
    }
    out[0] = acc;
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn n(x: u64) -> Nat {
        Nat::from(x)
    }

    /// Reference interleaving, one bit at a time.
    fn mingle_bits(a: u64, b: u64) -> u128 {
        let mut r = 0u128;
        for k in 0..64 {
            r |= (((b >> k) & 1) as u128) << (2 * k);
            r |= (((a >> k) & 1) as u128) << (2 * k + 1);
        }
        r
    }

    #[test]
    fn table_entries() {
        assert_eq!(mingle(&n(2), &n(3)), n(13));
        assert_eq!(mingle(&n(0), &n(0)), n(0));
        assert_eq!(mingle(&n(3), &n(2)), n(14));
        assert_eq!(mingle(&n(0), &n(3)), n(5));
        assert_eq!(mingle(&n(1), &n(0)), n(2));
        assert_eq!(mingle(&n(0), &n(1)), n(1));
    }

    #[test]
    fn unmingle_examples() {
        assert_eq!(unmingle(&n(13)), (n(2), n(3)));
        assert_eq!(unmingle(&n(1)), (n(0), n(1)));
        assert_eq!(unmingle(&n(0)), (n(0), n(0)));
    }

    #[test]
    fn fold_examples() {
        assert_eq!(mingle_fold(&[n(7)]), n(7));
        assert_eq!(mingle_fold(&[n(2), n(3)]), n(13));
        assert_eq!(mingle_fold(&[n(0), n(0), n(1)]), n(1));
        assert_eq!(unmingle_fold(&n(13), 2), vec![n(2), n(3)]);
        assert_eq!(unmingle_fold(&n(7), 1), vec![n(7)]);
        assert_eq!(unmingle_fold(&n(1), 3), vec![n(0), n(0), n(1)]);
    }

    #[test]
    #[should_panic]
    fn fold_rejects_empty() {
        mingle_fold(&[]);
    }

    #[test]
    fn small_range_is_bijective() {
        // every n < 2^12 arises from exactly one pair of 6-bit operands
        let mut seen = vec![false; 1 << 12];
        for a in 0..64u64 {
            for b in 0..64u64 {
                let m = mingle(&n(a), &n(b));
                assert_eq!(m, Nat::from(mingle_bits(a, b)));
                let idx: usize = (&m).try_into().unwrap();
                assert!(!seen[idx]);
                seen[idx] = true;
                assert_eq!(unmingle(&m), (n(a), n(b)));
            }
        }
        assert!(seen.iter().all(|s| *s));
    }

    #[test]
    fn fold_round_trip_small() {
        for k in 1..=4 {
            for x in 0..512u64 {
                let parts = unmingle_fold(&n(x), k);
                assert_eq!(parts.len(), k);
                assert_eq!(mingle_fold(&parts), n(x));
            }
        }
    }

    proptest! {
        #[test]
        fn matches_bitwise_reference(a: u64, b: u64) {
            prop_assert_eq!(mingle(&n(a), &n(b)), Nat::from(mingle_bits(a, b)));
        }

        #[test]
        fn round_trip_wide(a in proptest::collection::vec(any::<u32>(), 0..6),
                           b in proptest::collection::vec(any::<u32>(), 0..6)) {
            let (a, b) = (BigUint::new(a), BigUint::new(b));
            let m = mingle(&a, &b);
            prop_assert_eq!(unmingle(&m), (a.clone(), b.clone()));
            prop_assert!(m >= a.clone().max(b.clone()));
            if m >= n(2) {
                prop_assert!(m > a && m > b);
            }
        }

        #[test]
        fn inverse_on_codes(x in proptest::collection::vec(any::<u32>(), 0..8)) {
            let x = BigUint::new(x);
            let (a, b) = unmingle(&x);
            prop_assert_eq!(mingle(&a, &b), x);
        }
    }
}
