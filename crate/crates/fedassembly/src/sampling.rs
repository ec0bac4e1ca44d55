//! Sampling primitives shared by the rounding layer and the selection
//! algorithms.
//!
//! Populations are huge and never materialized, so every subset draw here
//! works on index ranges: a partial Fisher-Yates shuffle backed by a sparse
//! swap table gives the first `k` entries of a uniform permutation of
//! `0..size` in O(k) time and memory.

use crate::rational::Rational;
use num_bigint::{BigInt, BigUint};
use num_traits::{Signed, ToPrimitive, Zero};
use rand::Rng;
use std::collections::HashMap;

/// Uniform integer in `[0, bound)` for an arbitrary-precision bound.
///
/// Rejection sampling on the bit length keeps the draw exactly uniform.
pub fn sample_below<R: Rng + ?Sized>(bound: &BigUint, rng: &mut R) -> BigUint {
    assert!(!bound.is_zero(), "sample_below requires a positive bound");
    if let Some(b) = bound.to_u64() {
        return BigUint::from(rng.random_range(0..b));
    }
    let bits = bound.bits();
    let bytes = bits.div_ceil(8) as usize;
    let shift = (bytes as u64) * 8 - bits;
    loop {
        let mut buf = vec![0u8; bytes];
        rng.fill_bytes(&mut buf);
        let mut candidate = BigUint::from_bytes_be(&buf);
        candidate >>= shift as usize;
        if &candidate < bound {
            return candidate;
        }
    }
}

/// Exact Bernoulli draw: returns true with probability `p` (clamped to [0,1]).
///
/// The comparison happens in integer arithmetic over `p`'s denominator, so no
/// precision is lost no matter how fine the probability.
pub fn bernoulli_exact<R: Rng + ?Sized>(p: &Rational, rng: &mut R) -> bool {
    if p.is_negative() || p.is_zero() {
        return false;
    }
    if p >= &Rational::from_integer(BigInt::from(1)) {
        return true;
    }
    if let (Some(numer), Some(denom)) = (p.numer().to_u64(), p.denom().to_u64()) {
        return rng.random_range(0..denom) < numer;
    }
    let numer = p.numer().to_biguint().expect("positive numerator");
    let denom = p.denom().to_biguint().expect("positive denominator");
    sample_below(&denom, rng) < numer
}

/// First `count` entries of a uniform permutation of `0..size`.
///
/// Partial Fisher-Yates; small ranges shuffle a dense index vector, huge
/// ranges fall back to a sparse swap map so `size` may be enormous as long
/// as `count` is small.
pub fn permutation_prefix<R: Rng + ?Sized>(size: u64, count: u64, rng: &mut R) -> Vec<u64> {
    assert!(count <= size, "prefix longer than the permutation");
    if count == 0 {
        return Vec::new();
    }
    if size <= 4 * count + 64 {
        let mut items: Vec<u64> = (0..size).collect();
        for i in 0..count {
            let j = rng.random_range(i..size);
            items.swap(i as usize, j as usize);
        }
        items.truncate(count as usize);
        return items;
    }
    let mut swaps: HashMap<u64, u64> = HashMap::new();
    let mut out = Vec::with_capacity(count as usize);
    for i in 0..count {
        let j = rng.random_range(i..size);
        let vi = swaps.get(&i).copied().unwrap_or(i);
        let vj = swaps.get(&j).copied().unwrap_or(j);
        out.push(vj);
        swaps.insert(j, vi);
    }
    out
}

/// Uniform `count`-subset of `0..size`, in draw order.
pub fn uniform_subset<R: Rng + ?Sized>(size: u64, count: u64, rng: &mut R) -> Vec<u64> {
    permutation_prefix(size, count, rng)
}

/// Uniform `count`-subset of `0..size` minus the `excluded` indices.
///
/// Draws over the virtual complement (size - excluded) and maps each draw
/// back by skipping excluded positions, so the result is exactly uniform.
pub fn uniform_subset_excluding<R: Rng + ?Sized>(
    size: u64,
    excluded: &[u64],
    count: u64,
    rng: &mut R,
) -> Vec<u64> {
    let mut sorted = excluded.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let available = size - sorted.len() as u64;
    assert!(count <= available, "subset larger than the complement");
    permutation_prefix(available, count, rng)
        .into_iter()
        .map(|virtual_idx| {
            let mut actual = virtual_idx;
            for &e in &sorted {
                if e <= actual {
                    actual += 1;
                } else {
                    break;
                }
            }
            actual
        })
        .collect()
}

/// Uniform `count`-subset of an explicit slice.
pub fn uniform_subset_of<T: Clone, R: Rng + ?Sized>(
    items: &[T],
    count: u64,
    rng: &mut R,
) -> Vec<T> {
    let size = items.len() as u64;
    assert!(count <= size, "subset larger than the slice");
    // partial Fisher-Yates over a dense index scratch
    let mut indices: Vec<u32> = (0..size as u32).collect();
    let mut out = Vec::with_capacity(count as usize);
    for i in 0..count {
        let j = rng.random_range(i..size);
        indices.swap(i as usize, j as usize);
        out.push(items[indices[i as usize] as usize].clone());
    }
    out
}
