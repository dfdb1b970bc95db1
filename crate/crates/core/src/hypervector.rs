//! Bit-packed binary hypervectors and the operations of binary HD algebra.
//!
//! Bits are stored little-endian in `u64` words: bit `i` lives in word
//! `i / 64` at position `i % 64`. Bits past `dim` in the last word are always
//! zero, so popcount-based distances never need masking.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_dims, Error, Result};

const WORD_BITS: usize = 64;

/// Deterministic random stream for `(seed, stream)`.
///
/// Every random draw in the crate goes through this so that independent
/// consumers of one experiment seed never share a stream.
pub fn seeded_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[inline]
fn words_for(dim: usize) -> usize {
    dim.div_ceil(WORD_BITS)
}

#[inline]
fn tail_mask(dim: usize) -> u64 {
    match dim % WORD_BITS {
        0 => u64::MAX,
        r => (1u64 << r) - 1,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Hypervector {
    dim: usize,
    words: Vec<u64>,
}

impl Hypervector {
    pub fn zeros(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidDimension(dim));
        }
        Ok(Self {
            dim,
            words: vec![0; words_for(dim)],
        })
    }

    pub fn ones(dim: usize) -> Result<Self> {
        Ok(Self::zeros(dim)?.complement())
    }

    /// Uniformly random vector: each bit is an independent fair coin.
    pub fn random(dim: usize, seed: u64) -> Result<Self> {
        Self::random_from(dim, &mut seeded_rng(seed, 0))
    }

    pub fn random_from<R: RngCore + ?Sized>(dim: usize, rng: &mut R) -> Result<Self> {
        let mut hv = Self::zeros(dim)?;
        for w in hv.words.iter_mut() {
            *w = rng.next_u64();
        }
        hv.clear_tail();
        Ok(hv)
    }

    pub fn from_bits(bits: &[bool]) -> Result<Self> {
        let mut hv = Self::zeros(bits.len())?;
        for (i, &b) in bits.iter().enumerate() {
            hv.set(i, b);
        }
        Ok(hv)
    }

    /// Builds a vector from packed words. Bits past `dim` are cleared.
    pub fn from_words(dim: usize, mut words: Vec<u64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidDimension(dim));
        }
        check_dims(words_for(dim), words.len())?;
        if let Some(last) = words.last_mut() {
            *last &= tail_mask(dim);
        }
        Ok(Self { dim, words })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn words(&self) -> &[u64] {
        &self.words
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.dim, "bit index {i} out of range for dim {}", self.dim);
        (self.words[i / WORD_BITS] >> (i % WORD_BITS)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        assert!(i < self.dim, "bit index {i} out of range for dim {}", self.dim);
        let mask = 1u64 << (i % WORD_BITS);
        let w = &mut self.words[i / WORD_BITS];
        if value {
            *w |= mask;
        } else {
            *w &= !mask;
        }
    }

    #[inline]
    pub fn flip(&mut self, i: usize) {
        assert!(i < self.dim, "bit index {i} out of range for dim {}", self.dim);
        self.words[i / WORD_BITS] ^= 1u64 << (i % WORD_BITS);
    }

    pub fn iter_bits(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.dim).map(move |i| self.get(i))
    }

    pub fn popcount(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn complement(&self) -> Self {
        let mut out = self.clone();
        for w in out.words.iter_mut() {
            *w = !*w;
        }
        out.clear_tail();
        out
    }

    /// XOR binding. Self-inverse: `a.bind(b).bind(b) == a`.
    pub fn bind(&self, other: &Self) -> Result<Self> {
        check_dims(self.dim, other.dim)?;
        let words = self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| a ^ b)
            .collect();
        Ok(Self {
            dim: self.dim,
            words,
        })
    }

    pub fn bind_assign(&mut self, other: &Self) -> Result<()> {
        check_dims(self.dim, other.dim)?;
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
        Ok(())
    }

    pub fn hamming(&self, other: &Self) -> Result<usize> {
        check_dims(self.dim, other.dim)?;
        Ok(self.hamming_unchecked(other))
    }

    #[inline]
    pub(crate) fn hamming_unchecked(&self, other: &Self) -> usize {
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a ^ b).count_ones() as usize)
            .sum()
    }

    /// Normalized Hamming similarity `1 - hamming / dim`, in `[0, 1]`.
    pub fn similarity(&self, other: &Self) -> Result<f64> {
        let h = self.hamming(other)?;
        Ok(1.0 - h as f64 / self.dim as f64)
    }

    fn clear_tail(&mut self) {
        let mask = tail_mask(self.dim);
        if let Some(last) = self.words.last_mut() {
            *last &= mask;
        }
    }
}

pub fn random_hv(dim: usize, seed: u64) -> Result<Hypervector> {
    Hypervector::random(dim, seed)
}

pub fn bind(a: &Hypervector, b: &Hypervector) -> Result<Hypervector> {
    a.bind(b)
}

pub fn similarity(a: &Hypervector, b: &Hypervector) -> Result<f64> {
    a.similarity(b)
}

/// Non-negative fixed-point weight with [`Weight::SCALE`] units per 1.0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
pub struct Weight(u32);

impl Weight {
    pub const SCALE: u32 = 1000;
    pub const ZERO: Weight = Weight(0);
    pub const ONE: Weight = Weight(Self::SCALE);

    pub const fn from_raw(raw: u32) -> Self {
        Weight(raw)
    }

    pub const fn raw(self) -> u32 {
        self.0
    }

    /// `numerator / denominator`, rounded half-up to the fixed-point grid.
    pub fn from_ratio(numerator: u64, denominator: u64) -> Result<Self> {
        if denominator == 0 {
            return Err(Error::InvalidParameter("weight denominator must be positive"));
        }
        let scaled = (numerator * Self::SCALE as u64 + denominator / 2) / denominator;
        u32::try_from(scaled)
            .map(Weight)
            .map_err(|_| Error::InvalidParameter("weight out of range"))
    }

    pub fn from_f64(value: f64) -> Result<Self> {
        if !value.is_finite() || value < 0.0 {
            return Err(Error::InvalidParameter("weight must be finite and non-negative"));
        }
        let scaled = libm::round(value * Self::SCALE as f64);
        if scaled > u32::MAX as f64 {
            return Err(Error::InvalidParameter("weight out of range"));
        }
        Ok(Weight(scaled as u32))
    }

    pub fn as_f64(self) -> f64 {
        self.0 as f64 / Self::SCALE as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sign {
    Add,
    Subtract,
}

impl Sign {
    #[inline]
    fn apply(self, w: Weight) -> i64 {
        match self {
            Sign::Add => w.0 as i64,
            Sign::Subtract => -(w.0 as i64),
        }
    }
}

/// Per-bit signed fixed-point counters of an un-normalized bundle.
///
/// Bit 1 contributes `+weight` and bit 0 contributes `-weight` to its
/// counter. Counters are 32-bit; the accumulator tracks an upper bound on
/// `max |counts[i]|` and refuses updates that could overflow.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Accumulator {
    dim: usize,
    counts: Vec<i32>,
    n_added: i64,
    magnitude_bound: i64,
}

impl Accumulator {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidDimension(dim));
        }
        Ok(Self {
            dim,
            counts: vec![0; dim],
            n_added: 0,
            magnitude_bound: 0,
        })
    }

    /// Rebuilds an accumulator from raw parts (used by the codec).
    pub fn from_parts(counts: Vec<i32>, n_added: i64) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::InvalidDimension(0));
        }
        let magnitude_bound = counts
            .iter()
            .map(|c| (*c as i64).abs())
            .max()
            .unwrap_or(0);
        Ok(Self {
            dim: counts.len(),
            counts,
            n_added,
            magnitude_bound,
        })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn counts(&self) -> &[i32] {
        &self.counts
    }

    /// Signed total of all applied weights, in fixed-point units.
    #[inline]
    pub fn n_added(&self) -> i64 {
        self.n_added
    }

    pub fn reset(&mut self) {
        self.counts.iter_mut().for_each(|c| *c = 0);
        self.n_added = 0;
        self.magnitude_bound = 0;
    }

    /// No weight has ever survived in this accumulator.
    pub fn is_empty(&self) -> bool {
        self.n_added == 0 && self.counts.iter().all(|&c| c == 0)
    }

    pub fn accumulate(&mut self, v: &Hypervector, weight: Weight, sign: Sign) -> Result<()> {
        check_dims(self.dim, v.dim)?;
        self.add_words(v.words.iter().copied(), weight, sign)
    }

    /// Accumulates the XOR binding of `factors` without materializing it.
    pub fn accumulate_bound(&mut self, factors: &[&Hypervector], weight: Weight, sign: Sign) -> Result<()> {
        let (first, rest) = factors
            .split_first()
            .ok_or(Error::InvalidParameter("accumulate_bound needs at least one factor"))?;
        check_dims(self.dim, first.dim)?;
        for f in rest {
            check_dims(self.dim, f.dim)?;
        }
        let words = (0..first.words.len()).map(|k| {
            rest.iter().fold(first.words[k], |acc, f| acc ^ f.words[k])
        });
        self.add_words(words, weight, sign)
    }

    fn add_words(&mut self, words: impl Iterator<Item = u64>, weight: Weight, sign: Sign) -> Result<()> {
        let delta = sign.apply(weight);
        let bound = self.magnitude_bound + delta.abs();
        if bound > i32::MAX as i64 {
            return Err(Error::CounterOverflow);
        }
        self.magnitude_bound = bound;
        self.n_added += delta;
        if delta == 0 {
            return Ok(());
        }
        let delta = delta as i32;
        for (chunk, word) in self.counts.chunks_mut(WORD_BITS).zip(words) {
            for (j, c) in chunk.iter_mut().enumerate() {
                let bit = ((word >> j) & 1) as i32;
                *c += (2 * bit - 1) * delta;
            }
        }
        Ok(())
    }

    /// Adds another accumulator's counters into this one.
    pub fn merge(&mut self, other: &Accumulator) -> Result<()> {
        check_dims(self.dim, other.dim)?;
        let bound = self.magnitude_bound + other.magnitude_bound;
        if bound > i32::MAX as i64 {
            return Err(Error::CounterOverflow);
        }
        self.magnitude_bound = bound;
        self.n_added += other.n_added;
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += *b;
        }
        Ok(())
    }

    /// Majority vote: positive counters give 1, negative give 0 and zero
    /// counters take the corresponding bit of `tie_break`.
    pub fn binarize(&self, tie_break: &Hypervector) -> Result<Hypervector> {
        check_dims(self.dim, tie_break.dim)?;
        if self.is_empty() {
            return Err(Error::EmptyAccumulator);
        }
        let words = self
            .counts
            .chunks(WORD_BITS)
            .zip(&tie_break.words)
            .map(|(chunk, &tie)| {
                chunk.iter().enumerate().fold(0u64, |acc, (j, &c)| {
                    let bit = (c > 0) as u64 | ((c == 0) as u64 & (tie >> j) & 1);
                    acc | (bit << j)
                })
            })
            .collect();
        Ok(Hypervector {
            dim: self.dim,
            words,
        })
    }
}

/// Unit-weight majority of XOR-bound terms: the same result as accumulating
/// every term with weight one and binarizing, computed with bit-sliced
/// counters instead of one counter per bit.
pub fn bundle_bound(terms: &[&[&Hypervector]], tie_break: &Hypervector) -> Result<Hypervector> {
    let n = terms.len();
    if n == 0 {
        return Err(Error::EmptyAccumulator);
    }
    let dim = tie_break.dim;
    for t in terms {
        if t.is_empty() {
            return Err(Error::InvalidParameter("bundle_bound needs at least one factor per term"));
        }
        for f in t.iter() {
            check_dims(dim, f.dim)?;
        }
    }
    // counts reach n, so planes for every bit of n
    let n_planes = (usize::BITS - n.leading_zeros()) as usize;
    let half = n / 2;
    let even = n % 2 == 0;
    let mut planes = vec![0u64; n_planes];
    let words = (0..tie_break.words.len())
        .map(|k| {
            planes.iter_mut().for_each(|p| *p = 0);
            for t in terms {
                let mut carry = t.iter().fold(0u64, |acc, f| acc ^ f.words[k]);
                for p in planes.iter_mut() {
                    let sum = *p ^ carry;
                    carry &= *p;
                    *p = sum;
                    if carry == 0 {
                        break;
                    }
                }
            }
            // bitwise comparison of the counts against n / 2, high plane first
            let mut gt = 0u64;
            let mut eq = !0u64;
            for (b, &p) in planes.iter().enumerate().rev() {
                let t = if (half >> b) & 1 == 1 { !0u64 } else { 0 };
                gt |= eq & p & !t;
                eq &= !(p ^ t);
            }
            if even {
                gt | (eq & tie_break.words[k])
            } else {
                gt
            }
        })
        .collect();
    Ok(Hypervector { dim, words })
}

pub fn accumulate(acc: &mut Accumulator, v: &Hypervector, weight: Weight, sign: Sign) -> Result<()> {
    acc.accumulate(v, weight, sign)
}

pub fn binarize(acc: &Accumulator, tie_break: &Hypervector) -> Result<Hypervector> {
    acc.binarize(tie_break)
}

/// Ordered hypervectors for quantized scalar levels.
///
/// Level 0 is random; level `k` flips `k` fixed disjoint blocks of
/// `dim / (2 * (num_levels - 1))` randomly chosen positions, so distances
/// to level 0 grow linearly with `k` up to about `dim / 2`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LevelTable {
    levels: Vec<Hypervector>,
}

impl LevelTable {
    pub fn build(dim: usize, num_levels: usize, seed: u64) -> Result<Self> {
        Self::build_from(dim, num_levels, &mut seeded_rng(seed, 0))
    }

    pub fn build_from<R: RngCore + ?Sized>(dim: usize, num_levels: usize, rng: &mut R) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidDimension(dim));
        }
        if num_levels < 2 {
            return Err(Error::InvalidLevels(num_levels));
        }
        let block = Self::block_len(dim, num_levels);
        if block == 0 {
            return Err(Error::LevelTableTooSmall { dim, num_levels });
        }
        let base = Hypervector::random_from(dim, rng)?;
        let mut positions: Vec<usize> = (0..dim).collect();
        positions.shuffle(rng);

        let mut levels = Vec::with_capacity(num_levels);
        levels.push(base);
        for k in 1..num_levels {
            let mut next = levels[k - 1].clone();
            for &p in &positions[(k - 1) * block..k * block] {
                next.flip(p);
            }
            levels.push(next);
        }
        Ok(Self { levels })
    }

    pub fn from_levels(levels: Vec<Hypervector>) -> Result<Self> {
        if levels.len() < 2 {
            return Err(Error::InvalidLevels(levels.len()));
        }
        let dim = levels[0].dim();
        for l in &levels {
            check_dims(dim, l.dim())?;
        }
        Ok(Self { levels })
    }

    /// Number of bits flipped between adjacent levels.
    pub fn block_len(dim: usize, num_levels: usize) -> usize {
        dim / (2 * (num_levels - 1))
    }

    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn dim(&self) -> usize {
        self.levels[0].dim()
    }

    pub fn level(&self, k: usize) -> &Hypervector {
        &self.levels[k]
    }

    pub fn levels(&self) -> &[Hypervector] {
        &self.levels
    }
}

pub fn build_level_table(dim: usize, num_levels: usize, seed: u64) -> Result<LevelTable> {
    LevelTable::build(dim, num_levels, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hv(bits: &str) -> Hypervector {
        let bits: Vec<bool> = bits.chars().map(|c| c == '1').collect();
        Hypervector::from_bits(&bits).unwrap()
    }

    #[test]
    fn random_is_deterministic_per_seed() {
        assert_eq!(random_hv(10_000, 7).unwrap(), random_hv(10_000, 7).unwrap());
        assert_ne!(random_hv(10_000, 7).unwrap(), random_hv(10_000, 8).unwrap());
    }

    #[test]
    fn random_rejects_zero_dim() {
        assert_eq!(random_hv(0, 1), Err(Error::InvalidDimension(0)));
    }

    #[test]
    fn random_dim_one_has_single_bit() {
        let v = random_hv(1, 3).unwrap();
        assert_eq!(v.dim(), 1);
        assert!(v.popcount() <= 1);
        assert_eq!(v.words().len(), 1);
        assert_eq!(v.words()[0] >> 1, 0);
    }

    #[test]
    fn distinct_seeds_are_quasi_orthogonal() {
        // sd of the normalized distance at dim 10000 is 0.005, so +-0.02 is a
        // 4-sigma band.
        for trial in 0..1000u64 {
            let a = random_hv(10_000, 2 * trial).unwrap();
            let b = random_hv(10_000, 2 * trial + 1).unwrap();
            let d = 1.0 - a.similarity(&b).unwrap();
            assert!((d - 0.5).abs() <= 0.02, "trial {trial}: distance {d}");
        }
    }

    #[test]
    fn bind_identities() {
        let a = random_hv(10_000, 1).unwrap();
        let zeros = Hypervector::zeros(10_000).unwrap();
        assert_eq!(a.bind(&a).unwrap(), zeros);
        assert_eq!(a.bind(&zeros).unwrap(), a);
    }

    #[test]
    fn bound_vector_is_dissimilar_to_operands() {
        for seed in 0..100u64 {
            let a = random_hv(10_000, seed).unwrap();
            let b = random_hv(10_000, seed + 1000).unwrap();
            let s = a.bind(&b).unwrap().similarity(&a).unwrap();
            assert!((s - 0.5).abs() <= 0.02, "seed {seed}: {s}");
        }
    }

    #[test]
    fn bind_rejects_mismatched_dims() {
        let a = random_hv(64, 1).unwrap();
        let b = random_hv(65, 1).unwrap();
        assert_eq!(a.bind(&b), Err(Error::DimensionMismatch { left: 64, right: 65 }));
    }

    #[test]
    fn similarity_hand_count() {
        let a = hv("10110010");
        let b = hv("10010011");
        assert_eq!(a.similarity(&b).unwrap(), 0.75);
        assert_eq!(a.similarity(&a).unwrap(), 1.0);
        assert_eq!(a.similarity(&a.complement()).unwrap(), 0.0);
    }

    #[test]
    fn complement_keeps_tail_clear() {
        let a = Hypervector::zeros(70).unwrap().complement();
        assert_eq!(a.popcount(), 70);
    }

    #[test]
    fn single_vector_bundle_is_identity() {
        let v = random_hv(1000, 5).unwrap();
        let tie = random_hv(1000, 6).unwrap();
        let mut acc = Accumulator::new(1000).unwrap();
        acc.accumulate(&v, Weight::ONE, Sign::Add).unwrap();
        assert_eq!(acc.binarize(&tie).unwrap(), v);
    }

    #[test]
    fn add_then_subtract_cancels() {
        let v = random_hv(1000, 5).unwrap();
        let mut acc = Accumulator::new(1000).unwrap();
        acc.accumulate(&v, Weight::from_raw(417), Sign::Add).unwrap();
        acc.accumulate(&v, Weight::from_raw(417), Sign::Subtract).unwrap();
        assert!(acc.counts().iter().all(|&c| c == 0));
        assert_eq!(acc.n_added(), 0);
        assert_eq!(acc.binarize(&v), Err(Error::EmptyAccumulator));
    }

    #[test]
    fn empty_accumulator_cannot_binarize() {
        let acc = Accumulator::new(8).unwrap();
        assert_eq!(acc.binarize(&hv("00000000")), Err(Error::EmptyAccumulator));
    }

    #[test]
    fn binarize_tie_rule() {
        let acc = Accumulator::from_parts(vec![3, -1, 0], 1).unwrap();
        assert_eq!(acc.binarize(&hv("001")).unwrap(), hv("101"));
        assert_eq!(acc.binarize(&hv("110")).unwrap(), hv("100"));
    }

    #[test]
    fn three_vector_bundle_matches_bitwise_majority() {
        for seed in 0..200u64 {
            let vs: Vec<_> = (0..3).map(|k| random_hv(64, seed * 3 + k).unwrap()).collect();
            let mut acc = Accumulator::new(64).unwrap();
            for v in &vs {
                acc.accumulate(v, Weight::ONE, Sign::Add).unwrap();
            }
            let tie = Hypervector::zeros(64).unwrap();
            let got = acc.binarize(&tie).unwrap();
            for i in 0..64 {
                let ones = vs.iter().filter(|v| v.get(i)).count();
                assert_eq!(got.get(i), ones >= 2);
            }
        }
    }

    #[test]
    fn bundle_is_closer_to_constituents_than_to_random() {
        let tie = random_hv(10_000, 999_999).unwrap();
        let mut ok = 0;
        for trial in 0..100u64 {
            let vs: Vec<_> = (0..5).map(|k| random_hv(10_000, trial * 10 + k).unwrap()).collect();
            let fresh = random_hv(10_000, 1_000_000 + trial).unwrap();
            let mut acc = Accumulator::new(10_000).unwrap();
            for v in &vs {
                acc.accumulate(v, Weight::ONE, Sign::Add).unwrap();
            }
            let b = acc.binarize(&tie).unwrap();
            let s_fresh = b.similarity(&fresh).unwrap();
            if vs.iter().all(|v| b.similarity(v).unwrap() > s_fresh) {
                ok += 1;
            }
        }
        assert!(ok >= 99, "{ok}/100");
    }

    #[test]
    fn overflow_is_refused() {
        let v = random_hv(8, 1).unwrap();
        let mut acc = Accumulator::new(8).unwrap();
        let big = Weight::from_raw(i32::MAX as u32);
        acc.accumulate(&v, big, Sign::Add).unwrap();
        assert_eq!(acc.accumulate(&v, Weight::from_raw(1), Sign::Add), Err(Error::CounterOverflow));
    }

    #[test]
    fn weight_rounding() {
        assert_eq!(Weight::from_ratio(1, 3).unwrap().raw(), 333);
        assert_eq!(Weight::from_ratio(2, 3).unwrap().raw(), 667);
        assert_eq!(Weight::from_f64(0.25).unwrap().raw(), 250);
        assert!(Weight::from_f64(-1.0).is_err());
    }

    #[test]
    fn two_level_table_endpoints_are_half_apart() {
        let t = build_level_table(1000, 2, 3).unwrap();
        assert_eq!(t.level(0).hamming(t.level(1)).unwrap(), 500);
    }

    #[test]
    fn level_distances_grow_linearly() {
        let t = build_level_table(10_000, 20, 11).unwrap();
        let block = LevelTable::block_len(10_000, 20);
        assert_eq!(block, 263);
        for k in 0..20 {
            assert_eq!(t.level(0).hamming(t.level(k)).unwrap(), k * block);
        }
        for k in 1..20 {
            let s = t.level(k - 1).similarity(t.level(k)).unwrap();
            assert!((s - (1.0 - block as f64 / 10_000.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn level_table_errors() {
        assert_eq!(build_level_table(100, 1, 0), Err(Error::InvalidLevels(1)));
        assert_eq!(
            build_level_table(10, 20, 0),
            Err(Error::LevelTableTooSmall { dim: 10, num_levels: 20 })
        );
    }

    #[test]
    fn bundle_bound_errors() {
        let t = random_hv(64, 0).unwrap();
        let a = random_hv(64, 1).unwrap();
        let b = random_hv(65, 2).unwrap();
        assert_eq!(bundle_bound(&[], &t), Err(Error::EmptyAccumulator));
        assert!(bundle_bound(&[&[]], &t).is_err());
        assert!(bundle_bound(&[&[&a, &b]], &t).is_err());
        assert!(bundle_bound(&[&[&b]], &t).is_err());
    }

    proptest::proptest! {
        #[test]
        fn bundle_bound_matches_accumulator(
            dim in 1usize..300,
            n in 1usize..40,
            k in 1usize..4,
            seed in 0u64..1_000_000,
        ) {
            let tie = random_hv(dim, seed ^ 0xABCD).unwrap();
            let vs: Vec<Vec<Hypervector>> = (0..n)
                .map(|i| (0..k).map(|j| random_hv(dim, seed * 131 + (i * 4 + j) as u64).unwrap()).collect())
                .collect();
            let refs: Vec<Vec<&Hypervector>> = vs.iter().map(|t| t.iter().collect()).collect();
            let terms: Vec<&[&Hypervector]> = refs.iter().map(|t| t.as_slice()).collect();
            let mut acc = Accumulator::new(dim).unwrap();
            for t in &refs {
                acc.accumulate_bound(t, Weight::ONE, Sign::Add).unwrap();
            }
            proptest::prop_assert_eq!(bundle_bound(&terms, &tie).unwrap(), acc.binarize(&tie).unwrap());
        }
    }
}
