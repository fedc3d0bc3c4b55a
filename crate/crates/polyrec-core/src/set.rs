//! Bit-packed finite subsets of `[1, N]`.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::poly::Polynomial;

/// Finite subset of `[1, N]`, one bit per candidate member.
///
/// Bit `v - 1` holds membership of `v`; bits at or beyond `N` stay zero.
/// Immutable after construction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DenseSet {
    n: u64,
    words: Vec<u64>,
    card: u64,
}

impl DenseSet {
    /// The empty subset of `[1, N]`.
    pub fn empty(n: u64) -> Self {
        let len = (n as usize).div_ceil(64);
        DenseSet {
            n,
            words: vec![0; len],
            card: 0,
        }
    }

    /// The full interval `[1, N]`.
    pub fn full(n: u64) -> Self {
        let mut s = Self::empty(n);
        for v in 1..=n {
            s.set_bit(v);
        }
        s.card = n;
        s
    }

    /// Builds a set from member values; duplicates collapse.
    pub fn from_members(n: u64, members: &[u64]) -> Result<Self> {
        let mut s = Self::empty(n);
        for &v in members {
            if v < 1 || v > n {
                return Err(Error::Contract(alloc::format!(
                    "member {v} outside universe [1, {n}]"
                )));
            }
            s.set_bit(v);
        }
        s.card = s.words.iter().map(|w| w.count_ones() as u64).sum();
        Ok(s)
    }

    fn set_bit(&mut self, v: u64) {
        let idx = (v - 1) as usize;
        self.words[idx / 64] |= 1u64 << (idx % 64);
    }

    /// Universe bound `N`.
    pub fn universe_size(&self) -> u64 {
        self.n
    }

    /// Cached cardinality `|A|`.
    pub fn cardinality(&self) -> u64 {
        self.card
    }

    /// Membership test for any integer (false outside `[1, N]`).
    pub fn contains(&self, v: i64) -> bool {
        if v < 1 || v as u64 > self.n {
            return false;
        }
        let idx = (v - 1) as usize;
        self.words[idx / 64] >> (idx % 64) & 1 == 1
    }

    /// Members in increasing order.
    pub fn members(&self) -> Vec<u64> {
        let mut out = Vec::with_capacity(self.card as usize);
        for (wi, &w) in self.words.iter().enumerate() {
            let mut bits = w;
            while bits != 0 {
                let b = bits.trailing_zeros() as u64;
                out.push(wi as u64 * 64 + b + 1);
                bits &= bits - 1;
            }
        }
        out
    }

    /// `|{a ∈ A : a - d ∈ A}|` by word-aligned shift and popcount.
    ///
    /// Symmetric in the sign of `d` (pairs at distance `d` and `-d` biject);
    /// zero once `|d| >= N`. `d = 0` returns `|A|`.
    pub fn shift_intersect_count(&self, d: i64) -> u64 {
        let s = d.unsigned_abs();
        if s >= self.n {
            return 0;
        }
        let q = (s / 64) as usize;
        let r = (s % 64) as u32;
        let mut count = 0u64;
        for i in q..self.words.len() {
            let shifted = if r == 0 {
                self.words[i - q]
            } else {
                let lo = self.words[i - q] << r;
                let hi = if i > q { self.words[i - q - 1] >> (64 - r) } else { 0 };
                lo | hi
            };
            count += (self.words[i] & shifted).count_ones() as u64;
        }
        count
    }

    /// Dense `{0,1}` indicator indexed by `v - 1`, for transform pipelines.
    pub fn indicator_f64(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n as usize];
        for v in self.members() {
            out[(v - 1) as usize] = 1.0;
        }
        out
    }
}

/// Partition of a set into residue classes mod `m`.
#[derive(Clone, Debug)]
pub struct ResidueSplit {
    /// The modulus `m` (gcd of the polynomial coefficients).
    pub modulus: u64,
    /// `classes[j]` holds the members congruent to `j` mod `m`.
    pub classes: Vec<DenseSet>,
}

/// Splits `A` into classes `A_j = A ∩ (mZ + j)` with `m` the gcd of the
/// coefficients of `P` (zeros ignored, so `m >= 1`).
pub fn residue_split(a: &DenseSet, p: &Polynomial) -> ResidueSplit {
    let m = p.coeff_gcd();
    let n = a.universe_size();
    let mut classes: Vec<Vec<u64>> = vec![Vec::new(); m as usize];
    for v in a.members() {
        classes[(v % m) as usize].push(v);
    }
    let classes = classes
        .into_iter()
        .map(|mem| DenseSet::from_members(n, &mem).expect("members stay in range"))
        .collect();
    ResidueSplit { modulus: m, classes }
}
