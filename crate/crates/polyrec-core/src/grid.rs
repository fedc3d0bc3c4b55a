//! Dense occupancy sets over the cube `[1, M]^k`.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Default cap on `M^k` cells for one grid set.
pub const DEFAULT_CELL_BUDGET: u64 = 1 << 27;

/// Largest supported dimension.
pub const MAX_DIMENSION: usize = 4;

/// Finite subset of `[1, M]^k` with dense bit-packed occupancy.
///
/// Cells are indexed axis-1-fastest: `idx = Σ (x_j - 1) M^(j-1)`.
/// Immutable after construction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GridSet {
    k: usize,
    m: u64,
    words: Vec<u64>,
    card: u64,
}

impl GridSet {
    fn cells_checked(k: usize, m: u64, budget: u64) -> Result<u64> {
        if k < 1 || k > MAX_DIMENSION {
            return Err(Error::Contract(alloc::format!(
                "grid dimension {k} outside [1, {MAX_DIMENSION}]"
            )));
        }
        if m < 1 {
            return Err(Error::Contract("grid side must be >= 1".into()));
        }
        let mut cells: u64 = 1;
        for _ in 0..k {
            cells = cells
                .checked_mul(m)
                .filter(|&c| c <= budget)
                .ok_or_else(|| {
                    Error::Resource(alloc::format!(
                        "grid of side {m}^{k} exceeds the {budget}-cell budget"
                    ))
                })?;
        }
        Ok(cells)
    }

    /// Empty set over `[1, M]^k` under a caller-chosen cell budget.
    pub fn empty_with_budget(k: usize, m: u64, budget: u64) -> Result<Self> {
        let cells = Self::cells_checked(k, m, budget)?;
        Ok(GridSet {
            k,
            m,
            words: vec![0; (cells as usize).div_ceil(64)],
            card: 0,
        })
    }

    /// Empty set over `[1, M]^k` under the default cell budget.
    pub fn empty(k: usize, m: u64) -> Result<Self> {
        Self::empty_with_budget(k, m, DEFAULT_CELL_BUDGET)
    }

    /// The full cube `[1, M]^k`.
    pub fn full(k: usize, m: u64) -> Result<Self> {
        let mut g = Self::empty(k, m)?;
        let cells = g.cells();
        for idx in 0..cells {
            g.words[(idx / 64) as usize] |= 1u64 << (idx % 64);
        }
        g.card = cells;
        Ok(g)
    }

    /// Builds a set from member points; duplicates collapse.
    pub fn from_members(k: usize, m: u64, members: &[Vec<i64>]) -> Result<Self> {
        let mut g = Self::empty(k, m)?;
        for pt in members {
            let idx = g.index_of(pt).ok_or_else(|| {
                Error::Contract(alloc::format!("point {pt:?} outside [1, {m}]^{k}"))
            })?;
            g.words[(idx / 64) as usize] |= 1u64 << (idx % 64);
        }
        g.card = g.words.iter().map(|w| w.count_ones() as u64).sum();
        Ok(g)
    }

    /// Total cell count `M^k`.
    pub fn cells(&self) -> u64 {
        self.m.pow(self.k as u32)
    }

    /// Dimension `k`.
    pub fn dimension(&self) -> usize {
        self.k
    }

    /// Side length `M`.
    pub fn side(&self) -> u64 {
        self.m
    }

    /// Cached cardinality `|B|`.
    pub fn cardinality(&self) -> u64 {
        self.card
    }

    fn index_of(&self, pt: &[i64]) -> Option<u64> {
        if pt.len() != self.k {
            return None;
        }
        let mut idx = 0u64;
        let mut stride = 1u64;
        for &x in pt {
            if x < 1 || x as u64 > self.m {
                return None;
            }
            idx += (x as u64 - 1) * stride;
            stride *= self.m;
        }
        Some(idx)
    }

    /// Membership test for any integer point (false outside the cube or on
    /// dimension mismatch).
    pub fn contains(&self, pt: &[i64]) -> bool {
        match self.index_of(pt) {
            Some(idx) => self.words[(idx / 64) as usize] >> (idx % 64) & 1 == 1,
            None => false,
        }
    }

    /// Members in increasing linear-index order.
    pub fn members(&self) -> Vec<Vec<i64>> {
        let mut out = Vec::with_capacity(self.card as usize);
        for (wi, &w) in self.words.iter().enumerate() {
            let mut bits = w;
            while bits != 0 {
                let b = bits.trailing_zeros() as u64;
                out.push(self.coords_of(wi as u64 * 64 + b));
                bits &= bits - 1;
            }
        }
        out
    }

    fn coords_of(&self, mut idx: u64) -> Vec<i64> {
        let mut pt = Vec::with_capacity(self.k);
        for _ in 0..self.k {
            pt.push((idx % self.m) as i64 + 1);
            idx /= self.m;
        }
        pt
    }

    /// `|{b ∈ B : b - v ∈ B}|` for a shift vector `v` of matching dimension.
    pub fn shift_intersect_count(&self, v: &[i64]) -> Result<u64> {
        if v.len() != self.k {
            return Err(Error::Contract(alloc::format!(
                "shift vector has dimension {}, grid has {}",
                v.len(),
                self.k
            )));
        }
        let mut count = 0u64;
        let mut shifted = Vec::with_capacity(self.k);
        for b in self.members() {
            shifted.clear();
            for (x, d) in b.iter().zip(v) {
                shifted.push(x - d);
            }
            if self.contains(&shifted) {
                count += 1;
            }
        }
        Ok(count)
    }

    /// Dense `{0,1}` indicator in linear-index order.
    pub fn indicator_f64(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.cells() as usize];
        for (wi, &w) in self.words.iter().enumerate() {
            let mut bits = w;
            while bits != 0 {
                let b = bits.trailing_zeros() as usize;
                out[wi * 64 + b] = 1.0;
                bits &= bits - 1;
            }
        }
        out
    }
}
