//! Recurrence profiles `n -> |A ∩ (A + P(n))|`, near-optimal return-time
//! extraction with exact integer thresholding, gap statistics, and a seeded
//! multi-trial experiment harness.

use alloc::vec::Vec;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::{One, Zero};

use crate::construct::GeneratorSpec;
use crate::error::{Error, Result};
use crate::fft::{fft_in_place, next_pow2};
use crate::grid::GridSet;
use crate::poly::{curve_point, Polynomial};
use crate::set::DenseSet;
use crate::torus::Rat;

/// Largest transform length `profile_fft` will allocate.
pub const MAX_FFT_LEN: usize = 1 << 24;

/// Intersection counts along a polynomial shift sequence.
///
/// `counts[n] = |A ∩ (A + P(n))|` for `n = 0..=L`; the zero shift always
/// contributes `counts[0] = |A|`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RecurrenceProfile {
    /// Counts indexed by `n`.
    pub counts: Vec<u64>,
    /// `N` for a 1-D set, `M^k` for a grid set.
    pub universe_size: u64,
    /// `|A|`.
    pub set_cardinality: u64,
}

/// Shift indices whose count clears the near-optimal threshold.
#[derive(Clone, Debug, PartialEq)]
pub struct ReturnTimeSet {
    /// Slack parameter in `(0, 1]`.
    pub epsilon: Rat,
    /// Sorted members of `[0, L]` passing the strict threshold.
    pub times: Vec<u64>,
    /// The inclusive range end `L`.
    pub range_end: u64,
}

/// Profile by direct shifted-popcount intersection at each `n`.
pub fn profile_direct(a: &DenseSet, p: &Polynomial, l: u64) -> Result<RecurrenceProfile> {
    let mut counts = Vec::with_capacity(l as usize + 1);
    for n in 0..=l {
        let d = p.eval(i64::try_from(n).map_err(|_| Error::Overflow("shift index"))?)?;
        counts.push(a.shift_intersect_count(d));
    }
    Ok(RecurrenceProfile {
        counts,
        universe_size: a.universe_size(),
        set_cardinality: a.cardinality(),
    })
}

/// Profile via one fast autocorrelation of the indicator, then sampling at
/// `d = P(n)`. Output is bit-identical to `profile_direct`.
///
/// The transform is zero-padded to a power of two at least `2N` so circular
/// wraparound cannot reach any lag below `N`. Reconstructed counts must land
/// within 1/4 of an integer; a larger residue reports a precision error
/// instead of rounding silently.
pub fn profile_fft(a: &DenseSet, p: &Polynomial, l: u64) -> Result<RecurrenceProfile> {
    let n = a.universe_size();
    let autocorr = autocorrelation_counts(a)?;
    let mut counts = Vec::with_capacity(l as usize + 1);
    for idx in 0..=l {
        let d = p.eval(i64::try_from(idx).map_err(|_| Error::Overflow("shift index"))?)?;
        let lag = d.unsigned_abs();
        counts.push(if lag < n { autocorr[lag as usize] } else { 0 });
    }
    Ok(RecurrenceProfile {
        counts,
        universe_size: n,
        set_cardinality: a.cardinality(),
    })
}

/// All lags `d = 0..N-1` of `|A ∩ (A + d)|` via FFT squaring.
fn autocorrelation_counts(a: &DenseSet) -> Result<Vec<u64>> {
    let n = a.universe_size() as usize;
    if n == 0 {
        return Ok(Vec::new());
    }
    let size = next_pow2(2 * n);
    if size > MAX_FFT_LEN {
        return Err(Error::Resource(alloc::format!(
            "transform length {size} exceeds the cap {MAX_FFT_LEN}"
        )));
    }
    let mut buf: Vec<Complex64> = a
        .indicator_f64()
        .into_iter()
        .map(|v| Complex64::new(v, 0.0))
        .collect();
    buf.resize(size, Complex64::new(0.0, 0.0));
    fft_in_place(&mut buf, false);
    for z in buf.iter_mut() {
        *z = Complex64::new(z.norm_sqr(), 0.0);
    }
    fft_in_place(&mut buf, true);
    let mut out = Vec::with_capacity(n);
    for (d, z) in buf.iter().take(n).enumerate() {
        let rounded = libm::round(z.re);
        if libm::fabs(z.re - rounded) > 0.25 || libm::fabs(z.im) > 0.25 {
            return Err(Error::Precision(alloc::format!(
                "autocorrelation at lag {d} is {} + {}i, too far from an integer",
                z.re, z.im
            )));
        }
        out.push(rounded as u64);
    }
    Ok(out)
}

/// Profile of a grid set along the moment curve `(n, n^2, ..., n^k)`.
pub fn profile_grid(b: &GridSet, l: u64) -> Result<RecurrenceProfile> {
    let k = b.dimension();
    let mut counts = Vec::with_capacity(l as usize + 1);
    for n in 0..=l {
        let shift = curve_point(k, i64::try_from(n).map_err(|_| Error::Overflow("shift index"))?)?;
        counts.push(b.shift_intersect_count(&shift)?);
    }
    Ok(RecurrenceProfile {
        counts,
        universe_size: b.cells(),
        set_cardinality: b.cardinality(),
    })
}

/// Exact strict-threshold extraction: keeps `n` iff
/// `counts[n] · N > |A|^2 - ε N^2`, decided by integer cross-multiplication
/// so a tie is never misclassified.
pub fn optimal_returns(prof: &RecurrenceProfile, epsilon: &Rat) -> Result<ReturnTimeSet> {
    if epsilon <= &Rat::zero() || epsilon > &Rat::one() {
        return Err(Error::Contract("ε must lie in (0, 1]".into()));
    }
    let n_big = BigInt::from(prof.universe_size);
    let card = BigInt::from(prof.set_cardinality);
    let p = epsilon.numer();
    let q = epsilon.denom();
    // counts[n]·N > |A|^2 - εN^2, cleared of the denominator q > 0.
    let rhs = &card * &card * q - p * &n_big * &n_big;
    let times = prof
        .counts
        .iter()
        .enumerate()
        .filter(|(_, &c)| BigInt::from(c) * &n_big * q > rhs)
        .map(|(n, _)| n as u64)
        .collect();
    Ok(ReturnTimeSet {
        epsilon: epsilon.clone(),
        times,
        range_end: prof.counts.len() as u64 - 1,
    })
}

/// Density and largest-gap report for a return-time set.
///
/// The full-range figures live on `[0, L]` (L+1 slots); the `positive_*`
/// figures restrict to `[1, L]` so the always-present member 0 cannot mask an
/// otherwise empty set. Gaps include the boundary runs (from the range start
/// to the first member and from the last member to `L`); an empty set
/// reports gap `L + 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct GapStats {
    /// Members in `[0, L]`.
    pub count: usize,
    /// `count / (L + 1)`.
    pub density: f64,
    /// Largest gap in `[0, L]`.
    pub max_gap: u64,
    /// Members in `[1, L]`.
    pub positive_count: usize,
    /// `positive_count / L` (zero when `L = 0`).
    pub positive_density: f64,
    /// Largest gap in `[1, L]`.
    pub positive_max_gap: u64,
}

fn max_gap_over(members: &[u64], start: u64, end: u64) -> u64 {
    if members.is_empty() {
        return end - start + 2;
    }
    let mut best = members[0] - start;
    for w in members.windows(2) {
        best = best.max(w[1] - w[0]);
    }
    best.max(end - members[members.len() - 1])
}

/// Computes the gap/density report for `r`.
pub fn gap_stats(r: &ReturnTimeSet) -> GapStats {
    let l = r.range_end;
    let count = r.times.len();
    let density = count as f64 / (l + 1) as f64;
    let max_gap = if r.times.is_empty() {
        l + 1
    } else {
        max_gap_over(&r.times, 0, l)
    };
    let positive: Vec<u64> = r.times.iter().copied().filter(|&t| t >= 1).collect();
    let positive_count = positive.len();
    let (positive_density, positive_max_gap) = if l == 0 {
        (0.0, 1)
    } else if positive.is_empty() {
        (0.0, l + 1)
    } else {
        (positive_count as f64 / l as f64, max_gap_over(&positive, 1, l))
    };
    GapStats {
        count,
        density,
        max_gap,
        positive_count,
        positive_density,
        positive_max_gap,
    }
}

/// One seeded trial of the return-time experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct TrialOutcome {
    /// Trial index, 0-based.
    pub trial: u32,
    /// The per-trial stream seed actually used.
    pub seed: u64,
    /// `|A|` for the generated set.
    pub cardinality: u64,
    /// Members of the return-time set on `[0, L]`.
    pub return_count: usize,
    /// `return_count / (L + 1)`.
    pub density: f64,
    /// Largest gap on `[0, L]`.
    pub max_gap: u64,
}

/// Aggregate over all trials.
#[derive(Clone, Debug, PartialEq)]
pub struct KhintchineSummary {
    /// Shift range end `L = ⌊N^(1/k)⌋`.
    pub range_end: u64,
    /// Per-trial rows in trial order.
    pub trials: Vec<TrialOutcome>,
    /// Smallest per-trial density.
    pub min_density: f64,
    /// Mean per-trial density (summed in trial order).
    pub mean_density: f64,
}

/// Largest `r` with `r^k <= n`.
fn int_kth_root(n: u64, k: u32) -> u64 {
    if k <= 1 || n <= 1 {
        return n;
    }
    let mut r = libm::pow(n as f64, 1.0 / k as f64) as u64 + 1;
    while r.checked_pow(k).map_or(true, |v| v > n) {
        r -= 1;
    }
    r
}

/// Mixing constant for per-trial seeds (the 64-bit golden-ratio step).
const TRIAL_SEED_STEP: u64 = 0x9E37_79B9_7F4A_7C15;

/// Runs `trials` independent seeded trials: generate a set, profile it over
/// `[0, ⌊N^(1/k)⌋]`, extract ε-optimal returns, and report densities.
/// Identical inputs give identical output.
pub fn khintchine_experiment(
    spec: &GeneratorSpec,
    p: &Polynomial,
    epsilon: &Rat,
    trials: u32,
    seed: u64,
) -> Result<KhintchineSummary> {
    if trials == 0 {
        return Err(Error::Contract("need at least one trial".into()));
    }
    let n = spec.universe();
    if n == 0 {
        return Err(Error::Contract("empty universe".into()));
    }
    let l = int_kth_root(n, p.degree() as u32);
    let mut rows = Vec::with_capacity(trials as usize);
    let mut min_density = f64::INFINITY;
    let mut sum_density = 0.0;
    for t in 0..trials {
        let trial_seed = seed.wrapping_add(u64::from(t).wrapping_mul(TRIAL_SEED_STEP));
        let a = spec.realize(trial_seed)?;
        let prof = profile_direct(&a, p, l)?;
        let returns = optimal_returns(&prof, epsilon)?;
        let stats = gap_stats(&returns);
        min_density = min_density.min(stats.density);
        sum_density += stats.density;
        rows.push(TrialOutcome {
            trial: t,
            seed: trial_seed,
            cardinality: a.cardinality(),
            return_count: stats.count,
            density: stats.density,
            max_gap: stats.max_gap,
        });
    }
    Ok(KhintchineSummary {
        range_end: l,
        trials: rows,
        min_density,
        mean_density: sum_density / f64::from(trials),
    })
}
