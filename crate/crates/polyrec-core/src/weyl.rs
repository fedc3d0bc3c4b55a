//! Normalized exponential sums over the moment curve, the window shear
//! matrix, exact sum relations, and an empirical minor-arc scan.

use alloc::vec::Vec;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use rand_core::{RngCore, SeedableRng};

use crate::arcs;
use crate::error::{Error, Result};
use crate::torus::{e2pi, rat_to_f64, reduce_mod1, Rat, TorusPoint};

/// Deterministic pairwise (tree) summation over terms in their given order.
pub(crate) fn pairwise_sum(terms: &[Complex64]) -> Complex64 {
    match terms.len() {
        0 => Complex64::new(0.0, 0.0),
        1..=8 => terms.iter().fold(Complex64::new(0.0, 0.0), |a, b| a + b),
        n => {
            let mid = n / 2;
            pairwise_sum(&terms[..mid]) + pairwise_sum(&terms[mid..])
        }
    }
}

fn mulmod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

/// Phase values `Σ_j α_j n^j mod 1` for `n = n0 + t·step`, `t = 0..count`,
/// each as an exact fraction `num/denom` converted to a unit phase term.
///
/// Fast path: all coordinates over one denominator `D < 2^62`, successive
/// polynomial values generated by a k-th order finite-difference table with
/// `u128` additions mod `D`. Fallback: per-term exact rational Horner.
fn phase_terms(alpha: &TorusPoint, n0: u64, step: u64, count: u64) -> Vec<Complex64> {
    let mut terms = Vec::with_capacity(count as usize);
    if count == 0 {
        return terms;
    }
    let k = alpha.dim();
    let mut denom = BigInt::one();
    for a in alpha.coords() {
        denom = denom.lcm(a.denom());
    }
    if let Some(d) = denom.to_u64().filter(|&d| d < 1 << 62) {
        // Numerators of each α_j over the common denominator, reduced mod D.
        let nums: Vec<u64> = alpha
            .coords()
            .iter()
            .map(|a| {
                let scaled = (a * Rat::from_integer(denom.clone())).to_integer();
                scaled.mod_floor(&denom).to_u64().expect("residue below D")
            })
            .collect();
        // Table seeds: g(t) for t = 0..=k, then forward differences.
        let mut vals: Vec<u64> = (0..=k as u64)
            .map(|t| {
                let n = (n0 as u128 + t as u128 * step as u128) % d as u128;
                let mut acc: u64 = 0;
                let mut pw: u64 = 1;
                for &a in &nums {
                    pw = mulmod(pw, n as u64, d);
                    acc = (acc + mulmod(a, pw, d) as u128 as u64) % d;
                }
                acc
            })
            .collect();
        for level in 1..=k {
            for idx in (level..=k).rev() {
                vals[idx] = (vals[idx] + d - vals[idx - 1]) % d;
            }
        }
        let df = d as f64;
        for _ in 0..count {
            let t = vals[0] as f64 / df;
            let (s, c) = libm::sincos(core::f64::consts::TAU * t);
            terms.push(Complex64::new(c, s));
            for i in 0..k {
                vals[i] = ((vals[i] as u128 + vals[i + 1] as u128) % d as u128) as u64;
            }
        }
    } else {
        for t in 0..count {
            let n = Rat::from_integer(BigInt::from(n0 + t * step));
            let mut x = Rat::zero();
            for a in alpha.coords().iter().rev() {
                x = reduce_mod1(&((x + a) * &n));
            }
            terms.push(e2pi(&x));
        }
    }
    terms
}

/// `α · γ(n) mod 1` as an exact rational.
pub fn curve_phase(alpha: &TorusPoint, n: u64) -> Rat {
    let n = Rat::from_integer(BigInt::from(n));
    let mut x = Rat::zero();
    for a in alpha.coords().iter().rev() {
        x = reduce_mod1(&((x + a) * &n));
    }
    x
}

/// Based sum `(1/μ) Σ_{n=1}^{μ} e^(2πi α·γ(n))`.
pub fn weyl_s(mu: u64, alpha: &TorusPoint) -> Result<Complex64> {
    weyl_s_window(0, mu, alpha)
}

/// Windowed sum `(1/μ) Σ_{n=λ+1}^{λ+μ} e^(2πi α·γ(n))`.
///
/// Terms are generated in ascending `n` and combined by pairwise summation.
pub fn weyl_s_window(lambda: u64, mu: u64, alpha: &TorusPoint) -> Result<Complex64> {
    if mu < 1 {
        return Err(Error::Contract("window length must be >= 1".into()));
    }
    lambda
        .checked_add(mu)
        .ok_or(Error::Overflow("window end"))?;
    let terms = phase_terms(alpha, lambda + 1, 1, mu);
    Ok(pairwise_sum(&terms) / mu as f64)
}

/// Divisibility-restricted sum `(q/μ) Σ_{n ∈ (λ, λ+μ], q|n} e^(2πi α·γ(n))`.
pub fn weyl_s_div(lambda: u64, mu: u64, q: u64, alpha: &TorusPoint) -> Result<Complex64> {
    if mu < 1 || q < 1 {
        return Err(Error::Contract("window length and divisor must be >= 1".into()));
    }
    let end = lambda.checked_add(mu).ok_or(Error::Overflow("window end"))?;
    let first = (lambda / q + 1).checked_mul(q).ok_or(Error::Overflow("first multiple"))?;
    let count = if first > end { 0 } else { (end - first) / q + 1 };
    let terms = phase_terms(alpha, first, q, count);
    Ok(pairwise_sum(&terms) * (q as f64 / mu as f64))
}

/// Upper-triangular window-translation matrix with entries
/// `T_{ij} = C(j, i) λ^(j-i)` for `j >= i` (1-indexed), unit diagonal.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TLambda {
    k: usize,
    lambda: BigInt,
    entries: Vec<BigInt>,
}

pub(crate) fn binomial(n: usize, r: usize) -> BigInt {
    let mut acc = BigInt::one();
    for i in 0..r.min(n - r) {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

/// Builds `T_λ` for dimension `k` and shift `λ >= 1`.
pub fn t_lambda(k: usize, lambda: &BigInt) -> Result<TLambda> {
    if k < 1 {
        return Err(Error::Contract("matrix dimension must be >= 1".into()));
    }
    if lambda < &BigInt::one() {
        return Err(Error::Contract("shift λ must be >= 1".into()));
    }
    let mut entries = alloc::vec![BigInt::zero(); k * k];
    for i in 1..=k {
        for j in i..=k {
            entries[(i - 1) * k + (j - 1)] = binomial(j, i) * lambda.pow((j - i) as u32);
        }
    }
    Ok(TLambda {
        k,
        lambda: lambda.clone(),
        entries,
    })
}

impl TLambda {
    /// Dimension `k`.
    pub fn dim(&self) -> usize {
        self.k
    }

    /// The shift `λ`.
    pub fn lambda(&self) -> &BigInt {
        &self.lambda
    }

    /// Entry `T_{ij}`, 1-indexed.
    pub fn entry(&self, i: usize, j: usize) -> &BigInt {
        &self.entries[(i - 1) * self.k + (j - 1)]
    }

    /// Determinant (product of the unit diagonal).
    pub fn det(&self) -> BigInt {
        let mut d = BigInt::one();
        for i in 1..=self.k {
            d *= self.entry(i, i);
        }
        d
    }

    /// `T_λ α` reduced mod 1, in exact rational arithmetic.
    pub fn apply(&self, alpha: &TorusPoint) -> Result<TorusPoint> {
        if alpha.dim() != self.k {
            return Err(Error::Contract(alloc::format!(
                "point dimension {} does not match matrix dimension {}",
                alpha.dim(),
                self.k
            )));
        }
        let coords = (1..=self.k)
            .map(|i| {
                let mut acc = Rat::zero();
                for j in i..=self.k {
                    acc += alpha.coord(j) * Rat::from_integer(self.entry(i, j).clone());
                }
                acc
            })
            .collect();
        TorusPoint::new(coords)
    }

    /// Exact integer inverse, computed by back-substitution on `T X = I`
    /// (valid because the matrix is unitriangular).
    pub fn inverse_entries(&self) -> Vec<BigInt> {
        let k = self.k;
        let mut inv = alloc::vec![BigInt::zero(); k * k];
        for c in 1..=k {
            for i in (1..=c).rev() {
                let mut acc = if i == c { BigInt::one() } else { BigInt::zero() };
                for j in (i + 1)..=c {
                    acc -= self.entry(i, j) * &inv[(j - 1) * k + (c - 1)];
                }
                inv[(i - 1) * k + (c - 1)] = acc;
            }
        }
        inv
    }

    /// `(T_λ^(-1))^T d` for an integer frequency vector `d` (exact).
    pub fn inverse_transpose_apply(&self, d: &[BigInt]) -> Result<Vec<BigInt>> {
        if d.len() != self.k {
            return Err(Error::Contract("frequency vector dimension mismatch".into()));
        }
        let inv = self.inverse_entries();
        let k = self.k;
        Ok((1..=k)
            .map(|j| {
                let mut acc = BigInt::zero();
                for (i, di) in d.iter().enumerate() {
                    acc += &inv[i * k + (j - 1)] * di;
                }
                acc
            })
            .collect())
    }
}

/// Maximum absolute discrepancies of the three window-sum identities over a
/// set of sample points.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RelationResiduals {
    /// Window sum vs the difference of two based sums.
    pub max_r1: f64,
    /// Window sum vs phase-shifted based sum at the sheared point.
    pub max_r2: f64,
    /// Divisible window sum vs the contracted window at the scaled point.
    pub max_r3: f64,
}

/// Evaluates both sides of each identity at each sample and reports the
/// largest absolute difference per identity.
///
/// Preconditions: `λ, μ, q >= 1` and `q | λ`, `q | μ` (the contracted-window
/// identity needs both divisibilities).
pub fn relation_residuals(
    lambda: u64,
    mu: u64,
    q: u64,
    samples: &[TorusPoint],
) -> Result<RelationResiduals> {
    if lambda < 1 || mu < 1 || q < 1 {
        return Err(Error::Contract("λ, μ, q must all be >= 1".into()));
    }
    if lambda % q != 0 || mu % q != 0 {
        return Err(Error::Contract(alloc::format!(
            "q = {q} must divide both λ = {lambda} and μ = {mu}"
        )));
    }
    let mut out = RelationResiduals {
        max_r1: 0.0,
        max_r2: 0.0,
        max_r3: 0.0,
    };
    for alpha in samples {
        let k = alpha.dim();
        let window = weyl_s_window(lambda, mu, alpha)?;

        let s_full = weyl_s(lambda + mu, alpha)?;
        let s_head = weyl_s(lambda, alpha)?;
        let lm = (lambda + mu) as f64 / mu as f64;
        let lo = lambda as f64 / mu as f64;
        let r1 = (window - (s_full * lm - s_head * lo)).norm();

        let t = t_lambda(k, &BigInt::from(lambda))?;
        let sheared = weyl_s(mu, &t.apply(alpha)?)?;
        let r2 = (window - e2pi(&curve_phase(alpha, lambda)) * sheared).norm();

        let div = weyl_s_div(lambda, mu, q, alpha)?;
        let contracted = weyl_s_window(lambda / q, mu / q, &alpha.curve_scale(q))?;
        let r3 = (div - contracted).norm();

        out.max_r1 = out.max_r1.max(r1);
        out.max_r2 = out.max_r2.max(r2);
        out.max_r3 = out.max_r3.max(r3);
    }
    Ok(out)
}

/// Result of a seeded scan for large based sums off the major-arc union.
#[derive(Clone, Debug)]
pub struct ScanReport {
    /// Largest `|S_μ(α)|` among kept samples.
    pub max_abs: f64,
    /// The sample attaining it.
    pub argmax: TorusPoint,
    /// Samples outside the major-arc union (evaluated).
    pub kept: u64,
    /// Samples inside the major-arc union (discarded).
    pub discarded: u64,
}

/// Draws `samples` points uniformly from the `2^20`-resolution rational grid
/// on `T^k`, discards those inside the major-arc union for `(η, μ)`, and
/// reports the largest `|S_μ|` among the survivors. Deterministic in `seed`.
pub fn minor_arc_scan(
    eta: &Rat,
    mu: u64,
    k: usize,
    samples: u64,
    seed: u64,
) -> Result<ScanReport> {
    if mu < 2 {
        return Err(Error::Contract(
            "scan needs μ >= 2 (a single-term sum is unimodular everywhere)".into(),
        ));
    }
    if k < 1 {
        return Err(Error::Contract("dimension must be >= 1".into()));
    }
    if eta <= &Rat::zero() || eta >= &Rat::one() {
        return Err(Error::Contract("η must lie in (0, 1)".into()));
    }
    const GRID: u64 = 1 << 20;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mu_big = BigInt::from(mu);
    let mut best: Option<(f64, TorusPoint)> = None;
    let mut kept = 0u64;
    let mut discarded = 0u64;
    for _ in 0..samples {
        let coords: Vec<Rat> = (0..k)
            .map(|_| {
                let a = rng.next_u64() & (GRID - 1);
                Rat::new(BigInt::from(a), BigInt::from(GRID))
            })
            .collect();
        let alpha = TorusPoint::new(coords)?;
        if arcs::in_frak_M(&alpha, eta, &mu_big, k) {
            discarded += 1;
            continue;
        }
        kept += 1;
        let v = weyl_s(mu, &alpha)?.norm();
        if best.as_ref().is_none_or(|(b, _)| v > *b) {
            best = Some((v, alpha));
        }
    }
    match best {
        Some((max_abs, argmax)) => Ok(ScanReport {
            max_abs,
            argmax,
            kept,
            discarded,
        }),
        None => Err(Error::Diagnostic(alloc::format!(
            "all {samples} samples fell in the major-arc union; increase the sample count"
        ))),
    }
}

/// Scaled threshold report: `sup |S| / η` for fitting a scan against a
/// frozen multiple of η.
pub fn scan_ratio(report: &ScanReport, eta: &Rat) -> f64 {
    report.max_abs / rat_to_f64(eta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::torus::rat;

    fn naive_window(lambda: u64, mu: u64, alpha: &TorusPoint) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for n in (lambda + 1)..=(lambda + mu) {
            acc += e2pi(&curve_phase(alpha, n));
        }
        acc / mu as f64
    }

    #[test]
    fn based_sum_at_zero_is_one() {
        for k in 1..=3 {
            let s = weyl_s(37, &TorusPoint::zero(k)).unwrap();
            assert!((s - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn alternating_sum_vanishes() {
        let alpha = TorusPoint::new(vec![rat(1, 2)]).unwrap();
        let s = weyl_s(4, &alpha).unwrap();
        assert!(s.norm() < 1e-12);
    }

    #[test]
    fn quadratic_half_phase_cancels() {
        let alpha = TorusPoint::new(vec![rat(0, 1), rat(1, 2)]).unwrap();
        let s = weyl_s(2, &alpha).unwrap();
        assert!(s.norm() < 1e-12);
    }

    #[test]
    fn window_at_zero_offset_matches_based() {
        let alpha = TorusPoint::new(vec![rat(3, 7), rat(2, 5)]).unwrap();
        let a = weyl_s(9, &alpha).unwrap();
        let b = weyl_s_window(0, 9, &alpha).unwrap();
        assert!((a - b).norm() < 1e-15);
    }

    #[test]
    fn window_two_terms_cancel() {
        let alpha = TorusPoint::new(vec![rat(1, 2)]).unwrap();
        let s = weyl_s_window(1, 2, &alpha).unwrap();
        assert!(s.norm() < 1e-12);
    }

    #[test]
    fn divisible_sum_normalization() {
        let alpha = TorusPoint::zero(2);
        let s = weyl_s_div(0, 12, 3, &alpha).unwrap();
        assert!((s - Complex64::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn divisible_sum_with_q_one_reduces_to_window() {
        let alpha = TorusPoint::new(vec![rat(2, 9), rat(5, 11)]).unwrap();
        let a = weyl_s_div(3, 8, 1, &alpha).unwrap();
        let b = weyl_s_window(3, 8, &alpha).unwrap();
        assert!((a - b).norm() < 1e-15);
    }

    #[test]
    fn divisible_even_terms_at_half() {
        let alpha = TorusPoint::new(vec![rat(1, 2)]).unwrap();
        let s = weyl_s_div(0, 4, 2, &alpha).unwrap();
        assert!((s - Complex64::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn window_matches_naive_exact_path() {
        let alpha = TorusPoint::new(vec![rat(13, 97), rat(5, 64), rat(7, 30)]).unwrap();
        let fast = weyl_s_window(11, 50, &alpha).unwrap();
        let slow = naive_window(11, 50, &alpha);
        assert!((fast - slow).norm() < 1e-11);
    }

    #[test]
    fn window_fallback_for_huge_denominator() {
        // Denominator above the difference-table bound exercises the Horner path.
        let d = BigInt::from(2u8).pow(70) + 1;
        let alpha = TorusPoint::new(vec![Rat::new(BigInt::from(3), d)]).unwrap();
        let s = weyl_s_window(2, 5, &alpha).unwrap();
        let slow = naive_window(2, 5, &alpha);
        assert!((s - slow).norm() < 1e-11);
    }

    #[test]
    fn magnitudes_bounded_by_one() {
        let mut state = 11u64;
        for _ in 0..50 {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(7);
            let a = state >> 44;
            state = state.wrapping_mul(6364136223846793005).wrapping_add(7);
            let b = state >> 44;
            let alpha =
                TorusPoint::new(vec![rat(a as i64, 1 << 20), rat(b as i64, 1 << 20)]).unwrap();
            assert!(weyl_s(17, &alpha).unwrap().norm() <= 1.0 + 1e-12);
            assert!(weyl_s_window(5, 23, &alpha).unwrap().norm() <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn shear_matrix_instances() {
        let t = t_lambda(2, &BigInt::from(3)).unwrap();
        assert_eq!(t.entry(1, 1), &BigInt::from(1));
        assert_eq!(t.entry(1, 2), &BigInt::from(6));
        assert_eq!(t.entry(2, 1), &BigInt::from(0));
        assert_eq!(t.entry(2, 2), &BigInt::from(1));

        let t = t_lambda(3, &BigInt::from(2)).unwrap();
        let expect = [[1, 4, 12], [0, 1, 6], [0, 0, 1]];
        for i in 1..=3 {
            for j in 1..=3 {
                assert_eq!(t.entry(i, j), &BigInt::from(expect[i - 1][j - 1]));
            }
        }
        assert_eq!(t.det(), BigInt::from(1));
    }

    #[test]
    fn shear_fixes_origin() {
        let t = t_lambda(3, &BigInt::from(5)).unwrap();
        let img = t.apply(&TorusPoint::zero(3)).unwrap();
        assert_eq!(img, TorusPoint::zero(3));
    }

    #[test]
    fn inverse_really_inverts() {
        for lam in [1i64, 2, 7, 1000] {
            let t = t_lambda(4, &BigInt::from(lam)).unwrap();
            let inv = t.inverse_entries();
            for i in 1..=4usize {
                for j in 1..=4usize {
                    let mut acc = BigInt::zero();
                    for l in 1..=4usize {
                        acc += t.entry(i, l) * &inv[(l - 1) * 4 + (j - 1)];
                    }
                    let expect = if i == j { BigInt::one() } else { BigInt::zero() };
                    assert_eq!(acc, expect, "entry ({i},{j}) for λ={lam}");
                }
            }
        }
    }

    fn sample_points(k: usize, count: usize, seed: u64) -> Vec<TorusPoint> {
        let mut state = seed;
        (0..count)
            .map(|_| {
                let coords = (0..k)
                    .map(|_| {
                        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                        rat((state >> 44) as i64, 1 << 20)
                    })
                    .collect();
                TorusPoint::new(coords).unwrap()
            })
            .collect()
    }

    #[test]
    fn residuals_vanish_at_origin() {
        let res = relation_residuals(12, 6, 3, &[TorusPoint::zero(2)]).unwrap();
        assert!(res.max_r1 < 1e-12 && res.max_r2 < 1e-12 && res.max_r3 < 1e-12);
    }

    #[test]
    fn residuals_small_on_random_rationals() {
        let pts = sample_points(2, 64, 99);
        let res = relation_residuals(12, 6, 3, &pts).unwrap();
        assert!(res.max_r1 <= 1e-10, "r1 = {}", res.max_r1);
        assert!(res.max_r2 <= 1e-10, "r2 = {}", res.max_r2);
        assert!(res.max_r3 <= 1e-10, "r3 = {}", res.max_r3);
    }

    #[test]
    fn residuals_single_term_window() {
        let pts = sample_points(3, 16, 5);
        let res = relation_residuals(4, 1, 1, &pts).unwrap();
        assert!(res.max_r2 <= 1e-10);
    }

    #[test]
    fn residuals_precondition_enforced() {
        assert!(matches!(
            relation_residuals(5, 6, 3, &[TorusPoint::zero(1)]),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn scan_runs_and_is_deterministic() {
        let eta = rat(2, 5);
        let a = minor_arc_scan(&eta, 50, 1, 300, 7).unwrap();
        let b = minor_arc_scan(&eta, 50, 1, 300, 7).unwrap();
        assert_eq!(a.max_abs.to_bits(), b.max_abs.to_bits());
        assert_eq!(a.argmax, b.argmax);
        assert!(a.max_abs < 1.0);
        assert!(a.kept + a.discarded == 300);
    }

    #[test]
    fn scan_rejects_trivial_window() {
        assert!(matches!(
            minor_arc_scan(&rat(1, 3), 1, 1, 10, 0),
            Err(Error::Contract(_))
        ));
    }
}
