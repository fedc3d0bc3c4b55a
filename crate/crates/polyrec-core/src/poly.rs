//! Integer polynomials without constant term and the moment curve.

use alloc::vec::Vec;

use num_bigint::BigInt;
use num_traits::Zero;

use crate::error::{Error, Result};

/// Integer polynomial `P(n) = c_1 n + c_2 n^2 + ... + c_k n^k`.
///
/// The constant term is absent by construction, so `P(0) = 0` always holds.
/// `coeffs[i]` is the coefficient of `n^(i+1)`; the leading coefficient is
/// nonzero.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Polynomial {
    coeffs: Vec<i64>,
}

impl Polynomial {
    /// Builds a polynomial from the coefficients `c_1 ... c_k`.
    pub fn new(coeffs: Vec<i64>) -> Result<Self> {
        match coeffs.last() {
            None => Err(Error::Contract("polynomial needs degree >= 1".into())),
            Some(0) => Err(Error::Contract(
                "leading polynomial coefficient must be nonzero".into(),
            )),
            Some(_) => Ok(Polynomial { coeffs }),
        }
    }

    /// Degree `k`.
    pub fn degree(&self) -> usize {
        self.coeffs.len()
    }

    /// The coefficients `c_1 ... c_k`.
    pub fn coeffs(&self) -> &[i64] {
        &self.coeffs
    }

    /// Leading coefficient `c_k`.
    pub fn leading(&self) -> i64 {
        *self.coeffs.last().expect("degree >= 1")
    }

    /// Evaluates `P(n)` with overflow-checked arithmetic (Horner form).
    pub fn eval(&self, n: i64) -> Result<i64> {
        let mut acc: i64 = 0;
        for &c in self.coeffs.iter().rev() {
            acc = acc
                .checked_add(c)
                .and_then(|s| s.checked_mul(n))
                .ok_or(Error::Overflow("polynomial evaluation"))?;
        }
        Ok(acc)
    }

    /// Evaluates `P(n)` exactly in big-integer arithmetic.
    pub fn eval_big(&self, n: &BigInt) -> BigInt {
        let mut acc = BigInt::zero();
        for &c in self.coeffs.iter().rev() {
            acc = (acc + c) * n;
        }
        acc
    }

    /// Evaluates `P(n) mod m` for `m >= 1` in `[0, m)`, never overflowing.
    ///
    /// Intermediate products stay below `m^2 <= 2^124` for `m < 2^62`.
    pub fn eval_mod(&self, n: i64, m: i64) -> Result<i64> {
        if m < 1 {
            return Err(Error::Contract("modulus must be >= 1".into()));
        }
        if m.unsigned_abs() >= 1u64 << 62 {
            return Err(Error::Overflow("modular polynomial evaluation"));
        }
        let m = m as i128;
        let nr = (n as i128).rem_euclid(m);
        let mut acc: i128 = 0;
        for &c in self.coeffs.iter().rev() {
            acc = ((acc + c as i128).rem_euclid(m) * nr).rem_euclid(m);
        }
        Ok(acc as i64)
    }

    /// `gcd(c_1, ..., c_k)` with zero coefficients ignored; always >= 1.
    ///
    /// The gcd of a set containing zeros is the gcd of the nonzero members,
    /// so e.g. `P = n^2` gives 1 and `P = 3n + 6n^2` gives 3.
    pub fn coeff_gcd(&self) -> u64 {
        let mut g: u64 = 0;
        for &c in &self.coeffs {
            g = num_integer::gcd(g, c.unsigned_abs());
        }
        g.max(1)
    }
}

/// The moment curve `γ(n) = (n, n^2, ..., n^k)`, overflow-checked.
pub fn curve_point(k: usize, n: i64) -> Result<Vec<i64>> {
    if k < 1 {
        return Err(Error::Contract("curve dimension must be >= 1".into()));
    }
    let mut out = Vec::with_capacity(k);
    let mut acc: i64 = 1;
    for _ in 0..k {
        acc = acc
            .checked_mul(n)
            .ok_or(Error::Overflow("moment curve power"))?;
        out.push(acc);
    }
    Ok(out)
}

/// The moment curve in exact big-integer arithmetic.
pub fn curve_point_big(k: usize, n: &BigInt) -> Vec<BigInt> {
    let mut out = Vec::with_capacity(k);
    let mut acc = BigInt::from(1);
    for _ in 0..k {
        acc *= n;
        out.push(acc.clone());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eval_at_zero_is_zero() {
        let p = Polynomial::new(vec![0, 1]).unwrap();
        assert_eq!(p.eval(0).unwrap(), 0);
    }

    #[test]
    fn eval_square() {
        let p = Polynomial::new(vec![0, 1]).unwrap();
        assert_eq!(p.eval(7).unwrap(), 49);
    }

    #[test]
    fn eval_mixed_terms() {
        // 2n + 3n^3 at n=2: 4 + 24.
        let p = Polynomial::new(vec![2, 0, 3]).unwrap();
        assert_eq!(p.eval(2).unwrap(), 28);
    }

    #[test]
    fn eval_overflow_reported() {
        let p = Polynomial::new(vec![0, 0, 1]).unwrap();
        assert_eq!(
            p.eval(3_000_000_000),
            Err(Error::Overflow("polynomial evaluation"))
        );
    }

    #[test]
    fn eval_mod_matches_eval() {
        let p = Polynomial::new(vec![5, -2, 7]).unwrap();
        for n in -20..20 {
            for m in 1..30 {
                let direct = p.eval(n).unwrap().rem_euclid(m);
                assert_eq!(p.eval_mod(n, m).unwrap(), direct, "n={n} m={m}");
            }
        }
    }

    #[test]
    fn curve_points() {
        assert_eq!(curve_point(3, 2).unwrap(), vec![2, 4, 8]);
        assert_eq!(curve_point(1, 5).unwrap(), vec![5]);
        assert_eq!(curve_point(4, 3).unwrap(), vec![3, 9, 27, 81]);
    }

    #[test]
    fn curve_matches_monomials() {
        for k in 1..=4usize {
            for n in -9..=9i64 {
                let pt = curve_point(k, n).unwrap();
                for (i, &v) in pt.iter().enumerate() {
                    let mut coeffs = vec![0i64; i + 1];
                    coeffs[i] = 1;
                    let mono = Polynomial::new(coeffs).unwrap();
                    assert_eq!(mono.eval(n).unwrap(), v);
                }
            }
        }
    }

    #[test]
    fn coeff_gcd_ignores_zeros() {
        assert_eq!(Polynomial::new(vec![0, 1]).unwrap().coeff_gcd(), 1);
        assert_eq!(Polynomial::new(vec![2, 0, 4]).unwrap().coeff_gcd(), 2);
        assert_eq!(Polynomial::new(vec![3, 6]).unwrap().coeff_gcd(), 3);
    }

    #[test]
    fn rejects_zero_leading() {
        assert!(Polynomial::new(vec![1, 0]).is_err());
        assert!(Polynomial::new(vec![]).is_err());
    }
}
