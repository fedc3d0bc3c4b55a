//! Exact rational points on the k-torus and rational/float bridges.

use alloc::vec::Vec;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Exact rational scalar used throughout the crate.
pub type Rat = num_rational::BigRational;

/// `x - floor(x)`, the representative of `x` in `[0, 1)`.
pub fn reduce_mod1(x: &Rat) -> Rat {
    x - x.floor()
}

/// Converts `x ∈ [0, 1)` to `f64` by exact binary truncation at 60 bits.
///
/// Works for arbitrarily large numerators/denominators (where a naive
/// numerator/denominator division would overflow to `inf/inf`).
pub fn rat_to_f64_unit(x: &Rat) -> f64 {
    let scaled = (x * Rat::from_integer(BigInt::from(1u128 << 60))).floor();
    let t = scaled.to_integer().to_u64().expect("unit value scaled below 2^60");
    t as f64 / (1u64 << 60) as f64
}

/// Converts any exact rational to the nearest-ish `f64` (error < 2^-59
/// relative), safe for components of any magnitude.
pub fn rat_to_f64(x: &Rat) -> f64 {
    if x.is_zero() {
        return 0.0;
    }
    let n = x.numer().abs();
    let d = x.denom().abs();
    let shift = n.bits() as i64 - d.bits() as i64;
    let a = 62 - shift;
    let q = if a >= 0 {
        (n << a as u64) / d
    } else {
        n / (d << (-a) as u64)
    };
    let approx = q.to_f64().unwrap_or(f64::INFINITY);
    let scaled = libm::scalbn(approx, (-a) as i32);
    if x.is_negative() {
        -scaled
    } else {
        scaled
    }
}

/// `e^(2πi x)` evaluated after exact mod-1 reduction of `x`.
pub fn e2pi(x: &Rat) -> Complex64 {
    let t = rat_to_f64_unit(&reduce_mod1(x));
    let (s, c) = libm::sincos(core::f64::consts::TAU * t);
    Complex64::new(c, s)
}

/// Exact circle distance from `x` to the nearest point of `(1/s)Z`, `s >= 1`.
///
/// The nearest lattice point is `floor(x s)/s` or its successor; on the
/// circle this collapses to `min(frac, 1 - frac)/s` for `frac = x s mod 1`.
pub fn circle_lattice_distance(x: &Rat, s: &BigInt) -> Rat {
    let t = x * Rat::from_integer(s.clone());
    let frac = reduce_mod1(&t);
    let wrap = Rat::from_integer(BigInt::from(1)) - &frac;
    let units = if frac <= wrap { frac } else { wrap };
    units / Rat::from_integer(s.clone())
}

/// Point on `T^k` held as exact rationals, each reduced into `[0, 1)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TorusPoint {
    coords: Vec<Rat>,
}

impl TorusPoint {
    /// Wraps coordinates, reducing each mod 1.
    pub fn new(coords: Vec<Rat>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::Contract("torus point needs dimension >= 1".into()));
        }
        Ok(TorusPoint {
            coords: coords.iter().map(reduce_mod1).collect(),
        })
    }

    /// The origin of `T^k`.
    pub fn zero(k: usize) -> Self {
        TorusPoint {
            coords: alloc::vec![Rat::zero(); k.max(1)],
        }
    }

    /// Dimension `k`.
    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    /// Coordinate `α_j` for `1 <= j <= k`.
    pub fn coord(&self, j: usize) -> &Rat {
        &self.coords[j - 1]
    }

    /// All coordinates in axis order.
    pub fn coords(&self) -> &[Rat] {
        &self.coords
    }

    /// Per-axis `f64` projection (each coordinate truncated at 60 bits).
    pub fn float_view(&self) -> Vec<f64> {
        self.coords.iter().map(rat_to_f64_unit).collect()
    }

    /// The curve scaling `(q α_1, q^2 α_2, ..., q^k α_k)` reduced mod 1.
    pub fn curve_scale(&self, q: u64) -> TorusPoint {
        let q = BigInt::from(q);
        let mut pw = BigInt::from(1);
        let coords = self
            .coords
            .iter()
            .map(|a| {
                pw = &pw * &q;
                reduce_mod1(&(a * Rat::from_integer(pw.clone())))
            })
            .collect();
        TorusPoint { coords }
    }
}

/// Convenience rational `a/b` from machine integers (`b != 0`).
pub fn rat(a: i64, b: i64) -> Rat {
    Rat::new(BigInt::from(a), BigInt::from(b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reduction_lands_in_unit_interval() {
        for (a, b) in [(7, 3), (-7, 3), (5, 1), (-1, 4), (0, 9)] {
            let r = reduce_mod1(&rat(a, b));
            assert!(r >= Rat::zero() && r < Rat::from_integer(BigInt::from(1)));
            let diff = rat(a, b) - &r;
            assert!(diff.is_integer());
        }
    }

    #[test]
    fn unit_float_conversion_accuracy() {
        let x = rat(1, 3);
        assert!((rat_to_f64_unit(&x) - 1.0 / 3.0).abs() < 1e-15);
        // Huge components: (10^40 + 1) / (3 * 10^40) ~ 1/3.
        let big = BigInt::from(10u8).pow(40);
        let x = Rat::new(&big + 1, 3 * &big);
        assert!((rat_to_f64_unit(&x) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn general_float_conversion() {
        assert_eq!(rat_to_f64(&rat(0, 1)), 0.0);
        assert!((rat_to_f64(&rat(-22, 7)) + 22.0 / 7.0).abs() < 1e-14);
        let big = BigInt::from(10u8).pow(60);
        let x = Rat::new(BigInt::from(7) * &big, BigInt::from(2) * &big);
        assert!((rat_to_f64(&x) - 3.5).abs() < 1e-14);
    }

    #[test]
    fn exponential_at_simple_fractions() {
        let one = e2pi(&rat(0, 1));
        assert!((one.re - 1.0).abs() < 1e-15 && one.im.abs() < 1e-15);
        let half = e2pi(&rat(1, 2));
        assert!((half.re + 1.0).abs() < 1e-12 && half.im.abs() < 1e-12);
        let quarter = e2pi(&rat(1, 4));
        assert!(quarter.re.abs() < 1e-12 && (quarter.im - 1.0).abs() < 1e-12);
    }

    #[test]
    fn lattice_distance_examples() {
        // On-lattice point.
        let d = circle_lattice_distance(&rat(3, 8), &BigInt::from(8));
        assert!(d.is_zero());
        // Midpoint of two lattice points.
        let d = circle_lattice_distance(&rat(1, 16), &BigInt::from(8));
        assert_eq!(d, rat(1, 16));
        // 1/3 against the lattice {0, 1/2}: nearest is 1/2.
        let d = circle_lattice_distance(&rat(1, 3), &BigInt::from(2));
        assert_eq!(d, rat(1, 6));
        // Wrap-around: 7/8 is 1/8 from 0 on the circle for the integer lattice.
        let d = circle_lattice_distance(&rat(7, 8), &BigInt::from(1));
        assert_eq!(d, rat(1, 8));
    }

    #[test]
    fn curve_scale_reduces_each_axis() {
        let p = TorusPoint::new(alloc::vec![rat(1, 3), rat(1, 9)]).unwrap();
        let q = p.curve_scale(3);
        assert!(q.coord(1).is_zero());
        assert!(q.coord(2).is_zero());
    }
}
