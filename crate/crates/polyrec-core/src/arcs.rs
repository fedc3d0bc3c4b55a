//! Rational-arc geometry: the universal denominator q_η, major box
//! families, their unions, nested-box annuli and pulled-back annuli, the
//! window-overlap count, and the trapped-coordinate witness.

use alloc::vec::Vec;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::torus::{circle_lattice_distance, Rat, TorusPoint};
use crate::weyl::t_lambda;

/// Largest allowed `⌊η^(-k)⌋` before q_η stops being practical to hold.
pub const MAX_LCM_RANGE: u64 = 10_000;

/// `⌊η^(-k)⌋` computed exactly from the rational `η ∈ (0, 1)`.
pub fn eta_inv_k_floor(eta: &Rat, k: usize) -> Result<u64> {
    if eta <= &Rat::zero() || eta >= &Rat::one() {
        return Err(Error::Contract("η must lie in (0, 1)".into()));
    }
    // A reduced positive rational keeps both parts positive.
    let num = eta.numer().pow(k as u32);
    let den = eta.denom().pow(k as u32);
    (den / num)
        .to_u64()
        .ok_or_else(|| Error::Resource("⌊η^(-k)⌋ exceeds the machine range".into()))
}

/// `lcm{1, ..., ⌊η^(-k)⌋}` in exact big-integer arithmetic.
pub fn q_eta(eta: &Rat, k: usize) -> Result<BigInt> {
    let r = eta_inv_k_floor(eta, k)?;
    if r > MAX_LCM_RANGE {
        return Err(Error::Resource(alloc::format!(
            "⌊η^(-k)⌋ = {r} exceeds the lcm range cap {MAX_LCM_RANGE}"
        )));
    }
    let mut q = BigInt::one();
    for i in 2..=r {
        q = q.lcm(&BigInt::from(i));
    }
    Ok(q)
}

/// Exact circle distance from `α_j` to the nearest point of `(1/q^j)Z`.
pub fn box_distance(alpha: &TorusPoint, q: &BigInt, j: usize) -> Rat {
    let s = q.pow(j as u32);
    circle_lattice_distance(alpha.coord(j), &s)
}

/// Family of boxes centered on the nonisotropic lattice `a_j / q^j` with
/// per-axis radii `1/L^j`.
#[derive(Clone, Debug, PartialEq)]
pub struct BoxFamily {
    q: BigInt,
    l: Rat,
    k: usize,
}

impl BoxFamily {
    /// Builds the family; `q >= 1` and `L > 0` required.
    pub fn new(q: BigInt, l: Rat, k: usize) -> Result<Self> {
        if q < BigInt::one() {
            return Err(Error::Contract("box denominator q must be >= 1".into()));
        }
        if l <= Rat::zero() {
            return Err(Error::Contract("box scale L must be positive".into()));
        }
        if k < 1 {
            return Err(Error::Contract("box dimension must be >= 1".into()));
        }
        Ok(BoxFamily { q, l, k })
    }

    /// Denominator `q`.
    pub fn q(&self) -> &BigInt {
        &self.q
    }

    /// Scale `L`.
    pub fn l(&self) -> &Rat {
        &self.l
    }

    /// Dimension `k`.
    pub fn dim(&self) -> usize {
        self.k
    }

    /// Per-axis half-width `1/L^j`.
    pub fn half_width(&self, j: usize) -> Rat {
        Rat::one() / self.l.pow(j as i32)
    }

    /// True when some axis has half-width above 1/2, i.e. the family is all
    /// of the torus.
    pub fn is_degenerate(&self) -> bool {
        (1..=self.k).any(|j| self.half_width(j) > Rat::new(BigInt::one(), BigInt::from(2)))
    }
}

/// True iff every axis of `α` is within the family's per-axis radius of the
/// `(1/q^j)Z` lattice (closed boxes, exact rational comparisons).
pub fn in_major_box(alpha: &TorusPoint, fam: &BoxFamily) -> bool {
    (1..=fam.k).all(|j| box_distance(alpha, &fam.q, j) <= fam.half_width(j))
}

/// True iff some `q ∈ [1, ⌊η^(-k)⌋]` puts every axis of `α` within
/// `1/(η^k μ^j)` of the `(1/q)Z` lattice.
///
/// The axis lattice denominator here is `q` itself (not `q^j`), unlike the
/// box families above; the two definitions are intentionally asymmetric.
#[allow(non_snake_case)]
pub fn in_frak_M(alpha: &TorusPoint, eta: &Rat, mu: &BigInt, k: usize) -> bool {
    let Ok(r) = eta_inv_k_floor(eta, k) else {
        return false;
    };
    let eta_k = eta.pow(k as i32);
    let radii: Vec<Rat> = (1..=k)
        .map(|j| Rat::one() / (&eta_k * Rat::from_integer(mu.pow(j as u32))))
        .collect();
    'outer: for q in 1..=r {
        let qb = BigInt::from(q);
        for j in 1..=k {
            if circle_lattice_distance(alpha.coord(j), &qb) > radii[j - 1] {
                continue 'outer;
            }
        }
        return true;
    }
    false
}

/// Parameter bundle for one annulus: `η`, dimension, `q_η`, and the window
/// `(λ, μ)` with `1 <= μ <= λ`.
#[derive(Clone, Debug)]
pub struct ArcSystem {
    eta: Rat,
    k: usize,
    r: u64,
    q: BigInt,
    lambda: BigInt,
    mu: BigInt,
}

impl ArcSystem {
    /// Builds the system, computing `q_η` and validating `1 <= μ <= λ`.
    pub fn new(eta: Rat, k: usize, lambda: BigInt, mu: BigInt) -> Result<Self> {
        let r = eta_inv_k_floor(&eta, k)?;
        let q = q_eta(&eta, k)?;
        if mu < BigInt::one() {
            return Err(Error::Contract("μ must be >= 1".into()));
        }
        if mu > lambda {
            return Err(Error::Contract("window parameters need μ <= λ".into()));
        }
        Ok(ArcSystem {
            eta,
            k,
            r,
            q,
            lambda,
            mu,
        })
    }

    /// `η`.
    pub fn eta(&self) -> &Rat {
        &self.eta
    }

    /// Dimension `k`.
    pub fn dim(&self) -> usize {
        self.k
    }

    /// `⌊η^(-k)⌋`.
    pub fn lcm_range(&self) -> u64 {
        self.r
    }

    /// The universal denominator `q_η`.
    pub fn q(&self) -> &BigInt {
        &self.q
    }

    /// Window offset `λ`.
    pub fn lambda(&self) -> &BigInt {
        &self.lambda
    }

    /// Window length `μ`.
    pub fn mu(&self) -> &BigInt {
        &self.mu
    }

    /// Outer family: scale `η^k μ` (the larger radii).
    pub fn outer_family(&self) -> Result<BoxFamily> {
        let l = self.eta.pow(self.k as i32) * Rat::from_integer(self.mu.clone());
        BoxFamily::new(self.q.clone(), l, self.k)
    }

    /// Inner (removed) family: scale `η^(-k) λ` (the smaller radii).
    pub fn inner_family(&self) -> Result<BoxFamily> {
        let l = Rat::from_integer(self.lambda.clone()) / self.eta.pow(self.k as i32);
        BoxFamily::new(self.q.clone(), l, self.k)
    }
}

fn families_checked(sys: &ArcSystem) -> Result<(BoxFamily, BoxFamily)> {
    let outer = sys.outer_family()?;
    let inner = sys.inner_family()?;
    if outer.is_degenerate() || inner.is_degenerate() {
        return Err(Error::Contract(
            "degenerate box family: a half-width exceeds 1/2, the annulus is meaningless".into(),
        ));
    }
    Ok((outer, inner))
}

/// Membership in the annulus: inside the outer family, outside the closed
/// inner family.
pub fn in_omega(alpha: &TorusPoint, sys: &ArcSystem) -> Result<bool> {
    if alpha.dim() != sys.k {
        return Err(Error::Contract("point dimension mismatch".into()));
    }
    let (outer, inner) = families_checked(sys)?;
    Ok(in_major_box(alpha, &outer) && !in_major_box(alpha, &inner))
}

/// Membership of `T_λ α` in the annulus (the pulled-back region).
pub fn in_pulled_back_omega(alpha: &TorusPoint, sys: &ArcSystem) -> Result<bool> {
    if alpha.dim() != sys.k {
        return Err(Error::Contract("point dimension mismatch".into()));
    }
    let t = t_lambda(sys.k, &sys.lambda)?;
    in_omega(&t.apply(alpha)?, sys)
}

/// Number of windows `(λ_j, μ_j)` whose pulled-back annulus contains `α`.
///
/// Preconditions: `μ_1 >= η^(-k) q_η` and the lacunary chain
/// `μ_j <= λ_j <= (1/3) η^(2k) μ_(j+1)`; a violation reports the failing
/// window index (1-based).
pub fn overlap_count(
    alpha: &TorusPoint,
    eta: &Rat,
    windows: &[(BigInt, BigInt)],
) -> Result<usize> {
    if windows.is_empty() {
        return Err(Error::Contract("need at least one window".into()));
    }
    let k = alpha.dim();
    let q = q_eta(eta, k)?;
    let eta_k = eta.pow(k as i32);
    let min_mu = Rat::from_integer(q.clone()) / &eta_k;
    if Rat::from_integer(windows[0].1.clone()) < min_mu {
        return Err(Error::Contract(
            "window 1 violates μ_1 >= η^(-k) q_η".into(),
        ));
    }
    let third_eta_2k = eta.pow(2 * k as i32) / Rat::from_integer(BigInt::from(3));
    for (idx, (lambda, mu)) in windows.iter().enumerate() {
        if mu > lambda {
            return Err(Error::Contract(alloc::format!(
                "window {} violates μ <= λ",
                idx + 1
            )));
        }
        if idx + 1 < windows.len() {
            let bound = &third_eta_2k * Rat::from_integer(windows[idx + 1].1.clone());
            if Rat::from_integer(lambda.clone()) > bound {
                return Err(Error::Contract(alloc::format!(
                    "window {} violates λ_j <= (1/3) η^(2k) μ_(j+1)",
                    idx + 1
                )));
            }
        }
    }
    let mut count = 0;
    for (lambda, mu) in windows {
        let sys = ArcSystem::new(eta.clone(), k, lambda.clone(), mu.clone())?;
        if in_pulled_back_omega(alpha, &sys)? {
            count += 1;
        }
    }
    Ok(count)
}

/// A trapped axis: its index and the two-sided distance bounds it satisfies.
#[derive(Clone, Debug, PartialEq)]
pub struct TrappedWitness {
    /// Axis index `i`, 1-based.
    pub axis: usize,
    /// Lower bound `(1/2)(η^k/λ)^i`.
    pub lower: Rat,
    /// Upper bound `(3/2)(1/(η^k μ))^i`.
    pub upper: Rat,
    /// The exact distance `|α_i - a/q_η^i|` realized.
    pub distance: Rat,
}

/// If `α` lies in the pulled-back annulus, finds an axis whose distance to
/// the `(1/q_η^i)Z` lattice lies within the stated two-sided bounds; `None`
/// when `α` is outside the region. Requires `η < 1/(4k^2)`.
pub fn trapped_index(alpha: &TorusPoint, sys: &ArcSystem) -> Result<Option<TrappedWitness>> {
    let k = sys.k;
    let bound = Rat::new(BigInt::one(), BigInt::from(4 * k as u64 * k as u64));
    if sys.eta >= bound {
        return Err(Error::Contract(alloc::format!(
            "trapped-axis bounds need η < 1/(4k^2) = 1/{}",
            4 * k * k
        )));
    }
    if !in_pulled_back_omega(alpha, sys)? {
        return Ok(None);
    }
    let eta_k = sys.eta.pow(k as i32);
    let half = Rat::new(BigInt::one(), BigInt::from(2));
    let three_half = Rat::new(BigInt::from(3), BigInt::from(2));
    let lo_base = &eta_k / Rat::from_integer(sys.lambda.clone());
    let up_base = Rat::one() / (&eta_k * Rat::from_integer(sys.mu.clone()));
    for i in 1..=k {
        let d = box_distance(alpha, &sys.q, i);
        let lower = &half * lo_base.pow(i as i32);
        let upper = &three_half * up_base.pow(i as i32);
        if d >= lower && d <= upper {
            return Ok(Some(TrappedWitness {
                axis: i,
                lower,
                upper,
                distance: d,
            }));
        }
    }
    Ok(None)
}
