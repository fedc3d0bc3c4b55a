//! Lattice-smooth cutoffs and the three-part decomposition built on them:
//! an exact-rational bump whose transform certifies box support, the
//! sheared cutoff acting along the moment-curve shear, the
//! divisibility-restricted counting functional, and a two-branch dichotomy
//! verifier combining shift counts with annulus Fourier mass.

use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand_core::{RngCore, SeedableRng};

use crate::arcs::{q_eta, ArcSystem};
use crate::error::{Error, Result};
use crate::grid::GridSet;
use crate::spectral::{box_region_mass, BoxRegion};
use crate::torus::{rat_to_f64, Rat, TorusPoint};
use crate::weyl::{t_lambda, weyl_s_div};

/// Order of the base spline `b`; the bump is `w = (b ⋆ b) / (b ⋆ b)(0)`.
const BASE_ORDER: u32 = 4;
/// Resolution of the cached space-side samples (steps per unit).
const CACHE_STEPS: u32 = 64;

/// Centered cardinal B-spline `M_n` at an exact rational argument, with the
/// midpoint convention `M_1(±1/2) = 1/2` so the recursion reproduces the
/// continuous values of every higher order.
fn bspline_rat(n: u32, x: &Rat) -> Rat {
    let half_support = Rat::new(BigInt::from(n), BigInt::from(2));
    if x.abs() >= half_support && n > 1 {
        return Rat::zero();
    }
    if n == 1 {
        let half = Rat::new(BigInt::one(), BigInt::from(2));
        let a = x.abs();
        return if a < half {
            Rat::one()
        } else if a == half {
            half
        } else {
            Rat::zero()
        };
    }
    let half = Rat::new(BigInt::one(), BigInt::from(2));
    let left = bspline_rat(n - 1, &(x + &half));
    let right = bspline_rat(n - 1, &(x - &half));
    ((&half_support + x) * left + (&half_support - x) * right)
        / Rat::from_integer(BigInt::from(n - 1))
}

/// Float mirror of `bspline_rat` for quadrature paths.
fn bspline_f64(n: u32, x: f64) -> f64 {
    let half_support = n as f64 / 2.0;
    if libm::fabs(x) >= half_support && n > 1 {
        return 0.0;
    }
    if n == 1 {
        let a = libm::fabs(x);
        return if a < 0.5 {
            1.0
        } else if a == 0.5 {
            0.5
        } else {
            0.0
        };
    }
    let left = bspline_f64(n - 1, x + 0.5);
    let right = bspline_f64(n - 1, x - 0.5);
    ((half_support + x) * left + (half_support - x) * right) / (n - 1) as f64
}

/// The one-dimensional bump pair: frequency side `w` (exact rational,
/// support `[-1, 1]`, `w(0) = 1`, values in `[0, 1]` by the convolution
/// construction) and space side `w_check >= 0` with a closed power-of-sinc
/// form, truncated where its envelope drops below 1e-12.
#[derive(Clone, Debug)]
pub struct CutoffProfile {
    p: u32,
    m2p_zero: Rat,
    m2p_zero_f64: f64,
    truncation_radius: u32,
    space_cache: Vec<f64>,
}

impl CutoffProfile {
    /// The standard profile: base spline order 4.
    pub fn standard() -> Self {
        let p = BASE_ORDER;
        let m2p_zero = bspline_rat(2 * p, &Rat::zero());
        let m2p_zero_f64 = rat_to_f64(&m2p_zero);
        // Envelope of the space side is (p / (π x))^(2p) / (p M_(2p)(0));
        // truncate at the first integer radius where it is below 1e-12.
        let mut radius = 1u32;
        loop {
            let env = libm::pow(
                p as f64 / (core::f64::consts::PI * radius as f64),
                2.0 * p as f64,
            ) / (p as f64 * m2p_zero_f64);
            if env < 1e-12 {
                break;
            }
            radius += 1;
        }
        let mut profile = CutoffProfile {
            p,
            m2p_zero,
            m2p_zero_f64,
            truncation_radius: radius,
            space_cache: Vec::new(),
        };
        let samples = radius * CACHE_STEPS + 1;
        let cache = (0..samples)
            .map(|i| profile.space_value(i as f64 / CACHE_STEPS as f64))
            .collect();
        profile.space_cache = cache;
        profile
    }

    /// Base spline order `p`.
    pub fn order(&self) -> u32 {
        self.p
    }

    /// `M_(2p)(0)`, the space-side normalizer, exact.
    pub fn center_value(&self) -> &Rat {
        &self.m2p_zero
    }

    /// Radius beyond which the space side is treated as zero.
    pub fn truncation_radius(&self) -> u32 {
        self.truncation_radius
    }

    /// Frequency-side bump at an exact rational point.
    pub fn w(&self, x: &Rat) -> Rat {
        if x.abs() >= Rat::one() {
            return Rat::zero();
        }
        let arg = x * Rat::from_integer(BigInt::from(self.p));
        bspline_rat(2 * self.p, &arg) / &self.m2p_zero
    }

    /// Float mirror of `w`.
    pub fn w_f64(&self, x: f64) -> f64 {
        if libm::fabs(x) >= 1.0 {
            return 0.0;
        }
        bspline_f64(2 * self.p, self.p as f64 * x) / self.m2p_zero_f64
    }

    fn space_value(&self, x: f64) -> f64 {
        let t = core::f64::consts::PI * x / self.p as f64;
        let s = if libm::fabs(t) < 1e-8 {
            1.0 - t * t / 6.0
        } else {
            libm::sin(t) / t
        };
        libm::pow(s, 2.0 * self.p as f64) / (self.p as f64 * self.m2p_zero_f64)
    }

    /// Space-side profile (inverse transform of `w`): nonnegative, even,
    /// zero beyond the truncation radius.
    pub fn w_check(&self, x: f64) -> f64 {
        let a = libm::fabs(x);
        if a > self.truncation_radius as f64 {
            return 0.0;
        }
        self.space_value(a)
    }

    /// Cached space-side sample near `x`, linearly interpolated; same
    /// truncation convention as `w_check`.
    pub fn w_check_cached(&self, x: f64) -> f64 {
        let a = libm::fabs(x);
        if a > self.truncation_radius as f64 {
            return 0.0;
        }
        let pos = a * CACHE_STEPS as f64;
        let i = libm::floor(pos) as usize;
        if i + 1 >= self.space_cache.len() {
            return self.space_cache[self.space_cache.len() - 1];
        }
        let frac = pos - i as f64;
        self.space_cache[i] * (1.0 - frac) + self.space_cache[i + 1] * frac
    }
}

/// A lattice-normalized cutoff: space side supported on the lattice
/// `{(q ℓ_1, q^2 ℓ_2, ..., q^k ℓ_k)}` (or its image under the transpose
/// shear when present), frequency side supported exactly on the box family
/// with denominators `q^j` and radii `1/L^j`.
#[derive(Clone, Debug)]
pub struct LatticeCutoff {
    q: BigInt,
    l: Rat,
    k: usize,
    shear: Option<BigInt>,
    profile: CutoffProfile,
}

impl LatticeCutoff {
    /// Requires `q >= 1` and `L >= 2q`: the spacing bound keeps the box
    /// family disjoint and the frequency side within `[0, 1]` with exact
    /// unit normalization at the origin.
    pub fn new(q: BigInt, l: Rat, k: usize, profile: &CutoffProfile) -> Result<Self> {
        if k < 1 {
            return Err(Error::Contract("dimension must be >= 1".into()));
        }
        if q < BigInt::one() {
            return Err(Error::Contract("lattice base q must be >= 1".into()));
        }
        if l < Rat::from_integer(&q * BigInt::from(2)) {
            return Err(Error::Contract(alloc::format!(
                "scale L = {l} must be at least 2q = {}",
                &q * BigInt::from(2)
            )));
        }
        Ok(LatticeCutoff {
            q,
            l,
            k,
            shear: None,
            profile: profile.clone(),
        })
    }

    /// Attaches the shear parameter `λ >= 1`, turning φ into ψ.
    pub fn with_shear(mut self, lambda: BigInt) -> Result<Self> {
        if lambda < BigInt::one() {
            return Err(Error::Contract("shear λ must be >= 1".into()));
        }
        self.shear = Some(lambda);
        Ok(self)
    }

    /// Lattice base `q`.
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

    /// The shear parameter, if this is a ψ cutoff.
    pub fn shear(&self) -> Option<&BigInt> {
        self.shear.as_ref()
    }

    /// Normalization `(q/L)^(k(k+1)/2)`, exact.
    fn normalizer(&self) -> Rat {
        let base = Rat::from_integer(self.q.clone()) / &self.l;
        base.pow((self.k * (self.k + 1) / 2) as i32)
    }

    /// Space side on integer points, ignoring any shear: zero off the
    /// lattice, otherwise the normalized product of space-profile samples.
    pub fn phi(&self, x: &[i64]) -> Result<f64> {
        if x.len() != self.k {
            return Err(Error::Contract("point dimension mismatch".into()));
        }
        let big: Vec<BigInt> = x.iter().map(|&v| BigInt::from(v)).collect();
        Ok(self.phi_big(&big))
    }

    fn phi_big(&self, x: &[BigInt]) -> f64 {
        let mut value = rat_to_f64(&self.normalizer());
        for (j, xj) in x.iter().enumerate() {
            let qj = self.q.pow(j as u32 + 1);
            if !xj.mod_floor(&qj).is_zero() {
                return 0.0;
            }
            let arg = Rat::from_integer(xj.clone()) / self.l.pow(j as i32 + 1);
            if arg.abs() > Rat::from_integer(BigInt::from(self.profile.truncation_radius)) {
                return 0.0;
            }
            value *= self.profile.w_check(rat_to_f64(&arg));
        }
        value
    }

    /// Space side of ψ: nonzero only on the image of the lattice under the
    /// transpose shear, where it equals φ at the preimage.
    pub fn psi(&self, m: &[i64]) -> Result<f64> {
        if m.len() != self.k {
            return Err(Error::Contract("point dimension mismatch".into()));
        }
        match &self.shear {
            None => self.phi(m),
            Some(lambda) => {
                let t = t_lambda(self.k, lambda)?;
                let big: Vec<BigInt> = m.iter().map(|&v| BigInt::from(v)).collect();
                // m = Tᵀ x has the exact integer solution x = (T⁻¹)ᵀ m.
                let x = t.inverse_transpose_apply(&big)?;
                Ok(self.phi_big(&x))
            }
        }
    }

    /// Exact frequency side, no shear: the product over axes of the bump
    /// sum over the lattice points `a/q^j` within `1/L^j` of the
    /// coordinate. Zero exactly outside the box family.
    pub fn phi_hat(&self, alpha: &TorusPoint) -> Result<Rat> {
        if alpha.dim() != self.k {
            return Err(Error::Contract("point dimension mismatch".into()));
        }
        let mut product = Rat::one();
        for j in 1..=self.k {
            let axis = self.axis_hat(j, alpha.coord(j));
            if axis.is_zero() {
                return Ok(Rat::zero());
            }
            product *= axis;
        }
        Ok(product)
    }

    /// One axis of `phi_hat`: `Σ_a w(L^j (α_j - a/q^j))` over the at most
    /// two integers `a` in range.
    fn axis_hat(&self, j: usize, coord: &Rat) -> Rat {
        let qj = Rat::from_integer(self.q.pow(j as u32));
        let lj = self.l.pow(j as i32);
        let radius = Rat::one() / &lj;
        let lo = ((coord - &radius) * &qj).ceil().to_integer();
        let hi = ((coord + &radius) * &qj).floor().to_integer();
        let mut sum = Rat::zero();
        let mut a = lo;
        while a <= hi {
            let dist = coord - Rat::new(a.clone(), self.q.pow(j as u32));
            sum += self.profile.w(&(dist * &lj));
            a += BigInt::one();
        }
        sum
    }

    /// Float mirror of `phi_hat` for quadrature loops: identical translate
    /// enumeration, float bump values.
    pub fn phi_hat_approx(&self, alpha: &TorusPoint) -> Result<f64> {
        if alpha.dim() != self.k {
            return Err(Error::Contract("point dimension mismatch".into()));
        }
        let mut product = 1.0;
        for j in 1..=self.k {
            let coord = alpha.coord(j);
            let qj = Rat::from_integer(self.q.pow(j as u32));
            let lj = self.l.pow(j as i32);
            let radius = Rat::one() / &lj;
            let lo = ((coord - &radius) * &qj).ceil().to_integer();
            let hi = ((coord + &radius) * &qj).floor().to_integer();
            let mut sum = 0.0;
            let mut a = lo;
            while a <= hi {
                let dist = coord - Rat::new(a.clone(), self.q.pow(j as u32));
                sum += self.profile.w_f64(rat_to_f64(&(dist * &lj)));
                a += BigInt::one();
            }
            if sum == 0.0 {
                return Ok(0.0);
            }
            product *= sum;
        }
        Ok(product)
    }

    /// Exact frequency side of ψ: `φ̂` at the exact-rational image `T_λ α`
    /// (or at `α` itself when no shear is attached).
    pub fn psi_hat(&self, alpha: &TorusPoint) -> Result<Rat> {
        match &self.shear {
            None => self.phi_hat(alpha),
            Some(lambda) => {
                let t = t_lambda(self.k, lambda)?;
                self.phi_hat(&t.apply(alpha)?)
            }
        }
    }

    /// Float mirror of `psi_hat`.
    pub fn psi_hat_approx(&self, alpha: &TorusPoint) -> Result<f64> {
        match &self.shear {
            None => self.phi_hat_approx(alpha),
            Some(lambda) => {
                let t = t_lambda(self.k, lambda)?;
                self.phi_hat_approx(&t.apply(alpha)?)
            }
        }
    }
}

/// Dense real values on the cube `[1, M]^k`, axis 1 fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct CubeValues {
    k: usize,
    m: u64,
    values: Vec<f64>,
}

impl CubeValues {
    /// Wraps a dense value array; the length must be `M^k`.
    pub fn new(k: usize, m: u64, values: Vec<f64>) -> Result<Self> {
        if k < 1 || k > crate::grid::MAX_DIMENSION {
            return Err(Error::Contract("unsupported cube dimension".into()));
        }
        let cells = m
            .checked_pow(k as u32)
            .ok_or(Error::Overflow("cube cell count"))?;
        if values.len() as u64 != cells {
            return Err(Error::Contract(alloc::format!(
                "expected {cells} values for side {m}, dimension {k}, got {}",
                values.len()
            )));
        }
        Ok(CubeValues { k, m, values })
    }

    /// All-zero cube.
    pub fn zeros(k: usize, m: u64) -> Result<Self> {
        let cells = m
            .checked_pow(k as u32)
            .ok_or(Error::Overflow("cube cell count"))?;
        CubeValues::new(k, m, vec![0.0; cells as usize])
    }

    /// Dimension `k`.
    pub fn dimension(&self) -> usize {
        self.k
    }

    /// Side `M`.
    pub fn side(&self) -> u64 {
        self.m
    }

    /// The dense values, axis 1 fastest.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Sum of all values.
    pub fn total(&self) -> f64 {
        let mut t = 0.0;
        for &v in &self.values {
            t += v;
        }
        t
    }

    /// Value at 1-based coordinates, zero outside the cube.
    pub fn get(&self, pt: &[i64]) -> f64 {
        if pt.len() != self.k {
            return 0.0;
        }
        let mut idx: u64 = 0;
        let mut stride: u64 = 1;
        for &c in pt {
            if c < 1 || c > self.m as i64 {
                return 0.0;
            }
            idx += (c - 1) as u64 * stride;
            stride *= self.m;
        }
        self.values[idx as usize]
    }
}

/// A `[0, 1]`-valued weight on the cube together with its mean density.
#[derive(Clone, Debug)]
pub struct WeightedFunction {
    cube: CubeValues,
    mean: f64,
}

impl WeightedFunction {
    /// Validates the range `[0, 1]` and records the mean.
    pub fn from_values(k: usize, m: u64, values: Vec<f64>) -> Result<Self> {
        for &v in &values {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Contract(alloc::format!(
                    "weight {v} outside [0, 1]"
                )));
            }
        }
        let cube = CubeValues::new(k, m, values)?;
        let mean = cube.total() / cube.values.len() as f64;
        Ok(WeightedFunction { cube, mean })
    }

    /// The indicator weight of a grid set.
    pub fn from_indicator(b: &GridSet) -> Self {
        let cube = CubeValues {
            k: b.dimension(),
            m: b.side(),
            values: b.indicator_f64(),
        };
        let mean = cube.total() / cube.values.len() as f64;
        WeightedFunction { cube, mean }
    }

    /// Mean density δ.
    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// The underlying cube.
    pub fn cube(&self) -> &CubeValues {
        &self.cube
    }
}

/// `(q/μ) Σ_(n in (λ, λ+μ], q | n) Σ_m g(m) h(m - γ(n))`, summed in fixed
/// ascending order; γ components beyond the cube contribute zero by
/// support, never an error.
pub fn lambda_count(g: &CubeValues, h: &CubeValues, q: u64, lambda: u64, mu: u64) -> Result<f64> {
    if g.dimension() != h.dimension() || g.side() != h.side() {
        return Err(Error::Contract("cubes must share dimension and side".into()));
    }
    if q < 1 {
        return Err(Error::Contract("divisor q must be >= 1".into()));
    }
    if mu < 1 {
        return Err(Error::Contract("window length μ must be >= 1".into()));
    }
    let k = g.dimension();
    let m = g.side();
    let mut total = 0.0;
    for n in (lambda + 1)..=(lambda + mu) {
        if n % q != 0 {
            continue;
        }
        // γ(n) componentwise with overflow treated as out-of-cube.
        let mut shift: Vec<u64> = Vec::with_capacity(k);
        let mut in_reach = true;
        for j in 1..=k {
            match (n as u128).checked_pow(j as u32) {
                Some(p) if p < m as u128 => shift.push(p as u64),
                _ => {
                    in_reach = false;
                    break;
                }
            }
        }
        if !in_reach {
            continue;
        }
        // Σ_m g(m) h(m - γ): iterate m over the clipped box where both
        // factors can be nonzero; the flat offset of -γ is constant.
        let mut stride: u64 = 1;
        let mut offset: u64 = 0;
        for &s in &shift {
            offset += s * stride;
            stride *= m;
        }
        let mut sum = 0.0;
        let mut pt: Vec<u64> = shift.iter().map(|&s| s + 1).collect();
        let mut idx: u64 = 0;
        stride = 1;
        for &c in pt.iter() {
            idx += (c - 1) * stride;
            stride *= m;
        }
        loop {
            sum += g.values[idx as usize] * h.values[(idx - offset) as usize];
            let mut done = true;
            let mut axis_stride: u64 = 1;
            for axis in 0..k {
                if pt[axis] < m {
                    pt[axis] += 1;
                    idx += axis_stride;
                    done = false;
                    break;
                }
                // Reset to the clipped low end of this axis.
                idx -= (pt[axis] - shift[axis] - 1) * axis_stride;
                pt[axis] = shift[axis] + 1;
                axis_stride *= m;
            }
            if done {
                break;
            }
        }
        total += sum;
    }
    Ok(q as f64 * total / mu as f64)
}

/// `f ⋆ ψ` on the cube: the sum runs over the cutoff's (sheared) lattice
/// support, truncated at the profile radius and clipped to displacements
/// that can reach the cube; values outside the cube read as zero.
pub fn smooth_convolve(f: &CubeValues, cut: &LatticeCutoff) -> Result<CubeValues> {
    let k = f.dimension();
    if cut.dim() != k {
        return Err(Error::Contract("cutoff dimension mismatch".into()));
    }
    let m = f.side() as i64;
    // Transpose-shear rows: d_i = Σ_(j <= i) C(i, j) λ^(i-j) x_j. Entries
    // too large for i128 force x_j = 0 on that branch, handled by pruning.
    let rows: Vec<Vec<Option<i128>>> = match cut.shear() {
        Some(lambda) => {
            let t = t_lambda(k, lambda)?;
            (1..=k)
                .map(|i| (1..=i).map(|j| t.entry(j, i).to_i128()).collect())
                .collect()
        }
        None => (1..=k)
            .map(|i| (1..=i).map(|j| if j == i { Some(1) } else { Some(0) }).collect())
            .collect(),
    };
    // Per-axis truncation bound floor(R_w L^j) and lattice step q^j.
    let radius = Rat::from_integer(BigInt::from(cut.profile.truncation_radius));
    let mut trunc: Vec<i128> = Vec::with_capacity(k);
    let mut step: Vec<Option<i128>> = Vec::with_capacity(k);
    for j in 1..=k {
        let bound = (&radius * cut.l().pow(j as i32)).floor().to_integer();
        trunc.push(bound.to_i128().unwrap_or(i128::MAX));
        step.push(cut.q().pow(j as u32).to_i128());
    }
    let norm = rat_to_f64(&cut.normalizer());
    let mut out = CubeValues::zeros(k, f.side())?;

    // Depth-first over axes: choose x_j, accumulate the displacement
    // prefixes, prune when d_j cannot reach the cube.
    struct Frame<'a> {
        f: &'a CubeValues,
        out: &'a mut CubeValues,
        cut: &'a LatticeCutoff,
        rows: &'a [Vec<Option<i128>>],
        trunc: &'a [i128],
        step: &'a [Option<i128>],
        m: i64,
        k: usize,
        norm: f64,
        x: Vec<i128>,
        d: Vec<i128>,
    }

    fn descend(fr: &mut Frame, depth: usize, weight: f64) {
        let m = fr.m as i128;
        if depth == fr.k {
            // Accumulate out(m) += weight * f(m - d) over the clipped box.
            let mut lo: Vec<i64> = Vec::with_capacity(fr.k);
            let mut hi: Vec<i64> = Vec::with_capacity(fr.k);
            for i in 0..fr.k {
                let d = fr.d[i] as i64;
                let l = 1 + d.max(0);
                let h = fr.m + d.min(0);
                if l > h {
                    return;
                }
                lo.push(l);
                hi.push(h);
            }
            let mut stride: u64 = 1;
            let mut dst: u64 = 0;
            let mut src_off: i64 = 0;
            for i in 0..fr.k {
                dst += (lo[i] - 1) as u64 * stride;
                src_off += fr.d[i] as i64 * stride as i64;
                stride *= fr.m as u64;
            }
            let mut pt = lo.clone();
            loop {
                let src = (dst as i64 - src_off) as usize;
                fr.out.values[dst as usize] += weight * fr.f.values[src];
                let mut done = true;
                let mut axis_stride: u64 = 1;
                for axis in 0..fr.k {
                    if pt[axis] < hi[axis] {
                        pt[axis] += 1;
                        dst += axis_stride;
                        done = false;
                        break;
                    }
                    dst -= (pt[axis] - lo[axis]) as u64 * axis_stride;
                    pt[axis] = lo[axis];
                    axis_stride *= fr.m as u64;
                }
                if done {
                    return;
                }
            }
        }
        // Offset of d_(depth+1) contributed by x_1..x_depth.
        let mut offset: i128 = 0;
        for j in 0..depth {
            match fr.rows[depth][j] {
                Some(c) => match c.checked_mul(fr.x[j]).and_then(|p| p.checked_add(offset)) {
                    Some(v) => offset = v,
                    None => return,
                },
                None => {
                    if fr.x[j] != 0 {
                        return;
                    }
                }
            }
        }
        let reach = m - 1;
        let lo_d = -reach - offset;
        let hi_d = reach - offset;
        let t = fr.trunc[depth];
        let lo = lo_d.max(-t);
        let hi = hi_d.min(t);
        if lo > hi {
            return;
        }
        let q_step = match fr.step[depth] {
            Some(s) => s,
            None => {
                // Lattice step beyond i128: only x = 0 can be in range.
                if lo <= 0 && 0 <= hi {
                    fr.x[depth] = 0;
                    fr.d[depth] = offset;
                    let lj = fr.cut.l().pow(depth as i32 + 1);
                    let arg = Rat::zero() / lj;
                    let w = fr.cut.profile.w_check(rat_to_f64(&arg));
                    descend(fr, depth + 1, weight * w);
                }
                return;
            }
        };
        let a_lo = lo.div_euclid(q_step) + i128::from(lo.rem_euclid(q_step) != 0);
        let a_hi = hi.div_euclid(q_step);
        let mut a = a_lo;
        while a <= a_hi {
            let x = a * q_step;
            fr.x[depth] = x;
            fr.d[depth] = offset + x;
            let arg = Rat::new(BigInt::from(x), BigInt::one()) / fr.cut.l().pow(depth as i32 + 1);
            let w = fr.cut.profile.w_check(rat_to_f64(&arg));
            if w != 0.0 {
                descend(fr, depth + 1, weight * w);
            }
            a += 1;
        }
    }

    let mut frame = Frame {
        f,
        out: &mut out,
        cut,
        rows: &rows,
        trunc: &trunc,
        step: &step,
        m,
        k,
        norm,
        x: vec![0; k],
        d: vec![0; k],
    };
    let start = frame.norm;
    descend(&mut frame, 0, start);
    Ok(out)
}

/// Splits `f` into the coarse average `f₁ = f ⋆ ψ_(q,L₁)`, the fine
/// remainder `f₂ = f - f ⋆ ψ_(q,L₂)`, and the band part
/// `f₃ = f ⋆ (ψ_(q,L₂) - ψ_(q,L₁))`; the three sum back to `f` exactly up
/// to float rounding. Requires `L₁ >= L₂`.
pub fn decompose(
    f: &WeightedFunction,
    q: &BigInt,
    l1: &Rat,
    l2: &Rat,
    shear: &BigInt,
    profile: &CutoffProfile,
) -> Result<(CubeValues, CubeValues, CubeValues)> {
    if l1 < l2 {
        return Err(Error::Contract("coarse scale L1 must be >= L2".into()));
    }
    let k = f.cube().dimension();
    let cut1 = LatticeCutoff::new(q.clone(), l1.clone(), k, profile)?.with_shear(shear.clone())?;
    let cut2 = LatticeCutoff::new(q.clone(), l2.clone(), k, profile)?.with_shear(shear.clone())?;
    let f1 = smooth_convolve(f.cube(), &cut1)?;
    let smooth2 = smooth_convolve(f.cube(), &cut2)?;
    let n = f.cube().values().len();
    let mut f2 = CubeValues::zeros(k, f.cube().side())?;
    let mut f3 = CubeValues::zeros(k, f.cube().side())?;
    for i in 0..n {
        f2.values[i] = f.cube().values[i] - smooth2.values[i];
        f3.values[i] = smooth2.values[i] - f1.values[i];
    }
    Ok((f1, f2, f3))
}

/// `max_m |a(m) - a(m - shift)|` with zero-extension outside the cube.
pub fn max_shift_deviation(a: &CubeValues, shift: &[i64]) -> f64 {
    let k = a.dimension();
    let m = a.side() as i64;
    let mut pt = vec![1i64; k];
    let mut max_dev = 0.0;
    loop {
        let here = a.get(&pt);
        let back: Vec<i64> = pt.iter().zip(shift).map(|(&c, &s)| c - s).collect();
        let dev = libm::fabs(here - a.get(&back));
        if dev > max_dev {
            max_dev = dev;
        }
        let mut done = true;
        for axis in 0..k {
            if pt[axis] < m {
                pt[axis] += 1;
                for e in pt.iter_mut().take(axis) {
                    *e = 1;
                }
                done = false;
                break;
            }
        }
        if done {
            return max_dev;
        }
    }
}

/// Uniform-grid average of `|f̂|^2 |ψ̂_fine - ψ̂_coarse|` with per-axis
/// power-of-two grid sizes; the transform table comes from one fast
/// transform, the cutoffs from their float frequency sides.
pub fn spectral_damping_quadrature(
    f: &CubeValues,
    fine: &LatticeCutoff,
    coarse: &LatticeCutoff,
    grid: &[u64],
) -> Result<f64> {
    let k = f.dimension();
    if fine.dim() != k || coarse.dim() != k || grid.len() != k {
        return Err(Error::Contract("dimension mismatch".into()));
    }
    let mut cells: u64 = 1;
    for &g in grid {
        if !g.is_power_of_two() {
            return Err(Error::Contract("grid sizes must be powers of two".into()));
        }
        cells = cells
            .checked_mul(g)
            .filter(|&c| c <= crate::spectral::DENSE_TABLE_BUDGET)
            .ok_or_else(|| Error::Resource("quadrature grid exceeds budget".into()))?;
    }
    if fine.shear() != coarse.shear() {
        return Err(Error::Contract("cutoffs must share the shear".into()));
    }
    let dims: Vec<usize> = grid.iter().map(|&g| g as usize).collect();
    let mut data = vec![num_complex::Complex64::new(0.0, 0.0); cells as usize];
    let m = f.side();
    let mut pt = vec![1u64; k];
    for &v in f.values() {
        let mut idx: u64 = 0;
        let mut stride: u64 = 1;
        for (j, &c) in pt.iter().enumerate() {
            idx += (c - 1) % grid[j] * stride;
            stride *= grid[j];
        }
        data[idx as usize] += num_complex::Complex64::new(v, 0.0);
        for axis in 0..k {
            if pt[axis] < m {
                pt[axis] += 1;
                for e in pt.iter_mut().take(axis) {
                    *e = 1;
                }
                break;
            }
        }
    }
    crate::fft::fft_nd(&mut data, &dims, false);
    let mut sum = 0.0;
    let mut point = vec![0u64; k];
    for z in data.iter() {
        let w = z.norm_sqr();
        if w != 0.0 {
            let coords: Vec<Rat> = point
                .iter()
                .zip(grid)
                .map(|(&t, &g)| Rat::new(BigInt::from(t), BigInt::from(g)))
                .collect();
            let alpha = TorusPoint::new(coords)?;
            let diff = fine.psi_hat_approx(&alpha)? - coarse.psi_hat_approx(&alpha)?;
            sum += w * libm::fabs(diff);
        }
        for axis in 0..k {
            if point[axis] + 1 < grid[axis] {
                point[axis] += 1;
                for e in point.iter_mut().take(axis) {
                    *e = 0;
                }
                break;
            }
        }
    }
    Ok(sum / cells as f64)
}

/// Sampled sup of `|1 - ψ̂(α)| |S_(λ,μ,q)(α)|` over seeded random points:
/// the whole-point error diagnostic.
pub fn wholepoint_sup(
    cut: &LatticeCutoff,
    lambda: u64,
    mu: u64,
    q: u64,
    samples: u32,
    seed: u64,
) -> Result<f64> {
    if samples < 1 {
        return Err(Error::Contract("need at least one sample".into()));
    }
    let k = cut.dim();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let den = BigInt::from(1u64 << 20);
    let mut sup = 0.0;
    for _ in 0..samples {
        let coords: Vec<Rat> = (0..k)
            .map(|_| Rat::new(BigInt::from(rng.next_u64() & ((1 << 20) - 1)), den.clone()))
            .collect();
        let alpha = TorusPoint::new(coords)?;
        let damp = 1.0 - cut.psi_hat_approx(&alpha)?;
        let s = weyl_s_div(lambda, mu, q, &alpha)?;
        let v = libm::fabs(damp) * s.norm();
        if v > sup {
            sup = v;
        }
    }
    Ok(sup)
}

/// `exp(-C ε^(-1) log ε^(-1))` snapped to an exact rational.
pub fn eta_epsilon(eps: &Rat, c: &Rat) -> Result<Rat> {
    if eps <= &Rat::zero() || eps >= &Rat::one() {
        return Err(Error::Contract("ε must lie in (0, 1)".into()));
    }
    if c <= &Rat::zero() {
        return Err(Error::Contract("constant C must be positive".into()));
    }
    let e = rat_to_f64(eps);
    let v = libm::exp(-rat_to_f64(c) / e * libm::log(1.0 / e));
    let snapped = Rat::from_float(v)
        .filter(|r| r > &Rat::zero())
        .ok_or_else(|| {
            Error::Resource(alloc::format!(
                "η({eps}) underflows to zero; supply η explicitly"
            ))
        })?;
    Ok(snapped)
}

/// One consecutive-pair comparison in the lacunary cutoff search.
#[derive(Clone, Debug)]
pub struct LacunaryStep {
    /// Index of the coarser η in the input sequence.
    pub index: usize,
    /// The coarser η.
    pub eta: Rat,
    /// Sampled sup of `|ψ̂_(next) - ψ̂_(this)|`.
    pub sup_difference: f64,
}

/// Result of the explicit pigeonhole search.
#[derive(Clone, Debug)]
pub struct LacunaryReport {
    /// One entry per consecutive pair.
    pub steps: Vec<LacunaryStep>,
    /// First pair index whose sampled sup is at most the bound.
    pub chosen: Option<usize>,
}

/// Walks a caller-supplied strictly decreasing η sequence, builds the
/// cutoff for each (`q = q_η`, `L = η^k μ`), and reports the sampled sup of
/// consecutive frequency-side differences, choosing the first pair under
/// `bound`. Samples mix uniform points with points planted inside the finer
/// cutoff's boxes, where the difference peaks.
pub fn lacunary_cutoff_search(
    etas: &[Rat],
    k: usize,
    mu: &BigInt,
    shear: Option<&BigInt>,
    bound: f64,
    samples: u32,
    seed: u64,
) -> Result<LacunaryReport> {
    if etas.len() < 2 {
        return Err(Error::Contract("need at least two η values".into()));
    }
    for pair in etas.windows(2) {
        if pair[1] >= pair[0] {
            return Err(Error::Contract("η sequence must strictly decrease".into()));
        }
    }
    let profile = CutoffProfile::standard();
    let mut cuts: Vec<LatticeCutoff> = Vec::with_capacity(etas.len());
    for eta in etas {
        if eta <= &Rat::zero() || eta >= &Rat::one() {
            return Err(Error::Contract("each η must lie in (0, 1)".into()));
        }
        let q = q_eta(eta, k)?;
        let l = eta.pow(k as i32) * Rat::from_integer(mu.clone());
        let mut cut = LatticeCutoff::new(q, l, k, &profile)?;
        if let Some(lambda) = shear {
            cut = cut.with_shear(lambda.clone())?;
        }
        cuts.push(cut);
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let den = BigInt::from(1u64 << 20);
    let mut steps = Vec::with_capacity(etas.len() - 1);
    let mut chosen = None;
    for i in 0..etas.len() - 1 {
        let coarse = &cuts[i];
        let finer = &cuts[i + 1];
        let mut sup = 0.0;
        for s in 0..samples {
            let alpha = if s % 2 == 0 {
                // Uniform random point.
                TorusPoint::new(
                    (0..k)
                        .map(|_| {
                            Rat::new(BigInt::from(rng.next_u64() & ((1 << 20) - 1)), den.clone())
                        })
                        .collect(),
                )?
            } else {
                // A point planted inside a random box of the finer family:
                // lattice center a_j / q^j plus a jitter below 1/(2 L^j).
                let coords = (1..=k)
                    .map(|j| {
                        let qj = finer.q().pow(j as u32);
                        let a = BigInt::from(rng.next_u64()).mod_floor(&qj);
                        let jitter_den = (Rat::from_integer(BigInt::from(2))
                            * finer.l().pow(j as i32))
                        .ceil()
                        .to_integer();
                        let t = BigInt::from(rng.next_u64() & ((1 << 10) - 1));
                        let jitter = Rat::new(t, BigInt::from(1u64 << 10) * jitter_den);
                        Rat::new(a, qj) + jitter
                    })
                    .collect();
                TorusPoint::new(coords)?
            };
            let point = match shear {
                Some(lambda) => t_lambda(k, lambda)?.apply(&alpha)?,
                None => alpha,
            };
            let diff = finer.phi_hat_approx(&point)? - coarse.phi_hat_approx(&point)?;
            let v = libm::fabs(diff);
            if v > sup {
                sup = v;
            }
        }
        steps.push(LacunaryStep {
            index: i,
            eta: etas[i].clone(),
            sup_difference: sup,
        });
        if chosen.is_none() && sup <= bound {
            chosen = Some(i);
        }
    }
    Ok(LacunaryReport { steps, chosen })
}

/// Shift-count branch of the dichotomy.
#[derive(Clone, Debug)]
pub struct BranchOne {
    /// Number of window shifts with `|B ∩ (B + γ(n))| > (δ^2 - ε) M^k`.
    pub count: u64,
    /// Required count (fraction of μ), exact.
    pub threshold: Rat,
    /// `count >= threshold`.
    pub holds: bool,
}

/// Fourier-mass branch of the dichotomy.
#[derive(Clone, Debug)]
pub struct BranchTwo {
    /// `∫ |1̂_B|^2` over the pulled-back annulus.
    pub mass: f64,
    /// `ε M^k / 10`.
    pub threshold: f64,
    /// `mass >= threshold`.
    pub holds: bool,
}

/// Both branches of the structure-versus-mass dichotomy for one instance.
#[derive(Clone, Debug)]
pub struct DichotomyReport {
    /// Shift-count branch.
    pub branch1: BranchOne,
    /// Annulus-mass branch.
    pub branch2: BranchTwo,
}

/// Tunable fractions of the dichotomy verifier.
#[derive(Clone, Debug)]
pub struct DichotomyConfig {
    /// Branch 1 holds when the qualifying count reaches this fraction of μ.
    pub branch1_fraction: Rat,
}

impl Default for DichotomyConfig {
    fn default() -> Self {
        DichotomyConfig {
            branch1_fraction: Rat::new(BigInt::one(), BigInt::from(2)),
        }
    }
}

/// Evaluates both branches with the default configuration.
pub fn dichotomy_report(
    b: &GridSet,
    eps: &Rat,
    lambda: u64,
    mu: u64,
    eta: &Rat,
) -> Result<DichotomyReport> {
    dichotomy_report_with(b, eps, lambda, mu, eta, &DichotomyConfig::default())
}

/// Branch 1 counts window shifts `n in (λ, λ+μ]` whose exact intersection
/// count clears `(δ^2 - ε) M^k`; branch 2 integrates `|1̂_B|^2` over the
/// pulled-back annulus of the (η, λ, μ) arc system and compares against
/// `ε M^k / 10`. Neither branch is asserted; both are reported.
pub fn dichotomy_report_with(
    b: &GridSet,
    eps: &Rat,
    lambda: u64,
    mu: u64,
    eta: &Rat,
    config: &DichotomyConfig,
) -> Result<DichotomyReport> {
    if eps <= &Rat::zero() || eps > &Rat::one() {
        return Err(Error::Contract("ε must lie in (0, 1]".into()));
    }
    let k = b.dimension();
    let m = b.side();
    // Arc system validates 1 <= μ <= λ and non-degenerate families.
    let sys = ArcSystem::new(
        eta.clone(),
        k,
        BigInt::from(lambda),
        BigInt::from(mu),
    )?;
    let cells = BigInt::from(m).pow(k as u32);
    let card = BigInt::from(b.cardinality());
    // count > (δ^2 - ε) M^k  ⇔  count·pd·M^k > card^2·pd - pn·M^(2k).
    let rhs = &card * &card * eps.denom() - eps.numer() * &cells * &cells;
    let mut count: u64 = 0;
    for n in (lambda + 1)..=(lambda + mu) {
        let overlap = match i64::try_from(n)
            .ok()
            .and_then(|n_i| crate::poly::curve_point(k, n_i).ok())
        {
            Some(shift) => b.shift_intersect_count(&shift).unwrap_or(0),
            // Shift beyond integer range cannot meet the cube.
            None => 0,
        };
        if BigInt::from(overlap) * eps.denom() * &cells > rhs {
            count += 1;
        }
    }
    let threshold = &config.branch1_fraction * Rat::from_integer(BigInt::from(mu));
    let branch1 = BranchOne {
        count,
        holds: Rat::from_integer(BigInt::from(count)) >= threshold,
        threshold,
    };
    let region = BoxRegion::pulled_back_annulus(&sys)?;
    let mass = box_region_mass(b, &region)?;
    let cells_f = rat_to_f64(&Rat::from_integer(cells));
    let threshold2 = rat_to_f64(eps) * cells_f / 10.0;
    let branch2 = BranchTwo {
        mass,
        threshold: threshold2,
        holds: mass >= threshold2,
    };
    Ok(DichotomyReport { branch1, branch2 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::torus::rat;

    fn uniform_cube(k: usize, m: u64, seed: u64) -> WeightedFunction {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let cells = m.pow(k as u32) as usize;
        let values: Vec<f64> = (0..cells)
            .map(|_| (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64)
            .collect();
        WeightedFunction::from_values(k, m, values).unwrap()
    }

    #[test]
    fn bspline_base_cases() {
        assert_eq!(bspline_rat(1, &rat(0, 1)), rat(1, 1));
        assert_eq!(bspline_rat(1, &rat(1, 2)), rat(1, 2));
        assert_eq!(bspline_rat(1, &rat(3, 4)), rat(0, 1));
        // Order 2 is the unit hat.
        assert_eq!(bspline_rat(2, &rat(0, 1)), rat(1, 1));
        assert_eq!(bspline_rat(2, &rat(1, 2)), rat(1, 2));
        assert_eq!(bspline_rat(2, &rat(1, 1)), rat(0, 1));
        // Known central value of the order-8 spline.
        assert_eq!(bspline_rat(8, &rat(0, 1)), rat(151, 315));
        assert_eq!(bspline_rat(8, &rat(4, 1)), rat(0, 1));
    }

    #[test]
    fn bump_invariants() {
        let p = CutoffProfile::standard();
        assert_eq!(p.w(&rat(0, 1)), rat(1, 1));
        assert_eq!(p.w(&rat(1, 1)), rat(0, 1));
        assert_eq!(p.w(&rat(-1, 1)), rat(0, 1));
        assert_eq!(p.w(&rat(9, 8)), rat(0, 1));
        for i in 0..=16 {
            let x = rat(i, 16);
            let v = p.w(&x);
            assert!(v >= rat(0, 1) && v <= rat(1, 1), "w({i}/16) = {v}");
            let sym = p.w(&rat(-i, 16));
            assert_eq!(v, sym);
            let f = p.w_f64(i as f64 / 16.0);
            assert!((crate::torus::rat_to_f64(&v) - f).abs() < 1e-12);
        }
    }

    #[test]
    fn space_side_profile() {
        let p = CutoffProfile::standard();
        assert_eq!(p.truncation_radius(), 38);
        assert_eq!(p.center_value(), &rat(151, 315));
        // w_check(0) = 1 / (p M_(2p)(0)) = 315/604.
        assert!((p.w_check(0.0) - 315.0 / 604.0).abs() < 1e-12);
        for i in 0..200 {
            let x = i as f64 * 0.21;
            assert!(p.w_check(x) >= 0.0, "space side negative at {x}");
            assert_eq!(p.w_check(x), p.w_check(-x));
            let cached = p.w_check_cached(x);
            assert!(
                (cached - p.w_check(x)).abs() < 1e-4,
                "cache off at {x}: {cached} vs {}",
                p.w_check(x)
            );
        }
        assert_eq!(p.w_check(39.0), 0.0);
    }

    #[test]
    fn poisson_normalization_links_sides() {
        // (q/L) Σ_ℓ w_check(q ℓ / L) should equal φ̂(0) = 1 up to the
        // truncation tail; q = 1, L = 3/2.
        let p = CutoffProfile::standard();
        let l = 1.5f64;
        let bound = (p.truncation_radius() as f64 * l) as i64;
        let mut sum = 0.0;
        for ell in -bound..=bound {
            sum += p.w_check(ell as f64 / l);
        }
        sum /= l;
        assert!((sum - 1.0).abs() < 1e-9, "Poisson sum {sum}");
    }

    #[test]
    fn cutoff_scale_contract() {
        let p = CutoffProfile::standard();
        assert!(LatticeCutoff::new(BigInt::from(2), rat(3, 1), 1, &p).is_err());
        assert!(LatticeCutoff::new(BigInt::from(2), rat(4, 1), 1, &p).is_ok());
        assert!(LatticeCutoff::new(BigInt::from(0), rat(4, 1), 1, &p).is_err());
    }

    #[test]
    fn space_side_lattice_support() {
        let p = CutoffProfile::standard();
        let cut = LatticeCutoff::new(BigInt::from(2), rat(8, 1), 2, &p).unwrap();
        assert_eq!(cut.phi(&[1, 4]).unwrap(), 0.0);
        assert_eq!(cut.phi(&[2, 2]).unwrap(), 0.0);
        let v = cut.phi(&[0, 0]).unwrap();
        // (q/L)^3 w_check(0)^2 = (1/64)(315/604)^2.
        let expect = (1.0 / 64.0) * (315.0 / 604.0) * (315.0 / 604.0);
        assert!((v - expect).abs() < 1e-12, "{v} vs {expect}");
        assert!(cut.phi(&[2, 4]).unwrap() > 0.0);
        // Beyond the truncation radius the sample is zero.
        let far = 2 * (38 * 8 + 2);
        assert_eq!(cut.phi(&[far, 0]).unwrap(), 0.0);
    }

    #[test]
    fn frequency_side_normalization_and_support() {
        let p = CutoffProfile::standard();
        let cut = LatticeCutoff::new(BigInt::from(2), rat(8, 1), 2, &p).unwrap();
        let zero = TorusPoint::zero(2);
        assert_eq!(cut.phi_hat(&zero).unwrap(), rat(1, 1));
        // On the box boundary the bump vanishes exactly.
        let edge = TorusPoint::new(alloc::vec![rat(1, 8), rat(0, 1)]).unwrap();
        assert_eq!(cut.phi_hat(&edge).unwrap(), rat(0, 1));
        // Strictly inside: positive.
        let inside = TorusPoint::new(alloc::vec![rat(1, 16), rat(1, 128)]).unwrap();
        assert!(cut.phi_hat(&inside).unwrap() > rat(0, 1));
        // Off every box on axis 1: exactly zero.
        let off = TorusPoint::new(alloc::vec![rat(1, 4), rat(0, 1)]).unwrap();
        assert_eq!(cut.phi_hat(&off).unwrap(), rat(0, 1));
    }

    #[test]
    fn frequency_side_zero_off_boxes_random() {
        let p = CutoffProfile::standard();
        let q = BigInt::from(12);
        let cut = LatticeCutoff::new(q.clone(), rat(25, 1), 2, &p).unwrap();
        let fam = crate::arcs::BoxFamily::new(q, rat(25, 1), 2).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let mut checked = 0;
        while checked < 200 {
            let coords: Vec<Rat> = (0..2)
                .map(|_| {
                    Rat::new(
                        BigInt::from(rng.next_u64() & ((1 << 30) - 1)),
                        BigInt::from(1u64 << 30),
                    )
                })
                .collect();
            let alpha = TorusPoint::new(coords).unwrap();
            if crate::arcs::in_major_box(&alpha, &fam) {
                continue;
            }
            assert!(cut.phi_hat(&alpha).unwrap().is_zero());
            checked += 1;
        }
    }

    #[test]
    fn frequency_side_within_unit_interval() {
        let p = CutoffProfile::standard();
        let cut = LatticeCutoff::new(BigInt::from(3), rat(13, 2), 1, &p).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        for _ in 0..300 {
            let alpha = TorusPoint::new(alloc::vec![Rat::new(
                BigInt::from(rng.next_u64() & ((1 << 24) - 1)),
                BigInt::from(1u64 << 24),
            )])
            .unwrap();
            let v = cut.phi_hat(&alpha).unwrap();
            assert!(v >= rat(0, 1) && v <= rat(1, 1), "φ̂ = {v} out of range");
        }
    }

    #[test]
    fn shear_identity_in_dimension_one() {
        let p = CutoffProfile::standard();
        let cut = LatticeCutoff::new(BigInt::from(2), rat(8, 1), 1, &p)
            .unwrap()
            .with_shear(BigInt::from(7))
            .unwrap();
        let plain = LatticeCutoff::new(BigInt::from(2), rat(8, 1), 1, &p).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let alpha = TorusPoint::new(alloc::vec![Rat::new(
                BigInt::from(rng.next_u64() & ((1 << 16) - 1)),
                BigInt::from(1u64 << 16),
            )])
            .unwrap();
            assert_eq!(cut.psi_hat(&alpha).unwrap(), plain.phi_hat(&alpha).unwrap());
        }
    }

    #[test]
    fn sheared_frequency_side_is_pulled_back() {
        let p = CutoffProfile::standard();
        let lambda = BigInt::from(3);
        let cut = LatticeCutoff::new(BigInt::from(2), rat(8, 1), 2, &p)
            .unwrap()
            .with_shear(lambda.clone())
            .unwrap();
        let plain = LatticeCutoff::new(BigInt::from(2), rat(8, 1), 2, &p).unwrap();
        let t = t_lambda(2, &lambda).unwrap();
        let alpha = TorusPoint::new(alloc::vec![rat(1, 32), rat(1, 100)]).unwrap();
        assert_eq!(
            cut.psi_hat(&alpha).unwrap(),
            plain.phi_hat(&t.apply(&alpha).unwrap()).unwrap()
        );
        // At the origin the shear is invisible.
        assert_eq!(cut.psi_hat(&TorusPoint::zero(2)).unwrap(), rat(1, 1));
    }

    #[test]
    fn sheared_space_side_support() {
        let p = CutoffProfile::standard();
        let lambda = BigInt::from(2);
        let cut = LatticeCutoff::new(BigInt::from(2), rat(8, 1), 2, &p)
            .unwrap()
            .with_shear(lambda.clone())
            .unwrap();
        let plain = LatticeCutoff::new(BigInt::from(2), rat(8, 1), 2, &p).unwrap();
        // m = Tᵀ x for the lattice point x = (2, 4): with k = 2, λ = 2,
        // Tᵀ = [[1, 0], [2λ, 1]], so m = (2, 2λ·2 + 4) = (2, 12).
        let psi_val = cut.psi(&[2, 12]).unwrap();
        let phi_val = plain.phi(&[2, 4]).unwrap();
        assert!((psi_val - phi_val).abs() < 1e-15);
        assert!(psi_val > 0.0);
        // Off the sheared image: preimage of (2, 4) is (2, 4 - 8) = (2, -4),
        // on-lattice, so nonzero; but (1, 0) has off-lattice preimage.
        assert_eq!(cut.psi(&[1, 0]).unwrap(), 0.0);
    }

    #[test]
    fn lambda_count_interval_examples() {
        let ten = WeightedFunction::from_indicator(&GridSet::full(1, 10).unwrap());
        let g = ten.cube();
        let v = lambda_count(g, g, 1, 0, 2).unwrap();
        assert!((v - 8.5).abs() < 1e-12);
        let v = lambda_count(g, g, 2, 0, 4).unwrap();
        assert!((v - 7.0).abs() < 1e-12);
        let zero = CubeValues::zeros(1, 10).unwrap();
        assert_eq!(lambda_count(g, &zero, 1, 0, 2).unwrap(), 0.0);
    }

    #[test]
    fn lambda_count_out_of_reach_shifts_vanish() {
        let f = WeightedFunction::from_indicator(&GridSet::full(2, 8).unwrap());
        // n = 3 has γ = (3, 9), beyond the side-8 cube on axis 2.
        let v = lambda_count(f.cube(), f.cube(), 1, 2, 1).unwrap();
        assert_eq!(v, 0.0);
        // n = 2 reaches: (8-2)(8-4) = 24.
        let v = lambda_count(f.cube(), f.cube(), 1, 1, 1).unwrap();
        assert!((v - 24.0).abs() < 1e-12);
    }

    #[test]
    fn decompose_zero_function() {
        let f = WeightedFunction::from_values(1, 16, alloc::vec![0.0; 16]).unwrap();
        let p = CutoffProfile::standard();
        let (f1, f2, f3) =
            decompose(&f, &BigInt::from(1), &rat(4, 1), &rat(2, 1), &BigInt::from(2), &p).unwrap();
        assert!(f1.values().iter().all(|&v| v == 0.0));
        assert!(f2.values().iter().all(|&v| v == 0.0));
        assert!(f3.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn decompose_pointwise_identity() {
        let f = uniform_cube(2, 32, 17);
        let p = CutoffProfile::standard();
        let (f1, f2, f3) = decompose(
            &f,
            &BigInt::from(2),
            &rat(12, 1),
            &rat(4, 1),
            &BigInt::from(4),
            &p,
        )
        .unwrap();
        for i in 0..f.cube().values().len() {
            let sum = f1.values()[i] + f2.values()[i] + f3.values()[i];
            assert!(
                (sum - f.cube().values()[i]).abs() <= 1e-10,
                "identity fails at {i}: {sum} vs {}",
                f.cube().values()[i]
            );
        }
    }

    #[test]
    fn coarse_average_of_constant_is_constant_in_interior() {
        let m = 256u64;
        let f = WeightedFunction::from_values(1, m, alloc::vec![0.5; m as usize]).unwrap();
        let p = CutoffProfile::standard();
        let cut = LatticeCutoff::new(BigInt::from(1), rat(2, 1), 1, &p)
            .unwrap()
            .with_shear(BigInt::from(1))
            .unwrap();
        let f1 = smooth_convolve(f.cube(), &cut).unwrap();
        // Truncation reach is 38·2 = 76; the center is deeper than that.
        let center = f1.get(&[128]);
        assert!(
            (center - 0.5).abs() <= 1e-9,
            "interior average {center} should be 0.5"
        );
        // Near the boundary mass leaks out, so the average drops.
        assert!(f1.get(&[1]) < 0.5);
    }

    #[test]
    fn splitting_identity_on_random_instances() {
        let p = CutoffProfile::standard();
        for seed in [1u64, 8, 23] {
            let f = uniform_cube(2, 16, seed);
            let (f1, f2, f3) = decompose(
                &f,
                &BigInt::from(2),
                &rat(12, 1),
                &rat(4, 1),
                &BigInt::from(4),
                &p,
            )
            .unwrap();
            let q = 2u64;
            let (lam, mu) = (4u64, 4u64);
            let whole = lambda_count(f.cube(), f.cube(), q, lam, mu).unwrap();
            let parts = lambda_count(&f1, &f1, q, lam, mu).unwrap()
                + lambda_count(&f2, &f1, q, lam, mu).unwrap()
                + lambda_count(f.cube(), &f2, q, lam, mu).unwrap()
                + lambda_count(&f3, &f1, q, lam, mu).unwrap()
                + lambda_count(f.cube(), &f3, q, lam, mu).unwrap();
            let scale = whole.abs().max(1.0);
            assert!(
                (whole - parts).abs() <= 1e-8 * scale,
                "seed {seed}: Λ(f,f) = {whole} vs split {parts}"
            );
        }
    }

    #[test]
    fn domination_by_damped_spectrum() {
        let p = CutoffProfile::standard();
        let f = uniform_cube(2, 8, 4);
        let q = BigInt::from(2);
        let (l1, l2) = (rat(12, 1), rat(4, 1));
        let shear = BigInt::from(4);
        let (f1, _f2, f3) = decompose(&f, &q, &l1, &l2, &shear, &p).unwrap();
        let cut1 = LatticeCutoff::new(q.clone(), l1, 2, &p)
            .unwrap()
            .with_shear(shear.clone())
            .unwrap();
        let cut2 = LatticeCutoff::new(q.clone(), l2, 2, &p)
            .unwrap()
            .with_shear(shear.clone())
            .unwrap();
        let bound = spectral_damping_quadrature(f.cube(), &cut2, &cut1, &[64, 256]).unwrap()
            + 1e-6 * 64.0;
        let (lam, mu) = (4u64, 4u64);
        let a = lambda_count(&f3, &f1, 2, lam, mu).unwrap().abs();
        let b = lambda_count(f.cube(), &f3, 2, lam, mu).unwrap().abs();
        assert!(a <= bound, "Λ(f3, f1) = {a} exceeds bound {bound}");
        assert!(b <= bound, "Λ(f, f3) = {b} exceeds bound {bound}");
    }

    #[test]
    fn near_invariance_of_coarse_average() {
        // k = 1, q = 2, η = 1/2, L1 = 16: shifts n ∈ {2, 4, ..., 16} with
        // q | n and n <= 2 η L1 = 16 move f1 by at most K·η.
        let p = CutoffProfile::standard();
        let f = uniform_cube(1, 64, 12);
        let cut = LatticeCutoff::new(BigInt::from(2), rat(16, 1), 1, &p)
            .unwrap()
            .with_shear(BigInt::from(8))
            .unwrap();
        let f1 = smooth_convolve(f.cube(), &cut).unwrap();
        let eta = 0.5f64;
        let mut max_ratio = 0.0f64;
        let mut n = 2;
        while n <= 16 {
            let dev = max_shift_deviation(&f1, &[n]);
            let ratio = dev / eta;
            if ratio > max_ratio {
                max_ratio = ratio;
            }
            n += 2;
        }
        // Frozen regression cap for K from the first run of this instance
        // (observed 0.9525; the n = 16 shift is a full coarse-scale step).
        assert!(
            max_ratio <= 0.96,
            "near-invariance constant drifted: K = {max_ratio}"
        );
    }

    #[test]
    fn wholepoint_diagnostic_regression() {
        let p = CutoffProfile::standard();
        let cut = LatticeCutoff::new(BigInt::from(2), rat(8, 1), 1, &p)
            .unwrap()
            .with_shear(BigInt::from(16))
            .unwrap();
        let sup = wholepoint_sup(&cut, 16, 16, 2, 200, 1).unwrap();
        assert!(sup <= 1.0 + 1e-9, "sampled sup {sup} above trivial bound");
        // Frozen window from the first run of this instance (observed
        // 0.33202; the run is seeded and deterministic).
        assert!(
            sup > 0.30 && sup < 0.35,
            "diagnostic drifted from frozen window: {sup}"
        );
    }

    #[test]
    fn eta_helper_examples() {
        // ε = 1/4, C = 1: exp(-4 ln 4) = 4^(-4) = 1/256.
        let eta = eta_epsilon(&rat(1, 4), &rat(1, 1)).unwrap();
        assert!((rat_to_f64(&eta) - 1.0 / 256.0).abs() < 1e-9);
        let eta = eta_epsilon(&rat(1, 4), &rat(2, 1)).unwrap();
        assert!((rat_to_f64(&eta) - libm::pow(4.0, -8.0)).abs() < 1e-12);
        assert!(eta_epsilon(&rat(1, 1), &rat(1, 1)).is_err());
        // Extreme ε underflows and reports a resource error.
        assert!(matches!(
            eta_epsilon(&rat(1, 1000), &rat(10, 1)),
            Err(Error::Resource(_))
        ));
    }

    #[test]
    fn lacunary_search_reports_steps() {
        let etas = alloc::vec![rat(1, 2), rat(1, 3), rat(1, 5)];
        // μ large enough that every scale satisfies L = η μ >= 2 q_η.
        let report = lacunary_cutoff_search(
            &etas,
            1,
            &BigInt::from(1200),
            None,
            2.0,
            60,
            7,
        )
        .unwrap();
        assert_eq!(report.steps.len(), 2);
        assert_eq!(report.chosen, Some(0));
        for step in &report.steps {
            assert!(step.sup_difference >= 0.0 && step.sup_difference <= 1.0 + 1e-9);
        }
        // Strictly increasing sequences are rejected.
        assert!(lacunary_cutoff_search(
            &alloc::vec![rat(1, 3), rat(1, 2)],
            1,
            &BigInt::from(1200),
            None,
            2.0,
            10,
            7
        )
        .is_err());
    }

    #[test]
    fn dichotomy_full_cube_branch1() {
        let b = GridSet::full(1, 64).unwrap();
        let report = dichotomy_report(&b, &rat(1, 2), 8, 8, &rat(1, 2)).unwrap();
        // Every n in (8, 16] keeps 64 - n >= 48 > (1 - ε)·64 = 32.
        assert_eq!(report.branch1.count, 8);
        assert!(report.branch1.holds);
        // The transform spike at 0 sits inside the inner (removed) boxes,
        // so the annulus holds almost nothing.
        assert!(
            report.branch2.mass < report.branch2.threshold,
            "mass {} vs threshold {}",
            report.branch2.mass,
            report.branch2.threshold
        );
        assert!(!report.branch2.holds);
    }

    #[test]
    fn dichotomy_structured_set_branch1() {
        let members: Vec<Vec<i64>> = (1..=128).map(|i| alloc::vec![2 * i]).collect();
        let b = GridSet::from_members(1, 256, &members).unwrap();
        let report = dichotomy_report(&b, &rat(1, 20), 12, 8, &rat(1, 2)).unwrap();
        // Even shifts n ∈ {14, 16, 18, 20} overlap in ≈ 121 points, far
        // above (δ^2 - ε) M = 51.2; the four odd shifts give zero.
        assert_eq!(report.branch1.count, 4);
        assert!(report.branch1.holds);
    }

    #[test]
    fn dichotomy_random_instance_frozen_baseline() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2024);
        let mut members = Vec::new();
        for x in 1..=32i64 {
            for y in 1..=32i64 {
                if rng.next_u64() % 2 == 0 {
                    members.push(alloc::vec![x, y]);
                }
            }
        }
        let b = GridSet::from_members(2, 32, &members).unwrap();
        let report = dichotomy_report(&b, &rat(1, 20), 12, 9, &rat(2, 3)).unwrap();
        // γ(n) leaves the cube for every n in (12, 21], so no shift
        // qualifies at this scale; recorded, not asserted as the theorem.
        assert_eq!(report.branch1.count, 0);
        assert!(!report.branch1.holds);
        // Frozen baseline from the first run: the annulus keeps the flat
        // part of the spectrum, far above ε M^k / 10 at desk scale.
        assert!(report.branch2.holds);
        assert!(
            report.branch2.mass > 100.0 && report.branch2.mass < 600.0,
            "annulus mass {} drifted from the frozen window",
            report.branch2.mass
        );
    }

    #[test]
    fn dichotomy_degenerate_arcs_error() {
        let b = GridSet::full(2, 32).unwrap();
        assert!(matches!(
            dichotomy_report(&b, &rat(1, 20), 2, 2, &rat(1, 2)),
            Err(Error::Contract(_))
        ));
    }
}
